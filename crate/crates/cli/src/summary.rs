use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Command;
use crate::output::format_value;
use crate::{CliError, EXIT_CHECK_FAILED, EXIT_NON_CONVERGENCE, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Failed => "failed",
        }
    }
}

/// One built-in pass/fail check with a human-readable account.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub command: Command,
    pub status: Status,
    pub exit_code: i32,
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    /// Files written, relative to the run's output directory.
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Why the run stopped early or did not converge.
    pub error: Option<String>,
    /// Per-command summaries of an `all` run.
    pub children: Vec<RunSummary>,
}

impl RunSummary {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn child(&self, command: Command) -> Option<&RunSummary> {
        self.children.iter().find(|c| c.command == command)
    }

    pub(crate) fn aggregate(children: Vec<RunSummary>) -> Self {
        let exit_code = children.iter().map(|c| c.exit_code).max().unwrap_or(EXIT_OK);
        Self {
            command: Command::All,
            status: if exit_code == EXIT_OK { Status::Ok } else { Status::Failed },
            exit_code,
            metrics: Vec::new(),
            checks: Vec::new(),
            artifacts: children.iter().map(|c| PathBuf::from(c.command.name()).join("summary.txt")).collect(),
            warnings: Vec::new(),
            error: None,
            children,
        }
    }

    /// `key=value` lines; metric names are used as keys directly.
    pub fn to_key_values(&self, seed: u64) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command.name());
        let _ = writeln!(s, "seed={seed}");
        for (name, value) in &self.metrics {
            let _ = writeln!(s, "{name}={}", format_value(*value));
        }
        for c in &self.checks {
            let _ = writeln!(s, "check.{}={}", c.name, if c.passed { "pass" } else { "fail" });
        }
        for child in &self.children {
            let _ = writeln!(s, "{}.status={}", child.command.name(), child.status.as_str());
            let _ = writeln!(s, "{}.exit_code={}", child.command.name(), child.exit_code);
        }
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning.{i}={}", one_line(w));
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact={}", a.display());
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error={}", one_line(e));
        }
        let _ = writeln!(s, "exit_code={}", self.exit_code);
        let _ = writeln!(s, "status={}", self.status.as_str());
        s
    }

    pub(crate) fn write(&self, path: &Path, seed: u64) -> Result<(), CliError> {
        std::fs::write(path, self.to_key_values(seed))
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }

    /// Console report: one line per check, then the status.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for child in &self.children {
            s.push_str(&child.render());
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "[{tag}] {} {}: {}", self.command.name(), c.name, c.detail);
        }
        for w in &self.warnings {
            let _ = writeln!(s, "[WARN] {} {}", self.command.name(), w);
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "[ERROR] {} {}", self.command.name(), e);
        }
        let _ = writeln!(s, "{}: status={} exit_code={}", self.command.name(), self.status.as_str(), self.exit_code);
        s
    }
}

fn one_line(text: &str) -> String {
    text.replace(['\n', '\r'], " ")
}

/// Collects the outcome of one command as it runs.
#[derive(Debug, Default)]
pub(crate) struct Report {
    metrics: Vec<(String, f64)>,
    checks: Vec<Check>,
    artifacts: Vec<PathBuf>,
    warnings: Vec<String>,
    non_convergence: Vec<String>,
}

impl Report {
    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn artifact(&mut self, file: impl Into<PathBuf>) {
        self.artifacts.push(file.into());
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Records a solve that ran out of iterations without raising an error.
    pub fn not_converged(&mut self, message: impl Into<String>) {
        self.non_convergence.push(message.into());
    }

    pub fn finish(self, command: Command, error: Option<(String, i32)>) -> RunSummary {
        let checks_failed = self.checks.iter().any(|c| !c.passed);
        let (exit_code, error) = match error {
            Some((msg, code)) => (code, Some(msg)),
            None if !self.non_convergence.is_empty() => (EXIT_NON_CONVERGENCE, Some(self.non_convergence.join("; "))),
            None if checks_failed => (EXIT_CHECK_FAILED, None),
            None => (EXIT_OK, None),
        };
        RunSummary {
            command,
            status: if exit_code == EXIT_OK { Status::Ok } else { Status::Failed },
            exit_code,
            metrics: self.metrics,
            checks: self.checks,
            artifacts: self.artifacts,
            warnings: self.warnings,
            error,
            children: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_precedence() {
        let mut r = Report::default();
        r.check("a", false, "");
        assert_eq!(r.finish(Command::Exact, None).exit_code, EXIT_CHECK_FAILED);
        let mut r = Report::default();
        r.check("a", false, "");
        r.not_converged("stalled");
        let s = r.finish(Command::Grid2d, None);
        assert_eq!((s.exit_code, s.status), (EXIT_NON_CONVERGENCE, Status::Failed));
        let s = Report::default().finish(Command::Exact, None);
        assert_eq!((s.exit_code, s.status), (EXIT_OK, Status::Ok));
    }

    #[test]
    fn key_value_lines_end_with_status() {
        let mut r = Report::default();
        r.metric("A", 0.5);
        r.check("residual", true, "ok");
        let text = r.finish(Command::Exact, None).to_key_values(3);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "command=exact");
        assert!(lines.contains(&"A=0.5"));
        assert!(lines.contains(&"check.residual=pass"));
        assert_eq!(*lines.last().unwrap(), "status=ok");
        assert!(lines.iter().all(|l| l.contains('=')));
    }
}
