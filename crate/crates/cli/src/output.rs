use std::path::Path;

use hjb_core::stochastic::{MonteCarloEstimate, PathSet};

use crate::CliError;

/// Shortest round-trip decimal; exponent form outside `[1e-5, 1e16)`.
/// Non-finite values become empty fields.
pub(crate) fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let mag = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&mag) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes a header row and the given rows to `dir/file`.
pub(crate) fn write_csv<I>(dir: &Path, file: &str, header: &[String], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let path = dir.join(file);
    let err = |source| CliError::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.clone(), source })
}

pub(crate) fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub(crate) fn estimates_header() -> Vec<String> {
    header(&["name", "mean", "std_error", "n"])
}

pub(crate) fn estimate_row(name: &str, e: &MonteCarloEstimate) -> Vec<String> {
    vec![name.to_string(), format_value(e.mean), format_value(e.std_error), e.n_samples.to_string()]
}

/// `t,path_id,x1..xN,regime` for the first `count` paths. Regimes are
/// written one-based; the column is empty for single-regime dynamics.
pub(crate) fn write_paths(dir: &Path, file: &str, paths: &PathSet, count: usize) -> Result<(), CliError> {
    let mut head = vec!["t".to_string(), "path_id".to_string()];
    head.extend((1..=paths.dimension).map(|d| format!("x{d}")));
    head.push("regime".to_string());
    let rows = (0..count.min(paths.n_paths)).flat_map(|p| {
        (0..paths.n_records()).map(move |k| {
            let mut row = vec![format_value(paths.times[k]), p.to_string()];
            row.extend(paths.state(p, k).iter().map(|x| format_value(*x)));
            row.push(paths.regime(p, k).map(|j| (j + 1).to_string()).unwrap_or_default());
            row
        })
    });
    write_csv(dir, file, &head, rows)
}
