use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Normal sampler used for every Gaussian increment.
pub const NORMAL_SAMPLER: &str = "rand_distr::StandardNormal (ziggurat) over ChaCha8";

/// Salt separating the regime-switching streams from the diffusion streams.
const SWITCHING_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Root of all randomness in a run.
///
/// Path `i` draws its Brownian increments from ChaCha8 seeded with `seed` on
/// stream `i`, and its regime jumps from ChaCha8 seeded with
/// `seed ^ 0x9E3779B97F4A7C15` on stream `i`. A path's noise therefore
/// depends only on `(seed, i)`, not on thread scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn diffusion_stream(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }

    pub fn switching_stream(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ SWITCHING_SALT);
        rng.set_stream(path as u64);
        rng
    }
}
