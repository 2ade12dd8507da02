//! Deterministic per-sample random streams and weighted phase samplers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream for sample `index` under master `seed`.
///
/// Streams do not depend on thread count or evaluation order, which is what
/// makes parallel Monte-Carlo runs bit-reproducible.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A phase point together with its importance weight.
#[derive(Debug, Clone)]
pub struct Weighted<P> {
    pub point: P,
    pub weight: f64,
}

/// Source of weighted samples for Monte-Carlo integrals over the phase space.
///
/// When `is_probability()` holds the weights are constant and averages are
/// self-normalized; otherwise `weight` is the reciprocal proposal density and
/// `mean(weight * x)` estimates the integral of `x` against the underlying
/// (infinite) measure.
pub trait PhaseSampler<P>: Send + Sync {
    fn sample(&self, seed: u64, index: u64) -> Weighted<P>;
    fn is_probability(&self) -> bool;
}
