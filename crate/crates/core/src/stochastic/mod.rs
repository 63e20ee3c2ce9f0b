//! Distributions, the waste-generation process and reproducible random streams.

mod distribution;
mod gbm;
mod stream;

pub use distribution::{
    lognormal_from_natural_moments, ClampRange, Distribution, DistributionSpec, Draw,
};
pub use gbm::gbm_path;
pub use stream::{derive_stream, RandomStream, StreamRng};

/// Draws once from `spec` using the stream's first channel.
pub fn sample(spec: &DistributionSpec, stream: RandomStream) -> Draw {
    spec.sample(&mut stream.rng())
}
