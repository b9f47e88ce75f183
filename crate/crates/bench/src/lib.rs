//! Fixtures shared by the benchmarks in `benches/kernels.rs`.

use dexfdr_core::rng::{Stream, StreamRole};
use dexfdr_core::{ExtremeConfig, ModelSpec, PValueSample};

/// `n` i.i.d. uniform null p-values.
pub fn uniform_sample(n: usize, seed: u64) -> PValueSample {
    let mut s = Stream::new(seed, 0, StreamRole::Nulls);
    PValueSample::all_null((0..n).map(|_| s.uniform()).collect()).expect("p-values in (0, 1)")
}

/// One draw from the normal model with `n` hypotheses.
pub fn normal_sample(n: usize, zeta: f64, rho: f64, seed: u64) -> PValueSample {
    let cfg = ExtremeConfig::new(n, zeta, seed).expect("valid config");
    ModelSpec::normal(rho).expect("rho in (0, 1)").sample_pvalues(&cfg, 0).expect("valid model").0
}
