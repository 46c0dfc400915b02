//! Fixtures shared by the benchmarks.

use num_bigint::BigInt;
use parisian_core::numerics::{rat, Frequency};
use parisian_core::{build_stages, generate_sequence, stage_measure, ConstructionParams, Measure, StageFamily};

/// The α = 1/2, N_1 = 16 sequence to `depth`.
pub fn half_params(depth: usize) -> ConstructionParams {
    generate_sequence(&rat(1, 2), &BigInt::from(16), depth).expect("valid parameters")
}

/// Stage 2 of the α = 1/2 family with its natural measure.
pub fn stage_two() -> (ConstructionParams, StageFamily, Measure) {
    let params = half_params(2);
    let family = build_stages(&params, 2).expect("buildable").pop().expect("two stages");
    let mu = stage_measure(&family).expect("nonempty");
    (params, family, mu)
}

/// `count` consecutive frequencies starting at `10^exp`.
pub fn frequencies_at(exp: u32, count: i64) -> Vec<Frequency> {
    let base = num_traits::pow(BigInt::from(10), exp as usize);
    (0..count).map(|i| Frequency(&base + i)).collect()
}
