//! Cantor-type "parisian" sets on the circle `(-1, 1]`, their stage measures,
//! exact Fourier coefficients `μ̂(n) = ½∫e^{iπnx}dμ(x)` at arbitrarily large
//! frequencies, Riesz-product spectra `Ω((n_j))`, the inductive frequency
//! selection that certifies a shifted `Ω` inside `supp μ̂`, and
//! mass-distribution audits of Hausdorff-dimension lower bounds.
//!
//! All geometry is exact: points, interval endpoints, masses and phases are
//! reduced big rationals. Floating point only appears at the very end, when a
//! unit exponential or a ratio is rounded to `f64`.

pub mod audit;
pub mod construction;
pub mod error;
pub mod fourier;
pub mod measure;
pub mod numerics;
pub mod riesz;
pub mod selection;
pub mod serde_ext;
pub mod verify;

pub use error::{Error, Result};
pub use fourier::{coefficient, coefficient_oracle, coefficients_batch, FourierCoefficient};
pub use measure::{Atom, Measure, RationalInterval, Segment, UniformPart};
pub use numerics::{
    circle_distance, reduce_phase, unit_exponential, CirclePoint, Frequency, Phase, Rational,
};
pub use riesz::{omega, LacunarySequence, OmegaPoint, SignPattern};
pub use construction::{
    build_stages, generate_sequence, stage_measure, ConstructionParams, StageFamily, TruncationSet,
};
pub use selection::{select, Mode, SelectOptions, SelectionCertificate, Spectrum};
pub use audit::{audit_stage, mass_ratio_audit, reports_to_csv, DimensionReport};
