//! Inductive choice of frequencies `n_1 < n_2 < …` such that every signed sum
//! `shift + Σ ε_j n_j` keeps a Fourier coefficient bounded away from zero.
//!
//! Each step takes the smallest admissible candidate: it must exceed twice
//! the sum of the previous choices (so all `3^k` sums are distinct) and its
//! perturbation bound `‖μ‖·π·2w/N^δ` must stay below half the current
//! minimum `γ`, where `w` is the window width the support satisfies. In the
//! truncated mode the measure is first cut down to the smallest `E_t`
//! carrying all but a third of `γ`, and the final bound drops to `γ/6`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{restrict_to_truncation, ConstructionParams};
use crate::error::{Error, Result};
use crate::fourier::{coefficient, coefficients_batch, is_machine_zero, norm_f64};
use crate::measure::Measure;
use crate::numerics::{ceil_power, line_grid_distance, ln_bigint, max_grid_distance, rat, Frequency, Rational};
use crate::riesz::{SignPattern, MAX_ENUMERATION_DEPTH};

/// Coefficients below `MACHINE_ZERO·‖μ‖` count as vanishing.
pub const MACHINE_ZERO: f64 = 1e-13;

/// Relative slack when checking certificate entries.
pub const VERIFICATION_TOLERANCE: f64 = 1e-9;

/// Default shift threshold, relative to `‖μ‖`.
pub const DEFAULT_SHIFT_THRESHOLD: f64 = 1e-6;

pub const DEFAULT_SHIFT_RADIUS: u64 = 64;

/// A measure seen through its Fourier coefficients.
pub trait Spectrum: Sync + Sized {
    fn measure(&self) -> &Measure;

    fn coefficient(&self, n: &Frequency) -> Complex64;

    fn coefficients(&self, ns: &[Frequency]) -> Vec<Complex64> {
        ns.par_iter().map(|n| self.coefficient(n)).collect()
    }

    /// Same view of another measure (used for restrictions).
    fn with_measure(&self, mu: Measure) -> Self;
}

impl Spectrum for Measure {
    fn measure(&self) -> &Measure {
        self
    }

    fn coefficient(&self, n: &Frequency) -> Complex64 {
        coefficient(self, n).value
    }

    fn coefficients(&self, ns: &[Frequency]) -> Vec<Complex64> {
        coefficients_batch(self, ns).into_iter().map(|c| c.value).collect()
    }

    fn with_measure(&self, mu: Measure) -> Self {
        mu
    }
}

/// `e^{iπ·shift·x} dμ(x)`, whose coefficients are `μ̂(n + shift)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulated {
    pub measure: Measure,
    pub shift: Frequency,
}

impl Spectrum for Modulated {
    fn measure(&self) -> &Measure {
        &self.measure
    }

    fn coefficient(&self, n: &Frequency) -> Complex64 {
        coefficient(&self.measure, &(n + &self.shift)).value
    }

    fn with_measure(&self, mu: Measure) -> Self {
        Self {
            measure: mu,
            shift: self.shift.clone(),
        }
    }
}

/// `lemma1`: plain selection with window ½. `lemma2`: each step works on a
/// truncation set `E_t` and keeps γ/6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "lemma1")]
    Plain,
    #[serde(rename = "lemma2")]
    Truncated,
}

impl Mode {
    /// Final bound is `γ_{K−1}` divided by this.
    pub fn divisor(self) -> f64 {
        match self {
            Mode::Plain => 2.0,
            Mode::Truncated => 6.0,
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma1" => Ok(Mode::Plain),
            "lemma2" => Ok(Mode::Truncated),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "lemma1",
            Mode::Truncated => "lemma2",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionState {
    pub chosen: Vec<Frequency>,
    pub gamma: f64,
    pub shift: Frequency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub eps: Vec<i8>,
    pub freq: Frequency,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionCertificate {
    pub mode: Mode,
    pub shift: Frequency,
    pub frequencies: Vec<Frequency>,
    pub gamma_chain: Vec<f64>,
    /// Integer `t_k` of each truncated step.
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "crate::serde_ext::bigint_vec")]
    pub truncation_levels: Vec<BigInt>,
    pub lower_bound: f64,
    pub table: Vec<TableEntry>,
}

impl SelectionCertificate {
    /// Table as CSV: `eps_1..eps_K,freq,re,im,abs`.
    pub fn table_csv(&self) -> Result<String> {
        let k = self.frequencies.len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=k).map(|j| format!("eps_{j}")).collect();
        header.extend(["freq", "re", "im", "abs"].map(String::from));
        w.write_record(&header)?;
        for e in &self.table {
            let mut row: Vec<String> = e.eps.iter().map(|x| x.to_string()).collect();
            row.extend([e.freq.to_string(), e.re.to_string(), e.im.to_string(), e.abs.to_string()]);
            w.write_record(&row)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectOptions {
    pub shift_radius: u64,
    /// Absolute threshold; `None` means `DEFAULT_SHIFT_THRESHOLD·‖μ‖`.
    pub shift_threshold: Option<f64>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            shift_radius: DEFAULT_SHIFT_RADIUS,
            shift_threshold: None,
        }
    }
}

/// Smallest `|n| ≤ radius` (0, 1, −1, 2, −2, …) with `|μ̂(n)| ≥ threshold`.
pub fn shift_to_nonzero<S: Spectrum>(source: &S, radius: u64, threshold: Option<f64>) -> Result<Frequency> {
    let norm = norm_f64(source.measure());
    if norm == 0.0 {
        return Err(Error::ShiftSearchFailed(radius));
    }
    let threshold = threshold.unwrap_or(DEFAULT_SHIFT_THRESHOLD * norm);
    for r in 0..=radius {
        let signs: &[i64] = if r == 0 { &[1] } else { &[1, -1] };
        for s in signs {
            let n = Frequency::new(BigInt::from(r) * s);
            if source.coefficient(&n).norm() >= threshold {
                return Ok(n);
            }
        }
    }
    Err(Error::ShiftSearchFailed(radius))
}

fn table_frequencies(shift: &Frequency, chosen: &[Frequency]) -> Result<(Vec<SignPattern>, Vec<Frequency>)> {
    if chosen.len() > MAX_ENUMERATION_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "at most {MAX_ENUMERATION_DEPTH} frequencies can be enumerated"
        )));
    }
    let terms: Vec<BigInt> = chosen.iter().map(|f| f.0.clone()).collect();
    let patterns: Vec<SignPattern> = SignPattern::all(chosen.len()).collect();
    let freqs = patterns.iter().map(|p| Frequency(&shift.0 + p.apply(&terms))).collect();
    Ok((patterns, freqs))
}

fn evaluate_table<S: Spectrum>(source: &S, shift: &Frequency, chosen: &[Frequency]) -> Result<Vec<TableEntry>> {
    let (patterns, freqs) = table_frequencies(shift, chosen)?;
    let values = source.coefficients(&freqs);
    Ok(patterns
        .into_iter()
        .zip(freqs)
        .zip(values)
        .map(|((p, freq), v)| TableEntry {
            eps: p.eps().to_vec(),
            freq,
            re: v.re,
            im: v.im,
            abs: v.norm(),
        })
        .collect())
}

fn table_minimum(source: &Measure, table: &[TableEntry]) -> Result<f64> {
    let mut gamma = f64::INFINITY;
    for e in table {
        if is_machine_zero(Complex64::new(e.re, e.im), source, MACHINE_ZERO) {
            return Err(Error::VanishingCoefficient(e.freq.to_string()));
        }
        gamma = gamma.min(e.abs);
    }
    Ok(gamma)
}

/// `min_ε |μ̂(shift + Σ ε_j n_j)|` over all `3^k` sign patterns.
pub fn min_coefficient<S: Spectrum>(source: &S, shift: &Frequency, chosen: &[Frequency]) -> Result<f64> {
    let table = evaluate_table(source, shift, chosen)?;
    table_minimum(source.measure(), &table)
}

/// `max_{x ∈ supp μ} dist(x, 2Z/N)·⌈N^{1+δ}⌉`, exactly.
pub fn window_level(mu: &Measure, n: &BigInt, delta: &Rational) -> Rational {
    let l = Rational::from_integer(ceil_power(n, delta));
    let uniform = mu
        .support_segments()
        .into_iter()
        .map(|s| max_grid_distance(&s.lo, &s.hi, n));
    let atoms = mu.atoms().iter().map(|a| line_grid_distance(a.point.value(), n));
    uniform.chain(atoms).max().unwrap_or_else(Rational::zero) * l
}

/// Smallest candidate beyond `2Σ chosen` whose perturbation bound
/// `‖μ‖·π·2w/N^δ` is below `γ/2`. The window `w` must hold for the support
/// of `source` at every examined candidate.
pub fn next_frequency<S: Spectrum>(
    source: &S,
    state: &SelectionState,
    candidates: &[Frequency],
    delta: &Rational,
    window: &Rational,
) -> Result<Frequency> {
    if !delta.is_positive() {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) || candidates.first().is_some_and(|c| !c.0.is_positive()) {
        return Err(Error::InvalidArgument("candidates must be positive and strictly increasing".into()));
    }
    let sum: BigInt = state.chosen.iter().map(|f| &f.0).sum();
    let floor = state.chosen.iter().map(|f| f.0.clone()).fold(&sum * 2, |a: BigInt, b| a.max(b));
    let norm = norm_f64(source.measure());
    let w = window.to_f64().unwrap_or(f64::INFINITY);
    let ln_lhs = (norm * PI * 2.0 * w).ln();
    let d = delta.to_f64().expect("small rational");
    let ln_gamma = (state.gamma / 2.0).ln();
    for c in candidates.iter().filter(|c| c.0 > floor) {
        // ln(‖μ‖π2w) < ln(γ/2) + δ ln N, with a margin against rounding.
        let admissible = ln_lhs < ln_gamma + d * ln_bigint(&c.0) - 1e-12;
        if !admissible {
            continue;
        }
        let level = window_level(source.measure(), &c.0, delta);
        if &level > window {
            return Err(Error::WindowViolated(format!(
                "support sits {} grid widths from 2Z/{}, above {window}",
                level, c
            )));
        }
        return Ok(c.clone());
    }
    Err(Error::NoAdmissibleCandidate)
}

/// Least integer `t` with `‖μ − μ|E_t‖ < γ/3`.
pub fn truncation_radius(mu: &Measure, params: &ConstructionParams, gamma: f64) -> Result<BigInt> {
    let depth = params.depth();
    let total = mu.total_variation();
    let target = gamma / 3.0;
    let ok = |t: &BigInt| -> Result<bool> {
        let kept = restrict_to_truncation(mu, params, &Rational::from_integer(t.clone()), depth)?;
        Ok((&total - kept.total_variation()).to_f64().unwrap_or(f64::INFINITY) < target)
    };
    // Past max L_j/N_j every point is within reach of every grid.
    let cap = (1..=depth)
        .map(|j| params.l_at(j) / params.n_at(j) + 1)
        .max()
        .unwrap_or_else(BigInt::one);
    let mut hi = BigInt::one();
    while !ok(&hi)? {
        if hi > cap {
            return Err(Error::TruncationSearchFailed(format!("no t up to {hi} leaves a tail below {target}")));
        }
        hi *= 2;
    }
    let mut lo: BigInt = &hi / 2;
    if lo.is_zero() {
        return Ok(hi);
    }
    while &hi - &lo > BigInt::one() {
        let mid: BigInt = (&lo + &hi) / 2;
        if ok(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Runs the induction `depth` times and certifies the result against `source`.
pub fn select<S: Spectrum>(
    source: &S,
    candidates: &[Frequency],
    delta: &Rational,
    depth: usize,
    mode: Mode,
    truncation: Option<&ConstructionParams>,
    options: &SelectOptions,
) -> Result<SelectionCertificate> {
    let params = match (mode, truncation) {
        (Mode::Truncated, None) => {
            return Err(Error::InvalidArgument("lemma2 mode needs construction parameters".into()));
        }
        (Mode::Truncated, Some(p)) if p.delta() != delta => {
            return Err(Error::InvalidArgument("delta must match the construction parameters".into()));
        }
        (_, p) => p,
    };
    let shift = shift_to_nonzero(source, options.shift_radius, options.shift_threshold)?;
    let mut chosen: Vec<Frequency> = Vec::with_capacity(depth);
    let mut table = evaluate_table(source, &shift, &chosen)?;
    let mut chain = vec![table_minimum(source.measure(), &table)?];
    let mut levels = Vec::new();
    for _ in 0..depth {
        let gamma = *chain.last().expect("nonempty");
        let state = SelectionState {
            chosen: chosen.clone(),
            gamma,
            shift: shift.clone(),
        };
        let next = match (mode, params) {
            (Mode::Truncated, Some(p)) => {
                let t = truncation_radius(source.measure(), p, gamma)?;
                let cut = restrict_to_truncation(source.measure(), p, &Rational::from_integer(t.clone()), p.depth())?;
                let working = source.with_measure(cut);
                let n = next_frequency(&working, &state, candidates, delta, &Rational::from_integer(t.clone()))?;
                levels.push(t);
                n
            }
            _ => next_frequency(source, &state, candidates, delta, &rat(1, 2))?,
        };
        chosen.push(next);
        table = evaluate_table(source, &shift, &chosen)?;
        let bound = gamma / mode.divisor() * (1.0 - VERIFICATION_TOLERANCE);
        if let Some(bad) = table.iter().find(|e| e.abs < bound) {
            return Err(Error::VerificationFailed(format!(
                "|coefficient({})| = {} below {}",
                bad.freq, bad.abs, bound
            )));
        }
        chain.push(table_minimum(source.measure(), &table)?);
    }
    let lower_bound = if depth == 0 {
        chain[0]
    } else {
        chain[depth - 1] / mode.divisor()
    };
    Ok(SelectionCertificate {
        mode,
        shift,
        frequencies: chosen,
        gamma_chain: chain,
        truncation_levels: levels,
        lower_bound,
        table,
    })
}

/// Powers `base^1 … base^count`.
pub fn power_candidates(base: u64, count: u32) -> Vec<Frequency> {
    (1..=count).map(|j| Frequency::new(num_traits::pow(BigInt::from(base), j as usize))).collect()
}

/// Upper bound `‖μ‖·π·2w/N^δ` on `|μ̂(ω ± N) − μ̂(ω)|` for a support inside
/// the width-`w` window of `N`.
pub fn perturbation_bound(mu: &Measure, n: &BigInt, delta: &Rational, window: &Rational) -> f64 {
    let d = delta.to_f64().expect("small rational");
    norm_f64(mu) * PI * 2.0 * window.to_f64().unwrap_or(f64::INFINITY) * (-d * ln_bigint(n)).exp()
}

/// Re-enumerates the certificate's table with single evaluations and checks
/// the recorded values and the bound.
pub fn recheck_certificate<S: Spectrum>(source: &S, cert: &SelectionCertificate) -> Result<()> {
    let (_, freqs) = table_frequencies(&cert.shift, &cert.frequencies)?;
    if freqs.len() != cert.table.len() {
        return Err(Error::VerificationFailed("table size".into()));
    }
    for (f, e) in freqs.iter().zip(&cert.table) {
        let v = source.coefficient(f);
        if *f != e.freq || v.re.to_bits() != e.re.to_bits() || v.im.to_bits() != e.im.to_bits() {
            return Err(Error::VerificationFailed(format!("entry at {f} differs")));
        }
        if e.abs < cert.lower_bound * (1.0 - VERIFICATION_TOLERANCE) {
            return Err(Error::VerificationFailed(format!("entry at {f} below the bound")));
        }
    }
    let mut sorted = freqs.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    sorted.dedup();
    if sorted.len() != freqs.len() {
        return Err(Error::VerificationFailed("frequencies collide".into()));
    }
    Ok(())
}
