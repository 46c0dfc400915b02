//! Mass-distribution audit of stage measures and box counting of stage
//! families.
//!
//! An interval `I` with `1/N_k ≤ |I| < 1/N_{k−1}` should carry at most
//! `c_{k,s}|I|^s` where `c_{k,s} = N_1·4^k·(Π_{j<k} N_j)^δ·|I|^{1−s}`. The
//! comparison `μ(I) ≤ c_{k,s}|I|^s` does not depend on `s` and is decided in
//! exact arithmetic; the reported ratios are floats rounded toward the safe
//! side (ratios down, constants up).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{ConstructionParams, StageFamily};
use crate::error::{Error, Result};
use crate::measure::{Measure, RationalInterval, Segment};
use crate::numerics::{int, ln_bigint, ln_rational, Rational};

/// Relative widening applied to float reports.
const ROUNDING_SLACK: f64 = 1e-12;

fn round_up(x: f64) -> f64 {
    x * (1.0 + ROUNDING_SLACK)
}

fn round_down(x: f64) -> f64 {
    x * (1.0 - ROUNDING_SLACK)
}

/// Stage `k` with `1/N_k ≤ len < 1/N_{k−1}` (`k = 1` has no upper end), or
/// `None` below `1/N_depth`.
pub fn bracket(params: &ConstructionParams, len: &Rational) -> Option<usize> {
    (1..=params.depth()).find(|&k| len * Rational::from_integer(params.n_at(k).clone()) >= Rational::one())
}

fn check_bracket(params: &ConstructionParams, k: usize, len: &Rational) -> Result<()> {
    if k == 0 || k > params.depth() || bracket(params, len) != Some(k) {
        return Err(Error::ScaleOutsideBracket {
            scale: len.to_string(),
            k,
        });
    }
    Ok(())
}

fn ln_prefix(params: &ConstructionParams, k: usize) -> f64 {
    let delta = params.delta().to_f64().expect("small rational");
    ln_bigint(params.n_at(1))
        + k as f64 * 4f64.ln()
        + delta * (1..k).map(|j| ln_bigint(params.n_at(j))).sum::<f64>()
}

/// `N_1·4^k·(Π_{j<k} N_j)^δ·|I|^{1−s}`, rounded up.
pub fn theoretical_constant(params: &ConstructionParams, k: usize, s: &Rational, len: &Rational) -> Result<f64> {
    check_bracket(params, k, len)?;
    let one_minus_s = (Rational::one() - s).to_f64().expect("small rational");
    Ok(round_up((ln_prefix(params, k) + one_minus_s * ln_rational(len)).exp()))
}

/// `c_{k,s}` at the bottom of its bracket, `|I| = 1/N_k`.
pub fn stage_constant(params: &ConstructionParams, k: usize, s: &Rational) -> Result<f64> {
    theoretical_constant(params, k, s, &Rational::new(BigInt::one(), params.n_at(k).clone()))
}

/// `μ(I) ≤ N_1·4^k·(Π_{j<k} N_j)^δ·|I|`, exactly.
pub fn bound_holds(params: &ConstructionParams, k: usize, mass: &Rational, len: &Rational) -> bool {
    if !mass.is_positive() {
        return true;
    }
    let (p, q) = params.delta_parts();
    let scale = Rational::from_integer(params.n_at(1) * num_traits::pow(BigInt::from(4), k)) * len;
    let r = mass / scale;
    let prod: BigInt = (1..k).map(|j| params.n_at(j)).product();
    num_traits::pow(r.numer().clone(), q as usize)
        <= num_traits::pow(prod, p as usize) * num_traits::pow(r.denom().clone(), q as usize)
}

/// Sorted, non-wrapping pieces of a measure for fast interval masses.
struct MassIndex {
    pieces: Vec<(Segment, Rational)>,
    atoms: Vec<(Rational, Rational)>,
}

impl MassIndex {
    fn new(mu: &Measure) -> Self {
        let mut pieces: Vec<(Segment, Rational)> = mu
            .uniform()
            .iter()
            .flat_map(|u| {
                let density = &u.weight / u.interval.length();
                u.interval.segments().into_iter().map(move |s| (s, density.clone()))
            })
            .collect();
        pieces.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));
        let mut atoms: Vec<(Rational, Rational)> = mu.atoms().iter().map(|a| (a.point.value().clone(), a.mass.clone())).collect();
        atoms.sort();
        Self { pieces, atoms }
    }

    fn mass(&self, segs: &[Segment]) -> Rational {
        let mut total = Rational::zero();
        for s in segs {
            // Pieces have disjoint interiors, so their right ends are sorted too.
            let start = self.pieces.partition_point(|(p, _)| p.hi < s.lo);
            for (p, d) in &self.pieces[start..] {
                if p.lo > s.hi {
                    break;
                }
                let o = p.overlap(s);
                if !o.is_zero() {
                    total += o * d;
                }
            }
        }
        let mut hit = BTreeSet::new();
        for s in segs {
            let start = self.atoms.partition_point(|(x, _)| x < &s.lo);
            for (i, (x, _)) in self.atoms.iter().enumerate().skip(start) {
                if x > &s.hi {
                    break;
                }
                hit.insert(i);
            }
            if s.lo == -Rational::one() {
                if let Some(i) = self.atoms.iter().position(|(x, _)| x == &Rational::one()) {
                    hit.insert(i);
                }
            }
        }
        hit.into_iter().fold(total, |acc, i| acc + &self.atoms[i].1)
    }

    /// Line positions where the mass profile can change slope.
    fn breakpoints(&self) -> Vec<Rational> {
        let mut pts: Vec<Rational> = self
            .pieces
            .iter()
            .flat_map(|(s, _)| [s.lo.clone(), s.hi.clone()])
            .chain(self.atoms.iter().map(|(x, _)| x.clone()))
            .collect();
        pts.sort();
        pts.dedup();
        pts
    }
}

/// Indices of the length-`len` boxes `[−1 + i·len, −1 + (i+1)·len)` met by a
/// closed segment, as an inclusive range (the box past the end wraps to 0).
fn box_range(s: &Segment, len: &Rational, boxes: &BigInt) -> (BigInt, BigInt) {
    let one = Rational::one();
    let lo = ((&s.lo + &one) / len).floor().to_integer();
    let hi = ((&s.hi + &one) / len).floor().to_integer();
    (lo.min(boxes - 1), hi)
}

fn box_total(len: &Rational) -> BigInt {
    (int(2) / len).ceil().to_integer()
}

/// Merged count of box ranges, taken modulo the number of boxes.
fn count_ranges(mut ranges: Vec<(BigInt, BigInt)>, boxes: &BigInt) -> BigInt {
    let mut wrapped = Vec::new();
    for r in &mut ranges {
        if &r.1 >= boxes {
            wrapped.push((BigInt::zero(), &r.1 - boxes));
            r.1 = boxes - 1;
        }
    }
    ranges.extend(wrapped);
    ranges.sort();
    let mut total = BigInt::zero();
    let mut cur: Option<(BigInt, BigInt)> = None;
    for (lo, hi) in ranges {
        match &mut cur {
            Some((_, chi)) if lo <= &*chi + 1 => {
                if hi > *chi {
                    *chi = hi;
                }
            }
            _ => {
                if let Some((a, b)) = cur.take() {
                    total += b - a + 1;
                }
                cur = Some((lo, hi));
            }
        }
    }
    if let Some((a, b)) = cur {
        total += b - a + 1;
    }
    total
}

/// Number of boxes of side `scale` (starting at −1) meeting the family.
pub fn box_count(family: &StageFamily, scale: &Rational) -> Result<BigInt> {
    if !scale.is_positive() {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let boxes = box_total(scale);
    let ranges = family.segments().iter().map(|s| box_range(s, scale, &boxes)).collect();
    Ok(count_ranges(ranges, &boxes))
}

/// `ln(box_count at 1/L_k) / ln(2L_k)`: the share of the `2L_k` boxes
/// tiling the circle that the family meets, on a log scale.
pub fn dimension_estimate(family: &StageFamily) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let scale = &family.half_length * int(2);
    let count = box_count(family, &scale)?;
    Ok(ln_bigint(&count) / ln_bigint(&box_total(&scale)))
}

/// Number of family intervals meeting `interval`.
pub fn count_meeting(family: &StageFamily, interval: &RationalInterval) -> usize {
    let probe = interval.segments();
    family
        .intervals
        .iter()
        .filter(|iv| iv.segments().iter().any(|a| probe.iter().any(|b| a.intersect(b).is_some())))
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleRow {
    #[serde(with = "crate::serde_ext::rational")]
    pub scale: Rational,
    pub bracket: Option<usize>,
    pub intervals_scanned: usize,
    pub max_ratio: f64,
    #[serde(with = "crate::serde_ext::rational")]
    pub max_mass: Rational,
    pub argmax: RationalInterval,
    pub theoretical_c: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCount {
    #[serde(with = "crate::serde_ext::rational")]
    pub scale: Rational,
    #[serde(with = "crate::serde_ext::bigint")]
    pub count: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionReport {
    #[serde(with = "crate::serde_ext::rational")]
    pub s: Rational,
    pub empirical_max_ratio: f64,
    /// Largest `c_{k,s}` over the bracketed scales.
    pub theoretical_c: Option<f64>,
    pub passed: bool,
    pub per_scale_breakdown: Vec<ScaleRow>,
    pub box_counts: Vec<BoxCount>,
    pub dimension_estimate: Option<f64>,
}

impl ScaleRow {
    fn csv_fields(&self) -> [String; 5] {
        [
            self.scale.to_string(),
            self.bracket.map(|k| k.to_string()).unwrap_or_default(),
            self.max_ratio.to_string(),
            self.theoretical_c.map(|c| c.to_string()).unwrap_or_default(),
            match self.pass {
                Some(true) => "pass".to_string(),
                Some(false) => "fail".to_string(),
                None => "unbracketed".to_string(),
            },
        ]
    }
}

const CSV_COLUMNS: [&str; 5] = ["scale", "bracket", "max_ratio", "theoretical_c", "pass"];

impl DimensionReport {
    /// `scale,bracket,max_ratio,theoretical_c,pass`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS)?;
        for r in &self.per_scale_breakdown {
            w.write_record(r.csv_fields())?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }
}

/// Several reports in one table, keyed by a leading `s` column.
pub fn reports_to_csv(reports: &[DimensionReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("s").chain(CSV_COLUMNS))?;
    for report in reports {
        for r in &report.per_scale_breakdown {
            w.write_record(std::iter::once(report.s.to_string()).chain(r.csv_fields()))?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

fn audit_scales(finest: &Rational, params: Option<&ConstructionParams>) -> Vec<Rational> {
    let mut scales = Vec::new();
    let mut len = int(2);
    while &len >= finest {
        scales.push(len.clone());
        len /= int(2);
    }
    if let Some(p) = params {
        for j in 1..=p.depth() {
            for x in [p.n_at(j), p.l_at(j)] {
                let len = Rational::new(BigInt::one(), x.clone());
                if &len >= finest {
                    scales.push(len);
                }
            }
        }
    }
    scales.sort_by(|a, b| b.cmp(a));
    scales.dedup();
    scales
}

/// Pieces of the circle covered by the line segment `[lo, lo + len]`.
fn wrap_line(lo: &Rational, len: &Rational) -> Vec<Segment> {
    let one = Rational::one();
    let two = int(2);
    let hi = lo + len;
    if len >= &two {
        vec![Segment::full()]
    } else if hi > one {
        vec![Segment::new(lo.clone(), one.clone()), Segment::new(-one, hi - two)]
    } else if lo < &-one.clone() {
        vec![Segment::new(lo + two, one.clone()), Segment::new(-one, hi)]
    } else {
        vec![Segment::new(lo.clone(), hi)]
    }
}

/// Left ends of the length-`len` windows worth scanning: dyadic boxes
/// meeting the support and windows anchored at every breakpoint (the
/// maximum over positions is attained at one of those).
fn scan_starts(index: &MassIndex, breakpoints: &[Rational], len: &Rational) -> Vec<Rational> {
    if len >= &int(2) {
        return vec![-Rational::one()];
    }
    let boxes = box_total(len);
    let support = index
        .pieces
        .iter()
        .map(|(s, _)| s.clone())
        .chain(index.atoms.iter().map(|(x, _)| Segment::new(x.clone(), x.clone())));
    let mut dyadic = BTreeSet::new();
    for s in support {
        let (lo, hi) = box_range(&s, len, &boxes);
        let mut i = lo;
        while i <= hi {
            dyadic.insert(i.mod_floor(&boxes));
            i += 1;
        }
    }
    let mut out: Vec<Rational> = dyadic
        .into_iter()
        .map(|i| Rational::from_integer(i) * len - Rational::one())
        .collect();
    for x in breakpoints {
        out.push(x.clone());
        out.push(x - len);
    }
    out
}

/// Largest mass over the scanned windows of one length.
#[derive(Clone, Debug)]
struct ScaleMax {
    scale: Rational,
    scanned: usize,
    max_mass: Rational,
    argmax: RationalInterval,
}

fn scan_maxima(mu: &Measure, finest_scale: &Rational, params: Option<&ConstructionParams>) -> Result<Vec<ScaleMax>> {
    if !mu.is_nonnegative() {
        return Err(Error::InvalidMeasure("the audit needs a nonnegative measure".into()));
    }
    if !finest_scale.is_positive() {
        return Err(Error::InvalidArgument("finest_scale must be positive".into()));
    }
    let index = MassIndex::new(mu);
    let breakpoints = index.breakpoints();
    let scales = audit_scales(finest_scale, params);
    Ok(scales
        .par_iter()
        .map(|len| {
            let starts = scan_starts(&index, &breakpoints, len);
            let mut best: Option<(Rational, Rational)> = None;
            for lo in &starts {
                let m = index.mass(&wrap_line(lo, len));
                if best.as_ref().is_none_or(|(_, bm)| &m > bm) {
                    best = Some((lo.clone(), m));
                }
            }
            let (lo, max_mass) = best.expect("at least one window");
            let argmax = if len >= &int(2) {
                RationalInterval::full_circle()
            } else {
                RationalInterval::from_endpoints(lo.clone(), &lo + len).expect("positive length")
            };
            ScaleMax {
                scale: len.clone(),
                scanned: starts.len(),
                max_mass,
                argmax,
            }
        })
        .collect())
}

fn build_report(maxima: &[ScaleMax], s: &Rational, params: Option<&ConstructionParams>) -> Result<DimensionReport> {
    if s.is_negative() || s > &Rational::one() {
        return Err(Error::InvalidArgument("need 0 ≤ s ≤ 1".into()));
    }
    let s_f = s.to_f64().expect("small rational");
    let rows: Vec<ScaleRow> = maxima
        .iter()
        .map(|m| {
            let len = &m.scale;
            let max_ratio = if m.max_mass.is_positive() {
                round_down((ln_rational(&m.max_mass) - s_f * ln_rational(len)).exp())
            } else {
                0.0
            };
            let k = params.and_then(|p| bracket(p, len));
            let (theoretical_c, pass) = match (params, k) {
                (Some(p), Some(k)) => (
                    Some(theoretical_constant(p, k, s, len).expect("bracketed")),
                    Some(bound_holds(p, k, &m.max_mass, len)),
                ),
                _ => (None, None),
            };
            ScaleRow {
                scale: len.clone(),
                bracket: k,
                intervals_scanned: m.scanned,
                max_ratio,
                max_mass: m.max_mass.clone(),
                argmax: m.argmax.clone(),
                theoretical_c,
                pass,
            }
        })
        .collect();
    let empirical_max_ratio = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let theoretical_c = rows.iter().filter_map(|r| r.theoretical_c).reduce(f64::max);
    let passed = rows.iter().all(|r| r.pass != Some(false));
    Ok(DimensionReport {
        s: s.clone(),
        empirical_max_ratio,
        theoretical_c,
        passed,
        per_scale_breakdown: rows,
        box_counts: Vec::new(),
        dimension_estimate: None,
    })
}

/// Scans dyadic scales `2, 1, 1/2, …` down to `finest_scale` (plus the stage
/// scales `1/N_j`, `1/L_j` when `params` is given) and compares the largest
/// `μ(I)/|I|^s` at each scale against `c_{k,s}` of its bracket.
pub fn mass_ratio_audit(
    mu: &Measure,
    s: &Rational,
    finest_scale: &Rational,
    params: Option<&ConstructionParams>,
) -> Result<DimensionReport> {
    let mut reports = mass_ratio_audits(mu, std::slice::from_ref(s), finest_scale, params)?;
    Ok(reports.remove(0))
}

/// [`mass_ratio_audit`] for several exponents sharing one scan.
pub fn mass_ratio_audits(
    mu: &Measure,
    exponents: &[Rational],
    finest_scale: &Rational,
    params: Option<&ConstructionParams>,
) -> Result<Vec<DimensionReport>> {
    let maxima = scan_maxima(mu, finest_scale, params)?;
    exponents.iter().map(|s| build_report(&maxima, s, params)).collect()
}

/// Audits of a built stage, each with the family's box counts at the
/// scanned scales and its dimension estimate.
pub fn audit_stage(
    params: &ConstructionParams,
    family: &StageFamily,
    mu: &Measure,
    exponents: &[Rational],
    finest_scale: &Rational,
) -> Result<Vec<DimensionReport>> {
    let mut reports = mass_ratio_audits(mu, exponents, finest_scale, Some(params))?;
    let mut scales = audit_scales(finest_scale, Some(params));
    let own = &family.half_length * int(2);
    if !scales.contains(&own) {
        scales.push(own);
    }
    scales.sort_by(|a, b| b.cmp(a));
    let box_counts = scales
        .into_iter()
        .map(|scale| {
            let count = box_count(family, &scale)?;
            Ok(BoxCount { scale, count })
        })
        .collect::<Result<Vec<_>>>()?;
    let estimate = dimension_estimate(family)?;
    for r in &mut reports {
        r.box_counts = box_counts.clone();
        r.dimension_estimate = Some(estimate);
    }
    Ok(reports)
}
