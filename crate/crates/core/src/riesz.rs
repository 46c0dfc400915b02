//! Riesz-product spectra: the signed-sum sets `Ω((n_j))`, dissociateness,
//! closed-form Riesz-product coefficients and the partial-product densities
//! `Π(1 + a_j cos(π n_j x))` used to cross-check them.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{rat, reduce_phase, unit_exponential, CirclePoint, Frequency, Rational};

/// Largest depth for which `Ω` is enumerated explicitly (`3^16` points).
pub const MAX_ENUMERATION_DEPTH: usize = 16;

/// Signs `ε_j ∈ {-1, 0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if eps.iter().any(|e| !(-1..=1).contains(e)) {
            return Err(Error::InvalidArgument("sign pattern entries must be -1, 0 or 1".into()));
        }
        Ok(Self(eps))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn eps(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of nonzero signs.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|e| **e != 0).count()
    }

    /// `Σ ε_j n_j`.
    pub fn apply(&self, terms: &[BigInt]) -> BigInt {
        self.0
            .iter()
            .zip(terms)
            .fold(BigInt::zero(), |acc, (e, n)| match e {
                1 => acc + n,
                -1 => acc - n,
                _ => acc,
            })
    }

    /// All `3^len` patterns; index `i` has `ε_j = ((i / 3^j) mod 3) - 1`.
    pub fn all(len: usize) -> impl Iterator<Item = SignPattern> {
        let count = 3usize.pow(len as u32);
        (0..count).map(move |mut i| {
            let mut eps = Vec::with_capacity(len);
            for _ in 0..len {
                eps.push((i % 3) as i8 - 1);
                i /= 3;
            }
            SignPattern(eps)
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    #[serde(with = "crate::serde_ext::bigint_vec")]
    terms: Vec<BigInt>,
    #[serde(with = "crate::serde_ext::rational_vec", default)]
    coefficients: Vec<Rational>,
}

/// Strictly increasing positive frequencies `n_j` with Riesz amplitudes
/// `a_j`, `|a_j| ≤ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct LacunarySequence {
    terms: Vec<BigInt>,
    coefficients: Vec<Rational>,
}

impl TryFrom<RawSequence> for LacunarySequence {
    type Error = Error;
    fn try_from(raw: RawSequence) -> Result<Self> {
        if raw.coefficients.is_empty() {
            LacunarySequence::with_unit_amplitudes(raw.terms)
        } else {
            LacunarySequence::new(raw.terms, raw.coefficients)
        }
    }
}

impl From<LacunarySequence> for RawSequence {
    fn from(s: LacunarySequence) -> Self {
        RawSequence {
            terms: s.terms,
            coefficients: s.coefficients,
        }
    }
}

impl LacunarySequence {
    pub fn new(terms: Vec<BigInt>, coefficients: Vec<Rational>) -> Result<Self> {
        if terms.len() != coefficients.len() {
            return Err(Error::InvalidArgument("one amplitude per term is required".into()));
        }
        if terms.iter().any(|t| !t.is_positive()) {
            return Err(Error::InvalidArgument("terms must be positive".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("terms must be strictly increasing".into()));
        }
        if coefficients.iter().any(|a| a.abs() > Rational::one()) {
            return Err(Error::InvalidArgument("amplitudes must satisfy |a_j| ≤ 1".into()));
        }
        Ok(Self { terms, coefficients })
    }

    /// The classical singular Riesz product, `a_j = 1`.
    pub fn with_unit_amplitudes(terms: Vec<BigInt>) -> Result<Self> {
        let ones = vec![Rational::one(); terms.len()];
        Self::new(terms, ones)
    }

    pub fn from_u64(terms: &[u64]) -> Result<Self> {
        Self::with_unit_amplitudes(terms.iter().map(|&t| BigInt::from(t)).collect())
    }

    pub fn terms(&self) -> &[BigInt] {
        &self.terms
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.terms.len() {
            return Err(Error::InvalidArgument(format!(
                "depth {depth} exceeds the {} available terms",
                self.terms.len()
            )));
        }
        Ok(())
    }

    /// `n_{k+1} > 2 Σ_{j≤k} n_j` for every `k < depth`.
    fn has_gap_condition(&self, depth: usize) -> bool {
        let mut partial = BigInt::zero();
        for n in &self.terms[..depth] {
            if *n <= &partial * 2 {
                return false;
            }
            partial += n;
        }
        true
    }
}

/// A point `Σ ε_j n_j` of `Ω` together with its sign pattern.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaPoint {
    #[serde(with = "crate::serde_ext::bigint")]
    pub value: BigInt,
    pub pattern: SignPattern,
}

/// Whether the `3^depth` signed sums are pairwise distinct.
pub fn is_dissociate(seq: &LacunarySequence, depth: usize) -> Result<bool> {
    seq.check_depth(depth)?;
    if seq.has_gap_condition(depth) {
        return Ok(true);
    }
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::InvalidArgument(format!(
            "depth {depth} too large for brute-force dissociateness check"
        )));
    }
    let mut values: Vec<BigInt> = SignPattern::all(depth).map(|p| p.apply(&seq.terms)).collect();
    values.sort();
    Ok(values.windows(2).all(|w| w[0] != w[1]))
}

/// All signed sums of the first `depth` terms, sorted by value (ties by
/// pattern).
pub fn omega(seq: &LacunarySequence, depth: usize) -> Result<Vec<OmegaPoint>> {
    seq.check_depth(depth)?;
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(Error::InvalidArgument(format!("depth {depth} too large to enumerate")));
    }
    let mut points: Vec<OmegaPoint> = SignPattern::all(depth)
        .map(|pattern| OmegaPoint {
            value: pattern.apply(&seq.terms[..depth]),
            pattern,
        })
        .collect();
    points.sort_by(|a, b| a.value.cmp(&b.value).then_with(|| a.pattern.cmp(&b.pattern)));
    Ok(points)
}

/// CSV with columns `value,eps_1,…,eps_k`.
pub fn omega_to_csv(points: &[OmegaPoint], depth: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["value".to_string()];
    header.extend((1..=depth).map(|j| format!("eps_{j}")));
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.value.to_string()];
        row.extend(p.pattern.eps().iter().map(|e| e.to_string()));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// The unique pattern with `Σ ε_j n_j = n`, if any. Requires a dissociate
/// prefix.
pub fn representation(seq: &LacunarySequence, n: &BigInt, depth: usize) -> Result<Option<SignPattern>> {
    if !is_dissociate(seq, depth)? {
        return Err(Error::NotDissociate(depth));
    }
    if seq.has_gap_condition(depth) {
        // Greedy from the top: under n_{j} > 2Σ_{i<j} n_i the sign of the
        // largest term is forced.
        let terms = &seq.terms[..depth];
        let mut below: Vec<BigInt> = Vec::with_capacity(depth);
        let mut acc = BigInt::zero();
        for t in terms {
            below.push(acc.clone());
            acc += t;
        }
        let mut rest = n.clone();
        let mut eps = vec![0i8; depth];
        for j in (0..depth).rev() {
            if rest > below[j] {
                eps[j] = 1;
                rest -= &terms[j];
            } else if rest < -below[j].clone() {
                eps[j] = -1;
                rest += &terms[j];
            }
        }
        return Ok(rest.is_zero().then_some(SignPattern(eps)));
    }
    let index: HashMap<BigInt, SignPattern> = omega(seq, depth)?.into_iter().map(|p| (p.value, p.pattern)).collect();
    Ok(index.get(n).cloned())
}

/// `½ Π_{j≤depth} (a_j/2)^{|ε_j|}` when `n = Σ ε_j n_j`, else 0.
pub fn riesz_coefficient_exact(seq: &LacunarySequence, n: &Frequency, depth: usize) -> Result<Rational> {
    let Some(pattern) = representation(seq, n.value(), depth)? else {
        return Ok(Rational::zero());
    };
    let half = rat(1, 2);
    let product = pattern
        .eps()
        .iter()
        .zip(&seq.coefficients)
        .filter(|(e, _)| **e != 0)
        .fold(half.clone(), |acc, (_, a)| acc * a * &half);
    Ok(product)
}

pub fn riesz_coefficient(seq: &LacunarySequence, n: &Frequency, depth: usize) -> Result<f64> {
    riesz_coefficient_exact(seq, n, depth).map(|r| r.to_f64().unwrap_or(0.0))
}

/// `Π_{j≤depth} (1 + a_j cos(π n_j x))`, with exact phase reduction.
pub fn partial_density(seq: &LacunarySequence, depth: usize, x: &CirclePoint) -> f64 {
    seq.terms[..depth.min(seq.len())]
        .iter()
        .zip(&seq.coefficients)
        .map(|(n, a)| {
            let cos = unit_exponential(&reduce_phase(&Frequency(n.clone()), x)).re;
            1.0 + a.to_f64().unwrap_or(0.0) * cos
        })
        .product()
}

/// Node budget for [`density_quadrature`].
pub const QUADRATURE_NODE_BUDGET: u64 = 1 << 22;

/// `½∫e^{iπnx} P(x) dx/2` over the circle by the trapezoid rule on
/// `M > Σn_j + |n|` equispaced nodes, which is exact for the trigonometric
/// polynomial `e^{iπnx}P(x)` up to rounding.
pub fn density_quadrature(seq: &LacunarySequence, depth: usize, n: &Frequency) -> Result<Complex64> {
    seq.check_depth(depth)?;
    let span: BigInt = seq.terms[..depth].iter().sum::<BigInt>() + n.value().abs();
    let nodes = (span * BigInt::from(2) + BigInt::from(2))
        .to_u64()
        .filter(|m| *m <= QUADRATURE_NODE_BUDGET)
        .ok_or(Error::FrequencyTooLarge {
            panels: u64::MAX,
            budget: QUADRATURE_NODE_BUDGET,
        })?;
    let m = nodes as i64;
    let nf = n.value().to_f64().unwrap_or(0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let x = CirclePoint::new(rat(-m + 2 * k, m));
        let theta = std::f64::consts::PI * nf * x.to_f64();
        acc += Complex64::from_polar(partial_density(seq, depth, &x), theta);
    }
    Ok(acc * (0.5 / m as f64))
}
