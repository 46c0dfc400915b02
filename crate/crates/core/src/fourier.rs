//! Fourier coefficients `μ̂(n) = ½∫e^{iπnx}dμ(x)` in closed form with exact
//! phases, and an independent composite Gauss-Legendre oracle.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::numerics::{cos_sin_pi_ratio, ratio_to_f64, sinc_pi_ratio, Frequency, Precision};

#[derive(Clone, Debug, PartialEq)]
pub struct FourierCoefficient {
    pub frequency: Frequency,
    pub value: Complex64,
}

impl FourierCoefficient {
    pub fn abs(&self) -> f64 {
        self.value.norm()
    }

    /// `|μ̂(n)| ≤ ½‖μ‖`, allowing for the final rounding.
    pub fn within_norm_bound(&self, mu: &Measure) -> bool {
        let bound = 0.5 * mu.total_variation().to_f64().unwrap_or(f64::INFINITY);
        self.abs() <= bound * (1.0 + 4.0 * f64::EPSILON)
    }
}

pub fn coefficient(mu: &Measure, n: &Frequency) -> FourierCoefficient {
    coefficient_with(mu, n, Precision::global())
}

pub fn coefficient_with(mu: &Measure, n: &Frequency, prec: Precision) -> FourierCoefficient {
    Prepared::new(mu).eval(n, prec)
}

/// Integer numerators and denominators of a measure, extracted once so that
/// evaluation never normalizes a fraction.
struct Prepared {
    // (centre num, centre den, half num, half den, weight)
    parts: Vec<(BigInt, BigInt, BigInt, BigInt, f64)>,
    atoms: Vec<(BigInt, BigInt, f64)>,
}

impl Prepared {
    fn new(mu: &Measure) -> Self {
        let parts = mu
            .uniform()
            .iter()
            .map(|part| {
                let c = part.interval.center.value();
                let h = &part.interval.half_length;
                (
                    c.numer().clone(),
                    c.denom().clone(),
                    h.numer().clone(),
                    h.denom().clone(),
                    part.weight.to_f64().unwrap_or(f64::NAN),
                )
            })
            .collect();
        let atoms = mu
            .atoms()
            .iter()
            .map(|atom| {
                let p = atom.point.value();
                (p.numer().clone(), p.denom().clone(), atom.mass.to_f64().unwrap_or(f64::NAN))
            })
            .collect();
        Prepared { parts, atoms }
    }

    fn eval(&self, n: &Frequency, prec: Precision) -> FourierCoefficient {
        let rotate = |num: &BigInt, den: &BigInt| {
            let (c, s) = cos_sin_pi_ratio(&(&n.0 * num), den, prec);
            Complex64::new(prec.to_f64(c), prec.to_f64(s))
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (cn, cd, hn, hd, w) in &self.parts {
            let sinc = sinc_pi_ratio(&(&n.0 * hn), hd, prec);
            acc += rotate(cn, cd) * (0.5 * w * sinc);
        }
        for (pn, pd, m) in &self.atoms {
            acc += rotate(pn, pd) * (0.5 * m);
        }
        FourierCoefficient {
            frequency: n.clone(),
            value: acc,
        }
    }
}

/// Element-wise [`coefficient`], evaluated in parallel; output order
/// matches input order.
pub fn coefficients_batch(mu: &Measure, ns: &[Frequency]) -> Vec<FourierCoefficient> {
    let prec = Precision::global();
    let prepared = Prepared::new(mu);
    ns.par_iter().map(|n| prepared.eval(n, prec)).collect()
}

/// CSV with columns `n,re,im,abs`.
pub fn to_csv(coeffs: &[FourierCoefficient]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "re", "im", "abs"])?;
    for c in coeffs {
        w.write_record([
            c.frequency.to_string(),
            c.value.re.to_string(),
            c.value.im.to_string(),
            c.abs().to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Panels allowed per uniform part before the oracle gives up.
pub const ORACLE_PANEL_BUDGET: u64 = 1 << 26;

fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn rule(order: usize) -> &'static [(f64, f64)] {
    static LOW: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    static HIGH: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    match order {
        8 => LOW.get_or_init(|| gauss_legendre(8)),
        _ => HIGH.get_or_init(|| gauss_legendre(16)),
    }
}

fn panel_kernel(rate: f64, order: usize) -> Complex64 {
    rule(order)
        .iter()
        .map(|&(t, w)| Complex64::from_polar(w, rate * t))
        .sum()
}

/// `e^{iπ·r}` for a rational `r`, reduced with integer arithmetic and
/// evaluated with the platform `sin_cos`.
fn plain_rotation(num: &BigInt, den: &BigInt) -> Complex64 {
    let r = num.mod_floor(&(den * 2));
    let t = std::f64::consts::PI * ratio_to_f64(&r, den);
    let (s, c) = t.sin_cos();
    Complex64::new(c, s)
}

/// `Σ_{k<count} e^{iπ(a + k·d)/q}`.
fn phase_sum(a: &BigInt, d: &BigInt, q: &BigInt, count: u64) -> Complex64 {
    const RESYNC: u64 = 32;
    let two_q = q * 2;
    let a = a.mod_floor(&two_q);
    let d = d.mod_floor(&two_q);
    let step = plain_rotation(&d, q);
    let mut sum = Complex64::new(0.0, 0.0);
    if let (Some(a), Some(d), Some(m)) = (a.to_i128(), d.to_i128(), two_q.to_i128()) {
        if m < (1i128 << 100) {
            let qf = q.to_f64().unwrap_or(f64::INFINITY);
            let mut cur = a;
            let mut z = Complex64::new(1.0, 0.0);
            for k in 0..count {
                if k % RESYNC == 0 {
                    let t = std::f64::consts::PI * (cur as f64 / qf);
                    let (s, c) = t.sin_cos();
                    z = Complex64::new(c, s);
                } else {
                    z *= step;
                }
                sum += z;
                cur = (cur + d) % m;
            }
            return sum;
        }
    }
    let mut cur = a;
    for _ in 0..count {
        sum += plain_rotation(&cur, q);
        cur = (cur + &d) % &two_q;
    }
    sum
}

/// Quadrature oracle for `½∫e^{iπnx}dμ(x)` with absolute error about `tol`.
///
/// Each uniform part is cut into panels on which `πn` times the panel
/// half-width stays at most 1, and every panel is integrated with a 16-point
/// Gauss-Legendre rule checked against the 8-point rule. Atoms are summed
/// directly. Fails when a part needs more than [`ORACLE_PANEL_BUDGET`]
/// panels.
pub fn coefficient_oracle(mu: &Measure, n: &Frequency, tol: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    let nf = n.0.to_f64().unwrap_or(f64::INFINITY);
    let parts = mu.uniform().len().max(1) as f64;
    for part in mu.uniform() {
        let h = &part.interval.half_length;
        let c = part.interval.center.value();
        let hf = h.to_f64().unwrap_or(f64::NAN);
        let density = part.weight.to_f64().unwrap_or(f64::NAN) / (2.0 * hf);
        let spread = std::f64::consts::PI * (nf * hf).abs();
        let mut panels = spread.ceil().max(1.0);
        let (fine, hwf) = loop {
            if panels > ORACLE_PANEL_BUDGET as f64 {
                return Err(Error::FrequencyTooLarge {
                    panels: panels as u64,
                    budget: ORACLE_PANEL_BUDGET,
                });
            }
            let hwf = hf / panels;
            let rate = std::f64::consts::PI * nf * hwf;
            let fine = panel_kernel(rate, 16);
            let coarse = panel_kernel(rate, 8);
            let err = 0.5 * density.abs() * hwf * panels * (fine - coarse).norm();
            if err > tol / parts && panels < ORACLE_PANEL_BUDGET as f64 {
                panels *= 2.0;
                continue;
            }
            break (fine, hwf);
        };
        // Panel centres n(c − h + (2k+1)·h/count) over the common
        // denominator cd·hd·count.
        let count = panels as u64;
        let cnt = BigInt::from(count);
        let (cn, cd) = (c.numer(), c.denom());
        let (hn, hd) = (h.numer(), h.denom());
        let q = cd * hd * &cnt;
        let a = &n.0 * (cn * hd * &cnt - hn * cd * &cnt + hn * cd);
        let d = &n.0 * hn * cd * 2;
        let centers = phase_sum(&a, &d, &q, count);
        acc += centers * fine * (0.5 * density * hwf);
    }
    for atom in mu.atoms() {
        let p = atom.point.value();
        let rot = plain_rotation(&(&n.0 * p.numer()), p.denom());
        acc += rot * (0.5 * atom.mass.to_f64().unwrap_or(f64::NAN));
    }
    if acc.re.is_nan() || acc.im.is_nan() {
        return Err(Error::InvalidArgument("non-finite oracle value".into()));
    }
    Ok(acc)
}

/// Frequencies `lo..=hi` as a vector.
pub fn frequency_range(lo: i64, hi: i64) -> Vec<Frequency> {
    (lo..=hi).map(Frequency::new).collect()
}

pub(crate) fn is_machine_zero(value: Complex64, mu: &Measure, rel: f64) -> bool {
    let norm = mu.total_variation();
    if norm.is_zero() {
        return true;
    }
    value.norm() < rel * norm.to_f64().unwrap_or(f64::INFINITY)
}

pub(crate) fn norm_f64(mu: &Measure) -> f64 {
    let v = mu.total_variation();
    if v.is_negative() {
        0.0
    } else {
        v.to_f64().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Atom, RationalInterval, UniformPart};
    use crate::numerics::{int, rat, CirclePoint, Rational};
    use proptest::prelude::*;

    fn dirac0() -> Measure {
        Measure::dirac(CirclePoint::zero(), int(1))
    }

    #[test]
    fn dirac_at_zero_is_half() {
        for n in [-3, 0, 1, 7, 1_000_000] {
            let c = coefficient(&dirac0(), &Frequency::new(n));
            assert_eq!(c.value, Complex64::new(0.5, 0.0));
        }
    }

    #[test]
    fn lebesgue_orthogonality() {
        let leb = Measure::lebesgue(int(1));
        assert_eq!(coefficient(&leb, &Frequency::new(0)).value, Complex64::new(0.5, 0.0));
        for n in [1, -1, 2, 17, 4096] {
            assert!(coefficient(&leb, &Frequency::new(n)).abs() < 1e-16);
        }
    }

    #[test]
    fn uniform_on_zero_one_at_one() {
        // ½∫_0^1 e^{iπx}dx = ½(e^{iπ} - 1)/(iπ) = i/π.
        let mu = Measure::uniform_on(RationalInterval::from_endpoints(int(0), int(1)).unwrap(), int(1));
        let c = coefficient(&mu, &Frequency::new(1)).value;
        assert!(c.re.abs() < 1e-16);
        assert!((c.im - std::f64::consts::FRAC_1_PI).abs() < 1e-16);
        let o = coefficient_oracle(&mu, &Frequency::new(1), 1e-14).unwrap();
        assert!((o - c).norm() < 1e-12);
    }

    #[test]
    fn oracle_trivial_cases() {
        assert_eq!(coefficient_oracle(&Measure::zero(), &Frequency::new(5), 1e-12).unwrap(), Complex64::new(0.0, 0.0));
        let atom = Measure::dirac(CirclePoint::new(rat(1, 3)), int(1));
        let o = coefficient_oracle(&atom, &Frequency::new(3), 1e-12).unwrap();
        assert!((o - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let c = coefficient(&atom, &Frequency::new(3)).value;
        assert_eq!(c, Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn oracle_refuses_huge_frequencies() {
        let mu = Measure::lebesgue(int(1));
        let n = Frequency::new(BigInt::from(10).pow(15));
        assert!(matches!(coefficient_oracle(&mu, &n, 1e-10), Err(Error::FrequencyTooLarge { .. })));
    }

    #[test]
    fn batch_matches_single_calls() {
        let mu = dirac0();
        let got: Vec<_> = coefficients_batch(&mu, &frequency_range(0, 2)).into_iter().map(|c| c.value).collect();
        assert_eq!(got, vec![Complex64::new(0.5, 0.0); 3]);
        let one = coefficients_batch(&mu, &[Frequency::new(9)]);
        assert_eq!(one[0], coefficient(&mu, &Frequency::new(9)));
    }

    #[test]
    fn huge_frequency_on_tiny_interval() {
        // n·h = 1/2 exactly: sinc(π/2) = 2/π; the centre phase n·c is an
        // even integer.
        let n = BigInt::from(10).pow(20);
        let h = Rational::new(BigInt::from(1), &n * 2);
        let c = Rational::new(BigInt::from(2), n.clone());
        let mu = Measure::uniform_on(RationalInterval::new(CirclePoint::new(c), h).unwrap(), int(1));
        let v = coefficient(&mu, &Frequency::new(n)).value;
        assert!((v.re - std::f64::consts::FRAC_1_PI).abs() < 1e-16);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&coefficients_batch(&dirac0(), &frequency_range(0, 1))).unwrap();
        assert_eq!(csv, "n,re,im,abs\n0,0.5,0,0.5\n1,0.5,0,0.5\n");
    }

    fn arb_real_measure() -> impl Strategy<Value = Measure> {
        (
            proptest::collection::btree_set(-96i64..96, 2..7),
            proptest::collection::vec(-6i64..6, 3),
            proptest::collection::btree_map(-95i64..=96, -3i64..4, 0..3),
        )
            .prop_map(|(cuts, ws, atoms)| {
                let cuts: Vec<i64> = cuts.into_iter().collect();
                let uniform = cuts
                    .chunks_exact(2)
                    .zip(ws)
                    .map(|(c, w)| UniformPart {
                        interval: RationalInterval::from_endpoints(rat(c[0], 96), rat(c[1], 96)).unwrap(),
                        weight: rat(w, 7),
                    })
                    .collect();
                let atoms = atoms
                    .into_iter()
                    .map(|(p, m)| Atom { point: CirclePoint::new(rat(p, 96)), mass: rat(m, 5) })
                    .collect();
                Measure::new(uniform, atoms).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn conjugate_symmetry(mu in arb_real_measure(), n in -5000i64..5000) {
            let a = coefficient(&mu, &Frequency::new(n)).value;
            let b = coefficient(&mu, &Frequency::new(-n)).value;
            prop_assert!((a - b.conj()).norm() <= 1e-14);
        }

        #[test]
        fn linearity_over_disjoint_sums(mu in arb_real_measure(), n in -5000i64..5000) {
            let left = mu.restrict(&[RationalInterval::from_endpoints(rat(-191, 192), rat(-1, 192)).unwrap()]).unwrap();
            let right = mu.restrict(&[RationalInterval::from_endpoints(int(0), int(1)).unwrap()]).unwrap();
            let sum = left.disjoint_sum(&right).unwrap();
            let f = Frequency::new(n);
            let lhs = coefficient(&sum, &f).value;
            let rhs = coefficient(&left, &f).value + coefficient(&right, &f).value;
            prop_assert!((lhs - rhs).norm() <= 1e-14);
        }

        #[test]
        fn bounded_by_half_norm(mu in arb_real_measure(), n in prop_oneof![-5000i64..5000, Just(i64::MAX)]) {
            prop_assert!(coefficient(&mu, &Frequency::new(n)).within_norm_bound(&mu));
        }

        #[test]
        fn closed_form_agrees_with_oracle(mu in arb_real_measure(), n in -600i64..600) {
            let f = Frequency::new(n);
            let exact = coefficient(&mu, &f).value;
            let oracle = coefficient_oracle(&mu, &f, 1e-15).unwrap();
            let scale = exact.norm().max(1e-3 * norm_f64(&mu)).max(f64::MIN_POSITIVE);
            prop_assert!((exact - oracle).norm() / scale <= 1e-9, "n={} exact={} oracle={}", n, exact, oracle);
        }
    }
}
