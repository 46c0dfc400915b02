//! Signed fixed-point arithmetic in an `i128` with a runtime number of
//! fractional bits, used to evaluate `cos(πu)` and `sin(πu)` well beyond
//! double precision before the final rounding.

use std::sync::OnceLock;

/// π·2^126, truncated. The next hex digits are `29024E08...`, so truncation
/// is also round-to-nearest.
const PI_Q126: u128 = 0xC90F_DAA2_2168_C234_C4C6_628B_80DC_1CD1;

pub const MIN_GUARD_BITS: u32 = 30;
pub const MAX_GUARD_BITS: u32 = 70;
pub const DEFAULT_GUARD_BITS: u32 = 64;

/// Environment variable overriding the number of guard bits above the 53-bit
/// double mantissa.
pub const GUARD_BITS_ENV: &str = "PARISIAN_GUARD_BITS";

/// Working precision for transcendental evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precision {
    guard_bits: u32,
}

impl Precision {
    pub fn new(guard_bits: u32) -> Self {
        Self {
            guard_bits: guard_bits.clamp(MIN_GUARD_BITS, MAX_GUARD_BITS),
        }
    }

    /// Process-wide precision: `PARISIAN_GUARD_BITS` if set and parseable,
    /// otherwise [`DEFAULT_GUARD_BITS`].
    pub fn global() -> Self {
        static GLOBAL: OnceLock<Precision> = OnceLock::new();
        *GLOBAL.get_or_init(|| {
            let guard = std::env::var(GUARD_BITS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<u32>().ok())
                .unwrap_or(DEFAULT_GUARD_BITS);
            Precision::new(guard)
        })
    }

    pub fn guard_bits(self) -> u32 {
        self.guard_bits
    }

    /// Fractional bits of the fixed-point representation.
    pub fn frac_bits(self) -> u32 {
        53 + self.guard_bits
    }

    pub(crate) fn one(self) -> i128 {
        1i128 << self.frac_bits()
    }

    pub(crate) fn pi(self) -> i128 {
        let shift = 126 - self.frac_bits();
        ((PI_Q126 >> shift) + ((PI_Q126 >> (shift - 1)) & 1)) as i128
    }

    pub(crate) fn to_f64(self, v: i128) -> f64 {
        (v as f64) * (-(self.frac_bits() as f64)).exp2()
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::global()
    }
}

fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
    let lo = (p00 & MASK) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

/// `round(a·b / 2^frac)`; the product must fit back into 127 bits.
pub(crate) fn mul(a: i128, b: i128, frac: u32) -> i128 {
    let negative = (a < 0) != (b < 0);
    let (hi, lo) = mul_wide(a.unsigned_abs(), b.unsigned_abs());
    let shifted = (lo >> frac) | (hi << (128 - frac));
    let round = (lo >> (frac - 1)) & 1;
    let mag = (shifted + round) as i128;
    if negative {
        -mag
    } else {
        mag
    }
}

/// `(cos θ, sin θ)` for `0 ≤ θ ≤ π/4`, Taylor series in fixed point.
pub(crate) fn cos_sin(theta: i128, prec: Precision) -> (i128, i128) {
    let frac = prec.frac_bits();
    let sq = mul(theta, theta, frac);

    let mut cos = prec.one();
    let mut term = prec.one();
    let mut k: i128 = 1;
    loop {
        term = -mul(term, sq, frac) / ((2 * k - 1) * (2 * k));
        if term == 0 {
            break;
        }
        cos += term;
        k += 1;
    }

    let mut sin = theta;
    let mut term = theta;
    let mut k: i128 = 1;
    loop {
        term = -mul(term, sq, frac) / ((2 * k) * (2 * k + 1));
        if term == 0 {
            break;
        }
        sin += term;
        k += 1;
    }
    (cos, sin)
}

/// `sin θ / θ` for `0 ≤ θ ≤ π/4`.
pub(crate) fn sinc(theta: i128, prec: Precision) -> i128 {
    let frac = prec.frac_bits();
    let sq = mul(theta, theta, frac);
    let mut sum = prec.one();
    let mut term = prec.one();
    let mut k: i128 = 1;
    loop {
        term = -mul(term, sq, frac) / ((2 * k) * (2 * k + 1));
        if term == 0 {
            break;
        }
        sum += term;
        k += 1;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    /// π·2^bits by Machin's formula in big integers.
    fn machin_pi(bits: u32) -> BigInt {
        let guard = 32;
        let scale = BigInt::one() << (bits + guard);
        let arctan_inv = |x: u64| {
            let x = BigInt::from(x);
            let x2 = &x * &x;
            let mut power = &scale / &x;
            let mut sum = BigInt::zero();
            let mut k = 0u64;
            while !power.is_zero() {
                let term = &power / BigInt::from(2 * k + 1);
                if k % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
                power /= &x2;
                k += 1;
            }
            sum
        };
        let pi = (arctan_inv(5) * 16) - (arctan_inv(239) * 4);
        pi >> guard
    }

    #[test]
    fn pi_constant_matches_machin() {
        let reference = machin_pi(126);
        let diff = reference - BigInt::from(PI_Q126);
        assert!(diff.magnitude() <= &num_bigint::BigUint::from(1u8), "diff {diff}");
    }

    #[test]
    fn mul_rounds_exact_products() {
        let p = Precision::new(64);
        let f = p.frac_bits();
        let half = p.one() / 2;
        assert_eq!(mul(half, half, f), p.one() / 4);
        assert_eq!(mul(-half, p.one() * 3, f), -(p.one() * 3) / 2);
    }

    #[test]
    fn quarter_turn_values() {
        for guard in [MIN_GUARD_BITS, DEFAULT_GUARD_BITS, MAX_GUARD_BITS] {
            let p = Precision::new(guard);
            let (c, s) = cos_sin(p.pi() / 4, p);
            let r = std::f64::consts::FRAC_1_SQRT_2;
            assert!((p.to_f64(c) - r).abs() <= f64::EPSILON);
            assert!((p.to_f64(s) - r).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn precision_is_clamped() {
        assert_eq!(Precision::new(1).guard_bits(), MIN_GUARD_BITS);
        assert_eq!(Precision::new(500).guard_bits(), MAX_GUARD_BITS);
    }
}
