//! Finite signed measures on the circle made of uniform pieces on rational
//! intervals plus finitely many atoms.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{int, wrap, CirclePoint, Rational};

/// A closed line segment `[lo, hi]` with `-1 ≤ lo ≤ hi ≤ 1`. The endpoints
/// `-1` and `1` name the same circle point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "crate::serde_ext::rational")]
    pub lo: Rational,
    #[serde(with = "crate::serde_ext::rational")]
    pub hi: Rational,
}

impl Segment {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi && lo >= -Rational::one() && hi <= Rational::one());
        Self { lo, hi }
    }

    pub fn full() -> Self {
        Self::new(-Rational::one(), Rational::one())
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &CirclePoint) -> bool {
        let v = x.value();
        (v >= &self.lo && v <= &self.hi) || (v == &Rational::one() && self.lo == -Rational::one())
    }

    pub fn intersect(&self, other: &Segment) -> Option<Segment> {
        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Segment::new(lo.clone(), hi.clone()))
    }

    /// Length of the intersection with `other`.
    pub fn overlap(&self, other: &Segment) -> Rational {
        self.intersect(other)
            .map(|s| s.length())
            .unwrap_or_else(Rational::zero)
    }

    pub fn to_interval(&self) -> RationalInterval {
        let center = (&self.lo + &self.hi) / int(2);
        let half = (&self.hi - &self.lo) / int(2);
        RationalInterval {
            center: CirclePoint::new(center),
            half_length: half,
        }
    }
}

/// Closed interval `center ± half_length` on the circle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RationalInterval {
    pub center: CirclePoint,
    #[serde(with = "crate::serde_ext::rational")]
    pub half_length: Rational,
}

impl RationalInterval {
    pub fn new(center: CirclePoint, half_length: Rational) -> Result<Self> {
        if !half_length.is_positive() || half_length > Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "half-length {half_length} outside (0, 1]"
            )));
        }
        Ok(Self { center, half_length })
    }

    /// Interval `[lo, hi]` given on the line, `0 < hi - lo ≤ 2`.
    pub fn from_endpoints(lo: Rational, hi: Rational) -> Result<Self> {
        let half = (&hi - &lo) / int(2);
        Self::new(CirclePoint::new((lo + hi) / int(2)), half)
    }

    pub fn full_circle() -> Self {
        Self {
            center: CirclePoint::zero(),
            half_length: Rational::one(),
        }
    }

    pub fn length(&self) -> Rational {
        &self.half_length * int(2)
    }

    /// Endpoints of the unwrapped lift centred at the canonical center.
    pub fn lift(&self) -> (Rational, Rational) {
        let c = self.center.value();
        (c - &self.half_length, c + &self.half_length)
    }

    /// Non-wrapping pieces covering the interval.
    pub fn segments(&self) -> Vec<Segment> {
        let one = Rational::one();
        if self.half_length >= one {
            return vec![Segment::full()];
        }
        let (lo, hi) = self.lift();
        let two = int(2);
        if hi > one {
            vec![Segment::new(lo, one.clone()), Segment::new(-one, hi - two)]
        } else if lo < -one.clone() {
            vec![Segment::new(lo + two, one.clone()), Segment::new(-one, hi)]
        } else {
            vec![Segment::new(lo, hi)]
        }
    }

    pub fn contains_point(&self, x: &CirclePoint) -> bool {
        let d = wrap(&(x.value() - self.center.value()));
        d.abs() <= self.half_length
    }

    /// Exact circular containment of `other` in `self`.
    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        if self.half_length >= Rational::one() {
            return true;
        }
        let d = wrap(&(other.center.value() - self.center.value()));
        d.abs() + &other.half_length <= self.half_length
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformPart {
    pub interval: RationalInterval,
    #[serde(with = "crate::serde_ext::rational")]
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: CirclePoint,
    #[serde(with = "crate::serde_ext::rational")]
    pub mass: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(default)]
    uniform: Vec<UniformPart>,
    #[serde(default)]
    atoms: Vec<Atom>,
}

/// Weighted uniform pieces plus atoms. `weight` is the total signed mass of
/// a piece, spread uniformly over its interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct Measure {
    uniform: Vec<UniformPart>,
    atoms: Vec<Atom>,
}

impl TryFrom<RawMeasure> for Measure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        Measure::new(raw.uniform, raw.atoms)
    }
}

impl From<Measure> for RawMeasure {
    fn from(m: Measure) -> Self {
        RawMeasure {
            uniform: m.uniform,
            atoms: m.atoms,
        }
    }
}

fn cmp_segments(a: &Segment, b: &Segment) -> Ordering {
    a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi))
}

impl Measure {
    /// Validates that uniform intervals have pairwise disjoint interiors and
    /// atoms sit at distinct points.
    pub fn new(uniform: Vec<UniformPart>, atoms: Vec<Atom>) -> Result<Self> {
        for part in &uniform {
            if !part.interval.half_length.is_positive() || part.interval.half_length > Rational::one() {
                return Err(Error::InvalidMeasure(format!(
                    "half-length {} outside (0, 1]",
                    part.interval.half_length
                )));
            }
        }
        let mut segs: Vec<Segment> = uniform.iter().flat_map(|p| p.interval.segments()).collect();
        segs.sort_by(cmp_segments);
        if let Some(w) = segs.windows(2).find(|w| w[0].hi > w[1].lo) {
            return Err(Error::InvalidMeasure(format!(
                "uniform parts overlap near [{}, {}]",
                w[1].lo, w[0].hi
            )));
        }
        let mut points: Vec<&CirclePoint> = atoms.iter().map(|a| &a.point).collect();
        points.sort();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure(format!("duplicate atom at {}", w[0])));
        }
        Ok(Self { uniform, atoms })
    }

    pub fn zero() -> Self {
        Self {
            uniform: Vec::new(),
            atoms: Vec::new(),
        }
    }

    pub fn dirac(point: CirclePoint, mass: Rational) -> Self {
        Self {
            uniform: Vec::new(),
            atoms: vec![Atom { point, mass }],
        }
    }

    pub fn uniform_on(interval: RationalInterval, weight: Rational) -> Self {
        Self {
            uniform: vec![UniformPart { interval, weight }],
            atoms: Vec::new(),
        }
    }

    /// Uniform mass `total_mass` over the whole circle. `lebesgue(2)` is
    /// Lebesgue measure on the circumference-2 circle.
    pub fn lebesgue(total_mass: Rational) -> Self {
        if total_mass.is_zero() {
            return Self::zero();
        }
        Self::uniform_on(RationalInterval::full_circle(), total_mass)
    }

    pub fn uniform(&self) -> &[UniformPart] {
        &self.uniform
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.uniform.iter().all(|p| p.weight.is_zero()) && self.atoms.iter().all(|a| a.mass.is_zero())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.uniform.iter().all(|p| !p.weight.is_negative()) && self.atoms.iter().all(|a| !a.mass.is_negative())
    }

    /// `‖μ‖ = Σ|weight| + Σ|mass|`.
    pub fn total_variation(&self) -> Rational {
        let u = self.uniform.iter().map(|p| p.weight.abs());
        let a = self.atoms.iter().map(|a| a.mass.abs());
        u.chain(a).fold(Rational::zero(), |acc, x| acc + x)
    }

    pub fn total_mass(&self) -> Rational {
        let u = self.uniform.iter().map(|p| p.weight.clone());
        let a = self.atoms.iter().map(|a| a.mass.clone());
        u.chain(a).fold(Rational::zero(), |acc, x| acc + x)
    }

    /// Sum of two measures with disjoint supports.
    pub fn disjoint_sum(&self, other: &Measure) -> Result<Measure> {
        let mut uniform = self.uniform.clone();
        uniform.extend(other.uniform.iter().cloned());
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Measure::new(uniform, atoms)
    }

    /// Non-wrapping pieces of every uniform part, paired with the part's
    /// density (weight per unit length).
    pub fn support_segments(&self) -> Vec<Segment> {
        self.uniform.iter().flat_map(|p| p.interval.segments()).collect()
    }

    /// Signed mass of the closed interval.
    pub fn mass_of(&self, interval: &RationalInterval) -> Rational {
        self.mass_of_segments(&interval.segments())
    }

    pub(crate) fn mass_of_segments(&self, keep: &[Segment]) -> Rational {
        let mut total = Rational::zero();
        for part in &self.uniform {
            let len = part.interval.length();
            let overlap = part
                .interval
                .segments()
                .iter()
                .flat_map(|s| keep.iter().map(move |k| s.overlap(k)))
                .fold(Rational::zero(), |acc, x| acc + x);
            if !overlap.is_zero() {
                total += &part.weight * overlap / len;
            }
        }
        for atom in &self.atoms {
            if keep.iter().any(|k| k.contains(&atom.point)) {
                total += &atom.mass;
            }
        }
        total
    }

    /// Restriction to the union of pairwise disjoint closed intervals.
    pub fn restrict(&self, keep: &[RationalInterval]) -> Result<Measure> {
        let mut segs: Vec<Segment> = keep.iter().flat_map(|k| k.segments()).collect();
        segs.sort_by(cmp_segments);
        if segs.windows(2).any(|w| w[0].hi > w[1].lo) {
            return Err(Error::InvalidArgument("restriction intervals overlap".into()));
        }
        Ok(self.restrict_segments(&segs))
    }

    /// Restriction to a union of segments with disjoint interiors.
    pub(crate) fn restrict_segments(&self, keep: &[Segment]) -> Measure {
        let mut uniform = Vec::new();
        for part in &self.uniform {
            let len = part.interval.length();
            let pieces: Vec<Segment> = part
                .interval
                .segments()
                .iter()
                .flat_map(|s| keep.iter().filter_map(move |k| s.intersect(k)))
                .filter(|s| s.lo < s.hi)
                .collect();
            let kept = pieces.iter().fold(Rational::zero(), |acc, s| acc + s.length());
            if kept == len {
                uniform.push(part.clone());
                continue;
            }
            for piece in pieces {
                let weight = &part.weight * piece.length() / &len;
                uniform.push(UniformPart {
                    interval: piece.to_interval(),
                    weight,
                });
            }
        }
        let atoms = self
            .atoms
            .iter()
            .filter(|a| keep.iter().any(|k| k.contains(&a.point)))
            .cloned()
            .collect();
        Measure { uniform, atoms }
    }

    pub(crate) fn with_parts(uniform: Vec<UniformPart>, atoms: Vec<Atom>) -> Measure {
        Measure { uniform, atoms }
    }
}

pub(crate) fn sort_segments(segs: &mut [Segment]) {
    segs.sort_by(cmp_segments);
}
