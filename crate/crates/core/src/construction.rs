//! The Cantor-type construction: the sequence `(N_j)`, the stage families
//! `D_k` of grid-centred intervals, their equidistributed stage measures and
//! the truncation sets `E_t`.
//!
//! Interval half-lengths are `1/(2L_j)` with `L_j = ⌈N_j^{1+δ}⌉`, so every
//! endpoint is an exact rational and every containment check is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{sort_segments, Measure, RationalInterval, Segment, UniformPart};
use crate::numerics::{ceil_power, int, line_grid_distance, max_grid_distance, wrap, CirclePoint, Rational};

/// Default cap on the number of intervals materialized in one stage.
pub const MAX_STAGE_INTERVALS: usize = 4_000_000;

/// Default cap on grid points visited while refining a truncation set.
pub const MAX_TRUNCATION_PIECES: usize = 4_000_000;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(with = "crate::serde_ext::rational")]
    alpha: Rational,
    #[serde(with = "crate::serde_ext::rational")]
    delta: Rational,
    #[serde(rename = "N", with = "crate::serde_ext::bigint_vec")]
    n: Vec<BigInt>,
    #[serde(rename = "L", with = "crate::serde_ext::bigint_vec")]
    l: Vec<BigInt>,
    depth: usize,
}

/// `α`, `δ = 1 − α`, the sequence `N_1 < N_2 < …` and `L_j = ⌈N_j^{1+δ}⌉`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ConstructionParams {
    alpha: Rational,
    delta: Rational,
    n: Vec<BigInt>,
    l: Vec<BigInt>,
}

impl TryFrom<RawParams> for ConstructionParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        if raw.delta != Rational::one() - &raw.alpha {
            return Err(Error::InvalidArgument("delta must equal 1 - alpha".into()));
        }
        if raw.depth != raw.n.len() {
            return Err(Error::InvalidArgument("depth must equal the length of N".into()));
        }
        let params = ConstructionParams::from_sequence(raw.alpha, raw.n)?;
        if params.l != raw.l {
            return Err(Error::InvalidArgument("L does not match ceil(N^(1+delta))".into()));
        }
        Ok(params)
    }
}

impl From<ConstructionParams> for RawParams {
    fn from(p: ConstructionParams) -> Self {
        let depth = p.n.len();
        RawParams {
            alpha: p.alpha,
            delta: p.delta,
            n: p.n,
            l: p.l,
            depth,
        }
    }
}

fn exponent_parts(delta: &Rational) -> Result<(u32, u32)> {
    match (delta.numer().to_u32(), delta.denom().to_u32()) {
        (Some(p), Some(q)) if q <= 4096 => Ok((p, q)),
        _ => Err(Error::InvalidArgument(format!("delta = {delta} has too large a denominator"))),
    }
}

fn pow(x: &BigInt, e: u64) -> BigInt {
    num_traits::pow(x.clone(), e as usize)
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if !alpha.is_positive() || alpha >= &Rational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    Ok(())
}

/// `(N_1·4^{k+2})^{qk}·(Π_{j≤k} N_j)^{pk} < N_{k+1}^{qk}`; `k` is 1-based and
/// `ns` holds at least `k + 1` terms.
fn growth_condition(ns: &[BigInt], p: u32, q: u32, k: usize) -> bool {
    // Both sides are k-th powers, so comparing the bases is equivalent.
    let base = &ns[0] * pow(&BigInt::from(4), k as u64 + 2);
    let prod: BigInt = ns[..k].iter().product();
    pow(&base, q as u64) * pow(&prod, p as u64) < pow(&ns[k], q as u64)
}

/// `⌊N_k/(2L_{k−1})⌋ − 3 ≥ N_k/(4L_{k−1})`.
fn child_count_bound(n_next: &BigInt, l_prev: &BigInt) -> bool {
    let m = n_next.div_floor(&(l_prev * 2)) - 3;
    m * l_prev * 4 >= *n_next
}

impl ConstructionParams {
    /// Validates an explicit sequence against the growth and rapid-growth
    /// conditions.
    pub fn from_sequence(alpha: Rational, n: Vec<BigInt>) -> Result<Self> {
        check_alpha(&alpha)?;
        let delta = Rational::one() - &alpha;
        let (p, q) = exponent_parts(&delta)?;
        if n.is_empty() {
            return Err(Error::InvalidArgument("N must be nonempty".into()));
        }
        if n[0] < BigInt::from(4) {
            return Err(Error::InvalidArgument("N_1 must be at least 4".into()));
        }
        let l: Vec<BigInt> = n.iter().map(|x| ceil_power(x, &delta)).collect();
        for k in 1..n.len() {
            if !growth_condition(&n, p, q, k) {
                return Err(Error::InvalidArgument(format!("growth condition fails for N_{}", k + 1)));
            }
            if n[k] < &l[k - 1] * 12 {
                return Err(Error::InvalidArgument(format!("N_{} < 12 L_{}", k + 1, k)));
            }
            if !child_count_bound(&n[k], &l[k - 1]) {
                return Err(Error::InvalidArgument(format!("M_{} < N_{0}/(4 L_{})", k + 1, k)));
            }
        }
        Ok(Self { alpha, delta, n, l })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    /// `δ = p/q` in lowest terms.
    pub fn delta_parts(&self) -> (u32, u32) {
        exponent_parts(&self.delta).expect("validated at construction")
    }

    pub fn depth(&self) -> usize {
        self.n.len()
    }

    pub fn sequence(&self) -> &[BigInt] {
        &self.n
    }

    pub fn lengths(&self) -> &[BigInt] {
        &self.l
    }

    /// `N_j`, 1-based.
    pub fn n_at(&self, j: usize) -> &BigInt {
        &self.n[j - 1]
    }

    /// `L_j`, 1-based.
    pub fn l_at(&self, j: usize) -> &BigInt {
        &self.l[j - 1]
    }

    /// Children per parent at stage `k`: `N_1` for the first stage, then
    /// `M_k = ⌊N_k/(2L_{k−1})⌋ − 3`.
    pub fn children_per_parent(&self, k: usize) -> BigInt {
        if k == 1 {
            return self.n[0].clone();
        }
        self.n_at(k).div_floor(&(self.l_at(k - 1) * 2)) - 3
    }

    /// `|D_k| = N_1 · Π_{j=2..k} M_j`.
    pub fn stage_size(&self, k: usize) -> BigInt {
        (1..=k).map(|j| self.children_per_parent(j)).product()
    }

    /// `Π_{j=2..k} M_j ≥ (N_k/N_1)/(4^{k−1}(Π_{j<k} N_j)^δ)`, exactly.
    pub fn product_bound_holds(&self, k: usize) -> bool {
        let (p, q) = self.delta_parts();
        let prod_m: BigInt = (2..=k).map(|j| self.children_per_parent(j)).product();
        let prod_n: BigInt = self.n[..k - 1].iter().product();
        let lhs = prod_m * pow(&BigInt::from(4), k as u64 - 1) * &self.n[0];
        pow(&lhs, q as u64) * pow(&prod_n, p as u64) >= pow(self.n_at(k), q as u64)
    }

    /// The growth condition linking `N_{k+1}` to `N_1..N_k`.
    pub fn growth_holds(&self, k: usize) -> bool {
        let (p, q) = self.delta_parts();
        growth_condition(&self.n, p, q, k)
    }

    /// Grid modulus and half-length of stage `k`.
    fn level(&self, k: usize) -> Level {
        Level::new(self.n_at(k).clone(), self.l_at(k).clone())
    }

    /// CSV summary with one row per stage: `k,N,L,M,count`.
    pub fn summary_csv(&self, built: usize) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "N", "L", "M", "count", "built"])?;
        for k in 1..=self.depth() {
            w.write_record([
                k.to_string(),
                self.n_at(k).to_string(),
                self.l_at(k).to_string(),
                self.children_per_parent(k).to_string(),
                self.stage_size(k).to_string(),
                (k <= built).to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }
}

/// Least sequence with `N_1 = n1` satisfying, for every `k < depth`, the
/// growth condition, `N_{k+1} ≥ 12 L_k` and `M_{k+1} ≥ N_{k+1}/(4L_k)`.
pub fn generate_sequence(alpha: &Rational, n1: &BigInt, depth: usize) -> Result<ConstructionParams> {
    generate_sequence_with_limit(alpha, n1, depth, None)
}

/// [`generate_sequence`] with an optional cap on the bit length of each term.
pub fn generate_sequence_with_limit(
    alpha: &Rational,
    n1: &BigInt,
    depth: usize,
    max_bits: Option<u64>,
) -> Result<ConstructionParams> {
    check_alpha(alpha)?;
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if *n1 < BigInt::from(4) {
        return Err(Error::InvalidArgument("N_1 must be at least 4".into()));
    }
    let delta = Rational::one() - alpha;
    let (p, q) = exponent_parts(&delta)?;
    let mut n = vec![n1.clone()];
    let mut l = vec![ceil_power(n1, &delta)];
    for k in 1..depth {
        let base = &n[0] * pow(&BigInt::from(4), k as u64 + 2);
        let prod: BigInt = n.iter().product();
        let bound = pow(&base, q as u64) * pow(&prod, p as u64);
        // Least integer whose q-th power exceeds the bound.
        let mut next = bound.nth_root(q) + 1;
        let rapid = &l[k - 1] * 12;
        if next < rapid {
            next = rapid;
        }
        if !child_count_bound(&next, &l[k - 1]) {
            next = &l[k - 1] * 14;
        }
        if let Some(limit) = max_bits {
            if next.bits() > limit {
                return Err(Error::DepthInfeasible {
                    index: k + 1,
                    bits: next.bits(),
                    limit,
                });
            }
        }
        l.push(ceil_power(&next, &delta));
        n.push(next);
        debug_assert!(growth_condition(&n, p, q, k));
    }
    Ok(ConstructionParams {
        alpha: alpha.clone(),
        delta,
        n,
        l,
    })
}

#[derive(Clone, Debug)]
struct Level {
    n: BigInt,
    half: Rational,
}

impl Level {
    fn new(n: BigInt, l: BigInt) -> Self {
        let half = Rational::new(BigInt::one(), l * 2);
        Self { n, half }
    }

    fn center(&self, m: &BigInt) -> CirclePoint {
        CirclePoint::new(Rational::new(m * 2, self.n.clone()))
    }

    /// Grid indices `m` whose interval `2m/N ± half` lies inside `parent`.
    fn contained_range(&self, parent: &RationalInterval) -> (BigInt, BigInt) {
        let nr = Rational::from_integer(self.n.clone());
        let c = parent.center.value();
        let lo = ((c - &parent.half_length + &self.half) * &nr / int(2)).ceil().to_integer();
        let hi = ((c + &parent.half_length - &self.half) * &nr / int(2)).floor().to_integer();
        (lo, hi)
    }
}

/// One stage `D_k`: intervals centred on `2Z/N_k` with half-length
/// `1/(2L_k)`, each tagged with the index of its parent in stage `k − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageFamily {
    pub stage: usize,
    #[serde(with = "crate::serde_ext::bigint")]
    pub grid_modulus: BigInt,
    #[serde(with = "crate::serde_ext::rational")]
    pub half_length: Rational,
    pub count: usize,
    pub intervals: Vec<RationalInterval>,
    pub parent_map: Vec<usize>,
}

impl StageFamily {
    /// Stage 0: the whole circle as a single parent.
    pub fn circle() -> Self {
        Self {
            stage: 0,
            grid_modulus: BigInt::one(),
            half_length: Rational::one(),
            count: 1,
            intervals: vec![RationalInterval::full_circle()],
            parent_map: vec![0],
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Children of each parent, in parent order.
    pub fn children_counts(&self, parents: usize) -> Vec<usize> {
        let mut counts = vec![0; parents];
        for &p in &self.parent_map {
            counts[p] += 1;
        }
        counts
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.intervals.iter().flat_map(|i| i.segments()).collect()
    }
}

enum ChildRule {
    Leftmost(BigInt),
    AllContained,
}

fn build_level(prev: &StageFamily, stage: usize, level: &Level, rule: &ChildRule, limit: usize) -> Result<StageFamily> {
    let mut intervals = Vec::new();
    let mut parent_map = Vec::new();
    for (pi, parent) in prev.intervals.iter().enumerate() {
        let (lo, hi) = if stage == 1 {
            // All N_1 grid points, m ∈ (−N_1/2, N_1/2].
            let half_n = level.n.div_floor(&BigInt::from(2));
            (-(&level.n - &half_n) + 1, half_n)
        } else {
            level.contained_range(parent)
        };
        let available = if hi >= lo { &hi - &lo + 1 } else { BigInt::zero() };
        let take = match rule {
            ChildRule::Leftmost(m) if stage > 1 => {
                if &available < m {
                    return Err(Error::TooFewChildren {
                        stage,
                        value: available.to_string(),
                    });
                }
                m.clone()
            }
            _ => available,
        };
        let take = take.to_usize().filter(|t| intervals.len() + t <= limit).ok_or_else(|| Error::StageTooLarge {
            stage,
            count: format!("more than {}", intervals.len()),
            limit,
        })?;
        let mut m = lo;
        for _ in 0..take {
            intervals.push(RationalInterval {
                center: level.center(&m),
                half_length: level.half.clone(),
            });
            parent_map.push(pi);
            m += 1;
        }
    }
    Ok(StageFamily {
        stage,
        grid_modulus: level.n.clone(),
        half_length: level.half.clone(),
        count: intervals.len(),
        intervals,
        parent_map,
    })
}

/// Stage `k` from stage `k − 1`: all `N_1` grid intervals at `k = 1`, then
/// the leftmost `M_k` entirely contained candidates inside every parent.
pub fn build_stage(params: &ConstructionParams, k: usize, prev: &StageFamily) -> Result<StageFamily> {
    build_stage_with_limit(params, k, prev, MAX_STAGE_INTERVALS)
}

pub fn build_stage_with_limit(params: &ConstructionParams, k: usize, prev: &StageFamily, limit: usize) -> Result<StageFamily> {
    if k == 0 || k > params.depth() {
        return Err(Error::InvalidArgument(format!("stage {k} outside 1..={}", params.depth())));
    }
    if prev.stage + 1 != k {
        return Err(Error::InvalidArgument(format!("stage {k} needs stage {} as parent", k - 1)));
    }
    let m = params.children_per_parent(k);
    if m < BigInt::one() {
        return Err(Error::TooFewChildren { stage: k, value: m.to_string() });
    }
    let expected = params.stage_size(k);
    if expected > BigInt::from(limit) {
        return Err(Error::StageTooLarge {
            stage: k,
            count: expected.to_string(),
            limit,
        });
    }
    build_level(prev, k, &params.level(k), &ChildRule::Leftmost(m), limit)
}

/// Stages `1..=k`.
pub fn build_stages(params: &ConstructionParams, k: usize) -> Result<Vec<StageFamily>> {
    let mut out: Vec<StageFamily> = Vec::with_capacity(k);
    let mut prev = StageFamily::circle();
    for stage in 1..=k {
        let next = build_stage(params, stage, &prev)?;
        prev = next.clone();
        out.push(next);
    }
    Ok(out)
}

/// Nested windows for an arbitrary increasing grid sequence: every stage
/// keeps all grid intervals of half-length `1/(2⌈N_k^{1+δ}⌉)` entirely
/// contained in a previous-stage interval. No growth assumptions are made,
/// so `δ` may be any positive rational.
pub fn window_stages(ns: &[BigInt], delta: &Rational, depth: usize) -> Result<Vec<StageFamily>> {
    if depth > ns.len() || !delta.is_positive() {
        return Err(Error::InvalidArgument("window stages need depth ≤ len(N) and δ > 0".into()));
    }
    exponent_parts(delta)?;
    let mut out: Vec<StageFamily> = Vec::with_capacity(depth);
    let mut prev = StageFamily::circle();
    for (k, n) in ns.iter().take(depth).enumerate() {
        let level = Level::new(n.clone(), ceil_power(n, delta));
        let next = build_level(&prev, k + 1, &level, &ChildRule::AllContained, MAX_STAGE_INTERVALS)?;
        prev = next.clone();
        out.push(next);
    }
    Ok(out)
}

/// Equal mass `1/|D_k|` on every interval of the family.
pub fn stage_measure(family: &StageFamily) -> Result<Measure> {
    if family.is_empty() {
        return Ok(Measure::zero());
    }
    let w = Rational::new(BigInt::one(), BigInt::from(family.len()));
    let uniform = family
        .intervals
        .iter()
        .map(|i| UniformPart {
            interval: i.clone(),
            weight: w.clone(),
        })
        .collect();
    Measure::new(uniform, Vec::new())
}

/// `max_{x ∈ I} dist(x, 2Z/N)`.
pub fn max_distance_to_grid(interval: &RationalInterval, n: &BigInt) -> Rational {
    interval
        .segments()
        .iter()
        .map(|s| max_grid_distance(&s.lo, &s.hi, n))
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Every point of `interval` within `t/L` of `2Z/N`.
pub fn window_holds(interval: &RationalInterval, n: &BigInt, l: &BigInt, t: &Rational) -> bool {
    max_distance_to_grid(interval, n) * Rational::from_integer(l.clone()) <= *t
}

/// Exact structural check of stage `k` against its parent stage: grid
/// centres, half-lengths, containment, child counts (when `expected` is
/// given) and the window property for every level `j ≤ k`.
pub fn verify_stage(
    ns: &[BigInt],
    ls: &[BigInt],
    family: &StageFamily,
    parent: &StageFamily,
    expected_children: Option<&BigInt>,
) -> Result<()> {
    let k = family.stage;
    let fail = |msg: String| Err(Error::VerificationFailed(format!("stage {k}: {msg}")));
    let n = &ns[k - 1];
    let nr = Rational::from_integer(n.clone());
    let half = Rational::new(BigInt::one(), &ls[k - 1] * 2);
    for (i, (iv, &p)) in family.intervals.iter().zip(&family.parent_map).enumerate() {
        if !(iv.center.value() * &nr / int(2)).is_integer() {
            return fail(format!("interval {i} centre {} is off the grid", iv.center));
        }
        if iv.half_length != half {
            return fail(format!("interval {i} has half-length {}", iv.half_length));
        }
        if !parent.intervals[p].contains_interval(iv) {
            return fail(format!("interval {i} escapes its parent {p}"));
        }
        for j in 0..k {
            if !window_holds(iv, &ns[j], &ls[j], &Rational::new(BigInt::one(), BigInt::from(2))) {
                return fail(format!("interval {i} violates the level-{} window", j + 1));
            }
        }
    }
    if let Some(m) = expected_children {
        let counts = family.children_counts(parent.len());
        if let Some((p, c)) = counts.iter().enumerate().find(|(_, c)| BigInt::from(**c) != *m) {
            return fail(format!("parent {p} has {c} children, expected {m}"));
        }
    }
    let mut segs = family.segments();
    segs.sort_by(|a, b| a.lo.cmp(&b.lo));
    if segs.windows(2).any(|w| w[0].hi >= w[1].lo) {
        return fail("intervals are not pairwise disjoint".into());
    }
    Ok(())
}

/// `max_{j≤J} dist(x, 2Z/N_j)·L_j`: the least `t` with `x ∈ E_t`.
pub fn truncation_level(params: &ConstructionParams, x: &CirclePoint, depth: usize) -> Rational {
    (1..=depth)
        .map(|j| line_grid_distance(x.value(), params.n_at(j)) * Rational::from_integer(params.l_at(j).clone()))
        .max()
        .unwrap_or_else(Rational::zero)
}

pub fn in_truncation(params: &ConstructionParams, x: &CirclePoint, t: &Rational, depth: usize) -> bool {
    truncation_level(params, x, depth) <= *t
}

/// Intersects `segs` with the radius-`t/L_j` neighbourhoods of `2Z/N_j` for
/// `j = 1..=depth`.
pub(crate) fn refine_segments(
    mut segs: Vec<Segment>,
    params: &ConstructionParams,
    t: &Rational,
    depth: usize,
    limit: usize,
) -> Result<Vec<Segment>> {
    for j in 1..=depth {
        let n = params.n_at(j);
        let nr = Rational::from_integer(n.clone());
        let r = t / Rational::from_integer(params.l_at(j).clone());
        if r >= Rational::one() / &nr {
            continue;
        }
        let mut next = Vec::new();
        for s in &segs {
            let lo = ((&s.lo - &r) * &nr / int(2)).ceil().to_integer();
            let hi = ((&s.hi + &r) * &nr / int(2)).floor().to_integer();
            if hi < lo {
                continue;
            }
            let span = (&hi - &lo + BigInt::one()).to_usize().filter(|c| next.len() + c <= limit).ok_or_else(|| {
                Error::StageTooLarge {
                    stage: j,
                    count: (&hi - &lo + BigInt::one()).to_string(),
                    limit,
                }
            })?;
            let mut m = lo;
            for _ in 0..span {
                let g = Rational::new(&m * 2, n.clone());
                let window = Segment {
                    lo: &g - &r,
                    hi: &g + &r,
                };
                if let Some(piece) = s.intersect(&window) {
                    next.push(piece);
                }
                m += 1;
            }
        }
        segs = next;
    }
    Ok(segs)
}

/// `E_t` cut at depth `J`: points with `dist(x, 2Z/N_j)·L_j ≤ t` for all
/// `j ≤ J`, as a family of closed segments with disjoint interiors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSet {
    #[serde(with = "crate::serde_ext::rational")]
    pub t: Rational,
    pub depth: usize,
    pub segments: Vec<Segment>,
}

impl TruncationSet {
    pub fn total_length(&self) -> Rational {
        self.segments.iter().fold(Rational::zero(), |acc, s| acc + s.length())
    }

    /// Whether a point lies in one of the materialized segments.
    pub fn covers(&self, x: &CirclePoint) -> bool {
        self.segments.iter().any(|s| s.contains(x))
    }

    /// Non-degenerate pieces as intervals.
    pub fn intervals(&self) -> Vec<RationalInterval> {
        self.segments.iter().filter(|s| s.lo < s.hi).map(|s| s.to_interval()).collect()
    }
}

pub fn truncation_set(params: &ConstructionParams, t: &Rational, depth: usize) -> Result<TruncationSet> {
    if !t.is_positive() {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    if depth > params.depth() {
        return Err(Error::InvalidArgument(format!("depth {depth} exceeds {}", params.depth())));
    }
    let segments = refine_segments(vec![Segment::full()], params, t, depth, MAX_TRUNCATION_PIECES)?;
    Ok(TruncationSet {
        t: t.clone(),
        depth,
        segments,
    })
}

/// `μ|E_t` at depth `J`. Atoms are tested pointwise; uniform parts are
/// refined inside their own support, so `E_t` is never materialized whole.
pub fn restrict_to_truncation(mu: &Measure, params: &ConstructionParams, t: &Rational, depth: usize) -> Result<Measure> {
    let mut keep = Vec::new();
    for part in mu.uniform() {
        keep.extend(refine_segments(part.interval.segments(), params, t, depth, MAX_TRUNCATION_PIECES)?);
    }
    sort_segments(&mut keep);
    keep.dedup();
    let restricted = mu.restrict_segments(&keep);
    let atoms = mu
        .atoms()
        .iter()
        .filter(|a| in_truncation(params, &a.point, t, depth))
        .cloned()
        .collect();
    Ok(Measure::with_parts(restricted.uniform().to_vec(), atoms))
}

/// Canonical centre of `2m/N`, exposed for tests and tooling.
pub fn grid_point(m: &BigInt, n: &BigInt) -> CirclePoint {
    CirclePoint::new(wrap(&Rational::new(m * 2, n.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;

    fn half() -> ConstructionParams {
        generate_sequence(&rat(1, 2), &BigInt::from(16), 3).unwrap()
    }

    /// Upward scan for the least integer satisfying the growth inequality,
    /// written directly from the exact statement (k-th powers included).
    fn scan_least(ns: &[BigInt], p: u32, q: u32, k: usize, start: BigInt) -> BigInt {
        let base = &ns[0] * pow(&BigInt::from(4), k as u64 + 2);
        let prod: BigInt = ns[..k].iter().product();
        let kq = (q as u64) * k as u64;
        let lhs = pow(&base, kq) * pow(&prod, p as u64 * k as u64);
        let mut cand = start;
        while pow(&cand, kq) <= lhs {
            cand += 1;
        }
        cand
    }

    #[test]
    fn depth_one_has_no_conditions() {
        let p = generate_sequence(&rat(1, 2), &BigInt::from(16), 1).unwrap();
        assert_eq!(p.sequence(), &[BigInt::from(16)]);
        assert_eq!(p.lengths(), &[BigInt::from(64)]);
    }

    #[test]
    fn second_term_is_4097() {
        let p = half();
        let scanned = scan_least(&p.sequence()[..1], 1, 2, 1, BigInt::from(1));
        assert_eq!(scanned, BigInt::from(4097));
        assert_eq!(p.n_at(2), &BigInt::from(4097));
        assert!(p.l_at(1) * 12 <= BigInt::from(4097));
    }

    #[test]
    fn third_term_is_rapid_growth_bound() {
        let p = half();
        // The growth bound alone gives a far smaller third term.
        let approx = (16.0f64 * 256.0 * (16.0f64 * 4097.0).sqrt()) as u64 - 1000;
        let scanned = scan_least(&p.sequence()[..2], 1, 2, 2, BigInt::from(approx));
        assert!(scanned < p.l_at(2) * 12);
        assert_eq!(p.l_at(2), &BigInt::from(262241));
        assert_eq!(p.n_at(3), &BigInt::from(3146892));
        assert_eq!(p.children_per_parent(3), BigInt::from(3));
        assert!(p.growth_holds(1) && p.growth_holds(2));
        assert!(p.product_bound_holds(3));
    }

    #[test]
    fn stage_one_and_two() {
        let p = half();
        let stages = build_stages(&p, 2).unwrap();
        let d1 = &stages[0];
        assert_eq!(d1.len(), 16);
        assert_eq!(d1.half_length, rat(1, 128));
        let mut centers: Vec<Rational> = d1.intervals.iter().map(|i| i.center.value().clone()).collect();
        centers.sort();
        let expected: Vec<Rational> = (-7..=8).map(|m| rat(2 * m, 16)).collect();
        assert_eq!(centers, expected);

        let d2 = &stages[1];
        assert_eq!(p.children_per_parent(2), BigInt::from(29));
        assert_eq!(d2.len(), 464);
        assert!(d2.children_counts(16).iter().all(|&c| c == 29));
        verify_stage(p.sequence(), p.lengths(), d1, &StageFamily::circle(), None).unwrap();
        verify_stage(p.sequence(), p.lengths(), d2, d1, Some(&BigInt::from(29))).unwrap();
        assert!(p.product_bound_holds(2));
        assert_eq!(p.stage_size(2), BigInt::from(464));
    }

    #[test]
    fn stage_three_and_size_cap() {
        let p = half();
        let stages = build_stages(&p, 3).unwrap();
        assert_eq!(stages[2].len(), 1392);
        verify_stage(p.sequence(), p.lengths(), &stages[2], &stages[1], Some(&BigInt::from(3))).unwrap();
        assert!(matches!(
            build_stage_with_limit(&p, 3, &stages[1], 1000),
            Err(Error::StageTooLarge { .. })
        ));
    }

    #[test]
    fn stage_measure_is_equidistributed() {
        let stages = build_stages(&half(), 2).unwrap();
        let mu = stage_measure(&stages[1]).unwrap();
        assert_eq!(mu.total_variation(), int(1));
        assert!(mu.uniform().iter().all(|u| u.weight == rat(1, 464)));
    }

    #[test]
    fn deterministic_build() {
        let a = build_stages(&half(), 2).unwrap();
        let b = build_stages(&half(), 2).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn window_stages_for_powers_of_four() {
        let ns: Vec<BigInt> = (1..=6).map(|j| BigInt::from(4u64.pow(j))).collect();
        let ls: Vec<BigInt> = (1..=6).map(|j| BigInt::from(16u64.pow(j))).collect();
        let stages = window_stages(&ns, &int(1), 6).unwrap();
        let mut parent = StageFamily::circle();
        for s in &stages {
            assert_eq!(s.len(), 4);
            verify_stage(&ns, &ls, s, &parent, None).unwrap();
            parent = s.clone();
        }
    }

    #[test]
    fn truncation_sets_are_monotone_and_shrink_with_depth() {
        let p = half();
        let t1 = truncation_set(&p, &rat(1, 2), 2).unwrap();
        let t2 = truncation_set(&p, &int(1), 2).unwrap();
        assert!(t1.covers(&CirclePoint::zero()));
        for s in &t1.segments {
            assert!(t2.segments.iter().any(|b| b.lo <= s.lo && s.hi <= b.hi));
        }
        // Exact length bookkeeping: level 1 alone keeps N_1 windows of width 2t/L_1.
        let one = truncation_set(&p, &rat(1, 2), 1).unwrap();
        assert_eq!(one.total_length(), rat(16, 64));
        assert!(t1.total_length() < one.total_length());

        // Every stage-2 interval lies in E_{1/2}.
        let d2 = &build_stages(&p, 2).unwrap()[1];
        for iv in &d2.intervals {
            for seg in iv.segments() {
                assert!(t1.segments.iter().any(|b| b.lo <= seg.lo && seg.hi <= b.hi));
            }
        }
    }

    #[test]
    fn truncation_level_of_offset_points() {
        let p = generate_sequence(&rat(1, 2), &BigInt::from(16), 4).unwrap();
        for t in 1..=6i64 {
            let x = CirclePoint::new(Rational::new(BigInt::from(t), p.l_at(4).clone()));
            assert_eq!(truncation_level(&p, &x, 4), int(t));
        }
    }

    #[test]
    fn restriction_to_truncation_matches_materialized_set() {
        let p = half();
        let mu = Measure::lebesgue(int(1));
        let t = rat(1, 2);
        let set = truncation_set(&p, &t, 2).unwrap();
        let r = restrict_to_truncation(&mu, &p, &t, 2).unwrap();
        assert_eq!(r.total_mass(), set.total_length() / int(2));
    }

    #[test]
    fn params_json_round_trip() {
        let p = half();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains(r#""N":["16","4097","#));
        assert_eq!(serde_json::from_str::<ConstructionParams>(&json).unwrap(), p);
        let tampered = json.replace(r#""4097""#, r#""4096""#);
        assert!(serde_json::from_str::<ConstructionParams>(&tampered).is_err());
    }

    #[test]
    fn depth_limit() {
        let r = generate_sequence_with_limit(&rat(1, 2), &BigInt::from(16), 4, Some(30));
        assert!(matches!(r, Err(Error::DepthInfeasible { index: 4, .. })));
        assert!(generate_sequence_with_limit(&rat(1, 2), &BigInt::from(16), 4, Some(40)).is_ok());
    }
}
