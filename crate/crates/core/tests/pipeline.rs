//! End-to-end runs through the public API with frozen values.

use num_bigint::BigInt;
use parisian_core::construction::verify_stage;
use parisian_core::numerics::{rat, Frequency, Rational};
use parisian_core::selection::{power_candidates, recheck_certificate};
use parisian_core::*;

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

#[test]
fn depth_three_sequence_is_frozen() {
    let p = generate_sequence(&rat(1, 2), &big(16), 3).unwrap();
    assert_eq!(p.sequence(), &[big(16), big(4097), big(3_146_892)]);
    assert_eq!(p.lengths()[..2], [big(64), big(262_241)]);
    assert_eq!(p.children_per_parent(3), big(3));
    assert_eq!(p.stage_size(3), big(1392));
}

#[test]
fn stages_verify_against_their_parents() {
    let p = generate_sequence(&rat(1, 2), &big(16), 3).unwrap();
    let stages = build_stages(&p, 3).unwrap();
    assert_eq!(stages.iter().map(StageFamily::len).collect::<Vec<_>>(), [16, 464, 1392]);
    let circle = StageFamily::circle();
    for (i, fam) in stages.iter().enumerate() {
        let parent = if i == 0 { &circle } else { &stages[i - 1] };
        verify_stage(p.sequence(), p.lengths(), fam, parent, Some(&p.children_per_parent(i + 1))).unwrap();
    }
}

#[test]
fn stage_measure_selection_certifies_against_the_measure() {
    let p = generate_sequence(&rat(1, 2), &big(16), 2).unwrap();
    let fam = build_stages(&p, 2).unwrap().pop().unwrap();
    let mu = stage_measure(&fam).unwrap();
    assert_eq!(mu.total_mass(), Rational::from_integer(big(1)));
    let opts = SelectOptions::default();
    // Powers of 4 ignore the grid D_2 was built on.
    let off_grid = select(&mu, &power_candidates(4, 40), &rat(1, 2), 2, Mode::Plain, None, &opts);
    assert!(matches!(off_grid, Err(Error::WindowViolated(_))), "{off_grid:?}");
    let own: Vec<Frequency> = p.sequence().iter().cloned().map(Frequency).collect();
    // At N = 16 the perturbation π·2w/N^δ = π/4 swamps γ/2, so only N_2 is
    // admissible and a second step has nothing left.
    let short = select(&mu, &own, &rat(1, 2), 2, Mode::Plain, None, &opts);
    assert!(matches!(short, Err(Error::NoAdmissibleCandidate)), "{short:?}");
    let cert = select(&mu, &own, &rat(1, 2), 1, Mode::Plain, None, &opts).unwrap();
    assert_eq!(cert.frequencies, [Frequency(big(4097))]);
    recheck_certificate(&mu, &cert).unwrap();
    assert!(cert.table.iter().all(|e| e.abs >= cert.lower_bound));
}

#[test]
fn artifacts_round_trip_through_json() {
    let p = generate_sequence(&rat(1, 2), &big(16), 2).unwrap();
    let back: ConstructionParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
    let fam = build_stages(&p, 1).unwrap().pop().unwrap();
    let back: StageFamily = serde_json::from_str(&serde_json::to_string(&fam).unwrap()).unwrap();
    assert_eq!(back, fam);
    let mu = stage_measure(&fam).unwrap();
    let c = coefficient(&mu, &Frequency::new(16));
    let back: Measure = serde_json::from_str(&serde_json::to_string(&mu).unwrap()).unwrap();
    assert_eq!(coefficient(&back, &Frequency::new(16)).value.to_bits_pair(), c.value.to_bits_pair());
}

trait Bits {
    fn to_bits_pair(&self) -> (u64, u64);
}

impl Bits for num_complex::Complex64 {
    fn to_bits_pair(&self) -> (u64, u64) {
        (self.re.to_bits(), self.im.to_bits())
    }
}
