use std::fmt;

use anyhow::{bail, Context, Result};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use parisian_core::construction::{generate_sequence_with_limit, verify_stage, StageFamily};
use parisian_core::numerics::{Frequency, Rational};
use parisian_core::riesz::{density_quadrature, is_dissociate, omega_to_csv, riesz_coefficient_exact};
use parisian_core::selection::{power_candidates, recheck_certificate, SelectOptions, DEFAULT_SHIFT_RADIUS};
use parisian_core::{
    audit_stage, build_stages, coefficients_batch, fourier, omega as enumerate_omega, reports_to_csv, select as run_select,
    stage_measure, verify, ConstructionParams, Error, LacunarySequence, Measure,
};
use serde_json::Value;

use crate::artifact::{csv_artifact, emit, json_artifact, load, Provenance};
use crate::{
    BuildArgs, DimAuditArgs, Exact, FourierArgs, Frequencies, GenSeqArgs, Int, OmegaArgs, RieszArgs, SelectArgs,
    SelfTestArgs,
};

/// A failed check, as opposed to bad input.
#[derive(Debug)]
pub struct VerificationFailure(pub String);

impl fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailure {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerificationFailure>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::VerificationFailed(_)
            | Error::NoAdmissibleCandidate
            | Error::WindowViolated(_)
            | Error::ShiftSearchFailed(_)
            | Error::VanishingCoefficient(_)
            | Error::TruncationSearchFailed(_),
        ) => 1,
        _ => 2,
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn stage_or_depth(stage: Option<usize>, params: &ConstructionParams) -> Result<usize> {
    let k = stage.unwrap_or(params.depth());
    if k == 0 || k > params.depth() {
        bail!(Error::InvalidArgument(format!("stage {k} outside 1..={}", params.depth())));
    }
    Ok(k)
}

impl Frequencies {
    fn resolve(&self) -> Result<Vec<Frequency>> {
        match (&self.from, &self.to) {
            (Some(lo), Some(hi)) if self.list.is_empty() => {
                let count = (&hi.0 - &lo.0).to_i64().filter(|c| (0..=10_000_000).contains(c));
                let Some(count) = count else {
                    bail!(Error::InvalidArgument("--from/--to must span 1..=10^7 frequencies".into()));
                };
                Ok((0..=count).map(|i| Frequency(&lo.0 + i)).collect())
            }
            (None, None) if !self.list.is_empty() => Ok(self.list.iter().map(|n| Frequency(n.0.clone())).collect()),
            _ => bail!(Error::InvalidArgument("give either --freq or both --from and --to".into())),
        }
    }
}

fn big(xs: &[Int]) -> Vec<BigInt> {
    xs.iter().map(|x| x.0.clone()).collect()
}

pub fn gen_seq(a: &GenSeqArgs) -> Result<()> {
    let params = generate_sequence_with_limit(&a.alpha.0, &a.n1.0, a.depth, a.max_bits)?;
    let prov = Provenance::new("gen-seq", a);
    emit(a.out.as_ref(), &json_artifact(&prov, vec![("params", to_value(&params)?)])?)
}

pub fn build(a: &BuildArgs) -> Result<()> {
    let params: ConstructionParams = load(&a.params, "params")?;
    let k = stage_or_depth(a.stage, &params)?;
    let stages = build_stages(&params, k)?;
    let circle = StageFamily::circle();
    for (i, family) in stages.iter().enumerate() {
        let parent = if i == 0 { &circle } else { &stages[i - 1] };
        let m = params.children_per_parent(i + 1);
        verify_stage(params.sequence(), params.lengths(), family, parent, Some(&m))?;
    }
    let prov = Provenance::new("build", a);
    let doc = json_artifact(&prov, vec![("params", to_value(&params)?), ("stages", to_value(&stages)?)])?;
    emit(a.out.as_ref(), &doc)?;
    if let Some(path) = &a.summary {
        emit(Some(path), &csv_artifact(&prov, &[], &params.summary_csv(k)?)?)?;
    }
    if let Some(path) = &a.measure_out {
        let mu = stage_measure(stages.last().expect("k ≥ 1"))?;
        emit(Some(path), &json_artifact(&prov, vec![("measure", to_value(&mu)?)])?)?;
    }
    Ok(())
}

pub fn fourier(a: &FourierArgs) -> Result<()> {
    let mu: Measure = load(&a.measure, "measure")?;
    let ns = a.freqs.resolve()?;
    let coeffs = coefficients_batch(&mu, &ns);
    let prov = Provenance::new("fourier", a);
    emit(a.out.as_ref(), &csv_artifact(&prov, &[], &fourier::to_csv(&coeffs)?)?)
}

fn sequence(terms: &[Int], amplitudes: &[Exact]) -> Result<LacunarySequence> {
    let seq = if amplitudes.is_empty() {
        LacunarySequence::with_unit_amplitudes(big(terms))?
    } else {
        LacunarySequence::new(big(terms), amplitudes.iter().map(|x| x.0.clone()).collect())?
    };
    Ok(seq)
}

pub fn omega(a: &OmegaArgs) -> Result<()> {
    let seq = sequence(&a.terms, &[])?;
    let depth = a.depth.unwrap_or(seq.len());
    let points = enumerate_omega(&seq, depth)?;
    let dissociate = is_dissociate(&seq, depth)?;
    if !dissociate {
        eprintln!("note: sequence is not dissociate up to depth {depth}");
    }
    let prov = Provenance::new("omega", a);
    let extra = [format!("dissociate: {dissociate}")];
    emit(a.out.as_ref(), &csv_artifact(&prov, &extra, &omega_to_csv(&points, depth)?)?)
}

pub fn riesz(a: &RieszArgs) -> Result<()> {
    let seq = sequence(&a.terms, &a.amplitudes)?;
    let depth = a.depth.unwrap_or(seq.len());
    let ns = a.freqs.resolve()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "exact", "value", "quad_re", "quad_im", "abs_err"])?;
    let mut failures = Vec::new();
    for n in &ns {
        let exact: Rational = riesz_coefficient_exact(&seq, n, depth)?;
        let value = exact.to_f64().unwrap_or(f64::NAN);
        let quad = density_quadrature(&seq, depth, n)?;
        let err = (quad - value).norm();
        if err.is_nan() || err > a.tol {
            failures.push(n.to_string());
        }
        w.write_record([
            n.to_string(),
            exact.to_string(),
            value.to_string(),
            quad.re.to_string(),
            quad.im.to_string(),
            err.to_string(),
        ])?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)?;
    let prov = Provenance::new("riesz", a);
    emit(a.out.as_ref(), &csv_artifact(&prov, &[], &body)?)?;
    if !failures.is_empty() {
        bail!(VerificationFailure(format!(
            "quadrature differs by more than {} at n = {}",
            a.tol,
            failures.join(", ")
        )));
    }
    Ok(())
}

pub fn select(a: &SelectArgs) -> Result<()> {
    let mu: Measure = load(&a.measure, "measure")?;
    let params: Option<ConstructionParams> = a.params.as_ref().map(|p| load(p, "params")).transpose()?;
    let delta = match (&a.delta, &params) {
        (Some(d), _) => d.0.clone(),
        (None, Some(p)) => p.delta().clone(),
        (None, None) => bail!(Error::InvalidArgument("--delta or --params is required".into())),
    };
    let candidates: Vec<Frequency> = match (&a.candidates[..], a.candidate_base, &params) {
        ([], Some(base), _) => power_candidates(base, a.candidate_count),
        ([], None, Some(p)) => p.sequence().iter().cloned().map(Frequency).collect(),
        ([], None, None) => bail!(Error::InvalidArgument(
            "give --candidates, --candidate-base or --params".into()
        )),
        (list, None, _) => list.iter().map(|n| Frequency(n.0.clone())).collect(),
        (_, Some(_), _) => bail!(Error::InvalidArgument(
            "--candidates and --candidate-base are exclusive".into()
        )),
    };
    let options = SelectOptions {
        shift_radius: a.shift_radius.unwrap_or(DEFAULT_SHIFT_RADIUS),
        shift_threshold: a.shift_threshold,
    };
    let cert = run_select(&mu, &candidates, &delta, a.depth, a.mode, params.as_ref(), &options)?;
    recheck_certificate(&mu, &cert).context("certificate does not reproduce")?;
    let prov = Provenance::new("select", a);
    emit(a.out.as_ref(), &json_artifact(&prov, vec![("certificate", to_value(&cert)?)])?)?;
    if let Some(path) = &a.table {
        emit(Some(path), &csv_artifact(&prov, &[], &cert.table_csv()?)?)?;
    }
    Ok(())
}

pub fn dim_audit(a: &DimAuditArgs) -> Result<()> {
    let params: ConstructionParams = load(&a.params, "params")?;
    let k = stage_or_depth(a.stage, &params)?;
    let stages = build_stages(&params, k)?;
    let family = &stages[k - 1];
    let mu = stage_measure(family)?;
    let finest = match &a.finest {
        Some(f) => f.0.clone(),
        None => Rational::new(BigInt::from(1), params.n_at(k).clone()),
    };
    let exponents: Vec<Rational> = a.s.iter().map(|s| s.0.clone()).collect();
    let reports = audit_stage(&params, family, &mu, &exponents, &finest)?;
    let prov = Provenance::new("dim-audit", a);
    emit(a.out.as_ref(), &json_artifact(&prov, vec![("reports", to_value(&reports)?)])?)?;
    if let Some(path) = &a.csv {
        emit(Some(path), &csv_artifact(&prov, &[], &reports_to_csv(&reports)?)?)?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.s.to_string()).collect();
    if !failed.is_empty() {
        bail!(VerificationFailure(format!("mass bound fails for s = {}", failed.join(", "))));
    }
    Ok(())
}

pub fn self_test(a: &SelfTestArgs) -> Result<()> {
    let ids: Vec<u8> = if a.criteria.is_empty() {
        verify::CRITERIA.to_vec()
    } else {
        a.criteria.clone()
    };
    let mut failed = Vec::new();
    for id in ids {
        let report = verify::run(id)?;
        println!("{report}");
        if !report.passed() {
            failed.push(id.to_string());
        }
    }
    if !failed.is_empty() {
        bail!(VerificationFailure(format!("criteria {} failed", failed.join(", "))));
    }
    Ok(())
}
