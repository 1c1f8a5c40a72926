//! The full desk-scale verification suite, merged into one report.
//!
//! Every stochastic check draws from a generator seeded by
//! [`SuiteConfig::seed`], and the merged rows are ordered by
//! `(module, check_id)`, so a fixed configuration yields identical report
//! bytes on every run.

use crate::carleman::{verify_carleman, CarlemanError};
use crate::dyadic::{probe_commutator_bound, verify_lp, CommutatorProbeConfig, DyadicError};
use crate::modulus::{check_concavity_consequences, osgood_integral, BuiltinKind, Modulus, ModulusError, OsgoodClass};
use crate::mollify::{dyadic_eps, verify_mollifier_bounds, MollifierKernel, MollifyError, MollifyFamily};
use crate::pliss::{verify_cmu_regularity, verify_conditions, verify_pde, Orientation, PdeCheckConfig, PlissConstruction, PlissError};
use crate::report::{merge, Relation, ReportError, VerificationReport};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Carleman(#[from] CarlemanError),
    #[error(transparent)]
    Dyadic(#[from] DyadicError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
    #[error(transparent)]
    Pliss(#[from] PlissError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// random fields per Littlewood–Paley resolution
    pub lp_fields: usize,
    /// `ε ∈ {2^{-hi}, …, 2^{-lo}}` for the mollifier sweep
    pub eps_exponents: (i32, i32),
    pub pliss_segments: usize,
    pub pde: PdeCheckConfig,
    pub regularity_pairs: usize,
}

impl SuiteConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            seed,
            lp_fields: 50,
            eps_exponents: (4, 14),
            pliss_segments: 200,
            pde: PdeCheckConfig {
                seed,
                ..PdeCheckConfig::default()
            },
            regularity_pairs: 100_000,
        }
    }
}

pub fn builtin_moduli() -> Vec<Modulus> {
    [BuiltinKind::Linear, BuiltinKind::LogLinear, BuiltinKind::SquareRoot, BuiltinKind::Power(0.75)]
        .into_iter()
        .map(|k| Modulus::builtin(k).expect("builtin moduli are valid"))
        .collect()
}

/// Concavity consequences and Osgood classification for every builtin.
pub fn modulus_checks() -> Result<VerificationReport, SuiteError> {
    let mut rep = VerificationReport::new();
    for mu in builtin_moduli() {
        let mut own = check_concavity_consequences(&mu, 64);
        for row in &mut own.rows {
            row.check_id = format!("{}_{}", row.check_id, mu.name());
        }
        rep.extend(own);
        let oi = osgood_integral(&mu, 1e-12)?;
        rep.flag(
            "modulus",
            &format!("osgood_class_{}", mu.name()),
            "osgood-condition",
            oi.classification == mu.osgood_class() && oi.classification != OsgoodClass::Unknown,
        );
        rep.detail("integral", oi.value).detail("diagnostic", oi.diagnostic);
        if mu.name() == "sqrt" {
            rep.check(
                "modulus",
                "osgood_integral_sqrt",
                "osgood-condition",
                (oi.value - (2.0 - 2e-6)).abs(),
                Relation::AtMost,
                1e-8,
            );
        }
    }
    Ok(rep)
}

pub fn lp_checks(cfg: &SuiteConfig) -> Result<VerificationReport, SuiteError> {
    let mut rep = verify_lp(cfg.seed, 1, 1024, cfg.lp_fields)?;
    rep.extend(verify_lp(cfg.seed, 2, 256, cfg.lp_fields)?);
    rep.extend(probe_commutator_bound(&CommutatorProbeConfig::standard())?);
    Ok(rep)
}

pub fn mollifier_checks(cfg: &SuiteConfig) -> Result<VerificationReport, SuiteError> {
    let mu = Modulus::builtin(BuiltinKind::SquareRoot)?;
    let kernel = MollifierKernel::standard();
    let eps = dyadic_eps(cfg.eps_exponents.0, cfg.eps_exponents.1);
    let mut rep = VerificationReport::new();
    for family in [
        MollifyFamily::Sawtooth,
        MollifyFamily::PlissL {
            segments: cfg.pliss_segments,
        },
    ] {
        rep.extend(verify_mollifier_bounds(&family, &mu, &kernel, &eps)?);
    }
    Ok(rep)
}

pub fn pliss_checks(cfg: &SuiteConfig) -> Result<VerificationReport, SuiteError> {
    let mu = Modulus::builtin(BuiltinKind::SquareRoot)?;
    let pc = PlissConstruction::new(&mu, None, Some(cfg.pliss_segments), Orientation::ConstructionTime)?;
    let mut rep = verify_conditions(&pc);
    rep.extend(verify_pde(&pc, &cfg.pde));
    rep.extend(verify_cmu_regularity(&pc, cfg.regularity_pairs, cfg.seed));
    Ok(rep)
}

/// Runs every module's checks and merges them.
pub fn run_suite(cfg: &SuiteConfig) -> Result<VerificationReport, SuiteError> {
    let parts = vec![
        modulus_checks()?,
        verify_carleman(cfg.seed)?,
        lp_checks(cfg)?,
        mollifier_checks(cfg)?,
        pliss_checks(cfg)?,
    ];
    Ok(merge(parts)?.with_provenance(cfg.seed, cfg))
}

pub fn run_all(seed: u64) -> Result<VerificationReport, SuiteError> {
    run_suite(&SuiteConfig::standard(seed))
}
