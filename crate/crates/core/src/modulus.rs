//! Moduli of continuity and the Osgood integral.
//!
//! A modulus is a continuous, concave, strictly increasing map
//! `μ: [0, 1] → [0, 1]` with `μ(0) = 0`. Whether `∫₀¹ ds/μ(s)` diverges
//! (the Osgood condition) decides between backward uniqueness and the
//! explicit non-uniqueness construction in [`crate::pliss`].

use crate::quad;
use crate::report::{Relation, VerificationReport};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

const MODULE: &str = "modulus";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OsgoodClass {
    /// `∫₀¹ ds/μ = +∞`
    Divergent,
    /// `∫₀¹ ds/μ < +∞`
    Convergent,
    Unknown,
}

impl fmt::Display for OsgoodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OsgoodClass::Divergent => "Divergent",
            OsgoodClass::Convergent => "Convergent",
            OsgoodClass::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BuiltinKind {
    /// `μ(s) = s`
    Linear,
    /// `μ(s) = s (1 - ln s)`
    LogLinear,
    /// `μ(s) = s^{1/2}`
    SquareRoot,
    /// `μ(s) = s^α`, `α ∈ (0, 1)`
    Power(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulusError {
    #[error("power exponent {0} outside (0, 1)")]
    BadExponent(f64),
    #[error("unknown modulus name `{0}` (expected linear, loglinear, sqrt or power:<alpha>)")]
    UnknownName(String),
    #[error("integration floor {0} outside (0, 1)")]
    BadFloor(f64),
    #[error("claimed Osgood class {claimed} disagrees with measured {measured} (diagnostic {diagnostic})")]
    ClassMismatch {
        claimed: OsgoodClass,
        measured: OsgoodClass,
        diagnostic: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] quad::QuadError),
}

pub type ModulusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An immutable modulus of continuity with its classification metadata.
#[derive(Clone)]
pub struct Modulus {
    name: String,
    eval: ModulusFn,
    osgood_class: OsgoodClass,
    normalized: bool,
    lower_linear_constant: f64,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("name", &self.name)
            .field("osgood_class", &self.osgood_class)
            .field("normalized", &self.normalized)
            .field("lower_linear_constant", &self.lower_linear_constant)
            .finish()
    }
}

impl Modulus {
    /// A user-supplied modulus. `claimed` is what the caller asserts about the
    /// Osgood integral; pass [`OsgoodClass::Unknown`] to defer to the
    /// numerical classifier.
    pub fn custom<F>(name: &str, f: F, claimed: OsgoodClass) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mu1 = f(1.0);
        Self {
            name: name.to_string(),
            eval: Arc::new(f),
            osgood_class: claimed,
            normalized: false,
            lower_linear_constant: mu1,
        }
    }

    pub fn builtin(kind: BuiltinKind) -> Result<Self, ModulusError> {
        let (name, f, class): (String, ModulusFn, OsgoodClass) = match kind {
            BuiltinKind::Linear => ("linear".into(), Arc::new(|s| s), OsgoodClass::Divergent),
            BuiltinKind::LogLinear => (
                "loglinear".into(),
                Arc::new(|s: f64| if s <= 0.0 { 0.0 } else { s * (1.0 - s.ln()) }),
                OsgoodClass::Divergent,
            ),
            BuiltinKind::SquareRoot => (
                "sqrt".into(),
                Arc::new(|s: f64| s.max(0.0).sqrt()),
                OsgoodClass::Convergent,
            ),
            BuiltinKind::Power(alpha) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(ModulusError::BadExponent(alpha));
                }
                (
                    format!("power:{alpha}"),
                    Arc::new(move |s: f64| s.max(0.0).powf(alpha)),
                    OsgoodClass::Convergent,
                )
            }
        };
        let mu1 = f(1.0);
        Ok(Self {
            name,
            eval: f,
            osgood_class: class,
            normalized: false,
            lower_linear_constant: mu1,
        })
    }

    /// Parses `linear`, `loglinear`, `sqrt` or `power:<alpha>`.
    pub fn from_name(name: &str) -> Result<Self, ModulusError> {
        let lower = name.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "linear" => BuiltinKind::Linear,
            "loglinear" | "log-linear" => BuiltinKind::LogLinear,
            "sqrt" | "squareroot" => BuiltinKind::SquareRoot,
            other => {
                let alpha = other
                    .strip_prefix("power:")
                    .or_else(|| other.strip_prefix("power="))
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| ModulusError::UnknownName(name.to_string()))?;
                BuiltinKind::Power(alpha)
            }
        };
        Self::builtin(kind)
    }

    pub fn builtin_names() -> Vec<&'static str> {
        vec!["linear", "loglinear", "sqrt", "power:<alpha>"]
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn osgood_class(&self) -> OsgoodClass {
        self.osgood_class
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// A constant `c > 0` with `μ(s) >= c s` on `[0, 1]`.
    pub fn lower_linear_constant(&self) -> f64 {
        self.lower_linear_constant
    }
}

/// Log-spaced samples in `[lo, 1]`, ending exactly at 1.
pub(crate) fn log_samples(lo: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), 0.0_f64);
    let mut v: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    v[n - 1] = 1.0;
    v
}

/// Replaces `μ` by `s ↦ min(μ(s), s^{1/2})`.
pub fn normalize_sqrt_cap(mu: &Modulus) -> Modulus {
    let inner = mu.eval.clone();
    let f: ModulusFn = Arc::new(move |s: f64| inner(s).min(s.max(0.0).sqrt()));
    let samples = log_samples(1e-12, 512);
    let inf = samples
        .iter()
        .map(|&s| f(s) / s)
        .fold(f64::INFINITY, f64::min);
    // keep μ(s) >= c s strict under rounding
    let guard = mu.eval(1.0) * 1e-12;
    let lower = (inf * (1.0 - 1e-12)).max(guard);
    Modulus {
        name: if mu.normalized {
            mu.name.clone()
        } else {
            format!("{}|sqrt-cap", mu.name)
        },
        eval: f,
        osgood_class: mu.osgood_class,
        normalized: true,
        lower_linear_constant: lower,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailModel {
    /// dyadic increments are (nearly) constant
    Flat,
    /// increments decay geometrically in the dyadic index
    Geometric,
    /// increments decay like a power of the dyadic index
    PowerLaw,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsgoodIntegral {
    /// `∫_{floor}^{1} ds/μ(s)`
    pub value: f64,
    pub abs_err: f64,
    pub classification: OsgoodClass,
    /// slope of the fitted tail model (log-increment per dyadic step for
    /// `Geometric`/`Flat`, power exponent for `PowerLaw`)
    pub diagnostic: f64,
    pub model: TailModel,
    /// `∫_{2^{-k}}^{2^{1-k}} ds/μ` for `k = 1..=K`
    pub dyadic_increments: Vec<f64>,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (icpt + slope * a - b).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icpt, rms)
}

/// Classifies the tail of the dyadic increments `d_k`.
///
/// Two models are fitted on the second half of the increments:
/// `ln d_k ≈ a + b k` (geometric) and `ln d_k ≈ a - p ln k` (power law).
/// A flat geometric fit means the partial sums grow linearly in `k`.
fn classify_increments(d: &[f64]) -> (OsgoodClass, f64, TailModel) {
    let k_total = d.len();
    let start = k_total / 2;
    if k_total - start < 4 || d.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
        return (OsgoodClass::Unknown, f64::NAN, TailModel::Undetermined);
    }
    let ks: Vec<f64> = (start + 1..=k_total).map(|k| k as f64).collect();
    let logs: Vec<f64> = d[start..].iter().map(|v| v.ln()).collect();
    let log_ks: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (geo_slope, _, geo_rms) = least_squares(&ks, &logs);
    let (pow_slope, _, pow_rms) = least_squares(&log_ks, &logs);
    let p = -pow_slope;

    if geo_slope > -1e-6 && geo_rms < 1e-6 {
        return (OsgoodClass::Divergent, geo_slope, TailModel::Flat);
    }
    if geo_rms <= 0.1 * pow_rms {
        let class = if geo_slope < 0.0 {
            OsgoodClass::Convergent
        } else {
            OsgoodClass::Divergent
        };
        return (class, geo_slope, TailModel::Geometric);
    }
    if pow_rms <= 0.1 * geo_rms {
        let class = if p <= 1.05 {
            OsgoodClass::Divergent
        } else if p >= 1.2 {
            OsgoodClass::Convergent
        } else {
            OsgoodClass::Unknown
        };
        return (class, p, TailModel::PowerLaw);
    }
    (OsgoodClass::Unknown, geo_slope, TailModel::Undetermined)
}

/// Integrates `1/μ` on `[eps_floor, 1]` panel by dyadic panel and
/// classifies the Osgood integral from the panel increments.
pub fn osgood_integral(mu: &Modulus, eps_floor: f64) -> Result<OsgoodIntegral, ModulusError> {
    if !(eps_floor > 0.0 && eps_floor < 1.0) {
        return Err(ModulusError::BadFloor(eps_floor));
    }
    let k_max = (1.0 / eps_floor).log2().floor() as usize;
    let panel_tol = 1e-9 / (k_max as f64 + 2.0);
    let inv = |s: f64| 1.0 / mu.eval(s);
    let mut increments = Vec::with_capacity(k_max);
    let mut abs_err = 0.0;
    for k in 1..=k_max {
        let lo = 0.5_f64.powi(k as i32);
        let r = quad::integrate(inv, lo, 2.0 * lo, panel_tol, 1e-14)?;
        increments.push(r.value);
        abs_err += r.abs_err;
    }
    let last = 0.5_f64.powi(k_max as i32);
    let rest = quad::integrate(inv, eps_floor, last, panel_tol, 1e-14)?;
    abs_err += rest.abs_err;
    // small terms first
    let value = increments.iter().rev().fold(rest.value, |acc, v| acc + v);

    let (measured, diagnostic, model) = classify_increments(&increments);
    let claimed = mu.osgood_class();
    if claimed != OsgoodClass::Unknown && measured != claimed {
        return Err(ModulusError::ClassMismatch {
            claimed,
            measured,
            diagnostic,
        });
    }
    Ok(OsgoodIntegral {
        value,
        abs_err,
        classification: measured,
        diagnostic,
        model,
        dyadic_increments: increments,
    })
}

/// Checks the defining properties of a modulus and the monotonicity
/// consequences of concavity on log-spaced samples.
pub fn check_concavity_consequences(mu: &Modulus, sample_count: usize) -> VerificationReport {
    const TOL: f64 = 1e-10;
    let n = sample_count.max(16);
    let s = log_samples(1e-12, n);
    let v: Vec<f64> = s.iter().map(|&x| mu.eval(x)).collect();
    let mu1 = mu.eval(1.0);
    let mut rep = VerificationReport::new();

    let mu0 = mu.eval(0.0).abs();
    rep.check(MODULE, "mu_at_zero", "modulus-definition", mu0, Relation::AtMost, TOL);
    rep.check(MODULE, "mu_at_one", "modulus-definition", mu1, Relation::AtMost, 1.0 + TOL);

    let mono = v
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[1].abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, "strictly_increasing", "modulus-definition", mono, Relation::Below, 0.0)
        .then_some(())
        .unwrap_or(());
    rep.detail("worst_relative_step", mono);

    let mut concave = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            for lam in [0.25, 0.5, 0.75] {
                let x = lam * s[i] + (1.0 - lam) * s[j];
                let chord = lam * v[i] + (1.0 - lam) * v[j];
                let m = mu.eval(x);
                concave = concave.max((chord - m) / m.abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    rep.check(MODULE, "concave", "modulus-definition", concave, Relation::AtMost, TOL);

    let below_chord = s
        .iter()
        .zip(&v)
        .map(|(&x, &m)| (x * mu1 - m) / m.abs().max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, "above_linear_chord", "concavity-consequence", below_chord, Relation::AtMost, TOL);

    let ratios: Vec<f64> = s.iter().zip(&v).map(|(&x, &m)| m / x).collect();
    // s increasing: μ(s)/s must not increase
    let ratio_rise = ratios
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, "ratio_nonincreasing", "concavity-consequence", ratio_rise, Relation::AtMost, TOL);

    // σ = 1/s decreasing along the sample order
    let scaled: Vec<f64> = s.iter().zip(&v).map(|(&x, &m)| m / (x * x)).collect();
    let scaled_drop = scaled
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, "sigma_sq_mu_nondecreasing", "concavity-consequence", scaled_drop, Relation::AtMost, TOL);

    // dyadic form of the ratio monotonicity: 2^k μ(2^{-k}) non-decreasing in k
    let chain: Vec<f64> = (0..=40)
        .map(|k| 2f64.powi(k) * mu.eval(0.5f64.powi(k)))
        .collect();
    let chain_drop = chain
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, "dyadic_ratio_chain", "concavity-consequence", chain_drop, Relation::AtMost, TOL);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn m(kind: BuiltinKind) -> Modulus {
        Modulus::builtin(kind).unwrap()
    }

    #[test]
    fn builtin_values() {
        assert_eq!(m(BuiltinKind::Linear).eval(0.25), 0.25);
        assert_eq!(m(BuiltinKind::SquareRoot).eval(0.25), 0.5);
        let ll = m(BuiltinKind::LogLinear).eval(1.0 / E);
        assert!((ll - 2.0 / E).abs() < 1e-15);
        assert!((ll - 0.73576).abs() < 1e-5);
        assert_eq!(m(BuiltinKind::LogLinear).eval(0.0), 0.0);
    }

    #[test]
    fn power_exponent_is_validated() {
        for a in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                Modulus::builtin(BuiltinKind::Power(a)),
                Err(ModulusError::BadExponent(_))
            ));
        }
        assert!(Modulus::builtin(BuiltinKind::Power(0.3)).is_ok());
    }

    #[test]
    fn names_parse() {
        assert_eq!(Modulus::from_name("sqrt").unwrap().name(), "sqrt");
        assert_eq!(Modulus::from_name("power:0.75").unwrap().name(), "power:0.75");
        assert!(Modulus::from_name("cubic").is_err());
        assert!(Modulus::from_name("power:2").is_err());
    }

    #[test]
    fn osgood_values_and_classes() {
        let r = osgood_integral(&m(BuiltinKind::SquareRoot), 1e-12).unwrap();
        assert!((r.value - (2.0 - 2e-6)).abs() < 1e-8);
        assert_eq!(r.classification, OsgoodClass::Convergent);

        let r = osgood_integral(&m(BuiltinKind::Linear), 1e-12).unwrap();
        assert!((r.value - 1e12_f64.ln()).abs() < 1e-8);
        assert!((r.value - 27.631).abs() < 1e-3);
        assert_eq!(r.classification, OsgoodClass::Divergent);

        let r = osgood_integral(&m(BuiltinKind::LogLinear), 1e-12).unwrap();
        let exact = (1.0 - 1e-12_f64.ln()).ln();
        assert!((r.value - exact).abs() < 1e-8);
        assert!((r.value - 3.35449).abs() < 1e-5);
        assert_eq!(r.classification, OsgoodClass::Divergent);
    }

    #[test]
    fn power_moduli_classify_convergent() {
        for a in [0.1, 0.5, 0.75, 0.9, 0.97] {
            let r = osgood_integral(&m(BuiltinKind::Power(a)), 1e-12).unwrap();
            assert_eq!(r.classification, OsgoodClass::Convergent, "alpha={a}");
            let exact = (1.0 - 1e-12_f64.powf(1.0 - a)) / (1.0 - a);
            assert!((r.value - exact).abs() < 1e-8 * exact.max(1.0), "alpha={a}");
        }
    }

    #[test]
    fn custom_modulus_gets_measured_class() {
        // s (1 - ln s)^2 is Osgood-convergent: ∫ ds/(s(1-ln s)^2) = 1 - 1/(1 - ln ε)
        let mu = Modulus::custom(
            "slog2",
            |s: f64| if s <= 0.0 { 0.0 } else { s * (1.0 - s.ln()).powi(2) },
            OsgoodClass::Unknown,
        );
        let r = osgood_integral(&mu, 1e-12).unwrap();
        assert_eq!(r.classification, OsgoodClass::Convergent);
        assert_eq!(r.model, TailModel::PowerLaw);
    }

    #[test]
    fn mismatched_claim_errors() {
        let mu = Modulus::custom("lying-linear", |s| s, OsgoodClass::Convergent);
        assert!(matches!(
            osgood_integral(&mu, 1e-12),
            Err(ModulusError::ClassMismatch { .. })
        ));
        assert!(matches!(osgood_integral(&mu, 1.5), Err(ModulusError::BadFloor(_))));
    }

    #[test]
    fn concavity_checks_pass_for_builtins() {
        for kind in [
            BuiltinKind::Linear,
            BuiltinKind::SquareRoot,
            BuiltinKind::LogLinear,
            BuiltinKind::Power(0.3),
        ] {
            let rep = check_concavity_consequences(&m(kind), 64);
            assert!(rep.all_passed(), "{kind:?}: {:?}", rep.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn concavity_checks_flag_a_convex_function() {
        let mu = Modulus::custom("square", |s| s * s, OsgoodClass::Unknown);
        let rep = check_concavity_consequences(&mu, 32);
        assert!(!rep.row("concave").unwrap().passed);
        assert!(!rep.row("ratio_nonincreasing").unwrap().passed);
    }

    #[test]
    fn sqrt_cap_examples() {
        let sq = normalize_sqrt_cap(&m(BuiltinKind::SquareRoot));
        assert!(sq.is_normalized());
        for s in [0.0, 1e-6, 0.25, 1.0] {
            assert_eq!(sq.eval(s), s.sqrt());
        }
        let p = normalize_sqrt_cap(&m(BuiltinKind::Power(0.8)));
        assert!((p.eval(0.01) - 0.01_f64.powf(0.8)).abs() < 1e-16);
        assert!((p.eval(0.01) - 0.02512).abs() < 1e-5);
        let lin = normalize_sqrt_cap(&m(BuiltinKind::Linear));
        assert_eq!(lin.eval(0.25), 0.25);
        assert!(lin.lower_linear_constant() > 0.999 && lin.lower_linear_constant() <= 1.0);
    }
}
