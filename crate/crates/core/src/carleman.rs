//! Carleman weight functions and a numerical probe of the weighted estimate.
//!
//! For an Osgood-divergent modulus `μ`,
//!
//! ```text
//! φ(t) = ∫_{1/t}^{1} ds/μ(s),   t ≥ 1,
//! Φ(τ) = ∫_0^τ φ⁻¹(s) ds,      Φ'' = (Φ')² μ(1/Φ').
//! ```
//!
//! Both functions are tabulated in the variable `x = ln t`, where
//! `dφ/dx = 1/(e^x μ(e^{-x}))` and, along the curve `τ = φ(t)`,
//! `dΦ/dx = 1/μ(e^{-x})`. Node values come from cumulative Gauss–Kronrod
//! quadrature; between nodes both are cubic Hermite interpolants using the
//! exact nodal slopes, so the table is exact for `μ(s) = s` up to the
//! interpolation of `e^x`.

use crate::dyadic::{CoefficientMatrix, DyadicError, GridField};
use crate::modulus::{Modulus, OsgoodClass};
use crate::quad::{self, QuadError};
use crate::report::{Relation, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

const MODULE: &str = "carleman";
/// Largest exponent whose `exp` is finite in `f64`.
const MAX_EXPONENT: f64 = 709.78;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarlemanError {
    #[error("weight functions need an Osgood-divergent modulus, `{name}` is {class}")]
    NotDivergent { name: String, class: OsgoodClass },
    #[error("t_max = {0} must be at least 2")]
    BadRange(f64),
    #[error("tau = {tau} outside the tabulated range [0, {tau_max}]")]
    TableRange { tau: f64, tau_max: f64 },
    #[error("weight exponent {exponent} overflows f64")]
    ExponentOverflow { exponent: f64 },
    #[error("time t = {t} outside [0, {horizon}]")]
    BadTime { t: f64, horizon: f64 },
    #[error("gamma must be positive, got {0}")]
    BadGamma(f64),
    #[error("weight identity residual {residual:e} exceeds {tol:e} after node refinement")]
    IdentityResidual { residual: f64, tol: f64 },
    #[error("table has no Φ column; call build_Phi first")]
    NotAugmented,
    #[error("probe configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Grid(#[from] DyadicError),
    #[error("i/o: {0}")]
    Io(String),
}

/// Nodes per unit of `ln t` for the first build attempt.
pub const DEFAULT_NODES_PER_UNIT: usize = 64;
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WeightTable {
    mu: Modulus,
    t_max: f64,
    quad_tol: f64,
    xs: Vec<f64>,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    big_phi: Option<Vec<f64>>,
    dbig: Vec<f64>,
    tau_max: f64,
    identity_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValues {
    pub tau: f64,
    /// `Φ(τ)`
    pub value: f64,
    /// `Φ'(τ) = φ⁻¹(τ)`
    pub d1: f64,
    /// `Φ''(τ) = (Φ')² μ(1/Φ')`
    pub d2: f64,
}

#[inline]
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

#[inline]
fn hermite_slope(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    (6.0 * s2 - 6.0 * s) / h * y0
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (-6.0 * s2 + 6.0 * s) / h * y1
        + (3.0 * s2 - 2.0 * s) * d1
}

impl WeightTable {
    pub fn modulus(&self) -> &Modulus {
        &self.mu
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn node_count(&self) -> usize {
        self.xs.len()
    }

    pub fn interpolation(&self) -> &'static str {
        "cubic-hermite-in-ln-t"
    }

    /// Worst relative residual of the `Φ''` identity found at build time.
    pub fn identity_residual(&self) -> Option<f64> {
        self.identity_residual
    }

    pub fn is_augmented(&self) -> bool {
        self.big_phi.is_some()
    }

    fn dphi_dx(mu: &Modulus, x: f64) -> f64 {
        1.0 / (x.exp() * mu.eval((-x).exp()))
    }

    fn dbig_dx(mu: &Modulus, x: f64) -> f64 {
        1.0 / mu.eval((-x).exp())
    }

    fn cell(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&v| v <= x);
        i.clamp(1, self.xs.len() - 1) - 1
    }

    /// Interpolated `φ(t)` for `1 <= t <= t_max`.
    pub fn phi_at(&self, t: f64) -> Result<f64, CarlemanError> {
        if !(1.0..=self.t_max * (1.0 + 1e-15)).contains(&t) {
            return Err(CarlemanError::BadRange(t));
        }
        let x = t.ln().min(*self.xs.last().unwrap());
        let i = self.cell(x);
        Ok(hermite(
            self.xs[i],
            self.xs[i + 1],
            self.phi[i],
            self.phi[i + 1],
            self.dphi[i],
            self.dphi[i + 1],
            x,
        ))
    }

    /// Solves `φ(e^x) = τ` for `x`, returning `(x, cell)`.
    fn invert_x(&self, tau: f64) -> Result<(f64, usize), CarlemanError> {
        if !(tau >= 0.0 && tau <= self.tau_max) {
            return Err(CarlemanError::TableRange {
                tau,
                tau_max: self.tau_max,
            });
        }
        if tau == 0.0 {
            return Ok((0.0, 0));
        }
        let i = (self.phi.partition_point(|&v| v <= tau)).clamp(1, self.phi.len() - 1) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.phi[i], self.phi[i + 1]);
        let (d0, d1) = (self.dphi[i], self.dphi[i + 1]);
        if tau == y1 {
            return Ok((x1, i));
        }
        let (mut lo, mut hi) = (x0, x1);
        let mut x = x0 + (x1 - x0) * (tau - y0) / (y1 - y0);
        for _ in 0..100 {
            let f = hermite(x0, x1, y0, y1, d0, d1, x) - tau;
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = hermite_slope(x0, x1, y0, y1, d0, d1, x);
            let mut next = x - f / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                x = next;
                break;
            }
            x = next;
        }
        Ok((x, i))
    }

    /// `Φ(τ)`, `Φ'(τ)` and `Φ''(τ)`; the second derivative is taken from
    /// the identity `Φ'' = (Φ')² μ(1/Φ')`.
    pub fn big_phi_at(&self, tau: f64) -> Result<PhiValues, CarlemanError> {
        let big = self.big_phi.as_ref().ok_or(CarlemanError::NotAugmented)?;
        let (x, i) = self.invert_x(tau)?;
        let value = if tau == 0.0 {
            0.0
        } else {
            hermite(
                self.xs[i],
                self.xs[i + 1],
                big[i],
                big[i + 1],
                self.dbig[i],
                self.dbig[i + 1],
                x,
            )
        };
        let t = x.exp();
        Ok(PhiValues {
            tau,
            value,
            d1: t,
            d2: t * t * self.mu.eval(1.0 / t),
        })
    }
}

fn node_grid(t_max: f64, per_unit: usize) -> Vec<f64> {
    let xmax = t_max.ln();
    let cells = ((xmax * per_unit as f64).ceil() as usize).max(8);
    let mut xs: Vec<f64> = (0..=cells).map(|i| xmax * i as f64 / cells as f64).collect();
    xs[cells] = xmax;
    xs
}

fn tabulate_phi(
    mu: &Modulus,
    t_max: f64,
    quad_tol: f64,
    per_unit: usize,
) -> Result<WeightTable, CarlemanError> {
    let xs = node_grid(t_max, per_unit);
    let cells = xs.len() - 1;
    let panel_tol = quad_tol / cells as f64;
    let f = |x: f64| WeightTable::dphi_dx(mu, x);
    let mut phi = Vec::with_capacity(xs.len());
    phi.push(0.0);
    for w in xs.windows(2) {
        let r = quad::integrate(f, w[0], w[1], panel_tol, 1e-14)?;
        phi.push(phi.last().unwrap() + r.value);
    }
    let dphi: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let dbig: Vec<f64> = xs.iter().map(|&x| WeightTable::dbig_dx(mu, x)).collect();
    let tau_max = *phi.last().unwrap();
    Ok(WeightTable {
        mu: mu.clone(),
        t_max,
        quad_tol,
        xs,
        phi,
        dphi,
        big_phi: None,
        dbig,
        tau_max,
        identity_residual: None,
    })
}

/// Tabulates `φ` on `[1, t_max]`.
pub fn build_phi(mu: &Modulus, t_max: f64, quad_tol: f64) -> Result<WeightTable, CarlemanError> {
    build_phi_with_density(mu, t_max, quad_tol, DEFAULT_NODES_PER_UNIT)
}

pub fn build_phi_with_density(
    mu: &Modulus,
    t_max: f64,
    quad_tol: f64,
    nodes_per_unit: usize,
) -> Result<WeightTable, CarlemanError> {
    if mu.osgood_class() != OsgoodClass::Divergent {
        return Err(CarlemanError::NotDivergent {
            name: mu.name().to_string(),
            class: mu.osgood_class(),
        });
    }
    if !(t_max >= 2.0 && t_max.is_finite()) {
        return Err(CarlemanError::BadRange(t_max));
    }
    tabulate_phi(mu, t_max, quad_tol, nodes_per_unit)
}

/// `φ⁻¹(τ)`; exactly `1` at `τ = 0`.
pub fn invert_phi(wt: &WeightTable, tau: f64) -> Result<f64, CarlemanError> {
    if tau == 0.0 {
        return Ok(1.0);
    }
    Ok(wt.invert_x(tau)?.0.exp())
}

fn augment(mut wt: WeightTable) -> Result<WeightTable, CarlemanError> {
    let f = |x: f64| WeightTable::dbig_dx(&wt.mu, x);
    let mut big = Vec::with_capacity(wt.xs.len());
    big.push(0.0);
    for w in wt.xs.windows(2) {
        let r = quad::integrate(f, w[0], w[1], 0.0, 1e-13)?;
        big.push(big.last().unwrap() + r.value);
    }
    wt.big_phi = Some(big);
    let residual = identity_residual(&wt)?;
    wt.identity_residual = Some(residual);
    Ok(wt)
}

/// Worst relative gap between a five-point difference of `Φ'` in `τ` and
/// the identity's right-hand side, over interior nodes.
fn identity_residual(wt: &WeightTable) -> Result<f64, CarlemanError> {
    let mut worst: f64 = 0.0;
    let n = wt.xs.len();
    for i in 1..n - 1 {
        let tau = wt.phi[i];
        let t = wt.xs[i].exp();
        let rhs = t * t * wt.mu.eval(1.0 / t);
        let h = 0.05 / (rhs / t + 1.0);
        if tau - 2.0 * h < 0.0 || tau + 2.0 * h > wt.tau_max {
            continue;
        }
        let d = |k: f64| -> Result<f64, CarlemanError> { Ok(wt.invert_x(tau + k * h)?.0.exp()) };
        let fd = (d(-2.0)? - 8.0 * d(-1.0)? + 8.0 * d(1.0)? - d(2.0)?) / (12.0 * h);
        worst = worst.max((fd - rhs).abs() / rhs);
    }
    Ok(worst)
}

/// Adds `Φ`, `Φ'`, `Φ''` to a `φ` table, doubling the node density until
/// the identity residual is below [`IDENTITY_TOL`].
#[allow(non_snake_case)]
pub fn build_Phi(wt: &WeightTable) -> Result<WeightTable, CarlemanError> {
    let cells = (wt.xs.len() - 1) as f64;
    let mut per_unit = (cells / wt.t_max.ln()).round().max(1.0) as usize;
    let mut table = augment(wt.clone())?;
    let mut residual = table.identity_residual.unwrap_or(f64::INFINITY);
    for _ in 0..3 {
        if residual <= IDENTITY_TOL {
            return Ok(table);
        }
        per_unit *= 2;
        table = augment(tabulate_phi(&wt.mu, wt.t_max, wt.quad_tol, per_unit)?)?;
        residual = table.identity_residual.unwrap_or(f64::INFINITY);
    }
    if residual <= IDENTITY_TOL {
        Ok(table)
    } else {
        Err(CarlemanError::IdentityResidual {
            residual,
            tol: IDENTITY_TOL,
        })
    }
}

/// One-call construction of a complete table.
pub fn weight_table(mu: &Modulus, t_max: f64, quad_tol: f64) -> Result<WeightTable, CarlemanError> {
    build_Phi(&build_phi(mu, t_max, quad_tol)?)
}

/// `(2/γ) Φ(γ(T - t))`, the logarithm of the weight.
pub fn log_weight_value(wt: &WeightTable, gamma: f64, horizon: f64, t: f64) -> Result<f64, CarlemanError> {
    if !(gamma > 0.0) {
        return Err(CarlemanError::BadGamma(gamma));
    }
    if !(0.0..=horizon).contains(&t) {
        return Err(CarlemanError::BadTime { t, horizon });
    }
    let tau = gamma * (horizon - t);
    Ok(2.0 / gamma * wt.big_phi_at(tau)?.value)
}

/// `exp((2/γ) Φ(γ(T - t)))` for `0 <= t <= T`; equals `1` at `t = T`.
pub fn weight_value(wt: &WeightTable, gamma: f64, horizon: f64, t: f64) -> Result<f64, CarlemanError> {
    let e = log_weight_value(wt, gamma, horizon, t)?;
    if e > MAX_EXPONENT {
        return Err(CarlemanError::ExponentOverflow { exponent: e });
    }
    Ok(e.exp())
}

/// Node table as CSV with columns `t, phi, tau, Phi, Phi1, Phi2`.
pub fn write_table_csv<W: Write>(wt: &WeightTable, w: W) -> Result<(), CarlemanError> {
    let big = wt.big_phi.as_ref().ok_or(CarlemanError::NotAugmented)?;
    let io = |e: csv::Error| CarlemanError::Io(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "phi", "tau", "Phi", "Phi1", "Phi2"]).map_err(io)?;
    for i in 0..wt.xs.len() {
        let t = wt.xs[i].exp();
        let d2 = t * t * wt.mu.eval(1.0 / t);
        wr.serialize((t, wt.phi[i], wt.phi[i], big[i], t, d2)).map_err(io)?;
    }
    wr.flush().map_err(|e| CarlemanError::Io(e.to_string()))
}

/// Self-checks of a built table.
pub fn verify_table(wt: &WeightTable, seed: u64) -> Result<VerificationReport, CarlemanError> {
    let big = wt.big_phi.as_ref().ok_or(CarlemanError::NotAugmented)?;
    let mut rep = VerificationReport::new();
    let name = wt.mu.name().to_string();
    let id = |s: &str| format!("{s}_{name}");

    rep.check(
        MODULE,
        &id("weight_identity_residual"),
        "weight-identity",
        wt.identity_residual.unwrap_or(f64::INFINITY),
        Relation::AtMost,
        IDENTITY_TOL,
    );

    // φ' against its closed form, from local increments (no cancellation
    // against the cumulative value)
    let delta = 5e-3;
    let f = |x: f64| WeightTable::dphi_dx(&wt.mu, x);
    let stride = (wt.xs.len() / 200).max(1);
    let mut worst_deriv: f64 = 0.0;
    for i in (1..wt.xs.len() - 1).step_by(stride) {
        let x = wt.xs[i];
        if x - 2.0 * delta < 0.0 || x + 2.0 * delta > *wt.xs.last().unwrap() {
            continue;
        }
        let inc = |k: f64| -> Result<f64, CarlemanError> {
            let (a, b) = if k < 0.0 { (x + k * delta, x) } else { (x, x + k * delta) };
            let v = quad::integrate(f, a, b, 0.0, 1e-15)?.value;
            Ok(if k < 0.0 { -v } else { v })
        };
        let fd = (inc(-2.0)? - 8.0 * inc(-1.0)? + 8.0 * inc(1.0)? - inc(2.0)?) / (12.0 * delta);
        worst_deriv = worst_deriv.max((fd - f(x)).abs() / f(x));
    }
    let deriv_tol = (10.0 * wt.quad_tol).max(1e-9);
    rep.check(MODULE, &id("phi_derivative"), "weight-phi-derivative", worst_deriv, Relation::AtMost, deriv_tol);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_inv: f64 = 0.0;
    for _ in 0..100 {
        let t = (rng.gen::<f64>() * wt.t_max.ln()).exp().clamp(1.0, wt.t_max);
        let back = invert_phi(wt, wt.phi_at(t)?)?;
        worst_inv = worst_inv.max((back - t).abs() / t);
    }
    rep.check(MODULE, &id("inverse_consistency"), "weight-inverse", worst_inv, Relation::AtMost, 1e-8);

    // Φ'' = t² μ(1/t) must be non-decreasing along the nodes
    let d2: Vec<f64> = wt
        .xs
        .iter()
        .map(|&x| {
            let t = x.exp();
            t * t * wt.mu.eval(1.0 / t)
        })
        .collect();
    let drop = d2
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    rep.check(MODULE, &id("second_derivative_growth"), "weight-second-derivative-limit", drop, Relation::AtMost, 1e-12);

    let growth = wt.t_max;
    rep.check(MODULE, &id("first_derivative_growth"), "weight-first-derivative-limit", growth, Relation::AtLeast, 10.0);

    let base = big.windows(2).all(|w| w[1] > w[0]) && wt.phi.windows(2).all(|w| w[1] > w[0]);
    rep.flag(MODULE, &id("table_monotone"), "weight-monotone", base);

    let w_at_t = weight_value(wt, 3.0, 1.0, 1.0)?;
    rep.flag(MODULE, &id("weight_at_horizon"), "weight-definition", w_at_t == 1.0);
    rep.detail("weight", w_at_t);
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFamily {
    /// `v = sin²(2πt/T) cos x₁` on `[0, T/2]`
    SinSquaredCos,
    /// `v = cos x₁`, independent of time
    ConstantTime,
    /// `v ≡ 0`
    Zero,
}

impl TestFamily {
    pub fn label(self) -> &'static str {
        match self {
            TestFamily::SinSquaredCos => "sin2-cos",
            TestFamily::ConstantTime => "const-time",
            TestFamily::Zero => "zero",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sin2-cos" => Some(TestFamily::SinSquaredCos),
            "const-time" => Some(TestFamily::ConstantTime),
            "zero" => Some(TestFamily::Zero),
            _ => None,
        }
    }

    /// Time profile and its derivative.
    fn profile(self, horizon: f64, t: f64) -> (f64, f64) {
        match self {
            TestFamily::SinSquaredCos => {
                let w = 2.0 * std::f64::consts::PI / horizon;
                let s = (w * t).sin();
                (s * s, w * (2.0 * w * t).sin())
            }
            TestFamily::ConstantTime => (1.0, 0.0),
            TestFamily::Zero => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanProbeConfig {
    pub horizon: f64,
    pub gamma_grid: Vec<f64>,
    pub lambda0: f64,
    pub dim: usize,
    pub resolution: usize,
    pub test_family: TestFamily,
}

impl CarlemanProbeConfig {
    /// `T = 1/2`, `γ ∈ {8, 16, …, 256}` on a 64-point line.
    pub fn standard(test_family: TestFamily) -> Self {
        Self {
            horizon: 0.5,
            gamma_grid: vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0],
            lambda0: 1.0,
            dim: 1,
            resolution: 64,
            test_family,
        }
    }

    /// Range of `ln t` the weight table must cover.
    pub fn required_tau(&self) -> f64 {
        self.gamma_grid.iter().cloned().fold(0.0, f64::max) * self.horizon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub gamma: f64,
    pub lhs: f64,
    pub bracket: f64,
    /// `LHS / (γ^{1/2} · bracket)`; `None` when both sides vanish
    pub ratio_half: Option<f64>,
    /// `LHS / (γ · bracket)`
    pub ratio_one: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanProbeReport {
    pub family: String,
    pub rows: Vec<GammaRow>,
    /// `(γ₀, C(γ₀))` with `C(γ₀) = min_{γ >= γ₀} ratio_half(γ)`
    pub frontier: Vec<(f64, f64)>,
    pub gamma0: Option<f64>,
    pub constant: Option<f64>,
    pub feasible: bool,
    pub ratio_nondecreasing: bool,
    pub verdict: String,
}

/// Evaluates both sides of the conjugated weighted estimate for
/// `v(t, x) = θ(t) w(x)` and fits the constants.
///
/// With `g = Σ ∂_j(a_jk ∂_k w)`, the left side integrand is
/// `‖θ' w + θ (g + Φ'(γ(T-t)) w)‖²`, and the bracket is
/// `∫ θ² (‖∇w‖² + γ^{1/2} ‖w‖²)`. The outcome is evidence *consistent with*
/// the estimate on this family, not a verification of it.
pub fn probe_carleman(
    cfg: &CarlemanProbeConfig,
    wt: &WeightTable,
    coeffs: &CoefficientMatrix,
) -> Result<CarlemanProbeReport, CarlemanError> {
    if !(cfg.horizon > 0.0) {
        return Err(CarlemanError::BadConfig("horizon must be positive".into()));
    }
    if cfg.gamma_grid.is_empty()
        || cfg.gamma_grid.iter().any(|g| !(*g > 0.0))
        || cfg.gamma_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CarlemanError::BadConfig("gamma grid must be positive and increasing".into()));
    }
    if coeffs.dim() != cfg.dim || coeffs.resolution() != cfg.resolution {
        return Err(CarlemanError::BadConfig("coefficient grid does not match".into()));
    }
    if coeffs.min_eigenvalue() < cfg.lambda0 * (1.0 - 1e-12) {
        return Err(CarlemanError::BadConfig(format!(
            "ellipticity {} below lambda0 = {}",
            coeffs.min_eigenvalue(),
            cfg.lambda0
        )));
    }
    let w = GridField::from_real_fn(cfg.dim, cfg.resolution, |x| x[0].cos())?;
    let g = coeffs.divergence_form(&w)?;
    let ww = w.norm_sq();
    let grad = w.gradient_norm_sq()?;
    let wg = g.inner(&w)?.re;
    let gg = g.norm_sq();

    let half = 0.5 * cfg.horizon;
    let family = cfg.test_family;
    let mut rows = Vec::with_capacity(cfg.gamma_grid.len());
    for &gamma in &cfg.gamma_grid {
        let lhs = if family == TestFamily::Zero {
            0.0
        } else {
            let integrand = |t: f64| -> f64 {
                let (th, dth) = family.profile(cfg.horizon, t);
                let p = match wt.big_phi_at(gamma * (cfg.horizon - t)) {
                    Ok(v) => v.d1,
                    Err(_) => f64::NAN,
                };
                dth * dth * ww
                    + 2.0 * dth * th * (wg + p * ww)
                    + th * th * (gg + 2.0 * p * wg + p * p * ww)
            };
            // surface range errors before the quadrature reports NaN
            wt.big_phi_at(gamma * cfg.horizon)?;
            quad::integrate(integrand, 0.0, half, 0.0, 1e-10)?.value
        };
        let theta_sq = match family {
            TestFamily::Zero => 0.0,
            _ => quad::integrate(|t| family.profile(cfg.horizon, t).0.powi(2), 0.0, half, 0.0, 1e-13)?.value,
        };
        let bracket = theta_sq * (grad + gamma.sqrt() * ww);
        let (ratio_half, ratio_one) = if bracket == 0.0 && lhs == 0.0 {
            (None, None)
        } else {
            (Some(lhs / (gamma.sqrt() * bracket)), Some(lhs / (gamma * bracket)))
        };
        rows.push(GammaRow {
            gamma,
            lhs,
            bracket,
            ratio_half,
            ratio_one,
        });
    }

    let ratios: Vec<Option<f64>> = rows.iter().map(|r| r.ratio_half).collect();
    let trivial = ratios.iter().all(|r| r.is_none());
    let mut frontier = Vec::new();
    if !trivial {
        for i in 0..rows.len() {
            let c = ratios[i..]
                .iter()
                .map(|r| r.unwrap_or(f64::INFINITY))
                .fold(f64::INFINITY, f64::min);
            frontier.push((rows[i].gamma, c));
        }
    }
    let best = frontier.iter().find(|(_, c)| c.is_finite() && *c > 0.0).copied();
    let feasible = trivial || best.is_some();
    let ratio_nondecreasing = ratios
        .windows(2)
        .all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => b >= a,
            _ => true,
        });
    let verdict = if trivial {
        "consistent with the weighted estimate: both sides vanish".to_string()
    } else if feasible {
        format!(
            "consistent with the weighted estimate for gamma >= {} with C = {:.6e} on family {}",
            best.unwrap().0,
            best.unwrap().1,
            family.label()
        )
    } else {
        format!("no feasible (gamma0, C) on family {}", family.label())
    };
    Ok(CarlemanProbeReport {
        family: family.label().to_string(),
        rows,
        frontier,
        gamma0: best.map(|b| b.0),
        constant: best.map(|b| b.1),
        feasible,
        ratio_nondecreasing,
        verdict,
    })
}

/// Table checks for Linear and LogLinear plus the probe on the three
/// families, as used by the suite.
pub fn verify_carleman(seed: u64) -> Result<VerificationReport, CarlemanError> {
    use crate::modulus::BuiltinKind;
    let mut rep = VerificationReport::new();
    for kind in [BuiltinKind::Linear, BuiltinKind::LogLinear] {
        let mu = Modulus::builtin(kind).expect("builtin");
        let wt = weight_table(&mu, 1e3, 1e-10)?;
        rep.extend(verify_table(&wt, seed)?);
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let t = 1e3_f64.powf(i as f64 / 200.0);
            let exact = match kind {
                BuiltinKind::Linear => t.ln(),
                _ => (1.0 + t.ln()).ln(),
            };
            if exact > 0.0 {
                worst = worst.max((wt.phi_at(t)? - exact).abs() / exact);
            }
        }
        rep.check(
            MODULE,
            &format!("phi_closed_form_{}", mu.name()),
            "weight-phi",
            worst,
            Relation::AtMost,
            1e-7,
        );
        if kind == BuiltinKind::Linear {
            let mut worst: f64 = 0.0;
            for i in 1..=200 {
                let tau = wt.tau_max() * i as f64 / 200.0;
                let exact = tau.exp() - 1.0;
                worst = worst.max((wt.big_phi_at(tau)?.value - exact).abs() / exact);
            }
            rep.check(MODULE, "big_phi_closed_form_linear", "weight-big-phi", worst, Relation::AtMost, 1e-7);
        }
    }

    let linear = Modulus::builtin(BuiltinKind::Linear).expect("builtin");
    let cfg0 = CarlemanProbeConfig::standard(TestFamily::SinSquaredCos);
    let wt = weight_table(&linear, (cfg0.required_tau() + 1.0).exp(), 1e-10)?;
    let coeffs = CoefficientMatrix::identity(cfg0.dim, cfg0.resolution)?;
    for family in [TestFamily::SinSquaredCos, TestFamily::ConstantTime, TestFamily::Zero] {
        let cfg = CarlemanProbeConfig::standard(family);
        let probe = probe_carleman(&cfg, &wt, &coeffs)?;
        let label = family.label();
        rep.flag(MODULE, &format!("probe_feasible_{label}"), "weighted-estimate-probe", probe.feasible);
        rep.note(&probe.verdict);
        if let Some(c) = probe.constant {
            rep.detail("constant", c);
        }
        if let Some(g) = probe.gamma0 {
            rep.detail("gamma0", g);
        }
        rep.flag(
            MODULE,
            &format!("probe_ratio_monotone_{label}"),
            "weighted-estimate-probe",
            probe.ratio_nondecreasing,
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::BuiltinKind;
    use std::f64::consts::E;

    fn linear() -> Modulus {
        Modulus::builtin(BuiltinKind::Linear).unwrap()
    }

    #[test]
    fn rejects_convergent_modulus() {
        let sq = Modulus::builtin(BuiltinKind::SquareRoot).unwrap();
        assert!(matches!(build_phi(&sq, 10.0, 1e-10), Err(CarlemanError::NotDivergent { .. })));
        assert!(matches!(build_phi(&linear(), 1.5, 1e-10), Err(CarlemanError::BadRange(_))));
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let f = |x: f64| x * x * x - 2.0 * x;
        let df = |x: f64| 3.0 * x * x - 2.0;
        let (a, b) = (0.3, 1.1);
        for i in 0..=10 {
            let x = a + (b - a) * i as f64 / 10.0;
            let h = hermite(a, b, f(a), f(b), df(a), df(b), x);
            assert!((h - f(x)).abs() < 1e-14);
            let s = hermite_slope(a, b, f(a), f(b), df(a), df(b), x);
            assert!((s - df(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_table_examples() {
        let wt = weight_table(&linear(), 100.0, 1e-10).unwrap();
        assert!((wt.phi_at(E).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(wt.phi_at(1.0).unwrap(), 0.0);
        assert_eq!(invert_phi(&wt, 0.0).unwrap(), 1.0);
        assert!((invert_phi(&wt, 1.0).unwrap() - E).abs() < 1e-12);
        let p = wt.big_phi_at(1.0).unwrap();
        assert!((p.value - (E - 1.0)).abs() < 1e-9);
        assert!((p.d2 - E).abs() < 1e-12);
        assert_eq!(wt.big_phi_at(0.0).unwrap().value, 0.0);
        assert!(matches!(invert_phi(&wt, 1e3), Err(CarlemanError::TableRange { .. })));
    }
}
