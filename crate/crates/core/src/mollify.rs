//! Friedrichs mollification in time and the approximation bounds
//! `|a_ε − a| <= C μ(ε)` and `|∂_t a_ε| <= C̃ μ(ε)/ε` for `C^μ` inputs.
//!
//! `a_ε(t) = ∫ a(s) ρ((t − s)/ε) ds/ε = ∫_{-1/2}^{1/2} a(t − εy) ρ(y) dy`
//! with the bump `ρ(y) ∝ exp(−1/(1 − 4y²))`. Integrals over the kernel
//! support use composite Gauss–Legendre panels split at the kinks of `a`,
//! doubling the order until two successive estimates agree to 1e-10.

use crate::modulus::Modulus;
use crate::pliss::{Orientation, PlissConstruction, PlissError};
use crate::quad::GaussLegendre;
use crate::report::{Relation, VerificationReport};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

const MODULE: &str = "mollify";
/// Agreement required between successive quadrature orders.
pub const QUAD_TOL: f64 = 1e-10;
const MIN_ORDER_SPLIT: usize = 16;
const MIN_ORDER_WHOLE: usize = 64;
const MAX_ORDER: usize = 1024;

#[derive(Debug, Error)]
pub enum MollifyError {
    #[error("eps = {0} outside (0, 1/2]")]
    BadEps(f64),
    #[error("window [{lo}, {hi}] is narrower than the kernel width {eps}")]
    WindowTooNarrow { lo: f64, hi: f64, eps: f64 },
    #[error("t = {t} outside the mollified window [{lo}, {hi}]")]
    OutsideWindow { t: f64, lo: f64, hi: f64 },
    #[error("kernel quadrature did not settle at t = {t}, eps = {eps}")]
    NoConvergence { t: f64, eps: f64 },
    #[error("empty eps list")]
    EmptySweep,
    #[error(transparent)]
    Pliss(#[from] PlissError),
}

/// Gauss–Legendre rules of order `16 · 2^i`, built once.
fn rule(order: usize) -> &'static GaussLegendre {
    static RULES: [OnceLock<GaussLegendre>; 8] = [const { OnceLock::new() }; 8];
    let i = (order / MIN_ORDER_SPLIT).trailing_zeros() as usize;
    debug_assert_eq!(MIN_ORDER_SPLIT << i, order);
    RULES[i].get_or_init(|| GaussLegendre::new(order))
}

/// The bump `ρ` on `[-1/2, 1/2]`, normalized to unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    /// `∫ exp(−1/(1 − 4y²)) dy`
    pub normalization: f64,
}

fn bump(y: f64) -> f64 {
    let w = 1.0 - 4.0 * y * y;
    if w <= 0.0 {
        0.0
    } else {
        (-1.0 / w).exp()
    }
}

impl MollifierKernel {
    pub fn standard() -> Self {
        // the bump is flat to all orders at ±1/2, so panels converge fast
        let g = rule(64);
        let z = (0..16)
            .map(|i| {
                let a = -0.5 + i as f64 / 16.0;
                g.integrate(bump, a, a + 1.0 / 16.0)
            })
            .sum();
        Self { normalization: z }
    }

    pub fn rho(&self, y: f64) -> f64 {
        bump(y) / self.normalization
    }

    /// `ρ'(y) = ρ(y) · (−8y/(1 − 4y²)²)`.
    pub fn rho_d1(&self, y: f64) -> f64 {
        let w = 1.0 - 4.0 * y * y;
        if w <= 0.0 {
            return 0.0;
        }
        self.rho(y) * (-8.0 * y / (w * w))
    }

    /// `∫ρ` by an independent rule (Gauss–Kronrod), for the normalization check.
    pub fn mass(&self) -> f64 {
        crate::quad::integrate(|y| self.rho(y), -0.5, 0.5, 1e-14, 1e-14)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    }

    /// `ρ̂(ω) = ∫ ρ(y) cos(ωy) dy`, by composite Gauss–Legendre fine enough
    /// for `|ω| <= 4000`.
    pub fn cosine_transform(&self, omega: f64) -> f64 {
        let g = rule(32);
        let panels = 64;
        let h = 0.5 / panels as f64;
        // ρ is even: ρ̂ = 2 ∫_0^{1/2} ρ cos
        2.0 * (0..panels)
            .map(|i| {
                let a = i as f64 * h;
                g.integrate(|y| self.rho(y) * (omega * y).cos(), a, a + h)
            })
            .sum::<f64>()
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type KinkFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// A function of time on a window, with the points where it is not smooth
/// (or changes rapidly) so quadrature panels can be split there.
#[derive(Clone)]
pub struct TimeFunction {
    pub name: String,
    f: RealFn,
    pub window: (f64, f64),
    kinks: KinkFn,
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFunction")
            .field("name", &self.name)
            .field("window", &self.window)
            .finish()
    }
}

impl TimeFunction {
    pub fn new<F>(name: &str, window: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
            window,
            kinks: Arc::new(|_, _| Vec::new()),
        }
    }

    /// Attaches a breakpoint oracle returning the kinks inside `[lo, hi]`.
    pub fn with_kinks<K>(mut self, kinks: K) -> Self
    where
        K: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.kinks = Arc::new(kinks);
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn constant(c: f64) -> Self {
        Self::new("constant", (-10.0, 10.0), move |_| c)
    }

    pub fn identity() -> Self {
        Self::new("linear", (-10.0, 10.0), |t| t)
    }
}

/// `a_ε` on the window shrunk by `ε/2` on each side.
#[derive(Debug, Clone)]
pub struct Mollified {
    a: TimeFunction,
    kernel: MollifierKernel,
    pub eps: f64,
    pub window: (f64, f64),
}

pub fn mollify_in_time(a: &TimeFunction, kernel: &MollifierKernel, eps: f64) -> Result<Mollified, MollifyError> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(MollifyError::BadEps(eps));
    }
    let (lo, hi) = a.window;
    let window = (lo + 0.5 * eps, hi - 0.5 * eps);
    if window.0 > window.1 {
        return Err(MollifyError::WindowTooNarrow { lo, hi, eps });
    }
    Ok(Mollified {
        a: a.clone(),
        kernel: *kernel,
        eps,
        window,
    })
}

impl Mollified {
    fn check(&self, t: f64) -> Result<(), MollifyError> {
        let (lo, hi) = self.window;
        if t >= lo && t <= hi {
            Ok(())
        } else {
            Err(MollifyError::OutsideWindow { t, lo, hi })
        }
    }

    /// Panel edges in `y` for evaluation at `t`: the kinks of `a` at
    /// `s = t − εy`, mapped into `[-1/2, 1/2]`.
    fn panels(&self, t: f64) -> Vec<f64> {
        let e = self.eps;
        let mut ys: Vec<f64> = (self.a.kinks)(t - 0.5 * e, t + 0.5 * e)
            .into_iter()
            .map(|s| (t - s) / e)
            .filter(|y| *y > -0.5 && *y < 0.5)
            .collect();
        ys.push(-0.5);
        ys.push(0.5);
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        ys
    }

    /// `(∫ a(t − εy) ρ(y) dy, ∫ a(t − εy) ρ'(y) dy)` from shared samples of `a`.
    fn integrate(&self, t: f64) -> Result<(f64, f64), MollifyError> {
        let edges = self.panels(t);
        let mut order = if edges.len() > 2 { MIN_ORDER_SPLIT } else { MIN_ORDER_WHOLE };
        let (e, k) = (self.eps, &self.kernel);
        let eval = |order: usize| -> (f64, f64) {
            let g = rule(order);
            let (mut v, mut d) = (0.0, 0.0);
            for w in edges.windows(2) {
                let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (x, wt) in g.nodes.iter().zip(&g.weights) {
                    let y = c + h * x;
                    let a = self.a.eval(t - e * y) * wt * h;
                    v += a * k.rho(y);
                    d += a * k.rho_d1(y);
                }
            }
            (v, d)
        };
        let mut prev = eval(order);
        while order < MAX_ORDER {
            order *= 2;
            let next = eval(order);
            // ρ' has ρ-scale ~ 10, hence the looser derivative test
            if (next.0 - prev.0).abs() <= QUAD_TOL * next.0.abs().max(1.0)
                && (next.1 - prev.1).abs() <= 10.0 * QUAD_TOL * next.1.abs().max(1.0)
            {
                return Ok(next);
            }
            prev = next;
        }
        Err(MollifyError::NoConvergence { t, eps: e })
    }

    /// `(a_ε(t), ∂_t a_ε(t))`, with `∂_t a_ε = (1/ε) ∫ a(t − εy) ρ'(y) dy`.
    pub fn value_and_derivative(&self, t: f64) -> Result<(f64, f64), MollifyError> {
        self.check(t)?;
        let (v, d) = self.integrate(t)?;
        Ok((v, d / self.eps))
    }

    /// `a_ε(t)`.
    pub fn value(&self, t: f64) -> Result<f64, MollifyError> {
        Ok(self.value_and_derivative(t)?.0)
    }

    /// `∂_t a_ε(t)`.
    pub fn derivative(&self, t: f64) -> Result<f64, MollifyError> {
        Ok(self.value_and_derivative(t)?.1)
    }
}

/// `tri(x)`: distance from `x` to the nearest integer.
pub fn tri(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// `Σ_{k=0}^{K} μ(2^{-k}) tri(2^k t)`: a 1-periodic function whose
/// `C^μ` seminorm is finite for `μ = √s` uniformly in `K`.
#[derive(Debug, Clone)]
pub struct Sawtooth {
    pub mu: Modulus,
    pub levels: u32,
}

/// Kernel widths (in units of a level's period) beyond which the Fourier
/// series is used instead of panel quadrature.
const FOURIER_SWITCH: f64 = 4.0;
/// Frequencies `ω = 2π j δ` past this have `|ρ̂| < 1e-15`.
const OMEGA_MAX: f64 = 2.0 * PI * 400.0;

impl Sawtooth {
    pub fn new(mu: &Modulus, levels: u32) -> Self {
        Self {
            mu: mu.clone(),
            levels,
        }
    }

    /// Levels for a sweep down to `eps_min`: the truncation sits four
    /// octaves below the finest kernel width.
    pub fn for_sweep(mu: &Modulus, eps_min: f64) -> Self {
        Self::new(mu, (1.0 / eps_min).log2().ceil() as u32 + 4)
    }

    fn weight(&self, k: u32) -> f64 {
        self.mu.eval(0.5f64.powi(k as i32))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (0..=self.levels)
            .map(|k| self.weight(k) * tri(2f64.powi(k as i32) * t))
            .sum()
    }

    /// One level `tri(2^k t)` as a time function, kinks at `2^{-k-1} ℤ`.
    pub fn level(k: u32) -> TimeFunction {
        let f = 2f64.powi(k as i32);
        TimeFunction::new(&format!("tri(2^{k} t)"), (-1e6, 1e6), move |t| tri(f * t)).with_kinks(move |lo, hi| {
            let h = 0.5 / f;
            let (a, b) = ((lo / h).ceil() as i64, (hi / h).floor() as i64);
            (a..=b).map(|i| i as f64 * h).collect()
        })
    }

    /// The whole sum as a time function, kinks at `2^{-K-1} ℤ`. Only
    /// practical for small `K`; used to cross-check [`MollifiedSawtooth`].
    pub fn as_time_function(&self) -> TimeFunction {
        let me = self.clone();
        let k = self.levels;
        TimeFunction::new("sawtooth", (-1e6, 1e6), move |t| me.eval(t)).with_kinks(move |lo, hi| {
            let h = 0.5f64.powi(k as i32 + 1);
            let (a, b) = ((lo / h).ceil() as i64, (hi / h).floor() as i64);
            (a..=b).map(|i| i as f64 * h).collect()
        })
    }
}

enum LevelRule {
    Panels(Mollified),
    /// Fourier data for `tri` at kernel width `δ`: `ρ̂(2πjδ)` for odd `j`
    Fourier(Vec<(f64, f64)>),
}

/// `a_ε` for a [`Sawtooth`], level by level. A level `tri(2^k ·)` mollified
/// at `ε` is `tri` mollified at `δ = 2^k ε`, evaluated at `2^k t`. Coarse
/// levels (`δ < 4`) use panel quadrature; fine levels use
/// `tri(x) = 1/4 − (2/π²) Σ_{j odd} cos(2πjx)/j²`, whose mollified
/// coefficients are damped by `ρ̂(2πjδ)`.
pub struct MollifiedSawtooth {
    saw: Sawtooth,
    levels: Vec<(f64, f64, LevelRule)>,
    pub eps: f64,
}

impl MollifiedSawtooth {
    pub fn new(saw: &Sawtooth, kernel: &MollifierKernel, eps: f64) -> Result<Self, MollifyError> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(MollifyError::BadEps(eps));
        }
        let mut levels = Vec::new();
        for k in 0..=saw.levels {
            let scale = 2f64.powi(k as i32);
            let delta = scale * eps;
            let rule = if delta < FOURIER_SWITCH {
                LevelRule::Panels(mollify_in_time(&Sawtooth::level(k), kernel, eps)?)
            } else {
                let coeffs = (0..)
                    .map(|i| (2 * i + 1) as f64)
                    .take_while(|j| 2.0 * PI * j * delta <= OMEGA_MAX)
                    .map(|j| (j, kernel.cosine_transform(2.0 * PI * j * delta)))
                    .collect();
                LevelRule::Fourier(coeffs)
            };
            levels.push((saw.weight(k), scale, rule));
        }
        Ok(Self {
            saw: saw.clone(),
            levels,
            eps,
        })
    }

    pub fn original(&self, t: f64) -> f64 {
        self.saw.eval(t)
    }

    /// `(a_ε(t), ∂_t a_ε(t))`.
    pub fn value_and_derivative(&self, t: f64) -> Result<(f64, f64), MollifyError> {
        let (mut v, mut d) = (0.0, 0.0);
        for (w, scale, rule) in &self.levels {
            let (lv, ld) = match rule {
                LevelRule::Panels(m) => m.value_and_derivative(t)?,
                LevelRule::Fourier(c) => {
                    let x = scale * t;
                    let (mut lv, mut ld) = (0.25, 0.0);
                    for &(j, rh) in c {
                        let (s, co) = (2.0 * PI * j * x).sin_cos();
                        lv -= 2.0 / (PI * PI) * rh * co / (j * j);
                        ld += 4.0 / PI * rh * s / j * scale;
                    }
                    (lv, ld)
                }
            };
            v += w * lv;
            d += w * ld;
        }
        Ok((v, d))
    }
}

/// Test functions with a known modulus of continuity.
#[derive(Debug, Clone)]
pub enum MollifyFamily {
    Constant(f64),
    /// `a(t) = t`
    Linear,
    Sawtooth,
    /// `l(t)` of the non-uniqueness example (construction time, built
    /// segments only, `1` elsewhere)
    PlissL { segments: usize },
}

impl MollifyFamily {
    pub fn name(&self) -> String {
        match self {
            MollifyFamily::Constant(_) => "constant".into(),
            MollifyFamily::Linear => "linear".into(),
            MollifyFamily::Sawtooth => "sawtooth".into(),
            MollifyFamily::PlissL { .. } => "pliss-l".into(),
        }
    }
}

/// Per-ε sweep measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps: f64,
    /// `sup_t |a_ε − a|`
    pub error_sup: f64,
    /// `sup_t |∂_t a_ε|`
    pub derivative_sup: f64,
    /// `error_sup / μ(ε)`
    pub c: f64,
    /// `derivative_sup · ε / μ(ε)`
    pub c_tilde: f64,
}

/// Values below the quadrature tolerance count as exact zeros when
/// fitting constants.
const ZERO_FLOOR: f64 = 10.0 * QUAD_TOL;

fn floor(v: f64) -> f64 {
    if v <= ZERO_FLOOR {
        0.0
    } else {
        v
    }
}

fn sweep_point(eps: f64, mu: &Modulus, err: f64, der: f64) -> SweepPoint {
    let m = mu.eval(eps);
    let (err, der) = (floor(err), floor(der));
    SweepPoint {
        eps,
        error_sup: err,
        derivative_sup: der,
        c: err / m,
        c_tilde: der * eps / m,
    }
}

/// Sampling times for a time function mollified at `eps`.
fn generic_sweep(
    a: &TimeFunction,
    kernel: &MollifierKernel,
    eps: f64,
    times: &[f64],
) -> Result<(f64, f64), MollifyError> {
    let m = mollify_in_time(a, kernel, eps)?;
    let (mut err, mut der) = (0.0_f64, 0.0_f64);
    for &t in times {
        let (v, d) = m.value_and_derivative(t)?;
        err = err.max((v - a.eval(t)).abs());
        der = der.max(d.abs());
    }
    Ok((err, der))
}

/// Runs the ε sweep and returns the measurements.
pub fn mollifier_sweep(
    family: &MollifyFamily,
    mu: &Modulus,
    kernel: &MollifierKernel,
    eps_list: &[f64],
) -> Result<Vec<SweepPoint>, MollifyError> {
    if eps_list.is_empty() {
        return Err(MollifyError::EmptySweep);
    }
    let eps_min = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = Vec::with_capacity(eps_list.len());
    match family {
        MollifyFamily::Sawtooth => {
            let saw = Sawtooth::for_sweep(mu, eps_min);
            // one period on a dyadic grid: the kinks of every level line up
            // at these points, which is where the error sup is attained
            let grid: Vec<f64> = (0..=1024).map(|i| i as f64 / 1024.0).collect();
            for &eps in eps_list {
                // the slopes of every level align just to the right of the
                // kinks at 0 and 1/2; the derivative peaks within ε of them
                let mut times = grid.clone();
                for t0 in [0.0, 0.5] {
                    times.extend((1..=32).map(|j| t0 + j as f64 * eps / 32.0));
                }
                let m = MollifiedSawtooth::new(&saw, kernel, eps)?;
                let (mut err, mut der) = (0.0_f64, 0.0_f64);
                for &t in &times {
                    let (v, d) = m.value_and_derivative(t)?;
                    err = err.max((v - m.original(t)).abs());
                    der = der.max(d.abs());
                }
                out.push(sweep_point(eps, mu, err, der));
            }
        }
        MollifyFamily::PlissL { segments } => {
            let pc = PlissConstruction::new(mu, None, Some(*segments), Orientation::ConstructionTime)?;
            let (a1, horizon) = (pc.seqs.a[1], pc.horizon());
            let breaks: Vec<f64> = (1..=pc.segments())
                .flat_map(|n| {
                    let (a, r) = (pc.seqs.a[n], pc.seqs.r[n]);
                    [0.0, 1.0 / 6.0, 0.2, 1.0 / 3.0, 0.5].map(|s| a + s * r)
                })
                .chain(std::iter::once(horizon))
                .collect();
            let (lo, hi) = pc.window();
            let argmax = pc.cuts.j_prime_argmax;
            let pcl = pc.clone();
            let l = TimeFunction::new("pliss-l", (lo, hi), move |t| pcl.eval_l_truncated(t).unwrap_or(f64::NAN))
                .with_kinks(move |lo, hi| {
                    let i = breaks.partition_point(|&b| b < lo);
                    let j = breaks.partition_point(|&b| b <= hi);
                    breaks[i..j].to_vec()
                });
            for &eps in eps_list {
                // peaks of |l − 1| on the first and last segments, and a grid
                // across the built region padded by the kernel width
                let mut times: Vec<f64> = [1, 2, pc.segments()]
                    .iter()
                    .flat_map(|&n| {
                        let (a, r) = (pc.seqs.a[n], pc.seqs.r[n]);
                        [argmax, 0.25, 0.4, 0.45].map(|s| a + s * r)
                    })
                    .collect();
                let (g0, g1) = (a1 - eps, horizon + eps);
                times.extend((0..=64).map(|i| g0 + (g1 - g0) * i as f64 / 64.0));
                let (err, der) = generic_sweep(&l, kernel, eps, &times)?;
                out.push(sweep_point(eps, mu, err, der));
            }
        }
        MollifyFamily::Constant(c) => {
            let a = TimeFunction::constant(*c);
            let times: Vec<f64> = (0..=32).map(|i| -1.0 + i as f64 / 16.0).collect();
            for &eps in eps_list {
                let (err, der) = generic_sweep(&a, kernel, eps, &times)?;
                out.push(sweep_point(eps, mu, err, der));
            }
        }
        MollifyFamily::Linear => {
            let a = TimeFunction::identity();
            let times: Vec<f64> = (0..=32).map(|i| -1.0 + i as f64 / 16.0).collect();
            for &eps in eps_list {
                let (err, der) = generic_sweep(&a, kernel, eps, &times)?;
                out.push(sweep_point(eps, mu, err, der));
            }
        }
    }
    Ok(out)
}

/// `max/min` of a list of fitted constants; `1` when every value is zero
/// (the bound holds with `C = 0` at every scale).
fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else {
        max / min
    }
}

/// Sweeps `ε`, fits `C` and `C̃`, and checks that each stays within a
/// factor 2 across the sweep.
pub fn verify_mollifier_bounds(
    family: &MollifyFamily,
    mu: &Modulus,
    kernel: &MollifierKernel,
    eps_list: &[f64],
) -> Result<VerificationReport, MollifyError> {
    let sweep = mollifier_sweep(family, mu, kernel, eps_list)?;
    let name = family.name();
    let mut rep = VerificationReport::new();

    rep.check(
        MODULE,
        "kernel_unit_mass",
        "mollifier-kernel",
        (kernel.mass() - 1.0).abs(),
        Relation::AtMost,
        1e-10,
    );

    let cs: Vec<f64> = sweep.iter().map(|p| p.c).collect();
    let cts: Vec<f64> = sweep.iter().map(|p| p.c_tilde).collect();
    rep.check(
        MODULE,
        &format!("{name}_error_constant_spread"),
        "mollifier-error-bound",
        spread(&cs),
        Relation::AtMost,
        2.0,
    );
    rep.detail("C", cs.iter().cloned().fold(0.0, f64::max));
    for p in &sweep {
        rep.detail(&format!("C@eps={:e}", p.eps), p.c);
    }
    rep.check(
        MODULE,
        &format!("{name}_derivative_constant_spread"),
        "mollifier-derivative-bound",
        spread(&cts),
        Relation::AtMost,
        2.0,
    );
    rep.detail("C_tilde", cts.iter().cloned().fold(0.0, f64::max));
    for p in &sweep {
        rep.detail(&format!("C_tilde@eps={:e}", p.eps), p.c_tilde);
    }

    if matches!(family, MollifyFamily::Sawtooth) {
        // sup |a_ε − a| should not grow as ε decreases along the sweep
        let mut by_eps = sweep.clone();
        by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let worst = by_eps
            .windows(2)
            .map(|w| w[1].error_sup / w[0].error_sup)
            .fold(0.0, f64::max);
        rep.check(
            MODULE,
            "sawtooth_error_monotone",
            "mollifier-error-bound",
            worst,
            Relation::AtMost,
            1.05,
        );
    }
    Ok(rep.with_provenance(0, &(name, mu.name(), eps_list)))
}

/// `{2^{-hi}, …, 2^{-lo}}` in decreasing order of ε.
pub fn dyadic_eps(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 0.5f64.powi(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_is_a_unit_bump() {
        let k = MollifierKernel::standard();
        assert!((k.mass() - 1.0).abs() < 1e-12);
        assert_eq!(k.rho(0.5), 0.0);
        assert_eq!(k.rho(-0.5), 0.0);
        assert!((k.rho(0.1) - k.rho(-0.1)).abs() == 0.0);
        assert!((k.cosine_transform(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tri_values() {
        assert_eq!(tri(0.0), 0.0);
        assert_eq!(tri(0.5), 0.5);
        assert_eq!(tri(1.25), 0.25);
        assert_eq!(tri(-0.75), 0.25);
    }
}
