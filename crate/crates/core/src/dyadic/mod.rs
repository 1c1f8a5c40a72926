//! Littlewood–Paley blocks on the periodic lattice.
//!
//! The whole-space decomposition is replaced by its Fourier-series analogue
//! on `[0, 2π)ⁿ`: `φ_ν(D)` multiplies the coefficient of `e^{ik·x}` by
//! `φ_ν(|k|)`. Every estimate probed here is local in frequency, so the torus
//! is a faithful desk-scale surrogate for `ℝⁿ`.

mod field;

pub use field::{frequency, GridField};

use crate::report::{Relation, VerificationReport};
use crate::smooth;
use std::sync::Arc;
use thiserror::Error;

const MODULE: &str = "dyadic";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DyadicError {
    #[error("dimension {0} not supported (1 or 2)")]
    BadDimension(usize),
    #[error("resolution {0} is not a power of two >= 4")]
    NotPowerOfTwo(usize),
    #[error("field sizes differ: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },
    #[error("sample {0} is not finite")]
    NonFinite(usize),
    #[error("axis {axis} out of range for a {dim}-dimensional field")]
    BadAxis { axis: usize, dim: usize },
    #[error("block {nu} reaches frequency 2^{} beyond the Nyquist limit {nyquist}", nu + 1)]
    Aliasing { nu: usize, nyquist: usize },
    #[error("block {nu} exceeds the partition's nu_max = {nu_max}")]
    BlockOutOfRange { nu: usize, nu_max: usize },
    #[error("field has zero norm")]
    ZeroField,
    #[error("coefficient matrix must be {dim}x{dim} and symmetric")]
    BadCoefficients { dim: usize },
    #[error("i/o: {0}")]
    Io(String),
}

/// Radial profile `φ₀(ξ) = 1 - S(|ξ| - 1)`.
pub fn phi0(r: f64) -> f64 {
    1.0 - smooth::step(r - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    pub dim: usize,
    pub nu_max: usize,
}

impl DyadicPartition {
    pub fn new(dim: usize, nu_max: usize) -> Result<Self, DyadicError> {
        if dim != 1 && dim != 2 {
            return Err(DyadicError::BadDimension(dim));
        }
        Ok(Self { dim, nu_max })
    }

    /// Largest admissible partition for a grid of `n` points per axis.
    pub fn for_resolution(dim: usize, n: usize) -> Result<Self, DyadicError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(DyadicError::NotPowerOfTwo(n));
        }
        // 2^{ν+1} <= N/2
        Self::new(dim, n.trailing_zeros() as usize - 2)
    }

    /// `φ_ν` at radius `r = |ξ|`.
    pub fn weight(&self, nu: usize, r: f64) -> f64 {
        if nu == 0 {
            phi0(r)
        } else {
            let s = 0.5_f64.powi(nu as i32);
            phi0(r * s) - phi0(2.0 * r * s)
        }
    }

    /// `Σ_{ν <= nu_max} φ_ν(r) = φ₀(r / 2^{nu_max})`.
    pub fn total(&self, r: f64) -> f64 {
        phi0(r * 0.5_f64.powi(self.nu_max as i32))
    }

    fn admissible(&self, nu: usize, n: usize) -> Result<(), DyadicError> {
        if nu > self.nu_max {
            return Err(DyadicError::BlockOutOfRange {
                nu,
                nu_max: self.nu_max,
            });
        }
        if (1usize << (nu + 1)) > n / 2 {
            return Err(DyadicError::Aliasing { nu, nyquist: n / 2 });
        }
        Ok(())
    }
}

fn dims_match(part: &DyadicPartition, u: &GridField) -> Result<(), DyadicError> {
    if part.dim != u.dim() {
        return Err(DyadicError::BadDimension(u.dim()));
    }
    Ok(())
}

/// `u_ν = φ_ν(D) u`.
pub fn lp_block(part: &DyadicPartition, u: &GridField, nu: usize) -> Result<GridField, DyadicError> {
    dims_match(part, u)?;
    part.admissible(nu, u.resolution())?;
    Ok(u.apply_multiplier(|xi| part.weight(nu, field::norm(xi))))
}

/// `Σ_{ν=0}^{nu_max} u_ν`.
pub fn reconstruct(part: &DyadicPartition, u: &GridField) -> Result<GridField, DyadicError> {
    let mut acc = GridField::zeros(u.dim(), u.resolution())?;
    for nu in 0..=part.nu_max {
        acc = acc.add(&lp_block(part, u, nu)?)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthogonality {
    /// `Σ_ν ‖u_ν‖² / ‖u‖²`
    pub ratio: f64,
    /// smallest `K` with `1/K <= ratio <= K`
    pub k_needed: f64,
}

/// Ratio of the block energies to the field energy; lies in `[1/2, 1]` for
/// fields band-limited below `2^{nu_max}`.
pub fn check_almost_orthogonality(
    part: &DyadicPartition,
    u: &GridField,
) -> Result<Orthogonality, DyadicError> {
    dims_match(part, u)?;
    part.admissible(part.nu_max, u.resolution())?;
    let total = u.norm_sq();
    if total == 0.0 {
        return Err(DyadicError::ZeroField);
    }
    // Plancherel: sum the multiplier weights directly on the spectrum
    let spec = u.spectrum();
    let mut blocks = 0.0;
    let mut energy = 0.0;
    for (idx, z) in spec.iter().enumerate() {
        let r = field::norm(u.wavevector(idx));
        let e = z.norm_sqr();
        energy += e;
        blocks += e * (0..=part.nu_max).map(|nu| part.weight(nu, r).powi(2)).sum::<f64>();
    }
    let ratio = blocks / energy;
    Ok(Orthogonality {
        ratio,
        k_needed: ratio.max(1.0 / ratio),
    })
}

/// Upper and lower Bernstein inequalities for the block `u_ν`.
pub fn check_bernstein(
    part: &DyadicPartition,
    u: &GridField,
    nu: usize,
) -> Result<VerificationReport, DyadicError> {
    const SLACK: f64 = 1e-12;
    dims_match(part, u)?;
    part.admissible(nu, u.resolution())?;
    // Plancherel on the block spectrum φ_ν û; the derivative drops each
    // axis' Nyquist mode, as `GridField::derivative` does
    let nyq = -(u.resolution() as f64) / 2.0;
    let (mut block_sq, mut axis_sq) = (0.0, [0.0; 2]);
    for (idx, z) in u.spectrum().iter().enumerate() {
        let xi = u.wavevector(idx);
        let e = (part.weight(nu, field::norm(xi)) * z.norm()).powi(2);
        block_sq += e;
        for j in 0..u.dim() {
            if xi[j] != nyq {
                axis_sq[j] += xi[j] * xi[j] * e;
            }
        }
    }
    if block_sq == 0.0 {
        return Err(DyadicError::ZeroField);
    }
    let axis_ratios: Vec<f64> = axis_sq[..u.dim()].iter().map(|a| (a / block_sq).sqrt()).collect();
    let mut rep = VerificationReport::new();
    let upper = (1u64 << (nu + 1)) as f64;
    for (j, &ratio) in axis_ratios.iter().enumerate() {
        rep.check(
            MODULE,
            &format!("bernstein_upper_nu{nu}_axis{j}"),
            "bernstein-upper",
            ratio,
            Relation::AtMost,
            upper * (1.0 + SLACK),
        );
    }
    if nu >= 1 {
        let lower = (1u64 << (nu - 1)) as f64;
        let grad = axis_ratios.iter().map(|r| r * r).sum::<f64>().sqrt();
        rep.check(
            MODULE,
            &format!("bernstein_lower_nu{nu}"),
            "bernstein-lower",
            grad,
            Relation::AtLeast,
            lower * (1.0 - SLACK),
        );
    }
    Ok(rep)
}

/// `[φ_ν, a] w = φ_ν(D)(a w) - a φ_ν(D) w` with dealiased products.
pub fn commutator(
    part: &DyadicPartition,
    a: &GridField,
    w: &GridField,
    nu: usize,
) -> Result<GridField, DyadicError> {
    a.same_shape(w)?;
    dims_match(part, w)?;
    let aw = a.mul_dealiased(w)?;
    let first = lp_block(part, &aw, nu)?;
    let second = a.mul_dealiased(&lp_block(part, w, nu)?)?;
    first.sub(&second)
}

/// Symmetric coefficient matrix `(a_jk)` sampled on one grid.
#[derive(Debug, Clone)]
pub struct CoefficientMatrix {
    dim: usize,
    entries: Vec<GridField>,
}

impl CoefficientMatrix {
    /// `entries[j * dim + k] = a_jk`.
    pub fn new(dim: usize, entries: Vec<GridField>) -> Result<Self, DyadicError> {
        if entries.len() != dim * dim {
            return Err(DyadicError::BadCoefficients { dim });
        }
        for e in &entries {
            e.same_shape(&entries[0])?;
            if e.dim() != dim || e.max_imag() > 0.0 {
                return Err(DyadicError::BadCoefficients { dim });
            }
        }
        for j in 0..dim {
            for k in 0..j {
                if entries[j * dim + k] != entries[k * dim + j] {
                    return Err(DyadicError::BadCoefficients { dim });
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize, n: usize) -> Result<Self, DyadicError> {
        let one = GridField::from_real_fn(dim, n, |_| 1.0)?;
        let zero = GridField::zeros(dim, n)?;
        let entries = (0..dim * dim)
            .map(|i| if i % (dim + 1) == 0 { one.clone() } else { zero.clone() })
            .collect();
        Self::new(dim, entries)
    }

    /// Diagonal matrix `a(x) Id`.
    pub fn scalar(a: GridField) -> Result<Self, DyadicError> {
        let dim = a.dim();
        let zero = GridField::zeros(dim, a.resolution())?;
        let entries = (0..dim * dim)
            .map(|i| if i % (dim + 1) == 0 { a.clone() } else { zero.clone() })
            .collect();
        Self::new(dim, entries)
    }

    pub fn entry(&self, j: usize, k: usize) -> &GridField {
        &self.entries[j * self.dim + k]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.entries[0].resolution()
    }

    /// Smallest eigenvalue over the grid.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.entries[0].len();
        (0..n)
            .map(|i| {
                if self.dim == 1 {
                    self.entries[0].values()[i].re
                } else {
                    let a = self.entry(0, 0).values()[i].re;
                    let b = self.entry(0, 1).values()[i].re;
                    let d = self.entry(1, 1).values()[i].re;
                    0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ_jk ∂_j(a_jk ∂_k v)`.
    pub fn divergence_form(&self, v: &GridField) -> Result<GridField, DyadicError> {
        let grad = v.gradient()?;
        let mut out = GridField::zeros(v.dim(), v.resolution())?;
        for j in 0..self.dim {
            let mut flux = GridField::zeros(v.dim(), v.resolution())?;
            for (k, gk) in grad.iter().enumerate() {
                flux = flux.add(&self.entry(j, k).mul_dealiased(gk)?)?;
            }
            out = out.add(&flux.derivative(j)?)?;
        }
        Ok(out)
    }
}

/// `Σ_jk ∂_j [φ_ν, a_jk] ∂_k v`.
pub fn commutator_term(
    part: &DyadicPartition,
    a: &CoefficientMatrix,
    v: &GridField,
    nu: usize,
) -> Result<GridField, DyadicError> {
    let grad = v.gradient()?;
    let mut out = GridField::zeros(v.dim(), v.resolution())?;
    for j in 0..a.dim() {
        let mut inner = GridField::zeros(v.dim(), v.resolution())?;
        for (k, gk) in grad.iter().enumerate() {
            inner = inner.add(&commutator(part, a.entry(j, k), gk, nu)?)?;
        }
        out = out.add(&inner.derivative(j)?)?;
    }
    Ok(out)
}

/// `Σ_ν ‖Σ_jk ∂_j [φ_ν, a_jk] ∂_k v‖² / ‖∇v‖²` over all admissible blocks.
pub fn commutator_ratio(
    part: &DyadicPartition,
    a: &CoefficientMatrix,
    v: &GridField,
) -> Result<f64, DyadicError> {
    let denom = v.gradient_norm_sq()?;
    if denom == 0.0 {
        return Err(DyadicError::ZeroField);
    }
    let mut num = 0.0;
    for nu in 0..=part.nu_max {
        num += commutator_term(part, a, v, nu)?.norm_sq();
    }
    Ok(num / denom)
}

/// A field generator: receives the resolution `N` and a grid point.
pub type FieldFn = Arc<dyn Fn(usize, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CommutatorProbeConfig {
    pub dim: usize,
    pub resolutions: Vec<usize>,
    /// scalar coefficients `a(x)` (the matrix is `a(x) Id`)
    pub a_family: Vec<(String, FieldFn)>,
    pub v_family: Vec<(String, FieldFn)>,
    pub slope_tol: f64,
}

impl CommutatorProbeConfig {
    /// `a = 1 + 0.3 cos x₁` against modes at fixed and resolution-scaled
    /// frequencies, on `N ∈ {256, 512, 1024}`.
    pub fn standard() -> Self {
        let a: FieldFn = Arc::new(|_, x| 1.0 + 0.3 * x[0].cos());
        let mode = |label: &str, f: fn(usize) -> f64| -> (String, FieldFn) {
            (
                label.to_string(),
                Arc::new(move |n, x: &[f64]| (f(n) * x[0]).cos()),
            )
        };
        Self {
            dim: 1,
            resolutions: vec![256, 512, 1024],
            a_family: vec![("1+0.3cos(x)".into(), a)],
            v_family: vec![
                mode("cos(8x)", |_| 8.0),
                mode("cos(N/16 x)", |n| (n / 16) as f64),
                mode("cos(3N/32 x)", |n| (3 * n / 32) as f64),
                mode("cos(N/8 x)", |n| (n / 8) as f64),
            ],
            slope_tol: 0.05,
        }
    }
}

fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

/// Measures the commutator ratio across resolutions and checks that its
/// maximum does not grow with `log₂ N`.
pub fn probe_commutator_bound(cfg: &CommutatorProbeConfig) -> Result<VerificationReport, DyadicError> {
    let mut rep = VerificationReport::new();
    let mut maxima = Vec::new();
    for &n in &cfg.resolutions {
        let part = DyadicPartition::for_resolution(cfg.dim, n)?;
        let mut worst: f64 = 0.0;
        for (_, af) in &cfg.a_family {
            let a = GridField::from_real_fn(cfg.dim, n, |x| af(n, x))?;
            let a = CoefficientMatrix::scalar(a)?;
            for (_, vf) in &cfg.v_family {
                let v = GridField::from_real_fn(cfg.dim, n, |x| vf(n, x))?;
                worst = worst.max(commutator_ratio(&part, &a, &v)?);
            }
        }
        rep.check(
            MODULE,
            &format!("commutator_ratio_n{n}"),
            "commutator-bound",
            worst,
            Relation::Below,
            f64::INFINITY,
        );
        maxima.push(worst);
    }
    if cfg.resolutions.len() >= 2 {
        let xs: Vec<f64> = cfg.resolutions.iter().map(|&n| (n as f64).log2()).collect();
        let slope = regression_slope(&xs, &maxima);
        // slope relative to the ratio scale so the test is unit-free
        let scale = maxima.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        rep.check(
            MODULE,
            "commutator_growth_slope",
            "commutator-bound",
            slope / scale,
            Relation::AtMost,
            cfg.slope_tol,
        );
        rep.detail("absolute_slope", slope);
        rep.detail("max_ratio", scale);
    }
    Ok(rep)
}

/// `max |φ_μ φ_ν|` over lattice frequencies of an `n`-point grid.
pub fn block_overlap(part: &DyadicPartition, mu: usize, nu: usize, n: usize) -> f64 {
    let half = (n / 2) as i64;
    let mut worst: f64 = 0.0;
    let range = -half..half;
    if part.dim == 1 {
        for k in range {
            let r = (k as f64).abs();
            worst = worst.max(part.weight(mu, r) * part.weight(nu, r));
        }
    } else {
        for k1 in range.clone() {
            for k2 in range.clone() {
                let r = (k1 as f64).hypot(k2 as f64);
                worst = worst.max(part.weight(mu, r) * part.weight(nu, r));
            }
        }
    }
    worst
}

/// Checks that blocks two or more apart have disjoint lattice support.
pub fn check_locality(part: &DyadicPartition, n: usize) -> VerificationReport {
    let mut worst: f64 = 0.0;
    for mu in 0..=part.nu_max {
        for nu in (mu + 2)..=part.nu_max {
            worst = worst.max(block_overlap(part, mu, nu, n));
        }
    }
    let mut rep = VerificationReport::new();
    rep.check(MODULE, "block_locality", "spectral-locality", worst, Relation::AtMost, 0.0);
    rep
}

/// Full desk-scale Littlewood–Paley check used by the suite.
pub fn verify_lp(seed: u64, dim: usize, n: usize, fields: usize) -> Result<VerificationReport, DyadicError> {
    let part = DyadicPartition::for_resolution(dim, n)?;
    let band = (1u64 << part.nu_max) as f64;
    let mut rep = VerificationReport::new();
    let mut worst_rec: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut bernstein_failures = 0usize;
    for i in 0..fields as u64 {
        let u = GridField::random_band_limited(dim, n, -1.0, band, seed.wrapping_add(i))?;
        let rec = reconstruct(&part, &u)?;
        worst_rec = worst_rec.max(rec.sub(&u)?.norm_l2() / u.norm_l2());
        let o = check_almost_orthogonality(&part, &u)?;
        lo = lo.min(o.ratio);
        hi = hi.max(o.ratio);
        for nu in 0..=part.nu_max {
            let b = check_bernstein(&part, &u, nu)?;
            bernstein_failures += b.summary.failed;
        }
    }
    let label = format!("{dim}d_n{n}");
    rep.check(MODULE, &format!("reconstruction_{label}"), "block-reconstruction", worst_rec, Relation::AtMost, 1e-12);
    rep.check(MODULE, &format!("orthogonality_min_{label}"), "almost-orthogonality", lo, Relation::AtLeast, 0.5);
    rep.check(MODULE, &format!("orthogonality_max_{label}"), "almost-orthogonality", hi, Relation::AtMost, 1.0 + 1e-12);
    rep.check(
        MODULE,
        &format!("bernstein_violations_{label}"),
        "bernstein-upper",
        bernstein_failures as f64,
        Relation::AtMost,
        0.0,
    );
    rep.extend(check_locality(&part, n));
    let probe = GridField::random_band_limited(dim, n, -1.0, band, seed)?;
    let c = GridField::from_real_fn(dim, n, |_| 2.5)?;
    let mut worst_const: f64 = 0.0;
    for nu in 0..=part.nu_max {
        worst_const = worst_const.max(commutator(&part, &c, &probe, nu)?.max_abs());
    }
    rep.check(
        MODULE,
        &format!("commutator_constant_{label}"),
        "constants-commute",
        worst_const / probe.max_abs(),
        Relation::AtMost,
        1e-13,
    );
    Ok(rep)
}
