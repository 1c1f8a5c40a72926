//! Quadrature: adaptive Gauss–Kronrod (G7/K15) with global bisection, and
//! Gauss–Legendre rules for fixed-panel integration.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}]: estimate {value} ± {err:e}")]
    NoConvergence {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
        tol: f64,
    },
    #[error("integrand is not finite at x = {x}")]
    NotFinite { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NotFinite { x: c });
    }
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let (x1, x2) = (c - dx, c + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NotFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NotFinite { x: x2 });
        }
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Adaptive G7/K15 integration of `f` over `[a, b]`.
///
/// Subdivides the panel with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_panels` is hit.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral, QuadError> {
    integrate_with_limit(f, a, b, abs_tol, rel_tol, 4000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral, QuadError> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_err: 0.0,
            intervals: 0,
        });
    }
    let (v, e) = kronrod15(&f, a, b)?;
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    loop {
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            break;
        }
        if panels.len() >= max_panels {
            return Err(QuadError::NoConvergence {
                a,
                b,
                value: total,
                err,
                tol,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // panel can no longer be split in floating point
            return Err(QuadError::NoConvergence {
                a,
                b,
                value: total,
                err,
                tol,
            });
        }
        let (v1, e1) = kronrod15(&f, lo, mid)?;
        let (v2, e2) = kronrod15(&f, mid, hi)?;
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    // re-sum to shed accumulated update drift
    let value = panels.iter().map(|p| p.2).sum();
    let abs_err = panels.iter().map(|p| p.3).sum();
    Ok(Integral {
        value,
        abs_err,
        intervals: panels.len(),
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let r = integrate(|x| x.powi(20) - 3.0 * x, 0.0, 1.0, 1e-14, 0.0).unwrap();
        assert!((r.value - (1.0 / 21.0 - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn handles_endpoint_singularity() {
        let r = integrate(|s: f64| 1.0 / s.sqrt(), 1e-12, 1.0, 1e-11, 0.0).unwrap();
        assert!((r.value - (2.0 - 2e-6)).abs() < 1e-9);
    }

    #[test]
    fn reports_non_finite_integrand() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-9, 0.0);
        assert!(matches!(r, Err(QuadError::NotFinite { .. })));
    }

    #[test]
    fn gauss_legendre_weights_and_exactness() {
        for n in [1, 2, 5, 16, 64, 128] {
            let gl = GaussLegendre::new(n);
            let ws: f64 = gl.weights.iter().sum();
            assert!((ws - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let v = gl.integrate(|x| x.powi(deg as i32 - 1), 0.0, 1.0);
            assert!((v - 1.0 / deg as f64).abs() < 1e-13, "n={n}");
        }
    }
}
