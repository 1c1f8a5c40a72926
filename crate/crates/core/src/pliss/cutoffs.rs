//! The four gluing cutoffs `A`, `B`, `C`, `J`, all built from the smoothstep.

use crate::smooth::{step, step_d1, step_d2};
use serde::{Deserialize, Serialize};

/// Values of one cutoff and its first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    /// measured `‖J'‖_∞`
    pub j_prime_sup: f64,
    /// measured `‖J''‖_∞`
    pub j_second_sup: f64,
    /// abscissa of the `‖J'‖_∞` maximum
    pub j_prime_argmax: f64,
}

/// `S(k (s - s0))` with its derivatives in `s`.
fn ramp(s: f64, s0: f64, k: f64) -> Jet {
    let y = k * (s - s0);
    Jet {
        v: step(y),
        d1: k * step_d1(y),
        d2: k * k * step_d2(y),
    }
}

fn product(p: Jet, q: Jet) -> Jet {
    Jet {
        v: p.v * q.v,
        d1: p.d1 * q.v + p.v * q.d1,
        d2: p.d2 * q.v + 2.0 * p.d1 * q.d1 + p.v * q.d2,
    }
}

fn one_minus(p: Jet) -> Jet {
    Jet {
        v: 1.0 - p.v,
        d1: -p.d1,
        d2: -p.d2,
    }
}

/// `A = 1` on `s <= 1/5`, `0` on `s >= 1/4`.
pub fn a_jet(s: f64) -> Jet {
    one_minus(ramp(s, 0.2, 20.0))
}

/// `B = 0` outside `(0, 1)`, `1` on `[1/6, 1/2]`.
pub fn b_jet(s: f64) -> Jet {
    product(ramp(s, 0.0, 6.0), one_minus(ramp(s, 0.5, 2.0)))
}

/// `C = 0` on `s <= 1/4`, `1` on `s >= 1/3`.
pub fn c_jet(s: f64) -> Jet {
    ramp(s, 0.25, 12.0)
}

/// `J = -2` on `s <= 1/6` and `s >= 1/2`, `2` on `[1/5, 1/3]`.
pub fn j_jet(s: f64) -> Jet {
    let up = ramp(s, 1.0 / 6.0, 30.0);
    let down = one_minus(ramp(s, 1.0 / 3.0, 6.0));
    let p = product(up, down);
    Jet {
        v: -2.0 + 4.0 * p.v,
        d1: 4.0 * p.d1,
        d2: 4.0 * p.d2,
    }
}

/// Maximizes `f` on `[0, 1]`: dense scan, then golden-section refinement
/// around the best sample. Returns `(argmax, max)`.
fn sup_on_unit<F: Fn(f64) -> f64>(f: F) -> (f64, f64) {
    const SAMPLES: usize = 20_000;
    let h = 1.0 / SAMPLES as f64;
    let (mut best_i, mut best) = (0usize, f64::NEG_INFINITY);
    for i in 0..=SAMPLES {
        let v = f(i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * h, (best_i as f64 + 1.0) * h);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let v = f(x);
    if v >= best {
        (x, v)
    } else {
        (best_i as f64 * h, best)
    }
}

/// Builds the cutoff family and measures `‖J'‖_∞`, `‖J''‖_∞`.
pub fn make_cutoffs() -> CutoffFamily {
    let (argmax, j1) = sup_on_unit(|s| j_jet(s).d1.abs());
    let (_, j2) = sup_on_unit(|s| j_jet(s).d2.abs());
    CutoffFamily {
        j_prime_sup: j1,
        j_second_sup: j2,
        j_prime_argmax: argmax,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_values() {
        assert_eq!(a_jet(0.1).v, 1.0);
        assert_eq!(a_jet(0.3).v, 0.0);
        assert_eq!(j_jet(0.25).v, 2.0);
        assert_eq!(j_jet(0.6).v, -2.0);
        assert_eq!(b_jet(1.0 / 3.0).v, 1.0);
        assert_eq!(b_jet(-0.1).v, 0.0);
        assert_eq!(b_jet(1.0).v, 0.0);
        assert_eq!(c_jet(0.2).v, 0.0);
        assert_eq!(c_jet(0.5).v, 1.0);
    }

    #[test]
    fn junction_values() {
        // s = 0 and s = 1 are where consecutive segments meet
        for jet in [a_jet(0.0), b_jet(0.0), c_jet(0.0), b_jet(1.0), c_jet(1.0), a_jet(1.0)] {
            assert_eq!(jet.d1, 0.0);
            assert_eq!(jet.d2, 0.0);
        }
        assert_eq!(a_jet(0.0).v, 1.0);
        assert_eq!(c_jet(1.0).v, 1.0);
        assert_eq!(j_jet(0.0).d1, 0.0);
        assert_eq!(j_jet(1.0).d1, 0.0);
    }

    #[test]
    fn derivative_sup_of_j() {
        let c = make_cutoffs();
        // steepest point of the rising ramp: S'(1/2) = 2, scaled by 4·30
        assert!((c.j_prime_sup - 240.0).abs() < 1e-9);
        assert!((c.j_prime_argmax - (1.0 / 6.0 + 1.0 / 60.0)).abs() < 1e-6);
        assert!(c.j_second_sup > 3.5e4 && c.j_second_sup < 3.6e4);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for i in 1..200 {
            let s = i as f64 / 200.0;
            for f in [a_jet, b_jet, c_jet, j_jet] {
                let fd = (f(s + h).v - f(s - h).v) / (2.0 * h);
                let fd2 = (f(s + h).d1 - f(s - h).d1) / (2.0 * h);
                assert!((fd - f(s).d1).abs() < 1e-5 * (1.0 + f(s).d1.abs()));
                assert!((fd2 - f(s).d2).abs() < 1e-3 * (1.0 + f(s).d2.abs()));
            }
        }
    }
}
