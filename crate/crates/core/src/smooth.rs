//! The `C^∞` smoothstep shared by the Littlewood–Paley profile and the
//! counterexample cutoffs.
//!
//! `S(x) = E(x) / (E(x) + E(1 - x))` with `E(x) = exp(-1/x)` for `x > 0` and
//! `0` otherwise. `S` is exactly `0` on `x <= 0`, exactly `1` on `x >= 1`, and
//! every derivative vanishes on both plateaus.

/// Value of the smoothstep.
pub fn step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let g = 1.0 / x - 1.0 / (1.0 - x);
    // S = 1 / (1 + e^g), evaluated without overflow on either side
    if g > 0.0 {
        let e = (-g).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + g.exp())
    }
}

/// `S(1-S)` written as `e^{-|g|} / (1 + e^{-|g|})^2`.
fn logistic_core(x: f64) -> (f64, f64) {
    let g = 1.0 / x - 1.0 / (1.0 - x);
    let e = (-g.abs()).exp();
    (e / ((1.0 + e) * (1.0 + e)), g)
}

/// First derivative `S'(x) = S(1-S) (1/x² + 1/(1-x)²)`.
pub fn step_d1(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (core, _) = logistic_core(x);
    if core == 0.0 {
        return 0.0;
    }
    let y = 1.0 - x;
    core * (1.0 / (x * x) + 1.0 / (y * y))
}

/// Second derivative `S'' = S'(1 - 2S) h + S(1-S) h'` with
/// `h = 1/x² + 1/(1-x)²`.
pub fn step_d2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (core, _) = logistic_core(x);
    if core == 0.0 {
        return 0.0;
    }
    let y = 1.0 - x;
    let h = 1.0 / (x * x) + 1.0 / (y * y);
    let dh = -2.0 / (x * x * x) + 2.0 / (y * y * y);
    let s = step(x);
    let d1 = core * h;
    d1 * (1.0 - 2.0 * s) * h + core * dh
}
