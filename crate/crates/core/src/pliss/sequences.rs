//! The sequences `a_n, r_n, z_n, q_n, p_n` driving the construction, and the
//! search for the shift `k0`.
//!
//! With `m = n + k0` and `f(σ) = 1/(σ² μ(1/σ))` the choice is
//! `r_n = f(m)`, `a_n = -Σ_{j ≥ m} f(j)`, `z_n = m³`. Because `∫ ds/μ` is
//! finite, the tail sum converges, but far too slowly to sum term by term:
//! for `μ = √s` the tail decays like `2 m^{-1/2}`. We sum directly up to a
//! cutoff `M` and replace the rest by the midpoint comparison
//! `Σ_{j ≥ M} f(j) ≈ ∫_{M-1/2}^∞ f = ∫_0^{1/(M-1/2)} ds/μ(s)`.

use super::{PlissError, MODULE_NAME};
use crate::modulus::{normalize_sqrt_cap, osgood_integral, Modulus, OsgoodClass};
use crate::quad;

/// Upper limit for `k0` in [`choose_k0`].
pub const K0_CAP: u64 = 1_000_000;
/// Smallest accepted number of segments.
pub const MIN_SEGMENTS: usize = 10;
/// Target for the default horizon: `exp(-q_n + 2 p_n)` below this.
pub const DEFAULT_HORIZON_DECAY: f64 = 1e-16;

/// Sequence arrays, 1-based: index 0 holds `NaN` and `a[n]` is `a_n`.
/// Entries exist for `n = 1..=N+2`.
#[derive(Debug, Clone)]
pub struct PlissSequences {
    pub mu: Modulus,
    pub k0: u64,
    /// number of segments `N`
    pub segments: usize,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `c` with `μ(s) >= c s`
    pub c_lin: f64,
}

impl PlissSequences {
    /// `m = n + k0` as a float.
    pub fn m(&self, n: usize) -> f64 {
        (n as u64 + self.k0) as f64
    }

    /// `p_n r_n^{-1} z_n^{-1}`, evaluated in the cancellation-free form
    /// `(z_{n+1} - z_n)/z_n`.
    pub fn ratio(&self, n: usize) -> f64 {
        ratio_at(self.m(n))
    }

    /// `(p_n r_n^{-1} z_n^{-1}) / μ(r_n)`.
    pub fn chain(&self, n: usize) -> f64 {
        self.ratio(n) / self.mu.eval(self.r[n])
    }

    pub fn last_index(&self) -> usize {
        self.segments + 2
    }
}

/// `f(σ) = 1/(σ² μ(1/σ))`.
#[inline]
pub fn term(mu: &Modulus, sigma: f64) -> f64 {
    1.0 / (sigma * sigma * mu.eval(1.0 / sigma))
}

/// `(z_{n+1} - z_n)/z_n = 3/m + 3/m² + 1/m³`.
#[inline]
fn ratio_at(m: f64) -> f64 {
    (3.0 * m * m + 3.0 * m + 1.0) / (m * m * m)
}

/// Makes `μ` admissible for the construction: rejects divergent moduli,
/// classifies unknown ones, and applies the `√s` cap.
pub fn admissible_modulus(mu: &Modulus) -> Result<Modulus, PlissError> {
    let class = match mu.osgood_class() {
        OsgoodClass::Unknown => osgood_integral(mu, 1e-12)?.classification,
        known => known,
    };
    match class {
        OsgoodClass::Divergent => Err(PlissError::DivergentModulus(mu.name().to_string())),
        OsgoodClass::Unknown => Err(PlissError::Unclassified(mu.name().to_string())),
        OsgoodClass::Convergent => Ok(if mu.is_normalized() {
            mu.clone()
        } else {
            normalize_sqrt_cap(mu)
        }),
    }
}

/// `∫_0^h ds/μ(s)` by dyadic panels `[h 2^{-k-1}, h 2^{-k}]`.
///
/// Panel integrals of a convergent modulus shrink roughly geometrically;
/// once the panel ratio has settled, the remainder is closed off with the
/// geometric series it predicts. This is exact for power laws.
pub fn head_integral(mu: &Modulus, h: f64) -> Result<f64, PlissError> {
    const MIN_PANELS: usize = 8;
    const MAX_PANELS: usize = 900;
    let inv = |s: f64| 1.0 / mu.eval(s);
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    let mut prev_ratio = f64::NAN;
    let mut hi = h;
    for k in 0..MAX_PANELS {
        let lo = 0.5 * hi;
        let d = quad::integrate(inv, lo, hi, 0.0, 1e-13)?.value;
        sum += d;
        if let Some(dp) = prev {
            let ratio = d / dp;
            if k >= MIN_PANELS && (ratio - prev_ratio).abs() <= 1e-9 * ratio {
                if ratio >= 1.0 {
                    return Err(PlissError::TailNotSummable { ratio });
                }
                return Ok(sum + d * ratio / (1.0 - ratio));
            }
            prev_ratio = ratio;
        }
        prev = Some(d);
        hi = lo;
    }
    Err(PlissError::TailNotSummable { ratio: prev_ratio })
}

/// `Σ_{j >= m0} f(j)` to roughly 1e-13 relative accuracy.
pub fn tail_sum(mu: &Modulus, m0: u64) -> Result<f64, PlissError> {
    // Neumaier-compensated running sum of the direct part
    let (mut direct, mut comp) = (0.0_f64, 0.0_f64);
    let mut start = m0;
    let mut end = (2 * m0).max(1024);
    loop {
        let mut chunk = 0.0;
        for m in (start..end).rev() {
            chunk += term(mu, m as f64);
        }
        let t = direct + chunk;
        comp += if direct.abs() >= chunk.abs() {
            (direct - t) + chunk
        } else {
            (chunk - t) + direct
        };
        direct = t;
        let cut = end as f64;
        let rest = head_integral(mu, 1.0 / (cut - 0.5))?;
        let total = direct + comp + rest;
        let midpoint_err = (term(mu, cut - 0.5) - term(mu, cut + 0.5)).abs() / 24.0;
        if midpoint_err <= 1e-13 * total {
            return Ok(total);
        }
        if end > (1u64 << 40) {
            return Err(PlissError::TailNotSummable { ratio: f64::NAN });
        }
        start = end;
        end *= 2;
    }
}

/// Builds every sequence for `n = 1..=N+2`.
pub fn build_sequences(mu: &Modulus, k0: u64, segments: usize) -> Result<PlissSequences, PlissError> {
    if segments < MIN_SEGMENTS {
        return Err(PlissError::TooFewSegments(segments));
    }
    let mu = admissible_modulus(mu)?;
    let last = segments + 2;
    let mm = |n: usize| (n as u64 + k0) as f64;

    let mut r = vec![f64::NAN; last + 1];
    let mut z = vec![f64::NAN; last + 1];
    let mut p = vec![f64::NAN; last + 1];
    for n in 1..=last {
        let m = mm(n);
        r[n] = term(&mu, m);
        z[n] = m * m * m;
        // z_{n+1} - z_n = 3m² + 3m + 1, exact in f64 for m <= K0_CAP + N
        p[n] = (3.0 * m * m + 3.0 * m + 1.0) * r[n];
    }
    let mut q = vec![f64::NAN; last + 1];
    q[1] = 0.0;
    for n in 2..=last {
        q[n] = q[n - 1] + z[n] * r[n - 1];
    }
    let mut a = vec![f64::NAN; last + 1];
    a[last] = -tail_sum(&mu, last as u64 + k0)?;
    for n in (1..last).rev() {
        a[n] = a[n + 1] - r[n];
    }
    if p[1..=segments].iter().any(|&v| v <= 1.0) {
        return Err(PlissError::K0TooSmall {
            k0,
            reason: "p_n <= 1 for some n".into(),
        });
    }
    let c_lin = mu.lower_linear_constant();
    Ok(PlissSequences {
        mu,
        k0,
        segments,
        a,
        r,
        z,
        q,
        p,
        c_lin,
    })
}

/// Whether `k0` satisfies every requirement on `n = 1..=N`. Each one is
/// monotone in `k0`, so feasibility is too.
fn k0_feasible(mu: &Modulus, k0: u64, segments: usize, j_prime_sup: f64) -> bool {
    let bound = 1.0 / (2.0 * j_prime_sup);
    (1..=segments).all(|n| {
        let m = (n as u64 + k0) as f64;
        let f = term(mu, m);
        let p = (3.0 * m * m + 3.0 * m + 1.0) * f;
        let ratio = ratio_at(m);
        p > 1.0 && ratio <= bound && m * f <= 1.0 && (ratio / mu.eval(f)).is_finite()
    })
}

/// Smallest `k0 <= K0_CAP` meeting the parabolicity, `p_n > 1`, and
/// Hölder-chain premises on the first `N` segments.
///
/// The search is seeded from `7/(1 + k0) <= 1/(2‖J'‖)`, i.e.
/// `k0 = ⌈14‖J'‖⌉ - 1`, which the closed-form ratio bound makes feasible
/// for the parabolicity requirement; the seed is checked, doubled if
/// needed, then bisected down.
pub fn choose_k0(mu: &Modulus, segments: usize, j_prime_sup: f64) -> Result<u64, PlissError> {
    let mu = admissible_modulus(mu)?;
    let mut hi = ((14.0 * j_prime_sup).ceil() as u64).saturating_sub(1).max(1);
    while !k0_feasible(&mu, hi, segments, j_prime_sup) {
        if hi >= K0_CAP {
            return Err(PlissError::NoK0 { cap: K0_CAP });
        }
        hi = (2 * hi).min(K0_CAP);
    }
    if k0_feasible(&mu, 0, segments, j_prime_sup) {
        return Ok(0);
    }
    let mut lo = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if k0_feasible(&mu, mid, segments, j_prime_sup) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `n >= MIN_SEGMENTS` with `exp(-q_n + 2 p_n) < 1e-16`, found on
/// the closed-form sequences (no tail sum needed).
pub fn default_segments(mu: &Modulus, k0: u64) -> Result<usize, PlissError> {
    let mu = admissible_modulus(mu)?;
    let target = DEFAULT_HORIZON_DECAY.ln();
    let mut q = 0.0;
    let mut r_prev = f64::NAN;
    for n in 1..=1_000_000usize {
        let m = (n as u64 + k0) as f64;
        let r = term(&mu, m);
        if n >= 2 {
            q += m * m * m * r_prev;
        }
        let p = (3.0 * m * m + 3.0 * m + 1.0) * r;
        if -q + 2.0 * p < target {
            return Ok(n.max(MIN_SEGMENTS));
        }
        r_prev = r;
    }
    Err(PlissError::K0TooSmall {
        k0,
        reason: format!("{MODULE_NAME}: no horizon reaches the decay target"),
    })
}
