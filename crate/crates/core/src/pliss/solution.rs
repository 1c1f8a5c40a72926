//! Closed-form evaluation of `u`, its derivatives, `l`, and `b₁, b₂, c`.

use super::cutoffs::{a_jet, b_jet, c_jet, j_jet, make_cutoffs, CutoffFamily, Jet};
use super::sequences::{build_sequences, choose_k0, default_segments, PlissSequences};
use super::PlissError;
use crate::modulus::Modulus;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// `u` supported in `{t <= 0}`, operator `∂_t − ∂²_{x1} − l ∂²_{x2}`
    ConstructionTime,
    /// `t → −t`: `u` supported in `{t >= 0}`, operator
    /// `∂_t + ∂²_{x1} + l ∂²_{x2}`
    ReflectedTime,
}

/// Which piece of the definition produced a point value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `t < a_1`: the single mode `v_1`
    Initial,
    /// `a_n <= t < a_{n+1}`
    Segment(usize),
    /// the side where `u ≡ 0`
    Zero,
}

/// Point values. `u`-type fields are scaled by `exp(-log_scale)`; `l`, `b1`,
/// `b2`, `c` are scale free. `lu` is the operator applied to `u` in the
/// current orientation, `residual` the full equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointEval {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub branch: Branch,
    pub log_scale: f64,
    pub u: f64,
    pub u_t: f64,
    pub u_x1: f64,
    pub u_x2: f64,
    pub u_x1x1: f64,
    pub u_x2x2: f64,
    pub l: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
    pub lu: f64,
    /// `Łu` recomputed from the derivative fields, before cancellation
    pub lu_direct: f64,
    pub residual: f64,
    /// sum of magnitudes of every term entering `Łu`; the natural scale for
    /// residuals, since `Łu` itself may cancel to nothing
    pub envelope: f64,
    /// `|u| + |A| e^{..} + ...`: magnitude scale of `u` without the cosines
    pub u_envelope: f64,
    /// `D = u² + |∇u|²` was below the guard while `Łu` was not
    pub degenerate: bool,
}

impl PointEval {
    fn zero(t: f64, x1: f64, x2: f64) -> Self {
        PointEval {
            t,
            x1,
            x2,
            branch: Branch::Zero,
            log_scale: 0.0,
            u: 0.0,
            u_t: 0.0,
            u_x1: 0.0,
            u_x2: 0.0,
            u_x1x1: 0.0,
            u_x2x2: 0.0,
            l: 1.0,
            b1: 0.0,
            b2: 0.0,
            c: 0.0,
            lu: 0.0,
            lu_direct: 0.0,
            residual: 0.0,
            envelope: 0.0,
            u_envelope: 0.0,
            degenerate: false,
        }
    }

    /// Re-expresses the scaled fields relative to `exp(log_scale)`.
    pub fn rescale(&self, log_scale: f64) -> Self {
        let f = (self.log_scale - log_scale).exp();
        PointEval {
            log_scale,
            u: self.u * f,
            u_t: self.u_t * f,
            u_x1: self.u_x1 * f,
            u_x2: self.u_x2 * f,
            u_x1x1: self.u_x1x1 * f,
            u_x2x2: self.u_x2x2 * f,
            lu: self.lu * f,
            lu_direct: self.lu_direct * f,
            residual: self.residual * f,
            envelope: self.envelope * f,
            u_envelope: self.u_envelope * f,
            ..*self
        }
    }

    /// `|residual| / envelope`, or 0 where the envelope vanishes.
    pub fn relative_residual(&self) -> f64 {
        if self.envelope > 0.0 {
            self.residual.abs() / self.envelope
        } else {
            self.residual.abs()
        }
    }

    /// `|Łu − (identity form)| / envelope`.
    pub fn identity_mismatch(&self) -> f64 {
        if self.envelope > 0.0 {
            (self.lu - self.lu_direct).abs() / self.envelope
        } else {
            (self.lu - self.lu_direct).abs()
        }
    }
}

/// The built example: sequences, cutoffs and the orientation of the view.
#[derive(Debug, Clone)]
pub struct PlissConstruction {
    pub seqs: PlissSequences,
    pub cuts: CutoffFamily,
    pub orientation: Orientation,
}

/// Lower-order coefficients from the scaled `u`, `∇u`, `Łu`.
fn lower_order(u: f64, u1: f64, u2: f64, lu: f64, u_env: f64) -> (f64, f64, f64, bool) {
    let d = u * u + u1 * u1 + u2 * u2;
    let guard = 1e-300 + 1e-14 * u_env * u_env;
    if d > guard {
        let k = -lu / d;
        (k * u1, k * u2, k * u, false)
    } else {
        (0.0, 0.0, 0.0, lu.abs() > guard)
    }
}

impl PlissConstruction {
    /// Builds the example for `mu`. `k0 = None` picks the smallest admissible
    /// shift; `segments = None` uses the default horizon rule.
    pub fn new(
        mu: &Modulus,
        k0: Option<u64>,
        segments: Option<usize>,
        orientation: Orientation,
    ) -> Result<Self, PlissError> {
        let cuts = make_cutoffs();
        let probe_n = segments.unwrap_or(super::sequences::MIN_SEGMENTS);
        let k0 = match k0 {
            Some(k) => k,
            None => choose_k0(mu, probe_n, cuts.j_prime_sup)?,
        };
        let n = match segments {
            Some(n) => n,
            None => default_segments(mu, k0)?,
        };
        let seqs = build_sequences(mu, k0, n)?;
        Ok(Self {
            seqs,
            cuts,
            orientation,
        })
    }

    pub fn with_orientation(&self, orientation: Orientation) -> Self {
        Self {
            orientation,
            ..self.clone()
        }
    }

    pub fn segments(&self) -> usize {
        self.seqs.segments
    }

    /// `a_{N+1}`: construction-time points in `[a_{N+1}, 0)` are not built.
    pub fn horizon(&self) -> f64 {
        self.seqs.a[self.seqs.segments + 1]
    }

    /// Construction-time evaluation window `[a_1 − 1, 1]`.
    pub fn window(&self) -> (f64, f64) {
        (self.seqs.a[1] - 1.0, 1.0)
    }

    fn construction_t(&self, t: f64) -> f64 {
        match self.orientation {
            Orientation::ConstructionTime => t,
            Orientation::ReflectedTime => -t,
        }
    }

    /// Locates construction-time `t`.
    pub fn locate(&self, t: f64) -> Result<Branch, PlissError> {
        let (lo, hi) = self.window();
        if !(t >= lo && t <= hi) {
            return Err(PlissError::OutOfDomain { t, lo, hi });
        }
        if t >= 0.0 {
            return Ok(Branch::Zero);
        }
        let a = &self.seqs.a;
        if t < a[1] {
            return Ok(Branch::Initial);
        }
        let limit = self.horizon();
        if t >= limit {
            return Err(PlissError::Horizon { t, limit });
        }
        let n = a[1..=self.seqs.segments + 1].partition_point(|&x| x <= t);
        Ok(Branch::Segment(n))
    }

    /// `l` at `t` in the current orientation.
    pub fn eval_l(&self, t: f64) -> Result<f64, PlissError> {
        let tc = self.construction_t(t);
        Ok(match self.locate(tc)? {
            Branch::Segment(n) => self.l_on_segment(n, (tc - self.seqs.a[n]) / self.seqs.r[n]),
            _ => 1.0,
        })
    }

    /// `l` of the truncated example: identical to [`Self::eval_l`] where the
    /// example is built and `1` on the unbuilt strip before `0`. Continuous
    /// because `J'` vanishes at every junction.
    pub fn eval_l_truncated(&self, t: f64) -> Result<f64, PlissError> {
        match self.eval_l(t) {
            Err(PlissError::Horizon { .. }) => Ok(1.0),
            other => other,
        }
    }

    /// `l` on segment `n` at local coordinate `s = (t − a_n)/r_n`.
    pub fn l_on_segment(&self, n: usize, s: f64) -> f64 {
        let sq = &self.seqs;
        1.0 + j_jet(s).d1 * sq.p[n] / (sq.r[n] * sq.z[n])
    }

    /// Full point evaluation in the current orientation.
    pub fn eval_solution(&self, t: f64, x1: f64, x2: f64) -> Result<PointEval, PlissError> {
        let tc = self.construction_t(t);
        let ev = match self.locate(tc)? {
            Branch::Zero => PointEval::zero(tc, x1, x2),
            Branch::Initial => self.eval_initial(tc, x1, x2),
            Branch::Segment(n) => self.eval_segment(n, tc - self.seqs.a[n], x1, x2, None)?,
        };
        Ok(self.orient(ev, t))
    }

    /// `(b₁, b₂, c)` in the current orientation.
    pub fn eval_lower_order(&self, t: f64, x1: f64, x2: f64) -> Result<(f64, f64, f64), PlissError> {
        let e = self.eval_solution(t, x1, x2)?;
        Ok((e.b1, e.b2, e.c))
    }

    /// Converts a construction-time evaluation to the current orientation.
    fn orient(&self, ev: PointEval, t: f64) -> PointEval {
        match self.orientation {
            Orientation::ConstructionTime => PointEval { t, ..ev },
            Orientation::ReflectedTime => {
                let u_t = -ev.u_t;
                let (b1, b2, c) = (-ev.b1, -ev.b2, -ev.c);
                let lu = -ev.lu;
                let lu_direct = u_t + ev.u_x1x1 + ev.l * ev.u_x2x2;
                let residual = lu_direct + b1 * ev.u_x1 + b2 * ev.u_x2 + c * ev.u;
                PointEval {
                    t,
                    u_t,
                    b1,
                    b2,
                    c,
                    lu,
                    lu_direct,
                    residual,
                    ..ev
                }
            }
        }
    }

    /// `u = v_1` on `t < a_1`, construction time.
    fn eval_initial(&self, t: f64, x1: f64, x2: f64) -> PointEval {
        let sq = &self.seqs;
        let z = sq.z[1];
        let k = z.sqrt();
        let (s1, c1) = (k * x1).sin_cos();
        let u = c1;
        let u_t = -z * u;
        let u_x1x1 = -z * u;
        let (b1, b2, c, degenerate) = lower_order(u, -k * s1, 0.0, 0.0, 1.0);
        let lu_direct = u_t - u_x1x1;
        PointEval {
            t,
            x1,
            x2,
            branch: Branch::Initial,
            log_scale: -z * (t - sq.a[1]),
            u,
            u_t,
            u_x1: -k * s1,
            u_x2: 0.0,
            u_x1x1,
            u_x2x2: 0.0,
            l: 1.0,
            b1,
            b2,
            c,
            lu: 0.0,
            lu_direct,
            residual: lu_direct + b1 * (-k * s1) + c * u,
            envelope: 2.0 * z * u.abs(),
            u_envelope: 1.0,
            degenerate,
        }
    }

    /// Construction-time evaluation on segment `n` at `τ = t − a_n`.
    ///
    /// With `ref_log_scale` the fields are expressed relative to that
    /// scale instead of the local maximum exponent, which makes values at
    /// nearby points directly comparable (finite differences, junctions).
    pub fn eval_segment(
        &self,
        n: usize,
        tau: f64,
        x1: f64,
        x2: f64,
        ref_log_scale: Option<f64>,
    ) -> Result<PointEval, PlissError> {
        let sq = &self.seqs;
        if n == 0 || n > sq.segments {
            return Err(PlissError::BadSegment { n, max: sq.segments });
        }
        let (r, p, q) = (sq.r[n], sq.p[n], sq.q[n]);
        let (zn, zn1) = (sq.z[n], sq.z[n + 1]);
        let s = tau / r;
        let (ja, jb, jc, jj): (Jet, Jet, Jet, Jet) = (a_jet(s), b_jet(s), c_jet(s), j_jet(s));

        // exponents relative to −q_n; the three modes differ by O(p_n)
        let base = -zn * tau;
        let e = [base, base + jj.v * p, base - p * s];
        let active = [
            ja.v != 0.0 || ja.d1 != 0.0,
            jb.v != 0.0 || jb.d1 != 0.0,
            jc.v != 0.0 || jc.d1 != 0.0,
        ];
        let local = e
            .iter()
            .zip(active)
            .filter(|(_, on)| *on)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let rel = match ref_log_scale {
            Some(l) => l + q,
            None => local,
        };
        let log_scale = -q + rel;
        let g = |i: usize| if active[i] { (e[i] - rel).exp() } else { 0.0 };
        let (g1, g2, g3) = (g(0), g(1), g(2));

        let (kn, kn1) = (zn.sqrt(), zn1.sqrt());
        let (sn, cn) = (kn * x1).sin_cos();
        let (s2, c2) = (kn * x2).sin_cos();
        let (sn1, cn1) = (kn1 * x1).sin_cos();
        let v = g1 * cn;
        let w = g2 * c2;
        let vv = g3 * cn1;

        let jt = jj.d1 * p / r; // J_n'(t) p_n
        let ta = [ja.d1 / r * v, -zn * ja.v * v];
        let tb = [jb.d1 / r * w, jb.v * (-zn + jt) * w];
        let tc = [jc.d1 / r * vv, -zn1 * jc.v * vv];
        let u = ja.v * v + jb.v * w + jc.v * vv;
        let u_t = ta[0] + ta[1] + tb[0] + tb[1] + tc[0] + tc[1];
        let u_x1 = -ja.v * kn * g1 * sn - jc.v * kn1 * g3 * sn1;
        let u_x2 = -jb.v * kn * g2 * s2;
        let u_x1x1 = -zn * ja.v * v - zn1 * jc.v * vv;
        let u_x2x2 = -zn * jb.v * w;
        let l = 1.0 + jt / zn;

        // Łv_n = Łv_{n+1} = 0 and Łw_n = 2 J_n' p_n w_n, so only the cutoff
        // derivatives and the w-defect survive
        let lu = ta[0] + tb[0] + 2.0 * jb.v * jt * w + tc[0];
        let lu_direct = u_t - u_x1x1 - l * u_x2x2;
        let envelope = ta.iter().chain(&tb).chain(&tc).map(|x| x.abs()).sum::<f64>()
            + (zn * ja.v * v).abs()
            + (zn1 * jc.v * vv).abs()
            + (l * u_x2x2).abs();
        let u_envelope = ja.v * g1 + jb.v * g2 + jc.v * g3;
        let (b1, b2, c, degenerate) = lower_order(u, u_x1, u_x2, lu, u_envelope);
        let residual = lu_direct + b1 * u_x1 + b2 * u_x2 + c * u;
        Ok(PointEval {
            t: sq.a[n] + tau,
            x1,
            x2,
            branch: Branch::Segment(n),
            log_scale,
            u,
            u_t,
            u_x1,
            u_x2,
            u_x1x1,
            u_x2x2,
            l,
            b1,
            b2,
            c,
            lu,
            lu_direct,
            residual,
            envelope,
            u_envelope,
            degenerate,
        })
    }
}
