//! Arithmetic checks on the sequences, sampled checks on the solution, and
//! the Hölder-type regularity of `l`.

use super::sequences::{head_integral, tail_sum, term};
use super::solution::{Orientation, PlissConstruction};
use super::MODULE_NAME as M;
use crate::report::{Relation, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Rounding slack for inequalities that hold with equality for `μ = √s`.
const EQ_SLACK: f64 = 1e-12;

fn max_of<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

fn min_of<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

/// Checks every requirement on the sequences for `n = 1..=N`.
pub fn verify_conditions(pc: &PlissConstruction) -> VerificationReport {
    let sq = &pc.seqs;
    let big_n = sq.segments;
    let ns = || 1..=big_n;
    let mu = |s: f64| sq.mu.eval(s);
    let mut rep = VerificationReport::new();

    // a_n: increasing, inside (-1, 0), and converging to 0
    let step = max_of(ns().map(|n| sq.a[n] - sq.a[n + 1]));
    rep.check(M, "a_increasing", "a-sequence-monotone", step, Relation::Below, 0.0);
    rep.check(M, "a_first_above_minus_one", "a-sequence-monotone", sq.a[1], Relation::Above, -1.0);
    rep.check(M, "a_last_negative", "a-sequence-monotone", sq.a[big_n + 1], Relation::Below, 0.0);
    let tail_bound = head_integral(&sq.mu, 1.0 / sq.m(big_n)).unwrap_or(f64::NAN);
    rep.check(
        M,
        "a_tail_bound",
        "a-sequence-limit",
        sq.a[big_n + 1].abs() / tail_bound,
        Relation::AtMost,
        1.0,
    );
    rep.detail("tail_integral", tail_bound).detail("a_horizon", sq.a[big_n + 1]);
    let independent = -tail_sum(&sq.mu, 1 + sq.k0).unwrap_or(f64::NAN);
    rep.check(
        M,
        "a_head_consistency",
        "a-sequence-definition",
        ((sq.a[1] - independent) / independent).abs(),
        Relation::AtMost,
        1e-10,
    );
    let r_err = max_of(ns().map(|n| ((sq.a[n + 1] - sq.a[n]) - sq.r[n]).abs() / sq.r[n]));
    rep.check(M, "r_consistency", "r-definition", r_err, Relation::AtMost, 1e-9);

    // z_n
    let z_step = min_of(ns().map(|n| sq.z[n + 1] - sq.z[n]));
    rep.check(M, "z_increasing", "z-sequence-monotone", z_step, Relation::Above, 0.0);
    rep.check(M, "z_first_above_one", "z-sequence-monotone", sq.z[1], Relation::Above, 1.0);

    // p_n > 1
    let p_min = min_of(ns().map(|n| sq.p[n]));
    rep.check(M, "p_above_one", "p-lower-bound", p_min, Relation::Above, 1.0);

    // q
    rep.flag(M, "q_first_zero", "q-definition", sq.q[1] == 0.0);
    let q2 = sq.z[2] * sq.r[1];
    rep.check(
        M,
        "q_second_closed_form",
        "q-definition",
        ((sq.q[2] - q2) / q2).abs(),
        Relation::AtMost,
        1e-15,
    );
    let q_gap = min_of((2..=big_n).map(|n| {
        let (m, k) = (sq.m(n), sq.k0 as f64);
        let bound = 0.5 * ((m + 1.0) * m - (k + 3.0) * (k + 2.0));
        (sq.q[n] - bound) / sq.q[n]
    }));
    rep.check(M, "q_lower_bound", "q-quadratic-growth", q_gap, Relation::AtLeast, 0.0);
    let (k, m2) = (sq.k0 as f64, sq.m(2));
    rep.detail("q2", sq.q[2])
        .detail("q2_bound", 0.5 * ((m2 + 1.0) * m2 - (k + 3.0) * (k + 2.0)));

    // solution decay: −q + 2p + α ln z_{n+1} + β ln p − γ ln r
    let triples: Vec<(f64, f64, f64)> = (1..=3)
        .flat_map(|a| (1..=3).flat_map(move |b| (1..=3).map(move |c| (a as f64, b as f64, c as f64))))
        .collect();
    let decay_log = |n: usize, shift: f64, (al, be, ga): (f64, f64, f64)| {
        shift + al * sq.z[n + 1].ln() + be * sq.p[n].ln() - ga * sq.r[n].ln()
    };
    let sol = |n: usize, t: (f64, f64, f64)| decay_log(n, -sq.q[n] + 2.0 * sq.p[n], t);
    let sol_rise = max_of(triples.iter().flat_map(|&t| (1..big_n).map(move |n| sol(n + 1, t) - sol(n, t))));
    rep.check(M, "solution_decay_monotone", "solution-smoothness-decay", sol_rise, Relation::Below, 0.0);
    let sol_last = max_of(triples.iter().map(|&t| sol(big_n, t)));
    rep.check(
        M,
        "solution_decay_final",
        "solution-smoothness-decay",
        sol_last,
        Relation::Below,
        1e-16_f64.ln(),
    );

    // parabolicity
    let ratio_sup = max_of(ns().map(|n| sq.ratio(n)));
    let bound = 1.0 / (2.0 * pc.cuts.j_prime_sup);
    rep.check(M, "parabolicity_margin", "parabolicity", ratio_sup, Relation::AtMost, bound);
    rep.detail("j_prime_sup", pc.cuts.j_prime_sup);

    // Hölder chain for l
    let chain_sup = max_of(ns().map(|n| sq.chain(n)));
    rep.check(M, "holder_chain", "l-holder-chain", chain_sup, Relation::AtMost, 7.0);
    let premise = max_of(ns().map(|n| sq.m(n) * sq.r[n]));
    rep.check(M, "holder_chain_premise", "l-holder-chain", premise, Relation::AtMost, 1.0);

    // coefficient decay: −p + α ln z_{n+1} + β ln p − γ ln r
    let coef = |n: usize, t: (f64, f64, f64)| decay_log(n, -sq.p[n], t);
    let coef_rise = max_of(triples.iter().flat_map(|&t| (1..big_n).map(move |n| coef(n + 1, t) - coef(n, t))));
    rep.check(M, "coefficient_decay_monotone", "coefficient-smoothness-decay", coef_rise, Relation::Below, 0.0);
    // far along the sequence, from the closed forms
    let far = {
        let m = 1e8_f64;
        let r = term(&sq.mu, m);
        let p = (3.0 * m * m + 3.0 * m + 1.0) * r;
        let z1 = (m + 1.0).powi(3);
        max_of(triples.iter().map(|&(al, be, ga)| -p + al * z1.ln() + be * p.ln() - ga * r.ln()))
    };
    rep.check(
        M,
        "coefficient_decay_far",
        "coefficient-smoothness-decay",
        far,
        Relation::Below,
        1e-16_f64.ln(),
    );

    // two-sided bounds on p and r
    let c = sq.c_lin;
    let p_lo = min_of(ns().map(|n| sq.p[n] / (3.0 * sq.m(n).sqrt())));
    rep.check(M, "p_lower", "p-two-sided", p_lo, Relation::AtLeast, 1.0 - EQ_SLACK);
    let p_hi = max_of(ns().map(|n| sq.p[n] / (3.0 / c * (sq.m(n) + 2.0))));
    rep.check(M, "p_upper", "p-two-sided", p_hi, Relation::AtMost, 1.0 + EQ_SLACK);
    let r_lo = min_of(ns().map(|n| sq.r[n] * sq.m(n).powf(1.5)));
    rep.check(M, "r_lower", "r-two-sided", r_lo, Relation::AtLeast, 1.0 - EQ_SLACK);
    let r_hi = max_of(ns().map(|n| sq.r[n] * c * sq.m(n)));
    rep.check(M, "r_upper", "r-two-sided", r_hi, Relation::AtMost, 1.0 + EQ_SLACK);

    // ratio p r^{-1} z^{-1} from the raw arrays vs the closed form
    let closed_err = max_of(ns().map(|n| {
        let m = sq.m(n);
        let raw = sq.p[n] / (sq.r[n] * sq.z[n]);
        let closed = 3.0 / m + 3.0 / (m * m) + 1.0 / (m * m * m);
        ((raw - closed) / closed).abs()
    }));
    rep.check(M, "ratio_closed_form", "ratio-identity", closed_err, Relation::AtMost, 1e-12);
    let seven = max_of(ns().map(|n| sq.ratio(n) * sq.m(n)));
    rep.check(M, "ratio_seven_bound", "ratio-identity", seven, Relation::AtMost, 7.0);

    // μ(r)/r >= μ(1/m)·m
    let mono = min_of(ns().map(|n| {
        let m = sq.m(n);
        (mu(sq.r[n]) / sq.r[n]) / (mu(1.0 / m) * m)
    }));
    rep.check(M, "mu_ratio_comparison", "mu-ratio-comparison", mono, Relation::AtLeast, 1.0 - EQ_SLACK);

    rep.with_provenance(0, &(sq.mu.name(), sq.k0, sq.segments))
}

/// Sample sizes for [`verify_pde`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeCheckConfig {
    pub residual_points: usize,
    pub fd_points: usize,
    pub l_samples: usize,
    pub seed: u64,
}

impl Default for PdeCheckConfig {
    fn default() -> Self {
        Self {
            residual_points: 100_000,
            fd_points: 200,
            l_samples: 100_000,
            seed: 7,
        }
    }
}

/// Construction-time `t` on segment `n` at local coordinate `s`.
fn seg_time(pc: &PlissConstruction, n: usize, s: f64) -> f64 {
    pc.seqs.a[n] + s * pc.seqs.r[n]
}

/// Sampled checks of the equation, the derivative formulas, junction
/// continuity, parabolicity and the support property, in the orientation
/// of `pc`.
pub fn verify_pde(pc: &PlissConstruction, cfg: &PdeCheckConfig) -> VerificationReport {
    let sq = &pc.seqs;
    let big_n = sq.segments;
    let sign = match pc.orientation {
        Orientation::ConstructionTime => 1.0,
        Orientation::ReflectedTime => -1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rep = VerificationReport::new();
    let x_range = std::f64::consts::PI;

    // equation residual and the Łu identity
    let (mut res_max, mut id_max, mut decay_excess) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    let (mut degenerate, mut failures) = (0usize, 0usize);
    for _ in 0..cfg.residual_points {
        let n = rng.gen_range(1..=big_n);
        let s = rng.gen_range(0.01..0.99);
        let x1 = rng.gen_range(-x_range..x_range);
        let x2 = rng.gen_range(-x_range..x_range);
        match pc.eval_solution(sign * seg_time(pc, n, s), x1, x2) {
            Ok(e) => {
                res_max = res_max.max(e.relative_residual());
                id_max = id_max.max(e.identity_mismatch());
                degenerate += e.degenerate as usize;
                if e.u != 0.0 {
                    let bound = 3f64.ln() - sq.q[n] + 2.0 * sq.p[n];
                    decay_excess = decay_excess.max(e.u.abs().ln() + e.log_scale - bound);
                }
            }
            Err(_) => failures += 1,
        }
    }
    rep.check(M, "pde_residual", "equation-residual", res_max, Relation::AtMost, 1e-10);
    rep.detail("degenerate_points", degenerate as f64)
        .detail("evaluation_failures", failures as f64)
        .detail("points", cfg.residual_points as f64);
    if degenerate > 0 {
        rep.note("points with vanishing u and gradient but nonzero Łu were found");
    }
    rep.check(M, "operator_identity", "operator-identity", id_max, Relation::AtMost, 1e-12);
    rep.check(M, "segment_decay_bound", "solution-decay", decay_excess, Relation::AtMost, 1e-6);
    rep.flag(M, "residual_points_evaluated", "equation-residual", failures == 0);

    // derivative formulas against fourth-order finite differences
    let mut fd_max = 0.0_f64;
    let jp = pc.cuts.j_prime_sup;
    for _ in 0..cfg.fd_points {
        let n = rng.gen_range(1..=big_n);
        let s = rng.gen_range(0.01..0.99);
        // two wavelengths of the slowest mode cover every phase of both
        // modes; further out, rounding of the phase √z·x (~1e-11 at
        // |x| ~ 3) would swamp a second difference at step 1e-4/√z
        let span = 2.0 * std::f64::consts::TAU / sq.z[n].sqrt();
        let x1 = rng.gen_range(-span..span);
        let x2 = rng.gen_range(-span..span);
        let (r, p) = (sq.r[n], sq.p[n]);
        // power-of-two steps on a grid containing the centre, so every
        // stencil offset is exact; otherwise the rounding of x ± h is
        // amplified by 1/h in the second differences
        let pow2 = |h: f64| 2f64.powi(h.log2().floor() as i32);
        let ht = pow2(1e-4 / (sq.z[n + 1] + p * jp / r + 100.0 / r));
        let hx1 = pow2(1e-4 / sq.z[n + 1].sqrt());
        let hx2 = pow2(1e-4 / sq.z[n].sqrt());
        let tau = (s * r / ht).round() * ht;
        let x1 = (x1 / hx1).round() * hx1;
        let x2 = (x2 / hx2).round() * hx2;
        let Ok(c) = pc.eval_segment(n, tau, x1, x2, None) else {
            fd_max = f64::INFINITY;
            continue;
        };
        let at = |dt: f64, d1: f64, d2: f64| {
            pc.eval_segment(n, tau + dt, x1 + d1, x2 + d2, Some(c.log_scale))
                .map(|e| e.u)
                .unwrap_or(f64::NAN)
        };
        let first = |f: &dyn Fn(f64) -> f64, h: f64| {
            (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
        };
        let second = |f: &dyn Fn(f64) -> f64, h: f64| {
            (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
        };
        let fd_t = first(&|d| at(d, 0.0, 0.0), ht);
        let fd_11 = second(&|d| at(0.0, d, 0.0), hx1);
        let fd_22 = second(&|d| at(0.0, 0.0, d), hx2);
        let e_t = (fd_t - c.u_t).abs() / c.envelope;
        let e_11 = (fd_11 - c.u_x1x1).abs() / (sq.z[n + 1] * c.u_envelope);
        let e_22 = (fd_22 - c.u_x2x2).abs() / (sq.z[n] * c.u_envelope);
        fd_max = fd_max.max(e_t).max(e_11).max(e_22);
    }
    rep.check(M, "finite_difference_match", "derivative-formulas", fd_max, Relation::AtMost, 1e-6);

    // junction continuity between segment n at s = 1 and n + 1 at s = 0
    let mut jump = 0.0_f64;
    let mut scale_jump = 0.0_f64;
    for n in 1..big_n {
        for k in 0..4 {
            let x1 = -2.0 + 1.3 * k as f64;
            let x2 = 0.7 - 0.9 * k as f64;
            let (Ok(left), Ok(right)) = (
                pc.eval_segment(n, sq.r[n], x1, x2, None),
                pc.eval_segment(n + 1, 0.0, x1, x2, None),
            ) else {
                jump = f64::INFINITY;
                continue;
            };
            scale_jump = scale_jump.max((left.log_scale - right.log_scale).abs() / left.log_scale.abs().max(1.0));
            let zs = sq.z[n + 1];
            let pairs = [
                (left.u, right.u, 1.0),
                (left.u_x1, right.u_x1, zs.sqrt()),
                (left.u_x2, right.u_x2, zs.sqrt()),
                (left.u_t, right.u_t, zs),
                (left.u_x1x1, right.u_x1x1, zs),
                (left.u_x2x2, right.u_x2x2, zs),
                (left.l, right.l, 1.0),
            ];
            for (a, b, sc) in pairs {
                jump = jump.max((a - b).abs() / (sc * right.u_envelope.max(1e-300)));
            }
        }
    }
    rep.check(M, "junction_continuity", "junction-matching", jump, Relation::AtMost, 1e-10);
    rep.check(M, "junction_log_scale", "junction-matching", scale_jump, Relation::AtMost, 1e-12);

    // parabolicity on dense samples of l
    let (lo_t, hi_t) = (sq.a[1], pc.horizon());
    let (mut l_min, mut l_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..cfg.l_samples {
        let t = lo_t + (hi_t - lo_t) * (i as f64 + 0.5) / cfg.l_samples as f64;
        if let Ok(l) = pc.eval_l(sign * t) {
            l_min = l_min.min(l);
            l_max = l_max.max(l);
        }
    }
    rep.check(M, "l_lower", "parabolicity", l_min, Relation::AtLeast, 0.5);
    rep.check(M, "l_upper", "parabolicity", l_max, Relation::AtMost, 1.5);

    // support: u ≡ 0 on one side, nonzero at a witness on the other
    let mut zero_side = true;
    for _ in 0..1000 {
        let t = rng.gen_range(0.0..1.0);
        let x1 = rng.gen_range(-x_range..x_range);
        let x2 = rng.gen_range(-x_range..x_range);
        zero_side &= match pc.eval_solution(sign * t, x1, x2) {
            Ok(e) => {
                e.u == 0.0 && e.u_t == 0.0 && e.u_x1 == 0.0 && e.u_x2 == 0.0 && e.b1 == 0.0 && e.c == 0.0
            }
            Err(_) => false,
        };
    }
    rep.flag(M, "vanishes_on_zero_side", "support", zero_side);
    let witness = pc
        .eval_solution(sign * (sq.a[1] - 0.5), 0.0, 0.0)
        .map(|e| e.u != 0.0 && e.log_scale.is_finite())
        .unwrap_or(false);
    rep.flag(M, "nonzero_witness", "support", witness);

    rep.with_provenance(cfg.seed, cfg)
}

/// Samples `|l(t) − l(s)| / μ(|t − s|)` over within-segment pairs,
/// cross-segment pairs and pairs near `t = 0`, and compares the sup with
/// `2 ‖J''‖_∞ sup_n (p_n r_n^{-1} z_n^{-1})/μ(r_n)`, a mean-value bound.
pub fn verify_cmu_regularity(pc: &PlissConstruction, pair_count: usize, seed: u64) -> VerificationReport {
    let cpc = pc.with_orientation(Orientation::ConstructionTime);
    let sq = &cpc.seqs;
    let big_n = sq.segments;
    let theta = pc.cuts.j_second_sup * max_of((1..=big_n).map(|n| sq.chain(n)));
    let mu = |d: f64| sq.mu.eval(d);
    let ratio = |t: f64, s: f64| {
        let (Ok(a), Ok(b)) = (cpc.eval_l_truncated(t), cpc.eval_l_truncated(s)) else {
            return f64::INFINITY;
        };
        let d = (t - s).abs();
        if d == 0.0 {
            0.0
        } else {
            (a - b).abs() / mu(d)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = (pair_count / 3).max(1);
    let mk = |rng: &mut ChaCha8Rng, which: u8| -> (f64, f64) {
        match which {
            0 => {
                let n = rng.gen_range(1..=big_n);
                (seg_time(&cpc, n, rng.gen_range(0.0..1.0)), seg_time(&cpc, n, rng.gen_range(0.0..1.0)))
            }
            1 => {
                let n = rng.gen_range(1..big_n);
                let gap = rng.gen_range(1..=(big_n - n).min(5));
                (
                    seg_time(&cpc, n, rng.gen_range(0.0..1.0)),
                    seg_time(&cpc, n + gap, rng.gen_range(0.0..1.0)),
                )
            }
            _ => {
                let lo = sq.a[big_n.saturating_sub(3).max(1)];
                (rng.gen_range(lo..0.05), rng.gen_range(lo..0.05))
            }
        }
    };
    let mut rep = VerificationReport::new();
    let mut overall = 0.0_f64;
    for (which, id) in [(0u8, "holder_within_segment"), (1, "holder_cross_segment"), (2, "holder_near_zero")] {
        let mut sup = 0.0_f64;
        for _ in 0..per {
            let (t, s) = mk(&mut rng, which);
            sup = sup.max(ratio(t, s));
        }
        overall = overall.max(sup);
        rep.check(M, id, "l-holder-regularity", sup, Relation::AtMost, 2.0 * theta);
        rep.detail("theta", theta);
    }
    // l ≡ 1 off the segments
    let flat = [(sq.a[1] - 0.5, sq.a[1] - 0.1), (0.1, 0.9), (0.0, 0.5)]
        .iter()
        .map(|&(t, s)| ratio(t, s))
        .fold(0.0, f64::max);
    rep.check(M, "holder_constant_region", "l-holder-regularity", flat, Relation::AtMost, 0.0);
    rep.check(M, "holder_sup", "l-holder-regularity", overall, Relation::AtMost, 2.0 * theta);
    rep.with_provenance(seed, &(pair_count, sq.k0, sq.segments))
}
