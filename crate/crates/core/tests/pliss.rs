use osgood_lab::modulus::{BuiltinKind, Modulus};
use osgood_lab::pliss::cutoffs::{a_jet, b_jet, c_jet, j_jet};
use osgood_lab::pliss::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn sqrt_mu() -> Modulus {
    Modulus::builtin(BuiltinKind::SquareRoot).unwrap()
}

fn built() -> &'static PlissConstruction {
    static PC: OnceLock<PlissConstruction> = OnceLock::new();
    PC.get_or_init(|| PlissConstruction::new(&sqrt_mu(), None, Some(200), Orientation::ConstructionTime).unwrap())
}

/// Hurwitz zeta `Σ_{m >= M} m^{-3/2}` by Euler–Maclaurin.
fn hurwitz_three_halves(m: f64) -> f64 {
    let s = 1.5;
    m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s) + s / 12.0 * m.powf(-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * m.powf(-s - 3.0)
}

/// Smallest `k` with `3/(k+1) + 3/(k+1)² + 1/(k+1)³ <= 1/(2 d)`, by scan.
fn scan_k0(d: f64) -> u64 {
    (0..100_000u64)
        .find(|&k| {
            let m = (k + 1) as f64;
            3.0 / m + 3.0 / (m * m) + 1.0 / (m * m * m) <= 1.0 / (2.0 * d)
        })
        .unwrap()
}

#[test]
fn cutoff_plateaus() {
    assert_eq!(a_jet(0.1).v, 1.0);
    assert_eq!(a_jet(0.3).v, 0.0);
    assert_eq!(j_jet(0.25).v, 2.0);
    assert_eq!(j_jet(0.6).v, -2.0);
    assert_eq!(b_jet(1.0 / 3.0).v, 1.0);
}

#[test]
fn cutoff_ranges_and_flat_plateaus() {
    for i in -200..=1200 {
        let s = i as f64 / 1000.0;
        for f in [a_jet, b_jet, c_jet] {
            let v = f(s).v;
            assert!((0.0..=1.0).contains(&v), "s={s}");
        }
        assert!((-2.0..=2.0).contains(&j_jet(s).v));
    }
    let interiors: [(fn(f64) -> osgood_lab::pliss::cutoffs::Jet, f64, f64); 8] = [
        (a_jet, -1.0, 0.2),
        (a_jet, 0.25, 2.0),
        (b_jet, -1.0, 0.0),
        (b_jet, 1.0 / 6.0, 0.5),
        (c_jet, -1.0, 0.25),
        (c_jet, 1.0 / 3.0, 2.0),
        (j_jet, 0.2, 1.0 / 3.0),
        (j_jet, 0.5, 2.0),
    ];
    for (f, lo, hi) in interiors {
        for k in 1..100 {
            let s = lo + (hi - lo) * k as f64 / 100.0;
            assert_eq!(f(s).d1, 0.0, "s={s}");
        }
    }
}

#[test]
fn sequences_for_k0_200() {
    let sq = build_sequences(&sqrt_mu(), 200, 10).unwrap();
    assert!((sq.r[1] - 201f64.powf(-1.5)).abs() < 1e-18);
    assert!((sq.r[1] - 3.509e-4).abs() < 1e-7);
    assert_eq!(sq.q[1], 0.0);
    for n in 1..=10 {
        let m = (n + 200) as f64;
        let exact = 3.0 / m + 3.0 / (m * m) + 1.0 / (m * m * m);
        assert!((sq.p[n] / (sq.r[n] * sq.z[n]) - exact).abs() <= 1e-12 * exact);
        assert!(exact <= 7.0 / m);
        let a = -hurwitz_three_halves(m);
        assert!((sq.a[n] - a).abs() <= 1e-11 * a.abs(), "n={n}: {} vs {a}", sq.a[n]);
    }
}

#[test]
fn k0_search() {
    let d = make_cutoffs().j_prime_sup;
    let k0 = choose_k0(&sqrt_mu(), 200, d).unwrap();
    assert_eq!(k0, scan_k0(d));
    assert_eq!(k0, 1440);
    // the closed-form seed is always feasible
    assert!(k0 <= (14.0 * d).ceil() as u64 - 1);
    let p9 = Modulus::builtin(BuiltinKind::Power(0.9)).unwrap();
    let k = choose_k0(&p9, 50, d).unwrap();
    assert!(k > 0 && k < 1_000_000);
    let lin = Modulus::builtin(BuiltinKind::Linear).unwrap();
    assert!(matches!(choose_k0(&lin, 50, d), Err(PlissError::DivergentModulus(_))));
    let ll = Modulus::builtin(BuiltinKind::LogLinear).unwrap();
    assert!(build_sequences(&ll, 100, 10).is_err());
}

#[test]
fn first_terms_for_chosen_k0() {
    let sq = &built().seqs;
    assert_eq!(sq.k0, 1440);
    assert!((sq.r[1] - 1441f64.powf(-1.5)).abs() < 1e-20);
    assert!((sq.r[1] - 1.828e-5).abs() < 1e-8);
    assert!((sq.p[1] - 113.96).abs() < 0.01);
    assert_eq!(sq.z[1], 1441f64.powi(3));
    let q2 = 1442f64.powi(3) * 1441f64.powf(-1.5);
    assert!((sq.q[2] - q2).abs() < 1e-9 * q2);
    assert!((sq.q[2] - 54_815.0).abs() < 1.0);
}

#[test]
fn default_horizon() {
    let pc = PlissConstruction::new(&sqrt_mu(), None, None, Orientation::ConstructionTime).unwrap();
    assert_eq!(pc.segments(), 10);
    assert!(matches!(
        build_sequences(&sqrt_mu(), 100, 5),
        Err(PlissError::TooFewSegments(5))
    ));
}

#[test]
fn all_conditions_hold_for_sqrt() {
    let rep = verify_conditions(built());
    assert!(rep.all_passed(), "{}", rep.to_json());
    assert!(rep.row("holder_chain").unwrap().measured <= 7.0);
    assert!(rep.row("ratio_closed_form").unwrap().measured <= 1e-12);
    assert!(rep.rows.len() >= 25);
}

#[test]
fn zero_side_and_initial_mode() {
    let pc = built();
    let e = pc.eval_solution(0.3, 1.0, 2.0).unwrap();
    assert_eq!((e.u, e.u_t, e.u_x1, e.u_x2, e.u_x1x1, e.u_x2x2), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    assert_eq!(pc.eval_lower_order(0.0, 1.0, 2.0).unwrap(), (0.0, 0.0, 0.0));
    assert_eq!(pc.eval_l(0.5).unwrap(), 1.0);

    let a1 = pc.seqs.a[1];
    let z1 = pc.seqs.z[1];
    let t = a1 - 0.25;
    let e = pc.eval_solution(t, 0.0, 0.7).unwrap();
    assert_eq!(e.branch, Branch::Initial);
    assert_eq!(e.u, 1.0);
    assert!((e.log_scale - (-z1 * (t - a1))).abs() <= 1e-12 * e.log_scale);
    // Łv_1 = 0, so the lower-order coefficients vanish identically
    assert_eq!((e.b1, e.b2, e.c), (0.0, 0.0, 0.0));
    assert_eq!(e.lu_direct, 0.0);
}

#[test]
fn domain_errors() {
    let pc = built();
    let h = pc.horizon();
    assert!(matches!(pc.eval_solution(0.5 * h, 0.0, 0.0), Err(PlissError::Horizon { .. })));
    assert!(matches!(pc.eval_solution(-2.0, 0.0, 0.0), Err(PlissError::OutOfDomain { .. })));
    assert!(matches!(pc.eval_solution(1.5, 0.0, 0.0), Err(PlissError::OutOfDomain { .. })));
    assert_eq!(pc.eval_l_truncated(0.5 * h).unwrap(), 1.0);
}

#[test]
fn l_values() {
    let pc = built();
    let sq = &pc.seqs;
    for n in [1, 17, 200] {
        assert_eq!(pc.eval_l(sq.a[n]).unwrap(), 1.0);
        let peak = pc.l_on_segment(n, pc.cuts.j_prime_argmax);
        let expect = 1.0 + pc.cuts.j_prime_sup * sq.p[n] / (sq.r[n] * sq.z[n]);
        assert!((peak - expect).abs() < 1e-9);
        assert!(peak <= 1.5);
    }
}

#[test]
fn operator_vanishes_at_junction_plateau() {
    let pc = built();
    // s = 0: A = 1, B = C = 0 with all derivatives zero
    let e = pc.eval_segment(5, 0.0, 0.3, -1.1, None).unwrap();
    assert_eq!(e.lu, 0.0);
    assert!(e.lu_direct.abs() <= 1e-15 * e.envelope);
    assert_eq!((e.b1, e.b2, e.c), (0.0, 0.0, 0.0));
}

#[test]
fn junctions_match() {
    let pc = built();
    for n in [1, 50, 199] {
        let left = pc.eval_segment(n, pc.seqs.r[n], 0.4, 1.3, None).unwrap();
        let right = pc.eval_segment(n + 1, 0.0, 0.4, 1.3, None).unwrap();
        assert!((left.log_scale - right.log_scale).abs() <= 1e-12 * right.log_scale.abs());
        assert_eq!(left.u, right.u);
        assert_eq!(left.u_t, right.u_t);
        assert_eq!(left.u_x1x1, right.u_x1x1);
        assert_eq!(left.l, right.l);
    }
}

#[test]
fn sampled_pde_checks_both_orientations() {
    let cfg = PdeCheckConfig {
        residual_points: 20_000,
        fd_points: 200,
        l_samples: 20_000,
        seed: 11,
    };
    for o in [Orientation::ConstructionTime, Orientation::ReflectedTime] {
        let rep = verify_pde(&built().with_orientation(o), &cfg);
        assert!(rep.all_passed(), "{o:?}: {}", rep.to_json());
    }
}

#[test]
fn reflected_view() {
    let pc = built().with_orientation(Orientation::ReflectedTime);
    let e = pc.eval_solution(-0.2, 0.5, 0.5).unwrap();
    assert_eq!(e.u, 0.0);
    let sq = &pc.seqs;
    let t = -(sq.a[3] + 0.4 * sq.r[3]);
    let fwd = built().eval_solution(-t, 0.2, 0.9).unwrap();
    let e = pc.eval_solution(t, 0.2, 0.9).unwrap();
    assert_eq!(e.u, fwd.u);
    assert_eq!(e.u_t, -fwd.u_t);
    assert_eq!((e.b1, e.b2, e.c), (-fwd.b1, -fwd.b2, -fwd.c));
    let lhs = e.u_t + e.u_x1x1 + e.l * e.u_x2x2 + e.b1 * e.u_x1 + e.b2 * e.u_x2 + e.c * e.u;
    assert!(lhs.abs() <= 1e-10 * e.envelope);
    assert_eq!(pc.eval_l(t).unwrap(), built().eval_l(-t).unwrap());
}

#[test]
fn regularity_of_l() {
    let rep = verify_cmu_regularity(built(), 30_000, 3);
    assert!(rep.all_passed(), "{}", rep.to_json());
    assert_eq!(rep.row("holder_constant_region").unwrap().measured, 0.0);
    assert!(rep.row("holder_cross_segment").unwrap().measured.is_finite());
}

#[test]
fn export_row_count_and_reflected_zeros() {
    let pc = built().with_orientation(Orientation::ReflectedTime);
    let grid: GridSpec = "0.0495:0.0526:101,-3:3:64,-3:3:64".parse().unwrap();
    let n = export_construction(&pc, &grid, ExportFormat::Csv, std::io::sink()).unwrap();
    assert_eq!(n, 413_696);

    let grid: GridSpec = "-0.5:0:5,0:1:3,0:1:2".parse().unwrap();
    let mut buf = Vec::new();
    export_construction(&pc, &grid, ExportFormat::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("# {\"orientation\":\"ReflectedTime\""));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[4], "u");
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[4].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert_eq!(rows, 30);

    let beyond: GridSpec = format!("0:{}:3,0:1:1,0:1:1", -0.5 * pc.horizon()).parse().unwrap();
    assert!(matches!(
        export_construction(&pc, &beyond, ExportFormat::Json, std::io::sink()),
        Err(PlissError::Horizon { .. })
    ));
    assert!("1:0:3,0:1:1,0:1:1".parse::<GridSpec>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn l_stays_parabolic(u in 0.0f64..1.0) {
        let pc = built();
        let t = pc.seqs.a[1] + u * (pc.horizon() - pc.seqs.a[1]);
        let l = pc.eval_l(t).unwrap();
        prop_assert!((0.5..=1.5).contains(&l));
    }

    #[test]
    fn residual_is_rounding_level(n in 1usize..=200, s in 0.0f64..1.0, x1 in -10.0f64..10.0, x2 in -10.0f64..10.0) {
        let pc = built();
        let e = pc.eval_segment(n, s * pc.seqs.r[n], x1, x2, None).unwrap();
        prop_assert!(e.relative_residual() <= 1e-10);
        prop_assert!(e.identity_mismatch() <= 1e-12);
        prop_assert!(!e.degenerate);
    }
}
