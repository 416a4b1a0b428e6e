use oscillation::catalog::catalog_entries;
use oscillation::classify::Window;
use oscillation::expr::{Expr, ParamBindings};
use oscillation::integrate::{solve_ivp, InitialCondition, SolveOptions};
use oscillation::ode::OdeSpec;
use oscillation::verify::{check_normal_form, check_riccati, check_sturm, check_wronskian};
use proptest::prelude::*;

fn e(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn nontrivial_ic(x0: f64) -> impl Strategy<Value = InitialCondition> {
    (0.0f64..std::f64::consts::TAU).prop_map(move |t| InitialCondition::new(x0, t.cos(), t.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sturm_interlacing_always_holds(
        base in 0.3f64..4.0,
        gap in 0.05f64..3.0,
        wobble in 0.0f64..0.25,
        freq in 0.1f64..2.0,
        ic1 in nontrivial_ic(0.0),
        ic2 in nontrivial_ic(0.0),
    ) {
        // q1 - q2 = gap + wobble * base * (1 + sin(freq x)) > 0
        let q2 = Expr::constant(base);
        let q1 = e(&format!("{} + {} * (1 + sin({} * x))", base + gap, wobble * base, freq));
        let w = Window::new(0.0, 30.0).unwrap();
        let r = check_sturm(&q1, &q2, &ParamBindings::new(), &w, ic1, ic2, &SolveOptions::default()).unwrap();
        prop_assert!(r.pass, "{:?}", r.gaps.iter().find(|g| !g.pass));
        prop_assert_eq!(r.pass_rate, 1.0);
    }

    #[test]
    fn riccati_matches_dominant_characteristic_root(
        r1 in -2.0f64..2.0,
        sep in 0.5f64..2.0,
        span in 1.0f64..4.0,
    ) {
        // roots r1 < r2; y = exp(r2 x) stays the dominant mode
        let r2 = r1 + sep;
        let (b, c) = (-(r1 + r2), r1 * r2);
        let spec = OdeSpec::new(Expr::constant(b), Expr::constant(c), Expr::zero(), ParamBindings::new()).unwrap();
        let t = solve_ivp(&spec, InitialCondition::new(0.0, 1.0, r2), span, &SolveOptions::default()).unwrap();
        let r = check_riccati(&spec, &t, None).unwrap();
        prop_assert!(r.max_residual < 1e-6, "{}", r.max_residual);
        let m = r.characteristic.expect("constant m");
        prop_assert!((m.nearest_root - r2).abs() < 1e-12);
        prop_assert!(m.root_distance < 1e-6, "{}", m.root_distance);
        prop_assert!(r.pass);
    }
}

fn wronskian_residual(rel_tol: f64) -> f64 {
    let opts = SolveOptions::with_tolerances(rel_tol, rel_tol * 1e-2);
    let w = Window::new(-20.0, -2.0).unwrap();
    let ic1 = InitialCondition::new(-20.0, 1.0, 0.0);
    let ic2 = InitialCondition::new(-20.0, 0.0, 1.0);
    check_wronskian(
        &e("-x"),
        &e("-x - 1"),
        &ParamBindings::new(),
        &w,
        ic1,
        ic2,
        &opts,
    )
    .unwrap()
    .max_residual
}

#[test]
fn wronskian_residual_shrinks_with_tolerance() {
    let tols = [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10];
    let res: Vec<f64> = tols.iter().map(|&t| wronskian_residual(t)).collect();
    for (pair, t) in res.windows(2).zip(&tols[1..]) {
        // linear scaling would give a ratio of 10 per decade
        assert!(
            pair[1] <= pair[0] / 10.0 * 1.5,
            "at {t:e}: {:e} -> {:e}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn normal_form_zero_sets_biject_for_catalog() {
    let opts = SolveOptions::default();
    for entry in catalog_entries() {
        let spec = entry.spec().unwrap();
        let homogeneous =
            OdeSpec::homogeneous(spec.b().clone(), spec.c().clone(), spec.params().clone())
                .unwrap()
                .with_singular_points(spec.singular_points().to_vec());
        let w = entry.window;
        // (1, 0) is avoided: for hermite it starts the polynomial solution,
        // which is subdominant in both y and u and cannot be followed to the
        // window edges
        for (y0, dy0) in [(0.0, 1.0), (0.6, -0.8), (1.0, 0.3)] {
            let ic = InitialCondition::new(w.midpoint(), y0, dy0);
            let r = check_normal_form(&homogeneous, ic, &w, &opts).unwrap();
            assert!(
                r.pass,
                "{} from {ic:?}: rel {:e}, zeros {} vs {}, gap {:e}",
                entry.name,
                r.max_rel_diff,
                r.zeros_y.len(),
                r.zeros_u.len(),
                r.max_zero_gap
            );
        }
    }
}
