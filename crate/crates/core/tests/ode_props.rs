use oscillation::catalog::catalog_entries;
use oscillation::expr::Expr;
use oscillation::ode::{naive_discriminant, normal_form, OdeSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_b_prime(spec: &OdeSpec) -> Expr {
    Expr::Const(2.0).mul(spec.b().differentiate())
}

#[test]
fn discriminant_splits_into_naive_plus_two_b_prime() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for entry in catalog_entries() {
        let spec = entry.spec().unwrap();
        let d = spec.discriminant();
        let naive = naive_discriminant(&spec);
        let extra = two_b_prime(&spec);
        let w = entry.window;
        let mut checked = 0;
        while checked < 50 {
            let x = rng.gen_range(w.lo..w.hi);
            let (Ok(a), Ok(n), Ok(e)) = (
                spec.eval_expr(&d, x),
                spec.eval_expr(&naive, x),
                spec.eval_expr(&extra, x),
            ) else {
                continue;
            };
            let scale = a.abs().max(n.abs()).max(e.abs()).max(1e-300);
            assert!(
                (a - (n + e)).abs() <= 1e-10 * scale,
                "{}: x = {x}",
                entry.name
            );
            checked += 1;
        }
    }
}

#[test]
fn q_is_minus_quarter_discriminant() {
    for entry in catalog_entries() {
        let spec = entry.spec().unwrap();
        let w = entry.window;
        let nf = normal_form(&spec, 0.5 * (w.lo + w.hi)).unwrap();
        let d = spec.discriminant();
        for k in 0..=40 {
            let x = w.lo + (w.hi - w.lo) * k as f64 / 40.0;
            let q = nf.q_at(x, spec.params()).unwrap();
            let dv = spec.eval_expr(&d, x).unwrap();
            assert!(
                (q + 0.25 * dv).abs() <= 1e-12 * q.abs().max(1e-300),
                "{} at {x}",
                entry.name
            );
        }
    }
}

#[test]
fn weight_is_one_at_anchor() {
    for entry in catalog_entries() {
        let spec = entry.spec().unwrap();
        for anchor in [
            entry.window.lo,
            0.5 * (entry.window.lo + entry.window.hi),
            entry.window.hi,
        ] {
            assert_eq!(
                normal_form(&spec, anchor).unwrap().weight(anchor).unwrap(),
                1.0
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_is_positive(
        idx in 0usize..8,
        t in 0.0f64..1.0,
        s in 0.0f64..1.0,
    ) {
        let entry = &catalog_entries()[idx];
        let spec = entry.spec().unwrap();
        let w = entry.window;
        let anchor = w.lo + t * (w.hi - w.lo);
        let x = w.lo + s * (w.hi - w.lo);
        let wt = normal_form(&spec, anchor).unwrap().weight(x).unwrap();
        prop_assert!(wt > 0.0 && wt.is_finite());
    }

    #[test]
    fn weight_matches_closed_form_for_one_over_x(anchor in 0.5f64..30.0, x in 0.5f64..30.0) {
        let spec = OdeSpec::parse("1/x", "1", "", Default::default()).unwrap();
        let wt = normal_form(&spec, anchor).unwrap().weight(x).unwrap();
        let exact = (anchor / x).sqrt();
        prop_assert!((wt - exact).abs() <= 1e-8 * exact);
    }
}
