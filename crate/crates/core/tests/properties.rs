use dde_oscillation::criteria::{
    alpha_scan, envelope_alpha_scan, hunt_yorke_scan, limsup_scan, DEFAULT_LIMINF_GRID, DEFAULT_LIMSUP_GRID,
};
use dde_oscillation::envelope::{combined_h, tau_max};
use dde_oscillation::kernel::{IntegralKind, Kernel, KernelCache};
use dde_oscillation::sim::{count_sign_changes, integrate, History};
use dde_oscillation::{DelayEquation, PiecewisePeriodic};
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn example() -> DelayEquation {
    let lag = |o| PiecewisePeriodic::new(3.0, vec![(0.0, 1.0), (1.0, 1.0), (2.0, 5.0)], o).unwrap();
    let p = PiecewisePeriodic::constant(3.0, 0.135).unwrap();
    DelayEquation::new(vec![p.clone(), p], vec![lag(0.0), lag(0.1)]).unwrap()
}

fn constant_eq(p: f64, lag: f64) -> DelayEquation {
    DelayEquation::new(
        vec![PiecewisePeriodic::constant(1.0, p).unwrap()],
        vec![PiecewisePeriodic::constant(1.0, lag).unwrap()],
    )
    .unwrap()
}

fn piecewise_eq() -> DelayEquation {
    let p = PiecewisePeriodic::new(2.0, vec![(0.0, 0.1), (1.0, 0.4), (1.0, 0.2)], 0.0).unwrap();
    let d = PiecewisePeriodic::new(2.0, vec![(0.0, 0.5), (1.5, 1.2)], 0.25).unwrap();
    DelayEquation::new(vec![p], vec![d]).unwrap()
}

fn regression() -> Vec<DelayEquation> {
    vec![example(), constant_eq(0.2, 1.0), constant_eq(0.3, 1.0), piecewise_eq()]
}

// knot fractions in (0, 1) and values; the first knot is pinned at t = 0
fn knots(lo: f64, hi: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (lo..hi, prop::collection::vec((0.05f64..0.95, lo..hi), 0..3)).prop_map(|(v0, rest)| {
        let mut rest = rest;
        rest.sort_by(|a, b| a.0.total_cmp(&b.0));
        rest.dedup_by(|a, b| a.0 == b.0);
        std::iter::once((0.0, v0)).chain(rest).collect()
    })
}

fn equation() -> impl Strategy<Value = DelayEquation> {
    (1.0f64..3.0, prop::collection::vec((knots(0.0, 0.35), knots(0.3, 1.6)), 1..=2)).prop_map(|(period, terms)| {
        let scale = |k: &[(f64, f64)]| k.iter().map(|&(f, v)| (f * period, v)).collect::<Vec<_>>();
        let (ps, ds): (Vec<_>, Vec<_>) = terms
            .iter()
            .map(|(p, d)| {
                (
                    PiecewisePeriodic::new(period, scale(p), 0.0).unwrap(),
                    PiecewisePeriodic::new(period, scale(d), 0.0).unwrap(),
                )
            })
            .unzip();
        DelayEquation::new(ps, ds).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn envelope_sits_between_tau_max_and_t(eq in equation()) {
        let h = combined_h(&eq).unwrap();
        let end = 4.0 * eq.period() + eq.max_lag();
        let mut ts: Vec<f64> = (0..=400).map(|j| end * j as f64 / 400.0).collect();
        ts.extend(h.breakpoints_in(0.0, end));
        for t in ts {
            prop_assert!(tau_max(&eq, t) <= h.eval(t) + 1e-12, "t = {}", t);
            prop_assert!(h.eval(t) < t, "t = {}", t);
        }
    }

    #[test]
    fn liminf_over_envelope_matches_alpha(eq in equation()) {
        let k = Kernel::new(&eq, TOL).unwrap();
        let a = alpha_scan(&k, DEFAULT_LIMINF_GRID).unwrap().value;
        let b = envelope_alpha_scan(&k, DEFAULT_LIMINF_GRID).unwrap().value;
        prop_assert!((a - b).abs() < 10.0 * TOL, "alpha {} vs {}", a, b);
    }

    #[test]
    fn kernel_grows_with_depth_and_interval(
        eq in equation(),
        s in 0.0f64..10.0,
        frac in (0.0f64..1.0, 0.0f64..1.0),
    ) {
        let k = Kernel::new(&eq, TOL).unwrap();
        let span = 1.5 * eq.max_lag();
        let (t0, t1) = (s + frac.0.min(frac.1) * span, s + frac.0.max(frac.1) * span);
        let mut prev = 1.0;
        for r in 1..=3 {
            let v = k.a_r(r, t1, s).unwrap();
            prop_assert!(v >= 1.0);
            prop_assert!(v >= prev * (1.0 - 1e-12), "depth {}: {} < {}", r, v, prev);
            // nondecreasing in t, nonincreasing in s
            prop_assert!(k.a_r(r, t0, s).unwrap() <= v * (1.0 + 1e-12));
            prop_assert!(k.a_r(r, t1, t0).unwrap() <= v * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn cache_does_not_change_values(eq in equation(), s in 0.0f64..10.0, frac in 0.0f64..1.0) {
        let cached = Kernel::new(&eq, TOL).unwrap();
        let plain = Kernel::with_cache(&eq, TOL, KernelCache::disabled()).unwrap();
        let t = s + frac * 1.5 * eq.max_lag();
        for r in 2..=3 {
            let (a, b) = (cached.a_r(r, t, s).unwrap(), plain.a_r(r, t, s).unwrap());
            prop_assert!((a - b).abs() <= TOL * a.max(1.0), "r {}: {} vs {}", r, a, b);
        }
    }
}

#[test]
fn doubling_the_grid_keeps_extrema() {
    for eq in regression() {
        let k = Kernel::new(&eq, TOL).unwrap();
        let pairs = [
            (alpha_scan(&k, DEFAULT_LIMINF_GRID), alpha_scan(&k, 2 * DEFAULT_LIMINF_GRID)),
            (hunt_yorke_scan(&k, DEFAULT_LIMINF_GRID), hunt_yorke_scan(&k, 2 * DEFAULT_LIMINF_GRID)),
            (
                limsup_scan(&k, 1, IntegralKind::Inner, DEFAULT_LIMSUP_GRID),
                limsup_scan(&k, 1, IntegralKind::Inner, 2 * DEFAULT_LIMSUP_GRID),
            ),
            (
                limsup_scan(&k, 1, IntegralKind::Outer, DEFAULT_LIMSUP_GRID),
                limsup_scan(&k, 1, IntegralKind::Outer, 2 * DEFAULT_LIMSUP_GRID),
            ),
        ];
        for (j, (a, b)) in pairs.into_iter().enumerate() {
            let (a, b) = (a.unwrap().value, b.unwrap().value);
            assert!((a - b).abs() < 5.0 * TOL, "quantity {j}: {a} vs {b}");
        }
    }
}

#[test]
fn deeper_kernels_sharpen_the_limsup() {
    for eq in [example(), piecewise_eq()] {
        let k = Kernel::new(&eq, TOL).unwrap();
        for kind in [IntegralKind::Inner, IntegralKind::Outer] {
            let one = limsup_scan(&k, 1, kind, 60).unwrap().value;
            let two = limsup_scan(&k, 2, kind, 60).unwrap().value;
            assert!(two >= one, "{kind}: {two} < {one}");
        }
    }
}

#[test]
fn sign_changes_survive_step_halving_and_scaling() {
    for eq in regression() {
        let step = (eq.min_lag() / 4.0).min(2e-3);
        let base = integrate(&eq, &History::Constant(1.0), 60.0, step).unwrap();
        let half = integrate(&eq, &History::Constant(1.0), 60.0, step / 2.0).unwrap();
        assert_eq!(count_sign_changes(&base, 0.0, 60.0), count_sign_changes(&half, 0.0, 60.0));
        for c in [2.5, -0.75] {
            let scaled = integrate(&eq, &History::Constant(c), 60.0, step).unwrap();
            assert_eq!(scaled.sign_changes().len(), base.sign_changes().len());
            for (x, y) in base.values().iter().zip(scaled.values()) {
                assert!((c * x - y).abs() <= 1e-12 * c.abs().max(1.0) * x.abs().max(1.0));
            }
        }
    }
}
