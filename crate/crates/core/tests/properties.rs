use proptest::prelude::*;

use chemoflux::elliptic::{solve_v, EllipticOptions};
use chemoflux::flux::{chemotactic_velocity, limited_component, upwind_divergence};
use chemoflux::grid::{integrate, lq_norm};
use chemoflux::integrator::Stepper;
use chemoflux::{make_grid, Grid, GridSpec, LimiterParams, ModelParams, ScalarField, SimState};

fn grid_of(kind: u8, cells: usize) -> Grid {
    let spec = match kind % 3 {
        0 => GridSpec::cartesian1d(1.0, 4 * cells),
        1 => GridSpec::unit_square(cells),
        _ => GridSpec::radial(1.0, 4 * cells, 2 + (cells % 2)),
    };
    make_grid(spec).unwrap()
}

fn field(g: &Grid, seed: &[f64]) -> ScalarField {
    let values = (0..g.cell_count()).map(|i| seed[i % seed.len()] * (1.0 + (i % 7) as f64 / 7.0)).collect();
    ScalarField::from_values(g, values).unwrap()
}

fn exponent() -> impl Strategy<Value = f64> {
    1.01f64..1.99
}

fn regularization() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), 0.1f64..100.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn limiter_is_bounded_and_odd(p in exponent(), n in regularization(), g in 0.0f64..1e6, frac in -1.0f64..=1.0) {
        let lp = LimiterParams::new(p).with_regularization(n);
        let gn = frac * g;
        let f = limited_component(g, gn, &lp);
        prop_assert!(f.is_finite());
        prop_assert!(f.abs() <= g.powf(p - 1.0) * (1.0 + 1e-12));
        if n.is_finite() {
            prop_assert!(f.abs() <= n * (1.0 + 1e-12));
        }
        prop_assert_eq!(limited_component(g, -gn, &lp), -f);
        prop_assert!(f * gn >= 0.0);
    }

    #[test]
    fn limiter_vanishes_with_the_gradient(p in exponent(), n in regularization(), k in 15.0f64..300.0) {
        let lp = LimiterParams::new(p).with_regularization(n);
        let g = 10f64.powf(-k);
        let f = limited_component(g, g, &lp);
        prop_assert!(f.abs() <= g.powf(p - 1.0) * (1.0 + 1e-12));
        prop_assert!(f.abs() <= 1e-15f64.powf(p - 1.0));
    }

    #[test]
    fn lq_norms_increase_on_a_unit_measure(kind in 0u8..2, seed in prop::collection::vec(0.0f64..10.0, 1..20), q in 1.0f64..8.0, dq in 0.0f64..4.0) {
        let g = grid_of(kind, 8);
        let u = field(&g, &seed);
        let lo = lq_norm(&u, &g, q).unwrap();
        let hi = lq_norm(&u, &g, q + dq).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-300);
        prop_assert!(hi <= u.max() * (1.0 + 1e-12));
    }

    #[test]
    fn integral_is_linear(kind in 0u8..3, a in prop::collection::vec(-5.0f64..5.0, 1..10), b in prop::collection::vec(-5.0f64..5.0, 1..10), s in -3.0f64..3.0) {
        let g = grid_of(kind, 6);
        let (fa, fb) = (field(&g, &a), field(&g, &b));
        let lhs = integrate(&fa.combine(s, &fb, 1.0).unwrap(), &g).unwrap();
        let rhs = s * integrate(&fa, &g).unwrap() + integrate(&fb, &g).unwrap();
        let scale = integrate(&ScalarField::from_values(&g, fa.values().iter().zip(fb.values()).map(|(x, y)| (s * x).abs() + y.abs()).collect()).unwrap(), &g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn signal_is_positive_and_conserves_mass(kind in 0u8..3, cells in 4usize..12, seed in prop::collection::vec(0.0f64..10.0, 1..30)) {
        let g = grid_of(kind, cells);
        let u = field(&g, &seed);
        let v = solve_v(&u, &g, &EllipticOptions::default()).unwrap();
        let (mu, mv) = (integrate(&u, &g).unwrap(), integrate(&v, &g).unwrap());
        prop_assert!((mv - mu).abs() <= 1e-10 * mu.abs().max(1e-300));
        prop_assert!(v.min() >= -1e-12 * u.max());
        if u.min() > 0.0 {
            prop_assert!(v.min() > 0.0);
        }
    }

    #[test]
    fn transport_conserves_and_respects_donors(kind in 0u8..3, cells in 4usize..12, seed in prop::collection::vec(0.0f64..10.0, 1..30), vs in prop::collection::vec(-3.0f64..3.0, 1..30), p in exponent(), chi in 0.0f64..20.0) {
        let g = grid_of(kind, cells);
        let u = field(&g, &seed);
        let v = field(&g, &vs);
        let (flux, _) = chemotactic_velocity(&v, &g, &LimiterParams::new(p)).unwrap();
        let d = upwind_divergence(&u, &flux, chi, &g).unwrap();
        let total: f64 = d.values().iter().zip(g.cell_volumes()).map(|(x, w)| x * w).sum();
        let scale: f64 = d.values().iter().zip(g.cell_volumes()).map(|(x, w)| (x * w).abs()).sum();
        prop_assert!(total.abs() <= 1e-12 * scale.max(1e-300));
        // an empty cell can only gain mass
        for (i, &x) in u.values().iter().enumerate() {
            if x == 0.0 {
                prop_assert!(d.values()[i] <= 0.0);
            }
        }
    }

    #[test]
    fn stable_steps_keep_sign_and_balance_mass(kind in 0u8..3, cells in 4usize..10, seed in prop::collection::vec(0.0f64..4.0, 1..30), p in exponent(), chi in 0.0f64..20.0, mu in 0.0f64..2.0) {
        let g = grid_of(kind, cells);
        let params = ModelParams::new(chi, mu, p);
        let mut stepper = Stepper::new(&g, params).unwrap();
        let mut s = SimState::initial(field(&g, &seed), &g, stepper.params()).unwrap();
        let pol = chemoflux::DtPolicy::default();
        for _ in 0..5 {
            let vel = stepper.velocity(&s).unwrap();
            let dt = stepper.stable_dt(&s, &vel, &pol);
            let next = stepper.step_with(&s, &vel, dt).unwrap();
            prop_assert!(next.u.min() >= 0.0);
            let m0 = integrate(&s.u, &g).unwrap();
            let m1 = integrate(&next.u, &g).unwrap();
            let growth = integrate(&ScalarField::from_values(&g, s.u.values().iter().map(|x| mu * x * (1.0 - x)).collect()).unwrap(), &g).unwrap();
            let scale = m0.abs() + dt * integrate(&ScalarField::from_values(&g, s.u.values().iter().map(|x| mu * x * (1.0 + x)).collect()).unwrap(), &g).unwrap();
            prop_assert!((m1 - m0 - dt * growth).abs() <= 1e-9 * scale.max(1e-300));
            s = next;
        }
    }
}
