use pavf_core::hamiltonian::{path_averaged_gradient, Grouping, HamiltonianSystem};
use pavf_core::harness::{fitted_order, log_ratio_order};
use pavf_core::models::henon_heiles::{hh_energy, hh_system, section_crossing, HhScheme, HhState};
use pavf_core::models::kgs::{kgs_hamiltonian, kgs_mass, Grid1D, KgsScheme, KgsState};
use pavf_core::{Method, State, Stepper, StepperConfig};
use proptest::prelude::*;

fn hh_state() -> impl Strategy<Value = HhState> {
    prop::array::uniform4(-0.5f64..0.5).prop_map(HhState::from_array)
}

fn kgs_state(n: usize) -> impl Strategy<Value = KgsState> {
    prop::collection::vec(-0.5f64..0.5, 4 * n).prop_map(move |mut z| {
        for f in 0..4 {
            z[f * n] = 0.0;
            z[f * n + n - 1] = 0.0;
        }
        KgsState::from_flat(&z)
    })
}

fn method() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

/// Random ordered partition of `0..m`.
fn grouping(m: usize) -> impl Strategy<Value = Grouping> {
    (Just((0..m).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), m - 1)).prop_map(
        move |(perm, cuts)| {
            let mut groups = vec![vec![perm[0]]];
            for (i, cut) in cuts.into_iter().enumerate() {
                if cut {
                    groups.push(Vec::new());
                }
                groups.last_mut().unwrap().push(perm[i + 1]);
            }
            Grouping::new(groups, m).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hh_every_scheme_conserves_energy(z in hh_state(), m in method(), tau in 0.01f64..0.3) {
        let stepper = HhScheme::new(m, StepperConfig::new(tau)).unwrap();
        let next = stepper.step(&z).unwrap().state;
        let (h0, h1) = (hh_energy(&z), hh_energy(&next));
        prop_assert!((h1 - h0).abs() <= 1e-12 * h0.abs().max(1.0), "{} drift {:e}", m, h1 - h0);
    }

    #[test]
    fn hh_adjoint_undoes_pavf(z in hh_state(), tau in 0.01f64..0.3) {
        let fwd = HhScheme::new(Method::Pavf, StepperConfig::new(tau)).unwrap();
        let back = HhScheme::new(Method::PavfAdjoint, StepperConfig::new(-tau)).unwrap();
        let round = back.step(&fwd.step(&z).unwrap().state).unwrap().state;
        prop_assert!(round.max_abs_diff(&z) <= 1e-12);
    }

    #[test]
    fn path_gradient_telescopes(a in hh_state(), b in hh_state(), g in grouping(4)) {
        let sys = hh_system();
        let (a, b): (State, State) = (a.into(), b.into());
        let grad = path_averaged_gradient(&sys, &g, &a, &b);
        let lhs: f64 = grad.iter().zip(b.iter().zip(a.iter())).map(|(g, (y, x))| g * (y - x)).sum();
        let rhs = sys.hamiltonian(&b) - sys.hamiltonian(&a);
        prop_assert!((lhs - rhs).abs() <= 1e-14);
    }

    #[test]
    fn reversing_twice_is_identity(g in grouping(9)) {
        prop_assert_eq!(g.reversed().reversed(), g);
    }

    #[test]
    fn section_point_lies_between_samples(a in hh_state(), b in hh_state()) {
        if let Some(c) = section_crossing(0.0, &a, 1.0, &b) {
            prop_assert!(c.t_cross >= 0.0 && c.t_cross <= 1.0);
            prop_assert!(c.q2 >= a.q2.min(b.q2) - 1e-15 && c.q2 <= a.q2.max(b.q2) + 1e-15);
            prop_assert!(c.state.p1 > 0.0);
            prop_assert!(c.state.q1.abs() <= 1e-15);
        }
    }

    #[test]
    fn fitted_order_recovers_power_law(p in 0.5f64..4.0, c in 1e-3f64..1e3) {
        let steps: [f64; 4] = [0.1, 1.0 / 11.0, 1.0 / 12.0, 1.0 / 13.0];
        let errs: Vec<f64> = steps.iter().map(|s| c * s.powf(p)).collect();
        prop_assert!((fitted_order(&steps, &errs) - p).abs() < 1e-10);
        prop_assert!((log_ratio_order(steps[0], errs[0], steps[1], errs[1]) - p).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kgs_partitioned_schemes_conserve_mass_and_energy(
        z in kgs_state(33),
        m in prop::sample::select(vec![Method::Pavf, Method::PavfAdjoint, Method::PavfC, Method::PavfP]),
    ) {
        let grid = Grid1D::new(-10.0, 10.0, 32).unwrap();
        let next = KgsScheme::new(&grid, m, StepperConfig::new(0.05)).unwrap().step(&z).unwrap().state;
        let (m0, m1) = (kgs_mass(&grid, &z), kgs_mass(&grid, &next));
        let (h0, h1) = (kgs_hamiltonian(&grid, &z), kgs_hamiltonian(&grid, &next));
        prop_assert!((m1 - m0).abs() <= 1e-13 * m0.max(1.0), "{} mass drift {:e}", m, m1 - m0);
        prop_assert!((h1 - h0).abs() <= 1e-12 * h0.abs().max(1.0), "{} energy drift {:e}", m, h1 - h0);
        prop_assert!(next.is_admissible());
    }

    #[test]
    fn kgs_avf_conserves_energy(z in kgs_state(33)) {
        let grid = Grid1D::new(-10.0, 10.0, 32).unwrap();
        let next = KgsScheme::new(&grid, Method::Avf, StepperConfig::new(0.05)).unwrap().step(&z).unwrap().state;
        let (h0, h1) = (kgs_hamiltonian(&grid, &z), kgs_hamiltonian(&grid, &next));
        prop_assert!((h1 - h0).abs() <= 1e-12 * h0.abs().max(1.0));
    }
}
