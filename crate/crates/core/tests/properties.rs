use dqpt_core::bathrates::{BathParams, BathRates};
use dqpt_core::engine::{influence_factor, simultaneous_eigensystem, EigenSystem, ExactPropagator, Frame, RunOptions, Store};
use dqpt_core::linalg;
use dqpt_core::model::{global_current, ring_hamiltonian, ModelParams};
use dqpt_core::observables::{Probe, ProbeConfig};
use dqpt_core::prep::{initial_density_matrix, DensityMatrix};
use dqpt_core::spinops::{relative_commutator, Operator};
use proptest::prelude::*;

fn ring(n_a: usize, n_b: usize, tau: f64, field: f64, nu: f64) -> (ModelParams, Operator, Operator, EigenSystem) {
    let p = ModelParams { n_a, n_b, tau, field, nu };
    let h = ring_hamiltonian(&p).unwrap();
    let j = global_current(&p).unwrap();
    let eig = simultaneous_eigensystem(&h, &j).unwrap();
    (p, h, j, eig)
}

fn bath() -> impl Strategy<Value = BathParams> {
    (0.0f64..0.6, 0.0f64..0.8, 0.05f64..0.5, 5usize..40, prop_oneof![Just(f64::INFINITY), 0.5f64..20.0]).prop_map(
        |(gamma0, h, z, modes, beta)| BathParams { gamma0, h, z, modes, beta, ..BathParams::default() },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ring_current_commutes(n_a in 2usize..5, n_b in 2usize..4, tau in 0.05f64..2.0, field in 0.05f64..2.0) {
        let p = ModelParams { n_a, n_b, tau, field, nu: 0.0 };
        let r = relative_commutator(&ring_hamiltonian(&p).unwrap(), &global_current(&p).unwrap()).unwrap();
        prop_assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn exact_states_are_density_matrices(b in bath(), t in 0.0f64..20.0, nu in 0.0f64..6.0) {
        let (p, _, _, eig) = ring(2, 2, 0.42, 1.0, nu);
        let prop = ExactPropagator::new(&initial_density_matrix(&p).unwrap(), &eig, BathRates::new(&b).unwrap()).unwrap();
        let rho = prop.state(t).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue().unwrap() > -1e-10);
        prop_assert!(rho.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn period_map_powers(b in bath(), m in 1u32..5) {
        let (p, _, _, eig) = ring(2, 2, 0.42, 1.0, 5.0);
        let prop = ExactPropagator::new(&initial_density_matrix(&p).unwrap(), &eig, BathRates::new(&b).unwrap()).unwrap();
        let direct = prop.state_eigen(m as f64 * prop.rates().period());
        let composed = prop.one_period_map().power(m).apply_eigen(prop.initial_eigen());
        let worst = direct.iter().zip(composed.iter()).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn integrated_exponents_differentiate_to_rates(b in bath(), t in 0.1f64..12.0) {
        let r = BathRates::new(&b).unwrap();
        let e = 1e-5;
        let (gp, lp) = r.influence_exponents(t + e);
        let (gm, lm) = r.influence_exponents(t - e);
        let (gamma, lambda) = r.generator_coefficients(t);
        let scale = 1.0 + gamma.abs() + lambda.abs();
        prop_assert!(((gp - gm) / (2.0 * e) - 0.5 * gamma).abs() < 1e-6 * scale);
        prop_assert!(((lp - lm) / (2.0 * e) - lambda).abs() < 1e-6 * scale);
    }

    #[test]
    fn influence_factor_is_a_contraction(b in bath(), t in 0.0f64..15.0, i in 0usize..16, k in 0usize..16) {
        let (_, _, _, eig) = ring(2, 2, 0.42, 1.0, 5.0);
        let r = BathRates::new(&b).unwrap();
        let f = influence_factor(i, k, t, &eig, &r);
        let g = influence_factor(k, i, t, &eig, &r);
        prop_assert!(f.norm() <= 1.0 + 1e-12);
        prop_assert!((f - g.conj()).norm() < 1e-12);
        prop_assert!((influence_factor(i, i, t, &eig, &r).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn current_and_energy_are_constants_of_motion(b in bath(), nu in 0.5f64..6.0) {
        let (p, h, _, eig) = ring(2, 2, 0.42, 1.0, nu);
        let rates = BathRates::new(&b).unwrap();
        let period = rates.period();
        let times: Vec<f64> = (0..=12).map(|k| k as f64 * period / 6.0).collect();
        let mut probe = Probe::new(&p, &Frame::Eigen(&eig), rates.clone(), ProbeConfig::default()).unwrap();
        let opts = RunOptions { store: Store::All, min_eig_every: 1 };
        let rho0 = initial_density_matrix(&p).unwrap();
        let traj = ExactPropagator::new(&rho0, &eig, rates).unwrap().run(&times, opts, &mut probe).unwrap();
        let j0 = probe.records()[0].j_expect;
        let e0 = rho0.expectation(&h).unwrap();
        for (rec, (_, rho)) in probe.records().iter().zip(&traj.states) {
            prop_assert!((rec.j_expect - j0).abs() < 1e-10);
            prop_assert!((rho.expectation(&h).unwrap() - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn markovian_purity_never_increases(gamma0 in 0.01f64..0.6) {
        let (p, _, _, eig) = ring(2, 2, 0.42, 1.0, 5.0);
        let b = BathParams { gamma0, ..BathParams::default() };
        let prop = ExactPropagator::new(&initial_density_matrix(&p).unwrap(), &eig, BathRates::new(&b).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..=40 {
            let purity = linalg::frobenius(&prop.state_eigen(k as f64 * 0.25)).powi(2);
            prop_assert!(purity <= last + 1e-12);
            last = purity;
        }
    }
}

#[test]
fn closed_ring_stays_pure() {
    let (p, _, _, eig) = ring(6, 2, 0.42, 1.0, 5.0);
    let prop = ExactPropagator::new(&initial_density_matrix(&p).unwrap(), &eig, BathRates::new(&BathParams::closed()).unwrap()).unwrap();
    for t in [0.5, 2.0, 6.0, 13.0] {
        let rho: DensityMatrix = prop.state(t).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }
}
