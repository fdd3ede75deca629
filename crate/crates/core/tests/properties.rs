use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sptforge_core::ansatz::{LayeredCircuit, Objective};
use sptforge_core::dilation::{dilate, propagator, ScalePolicy};
use sptforge_core::linalg::{identity, max_abs_diff};
use sptforge_core::model::{build_hamiltonian, IsingClusterParams};
use sptforge_core::noise::{sample_trajectories, NoiseModel};
use sptforge_core::observables::{
    entanglement_spectrum, qae_renyi, renyi2_swap, string_order, tomography_3q, QaeCircuit, QaeMode, TomographyMode,
    TwoCopyState, SPECTRUM_FLOOR,
};
use sptforge_core::zne::fold;
use sptforge_core::Statevector;

fn random_state(n: usize, seed: u64) -> Statevector {
    Statevector::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn random_circuit(n: usize, layers: usize, params: &[f64]) -> LayeredCircuit {
    let mut c = LayeredCircuit::new(n, layers);
    for (p, v) in c.params.iter_mut().zip(params.iter().cycle()) {
        *p = *v;
    }
    c
}

fn max_amp_diff(a: &Statevector, b: &Statevector) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swap_expectation_equals_purity(seed in any::<u64>(), x in 0usize..=4) {
        let psi = random_state(4, seed);
        let tc = TwoCopyState::from_state(&psi);
        let swap = renyi2_swap(&tc, x).unwrap().r2;
        let purity = if x == 0 { 1.0 } else { psi.reduced_density(&(0..x).collect::<Vec<_>>()).unwrap().purity() };
        prop_assert!((swap - purity).abs() < 1e-9);
        let qae = qae_renyi(&QaeCircuit::from_two_copy(&tc), x, QaeMode::Analytic).unwrap().value;
        prop_assert!((qae - swap).abs() < 1e-9);
        prop_assert!(swap > 0.0 && swap <= 1.0 + 1e-12);
    }

    #[test]
    fn tomography_round_trip(seed in any::<u64>(), n in 3usize..=5, pick in 0usize..10) {
        let psi = random_state(n, seed);
        let mut sites: Vec<usize> = (0..n).collect();
        sites.rotate_left(pick % n);
        let sub = &sites[..3];
        let t = tomography_3q(std::slice::from_ref(&psi), sub, TomographyMode::Analytic).unwrap();
        let want = psi.reduced_density(sub).unwrap();
        prop_assert!(max_abs_diff(t.rho.matrix(), want.matrix()) < 1e-9);
        let s = entanglement_spectrum(&t.rho, SPECTRUM_FLOOR, None).unwrap();
        prop_assert!((s.epsilons.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!(s.epsilons.iter().all(|e| *e >= -1e-9));
        prop_assert!(s.epsilons.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn folding_is_noiseless_identity(
        params in prop::collection::vec(-3.0f64..3.0, 1..40),
        layers in 1usize..4,
        m in prop::sample::select(vec![2usize, 4, 6]),
        seed in any::<u64>(),
    ) {
        let base = random_circuit(4, layers, &params);
        let input = random_state(4, seed);
        let folded = fold(&base, m).unwrap();
        prop_assert_eq!(folded.total_layers(), layers + m);
        let a = base.evaluate(&input).unwrap();
        let b = folded.circuit().evaluate(&input).unwrap();
        prop_assert!(max_amp_diff(&a, &b) < 1e-9);
    }

    #[test]
    fn cost_lies_in_unit_interval(params in prop::collection::vec(-3.0f64..3.0, 1..30), seed in any::<u64>()) {
        let c = random_circuit(3, 2, &params);
        let obj = Objective::new(random_state(3, seed), random_state(3, seed ^ 1)).unwrap();
        let (cost, grad) = obj.cost_and_gradient(&c).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&cost));
        prop_assert_eq!(grad.len(), c.n_params());
        prop_assert!((obj.cost(&c).unwrap() - cost).abs() < 1e-12);
    }

    #[test]
    fn string_order_is_bounded(seed in any::<u64>(), n in 2usize..=5) {
        let v = string_order(&random_state(5, seed), n).unwrap();
        prop_assert!(v.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn dilation_embeds_scaled_propagator(
        j in -2.0f64..2.0, h in -2.0f64..2.0, g in -3.0f64..3.0,
        l in 3usize..=4,
        beta in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0]),
    ) {
        let ham = build_hamiltonian(&IsingClusterParams::new(j, h, g, l).unwrap()).unwrap();
        let p = propagator(&ham, beta).unwrap();
        let d = dilate(&p, ScalePolicy::InverseMaxSingular).unwrap();
        let scaled = p * num_complex::Complex64::new(d.scale, 0.0);
        prop_assert!(max_abs_diff(&d.top_left(), &scaled) < 1e-9);
        let q = &d.blocks;
        prop_assert!((q.adjoint() * q - identity(q.nrows())).norm() < 1e-10);
    }
}

#[test]
fn zero_noise_trajectories_match_ideal_output() {
    let c = random_circuit(4, 2, &[0.3, -1.1, 2.0, 0.7, -0.4]);
    let input = Statevector::plus(4);
    let ideal = c.evaluate(&input).unwrap();
    let model = NoiseModel::new(0.0, 0.0, 9).unwrap();
    for s in sample_trajectories(&c.gates(), &input, &model, 5).unwrap() {
        assert!(max_amp_diff(&s, &ideal) < 1e-12);
    }
}
