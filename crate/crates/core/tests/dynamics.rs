use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superchain::dynamics::{decay_time, evolve_state, lifetime, norm_loss_rate, pair_resonance};
use superchain::linalg::{expm, CVector};
use superchain::model::build_effective_hamiltonian;
use superchain::ChainSpec;

fn random_state(seed: u64, d: usize) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = CVector::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

#[test]
fn matches_the_matrix_exponential() {
    let spec = ChainSpec::default().with_gamma(3.0).with_n(6);
    let h = build_effective_hamiltonian(&spec).unwrap().matrix();
    let psi0 = random_state(1, spec.dim());
    let grid = [0.0, 0.4, 3.3, 17.0];
    let r = evolve_state(&spec, &psi0, &grid).unwrap();
    for (t, psi) in grid.iter().zip(&r.states) {
        let exact = expm(&(&h * Complex64::new(0.0, -t))) * &psi0;
        assert!((psi - exact).norm() < 1e-9, "t = {t}");
    }
}

#[test]
fn closed_system_keeps_the_norm() {
    let spec = ChainSpec::default();
    let psi0 = random_state(2, spec.dim());
    let grid: Vec<f64> = (0..50).map(|k| k as f64).collect();
    let r = evolve_state(&spec, &psi0, &grid).unwrap();
    assert!(r.p.iter().all(|p| (p - 1.0).abs() < 1e-9));
}

#[test]
fn eigenstate_decays_at_its_width() {
    let spec = ChainSpec::default().with_gamma(2.5);
    let r = pair_resonance(&spec, 1, true).unwrap();
    let psi = &r.right_vec / Complex64::new(r.right_vec.norm(), 0.0);
    let tau = lifetime(&spec, &psi, 0.01, 10.0, 1e4).unwrap().unwrap();
    assert!((tau - 1.0 / r.gamma_q).abs() < 1e-3 / r.gamma_q);
}

#[test]
fn loss_rate_is_the_edge_population() {
    let spec = ChainSpec::default().with_gamma(1.3);
    let mut psi = CVector::zeros(spec.dim());
    psi[0] = Complex64::new(0.6, 0.0);
    psi[2 * spec.n - 1] = Complex64::new(0.0, 0.8);
    assert!((norm_loss_rate(&spec, &psi).unwrap() - 1.3).abs() < 1e-15);
}

#[test]
fn decay_time_crossing_inside_the_first_cell() {
    let t = decay_time(&[0.0, 1.0, 2.0], &[1.0, 0.2, 0.1]).unwrap();
    assert!((t - 1.0 / 5.0f64.ln()).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn survival_is_monotone_and_bounded(seed in any::<u64>(), gamma in 0.0f64..20.0, n in 2usize..12) {
        let spec = ChainSpec::default().with_n(n).with_gamma(gamma);
        let psi0 = random_state(seed, spec.dim());
        let grid: Vec<f64> = (0..60).map(|k| 0.5 * k as f64).collect();
        let r = evolve_state(&spec, &psi0, &grid).unwrap();
        prop_assert!((r.p[0] - 1.0).abs() < 1e-12);
        prop_assert!(r.p.windows(2).all(|w| w[1] <= w[0] + 1e-10));
        prop_assert!(r.p.iter().all(|&p| p >= -1e-12));
        if let Some(gap) = r.cross_check {
            prop_assert!(gap < 1e-7);
        }
    }
}
