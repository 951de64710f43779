use proptest::prelude::*;

use ising_qfi::estimation::{
    bures_distance_squared, qfi_pure_state, qfi_spectral, sld_diagnostics, sld_spectral, uhlmann_fidelity,
};
use ising_qfi::fermion::{dispersion, qfi_finite_t_sum, qfi_zero_t_sum};
use ising_qfi::measure::{
    build_povm, classical_fisher, optimal_measurement_field, outcome_distribution, posterior, sample_experiment,
    DerivativeMode, ExperimentRecord, GridSpec, LikelihoodTable,
};
use ising_qfi::spin::{
    build_hamiltonian, d_hamiltonian_dj, eigendecompose, gibbs_state, thermal_model, SpinChainParams,
};
use ising_qfi::thermo::{gtilde_quadrature, peak_density_estimate, CATALAN};

fn beta_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), 0.05f64..50.0]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_hermitian_and_linear(l in 2usize..=6, j1 in 0.05f64..5.0, j2 in 0.05f64..5.0, h in 0.0f64..5.0) {
        let p = SpinChainParams::zero_temperature(l, j1, h).unwrap();
        let h1 = build_hamiltonian(&p).unwrap();
        let h2 = build_hamiltonian(&p.with_coupling(j2)).unwrap();
        prop_assert!(h1.hermiticity_defect() < 1e-12);
        let dh = d_hamiltonian_dj(&p).unwrap();
        let gap = (h2.matrix() - h1.matrix() - dh.matrix() * (j2 - j1)).amax();
        prop_assert!(gap <= 1e-15 * (1.0 + j1.max(j2) * l as f64), "{gap}");
    }

    #[test]
    fn two_site_spectrum(j in 0.05f64..5.0, h in 0.0f64..5.0) {
        let (mut e, _) = eigendecompose(&build_hamiltonian(&SpinChainParams::zero_temperature(2, j, h).unwrap()).unwrap());
        e.sort_by(f64::total_cmp);
        let r = 2.0 * (j * j + h * h).sqrt();
        let mut expected = [-r, -2.0 * j, 2.0 * j, r];
        expected.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(expected) {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn gibbs_weights_normalized(l in 2usize..=6, j in 0.05f64..5.0, h in 0.0f64..5.0, beta in beta_strategy()) {
        let (s, _) = thermal_model(&SpinChainParams::new(l, j, h, beta).unwrap()).unwrap();
        prop_assert!(s.weights.iter().all(|&p| p >= 0.0));
        prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qfi_parts_nonnegative(l in 2usize..=6, j in 0.05f64..5.0, h in 0.0f64..5.0, beta in 0.05f64..50.0) {
        let (s, dh) = thermal_model(&SpinChainParams::new(l, j, h, beta).unwrap()).unwrap();
        let g = qfi_spectral(&s, &dh).unwrap();
        prop_assert!(g.classical_part >= 0.0 && g.quantum_part >= 0.0);
        prop_assert!((g.classical_part + g.quantum_part - g.value).abs() <= 1e-14 * g.value.max(1e-300));
    }

    #[test]
    fn sld_invariants(l in 2usize..=4, j in 0.1f64..3.0, h in 0.05f64..3.0, beta in prop_oneof![Just(1.0), Just(10.0), Just(100.0)]) {
        let (s, dh) = thermal_model(&SpinChainParams::new(l, j, h, beta).unwrap()).unwrap();
        let sld = sld_spectral(&s, &dh).unwrap();
        let (tr1, tr2, residual) = sld_diagnostics(&s, &dh, &sld).unwrap();
        let g = qfi_spectral(&s, &dh).unwrap().value;
        prop_assert!(tr1.abs() < 1e-8);
        prop_assert!((tr2 - g).abs() < 1e-8 * g.max(1.0));
        prop_assert!(residual < 1e-8);
    }

    #[test]
    fn high_temperature_qfi_vanishes(l in 2usize..=5, j in 0.1f64..3.0, h in 0.0f64..3.0) {
        let g = |beta: f64| {
            let (s, dh) = thermal_model(&SpinChainParams::new(l, j, h, beta).unwrap()).unwrap();
            qfi_spectral(&s, &dh).unwrap().value
        };
        let (g1, g2) = (g(1e-3), g(1e-4));
        prop_assert!(g2 < g1 || g1 == 0.0);
        prop_assert!(g2 < 1e-6 * l as f64);
    }

    #[test]
    fn fermion_matches_exact_ground_state(half in 1usize..=4, j in 0.1f64..3.0, x in 0.05f64..3.0) {
        let (l, h) = (2 * half, x * j);
        prop_assume!((x - 1.0).abs() > 1e-3 || l > 2);
        let (s, dh) = thermal_model(&SpinChainParams::zero_temperature(l, j, h).unwrap()).unwrap();
        let exact = qfi_pure_state(&s, &dh).unwrap().value;
        let sum = qfi_zero_t_sum(l, j, h).unwrap().value;
        prop_assert!(rel(sum, exact) < 1e-9, "{sum} vs {exact}");
    }

    #[test]
    fn fermion_thermal_sum_cold_limit(half in 1usize..=50, j in 0.1f64..3.0, x in 0.05f64..3.0) {
        let (l, h) = (2 * half, x * j);
        let cold = qfi_zero_t_sum(l, j, h).unwrap().value;
        let warm = qfi_finite_t_sum(l, j, h, 1e4 / j).unwrap().value;
        prop_assume!(1e4 * (x - 1.0).abs() > 50.0);
        prop_assert!(rel(warm, cold) < 1e-9, "{warm} vs {cold}");
    }

    #[test]
    fn dispersion_derivatives(j in 0.1f64..5.0, h in 0.0f64..5.0, k in 0.0f64..std::f64::consts::PI) {
        prop_assume!(((j - h).abs() > 1e-2) || (k - std::f64::consts::PI).abs() > 1e-2);
        let d = dispersion(j, h, k).unwrap();
        let step = 1e-6 * j;
        let (up, down) = (dispersion(j + step, h, k).unwrap(), dispersion(j - step, h, k).unwrap());
        let dl = (up.lambda - down.lambda) / (2.0 * step);
        let dt = (up.theta - down.theta) / (2.0 * step);
        prop_assert!((dl - d.dlambda_dj).abs() < 1e-7 * d.dlambda_dj.abs().max(1.0));
        prop_assert!((dt - d.dtheta_dj).abs() < 1e-7 * d.dtheta_dj.abs().max(1.0));
    }

    #[test]
    fn peak_qsnr_independent_of_coupling(half in 1usize..=256) {
        let l = 2 * half;
        let q: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&j| j * j * qfi_zero_t_sum(l, j, j).unwrap().value).collect();
        prop_assert!(rel(q[0], q[1]) < 1e-12 && rel(q[2], q[1]) < 1e-12);
    }

    #[test]
    fn ground_state_peak_is_unimodal(half in 1usize..=20, j in 0.2f64..4.0) {
        let l = 2 * half;
        let g: Vec<f64> = (1..=60).map(|i| qfi_zero_t_sum(l, j, j * i as f64 / 30.0).unwrap().value).collect();
        // Index 29 is h = J.
        prop_assert!(g[..30].windows(2).all(|w| w[1] > w[0]));
        prop_assert!(g[29..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn density_positive_and_riemann(j in 0.2f64..3.0, x in 0.0f64..4.0, beta in 0.2f64..50.0, critical in any::<bool>()) {
        // Within a few multiples of J/L of the critical field the finite chain
        // has not reached the limit yet.
        let h = if critical { j } else { x * j };
        prop_assume!(critical || (x - 1.0).abs() * 2000.0 > 40.0);
        let d = gtilde_quadrature(j, h, beta).unwrap();
        prop_assert!(d.g1 >= 0.0 && d.g2 >= 0.0);
        let sum = qfi_finite_t_sum(2000, j, h, beta).unwrap().value / 2000.0;
        prop_assert!((d.total - sum).abs() < 1e-6, "{} vs {sum}", d.total);
    }

    #[test]
    fn distribution_normalized(l in 1usize..=6, j in 0.05f64..5.0, h in 0.0f64..5.0, beta in beta_strategy()) {
        let povm = build_povm(l).unwrap();
        let d = outcome_distribution(&SpinChainParams::new(l.max(2), j, h, beta).unwrap().with_field(h), &povm);
        if l >= 2 {
            let d = d.unwrap();
            prop_assert!(d.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn braunstein_caves(l in 2usize..=4, j in 0.1f64..4.0, h in 0.0f64..4.0, beta in beta_strategy()) {
        prop_assume!(beta.is_finite() || (h - j).abs() > 1e-3);
        let p = SpinChainParams::new(l, j, h, beta).unwrap();
        let f = classical_fisher(&p, &build_povm(l).unwrap(), DerivativeMode::Analytic).unwrap();
        let (s, dh) = thermal_model(&p).unwrap();
        let g = qfi_spectral(&s, &dh).unwrap().value;
        prop_assert!(f >= 0.0);
        prop_assert!(f <= g + 1e-9, "F = {f}, G = {g}");
    }

    #[test]
    fn magnetization_saturates_qfi_cold(l in 2usize..=3, j in 0.1f64..4.0, x in 0.05f64..3.0) {
        let p = SpinChainParams::new(l, j, x * j, 1e3).unwrap();
        let f = classical_fisher(&p, &build_povm(l).unwrap(), DerivativeMode::Analytic).unwrap();
        let (s, dh) = thermal_model(&p).unwrap();
        let g = qfi_spectral(&s, &dh).unwrap().value;
        prop_assume!(g > 1e-12);
        prop_assert!(rel(f, g) < 1e-6, "F = {f}, G = {g}");
    }

    #[test]
    fn bures_symmetric_and_bounded(l in 2usize..=4, j1 in 0.1f64..3.0, j2 in 0.1f64..3.0, h in 0.0f64..3.0, beta in 0.1f64..20.0) {
        let (a, _) = thermal_model(&SpinChainParams::new(l, j1, h, beta).unwrap()).unwrap();
        let (b, _) = thermal_model(&SpinChainParams::new(l, j2, h, beta).unwrap()).unwrap();
        let ab = bures_distance_squared(&a, &b).unwrap();
        let ba = bures_distance_squared(&b, &a).unwrap();
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(bures_distance_squared(&a, &a).unwrap() < 1e-14);
        let f = uhlmann_fidelity(&a, &b).unwrap();
        prop_assert!((2.0 * (1.0 - f.sqrt()) - ab).abs() < 1e-10);
    }

    #[test]
    fn posterior_ignores_outcome_order(outcomes in proptest::collection::vec(0usize..3, 1..200), seed in any::<u64>()) {
        let mut shuffled = outcomes.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = ExperimentRecord::from_outcomes(3.0, 3, &outcomes).unwrap();
        let b = ExperimentRecord::from_outcomes(3.0, 3, &shuffled).unwrap();
        prop_assert_eq!(&a, &b);
        let table = small_table();
        match (posterior(&a, table), posterior(&b, table)) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(x), Err(y)) => prop_assert_eq!(x, y),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn seeded_sampling_is_deterministic(seed in any::<u64>(), stream in any::<u64>(), m in 1u64..2000) {
        let table = small_table();
        let dist = outcome_distribution(&SpinChainParams::new(2, 3.0, 2.8, 1.0).unwrap(), &build_povm(2).unwrap()).unwrap();
        let a = sample_experiment(&dist, 3.0, m, seed, stream).unwrap();
        let b = sample_experiment(&dist, 3.0, m, seed, stream).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.counts.iter().sum::<u64>(), m);
        if let (Ok(x), Ok(y)) = (posterior(&a, table), posterior(&b, table)) {
            prop_assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            prop_assert_eq!(x.variance.to_bits(), y.variance.to_bits());
        }
    }
}

fn small_table() -> &'static LikelihoodTable {
    static TABLE: std::sync::OnceLock<LikelihoodTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let p = SpinChainParams::new(2, 3.0, 2.8, 1.0).unwrap();
        let spec = GridSpec {
            lo: 0.75,
            hi: 12.0,
            points: 401,
        };
        LikelihoodTable::magnetization(&p, &build_povm(2).unwrap(), spec).unwrap()
    })
}

#[test]
fn credible_interval_coverage() {
    let (l, j, beta) = (2, 3.0, 1.0);
    let h = optimal_measurement_field(l, j, beta).unwrap().field;
    let p = SpinChainParams::new(l, j, h, beta).unwrap();
    let povm = build_povm(l).unwrap();
    let dist = outcome_distribution(&p, &povm).unwrap();
    let table = LikelihoodTable::magnetization(&p, &povm, GridSpec::around(j)).unwrap();
    let runs = 200;
    let hits = (0..runs)
        .filter(|&s| {
            let post = posterior(&sample_experiment(&dist, j, 500, 2024, s).unwrap(), &table).unwrap();
            let (lo, hi) = post.credible_interval(0.95);
            lo <= j && j <= hi
        })
        .count();
    let rate = hits as f64 / runs as f64;
    assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
}

#[test]
fn magnetization_misses_qfi_at_four_sites() {
    // The total magnetization is not an optimal measurement for L = 4: a
    // finite gap survives at low temperature.
    let p = SpinChainParams::new(4, 1.0, 0.8, 1e3).unwrap();
    let f = classical_fisher(&p, &build_povm(4).unwrap(), DerivativeMode::Analytic).unwrap();
    let (s, dh) = thermal_model(&p).unwrap();
    let g = qfi_spectral(&s, &dh).unwrap().value;
    assert!(f < g * (1.0 - 1e-3), "F = {f}, G = {g}");
}

#[test]
fn peak_density_low_temperature() {
    // Deep in the low-temperature regime the peak follows (2C/π²)/(TJ) up to
    // a correction linear in T/J.
    for j in [0.5, 1.0, 2.0] {
        for beta_j in [20.0, 40.0, 100.0] {
            let beta = beta_j / j;
            let peak = gtilde_quadrature(j, j, beta).unwrap().total;
            let estimate = peak_density_estimate(j, beta);
            assert!(
                rel(peak, estimate) < 0.05,
                "J = {j}, beta J = {beta_j}: {peak} vs {estimate}"
            );
        }
    }
}

#[test]
fn peak_density_correction() {
    // The ratio drifts linearly in T/J with a slope that settles near -0.67,
    // so a single leading term is not 5% accurate at T/J = 0.2.
    let slope = |j: f64, beta_j: f64| {
        let beta = beta_j / j;
        let ratio = gtilde_quadrature(j, j, beta).unwrap().total / peak_density_estimate(j, beta);
        (ratio - 1.0) * beta_j
    };
    for j in [0.5, 1.0, 2.0] {
        let slopes: Vec<f64> = [20.0, 40.0, 100.0, 200.0].iter().map(|&b| slope(j, b)).collect();
        assert!(slopes.iter().all(|s| (-0.68..-0.64).contains(s)), "J = {j}: {slopes:?}");
        assert!(slopes.windows(2).all(|w| w[1] < w[0]));
        let hot = gtilde_quadrature(j, j, 5.0 / j).unwrap().total / peak_density_estimate(j, 5.0 / j);
        assert!(hot < 0.95);
    }
    assert!(2.0 * CATALAN / std::f64::consts::PI.powi(2) > 0.18);
}

#[test]
fn thermal_sum_is_single_sector() {
    // The momentum sum keeps one fermion-parity sector. For short chains the
    // spin Gibbs state also populates the other sector, so the two disagree
    // at finite temperature; the zero-temperature values coincide.
    let (l, j, h, beta) = (2, 1.0, 0.5, 20.0);
    let (s, dh) = thermal_model(&SpinChainParams::new(l, j, h, beta).unwrap()).unwrap();
    let exact = qfi_spectral(&s, &dh).unwrap().value;
    let sum = qfi_finite_t_sum(l, j, h, beta).unwrap().value;
    assert!(rel(sum, 0.16) < 1e-6);
    assert!(exact > 1.5 * sum);
}

#[test]
fn gibbs_state_of_identity_shift() {
    // A constant energy shift leaves the weights unchanged.
    let p = SpinChainParams::new(3, 1.0, 0.5, 2.0).unwrap();
    let h = build_hamiltonian(&p).unwrap();
    let shifted =
        ising_qfi::spin::HermitianOperator::new(h.matrix() + nalgebra::DMatrix::identity(8, 8) * 1e3).unwrap();
    let (a, b) = (gibbs_state(&h, 2.0).unwrap(), gibbs_state(&shifted, 2.0).unwrap());
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-12);
    }
}
