//! Simulated magnetization experiments on a two-site chain and the Bayesian
//! estimate of J, compared with the Cramér-Rao bound.

use ising_qfi::measure::{
    asymptotic_posterior, build_povm, classical_fisher, optimal_measurement_field, outcome_distribution, posterior,
    sample_experiment, DerivativeMode, GridSpec, LikelihoodTable,
};
use ising_qfi::spin::SpinChainParams;

fn main() -> ising_qfi::Result<()> {
    let (sites, j, beta) = (2, 3.0, 1.0);
    let h = optimal_measurement_field(sites, j, beta)?.field;
    let params = SpinChainParams::new(sites, j, h, beta)?;
    let povm = build_povm(sites)?;
    let truth = outcome_distribution(&params, &povm)?;
    let fisher = classical_fisher(&params, &povm, DerivativeMode::Analytic)?;
    let table = LikelihoodTable::magnetization(&params, &povm, GridSpec::around(j))?;
    println!("h~ = {h:.4}, F_J = {fisher:.5}, p(m) = {:?}", truth.probs);

    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>14}",
        "M", "Bayes var", "asym var", "1/(M F)", "95% interval"
    );
    for m in [10u64, 50, 200, 500] {
        let runs: Vec<_> = (0..20)
            .map(|s| posterior(&sample_experiment(&truth, j, m, 7, s)?, &table))
            .collect::<ising_qfi::Result<_>>()?;
        let var = runs.iter().map(|p| p.variance).sum::<f64>() / runs.len() as f64;
        let asym = asymptotic_posterior(&truth, m as f64, &table)?;
        let (lo, hi) = runs[0].credible_interval(0.95);
        println!(
            "{m:>5} {var:>12.5} {:>12.5} {:>12.5}   [{lo:.3}, {hi:.3}]",
            asym.variance,
            1.0 / (m as f64 * fisher)
        );
    }
    Ok(())
}
