//! Spectrum, Gibbs weights and QFI of a short chain by exact diagonalization.
//!
//! cargo run --example exact_spectrum -- 6 1.0 0.8 2.0

use ising_qfi::estimation::qfi_spectral;
use ising_qfi::spin::{thermal_model, SpinChainParams};

fn arg(i: usize, default: f64) -> f64 {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> ising_qfi::Result<()> {
    let sites = arg(1, 6.0) as usize;
    let params = SpinChainParams::new(sites, arg(2, 1.0), arg(3, 0.8), arg(4, 2.0))?;
    let (state, dh) = thermal_model(&params)?;

    println!(
        "L = {sites}, J = {}, h = {}, beta = {}",
        params.coupling, params.field, params.beta
    );
    println!("{:>4} {:>14} {:>12}", "n", "E_n", "p_n");
    for n in 0..state.dim().min(10) {
        println!("{n:>4} {:>14.8} {:>12.4e}", state.energies[n], state.weights[n]);
    }
    if state.dim() > 10 {
        println!("  ... {} more levels", state.dim() - 10);
    }

    let g = qfi_spectral(&state, &dh)?;
    println!(
        "G_J = {:.10}  (populations {:.10}, coherences {:.10})",
        g.value, g.classical_part, g.quantum_part
    );
    println!("G_J / L = {:.10}", g.value / sites as f64);
    Ok(())
}
