//! The two-site ground-state SLD against the one built from the spectrum.

use ising_qfi::estimation::{sld_diagnostics, sld_spectral, two_site_ground_sld};
use ising_qfi::spin::{thermal_model, SpinChainParams};

fn main() -> ising_qfi::Result<()> {
    let (j, h) = (1.0, 0.7);
    let params = SpinChainParams::zero_temperature(2, j, h)?;
    let (state, dh) = thermal_model(&params)?;
    let sld = sld_spectral(&state, &dh)?;
    let closed = two_site_ground_sld(j, h);

    println!("SLD from the spectrum:\n{:.6}", sld.matrix.matrix());
    println!("closed form:\n{:.6}", closed.matrix());

    let (tr1, tr2, residual) = sld_diagnostics(&state, &dh, &sld)?;
    println!("Tr rho L   = {tr1:.3e}");
    println!("Tr rho L^2 = {tr2:.12}  (QFI)");
    println!("|drho - {{L, rho}}/2|_max = {residual:.3e}");

    // Outside the ground-state support the SLD is not unique, so compare
    // only the action on the ground state.
    let psi = state.vector(0);
    let gap = (sld.matrix.matrix() * &psi - closed.matrix() * &psi).amax();
    println!("|(L - L_closed) psi|_max = {gap:.3e}");
    Ok(())
}
