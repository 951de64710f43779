//! Long chains through the momentum-space sum: critical scaling and the
//! drift of the pseudo-critical field.

use ising_qfi::fermion::{euler_maclaurin_expansion, pseudo_critical_field, qfi_zero_t_sum, scaling_study};

fn main() -> ising_qfi::Result<()> {
    let sizes = [16, 32, 64, 128, 256, 512];
    for (label, h) in [("h = J", 1.0), ("h = 2J", 2.0)] {
        let fit = scaling_study(&sizes, 1.0, h, f64::INFINITY)?;
        println!(
            "{label}: G_J ~ {:.4} L^{:.4}  (log residual {:.2e})",
            fit.coefficient, fit.exponent, fit.residual
        );
    }

    println!("\n{:>5} {:>14} {:>14}", "L", "G_J(h=J)", "(L^2-L)/8");
    for l in [4, 16, 64, 256] {
        let lf = l as f64;
        println!(
            "{l:>5} {:>14.6} {:>14.6}",
            qfi_zero_t_sum(l, 1.0, 1.0)?.value,
            (lf * lf - lf) / 8.0
        );
    }

    println!("\nnear-critical expansion, L = 64, z = (h - J) L:");
    for z in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let h = 1.0 + z / 64.0;
        println!(
            "z = {z:>5}: sum {:>10.4}  expansion {:>10.4}",
            qfi_zero_t_sum(64, 1.0, h)?.value,
            euler_maclaurin_expansion(64, 1.0, z)
        );
    }

    println!("\npseudo-critical field at beta = 20:");
    for l in [8, 16, 32, 64] {
        println!("L = {l:>3}: h* = {:.6}", pseudo_critical_field(l, 1.0, 20.0)?.field);
    }
    Ok(())
}
