//! Total-magnetization Fisher information against the QFI.

use ising_qfi::measure::efficiency_report;

fn main() -> ising_qfi::Result<()> {
    let couplings = [0.5, 1.0, 2.0, 4.0];
    for (sites, beta) in [(2, 3.0), (3, 3.0), (4, 10.0)] {
        println!("L = {sites}, beta = {beta}");
        println!(
            "{:>6} {:>9} {:>10} {:>9} {:>10} {:>8} {:>10}",
            "J", "h~", "F_J", "h*", "G_J", "F/G", "delta(1)"
        );
        for row in efficiency_report(sites, beta, &couplings, &[1.0])? {
            println!(
                "{:>6} {:>9.4} {:>10.5} {:>9.4} {:>10.5} {:>8.4} {:>10.4}",
                row.coupling,
                row.h_tilde,
                row.fisher_at_h_tilde,
                row.h_star,
                row.qfi_at_h_star,
                row.ratio,
                row.delta[0].1
            );
        }
        println!();
    }
    Ok(())
}
