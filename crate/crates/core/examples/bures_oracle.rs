//! Spectral QFI checked against a finite difference of the Bures distance.

use ising_qfi::estimation::{bures_distance_fd_oracle, qfi_exact};
use ising_qfi::spin::SpinChainParams;

fn main() -> ising_qfi::Result<()> {
    println!(
        "{:>3} {:>5} {:>6} {:>14} {:>14} {:>10}",
        "L", "h", "beta", "spectral", "Bures", "rel"
    );
    for l in [2, 3, 4] {
        for h in [0.5, 1.0, 2.0] {
            for beta in [f64::INFINITY, 5.0, 1.0] {
                let params = SpinChainParams::new(l, 1.0, h, beta)?;
                let g = qfi_exact(&params)?.value;
                let b = bures_distance_fd_oracle(&params, 1e-5)?;
                println!(
                    "{l:>3} {h:>5} {beta:>6} {g:>14.8} {b:>14.8} {:>10.2e}",
                    (b - g).abs() / g
                );
            }
        }
    }
    Ok(())
}
