//! Backend routing: exact matrices for short chains, the momentum sum for
//! long even chains and the integral for the infinite chain.

use ising_qfi::model::{optimal_field, qfi_at, ChainLength};
use ising_qfi::spin::DEFAULT_MAX_SITES;

fn main() -> ising_qfi::Result<()> {
    let (j, beta) = (1.0, 5.0);
    for length in ["4", "7", "64", "inf"] {
        let length: ChainLength = length.parse()?;
        let point = qfi_at(length, j, 1.0, beta, DEFAULT_MAX_SITES, None)?;
        let (_, opt) = optimal_field(length, j, beta, DEFAULT_MAX_SITES, None)?;
        println!(
            "L = {length:>4}  backend {:<8} G_J(h=J) = {:>12.6}  h* = {:.5}",
            point.backend.as_str(),
            point.qfi.value,
            opt.field
        );
    }
    println!("(values at L = inf are per site)");
    Ok(())
}
