//! QFI of L = 2, 3, 4 chains against field and temperature.

use ising_qfi::estimation::qfi_exact;
use ising_qfi::measure::optimal_qfi_field;
use ising_qfi::spin::SpinChainParams;

fn main() -> ising_qfi::Result<()> {
    let j = 1.0;
    let betas = [f64::INFINITY, 10.0, 3.0, 1.0];
    print!("{:>3} {:>5}", "L", "h");
    for b in betas {
        print!(" {:>12}", format!("beta={b}"));
    }
    println!();
    for l in [2, 3, 4] {
        for h in [0.25, 0.5, 1.0, 1.5, 2.0] {
            print!("{l:>3} {h:>5}");
            for b in betas {
                print!(" {:>12.6}", qfi_exact(&SpinChainParams::new(l, j, h, b)?)?.value);
            }
            println!();
        }
    }

    println!("\nfield of maximal QFI:");
    for l in [2, 3, 4] {
        let cold = optimal_qfi_field(l, j, f64::INFINITY)?;
        let warm = optimal_qfi_field(l, j, 3.0)?;
        println!(
            "L = {l}: h* = {:.6} at T = 0, {:.6} at beta = 3",
            cold.field, warm.field
        );
    }
    Ok(())
}
