//! QFI per site of the infinite chain and its cusp at h = J.

use ising_qfi::thermo::{cusp_scan, gtilde_asymptotic, gtilde_quadrature, peak_density_estimate};

fn main() -> ising_qfi::Result<()> {
    let (j, beta) = (1.0, 20.0);
    println!("{:>6} {:>12} {:>12} {:>12}  regime", "h", "g1", "g2", "total");
    for h in [0.5, 0.8, 0.95, 1.0, 1.05, 1.2, 2.0] {
        let d = gtilde_quadrature(j, h, beta)?;
        println!(
            "{h:>6} {:>12.6} {:>12.6} {:>12.6}  {}",
            d.g1,
            d.g2,
            d.total,
            d.regime.as_str()
        );
    }

    let scan = cusp_scan(j, beta, (0.5, 1.5), 1e-4)?;
    println!(
        "\npeak at h = {:.4}, value {:.6}; slopes {:.3} / {:.3}",
        scan.peak_field, scan.peak_value, scan.left_slope, scan.right_slope
    );
    println!(
        "low-temperature estimate of the peak: {:.6}",
        peak_density_estimate(j, beta)
    );

    let q = gtilde_quadrature(j, j, 50.0)?;
    let a = gtilde_asymptotic(j, j, 50.0)?;
    println!(
        "\nbeta = 50, h = J: quadrature g2 = {:.6}, asymptotic g2 = {:.6}",
        q.g2, a.g2
    );
    Ok(())
}
