//! Momentum-space (Bogoliubov) description of the chain.
//!
//! After the Jordan–Wigner and Bogoliubov transformations each quasi-momentum
//! `k` carries a mode of energy `Λ_k = √(ε_k² + Δ_k²)` with
//! `ε_k = J cos k + h` and `Δ_k = J sin k`, rotated by the angle
//! `ϑ_k = arctan(ε_k/Δ_k)`. Sums run over the even-fermion momenta
//! `k = (2n+1)π/L`, `n = 0 … L/2-1`, so only even chains are supported here.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimation::QfiValue;
use crate::optimize::{self, FieldOptimum, Refinement, ScanOptions};
use crate::summation::pairwise_sum_by;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub sites: usize,
    pub momenta: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(sites: usize) -> Result<Self> {
        check_even(sites)?;
        let momenta = (0..sites / 2).map(|n| (2 * n + 1) as f64 * PI / sites as f64).collect();
        Ok(MomentumGrid { sites, momenta })
    }

    pub fn len(&self) -> usize {
        self.momenta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.momenta.is_empty()
    }
}

fn check_even(sites: usize) -> Result<()> {
    if sites < 2 {
        return Err(Error::Domain(format!("L = {sites} but at least 2 sites are required")));
    }
    if sites % 2 == 1 {
        return Err(Error::Unsupported(format!(
            "odd L = {sites}: the momentum picture covers the even-fermion sector only"
        )));
    }
    Ok(())
}

fn check_couplings(coupling: f64, field: f64) -> Result<()> {
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(Error::Domain(format!(
            "coupling J = {coupling} must be finite and positive"
        )));
    }
    if !(field.is_finite() && field >= 0.0) {
        return Err(Error::Domain(format!(
            "field h = {field} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Single-mode quantities at momentum `k` and their `J`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionPoint {
    pub k: f64,
    pub eps: f64,
    pub delta: f64,
    pub lambda: f64,
    pub theta: f64,
    pub dlambda_dj: f64,
    pub dtheta_dj: f64,
}

#[inline]
fn mode(coupling: f64, field: f64, k: f64) -> DispersionPoint {
    let (sin, cos) = k.sin_cos();
    let eps = coupling * cos + field;
    let delta = coupling * sin;
    let lambda = eps.hypot(delta);
    DispersionPoint {
        k,
        eps,
        delta,
        lambda,
        theta: (eps / delta).atan(),
        dlambda_dj: (coupling + field * cos) / lambda,
        dtheta_dj: -field * sin / (lambda * lambda),
    }
}

pub fn dispersion(coupling: f64, field: f64, k: f64) -> Result<DispersionPoint> {
    check_couplings(coupling, field)?;
    if !(k > 0.0 && k < PI) {
        return Err(Error::Domain(format!("momentum k = {k} must lie in (0, π)")));
    }
    Ok(mode(coupling, field, k))
}

/// `sech x`, zero once `cosh` overflows.
#[inline]
pub(crate) fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `(cosh x - 1)/cosh x` without cancellation for small `x`.
#[inline]
pub(crate) fn thermal_rotation_factor(x: f64) -> f64 {
    if x.abs() > 20.0 {
        1.0 - sech(x)
    } else {
        let s = (0.5 * x).sinh();
        2.0 * s * s / x.cosh()
    }
}

/// Zero-temperature QFI `Σ_k h² sin²k / Λ_k⁴`.
pub fn qfi_zero_t_sum(sites: usize, coupling: f64, field: f64) -> Result<QfiValue> {
    let grid = MomentumGrid::new(sites)?;
    check_couplings(coupling, field)?;
    let q = pairwise_sum_by(grid.len(), &|i| {
        let m = mode(coupling, field, grid.momenta[i]);
        m.dtheta_dj * m.dtheta_dj
    });
    Ok(QfiValue::new(0.0, q))
}

/// Finite-temperature QFI from the mode sum
///
/// ```text
/// G = β²/4 Σ_k (∂Λ_k)² sech²(βΛ_k/2) + Σ_k (cosh βΛ_k - 1)/cosh βΛ_k (∂ϑ_k)²
/// ```
///
/// `β = ∞` reduces to [`qfi_zero_t_sum`].
pub fn qfi_finite_t_sum(sites: usize, coupling: f64, field: f64, beta: f64) -> Result<QfiValue> {
    crate::spin::check_beta(beta)?;
    if beta == f64::INFINITY {
        return qfi_zero_t_sum(sites, coupling, field);
    }
    let grid = MomentumGrid::new(sites)?;
    check_couplings(coupling, field)?;
    let classical = pairwise_sum_by(grid.len(), &|i| {
        let m = mode(coupling, field, grid.momenta[i]);
        let s = sech(0.5 * beta * m.lambda);
        m.dlambda_dj * m.dlambda_dj * s * s
    }) * beta
        * beta
        * 0.25;
    let quantum = pairwise_sum_by(grid.len(), &|i| {
        let m = mode(coupling, field, grid.momenta[i]);
        thermal_rotation_factor(beta * m.lambda) * m.dtheta_dj * m.dtheta_dj
    });
    Ok(QfiValue::new(classical, quantum))
}

/// Quasi-critical expansion of `G_J` at `h = J + z/L`:
/// `L²(1/(8J²) - z²/(48J⁴)) - L/(8J²)`.
pub fn euler_maclaurin_expansion(sites: usize, coupling: f64, z: f64) -> f64 {
    let l = sites as f64;
    let j2 = coupling * coupling;
    l * l * (1.0 / (8.0 * j2) - z * z / (48.0 * j2 * j2)) - l / (8.0 * j2)
}

/// Field maximizing the mode-sum QFI of an even chain.
pub fn pseudo_critical_field(sites: usize, coupling: f64, beta: f64) -> Result<FieldOptimum> {
    check_even(sites)?;
    check_couplings(coupling, 0.0)?;
    optimize::maximize(
        |h| Ok(qfi_finite_t_sum(sites, coupling, h, beta)?.value),
        ScanOptions::for_coupling(coupling),
        Refinement::Golden,
    )
}

/// Power-law fit `G ≈ c L^α` over a set of chain lengths.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalingFit {
    pub sizes: Vec<usize>,
    pub qfi_values: Vec<f64>,
    pub exponent: f64,
    pub coefficient: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares slope and intercept of `ln G` against `ln L`.
pub fn fit_power_law(sizes: &[usize], values: &[f64]) -> Result<ScalingFit> {
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 sizes, got {}", sizes.len())));
    }
    if sizes.len() != values.len() {
        return Err(Error::Fit("sizes and values differ in length".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit("sizes must be strictly increasing".into()));
    }
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Fit("every QFI value must be positive and finite".into()));
    }
    let xs: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ScalingFit {
        sizes: sizes.to_vec(),
        qfi_values: values.to_vec(),
        exponent: slope,
        coefficient: intercept.exp(),
        residual: (rss / n).sqrt(),
    })
}

pub fn scaling_study(sizes: &[usize], coupling: f64, field: f64, beta: f64) -> Result<ScalingFit> {
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 sizes, got {}", sizes.len())));
    }
    let values = sizes
        .iter()
        .map(|&l| qfi_finite_t_sum(l, coupling, field, beta).map(|g| g.value))
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(sizes, &values)
}
