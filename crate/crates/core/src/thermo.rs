//! QFI per site in the thermodynamic limit, `G̃ = lim G/L`.
//!
//! The momentum sums become integrals over `k ∈ (0, π)`:
//!
//! ```text
//! g1 = β²/(8π) ∫ (J + h cos k)²/Λ_k² · sech²(βΛ_k/2) dk
//! g2 = 1/(2π)  ∫ (1 - sech βΛ_k) · h² sin²k/Λ_k⁴ dk
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{sech, thermal_rotation_factor};
use crate::quadrature::{integrate, MAX_SUBDIVISIONS};

pub const CATALAN: f64 = 0.915_965_594_177_219;
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Absolute accuracy of each density component.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `T ≪ |J - h|`
    RenormalizedClassical,
    /// `T ≫ |J - h|`
    QuantumCritical,
}

impl Regime {
    /// Crossover at `β|J - h| = 1`.
    pub fn classify(coupling: f64, field: f64, beta: f64) -> Regime {
        if beta * (coupling - field).abs() < 1.0 {
            Regime::QuantumCritical
        } else {
            Regime::RenormalizedClassical
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::RenormalizedClassical => "renormalized-classical",
            Regime::QuantumCritical => "quantum-critical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiDensity {
    pub g1: f64,
    pub g2: f64,
    pub total: f64,
    pub regime: Regime,
}

impl QfiDensity {
    fn new(g1: f64, g2: f64, regime: Regime) -> Self {
        QfiDensity {
            g1,
            g2,
            total: g1 + g2,
            regime,
        }
    }
}

fn check_inputs(coupling: f64, field: f64, beta: f64) -> Result<()> {
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
    crate::spin::check_beta(beta)
}

/// Panel edges: where `ε_k` vanishes and a ladder of thermal widths below
/// `k = π`, where the gap `|J - h|` opens.
fn breakpoints(coupling: f64, field: f64, beta: f64) -> Vec<f64> {
    let mut pts = vec![PI - (field / coupling).min(1.0).acos()];
    if beta.is_finite() {
        for c in [1.0, 3.0, 10.0, 30.0] {
            pts.push(PI - c / (beta * coupling));
        }
    }
    pts.retain(|&k| k > 0.0 && k < PI);
    pts
}

/// Densities by adaptive quadrature.
///
/// At `β = ∞` the classical part vanishes and the quantum part is finite
/// only off the critical field.
pub fn gtilde_quadrature(coupling: f64, field: f64, beta: f64) -> Result<QfiDensity> {
    check_inputs(coupling, field, beta)?;
    let (j, h) = (coupling, field);
    let regime = Regime::classify(j, h, beta);
    let lam = |k: f64| (j * k.cos() + h).hypot(j * k.sin());
    let pts = breakpoints(j, h, beta);

    if beta == f64::INFINITY {
        if h == j {
            return Err(Error::Domain("the zero-temperature density diverges at h = J".into()));
        }
        let q = integrate(
            |k| {
                let l = lam(k);
                let s = h * k.sin() / (l * l);
                s * s
            },
            0.0,
            PI,
            &pts,
            DENSITY_TOL * 2.0 * PI,
            MAX_SUBDIVISIONS,
        )?;
        return Ok(QfiDensity::new(0.0, q.value / (2.0 * PI), regime));
    }

    let g1 = if beta == 0.0 {
        0.0
    } else {
        let pref = beta * beta / (8.0 * PI);
        let r = integrate(
            |k| {
                let l = lam(k);
                let d = (j + h * k.cos()) / l;
                let s = sech(0.5 * beta * l);
                d * d * s * s
            },
            0.0,
            PI,
            &pts,
            DENSITY_TOL / pref,
            MAX_SUBDIVISIONS,
        )?;
        pref * r.value
    };
    let g2 = if h == 0.0 || beta == 0.0 {
        0.0
    } else {
        let r = integrate(
            |k| {
                let l = lam(k);
                let s = h * k.sin() / (l * l);
                thermal_rotation_factor(beta * l) * s * s
            },
            0.0,
            PI,
            &pts,
            DENSITY_TOL * 2.0 * PI,
            MAX_SUBDIVISIONS,
        )?;
        r.value / (2.0 * PI)
    };
    Ok(QfiDensity::new(g1.max(0.0), g2.max(0.0), regime))
}

/// Closed-form quantum-critical densities
///
/// ```text
/// g1 = 9ζ(3)/(8π) · T/(J²(J + h))
/// g2 = C/π² · (J + h)/(T J²) - 1/(8J²)
/// ```
///
/// valid for `β|J - h| < 0.2` and `β(J + h) > 10`.
pub fn gtilde_asymptotic(coupling: f64, field: f64, beta: f64) -> Result<QfiDensity> {
    check_inputs(coupling, field, beta)?;
    if !beta.is_finite() || beta == 0.0 {
        return Err(Error::Regime(format!("β = {beta} has no quantum-critical window")));
    }
    let (j, h) = (coupling, field);
    let detuning = beta * (j - h).abs();
    if detuning >= 0.2 {
        return Err(Error::Regime(format!("β|J - h| < 0.2 violated: β|J - h| = {detuning}")));
    }
    let scale = beta * (j + h);
    if scale <= 10.0 {
        return Err(Error::Regime(format!("β(J + h) > 10 violated: β(J + h) = {scale}")));
    }
    let t = 1.0 / beta;
    let g1 = 9.0 * ZETA3 / (8.0 * PI) * t / (j * j * (j + h));
    let g2 = CATALAN / (PI * PI) * (j + h) / (t * j * j) - 1.0 / (8.0 * j * j);
    Ok(QfiDensity::new(g1, g2, Regime::classify(j, h, beta)))
}

/// `(2C/π²)/(T J)`, the per-site peak value at low temperature.
pub fn peak_density_estimate(coupling: f64, beta: f64) -> f64 {
    2.0 * CATALAN / (PI * PI) * beta / coupling
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspScan {
    pub peak_field: f64,
    pub peak_value: f64,
    /// One-sided difference quotient just below the peak.
    pub left_slope: f64,
    /// One-sided difference quotient just above the peak.
    pub right_slope: f64,
    pub slope_jump: f64,
    pub resolution: f64,
    /// The whole scan sits below `1e-4`, so the location is not meaningful.
    pub low_signal: bool,
}

pub const LOW_SIGNAL: f64 = 1e-4;

/// Locates the maximum of the density over `range` on a grid of spacing
/// `resolution` and measures the slopes on either side.
pub fn cusp_scan(coupling: f64, beta: f64, range: (f64, f64), resolution: f64) -> Result<CuspScan> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::Domain(format!("field range [{lo}, {hi}] is invalid")));
    }
    if !(resolution > 0.0 && resolution < hi - lo) {
        return Err(Error::Domain(format!(
            "resolution {resolution} does not fit in [{lo}, {hi}]"
        )));
    }
    let total = |h: f64| gtilde_quadrature(coupling, h, beta).map(|d| d.total);
    let argmax = |xs: &[f64]| -> Result<(usize, f64)> {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &x) in xs.iter().enumerate() {
            let v = total(x)?;
            if v > best.1 {
                best = (i, v);
            }
        }
        Ok(best)
    };

    let n = ((hi - lo) / resolution).round() as usize;
    let fine_at = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let coarse_n = n.min(200);
    let coarse: Vec<usize> = (0..=coarse_n).map(|c| c * n / coarse_n).collect();
    let coarse_x: Vec<f64> = coarse.iter().map(|&i| fine_at(i)).collect();
    let (c, _) = argmax(&coarse_x)?;
    let from = coarse[c.saturating_sub(1)];
    let to = coarse[(c + 1).min(coarse_n)];
    let window: Vec<f64> = (from..=to).map(fine_at).collect();
    let (w, peak_value) = argmax(&window)?;
    let peak = from + w;
    let peak_field = fine_at(peak);

    let step = (hi - lo) / n as f64;
    let left_slope = if peak > 0 {
        (peak_value - total(fine_at(peak - 1))?) / step
    } else {
        f64::NAN
    };
    let right_slope = if peak < n {
        (total(fine_at(peak + 1))? - peak_value) / step
    } else {
        f64::NAN
    };
    let scan_max = coarse_x
        .iter()
        .map(|&x| total(x))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(peak_value, f64::max);
    Ok(CuspScan {
        peak_field,
        peak_value,
        left_slope,
        right_slope,
        slope_jump: right_slope - left_slope,
        resolution: step,
        low_signal: scan_max < LOW_SIGNAL,
    })
}
