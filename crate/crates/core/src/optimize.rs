//! One-dimensional maximization over the transverse field.
//!
//! A coarse uniform scan brackets the peak, then either golden-section search
//! (smooth peaks) or bisection on the sign of a forward difference (cusps)
//! narrows the bracket.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refinement {
    Golden,
    SlopeBisection,
}

impl Refinement {
    pub fn as_str(self) -> &'static str {
        match self {
            Refinement::Golden => "golden",
            Refinement::SlopeBisection => "slope-bisection",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub lo: f64,
    pub hi: f64,
    /// Grid points on `(lo, hi]`.
    pub points: usize,
    /// Final bracket width.
    pub tol: f64,
}

impl ScanOptions {
    /// 400 points on `(0, 3J]`, refined to a bracket of `1e-8`.
    pub fn for_coupling(coupling: f64) -> Self {
        ScanOptions {
            lo: 0.0,
            hi: 3.0 * coupling,
            points: 400,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOptimum {
    pub field: f64,
    pub value: f64,
    pub refinement: Refinement,
    /// The maximum sits on the lower end of the scan (the `h = 0` boundary
    /// for the default range) rather than at an interior peak.
    pub at_lower_edge: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn slope_bisection<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let delta = tol * 0.25;
    let rising = |x: f64| -> Result<bool> { Ok(f(x + delta)? > f(x)?) };
    while b - a > tol {
        let m = 0.5 * (a + b);
        if rising(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    let (fa, fb) = (f(a)?, f(b)?);
    Ok(if fa >= fb { (a, fa) } else { (b, fb) })
}

/// Maximizes `f` over `opts.lo ..= opts.hi`.
///
/// A maximum on the upper end of the scan is reported as
/// [`Error::ScanRange`]; one on the lower end is returned with
/// `at_lower_edge` set.
pub fn maximize<F>(f: F, opts: ScanOptions, refinement: Refinement) -> Result<FieldOptimum>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(opts.hi > opts.lo) || opts.points < 3 {
        return Err(Error::Domain(format!(
            "scan range [{}, {}] with {} points is empty",
            opts.lo, opts.hi, opts.points
        )));
    }
    let step = (opts.hi - opts.lo) / opts.points as f64;
    let grid: Vec<f64> = (1..=opts.points).map(|i| opts.lo + step * i as f64).collect();
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x)?;
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    if best == grid.len() - 1 {
        return Err(Error::ScanRange {
            lo: opts.lo,
            hi: opts.hi,
        });
    }
    let a = if best == 0 { opts.lo } else { grid[best - 1] };
    let b = grid[best + 1];
    let (x, v) = match refinement {
        Refinement::Golden => golden(&f, a, b, opts.tol)?,
        Refinement::SlopeBisection => slope_bisection(&f, a, b, opts.tol)?,
    };
    let (x, v) = if v >= best_value {
        (x, v)
    } else {
        (grid[best], best_value)
    };
    Ok(FieldOptimum {
        field: x,
        value: v,
        refinement,
        at_lower_edge: best == 0 && x - opts.lo <= opts.tol,
    })
}
