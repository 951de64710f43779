//! Symmetric logarithmic derivative, quantum Fisher information and the
//! Bures-distance oracle for the coupling `J`.
//!
//! All quantities are built from `∂_J ρ` written in the eigenbasis of `ρ`.
//! Because `H` is linear in `J`, that derivative is exact:
//!
//! ```text
//! (∂ρ)_nm = ⟨n|∂H|m⟩ · (p_m - p_n) / (E_m - E_n)        n ≠ m
//! (∂ρ)_nn = -β p_n (⟨n|∂H|n⟩ - ⟨∂H⟩)
//! ```
//!
//! The off-diagonal factor is the divided difference of the Gibbs weight,
//! evaluated with `expm1` so near-degenerate pairs keep full precision and
//! exactly degenerate pairs pick up `-β p_n`. That makes every result
//! independent of how a degenerate eigenspace happens to be resolved.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::spin::{self, HermitianOperator, SpectralState, SpinChainParams, GROUND_DEGENERACY_TOL};

/// Pairs with `p_n + p_m` below this carry no statistical weight and are dropped.
pub const SUPPORT_TOL: f64 = 1e-14;

/// Relative spectral width below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Default relative step of the Bures finite-difference oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Symmetric logarithmic derivative `Λ` solving `∂ρ = (Λρ + ρΛ)/2`.
#[derive(Debug, Clone)]
pub struct SldOperator {
    pub matrix: HermitianOperator,
    pub truncation_tol: f64,
}

/// QFI split into its thermal-population and basis-rotation parts.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QfiValue {
    pub value: f64,
    pub classical_part: f64,
    pub quantum_part: f64,
}

impl QfiValue {
    pub fn new(classical_part: f64, quantum_part: f64) -> Self {
        QfiValue {
            value: classical_part + quantum_part,
            classical_part,
            quantum_part,
        }
    }

    pub fn zero() -> Self {
        QfiValue::new(0.0, 0.0)
    }
}

/// Quantum signal-to-noise ratio `J² G_J`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Qsnr(pub f64);

fn degeneracy_width(state: &SpectralState) -> f64 {
    DEGENERACY_TOL * state.spectral_range()
}

fn check_dims(state: &SpectralState, dh: &HermitianOperator) -> Result<()> {
    if state.dim() != dh.dim() {
        return Err(Error::Domain(format!(
            "state has dimension {} but ∂H has dimension {}",
            state.dim(),
            dh.dim()
        )));
    }
    Ok(())
}

/// `∂_J ρ` in the eigenbasis of `ρ`, given `⟨n|∂H|m⟩`.
fn drho_from_elements(state: &SpectralState, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = state.dim();
    let p = &state.weights;
    let e = &state.energies;
    let beta = state.beta;
    let deg = degeneracy_width(state);
    let mut d = DMatrix::zeros(n, n);

    if state.is_zero_temperature() {
        // populations are frozen; only the ground space rotates out of itself
        let g = state.ground_degeneracy;
        for a in 0..g {
            for b in g..n {
                let v = -p[a] * w[(a, b)] / (e[b] - e[a]);
                d[(a, b)] = v;
                d[(b, a)] = v;
            }
        }
        return Ok(d);
    }

    let mean: f64 = (0..n).map(|k| p[k] * w[(k, k)]).sum();
    for a in 0..n {
        d[(a, a)] = -beta * p[a] * (w[(a, a)] - mean);
        for b in (a + 1)..n {
            // energies are sorted, so a is the lower level
            let gap = e[b] - e[a];
            if gap <= deg {
                let allowed = p[a].max(p[b]) * (-(-beta * gap).exp_m1()) + 1e-12 * p[a].max(p[b]);
                if (p[a] - p[b]).abs() > allowed {
                    return Err(Error::NumericalDegeneracy {
                        n: a,
                        m: b,
                        p_n: p[a],
                        p_m: p[b],
                    });
                }
            }
            let divided = if gap > 0.0 {
                p[a] * (-beta * gap).exp_m1() / gap
            } else {
                -beta * p[a]
            };
            let v = w[(a, b)] * divided;
            d[(a, b)] = v;
            d[(b, a)] = v;
        }
    }
    Ok(d)
}

/// `∂_J ρ` in the eigenbasis of `ρ`.
pub fn drho_eigenbasis(state: &SpectralState, dh: &HermitianOperator) -> Result<DMatrix<f64>> {
    check_dims(state, dh)?;
    drho_from_elements(state, &state.to_eigenbasis(dh))
}

/// `∂_J ρ` in the computational basis.
pub fn drho(state: &SpectralState, dh: &HermitianOperator) -> Result<HermitianOperator> {
    let d = drho_eigenbasis(state, dh)?;
    Ok(HermitianOperator::from_matrix_unchecked(state.from_eigenbasis(&d)))
}

/// SLD from spectral data, returned in the computational basis.
pub fn sld_spectral(state: &SpectralState, dh: &HermitianOperator) -> Result<SldOperator> {
    let d = drho_eigenbasis(state, dh)?;
    let n = state.dim();
    let p = &state.weights;
    let lambda = DMatrix::from_fn(n, n, |a, b| {
        let s = p[a] + p[b];
        if s < SUPPORT_TOL {
            0.0
        } else {
            2.0 * d[(a, b)] / s
        }
    });
    Ok(SldOperator {
        matrix: HermitianOperator::from_matrix_unchecked(state.from_eigenbasis(&lambda)),
        truncation_tol: SUPPORT_TOL,
    })
}

/// QFI `G_J = Σ_nm 2 |(∂ρ)_nm|² / (p_n + p_m)`.
///
/// Pairs inside one (numerically) degenerate eigenspace, the diagonal
/// included, form the classical part; all other pairs form the quantum part.
pub fn qfi_spectral(state: &SpectralState, dh: &HermitianOperator) -> Result<QfiValue> {
    let d = drho_eigenbasis(state, dh)?;
    let n = state.dim();
    let p = &state.weights;
    let e = &state.energies;
    let deg = degeneracy_width(state);
    let mut classical = 0.0;
    let mut quantum = 0.0;
    for a in 0..n {
        for b in 0..n {
            let s = p[a] + p[b];
            if s < SUPPORT_TOL {
                continue;
            }
            let term = 2.0 * d[(a, b)] * d[(a, b)] / s;
            if (e[a] - e[b]).abs() <= deg {
                classical += term;
            } else {
                quantum += term;
            }
        }
    }
    Ok(QfiValue::new(classical, quantum))
}

/// Ground-state QFI `4 Σ_{n>0} |⟨ψ_n|∂H|ψ_0⟩|² / (E_n - E_0)²`.
pub fn qfi_pure_state(state: &SpectralState, dh: &HermitianOperator) -> Result<QfiValue> {
    check_dims(state, dh)?;
    let e = &state.energies;
    if e.len() < 2 {
        return Ok(QfiValue::zero());
    }
    let splitting = e[1] - e[0];
    if splitting <= GROUND_DEGENERACY_TOL * state.spectral_range() {
        return Err(Error::Degeneracy { splitting });
    }
    let ground = state.vectors.column(0);
    let image: DVector<f64> = dh.matrix() * ground;
    let elements = state.vectors.transpose() * image;
    let terms: Vec<f64> = (1..e.len())
        .map(|n| {
            let gap = e[n] - e[0];
            4.0 * elements[n] * elements[n] / (gap * gap)
        })
        .collect();
    Ok(QfiValue::new(0.0, crate::summation::pairwise_sum(&terms)))
}

/// QFI of the Gibbs state described by `params`, by exact diagonalization.
pub fn qfi_exact(params: &SpinChainParams) -> Result<QfiValue> {
    let (state, dh) = spin::thermal_model(params)?;
    qfi_spectral(&state, &dh)
}

pub fn qsnr(coupling: f64, g: &QfiValue) -> Qsnr {
    Qsnr(coupling * coupling * g.value)
}

/// SLD of a qubit in the state `e^{-a·σ}/Z`, as `c₀ 1 + c·σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSld {
    pub identity: f64,
    pub pauli: [f64; 3],
}

impl QubitSld {
    pub fn to_matrix(&self) -> Matrix2<Complex<f64>> {
        let [x, y, z] = self.pauli;
        let c = |re: f64, im: f64| Complex::new(re, im);
        Matrix2::new(c(self.identity + z, 0.0), c(x, -y), c(x, y), c(self.identity - z, 0.0))
    }

    /// Real form, available when the σʸ component vanishes.
    pub fn to_real_matrix(&self) -> Option<DMatrix<f64>> {
        let [x, y, z] = self.pauli;
        (y == 0.0).then(|| DMatrix::from_row_slice(2, 2, &[self.identity + z, x, x, self.identity - z]))
    }
}

/// SLD for `ρ = e^{-a·σ}/Z` when `a` moves with velocity `da`:
///
/// ```text
/// Λ = -tanh(a) (∂â·σ) - ∂a (â·σ) - tanh(a) ∂a 1
/// ```
///
/// with `a = |a|`, `∂a = â·da` and `∂â = (da - â ∂a)/a`.
pub fn single_qubit_sld(a: [f64; 3], da: [f64; 3]) -> Result<QubitSld> {
    let modulus = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if modulus < 1e-14 {
        return Err(Error::SingularDirection(modulus));
    }
    let unit = a.map(|x| x / modulus);
    let d_modulus: f64 = (0..3).map(|i| unit[i] * da[i]).sum();
    let t = modulus.tanh();
    let mut pauli = [0.0; 3];
    for i in 0..3 {
        let d_unit = (da[i] - unit[i] * d_modulus) / modulus;
        pauli[i] = -t * d_unit - d_modulus * unit[i];
    }
    Ok(QubitSld {
        identity: -t * d_modulus,
        pauli,
    })
}

/// Zero-temperature two-site SLD
/// `h/(2(J²+h²)^{3/2}) [h(σˣσˣ - σʸσʸ) - J(σᶻ⊗1 + 1⊗σᶻ)]`.
pub fn two_site_ground_sld(coupling: f64, field: f64) -> HermitianOperator {
    let pref = field / (2.0 * (coupling * coupling + field * field).powf(1.5));
    let xx_minus_yy = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, 2.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            2.0, 0.0, 0.0, 0.0,
        ],
    );
    let z_total = DMatrix::from_diagonal(&DVector::from_row_slice(&[2.0, 0.0, 0.0, -2.0]));
    HermitianOperator::from_matrix_unchecked((xx_minus_yy * field - z_total * coupling) * pref)
}

/// Weights below this fraction of the largest are treated as outside the support.
const BURES_SUPPORT_TOL: f64 = 1e-30;

fn support(state: &SpectralState) -> Vec<usize> {
    let top = state.weights.iter().copied().fold(0.0, f64::max);
    (0..state.dim())
        .filter(|&n| state.weights[n] > BURES_SUPPORT_TOL * top)
        .collect()
}

/// `√ρ√σ` in the eigenbases of the two states, rows on the support `S` of
/// `ρ` and columns on the support `T` of `σ`, together with the overlaps
/// `⟨a|b⟩ √q_b` for every `a` and `b ∈ T`.
fn root_product(rho: &SpectralState, sigma: &SpectralState) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<usize>)> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Domain("states have different dimensions".into()));
    }
    let (s, t) = (support(rho), support(sigma));
    let overlap = rho.vectors.transpose() * &sigma.vectors;
    let scaled = DMatrix::from_fn(rho.dim(), t.len(), |a, j| {
        overlap[(a, t[j])] * sigma.weights[t[j]].sqrt()
    });
    let product = DMatrix::from_fn(s.len(), t.len(), |i, j| rho.weights[s[i]].sqrt() * scaled[(s[i], j)]);
    Ok((product, scaled, s))
}

/// Thin SVD `M = X S Yᵀ` as `(X, s, Y)`.
///
/// The products handled here are strongly graded (rows and columns scaled by
/// square roots of weights spanning many decades), where nalgebra's SVD can
/// return factors with reconstruction errors far above rounding.
fn graded_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = fm.thin_svd().map_err(|_| Error::Accuracy {
        achieved: f64::NAN,
        requested: f64::EPSILON,
    })?;
    let (u, v) = (svd.U(), svd.V());
    let x = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
    let y = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]);
    let values = (0..x.ncols()).map(|i| svd.S()[i]).collect();
    Ok((x, values, y))
}

/// Squared Bures distance `2(1 - √F)` between two spectral states.
///
/// Evaluated as `‖√ρ - √σ U‖²_F` with `U` the polar factor of `√ρ√σ`; the
/// objective is stationary in `U`, so the small distance between nearby states
/// is resolved to roughly full relative precision. Levels with weight below
/// `1e-30` of the largest are dropped.
pub fn bures_distance_squared(rho: &SpectralState, sigma: &SpectralState) -> Result<f64> {
    // The restricted polar factor is a co-isometry only when the first
    // support is the larger one; the distance is symmetric, so swap.
    if support(rho).len() < support(sigma).len() {
        return bures_distance_squared(sigma, rho);
    }
    let (product, scaled, s) = root_product(rho, sigma)?;
    let (x, _, y) = graded_svd(&product)?;
    let polar = y * x.transpose();
    let mut diff = -(scaled * polar);
    for (i, &a) in s.iter().enumerate() {
        diff[(a, i)] += rho.weights[a].sqrt();
    }
    Ok(diff.norm_squared())
}

/// Uhlmann fidelity `F = (Tr|√ρ√σ|)²`.
pub fn uhlmann_fidelity(rho: &SpectralState, sigma: &SpectralState) -> Result<f64> {
    let (product, _, _) = root_product(rho, sigma)?;
    let root: f64 = graded_svd(&product)?.1.iter().sum();
    Ok(root * root)
}

/// Finite-difference estimate `8(1 - √F)/dJ²` of `G_J` from the Bures
/// distance between `ρ(J)` and `ρ(J + dJ)`.
pub fn bures_distance_fd_oracle(params: &SpinChainParams, step: f64) -> Result<f64> {
    params.validate()?;
    let limit = 1e-9 * params.coupling;
    if !(step.abs() >= limit) {
        return Err(Error::StepSize { step, limit });
    }
    let (here, _) = spin::thermal_model(params)?;
    let (there, _) = spin::thermal_model(&params.with_coupling(params.coupling + step))?;
    let d2 = bures_distance_squared(&here, &there)?;
    Ok(4.0 * d2 / (step * step))
}

/// Invariant diagnostics of an SLD: `(Tr ρΛ, Tr ρΛ², ‖∂ρ - ½{Λ,ρ}‖_max)`.
pub fn sld_diagnostics(state: &SpectralState, dh: &HermitianOperator, sld: &SldOperator) -> Result<(f64, f64, f64)> {
    let rho = state.density_matrix();
    let lam = sld.matrix.matrix();
    let tr1 = rho.matrix().dot(lam);
    let lam_sq = lam * lam;
    let tr2 = rho.matrix().dot(&lam_sq);
    let d = drho(state, dh)?;
    let anti = (lam * rho.matrix() + rho.matrix() * lam) * 0.5;
    let residual = (d.matrix() - anti).amax();
    Ok((tr1, tr2, residual))
}
