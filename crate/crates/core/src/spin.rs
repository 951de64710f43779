//! Exact diagonalization of the periodic transverse-field Ising chain.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = -J Σ_k σˣ_k σˣ_{k+1} - h Σ_k σᶻ_k,    σˣ_{L+1} = σˣ_1
//! ```
//!
//! written as a dense matrix in the computational (σᶻ) basis. Basis state
//! `x` encodes the spins in binary with site 1 as the most significant bit;
//! a clear bit is σᶻ = +1. Every operator of this model is real in that
//! basis, so [`HermitianOperator`] stores a real symmetric matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default cap on the chain length for dense matrices (2^12 = 4096 states).
pub const DEFAULT_MAX_SITES: usize = 12;

/// Hermiticity tolerance, scaled by the largest matrix entry when that exceeds one.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Relative width (in units of the spectral range) inside which levels are
/// merged into one degenerate ground space at zero temperature.
pub const GROUND_DEGENERACY_TOL: f64 = 1e-9;

/// Coordinates `(L, J, h, β)` of one Gibbs state of the chain.
///
/// `beta = f64::INFINITY` is the zero-temperature (ground-state) model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChainParams {
    pub sites: usize,
    pub coupling: f64,
    pub field: f64,
    pub beta: f64,
}

impl SpinChainParams {
    pub fn new(sites: usize, coupling: f64, field: f64, beta: f64) -> Result<Self> {
        let p = SpinChainParams {
            sites,
            coupling,
            field,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zero_temperature(sites: usize, coupling: f64, field: f64) -> Result<Self> {
        Self::new(sites, coupling, field, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::Domain(format!(
                "L = {} but at least 2 sites are required",
                self.sites
            )));
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(Error::Domain(format!(
                "coupling J = {} must be finite and positive",
                self.coupling
            )));
        }
        if !(self.field.is_finite() && self.field >= 0.0) {
            return Err(Error::Domain(format!(
                "field h = {} must be finite and non-negative",
                self.field
            )));
        }
        check_beta(self.beta)
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta == f64::INFINITY
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        SpinChainParams { coupling, ..self }
    }

    pub fn with_field(self, field: f64) -> Self {
        SpinChainParams { field, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        SpinChainParams { beta, ..self }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && !beta.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "inverse temperature β = {beta} must be positive (or infinite)"
        )))
    }
}

pub fn check_capacity(sites: usize, cap: usize) -> Result<()> {
    if sites > cap || sites >= usize::BITS as usize {
        Err(Error::Capacity { sites, cap })
    } else {
        Ok(())
    }
}

/// Dense real symmetric matrix standing in for a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: DMatrix<f64>,
}

impl HermitianOperator {
    /// Wraps `matrix` after checking it is square and symmetric.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Domain(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let op = HermitianOperator { matrix };
        let scale = op.max_abs().max(1.0);
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL * scale {
            return Err(Error::Domain(format!("operator is not Hermitian (defect {defect:e})")));
        }
        Ok(op)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        HermitianOperator { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator::from_matrix_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Max-norm of `A - Aᵀ`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `Tr[A B]` for two symmetric operators, without forming the product.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        self.matrix.dot(&other.matrix)
    }

    pub fn scaled(&self, factor: f64) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.matrix * factor)
    }
}

impl std::ops::Sub for &HermitianOperator {
    type Output = HermitianOperator;

    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.matrix - &rhs.matrix)
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::from_matrix_unchecked(&self.matrix + &rhs.matrix)
    }
}

/// Bit mask of site `k` (0-based) in a chain of `sites` spins; site 0 is the MSB.
#[inline]
pub fn site_mask(sites: usize, k: usize) -> usize {
    1usize << (sites - 1 - k)
}

/// Matrix of `-J Σ σˣσˣ - h Σ σᶻ` for any real `J`, `h`, without domain checks.
pub fn ising_matrix(sites: usize, coupling: f64, field: f64) -> DMatrix<f64> {
    let dim = 1usize << sites;
    let mut m = DMatrix::zeros(dim, dim);
    let bonds: Vec<usize> = (0..sites)
        .map(|k| site_mask(sites, k) | site_mask(sites, (k + 1) % sites))
        .collect();
    for x in 0..dim {
        let down = x.count_ones() as f64;
        let mz = sites as f64 - 2.0 * down;
        m[(x, x)] = -field * mz;
        for &bond in &bonds {
            m[(x ^ bond, x)] -= coupling;
        }
    }
    m
}

/// Builds `H(L, J, h)` with the default dense cap.
pub fn build_hamiltonian(params: &SpinChainParams) -> Result<HermitianOperator> {
    build_hamiltonian_capped(params, DEFAULT_MAX_SITES)
}

pub fn build_hamiltonian_capped(params: &SpinChainParams, max_sites: usize) -> Result<HermitianOperator> {
    params.validate()?;
    check_capacity(params.sites, max_sites)?;
    Ok(HermitianOperator::from_matrix_unchecked(ising_matrix(
        params.sites,
        params.coupling,
        params.field,
    )))
}

/// `∂H/∂J = -Σ_k σˣ_k σˣ_{k+1}`; independent of `J`, `h` and `β`.
pub fn d_hamiltonian_dj(params: &SpinChainParams) -> Result<HermitianOperator> {
    d_hamiltonian_dj_capped(params, DEFAULT_MAX_SITES)
}

pub fn d_hamiltonian_dj_capped(params: &SpinChainParams, max_sites: usize) -> Result<HermitianOperator> {
    params.validate()?;
    check_capacity(params.sites, max_sites)?;
    Ok(HermitianOperator::from_matrix_unchecked(ising_matrix(
        params.sites,
        1.0,
        0.0,
    )))
}

/// Eigen-decomposition of a Hermitian operator together with its Gibbs weights.
#[derive(Debug, Clone)]
pub struct SpectralState {
    /// Eigenvalues in ascending order.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors, one column per energy.
    pub vectors: DMatrix<f64>,
    /// Gibbs weights `p_n`, summing to one.
    pub weights: Vec<f64>,
    /// `ln Z`; `None` at zero temperature.
    pub log_partition: Option<f64>,
    pub beta: f64,
    /// Number of levels sharing the ground-state weight at zero temperature
    /// (always 1 at finite temperature).
    pub ground_degeneracy: usize,
}

impl SpectralState {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta == f64::INFINITY
    }

    pub fn spectral_range(&self) -> f64 {
        self.energies.last().unwrap_or(&0.0) - self.energies.first().unwrap_or(&0.0)
    }

    /// `Z = Σ e^{-βE_n}`; may overflow to infinity for large `β`.
    pub fn partition(&self) -> Option<f64> {
        self.log_partition.map(f64::exp)
    }

    pub fn vector(&self, n: usize) -> DVector<f64> {
        self.vectors.column(n).into_owned()
    }

    /// `ρ = Σ p_n |ψ_n⟩⟨ψ_n|`.
    pub fn density_matrix(&self) -> HermitianOperator {
        self.function_of_weights(|p| p)
    }

    /// `Σ f(p_n) |ψ_n⟩⟨ψ_n|`, e.g. `√ρ` for `f = sqrt`.
    pub fn function_of_weights(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mut scaled = self.vectors.clone();
        for (n, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.weights[n]);
        }
        HermitianOperator::from_matrix_unchecked(&scaled * self.vectors.transpose())
    }

    /// Matrix elements `⟨ψ_n|A|ψ_m⟩` of `op` in the eigenbasis.
    pub fn to_eigenbasis(&self, op: &HermitianOperator) -> DMatrix<f64> {
        self.vectors.transpose() * op.matrix() * &self.vectors
    }

    /// Maps a matrix given in the eigenbasis back to the computational basis.
    pub fn from_eigenbasis(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.vectors * m * self.vectors.transpose()
    }

    /// Max-norm of `VᵀV - 1`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Splits the index set into connected components of the sparsity graph of
/// `m`, so each block can be diagonalized independently.
fn coupled_blocks(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for seed in 0..n {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut members = vec![seed];
        label[seed] = id;
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for j in 0..n {
                if label[j] == usize::MAX && (m[(i, j)] != 0.0 || m[(j, i)] != 0.0) {
                    label[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

/// Full eigendecomposition, eigenvalues ascending.
pub fn eigendecompose(op: &HermitianOperator) -> (Vec<f64>, DMatrix<f64>) {
    let m = op.matrix();
    let n = op.dim();
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(n);
    for block in coupled_blocks(m) {
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |i, j| m[(block[i], block[j])]);
        let eig = SymmetricEigen::new(sub);
        for (c, &e) in eig.eigenvalues.iter().enumerate() {
            let mut v = DVector::zeros(n);
            for (i, &row) in block.iter().enumerate() {
                v[row] = eig.eigenvectors[(i, c)];
            }
            pairs.push((e, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energies = pairs.iter().map(|p| p.0).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (c, (_, v)) in pairs.iter().enumerate() {
        vectors.set_column(c, v);
    }
    (energies, vectors)
}

/// Gibbs state `e^{-βH}/Z` in diagonal form.
///
/// Weights are evaluated as `e^{-β(E_n - E_0)} / Σ_m e^{-β(E_m - E_0)}`, which
/// cannot overflow. At `β = ∞` the weight is spread uniformly over every
/// level within `GROUND_DEGENERACY_TOL · (E_max - E_min)` of the ground energy.
pub fn gibbs_state(h: &HermitianOperator, beta: f64) -> Result<SpectralState> {
    check_beta(beta)?;
    let scale = h.max_abs().max(1.0);
    let defect = h.hermiticity_defect();
    if defect > HERMITICITY_TOL * scale {
        return Err(Error::Domain(format!(
            "Hamiltonian is not Hermitian (defect {defect:e})"
        )));
    }
    let (energies, vectors) = eigendecompose(h);
    let e0 = energies[0];
    let range = energies[energies.len() - 1] - e0;

    let (weights, log_partition, ground_degeneracy) = if beta == f64::INFINITY {
        let cutoff = GROUND_DEGENERACY_TOL * range;
        let g = energies.iter().take_while(|&&e| e - e0 <= cutoff).count();
        let w = (0..energies.len())
            .map(|n| if n < g { 1.0 / g as f64 } else { 0.0 })
            .collect();
        (w, None, g)
    } else {
        let boltzmann: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let sum = crate::summation::pairwise_sum(&boltzmann);
        let w = boltzmann.iter().map(|b| b / sum).collect();
        (w, Some(-beta * e0 + sum.ln()), 1)
    };

    Ok(SpectralState {
        energies,
        vectors,
        weights,
        log_partition,
        beta,
        ground_degeneracy,
    })
}

/// Convenience: Hamiltonian, `∂H/∂J` and the Gibbs state for `params`.
pub fn thermal_model(params: &SpinChainParams) -> Result<(SpectralState, HermitianOperator)> {
    let h = build_hamiltonian(params)?;
    let dh = d_hamiltonian_dj(params)?;
    Ok((gibbs_state(&h, params.beta)?, dh))
}
