//! Total-magnetization measurements: outcome statistics, classical Fisher
//! information, simulated experiments and Bayesian inference of `J`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, DEFAULT_FD_STEP};
use crate::optimize::{self, FieldOptimum, Refinement, ScanOptions};
use crate::spin::{self, check_capacity, HermitianOperator, SpinChainParams, DEFAULT_MAX_SITES};

/// Probabilities below this are treated as impossible outcomes.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

/// Projective measurement of `M_z = (1/L) Σ σᶻ`.
///
/// Outcome `j` has value `(L - 2j)/L` and projects onto the basis states with
/// exactly `j` flipped spins.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationPovm {
    pub sites: usize,
    pub outcomes: Vec<f64>,
    /// Computational-basis indices spanned by each projector.
    pub support: Vec<Vec<usize>>,
}

impl MagnetizationPovm {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn rank(&self, m: usize) -> usize {
        self.support[m].len()
    }

    pub fn projector(&self, m: usize) -> HermitianOperator {
        let dim = 1usize << self.sites;
        let mut p = nalgebra::DMatrix::zeros(dim, dim);
        for &i in &self.support[m] {
            p[(i, i)] = 1.0;
        }
        HermitianOperator::from_matrix_unchecked(p)
    }

    pub fn projectors(&self) -> Vec<HermitianOperator> {
        (0..self.len()).map(|m| self.projector(m)).collect()
    }
}

pub fn build_povm(sites: usize) -> Result<MagnetizationPovm> {
    build_povm_capped(sites, DEFAULT_MAX_SITES)
}

pub fn build_povm_capped(sites: usize, max_sites: usize) -> Result<MagnetizationPovm> {
    if sites < 1 {
        return Err(Error::Domain("a chain needs at least one site".into()));
    }
    check_capacity(sites, max_sites)?;
    let mut support = vec![Vec::new(); sites + 1];
    for i in 0..1usize << sites {
        support[i.count_ones() as usize].push(i);
    }
    let l = sites as f64;
    let outcomes = (0..=sites).map(|j| (l - 2.0 * j as f64) / l).collect();
    Ok(MagnetizationPovm {
        sites,
        outcomes,
        support,
    })
}

/// `p(m|J)` for each outcome of a POVM, in outcome order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<f64>,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(outcomes: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if outcomes.len() != probs.len() || probs.is_empty() {
            return Err(Error::Domain("outcomes and probabilities differ in length".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain("probabilities must be finite and non-negative".into()));
        }
        Ok(OutcomeDistribution {
            outcomes,
            probs: normalize(probs),
        })
    }
}

fn normalize(mut probs: Vec<f64>) -> Vec<f64> {
    for p in probs.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-14 {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
    probs
}

fn check_povm(params: &SpinChainParams, povm: &MagnetizationPovm) -> Result<()> {
    if params.sites != povm.sites {
        return Err(Error::Domain(format!(
            "measurement built for L = {} applied to a chain of L = {}",
            povm.sites, params.sites
        )));
    }
    Ok(())
}

fn diagonal_sums(diag: impl Fn(usize) -> f64, povm: &MagnetizationPovm) -> Vec<f64> {
    povm.support.iter().map(|s| s.iter().map(|&i| diag(i)).sum()).collect()
}

/// `p(m|J) = Tr ρ P_m`.
pub fn outcome_distribution(params: &SpinChainParams, povm: &MagnetizationPovm) -> Result<OutcomeDistribution> {
    check_povm(params, povm)?;
    let (state, _) = spin::thermal_model(params)?;
    let v = &state.vectors;
    let rho_diag = |i: usize| -> f64 {
        state
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(n, &p)| p * v[(i, n)] * v[(i, n)])
            .sum()
    };
    Ok(OutcomeDistribution {
        outcomes: povm.outcomes.clone(),
        probs: normalize(diagonal_sums(rho_diag, povm)),
    })
}

/// How `∂_J p(m|J)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DerivativeMode {
    /// `Tr (∂_J ρ) P_m` from the exact state derivative.
    #[default]
    Analytic,
    /// Central difference of the probabilities with step `step · J`; for testing.
    FiniteDifference { step: f64 },
}

impl DerivativeMode {
    pub fn finite_difference() -> Self {
        DerivativeMode::FiniteDifference { step: DEFAULT_FD_STEP }
    }
}

/// Probabilities and their `J`-derivatives.
pub fn outcome_derivatives(
    params: &SpinChainParams,
    povm: &MagnetizationPovm,
    mode: DerivativeMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_povm(params, povm)?;
    match mode {
        DerivativeMode::Analytic => {
            let (state, dh) = spin::thermal_model(params)?;
            let rho = state.density_matrix();
            let d = estimation::drho(&state, &dh)?;
            let p = normalize(diagonal_sums(|i| rho.matrix()[(i, i)], povm));
            let dp = diagonal_sums(|i| d.matrix()[(i, i)], povm);
            Ok((p, dp))
        }
        DerivativeMode::FiniteDifference { step } => {
            let dj = step * params.coupling;
            if !(dj > 0.0 && dj < params.coupling) {
                return Err(Error::StepSize {
                    step: dj,
                    limit: params.coupling,
                });
            }
            let up = outcome_distribution(&params.with_coupling(params.coupling + dj), povm)?;
            let dn = outcome_distribution(&params.with_coupling(params.coupling - dj), povm)?;
            let p = outcome_distribution(params, povm)?.probs;
            let dp = up
                .probs
                .iter()
                .zip(&dn.probs)
                .map(|(a, b)| (a - b) / (2.0 * dj))
                .collect();
            Ok((p, dp))
        }
    }
}

/// `F_J = Σ_m (∂_J p_m)² / p_m`, skipping outcomes below [`PROBABILITY_FLOOR`].
pub fn classical_fisher(params: &SpinChainParams, povm: &MagnetizationPovm, mode: DerivativeMode) -> Result<f64> {
    let (p, dp) = outcome_derivatives(params, povm, mode)?;
    fisher_from(&p, &dp)
}

pub fn fisher_from(p: &[f64], dp: &[f64]) -> Result<f64> {
    if p.iter().all(|&x| x < PROBABILITY_FLOOR) {
        return Err(Error::DegenerateDistribution {
            floor: PROBABILITY_FLOOR,
        });
    }
    Ok(p.iter()
        .zip(dp)
        .filter(|(&x, _)| x >= PROBABILITY_FLOOR)
        .map(|(x, d)| d * d / x)
        .sum())
}

/// Outcome counts of `M` independent measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(rename = "true_J")]
    pub true_coupling: f64,
    pub measurements: u64,
    pub counts: Vec<u64>,
    pub seed: u64,
    pub stream: u64,
}

impl ExperimentRecord {
    /// Tallies a list of outcome indices.
    pub fn from_outcomes(true_coupling: f64, n_outcomes: usize, outcomes: &[usize]) -> Result<Self> {
        let mut counts = vec![0u64; n_outcomes];
        for &m in outcomes {
            *counts
                .get_mut(m)
                .ok_or_else(|| Error::Domain(format!("outcome index {m} out of range")))? += 1;
        }
        Ok(ExperimentRecord {
            true_coupling,
            measurements: outcomes.len() as u64,
            counts,
            seed: 0,
            stream: 0,
        })
    }
}

/// Draws `M` outcomes from `dist` with a ChaCha8 generator on (`seed`, `stream`).
pub fn sample_experiment(
    dist: &OutcomeDistribution,
    true_coupling: f64,
    measurements: u64,
    seed: u64,
    stream: u64,
) -> Result<ExperimentRecord> {
    if measurements < 1 {
        return Err(Error::Domain("at least one measurement is required".into()));
    }
    let index = WeightedIndex::new(&dist.probs).map_err(|e| Error::Domain(format!("bad distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; dist.probs.len()];
    for _ in 0..measurements {
        counts[index.sample(&mut rng)] += 1;
    }
    Ok(ExperimentRecord {
        true_coupling,
        measurements,
        counts,
        seed,
        stream,
    })
}

/// Uniform grid of candidate couplings under a flat prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 4001;

    /// `[J*/4, 4J*]` with 4001 points.
    pub fn around(true_coupling: f64) -> Self {
        GridSpec {
            lo: 0.25 * true_coupling,
            hi: 4.0 * true_coupling,
            points: Self::DEFAULT_POINTS,
        }
    }

    /// Twice as wide on a log scale at the same spacing.
    pub fn widened(&self) -> Self {
        let lo = 0.5 * self.lo;
        let hi = 2.0 * self.hi;
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        GridSpec {
            lo,
            hi,
            points: ((hi - lo) / step).ceil() as usize + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) || self.points < 5 {
            return Err(Error::Domain(format!(
                "posterior grid [{}, {}] with {} points is invalid",
                self.lo, self.hi, self.points
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect()
    }
}

/// `ln p(m|J)` on every grid node.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    pub grid: Vec<f64>,
    pub log_probs: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn build(spec: GridSpec, model: impl Fn(f64) -> Result<OutcomeDistribution>) -> Result<Self> {
        spec.validate()?;
        let grid = spec.nodes();
        let log_probs = grid
            .iter()
            .map(|&j| model(j).map(|d| d.probs.iter().map(|p| p.ln()).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(LikelihoodTable { grid, log_probs })
    }

    /// Table for the magnetization measurement at fixed `(L, h, β)`.
    pub fn magnetization(template: &SpinChainParams, povm: &MagnetizationPovm, spec: GridSpec) -> Result<Self> {
        LikelihoodTable::build(spec, |j| outcome_distribution(&template.with_coupling(j), povm))
    }

    fn weighted_log_density(&self, weights: &[f64]) -> Result<Vec<f64>> {
        self.log_probs
            .iter()
            .map(|lp| {
                if lp.len() != weights.len() {
                    return Err(Error::Domain("counts and outcomes differ in length".into()));
                }
                Ok(lp
                    .iter()
                    .zip(weights)
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(l, w)| w * l)
                    .sum())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

impl PosteriorGrid {
    fn from_log_density(grid: Vec<f64>, log_density: Vec<f64>) -> Result<Self> {
        let max = log_density.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Domain("the likelihood vanishes on the whole grid".into()));
        }
        let raw: Vec<f64> = log_density.iter().map(|l| (l - max).exp()).collect();
        let norm = trapezoid(&grid, &raw);
        let density: Vec<f64> = raw.iter().map(|d| d / norm).collect();

        let n = grid.len();
        let lower = trapezoid(&grid[..3], &density[..3]);
        let upper = trapezoid(&grid[n - 3..], &density[n - 3..]);
        if lower > 0.01 {
            return Err(Error::GridTooNarrow {
                side: "lower",
                mass: lower,
            });
        }
        if upper > 0.01 {
            return Err(Error::GridTooNarrow {
                side: "upper",
                mass: upper,
            });
        }

        let first: Vec<f64> = grid.iter().zip(&density).map(|(x, d)| x * d).collect();
        let mean = trapezoid(&grid, &first);
        let second: Vec<f64> = grid.iter().zip(&density).map(|(x, d)| (x - mean).powi(2) * d).collect();
        let variance = trapezoid(&grid, &second);
        Ok(PosteriorGrid {
            grid,
            density,
            mean,
            variance,
        })
    }

    /// Posterior quantile by linear interpolation of the trapezoid CDF.
    pub fn quantile(&self, q: f64) -> f64 {
        let target = q.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            let (x0, x1) = (self.grid[i - 1], self.grid[i]);
            let piece = 0.5 * (x1 - x0) * (self.density[i - 1] + self.density[i]);
            if acc + piece >= target && piece > 0.0 {
                return x0 + (x1 - x0) * (target - acc) / piece;
            }
            acc += piece;
        }
        *self.grid.last().unwrap()
    }

    /// Central credible interval holding `level` of the mass.
    pub fn credible_interval(&self, level: f64) -> (f64, f64) {
        let tail = 0.5 * (1.0 - level);
        (self.quantile(tail), self.quantile(1.0 - tail))
    }

    /// Grid node with the largest density.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
        self.grid[i]
    }
}

/// `p(J|{m}) ∝ Π_m p(m|J)^{n_m}` under a flat prior on the table's grid.
pub fn posterior(record: &ExperimentRecord, table: &LikelihoodTable) -> Result<PosteriorGrid> {
    let counts: Vec<f64> = record.counts.iter().map(|&n| n as f64).collect();
    let log_density = table.weighted_log_density(&counts)?;
    PosteriorGrid::from_log_density(table.grid.clone(), log_density)
}

/// Large-`M` posterior with the counts replaced by `M p(m|J*)`.
pub fn asymptotic_posterior(
    truth: &OutcomeDistribution,
    measurements: f64,
    table: &LikelihoodTable,
) -> Result<PosteriorGrid> {
    let weights: Vec<f64> = truth.probs.iter().map(|p| measurements * p).collect();
    let log_density = table.weighted_log_density(&weights)?;
    PosteriorGrid::from_log_density(table.grid.clone(), log_density)
}

/// Magnetization efficiency at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub coupling: f64,
    /// Field maximizing the classical Fisher information.
    pub h_tilde: f64,
    pub fisher_at_h_tilde: f64,
    /// Field maximizing the QFI.
    pub h_star: f64,
    pub qfi_at_h_star: f64,
    pub ratio: f64,
    /// `(β', F_J(β', h̃)/F_J(∞, h̃))` for every requested `β'`.
    pub delta: Vec<(f64, f64)>,
}

/// Field that maximizes the magnetization Fisher information.
pub fn optimal_measurement_field(sites: usize, coupling: f64, beta: f64) -> Result<FieldOptimum> {
    let povm = build_povm(sites)?;
    optimize::maximize(
        |h| {
            classical_fisher(
                &SpinChainParams::new(sites, coupling, h, beta)?,
                &povm,
                DerivativeMode::Analytic,
            )
        },
        ScanOptions::for_coupling(coupling),
        Refinement::Golden,
    )
}

/// Field that maximizes the exact QFI of a small chain.
pub fn optimal_qfi_field(sites: usize, coupling: f64, beta: f64) -> Result<FieldOptimum> {
    check_capacity(sites, DEFAULT_MAX_SITES)?;
    optimize::maximize(
        |h| Ok(estimation::qfi_exact(&SpinChainParams::new(sites, coupling, h, beta)?)?.value),
        ScanOptions::for_coupling(coupling),
        Refinement::Golden,
    )
}

/// `F_J(h̃)/G_J(h*)` for each coupling, with `δ_J` at `h̃` for `delta_betas`.
pub fn efficiency_report(
    sites: usize,
    beta: f64,
    couplings: &[f64],
    delta_betas: &[f64],
) -> Result<Vec<EfficiencyRow>> {
    let povm = build_povm(sites)?;
    couplings
        .iter()
        .map(|&j| {
            let f = optimal_measurement_field(sites, j, beta)?;
            let g = optimal_qfi_field(sites, j, beta)?;
            let cold = classical_fisher(
                &SpinChainParams::zero_temperature(sites, j, f.field)?,
                &povm,
                DerivativeMode::Analytic,
            )?;
            let delta = delta_betas
                .iter()
                .map(|&b| {
                    let warm = classical_fisher(
                        &SpinChainParams::new(sites, j, f.field, b)?,
                        &povm,
                        DerivativeMode::Analytic,
                    )?;
                    Ok((b, warm / cold))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(EfficiencyRow {
                coupling: j,
                h_tilde: f.field,
                fisher_at_h_tilde: f.value,
                h_star: g.field,
                qfi_at_h_star: g.value,
                ratio: f.value / g.value,
                delta,
            })
        })
        .collect()
}
