//! Subcommand bodies. Each `*_table` function computes the output without
//! touching the file system; the public wrappers emit it.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{inf_token, single, SweepConfig};
use super::output::{emit, finite, real, to_json, Csv};
use crate::error::{Error, Result};
use crate::estimation;
use crate::fermion;
use crate::measure::{self, DerivativeMode, GridSpec, LikelihoodTable, OutcomeDistribution, PosteriorGrid};
use crate::model::{self, ChainLength};
use crate::spin::{self, SpinChainParams, DEFAULT_MAX_SITES};
use crate::thermo;

fn cap(cfg: &SweepConfig) -> usize {
    cfg.max_sites.unwrap_or(DEFAULT_MAX_SITES)
}

fn length_key(l: ChainLength) -> String {
    l.to_string()
}

fn per_site(l: ChainLength, g: f64) -> f64 {
    match l {
        ChainLength::Finite(n) => g / n as f64,
        ChainLength::Infinite => g,
    }
}

pub const QFI_SCAN_COLUMNS: [&str; 12] = [
    "L",
    "J",
    "h",
    "beta",
    "backend",
    "G_J",
    "G1",
    "G2",
    "G_per_site",
    "Q",
    "gamma_J",
    "error",
];

/// One row per `(L, J, β, h)`, `h` varying fastest. For `L = inf` the QFI
/// columns are per site.
pub fn qfi_scan_table(cfg: &SweepConfig) -> Result<Csv> {
    let sizes = cfg.sizes()?;
    let js = cfg.couplings()?;
    let hs = cfg.fields()?;
    let betas = cfg.betas()?;
    let mut points = Vec::with_capacity(sizes.len() * js.len() * betas.len() * hs.len());
    for &l in &sizes {
        for &j in &js {
            for &b in &betas {
                for &h in &hs {
                    points.push((l, j, h, b));
                }
            }
        }
    }
    let cap = cap(cfg);
    let results: Vec<Result<model::PointQfi>> = points
        .par_iter()
        .map(|&(l, j, h, b)| model::qfi_at(l, j, h, b, cap, cfg.backend))
        .collect();

    let mut baseline = HashMap::new();
    for (p, r) in points.iter().zip(&results) {
        if p.3 == f64::INFINITY {
            if let Ok(q) = r {
                baseline.insert((p.0, p.1.to_bits(), p.2.to_bits()), q.qfi.value);
            }
        }
    }

    let mut csv = Csv::new("qfi-scan", &cfg.hash(), cfg.seed, QFI_SCAN_COLUMNS.to_vec());
    for (&(l, j, h, b), r) in points.iter().zip(results) {
        let key = vec![length_key(l), real(j)?, real(h)?, real(b)?];
        let values = r.and_then(|q| {
            let g = q.qfi;
            let gamma = match baseline.get(&(l, j.to_bits(), h.to_bits())) {
                Some(&g0) if g0 > 0.0 => finite(g.value / g0)?,
                _ => String::new(),
            };
            Ok(vec![
                q.backend.as_str().to_string(),
                finite(g.value)?,
                finite(g.classical_part)?,
                finite(g.quantum_part)?,
                finite(per_site(l, g.value))?,
                finite(j * j * g.value)?,
                gamma,
            ])
        });
        csv.push_result(key, values);
    }
    Ok(csv)
}

pub const OPTIMAL_FIELD_COLUMNS: [&str; 12] = [
    "L",
    "J",
    "beta",
    "backend",
    "refinement",
    "h_star",
    "G_J",
    "G_per_site",
    "Q",
    "at_lower_edge",
    "peak_estimate",
    "error",
];

pub fn optimal_field_table(cfg: &SweepConfig) -> Result<Csv> {
    let sizes = cfg.sizes()?;
    let js = cfg.couplings()?;
    let betas = cfg.betas()?;
    let mut points = Vec::new();
    for &l in &sizes {
        for &j in &js {
            for &b in &betas {
                points.push((l, j, b));
            }
        }
    }
    let cap = cap(cfg);
    let results: Vec<_> = points
        .par_iter()
        .map(|&(l, j, b)| model::optimal_field(l, j, b, cap, cfg.backend))
        .collect();
    let mut csv = Csv::new("optimal-field", &cfg.hash(), cfg.seed, OPTIMAL_FIELD_COLUMNS.to_vec());
    for (&(l, j, b), r) in points.iter().zip(results) {
        let key = vec![length_key(l), real(j)?, real(b)?];
        let values = r.and_then(|(backend, opt)| {
            let estimate = if l == ChainLength::Infinite && b.is_finite() {
                finite(thermo::peak_density_estimate(j, b))?
            } else {
                String::new()
            };
            Ok(vec![
                backend.as_str().to_string(),
                opt.refinement.as_str().to_string(),
                finite(opt.field)?,
                finite(opt.value)?,
                finite(per_site(l, opt.value))?,
                finite(j * j * opt.value)?,
                opt.at_lower_edge.to_string(),
                estimate,
            ])
        });
        csv.push_result(key, values);
    }
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SldDump {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(rename = "h")]
    pub field: f64,
    #[serde(with = "inf_token")]
    pub beta: f64,
    /// Row-major SLD in the computational basis.
    pub sld: Vec<Vec<f64>>,
    pub hermiticity_defect: f64,
    pub trace_rho_sld: f64,
    pub trace_rho_sld_squared: f64,
    pub qfi: f64,
    /// `max |∂ρ - ½{Λ, ρ}|`.
    pub defining_equation_residual: f64,
    /// Distance to the two-site ground-state closed form (`L = 2`, `β = inf`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form_residual: Option<f64>,
}

pub fn sld_dump_value(cfg: &SweepConfig) -> Result<SldDump> {
    let l = match single(&cfg.sizes()?, "L")? {
        ChainLength::Finite(l) => l,
        ChainLength::Infinite => return Err(Error::Config("sld-dump needs a finite L".into())),
    };
    let j = single(&cfg.couplings()?, "J")?;
    let h = single(&cfg.fields()?, "h")?;
    let b = single(&cfg.betas()?, "beta")?;
    let params = SpinChainParams::new(l, j, h, b)?;
    let cap = cap(cfg);
    let ham = spin::build_hamiltonian_capped(&params, cap)?;
    let dh = spin::d_hamiltonian_dj_capped(&params, cap)?;
    let state = spin::gibbs_state(&ham, b)?;
    let sld = estimation::sld_spectral(&state, &dh)?;
    let (tr1, tr2, residual) = estimation::sld_diagnostics(&state, &dh, &sld)?;
    let qfi = estimation::qfi_spectral(&state, &dh)?.value;
    let closed_form_residual = (l == 2 && b == f64::INFINITY).then(|| {
        let reference = estimation::two_site_ground_sld(j, h);
        (sld.matrix.matrix() - reference.matrix()).amax()
    });
    let m = sld.matrix.matrix();
    Ok(SldDump {
        sites: l,
        coupling: j,
        field: h,
        beta: b,
        sld: (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect(),
        hermiticity_defect: sld.matrix.hermiticity_defect(),
        trace_rho_sld: tr1,
        trace_rho_sld_squared: tr2,
        qfi,
        defining_equation_residual: residual,
        closed_form_residual,
    })
}

pub const FISHER_MAG_COLUMNS: [&str; 10] = [
    "L", "J", "beta", "h_tilde", "F_J", "h_star", "G_J", "ratio", "delta_J", "error",
];

/// Magnetization efficiency for each `(L, J, β)`; `delta_J` compares `F_J`
/// at `h̃` with its zero-temperature value.
pub fn fisher_mag_table(cfg: &SweepConfig) -> Result<Csv> {
    let sizes = cfg.sizes()?;
    let js = cfg.couplings()?;
    let betas = cfg.betas()?;
    let mut points = Vec::new();
    for &l in &sizes {
        for &b in &betas {
            for &j in &js {
                points.push((l, j, b));
            }
        }
    }
    let cap = cap(cfg);
    let results: Vec<_> = points
        .par_iter()
        .map(|&(l, j, b)| match l {
            ChainLength::Finite(n) => {
                spin::check_capacity(n, cap)?;
                measure::efficiency_report(n, b, &[j], &[b]).map(|mut v| v.remove(0))
            }
            ChainLength::Infinite => Err(Error::Domain("magnetization statistics need a finite L".into())),
        })
        .collect();
    let mut csv = Csv::new("fisher-mag", &cfg.hash(), cfg.seed, FISHER_MAG_COLUMNS.to_vec());
    for (&(l, j, b), r) in points.iter().zip(results) {
        let key = vec![length_key(l), real(j)?, real(b)?];
        let values = r.and_then(|row| {
            Ok(vec![
                finite(row.h_tilde)?,
                finite(row.fisher_at_h_tilde)?,
                finite(row.h_star)?,
                finite(row.qfi_at_h_star)?,
                finite(row.ratio)?,
                finite(row.delta[0].1)?,
            ])
        });
        csv.push_result(key, values);
    }
    Ok(csv)
}

pub const BAYES_COLUMNS: [&str; 10] = [
    "M",
    "bayes_variance",
    "asymptotic_variance",
    "cr_bound",
    "bayes_ratio",
    "asymptotic_ratio",
    "mean_estimate",
    "sets",
    "widened",
    "error",
];

pub const DEFAULT_SCHEDULE: [u64; 8] = [10, 20, 50, 100, 150, 200, 300, 500];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRow {
    #[serde(rename = "M")]
    pub measurements: u64,
    /// Mean over sets of the posterior variance.
    pub bayes_variance: Option<f64>,
    pub asymptotic_variance: Option<f64>,
    pub cr_bound: f64,
    pub mean_estimate: Option<f64>,
    pub sets: usize,
    pub widened: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSummary {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(with = "inf_token")]
    pub beta: f64,
    #[serde(rename = "J_star")]
    pub true_coupling: f64,
    #[serde(rename = "h")]
    pub field: f64,
    pub fisher: f64,
    pub seed: u64,
    pub n_sets: usize,
    pub grid: GridSpec,
    pub rows: Vec<BayesRow>,
}

/// Posterior on `table`, falling back once to the widened grid.
fn posterior_with_retry<F>(
    primary: &LikelihoodTable,
    wide: &OnceLock<Result<LikelihoodTable>>,
    build_wide: F,
    run: impl Fn(&LikelihoodTable) -> Result<PosteriorGrid>,
) -> Result<(PosteriorGrid, bool)>
where
    F: FnOnce() -> Result<LikelihoodTable>,
{
    match run(primary) {
        Err(Error::GridTooNarrow { .. }) => {
            let table = wide.get_or_init(build_wide).as_ref().map_err(Clone::clone)?;
            run(table).map(|p| (p, true))
        }
        other => other.map(|p| (p, false)),
    }
}

/// Defaults: `L = 2`, `β = 1`, `J* = 3`, `h = h̃`, 20 sets.
pub fn bayes_sim_value(cfg: &SweepConfig) -> Result<(Csv, BayesSummary)> {
    let sites = match cfg.sizes.as_ref().map(|_| cfg.sizes()).transpose()? {
        None => 2,
        Some(v) => match single(&v, "L")? {
            ChainLength::Finite(l) => l,
            ChainLength::Infinite => return Err(Error::Config("bayes-sim needs a finite L".into())),
        },
    };
    let beta = match &cfg.beta {
        None => 1.0,
        Some(_) => single(&cfg.betas()?, "beta")?,
    };
    let truth = match &cfg.coupling {
        None => 3.0,
        Some(_) => single(&cfg.couplings()?, "J")?,
    };
    let schedule = cfg.measurements.clone().unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec());
    if schedule.is_empty() || schedule.contains(&0) {
        return Err(Error::Config("field `M`: every entry must be at least 1".into()));
    }
    let n_sets = cfg.n_sets.unwrap_or(20);
    if n_sets == 0 {
        return Err(Error::Config("field `n_sets` must be at least 1".into()));
    }
    let seed = cfg.seed.unwrap_or(0);
    let mut grid = GridSpec::around(truth);
    if let Some([lo, hi]) = cfg.prior {
        grid.lo = lo;
        grid.hi = hi;
    }
    if let Some(n) = cfg.grid_points {
        grid.points = n;
    }
    grid.validate().map_err(|e| Error::Config(e.to_string()))?;
    if !(grid.lo < truth && truth < grid.hi) {
        return Err(Error::Config(format!(
            "prior [{}, {}] does not contain J = {truth}",
            grid.lo, grid.hi
        )));
    }
    spin::check_capacity(sites, cap(cfg))?;

    let field = match &cfg.field {
        Some(_) => single(&cfg.fields()?, "h")?,
        None => measure::optimal_measurement_field(sites, truth, beta)?.field,
    };
    let template = SpinChainParams::new(sites, truth, field, beta)?;
    let povm = measure::build_povm_capped(sites, cap(cfg))?;
    let fisher = measure::classical_fisher(&template, &povm, DerivativeMode::Analytic)?;
    let dist: OutcomeDistribution = measure::outcome_distribution(&template, &povm)?;
    let table = LikelihoodTable::magnetization(&template, &povm, grid)?;
    let wide = OnceLock::new();
    let build_wide = || LikelihoodTable::magnetization(&template, &povm, grid.widened());

    let jobs: Vec<(usize, usize)> = (0..schedule.len())
        .flat_map(|m| (0..n_sets).map(move |s| (m, s)))
        .collect();
    let outcomes: Vec<Result<(PosteriorGrid, bool)>> = jobs
        .par_iter()
        .map(|&(mi, s)| {
            let stream = ((mi as u64) << 32) | s as u64;
            let record = measure::sample_experiment(&dist, truth, schedule[mi], seed, stream)?;
            posterior_with_retry(&table, &wide, build_wide, |t| measure::posterior(&record, t))
        })
        .collect();
    let asymptotic: Vec<Result<(PosteriorGrid, bool)>> = schedule
        .par_iter()
        .map(|&m| {
            posterior_with_retry(&table, &wide, build_wide, |t| {
                measure::asymptotic_posterior(&dist, m as f64, t)
            })
        })
        .collect();

    let mut rows = Vec::new();
    for (mi, &m) in schedule.iter().enumerate() {
        let sets = &outcomes[mi * n_sets..(mi + 1) * n_sets];
        let ok: Vec<&(PosteriorGrid, bool)> = sets.iter().filter_map(|r| r.as_ref().ok()).collect();
        let failures: Vec<String> = sets
            .iter()
            .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
            .collect();
        let mut errors = Vec::new();
        if !failures.is_empty() {
            errors.push(format!("{} of {n_sets} sets failed: {}", failures.len(), failures[0]));
        }
        let asym = match &asymptotic[mi] {
            Ok((p, _)) => Some(p.variance),
            Err(e) => {
                errors.push(format!("asymptotic posterior: {e}"));
                None
            }
        };
        let mean = |f: &dyn Fn(&PosteriorGrid) -> f64| {
            (!ok.is_empty()).then(|| ok.iter().map(|(p, _)| f(p)).sum::<f64>() / ok.len() as f64)
        };
        rows.push(BayesRow {
            measurements: m,
            bayes_variance: mean(&|p| p.variance),
            asymptotic_variance: asym,
            cr_bound: 1.0 / (m as f64 * fisher),
            mean_estimate: mean(&|p| p.mean),
            sets: ok.len(),
            widened: ok.iter().filter(|(_, w)| *w).count(),
            error: (!errors.is_empty()).then(|| errors.join("; ")),
        });
    }

    let mut csv = Csv::new("bayes-sim", &cfg.hash(), Some(seed), BAYES_COLUMNS.to_vec());
    csv.metadata.push(("L".into(), sites.to_string()));
    csv.metadata.push(("beta".into(), real(beta)?));
    csv.metadata.push(("J_star".into(), real(truth)?));
    csv.metadata.push(("h".into(), real(field)?));
    csv.metadata.push(("F_J".into(), finite(fisher)?));
    let opt = |x: Option<f64>| x.map(finite).transpose().map(Option::unwrap_or_default);
    for row in &rows {
        let ratio = |v: Option<f64>| v.map(|v| v / row.cr_bound);
        let mut cells = vec![
            row.measurements.to_string(),
            opt(row.bayes_variance)?,
            opt(row.asymptotic_variance)?,
            finite(row.cr_bound)?,
            opt(ratio(row.bayes_variance))?,
            opt(ratio(row.asymptotic_variance))?,
            opt(row.mean_estimate)?,
            row.sets.to_string(),
            row.widened.to_string(),
        ];
        cells.push(row.error.clone().unwrap_or_default());
        csv.push(cells);
    }
    let summary = BayesSummary {
        sites,
        beta,
        true_coupling: truth,
        field,
        fisher,
        seed,
        n_sets,
        grid,
        rows,
    };
    Ok((csv, summary))
}

pub const SCALING_COLUMNS: [&str; 10] = [
    "J",
    "h",
    "beta",
    "L",
    "G_J",
    "G_per_site",
    "alpha",
    "coefficient",
    "residual",
    "density_limit",
];

/// Momentum-sum QFI over the configured (even) sizes with a power-law fit
/// per `(J, h, β)`.
pub fn scaling_table(cfg: &SweepConfig) -> Result<(Csv, Vec<fermion::ScalingFit>)> {
    let sizes: Vec<usize> = cfg
        .sizes()?
        .into_iter()
        .map(|l| match l {
            ChainLength::Finite(n) => Ok(n),
            ChainLength::Infinite => Err(Error::Config("scaling needs finite sizes".into())),
        })
        .collect::<Result<_>>()?;
    let js = cfg.couplings()?;
    let hs = cfg.fields()?;
    let betas = cfg.betas()?;
    let mut combos = Vec::new();
    for &j in &js {
        for &h in &hs {
            for &b in &betas {
                combos.push((j, h, b));
            }
        }
    }
    let fits: Vec<Result<(fermion::ScalingFit, Option<f64>)>> = combos
        .par_iter()
        .map(|&(j, h, b)| {
            let fit = fermion::scaling_study(&sizes, j, h, b)?;
            let limit = if b.is_finite() {
                Some(thermo::gtilde_quadrature(j, h, b)?.total)
            } else {
                None
            };
            Ok((fit, limit))
        })
        .collect();
    let mut csv = Csv::new("scaling", &cfg.hash(), cfg.seed, SCALING_COLUMNS.to_vec());
    let mut out = Vec::new();
    for (&(j, h, b), r) in combos.iter().zip(fits) {
        let (fit, limit) = r?;
        for (&l, &g) in fit.sizes.iter().zip(&fit.qfi_values) {
            csv.push(vec![
                real(j)?,
                real(h)?,
                real(b)?,
                l.to_string(),
                finite(g)?,
                finite(g / l as f64)?,
                finite(fit.exponent)?,
                finite(fit.coefficient)?,
                finite(fit.residual)?,
                limit.map(finite).transpose()?.unwrap_or_default(),
            ]);
        }
        out.push(fit);
    }
    Ok((csv, out))
}

fn summary_path(cfg: &SweepConfig) -> Option<PathBuf> {
    cfg.out.as_ref().map(|p| {
        let stem = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        p.with_file_name(format!("{stem}.summary.json"))
    })
}

pub fn qfi_scan(cfg: &SweepConfig) -> Result<()> {
    emit(cfg.out.as_deref(), &qfi_scan_table(cfg)?.render())
}

pub fn optimal_field(cfg: &SweepConfig) -> Result<()> {
    emit(cfg.out.as_deref(), &optimal_field_table(cfg)?.render())
}

pub fn sld_dump(cfg: &SweepConfig) -> Result<()> {
    emit(cfg.out.as_deref(), &to_json(&sld_dump_value(cfg)?))
}

pub fn fisher_mag(cfg: &SweepConfig) -> Result<()> {
    emit(cfg.out.as_deref(), &fisher_mag_table(cfg)?.render())
}

pub fn bayes_sim(cfg: &SweepConfig) -> Result<()> {
    let (csv, summary) = bayes_sim_value(cfg)?;
    emit(cfg.out.as_deref(), &csv.render())?;
    if let Some(p) = summary_path(cfg) {
        emit(Some(&p), &to_json(&summary))?;
    }
    Ok(())
}

pub fn scaling(cfg: &SweepConfig) -> Result<()> {
    let (csv, fits) = scaling_table(cfg)?;
    emit(cfg.out.as_deref(), &csv.render())?;
    if let Some(p) = summary_path(cfg) {
        emit(Some(&p), &to_json(&fits))?;
    }
    Ok(())
}
