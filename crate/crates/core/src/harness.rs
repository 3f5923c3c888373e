//! Repeated-realization experiments: per-realization seeds, schemes,
//! order-independent aggregation, CSV and manifest output.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigError, NetworkConfig};
use crate::contention::{contention_summary, fd_access_probability};
use crate::geometry::derive_seed;
use crate::link::{link_success, Direction, McOptions};
use crate::optimizer::{
    japo_on, solve_association, AssociationInstance, Network, OptimizerError, PcsObjective, ASSOCIATION_MAX_ITER,
    ASSOCIATION_TOL,
};
use crate::quad::QuadError;
use crate::throughput::{sdt_fd, sdt_hd_with, ssf_mean_rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "SSF")]
    Ssf,
    #[serde(rename = "FD_ASSOC_FIXED_PCS")]
    FdAssocFixedPcs,
    #[serde(rename = "JAPO")]
    Japo,
    #[serde(rename = "HD_JAPO")]
    HdJapo,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Ssf, Scheme::FdAssocFixedPcs, Scheme::Japo, Scheme::HdJapo];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ssf => "SSF",
            Self::FdAssocFixedPcs => "FD_ASSOC_FIXED_PCS",
            Self::Japo => "JAPO",
            Self::HdJapo => "HD_JAPO",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "CAP")]
    Cap,
    /// Simulated link success of the typical nearest-AP link.
    #[serde(rename = "STP")]
    Stp,
    #[serde(rename = "SDT")]
    Sdt,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cap => "CAP",
            Self::Stp => "STP",
            Self::Sdt => "SDT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    LambdaS,
    Gamma,
    Pcs,
    Antennas,
}

impl SweepParam {
    /// Config key the value is applied through (dB units for gamma/pcs).
    pub fn key(self) -> &'static str {
        match self {
            Self::LambdaS => "lambda_s",
            Self::Gamma => "gamma",
            Self::Pcs => "pcs",
            Self::Antennas => "antennas",
        }
    }
}

/// A fixed set of overrides applied on top of the scenario base, e.g. one
/// antenna configuration. Its label is appended to the scheme column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub base: NetworkConfig,
    pub sweep_param: SweepParam,
    /// In config units.
    pub sweep_values: Vec<f64>,
    pub series: Vec<Series>,
    pub schemes: Vec<Scheme>,
    pub metric: MetricKind,
    pub n_realizations: usize,
    pub base_seed: u64,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{failed} of {total} realizations failed for {scheme} at {param} = {value}; first error: {first}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        scheme: Scheme,
        param: &'static str,
        value: f64,
        first: String,
    },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizationError {
    #[error("empty network ({aps} APs, {stas} STAs)")]
    EmptyNetwork { aps: usize, stas: usize },
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Numeric(#[from] QuadError),
}

/// Metrics of one scheme on one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seed: u64,
    pub scheme: Scheme,
    pub cap: f64,
    /// Closed-form STP behind `sdt`.
    pub stp: f64,
    pub sdt: f64,
    /// PCS threshold the scheme operated at, mW.
    pub gamma_pcs: f64,
    /// Typical-link success indicator, when simulated.
    pub link_success: Option<bool>,
    pub n_ap: usize,
    pub n_sta: usize,
}

impl Record {
    pub fn metric(&self, kind: MetricKind) -> f64 {
        match kind {
            MetricKind::Cap => self.cap,
            MetricKind::Sdt => self.sdt,
            MetricKind::Stp => match self.link_success {
                Some(s) => f64::from(u8::from(s)),
                None => self.stp,
            },
        }
    }
}

fn fd_association(emp: &NetworkConfig, net: &Network) -> Result<f64, RealizationError> {
    let inst = AssociationInstance::from_network(emp, &net.aps, &net.stas)?;
    let st = solve_association(&inst, ASSOCIATION_TOL, ASSOCIATION_MAX_ITER);
    let assignment = st.rounded();
    Ok(assignment
        .iter()
        .enumerate()
        .map(|(j, &i)| st.xi[i * st.n_sta + j])
        .sum::<f64>()
        / assignment.len() as f64)
}

/// Runs one scheme on the realization drawn from `seed`. With
/// `simulate_link` the typical link is also simulated at the scheme's
/// threshold.
pub fn run_realization_with(
    cfg: &NetworkConfig,
    scheme: Scheme,
    seed: u64,
    simulate_link: bool,
) -> Result<Record, RealizationError> {
    let net = Network::sample(cfg, seed);
    if net.aps.is_empty() || net.stas.is_empty() {
        return Err(RealizationError::EmptyNetwork {
            aps: net.aps.len(),
            stas: net.stas.len(),
        });
    }
    let emp = net.empirical_config(cfg);
    let (cap, stp, sdt, gamma_pcs) = match scheme {
        Scheme::Ssf => {
            let r = ssf_mean_rate(&emp)?;
            (fd_access_probability(&emp)?, r.stp, r.sdt, emp.pcs)
        }
        Scheme::FdAssocFixedPcs => {
            let xi = fd_association(&emp, &net)?;
            let r = sdt_fd(&emp, xi)?;
            (fd_access_probability(&emp)?, r.stp, r.sdt, emp.pcs)
        }
        Scheme::Japo => {
            let j = japo_on(cfg, &net, PcsObjective::Fd)?;
            let at = NetworkConfig {
                pcs: j.gamma_star,
                ..emp.clone()
            };
            let r = sdt_fd(&at, j.xi_star)?;
            (fd_access_probability(&at)?, r.stp, j.sdt_star, j.gamma_star)
        }
        Scheme::HdJapo => {
            let j = japo_on(cfg, &net, PcsObjective::HdTimeShared)?;
            let at = NetworkConfig {
                pcs: j.gamma_star,
                ..emp.clone()
            };
            let ul = sdt_hd_with(&at, Direction::Ul, j.xi_star)?;
            let dl = sdt_hd_with(&at, Direction::Dl, j.xi_star)?;
            let cap =
                0.5 * (contention_summary(&at, at.lambda_s)?.access_p + contention_summary(&at, at.lambda_a)?.access_p);
            (cap, 0.5 * (ul.stp + dl.stp), j.sdt_star, j.gamma_star)
        }
    };
    let link_success = simulate_link.then(|| {
        let at = NetworkConfig {
            pcs: gamma_pcs,
            ..cfg.clone()
        };
        let opts = McOptions {
            seed: derive_seed(seed, 0x11),
            ..McOptions::for_config(&at)
        };
        link_success(&at, Direction::Fd, &opts, 0)
    });
    Ok(Record {
        seed,
        scheme,
        cap,
        stp,
        sdt,
        gamma_pcs,
        link_success,
        n_ap: net.aps.len(),
        n_sta: net.stas.len(),
    })
}

/// Runs one scheme on the realization drawn from `seed`.
pub fn run_realization(cfg: &NetworkConfig, scheme: Scheme, seed: u64) -> Result<Record, RealizationError> {
    run_realization_with(cfg, scheme, seed, false)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and standard error (absent for n < 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: None,
                n,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let stderr = (n > 1).then(|| {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / (n as f64 - 1.0) / n as f64).sqrt()
        });
        Self { mean, stderr, n }
    }

    /// `mean / stderr`, infinite when the spread is zero.
    pub fn z(&self) -> f64 {
        match self.stderr {
            Some(s) if s > 0.0 => self.mean / s,
            _ if self.mean == 0.0 => 0.0,
            _ => self.mean.signum() * f64::INFINITY,
        }
    }
}

/// All records of one scheme at one (series, sweep value) point, in
/// realization-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub series: Option<String>,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub config: NetworkConfig,
    /// `(realization index, record)`; failed realizations are absent.
    pub records: Vec<(u64, Record)>,
    pub failures: usize,
}

impl Cell {
    pub fn summary(&self, metric: MetricKind) -> Summary {
        let mut recs: Vec<&(u64, Record)> = self.records.iter().collect();
        recs.sort_by_key(|(i, _)| *i);
        let xs: Vec<f64> = recs.iter().map(|(_, r)| r.metric(metric)).collect();
        Summary::of(&xs)
    }

    /// Label in the CSV scheme column.
    pub fn scheme_label(&self) -> String {
        match &self.series {
            Some(s) => format!("{}@{}", self.scheme, s),
            None => self.scheme.to_string(),
        }
    }
}

/// Per-index difference `a - b` over realizations present in both cells.
pub fn paired_difference(a: &Cell, b: &Cell, metric: MetricKind) -> Summary {
    let mut bs: Vec<&(u64, Record)> = b.records.iter().collect();
    bs.sort_by_key(|(i, _)| *i);
    let mut diffs = Vec::new();
    let mut av: Vec<&(u64, Record)> = a.records.iter().collect();
    av.sort_by_key(|(i, _)| *i);
    for (i, ra) in av {
        if let Ok(k) = bs.binary_search_by_key(i, |(j, _)| *j) {
            diffs.push(ra.metric(metric) - bs[k].1.metric(metric));
        }
    }
    Summary::of(&diffs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub sweep_value: f64,
    pub scheme_label: String,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub scenario: String,
    pub sweep_param: SweepParam,
    pub metric: MetricKind,
    pub cells: Vec<Cell>,
}

pub const CSV_HEADER: &str = "sweep_param,sweep_value,scheme,metric,mean,stderr,n";

/// 17 significant digits.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

impl ExperimentResult {
    pub fn rows(&self) -> Vec<Row> {
        self.cells
            .iter()
            .map(|c| Row {
                sweep_value: c.sweep_value,
                scheme_label: c.scheme_label(),
                summary: c.summary(self.metric),
            })
            .collect()
    }

    pub fn csv_line(&self, row: &Row) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.sweep_param.key(),
            full(row.sweep_value),
            row.scheme_label,
            self.metric.name(),
            full(row.summary.mean),
            row.summary.stderr.map(full).unwrap_or_default(),
            row.summary.n
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in self.rows() {
            out.push_str(&self.csv_line(&row));
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, series: Option<&str>, sweep_value: f64, scheme: Scheme) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.series.as_deref() == series && c.sweep_value == sweep_value && c.scheme == scheme)
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().map(|c| c.failures).sum()
    }
}

/// Writes the CSV to `path`.
pub fn emit_csv(result: &ExperimentResult, path: &std::path::Path) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(result.to_csv().as_bytes())?;
    f.flush()
}

/// Config of one (series, sweep value) point.
pub fn point_config(s: &Scenario, series: Option<&Series>, value: f64) -> Result<NetworkConfig, ConfigError> {
    let mut cfg = s.base.clone();
    if let Some(se) = series {
        for (k, v) in &se.overrides {
            cfg.set(k, v)?;
        }
    }
    cfg.set(s.sweep_param.key(), &format!("{value:?}"))?;
    cfg.validate()
}

/// Runs every realization of one cell. Seeds depend only on the base seed
/// and the realization index, so cells are paired across schemes and
/// sweep values.
pub fn run_cell(
    cfg: &NetworkConfig,
    scheme: Scheme,
    metric: MetricKind,
    n: usize,
    base_seed: u64,
) -> (Vec<(u64, Record)>, Vec<RealizationError>) {
    let results: Vec<(u64, Result<Record, RealizationError>)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            (
                i,
                run_realization_with(cfg, scheme, derive_seed(base_seed, i), metric == MetricKind::Stp),
            )
        })
        .collect();
    let mut ok = Vec::with_capacity(n);
    let mut errs = Vec::new();
    for (i, r) in results {
        match r {
            Ok(rec) => ok.push((i, rec)),
            Err(e) => errs.push(e),
        }
    }
    (ok, errs)
}

/// One row's cell, computed in isolation from its config, scheme and base
/// seed.
pub fn evaluate_cell(
    cfg: &NetworkConfig,
    series: Option<&str>,
    sweep_value: f64,
    scheme: Scheme,
    metric: MetricKind,
    n: usize,
    base_seed: u64,
) -> (Cell, Vec<RealizationError>) {
    let (records, errs) = run_cell(cfg, scheme, metric, n, base_seed);
    let cell = Cell {
        series: series.map(str::to_string),
        sweep_value,
        scheme,
        config: cfg.clone(),
        records,
        failures: errs.len(),
    };
    (cell, errs)
}

/// Thread cap from `DENSEWLAN_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("DENSEWLAN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn run_experiment_inner(s: &Scenario) -> Result<ExperimentResult, HarnessError> {
    let series: Vec<Option<&Series>> = if s.series.is_empty() {
        vec![None]
    } else {
        s.series.iter().map(Some).collect()
    };
    let mut cells = Vec::new();
    for se in series {
        for &value in &s.sweep_values {
            let cfg = point_config(s, se, value)?;
            for &scheme in &s.schemes {
                let (cell, errs) = evaluate_cell(
                    &cfg,
                    se.map(|x| x.label.as_str()),
                    value,
                    scheme,
                    s.metric,
                    s.n_realizations,
                    s.base_seed,
                );
                // More than 1% failed fails the experiment.
                if errs.len() * 100 > s.n_realizations {
                    return Err(HarnessError::TooManyFailures {
                        failed: errs.len(),
                        total: s.n_realizations,
                        scheme,
                        param: s.sweep_param.key(),
                        value,
                        first: errs[0].to_string(),
                    });
                }
                cells.push(cell);
            }
        }
    }
    Ok(ExperimentResult {
        scenario: s.name.clone(),
        sweep_param: s.sweep_param,
        metric: s.metric,
        cells,
    })
}

/// Runs a scenario, realization-parallel, honoring `DENSEWLAN_THREADS`.
pub fn run_experiment(s: &Scenario) -> Result<ExperimentResult, HarnessError> {
    if s.n_realizations == 0 {
        return Err(HarnessError::Scenario("n_realizations must be at least 1".into()));
    }
    if s.schemes.is_empty() || s.sweep_values.is_empty() {
        return Err(HarnessError::Scenario(
            "needs at least one scheme and one sweep value".into(),
        ));
    }
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Scenario(e.to_string()))?;
            pool.install(|| run_experiment_inner(s))
        }
        None => run_experiment_inner(s),
    }
}

/// Inputs of an experiment as JSON: scenario definition, seed rule and
/// per-point config hashes. Contains no results.
pub fn manifest(s: &Scenario) -> Result<serde_json::Value, HarnessError> {
    let series: Vec<Option<&Series>> = if s.series.is_empty() {
        vec![None]
    } else {
        s.series.iter().map(Some).collect()
    };
    let mut points = Vec::new();
    for se in series {
        for &value in &s.sweep_values {
            let cfg = point_config(s, se, value)?;
            points.push(json!({
                "series": se.map(|x| x.label.clone()),
                "sweep_value": full(value),
                "config_hash": cfg.content_hash(),
                "config": cfg.canonical_string(),
            }));
        }
    }
    Ok(json!({
        "scenario": s.name,
        "metric": s.metric.name(),
        "sweep_param": s.sweep_param.key(),
        "sweep_values": s.sweep_values.iter().map(|v| full(*v)).collect::<Vec<_>>(),
        "schemes": s.schemes.iter().map(|x| x.name()).collect::<Vec<_>>(),
        "series": s.series,
        "n_realizations": s.n_realizations,
        "base_seed": s.base_seed,
        "seed_rule": "splitmix64(splitmix64(base_seed) ^ index * 0xD1B54A32D192ED03)",
        "base_config_hash": s.base.content_hash(),
        "theta_model": s.base.theta_model.to_string(),
        "stp_model": s.base.stp_model.to_string(),
        "points": points,
    }))
}

/// Default realization counts.
pub const FULL_REALIZATIONS: usize = 10_000;
pub const FAST_REALIZATIONS: usize = 1_000;

fn antennas(ns: &[u32]) -> Vec<Series> {
    ns.iter()
        .map(|n| Series {
            label: format!("M=N={n}"),
            overrides: vec![("antennas".into(), n.to_string())],
        })
        .collect()
}

pub const SCENARIOS: &[&str] = &[
    "cap_vs_density",
    "stp_vs_sinr",
    "stp_vs_density",
    "rate_vs_sinr",
    "rate_vs_density",
    "rate_vs_antennas",
];

/// PCS threshold of the link-success scenarios, -30 dBm. At -70 dBm the
/// nearest interferer sits beyond ~114 distance units and every link
/// succeeds.
pub const STP_SCENARIO_PCS: f64 = 1e-3;

/// The built-in experiment families. Each pins the parameters its figure
/// fixes on top of `base`.
pub fn builtin_scenario(name: &str, base: &NetworkConfig, n: usize, base_seed: u64) -> Result<Scenario, HarnessError> {
    let densities: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let mk = |sweep_param, sweep_values, series, schemes, metric, base: NetworkConfig| Scenario {
        name: name.to_string(),
        base,
        sweep_param,
        sweep_values,
        series,
        schemes,
        metric,
        n_realizations: n,
        base_seed,
    };
    let with = |f: &dyn Fn(&mut NetworkConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    let s = match name {
        "cap_vs_density" => mk(
            SweepParam::LambdaS,
            densities,
            vec![
                Series {
                    label: "pcs=-30dBm".into(),
                    overrides: vec![("pcs".into(), "-30".into())],
                },
                Series {
                    label: "pcs=-70dBm".into(),
                    overrides: vec![("pcs".into(), "-70".into())],
                },
            ],
            vec![Scheme::Ssf],
            MetricKind::Cap,
            base.clone(),
        ),
        "stp_vs_sinr" => mk(
            SweepParam::Gamma,
            (-4..=4).map(|k| 5.0 * k as f64).collect(),
            antennas(&[1, 2, 4, 8]),
            vec![Scheme::Ssf],
            MetricKind::Stp,
            with(&|c| {
                c.lambda_s = 0.5;
                c.pcs = STP_SCENARIO_PCS;
            }),
        ),
        "stp_vs_density" => mk(
            SweepParam::LambdaS,
            densities,
            antennas(&[1, 2, 4, 8]),
            vec![Scheme::Ssf],
            MetricKind::Stp,
            with(&|c| {
                c.gamma = 1.0;
                c.pcs = STP_SCENARIO_PCS;
            }),
        ),
        "rate_vs_sinr" => mk(
            SweepParam::Gamma,
            (-2..=5).map(|k| 5.0 * k as f64).collect(),
            antennas(&[2, 8]),
            vec![Scheme::FdAssocFixedPcs, Scheme::Japo],
            MetricKind::Sdt,
            with(&|c| c.lambda_s = 0.9),
        ),
        "rate_vs_density" => mk(
            SweepParam::LambdaS,
            densities,
            Vec::new(),
            Scheme::ALL.to_vec(),
            MetricKind::Sdt,
            with(&|c| {
                c.gamma = 10.0;
                c.m_tx = 2;
                c.n_rx = 2;
            }),
        ),
        "rate_vs_antennas" => mk(
            SweepParam::Antennas,
            vec![1.0, 2.0, 4.0, 8.0],
            Vec::new(),
            vec![Scheme::Ssf, Scheme::FdAssocFixedPcs, Scheme::Japo],
            MetricKind::Sdt,
            with(&|c| {
                c.lambda_s = 0.9;
                c.gamma = 10.0;
            }),
        ),
        other => return Err(HarnessError::UnknownScenario(other.to_string())),
    };
    Ok(s)
}

/// Relative SDT gains between schemes at each point, for reporting.
pub fn gain_report(result: &ExperimentResult) -> Vec<String> {
    let pairs = [
        (Scheme::Japo, Scheme::FdAssocFixedPcs),
        (Scheme::FdAssocFixedPcs, Scheme::Ssf),
        (Scheme::Japo, Scheme::Ssf),
        (Scheme::Japo, Scheme::HdJapo),
    ];
    let mut out = Vec::new();
    for c in result.cells.iter().filter(|c| c.scheme == Scheme::Japo) {
        for (a, b) in pairs {
            let (Some(ca), Some(cb)) = (
                result.cell(c.series.as_deref(), c.sweep_value, a),
                result.cell(c.series.as_deref(), c.sweep_value, b),
            ) else {
                continue;
            };
            let (ma, mb) = (ca.summary(result.metric).mean, cb.summary(result.metric).mean);
            let d = paired_difference(ca, cb, result.metric);
            out.push(format!(
                "{}={} {}: {} vs {}: gain {:+.4e} ({:+.2}%), z = {:.2}",
                result.sweep_param.key(),
                c.sweep_value,
                c.series.as_deref().unwrap_or("-"),
                a,
                b,
                d.mean,
                100.0 * (ma / mb - 1.0),
                d.z()
            ));
        }
    }
    out
}
