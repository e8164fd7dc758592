//! Seeded Monte-Carlo batches and their CSV reports.
//!
//! A scenario is a flat `key = value` file with a `kind` line choosing
//! between `frequency`, `energy` and `recovery`. Seeds `seed0 .. seed0 + seeds`
//! run in parallel; records are folded in seed order, so a report depends on
//! the configuration alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::complex::rips_from_disks;
use crate::energy::{
    conserve, coverage_complex, make_qos_groups, DiskModel, EnergyOptions, QuotaRule,
};
use crate::error::{Error, Result};
use crate::frequency::{
    auto_plan, coverage_per_frequency, greedy_coloring_by_id, homogeneity, interference_graph,
};
use crate::geometry::{
    assign_radii_uniform, default_max_radius, make_boundary, sample_poisson, BoundaryMode,
    RadiusRole,
};
use crate::homology::betti;
use crate::recovery::{
    run_recovery, DamageModel, DamageScenario, Planner, PlannerOptions, RecoveryOptions,
};
use crate::seeded_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Frequency,
    Energy,
    Recovery,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Frequency => "frequency",
            Kind::Energy => "energy",
            Kind::Recovery => "recovery",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(Kind::Frequency),
            "energy" => Ok(Kind::Energy),
            "recovery" => Ok(Kind::Recovery),
            other => Err(Error::Config(format!("unknown kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: Kind,
    pub seeds: u64,
    pub seed0: u64,
    pub side: f64,

    // frequency and energy
    pub lambda: f64,
    pub radius_min: f64,
    pub radius_max: f64,

    // frequency
    pub resolution: usize,

    // energy
    pub boundary_spacing: f64,
    pub boundary_radius: f64,
    pub model: DiskModel,
    pub quota_rule: QuotaRule,
    pub shrink: bool,
    pub shrink_step: f64,
    pub floor_fraction: f64,

    // recovery
    pub coverage: Vec<f64>,
    pub r: f64,
    pub planners: Vec<Planner>,
    pub sigma: f64,
    pub grid_fraction: f64,
    pub mcmc_steps_per_node: usize,
    pub n_modes: Option<usize>,
    pub max_iterations: usize,
    pub damage_model: DamageModel,
}

const COMMON_KEYS: &[&str] = &["kind", "seeds", "seed0", "side", "a"];
const FREQUENCY_KEYS: &[&str] = &["lambda", "radius_min", "radius_max", "resolution"];
const ENERGY_KEYS: &[&str] = &[
    "lambda",
    "radius_min",
    "radius_max",
    "boundary_spacing",
    "boundary_radius",
    "model",
    "quota_rule",
    "shrink",
    "shrink_step",
    "floor_fraction",
];
const RECOVERY_KEYS: &[&str] = &[
    "coverage",
    "r",
    "planners",
    "sigma",
    "grid_fraction",
    "mcmc_steps_per_node",
    "n_modes",
    "max_iterations",
    "damage_model",
];

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| cfg_err(format!("{key} = {v}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

impl ScenarioConfig {
    pub fn defaults(kind: Kind) -> Self {
        let side = 2.0;
        let lambda = if kind == Kind::Energy { 6.0 } else { 12.0 };
        Self {
            kind,
            seeds: 2000,
            seed0: 0,
            side,
            lambda,
            radius_min: side / 10.0,
            radius_max: default_max_radius(lambda),
            resolution: 256,
            boundary_spacing: 0.5,
            boundary_radius: side / 3.0,
            model: DiskModel::Cech,
            quota_rule: QuotaRule::Veto,
            shrink: true,
            shrink_step: 0.05,
            floor_fraction: 0.05,
            coverage: vec![0.2, 0.4, 0.6, 0.8],
            r: 0.5,
            planners: vec![Planner::Homology, Planner::SetCover],
            sigma: 0.1,
            grid_fraction: 0.2,
            mcmc_steps_per_node: 200,
            n_modes: None,
            max_iterations: 30,
            damage_model: DamageModel::Plane,
        }
    }

    /// Parses `key = value` lines. Unset keys take the kind's defaults;
    /// `radius_min`, `radius_max` and `boundary_radius` follow `side` and
    /// `lambda` unless given.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected 'key = value'", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if entries.insert(k.clone(), v).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        let kind: Kind = entries
            .get("kind")
            .ok_or_else(|| cfg_err("missing 'kind'"))?
            .parse()?;
        let allowed = match kind {
            Kind::Frequency => FREQUENCY_KEYS,
            Kind::Energy => ENERGY_KEYS,
            Kind::Recovery => RECOVERY_KEYS,
        };
        if let Some(k) = entries
            .keys()
            .find(|k| !COMMON_KEYS.contains(&k.as_str()) && !allowed.contains(&k.as_str()))
        {
            return Err(cfg_err(format!("key '{k}' does not apply to kind {kind}")));
        }
        if entries.contains_key("side") && entries.contains_key("a") {
            return Err(cfg_err("give either 'side' or 'a', not both"));
        }

        let mut c = Self::defaults(kind);
        let get = |k: &str| entries.get(k).map(String::as_str);
        if let Some(v) = get("side").or(get("a")) {
            c.side = parse_value("side", v)?;
        }
        if let Some(v) = get("lambda") {
            c.lambda = parse_value("lambda", v)?;
        }
        c.radius_min = match get("radius_min") {
            Some(v) => parse_value("radius_min", v)?,
            None => c.side / 10.0,
        };
        c.radius_max = match get("radius_max") {
            Some(v) => parse_value("radius_max", v)?,
            None => default_max_radius(c.lambda),
        };
        c.boundary_radius = match get("boundary_radius") {
            Some(v) => parse_value("boundary_radius", v)?,
            None => c.side / 3.0,
        };
        for (key, value) in &entries {
            let v = value.as_str();
            match key.as_str() {
                "seeds" => c.seeds = parse_value(key, v)?,
                "seed0" => c.seed0 = parse_value(key, v)?,
                "resolution" => c.resolution = parse_value(key, v)?,
                "boundary_spacing" => c.boundary_spacing = parse_value(key, v)?,
                "model" => {
                    c.model = match v {
                        "cech" => DiskModel::Cech,
                        "rips" => DiskModel::Rips,
                        _ => return Err(cfg_err(format!("model must be cech or rips, got '{v}'"))),
                    }
                }
                "quota_rule" => {
                    c.quota_rule = match v {
                        "veto" => QuotaRule::Veto,
                        "literal" => QuotaRule::Literal,
                        _ => {
                            return Err(cfg_err(format!(
                                "quota_rule must be veto or literal, got '{v}'"
                            )))
                        }
                    }
                }
                "shrink" => c.shrink = parse_value(key, v)?,
                "shrink_step" => c.shrink_step = parse_value(key, v)?,
                "floor_fraction" => c.floor_fraction = parse_value(key, v)?,
                "coverage" => c.coverage = parse_list(key, v)?,
                "r" => c.r = parse_value(key, v)?,
                "planners" => c.planners = parse_list(key, v)?,
                "sigma" => c.sigma = parse_value(key, v)?,
                "grid_fraction" => c.grid_fraction = parse_value(key, v)?,
                "mcmc_steps_per_node" => c.mcmc_steps_per_node = parse_value(key, v)?,
                "n_modes" => c.n_modes = Some(parse_value(key, v)?),
                "max_iterations" => c.max_iterations = parse_value(key, v)?,
                "damage_model" => {
                    c.damage_model = match v {
                        "plane" => DamageModel::Plane,
                        "in-square" | "in_square" => DamageModel::InSquare,
                        _ => {
                            return Err(cfg_err(format!(
                                "damage_model must be plane or in-square, got '{v}'"
                            )))
                        }
                    }
                }
                _ => {}
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(cfg_err(format!("{name} must be positive, got {v}")))
            }
        };
        if self.seeds == 0 {
            return Err(cfg_err("seeds must be positive"));
        }
        if self.seed0.checked_add(self.seeds).is_none() {
            return Err(cfg_err("seed range overflows"));
        }
        positive("side", self.side)?;
        match self.kind {
            Kind::Frequency | Kind::Energy => {
                positive("lambda", self.lambda)?;
                positive("radius_min", self.radius_min)?;
                positive("radius_max", self.radius_max)?;
                if self.radius_min > self.radius_max {
                    return Err(cfg_err("radius_min exceeds radius_max"));
                }
                if self.kind == Kind::Frequency && self.resolution < 16 {
                    return Err(cfg_err("resolution must be at least 16"));
                }
                if self.kind == Kind::Energy {
                    positive("boundary_spacing", self.boundary_spacing)?;
                    positive("boundary_radius", self.boundary_radius)?;
                    positive("floor_fraction", self.floor_fraction)?;
                    if !(self.shrink_step > 0.0 && self.shrink_step < 1.0) {
                        return Err(cfg_err("shrink_step must lie in (0, 1)"));
                    }
                }
            }
            Kind::Recovery => {
                positive("r", self.r)?;
                positive("grid_fraction", self.grid_fraction)?;
                if self.coverage.is_empty() || self.coverage.iter().any(|p| !(*p > 0.0 && *p < 1.0))
                {
                    return Err(cfg_err("coverage fractions must lie in (0, 1)"));
                }
                if self.planners.is_empty() {
                    return Err(cfg_err("at least one planner is needed"));
                }
                if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
                    return Err(cfg_err("sigma must be non-negative"));
                }
                if self.mcmc_steps_per_node == 0
                    || self.max_iterations == 0
                    || self.n_modes == Some(0)
                {
                    return Err(cfg_err(
                        "mcmc_steps_per_node, max_iterations and n_modes must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn seed_range(&self) -> std::ops::Range<u64> {
        self.seed0..self.seed0 + self.seeds
    }

    fn damage(&self, coverage: f64) -> DamageScenario {
        DamageScenario {
            coverage,
            r: self.r,
            side: self.side,
            model: self.damage_model,
        }
    }

    fn planner_options(&self) -> PlannerOptions {
        PlannerOptions {
            recovery: RecoveryOptions {
                mcmc_steps_per_node: self.mcmc_steps_per_node,
                n_modes: self.n_modes,
                max_iterations: self.max_iterations,
            },
            grid_fraction: self.grid_fraction,
            count_boundary: true,
        }
    }

    fn energy_options(&self) -> EnergyOptions {
        EnergyOptions {
            model: self.model,
            quota_rule: self.quota_rule,
            shrink_step: self.shrink_step,
            floor_fraction: self.floor_fraction,
            shrink: self.shrink,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyRecord {
    pub seed: u64,
    pub n_nodes: usize,
    pub n_conflicts: usize,
    /// Frequencies used by greedy coloring.
    pub n_g: usize,
    /// Frequencies used by the auto-planner.
    pub n_f: usize,
    /// Auto plan is total and conflict-free.
    pub valid: bool,
    pub auto_fractions: Vec<f64>,
    pub greedy_fractions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRecord {
    pub seed: u64,
    pub n_nodes: usize,
    pub n_boundary: usize,
    pub n_groups: usize,
    /// Sum of the quotas.
    pub n_o: usize,
    /// Nodes kept on.
    pub n_k: usize,
    pub quotas_met: bool,
    pub betti_preserved: bool,
    pub boundary_kept: bool,
    pub energy_before: f64,
    pub energy_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryRecord {
    pub seed: u64,
    pub coverage: f64,
    pub planner: Planner,
    pub n_i: usize,
    pub n_added_total: usize,
    pub n_added_kept: usize,
    pub beta1_after_perturbation: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub seed: u64,
    /// Which part of the seed failed, empty for single-cell kinds.
    pub cell: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Records {
    Frequency(Vec<FrequencyRecord>),
    Energy(Vec<EnergyRecord>),
    Recovery(Vec<RecoveryRecord>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub records: Records,
    pub failures: Vec<Failure>,
}

pub fn run_frequency_seed(cfg: &ScenarioConfig, seed: u64) -> Result<FrequencyRecord> {
    let mut rng = seeded_rng(seed);
    let ns = sample_poisson(cfg.lambda, cfg.side, &mut rng)?;
    let ns = assign_radii_uniform(ns, cfg.radius_min, cfg.radius_max, &mut rng)?;
    let ig = interference_graph(&ns);
    let x = rips_from_disks(&ns, RadiusRole::Comm);
    let greedy = greedy_coloring_by_id(&ig);
    let auto = auto_plan(&x, &ig, &mut rng)?;
    Ok(FrequencyRecord {
        seed,
        n_nodes: ns.len(),
        n_conflicts: ig.edge_count(),
        n_g: greedy.n_freqs(),
        n_f: auto.n_freqs(),
        valid: auto.assignment().len() == ns.len() && auto.is_valid_for(&ig),
        auto_fractions: coverage_per_frequency(&ns, &auto, cfg.resolution)?,
        greedy_fractions: coverage_per_frequency(&ns, &greedy, cfg.resolution)?,
    })
}

pub fn run_energy_seed(cfg: &ScenarioConfig, seed: u64) -> Result<EnergyRecord> {
    let mut rng = seeded_rng(seed);
    let ns = sample_poisson(cfg.lambda, cfg.side, &mut rng)?;
    let ns = assign_radii_uniform(ns, cfg.radius_min, cfg.radius_max, &mut rng)?;
    let ns = make_boundary(
        ns,
        BoundaryMode::SquarePerimeter {
            spacing: cfg.boundary_spacing,
            radius: cfg.boundary_radius,
        },
    )?;
    let x = coverage_complex(&ns, cfg.model, None);
    let groups = make_qos_groups(&x, &mut rng);
    let res = conserve(&x, &ns, &groups, &mut rng, cfg.energy_options())?;
    let after = res.apply(&ns);
    let boundary = ns.boundary_ids();
    Ok(EnergyRecord {
        seed,
        n_nodes: ns.len(),
        n_boundary: boundary.len(),
        n_groups: groups.group_count(),
        n_o: groups.total_quota(),
        n_k: res.kept_count(),
        quotas_met: groups.quotas_met(&res.kept),
        betti_preserved: betti(&coverage_complex(&after, cfg.model, Some(2))) == betti(&x),
        boundary_kept: boundary.is_subset(&res.kept),
        energy_before: ns.coverage_energy(),
        energy_after: after.coverage_energy(),
    })
}

pub fn run_recovery_seed(
    cfg: &ScenarioConfig,
    seed: u64,
    coverage: f64,
    planner: Planner,
) -> Result<RecoveryRecord> {
    let mut rng = seeded_rng(seed);
    let run = run_recovery(
        &cfg.damage(coverage),
        planner,
        cfg.sigma,
        &cfg.planner_options(),
        &mut rng,
    )?;
    Ok(RecoveryRecord {
        seed,
        coverage,
        planner,
        n_i: run.n_initial,
        n_added_total: run.n_added_total,
        n_added_kept: run.n_added_kept,
        beta1_after_perturbation: run.beta1_perturbed,
    })
}

fn split<T>(outcomes: Vec<(u64, String, Result<T>)>) -> (Vec<T>, Vec<Failure>) {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (seed, cell, r) in outcomes {
        match r {
            Ok(rec) => ok.push(rec),
            Err(e) => failures.push(Failure {
                seed,
                cell,
                message: e.to_string(),
            }),
        }
    }
    (ok, failures)
}

/// Runs every seed of `cfg`. Seed failures are collected, not raised.
pub fn run_batch(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let seeds: Vec<u64> = cfg.seed_range().collect();
    let (records, failures) = match cfg.kind {
        Kind::Frequency => {
            let out = seeds
                .par_iter()
                .map(|&s| (s, String::new(), run_frequency_seed(cfg, s)))
                .collect();
            let (ok, f) = split(out);
            (Records::Frequency(ok), f)
        }
        Kind::Energy => {
            let out = seeds
                .par_iter()
                .map(|&s| (s, String::new(), run_energy_seed(cfg, s)))
                .collect();
            let (ok, f) = split(out);
            (Records::Energy(ok), f)
        }
        Kind::Recovery => {
            let cells: Vec<(f64, Planner)> = cfg
                .coverage
                .iter()
                .flat_map(|&p| cfg.planners.iter().map(move |&pl| (p, pl)))
                .collect();
            let jobs: Vec<(f64, Planner, u64)> = cells
                .iter()
                .flat_map(|&(p, pl)| seeds.iter().map(move |&s| (p, pl, s)))
                .collect();
            let out = jobs
                .par_iter()
                .map(|&(p, pl, s)| {
                    (
                        s,
                        format!("{p}/{}", pl.name()),
                        run_recovery_seed(cfg, s, p, pl),
                    )
                })
                .collect();
            let (ok, f) = split(out);
            (Records::Recovery(ok), f)
        }
    };
    Ok(RunReport {
        config: cfg.clone(),
        records,
        failures,
    })
}

/// Mean of per-seed values grouped under a key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroupStats {
    pub count: usize,
    /// Share of all successful seeds.
    pub occurrence: f64,
    /// Mean auto-planner frequency count.
    pub mean_n_f: f64,
    /// Mean per-seed min/max coverage ratio.
    pub mean_homogeneity: f64,
    /// Mean covered share per frequency index.
    pub mean_fractions: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrequencySummary {
    pub runs: usize,
    pub all_valid: bool,
    /// Keyed by the greedy frequency count `N_g`; fractions are greedy's.
    pub by_greedy: BTreeMap<usize, GroupStats>,
    /// Keyed by the auto-planner frequency count `N_f`; fractions are the auto plan's.
    pub by_auto: BTreeMap<usize, GroupStats>,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize_frequency(records: &[FrequencyRecord]) -> FrequencySummary {
    let mut by_greedy: BTreeMap<usize, (usize, f64, f64, Vec<f64>)> = BTreeMap::new();
    let mut by_auto: BTreeMap<usize, (usize, f64, f64, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let g = by_greedy
            .entry(r.n_g)
            .or_insert_with(|| (0, 0.0, 0.0, vec![0.0; r.n_g]));
        g.0 += 1;
        g.1 += r.n_f as f64;
        g.2 += homogeneity(&r.greedy_fractions);
        for (acc, f) in g.3.iter_mut().zip(&r.greedy_fractions) {
            *acc += f;
        }
        let a = by_auto
            .entry(r.n_f)
            .or_insert_with(|| (0, 0.0, 0.0, vec![0.0; r.n_f]));
        a.0 += 1;
        a.1 += r.n_f as f64;
        a.2 += homogeneity(&r.auto_fractions);
        for (acc, f) in a.3.iter_mut().zip(&r.auto_fractions) {
            *acc += f;
        }
    }
    let finish = |m: BTreeMap<usize, (usize, f64, f64, Vec<f64>)>| {
        m.into_iter()
            .map(|(k, (c, nf, h, fr))| {
                let stats = GroupStats {
                    count: c,
                    occurrence: mean(c as f64, records.len()),
                    mean_n_f: mean(nf, c),
                    mean_homogeneity: mean(h, c),
                    mean_fractions: fr.iter().map(|s| mean(*s, c)).collect(),
                };
                (k, stats)
            })
            .collect()
    };
    FrequencySummary {
        runs: records.len(),
        all_valid: records.iter().all(|r| r.valid),
        by_greedy: finish(by_greedy),
        by_auto: finish(by_auto),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergySummary {
    pub runs: usize,
    pub mean_n_o: f64,
    pub mean_n_k: f64,
    /// Mean of `N_k − N_o`.
    pub mean_excess: f64,
    /// `N_o ↦ (seeds, mean N_k)`.
    pub by_n_o: BTreeMap<usize, (usize, f64)>,
    pub quotas_met: usize,
    pub betti_preserved: usize,
    pub boundary_kept: usize,
    pub mean_energy_ratio: f64,
}

pub fn summarize_energy(records: &[EnergyRecord]) -> EnergySummary {
    let n = records.len();
    let mut by: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for r in records {
        let e = by.entry(r.n_o).or_default();
        e.0 += 1;
        e.1 += r.n_k as f64;
    }
    EnergySummary {
        runs: n,
        mean_n_o: mean(records.iter().map(|r| r.n_o as f64).sum(), n),
        mean_n_k: mean(records.iter().map(|r| r.n_k as f64).sum(), n),
        mean_excess: mean(records.iter().map(|r| r.n_k as f64 - r.n_o as f64).sum(), n),
        by_n_o: by
            .into_iter()
            .map(|(k, (c, s))| (k, (c, mean(s, c))))
            .collect(),
        quotas_met: records.iter().filter(|r| r.quotas_met).count(),
        betti_preserved: records.iter().filter(|r| r.betti_preserved).count(),
        boundary_kept: records.iter().filter(|r| r.boundary_kept).count(),
        mean_energy_ratio: mean(
            records
                .iter()
                .map(|r| r.energy_after / r.energy_before)
                .sum(),
            n,
        ),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryCell {
    pub coverage: f64,
    pub planner: Planner,
    pub runs: usize,
    pub mean_added_total: f64,
    pub mean_added_kept: f64,
    pub mean_beta1: f64,
    pub p_beta1_zero: f64,
}

/// One cell per (coverage, planner), in configuration order.
pub fn summarize_recovery(cfg: &ScenarioConfig, records: &[RecoveryRecord]) -> Vec<RecoveryCell> {
    let mut out = Vec::new();
    for &coverage in &cfg.coverage {
        for &planner in &cfg.planners {
            let cell: Vec<&RecoveryRecord> = records
                .iter()
                .filter(|r| r.coverage == coverage && r.planner == planner)
                .collect();
            let n = cell.len();
            out.push(RecoveryCell {
                coverage,
                planner,
                runs: n,
                mean_added_total: mean(cell.iter().map(|r| r.n_added_total as f64).sum(), n),
                mean_added_kept: mean(cell.iter().map(|r| r.n_added_kept as f64).sum(), n),
                mean_beta1: mean(
                    cell.iter().map(|r| r.beta1_after_perturbation as f64).sum(),
                    n,
                ),
                p_beta1_zero: mean(
                    cell.iter()
                        .filter(|r| r.beta1_after_perturbation == 0)
                        .count() as f64,
                    n,
                ),
            });
        }
    }
    out
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// A header row plus data rows, written as one CSV file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

impl RunReport {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    /// Aggregates, one row per table cell.
    pub fn summary_table(&self) -> Table {
        match &self.records {
            Records::Frequency(recs) => {
                let s = summarize_frequency(recs);
                let mut t = Table::new(&[
                    "plan",
                    "n_freqs",
                    "count",
                    "occurrence",
                    "mean_auto_freqs",
                    "mean_homogeneity",
                    "mean_fractions",
                ]);
                for (plan, map) in [("greedy", &s.by_greedy), ("auto", &s.by_auto)] {
                    for (k, g) in map {
                        t.rows.push(vec![
                            plan.to_string(),
                            k.to_string(),
                            g.count.to_string(),
                            g.occurrence.to_string(),
                            g.mean_n_f.to_string(),
                            g.mean_homogeneity.to_string(),
                            join(&g.mean_fractions),
                        ]);
                    }
                }
                t
            }
            Records::Energy(recs) => {
                let s = summarize_energy(recs);
                let mut t = Table::new(&["n_o", "count", "occurrence", "mean_n_k", "mean_excess"]);
                t.rows.push(vec![
                    "all".into(),
                    s.runs.to_string(),
                    mean(s.runs as f64, s.runs).to_string(),
                    s.mean_n_k.to_string(),
                    s.mean_excess.to_string(),
                ]);
                for (k, (c, nk)) in &s.by_n_o {
                    t.rows.push(vec![
                        k.to_string(),
                        c.to_string(),
                        mean(*c as f64, s.runs).to_string(),
                        nk.to_string(),
                        (nk - *k as f64).to_string(),
                    ]);
                }
                t
            }
            Records::Recovery(recs) => {
                let mut t = Table::new(&[
                    "scenario",
                    "planner",
                    "runs",
                    "mean_added_total",
                    "mean_added_kept",
                    "mean_beta1",
                    "p_beta1_zero",
                ]);
                for c in summarize_recovery(&self.config, recs) {
                    t.rows.push(vec![
                        c.coverage.to_string(),
                        c.planner.name().to_string(),
                        c.runs.to_string(),
                        c.mean_added_total.to_string(),
                        c.mean_added_kept.to_string(),
                        c.mean_beta1.to_string(),
                        c.p_beta1_zero.to_string(),
                    ]);
                }
                t
            }
        }
    }

    /// Per-seed records followed by failed seeds; the `status` column is
    /// `ok` or the error message.
    pub fn raw_table(&self) -> Table {
        let fail_row = |f: &Failure, width: usize| {
            let mut row = vec![f.seed.to_string(), f.message.clone()];
            row.resize(width, String::new());
            row
        };
        let mut t = match &self.records {
            Records::Frequency(recs) => {
                let mut t = Table::new(&[
                    "seed",
                    "status",
                    "n_nodes",
                    "n_conflicts",
                    "n_g",
                    "n_f",
                    "valid",
                    "auto_fractions",
                    "greedy_fractions",
                ]);
                for r in recs {
                    t.rows.push(vec![
                        r.seed.to_string(),
                        "ok".into(),
                        r.n_nodes.to_string(),
                        r.n_conflicts.to_string(),
                        r.n_g.to_string(),
                        r.n_f.to_string(),
                        r.valid.to_string(),
                        join(&r.auto_fractions),
                        join(&r.greedy_fractions),
                    ]);
                }
                t
            }
            Records::Energy(recs) => {
                let mut t = Table::new(&[
                    "seed",
                    "status",
                    "n_nodes",
                    "n_boundary",
                    "n_groups",
                    "n_o",
                    "n_k",
                    "quotas_met",
                    "betti_preserved",
                    "boundary_kept",
                    "energy_before",
                    "energy_after",
                ]);
                for r in recs {
                    t.rows.push(vec![
                        r.seed.to_string(),
                        "ok".into(),
                        r.n_nodes.to_string(),
                        r.n_boundary.to_string(),
                        r.n_groups.to_string(),
                        r.n_o.to_string(),
                        r.n_k.to_string(),
                        r.quotas_met.to_string(),
                        r.betti_preserved.to_string(),
                        r.boundary_kept.to_string(),
                        r.energy_before.to_string(),
                        r.energy_after.to_string(),
                    ]);
                }
                t
            }
            Records::Recovery(recs) => {
                let mut t = Table::new(&[
                    "seed",
                    "status",
                    "scenario",
                    "planner",
                    "n_i",
                    "n_added_total",
                    "n_added_kept",
                    "beta1_after_perturbation",
                ]);
                for r in recs {
                    t.rows.push(vec![
                        r.seed.to_string(),
                        "ok".into(),
                        r.coverage.to_string(),
                        r.planner.name().to_string(),
                        r.n_i.to_string(),
                        r.n_added_total.to_string(),
                        r.n_added_kept.to_string(),
                        r.beta1_after_perturbation.to_string(),
                    ]);
                }
                t
            }
        };
        let width = t.header.len();
        for f in &self.failures {
            let mut row = fail_row(f, width);
            if let Records::Recovery(_) = self.records {
                if let Some((p, pl)) = f.cell.split_once('/') {
                    row[2] = p.to_string();
                    row[3] = pl.to_string();
                }
            }
            t.rows.push(row);
        }
        t
    }
}

/// Summary and raw file paths for a report written to `path`.
pub fn csv_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let raw = path.with_file_name(format!("{stem}_raw.csv"));
    (path.to_path_buf(), raw)
}

/// Writes the summary to `path` and the per-seed records next to it as
/// `<stem>_raw.csv`.
pub fn emit_csv(rep: &RunReport, path: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let (summary, raw) = csv_paths(path.as_ref());
    std::fs::write(&summary, rep.summary_table().to_csv()?)?;
    std::fs::write(&raw, rep.raw_table().to_csv()?)?;
    Ok((summary, raw))
}

/// Seeds with at least one successful record.
pub fn distinct_seeds(rep: &RunReport) -> BTreeSet<u64> {
    match &rep.records {
        Records::Frequency(r) => r.iter().map(|x| x.seed).collect(),
        Records::Energy(r) => r.iter().map(|x| x.seed).collect(),
        Records::Recovery(r) => r.iter().map(|x| x.seed).collect(),
    }
}
