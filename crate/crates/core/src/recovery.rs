//! Patching a damaged network: DPP-placed additions grown until the Rips
//! complex has one component and no hole, then pruned by the reduction.
//! A grid set-cover placement serves as the baseline, and both planners can
//! be stress-tested by jittering the nodes they add.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;

use crate::complex::{rips_from_points, SimplicialComplex};
use crate::dpp::{sample_conditional, GinibreKernel};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    make_boundary, perturb_gaussian, sample_poisson, BoundaryMode, Node, NodeSet, Point,
};
use crate::homology::{betti, BettiPair};
use crate::reduction::reduce;

/// How the survivor intensity is chosen for a target covered fraction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DamageModel {
    /// Plane Boolean-model identity `p = 1 − exp(−λπr²)`. Border losses make
    /// the covered share of the square somewhat lower than `p`.
    #[default]
    Plane,
    /// Expected covered fraction of the square, border effects included,
    /// equals the target.
    InSquare,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DamageScenario {
    pub coverage: f64,
    pub r: f64,
    pub side: f64,
    pub model: DamageModel,
}

impl DamageScenario {
    pub fn new(coverage: f64) -> Self {
        Self {
            coverage,
            r: 0.5,
            side: 2.0,
            model: DamageModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(invalid(format!(
                "coverage fraction must lie in (0, 1), got {}",
                self.coverage
            )));
        }
        if !(self.r > 0.0 && self.side > 0.0 && self.r.is_finite() && self.side.is_finite()) {
            return Err(invalid("radius and side must be positive"));
        }
        Ok(())
    }

    pub fn intensity(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self.model {
            DamageModel::Plane => boolean_intensity(self.coverage, self.r),
            DamageModel::InSquare => in_square_intensity(self.coverage, self.r, self.side),
        })
    }

    /// Fictional nodes around the perimeter, spaced `r` apart.
    pub fn boundary(&self) -> BoundaryMode {
        BoundaryMode::SquarePerimeter {
            spacing: self.r,
            radius: self.r,
        }
    }
}

/// `λ = −ln(1 − p) / (πr²)`.
pub fn boolean_intensity(p: f64, r: f64) -> f64 {
    -(1.0 - p).ln() / (PI * r * r)
}

/// Length of `[c − h, c + h] ∩ [0, side]`.
fn clipped(c: f64, h: f64, side: f64) -> f64 {
    ((c + h).min(side) - (c - h).max(0.0)).max(0.0)
}

/// Area of the disk of radius `r` at `c` inside `[0, side]²`, by a midpoint
/// rule over vertical chords.
fn disk_square_area(c: Point, r: f64, side: f64, steps: usize) -> f64 {
    let lo = (c.x - r).max(0.0);
    let hi = (c.x + r).min(side);
    if hi <= lo {
        return 0.0;
    }
    let du = (hi - lo) / steps as f64;
    (0..steps)
        .map(|i| {
            let u = lo + (i as f64 + 0.5) * du;
            let h = (r * r - (u - c.x) * (u - c.x)).max(0.0).sqrt();
            clipped(c.y, h, side) * du
        })
        .sum()
}

/// Expected covered fraction of `[0, side]²` when a Poisson process of
/// intensity `λ` on the square carries disks of radius `r`.
pub fn expected_coverage(intensity: f64, r: f64, side: f64) -> f64 {
    coverage_from_areas(&area_profile(r, side), intensity)
}

const PROFILE_RES: usize = 64;

/// `|B(x, r) ∩ square|` on a `PROFILE_RES²` midpoint grid.
fn area_profile(r: f64, side: f64) -> Vec<f64> {
    let h = side / PROFILE_RES as f64;
    let mut out = Vec::with_capacity(PROFILE_RES * PROFILE_RES);
    for j in 0..PROFILE_RES {
        for i in 0..PROFILE_RES {
            let c = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            out.push(disk_square_area(c, r, side, 256));
        }
    }
    out
}

fn coverage_from_areas(areas: &[f64], intensity: f64) -> f64 {
    areas
        .iter()
        .map(|a| 1.0 - (-intensity * a).exp())
        .sum::<f64>()
        / areas.len() as f64
}

/// Intensity whose expected in-square coverage is `p`, by bisection.
pub fn in_square_intensity(p: f64, r: f64, side: f64) -> f64 {
    let areas = area_profile(r, side);
    let (mut lo, mut hi) = (0.0, boolean_intensity(p, r));
    while coverage_from_areas(&areas, hi) < p {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if coverage_from_areas(&areas, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Survivors of a damaged network with common radius `r`, followed by the
/// perimeter boundary.
pub fn gen_damaged<R: Rng + ?Sized>(ds: &DamageScenario, rng: &mut R) -> Result<NodeSet> {
    let survivors = sample_poisson(ds.intensity()?, ds.side, rng)?;
    let ns = with_additions(&NodeSet::new(ds.side), &survivors.positions(), ds.r);
    make_boundary(ns, ds.boundary())
}

/// Rips complex of disks of common radius `r`: an edge iff `dist < 2r`.
pub fn coverage_complex(points: &[Point], r: f64) -> SimplicialComplex {
    rips_from_points(points, 2.0 * r, None)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult {
    /// Original nodes followed by the kept additions.
    pub network: NodeSet,
    pub original_count: usize,
    /// Additions placed in the last growth iteration, before reduction.
    pub n_added_total: usize,
    pub betti_final: BettiPair,
    pub iterations: usize,
}

impl RecoveryResult {
    pub fn added_final(&self) -> Vec<Point> {
        self.network.nodes()[self.original_count..]
            .iter()
            .map(|n| n.pos)
            .collect()
    }

    pub fn added_ids(&self) -> Vec<usize> {
        (self.original_count..self.network.len()).collect()
    }

    pub fn n_added_kept(&self) -> usize {
        self.network.len() - self.original_count
    }

    /// Surviving interior nodes in the input.
    pub fn n_initial(&self) -> usize {
        self.network.nodes()[..self.original_count]
            .iter()
            .filter(|n| !n.boundary)
            .count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryOptions {
    /// Metropolis-Hastings proposals per added node.
    pub mcmc_steps_per_node: usize,
    /// Kernel modes; twice the point count when unset.
    pub n_modes: Option<usize>,
    pub max_iterations: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            mcmc_steps_per_node: 200,
            n_modes: None,
            max_iterations: 30,
        }
    }
}

fn check_input(ns: &NodeSet, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    if ns.boundary_ids().is_empty() {
        return Err(invalid("recovery needs boundary nodes"));
    }
    ns.validate()
}

fn with_additions(ns: &NodeSet, added: &[Point], r: f64) -> NodeSet {
    let mut out = ns.clone();
    for &pos in added {
        out.push(Node {
            pos,
            r_comm: 2.0 * r,
            r_cov: r,
            r_rej: r,
            boundary: false,
        });
    }
    out
}

/// `⌈a²/(πr²)⌉ − N_i`, floored at zero.
pub fn initial_additions(side: f64, r: f64, n_initial: usize) -> usize {
    let needed = (side * side / (PI * r * r)).ceil() as usize;
    needed.saturating_sub(n_initial)
}

/// Grows DPP additions until the coverage complex is patched, then removes
/// superfluous additions with the reduction.
///
/// Every iteration redraws all additions, conditioned on the original nodes.
/// Original nodes, boundary included, are never removed.
pub fn recover<R: Rng + ?Sized>(
    ns: &NodeSet,
    r: f64,
    opts: &RecoveryOptions,
    rng: &mut R,
) -> Result<RecoveryResult> {
    check_input(ns, r)?;
    let fixed = ns.positions();
    let side = ns.side();
    let mut n_add = initial_additions(side, r, ns.interior_count());
    let mut growth = 1;
    let mut iterations = 0;

    let (added, complex) = loop {
        iterations += 1;
        let total = fixed.len() + n_add;
        let kernel = match opts.n_modes {
            Some(m) => GinibreKernel::new(m, side, (PI * total as f64).sqrt() / side)?,
            None => GinibreKernel::for_points(total, side)?,
        };
        let placement = sample_conditional(
            &kernel,
            &fixed,
            n_add,
            side,
            opts.mcmc_steps_per_node * n_add,
            rng,
        )?;
        let mut pts = fixed.clone();
        pts.extend_from_slice(&placement.free);
        let complex = coverage_complex(&pts, r);
        let b = betti(&complex);
        if b.is_patched() {
            break (placement.free, complex);
        }
        if iterations >= opts.max_iterations {
            return Err(Error::RecoveryDiverged {
                iterations,
                added: n_add,
                beta0: b.beta0,
                beta1: b.beta1,
            });
        }
        n_add += growth;
        growth *= 2;
    };

    let flags: BTreeSet<usize> = (0..fixed.len()).collect();
    let reduced = reduce(&complex, &flags, rng)?;
    let kept: Vec<Point> = (fixed.len()..fixed.len() + added.len())
        .filter(|v| reduced.complex.has_vertex(*v))
        .map(|v| added[v - fixed.len()])
        .collect();
    Ok(RecoveryResult {
        network: with_additions(ns, &kept, r),
        original_count: ns.len(),
        n_added_total: added.len(),
        betti_final: betti(&reduced.complex),
        iterations,
    })
}

/// Greedy furthest-point placement over a grid of candidates with pitch
/// `grid_step`: keep adding the candidate furthest from every node, original
/// or added, until that distance is at most `r`.
pub fn set_cover_baseline(ns: &NodeSet, r: f64, grid_step: f64) -> Result<RecoveryResult> {
    set_cover_with(ns, r, grid_step, true)
}

/// [`set_cover_baseline`], optionally ignoring the fictional boundary nodes
/// when measuring distances.
pub fn set_cover_with(
    ns: &NodeSet,
    r: f64,
    grid_step: f64,
    count_boundary: bool,
) -> Result<RecoveryResult> {
    check_input(ns, r)?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(invalid(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    let side = ns.side();
    let per_side = (side / grid_step - 1e-9).ceil() as usize;
    let step = side / per_side as f64;
    let candidates: Vec<Point> = (0..=per_side)
        .flat_map(|j| (0..=per_side).map(move |i| Point::new(i as f64 * step, j as f64 * step)))
        .collect();

    let mut nearest: Vec<f64> = candidates
        .iter()
        .map(|c| {
            ns.nodes()
                .iter()
                .filter(|n| count_boundary || !n.boundary)
                .map(|n| c.dist(&n.pos))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut added = Vec::new();
    loop {
        let (best, &d) = nearest
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, d)| {
                if *d > *acc.1 {
                    (i, d)
                } else {
                    acc
                }
            });
        if d <= r {
            break;
        }
        let p = candidates[best];
        added.push(p);
        for (c, near) in candidates.iter().zip(nearest.iter_mut()) {
            *near = near.min(c.dist(&p));
        }
    }

    let network = with_additions(ns, &added, r);
    let betti_final = betti(&coverage_complex(&network.positions(), r));
    Ok(RecoveryResult {
        network,
        original_count: ns.len(),
        n_added_total: added.len(),
        betti_final,
        iterations: 1,
    })
}

/// β1 of the coverage complex after jittering only the added nodes.
pub fn perturbed_beta1<R: Rng + ?Sized>(
    res: &RecoveryResult,
    r: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<usize> {
    let moved = perturb_gaussian(res.network.clone(), &res.added_ids(), sigma, rng)?;
    Ok(betti(&coverage_complex(&moved.positions(), r)).beta1)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Robustness {
    pub mean_beta1: f64,
    pub p_beta1_zero: f64,
    pub runs: usize,
}

impl Robustness {
    pub fn from_beta1s(values: &[usize]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        Self {
            mean_beta1: values.iter().sum::<usize>() as f64 / n,
            p_beta1_zero: values.iter().filter(|&&b| b == 0).count() as f64 / n,
            runs: values.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Planner {
    Homology,
    SetCover,
}

impl Planner {
    pub fn name(&self) -> &'static str {
        match self {
            Planner::Homology => "homology",
            Planner::SetCover => "setcover",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homology" => Ok(Planner::Homology),
            "setcover" | "set-cover" => Ok(Planner::SetCover),
            other => Err(invalid(format!("unknown planner '{other}'"))),
        }
    }
}

/// Knobs shared by both planners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerOptions {
    pub recovery: RecoveryOptions,
    /// Set-cover grid pitch as a fraction of `r`.
    pub grid_fraction: f64,
    /// Whether set cover treats boundary nodes as existing coverage.
    pub count_boundary: bool,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            recovery: RecoveryOptions::default(),
            grid_fraction: 0.2,
            count_boundary: true,
        }
    }
}

/// Runs one planner on `ns`.
pub fn plan<R: Rng + ?Sized>(
    planner: Planner,
    ns: &NodeSet,
    r: f64,
    opts: &PlannerOptions,
    rng: &mut R,
) -> Result<RecoveryResult> {
    match planner {
        Planner::Homology => recover(ns, r, &opts.recovery, rng),
        Planner::SetCover => set_cover_with(ns, r, opts.grid_fraction * r, opts.count_boundary),
    }
}

/// One seed of the recovery experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryRun {
    pub n_initial: usize,
    pub n_added_total: usize,
    pub n_added_kept: usize,
    pub beta1_perturbed: usize,
}

/// Damage, plan, then perturb the additions, all from one generator.
pub fn run_recovery<R: Rng + ?Sized>(
    ds: &DamageScenario,
    planner: Planner,
    sigma: f64,
    opts: &PlannerOptions,
    rng: &mut R,
) -> Result<RecoveryRun> {
    let ns = gen_damaged(ds, rng)?;
    let res = plan(planner, &ns, ds.r, opts, rng)?;
    let beta1_perturbed = perturbed_beta1(&res, ds.r, sigma, rng)?;
    Ok(RecoveryRun {
        n_initial: res.n_initial(),
        n_added_total: res.n_added_total,
        n_added_kept: res.n_added_kept(),
        beta1_perturbed,
    })
}

/// Mean β1 and share of hole-free outcomes after jittering each planner's
/// additions by `σ`, over the given seeds. Failed seeds are skipped.
pub fn robustness_study(
    planner: Planner,
    ds: &DamageScenario,
    sigma: f64,
    opts: &PlannerOptions,
    seeds: impl IntoIterator<Item = u64>,
) -> Result<Robustness> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    let mut values = Vec::new();
    for seed in seeds {
        let mut rng = crate::seeded_rng(seed);
        if let Ok(run) = run_recovery(ds, planner, sigma, opts, &mut rng) {
            values.push(run.beta1_perturbed);
        }
    }
    Ok(Robustness::from_beta1s(&values))
}
