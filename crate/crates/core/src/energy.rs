//! Energy conservation: switch nodes off while keeping (β0, β1) and per-group
//! QoS quotas, then shrink the coverage radii of the nodes left on.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::complex::{cech_from_disks, rips_from_disks_capped, Simplex, SimplicialComplex};
use crate::error::{invalid, Error, Result};
use crate::geometry::{disks_share_point, NodeSet, RadiusRole};
use crate::homology::{betti, BettiPair};
use crate::reduction::{reduce_with_guards, ReductionGuard, ReductionOptions, ReductionState};

/// Node groups with a required number of nodes to keep on.
///
/// Groups are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QosGroups {
    group: BTreeMap<usize, usize>,
    size: Vec<usize>,
    quota: Vec<usize>,
}

impl QosGroups {
    /// Builds groups from explicit members and quotas.
    pub fn new(members: Vec<Vec<usize>>, quota: Vec<usize>) -> Result<Self> {
        if members.len() != quota.len() {
            return Err(invalid("one quota per group is required"));
        }
        let mut group = BTreeMap::new();
        for (g, m) in members.iter().enumerate() {
            if quota[g] == 0 || quota[g] > m.len() {
                return Err(invalid(format!(
                    "group {} has quota {} for {} nodes",
                    g + 1,
                    quota[g],
                    m.len()
                )));
            }
            for &v in m {
                if group.insert(v, g + 1).is_some() {
                    return Err(invalid(format!("node {v} belongs to two groups")));
                }
            }
        }
        let size = members.iter().map(Vec::len).collect();
        Ok(Self { group, size, quota })
    }

    pub fn group_count(&self) -> usize {
        self.size.len()
    }

    pub fn group_of(&self, v: usize) -> Option<usize> {
        self.group.get(&v).copied()
    }

    pub fn size(&self, g: usize) -> usize {
        self.size[g - 1]
    }

    pub fn quota(&self, g: usize) -> usize {
        self.quota[g - 1]
    }

    /// Members of group `g`, ascending.
    pub fn members(&self, g: usize) -> Vec<usize> {
        self.group
            .iter()
            .filter(|&(_, &h)| h == g)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Σ Q(g): the node count traffic alone would require.
    pub fn total_quota(&self) -> usize {
        self.quota.iter().sum()
    }

    /// Nodes in `kept` per group, indexed by `g - 1`.
    pub fn kept_per_group(&self, kept: &BTreeSet<usize>) -> Vec<usize> {
        let mut out = vec![0; self.size.len()];
        for v in kept {
            if let Some(&g) = self.group.get(v) {
                out[g - 1] += 1;
            }
        }
        out
    }

    pub fn quotas_met(&self, kept: &BTreeSet<usize>) -> bool {
        self.kept_per_group(kept)
            .iter()
            .zip(&self.quota)
            .all(|(k, q)| k >= q)
    }
}

/// Forms groups from the simplices of `x`, largest first.
///
/// Within a size the order is a seeded shuffle. A simplex whose vertices are
/// all still ungrouped becomes a group of size `k + 1` with a quota drawn
/// uniformly from `1..=k + 1`.
pub fn make_qos_groups<R: Rng + ?Sized>(x: &SimplicialComplex, rng: &mut R) -> QosGroups {
    let mut group = BTreeMap::new();
    let mut size = Vec::new();
    let mut quota = Vec::new();
    let mut order: Vec<&Simplex> = Vec::new();
    for k in (0..x.clique_number()).rev() {
        order.clear();
        order.extend(x.simplices(k));
        order.shuffle(rng);
        for s in &order {
            if s.vertices().iter().any(|v| group.contains_key(v)) {
                continue;
            }
            size.push(s.len());
            quota.push(rng.random_range(1..=s.len()));
            for &v in s.vertices() {
                group.insert(v, size.len());
            }
        }
    }
    QosGroups { group, size, quota }
}

/// How the group quotas constrain the removal loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QuotaRule {
    /// A candidate whose removal would leave its group below quota is flagged.
    #[default]
    Veto,
    /// Taken verbatim from the pseudocode: the loop stops as soon as any group
    /// is below quota, and the veto compares the pre-removal size. The last
    /// removal may leave one group one node short.
    Literal,
}

/// Which complex of the coverage disks carries the topology.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiskModel {
    /// Tuples whose coverage disks share a point.
    #[default]
    Cech,
    /// Cliques of the graph of pairwise intersecting coverage disks.
    Rips,
}

/// The complex of `ns`'s coverage disks under `model`, up to `max_dim` if given.
pub fn coverage_complex(
    ns: &NodeSet,
    model: DiskModel,
    max_dim: Option<usize>,
) -> SimplicialComplex {
    match model {
        DiskModel::Cech => cech_from_disks(ns, RadiusRole::Cov, max_dim),
        DiskModel::Rips => rips_from_disks_capped(ns, RadiusRole::Cov, max_dim),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnergyOptions {
    /// Must match the model `x` was built with; the radius phase rebuilds with it.
    pub model: DiskModel,
    pub quota_rule: QuotaRule,
    /// Each shrink step multiplies the radius by `1 - shrink_step`.
    pub shrink_step: f64,
    /// Radii never shrink below `side * floor_fraction`.
    pub floor_fraction: f64,
    /// Skip the radius phase.
    pub shrink: bool,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            model: DiskModel::Cech,
            quota_rule: QuotaRule::Veto,
            shrink_step: 0.05,
            floor_fraction: 0.05,
            shrink: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnergyResult {
    pub kept: BTreeSet<usize>,
    /// Final coverage radius of every kept node.
    pub new_r_cov: BTreeMap<usize, f64>,
    /// Switched-off nodes in removal order.
    pub removed: Vec<usize>,
    pub betti: BettiPair,
}

impl EnergyResult {
    pub fn kept_count(&self) -> usize {
        self.kept.len()
    }

    /// The kept nodes with their final radii; ids are renumbered densely.
    pub fn apply(&self, ns: &NodeSet) -> NodeSet {
        let nodes = self
            .kept
            .iter()
            .map(|&v| {
                let mut n = ns.nodes()[v].clone();
                n.r_cov = self.new_r_cov[&v];
                n
            })
            .collect();
        NodeSet::from_nodes(ns.side(), nodes)
    }
}

struct QosGuard<'a> {
    target: BettiPair,
    groups: &'a QosGroups,
    size: Vec<usize>,
    rule: QuotaRule,
}

impl QosGuard<'_> {
    fn slot(&self, v: usize) -> usize {
        self.groups.group_of(v).expect("every vertex is grouped") - 1
    }
}

impl ReductionGuard for QosGuard<'_> {
    fn stop(&mut self, _: &ReductionState<'_>) -> bool {
        self.rule == QuotaRule::Literal
            && self.size.iter().zip(&self.groups.quota).any(|(s, q)| s < q)
    }

    fn veto(&mut self, _: &ReductionState<'_>, w: usize, without: &SimplicialComplex) -> bool {
        let g = self.slot(w);
        let short = match self.rule {
            QuotaRule::Veto => self.size[g] - 1 < self.groups.quota[g],
            QuotaRule::Literal => self.size[g] < self.groups.quota[g],
        };
        short || betti(without) != self.target
    }

    fn committed(&mut self, w: usize) {
        let g = self.slot(w);
        self.size[g] -= 1;
    }
}

/// Energy conservation on `x`, the complex of `ns` at maximal coverage radii.
///
/// Phase one removes nodes through the reduction loop with the boundary nodes
/// flagged, vetoing any removal that changes (β0, β1) or breaks a group's
/// quota. Phase two visits the kept nodes in random order and shrinks each
/// coverage radius step by step while (β0, β1) of the disk complex stays put.
pub fn conserve<R: Rng + ?Sized>(
    x: &SimplicialComplex,
    ns: &NodeSet,
    groups: &QosGroups,
    rng: &mut R,
    opts: EnergyOptions,
) -> Result<EnergyResult> {
    if x.vertex_set() != (0..ns.len()).collect::<BTreeSet<_>>() {
        return Err(Error::Inconsistent(format!(
            "complex has {} vertices, node set has {} nodes",
            x.count(0),
            ns.len()
        )));
    }
    if let Some(v) = x.vertices().find(|&v| groups.group_of(v).is_none()) {
        return Err(Error::Inconsistent(format!("node {v} has no QoS group")));
    }
    if !(0.0 < opts.shrink_step && opts.shrink_step < 1.0) {
        return Err(invalid(format!(
            "shrink step must lie in (0, 1), got {}",
            opts.shrink_step
        )));
    }
    let target = betti(x);
    let mut guard = QosGuard {
        target,
        groups,
        size: groups.size.clone(),
        rule: opts.quota_rule,
    };
    let reduced = reduce_with_guards(
        x,
        &ns.boundary_ids(),
        rng,
        &mut guard,
        ReductionOptions::default(),
    )?;
    let kept = reduced.complex.vertex_set();
    let mut radius: BTreeMap<usize, f64> = kept.iter().map(|&v| (v, ns.nodes()[v].r_cov)).collect();

    if opts.shrink {
        shrink_radii(
            reduced.complex.skeleton(2),
            ns,
            &mut radius,
            target,
            rng,
            opts,
        );
    }
    Ok(EnergyResult {
        kept,
        new_r_cov: radius,
        removed: reduced.removed,
        betti: target,
    })
}

fn shrink_radii<R: Rng + ?Sized>(
    mut current: SimplicialComplex,
    ns: &NodeSet,
    radius: &mut BTreeMap<usize, f64>,
    target: BettiPair,
    rng: &mut R,
    opts: EnergyOptions,
) {
    let floor = ns.side() * opts.floor_fraction;
    let mut order: Vec<usize> = radius.keys().copied().collect();
    order.shuffle(rng);
    let pos = |v: usize| ns.nodes()[v].pos;
    for v in order {
        loop {
            let r = radius[&v] * (1.0 - opts.shrink_step);
            if r < floor {
                break;
            }
            // shrinking v only drops simplices through v: find the edges and
            // triangles at v that no longer hold
            let disk = |u: usize| (pos(u), if u == v { r } else { radius[&u] });
            let lost_edges: BTreeSet<usize> = current
                .simplices(1)
                .iter()
                .filter(|e| e.contains(v))
                .map(|e| e.vertices()[0] + e.vertices()[1] - v)
                .filter(|&u| !disks_share_point(&[disk(v), disk(u)]))
                .collect();
            let lost_triangles: BTreeSet<[usize; 2]> = match opts.model {
                DiskModel::Rips => BTreeSet::new(),
                DiskModel::Cech => current
                    .simplices(2)
                    .iter()
                    .filter(|t| t.contains(v))
                    .map(|t| {
                        let mut o = t.vertices().iter().copied().filter(|&u| u != v);
                        [o.next().unwrap(), o.next().unwrap()]
                    })
                    .filter(|&[a, b]| !disks_share_point(&[disk(v), disk(a), disk(b)]))
                    .collect(),
            };
            let tentative = current.retain_simplices(|s| {
                if !s.contains(v) {
                    return true;
                }
                let others: Vec<usize> = s.vertices().iter().copied().filter(|&u| u != v).collect();
                others.iter().all(|u| !lost_edges.contains(u))
                    && others.iter().enumerate().all(|(i, &a)| {
                        others[i + 1..]
                            .iter()
                            .all(|&b| !lost_triangles.contains(&[a, b]))
                    })
            });
            if betti(&tentative) != target {
                break;
            }
            radius.insert(v, r);
            current = tentative;
        }
    }
}
