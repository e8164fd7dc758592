//! Frequency auto-planning by repeated reduction, and the greedy-coloring
//! baseline it is compared against.
//!
//! Pass `i` runs the reduction loop on the residual complex until the
//! surviving vertices are pairwise interference-free; survivors get
//! frequency `i` and the removed vertices form the next residual complex.

use std::collections::BTreeSet;

use rand::Rng;

use crate::complex::SimplicialComplex;
use crate::error::{invalid, Error, Result};
use crate::geometry::{NodeSet, Raster};
use crate::reduction::{reduce_with_guards, ReductionGuard, ReductionOptions, ReductionState};

/// Undirected conflict graph over node ids `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterferenceGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl InterferenceGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.adj.len();
        if u >= n || v >= n {
            return Err(Error::UnknownNode(u.max(v)));
        }
        if u == v {
            return Err(invalid(format!("self-loop on node {u}")));
        }
        self.adj[u].insert(v);
        self.adj[v].insert(u);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj.get(u).is_some_and(|a| a.contains(&v))
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    /// Edges `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, a)| a.range(u + 1..).map(move |&v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Conflict edges with both endpoints in `set`, ascending.
    pub fn edges_within(&self, set: &BTreeSet<usize>) -> Vec<(usize, usize)> {
        set.iter()
            .flat_map(|&u| {
                self.adj[u]
                    .range(u + 1..)
                    .filter(|v| set.contains(v))
                    .map(move |&v| (u, v))
            })
            .collect()
    }

    pub fn is_independent(&self, set: &BTreeSet<usize>) -> bool {
        set.iter()
            .all(|&u| self.adj[u].range(u + 1..).all(|v| !set.contains(v)))
    }
}

/// Conflict iff one node lies strictly inside the other's rejection disk.
pub fn interference_graph(ns: &NodeSet) -> InterferenceGraph {
    let nodes = ns.nodes();
    let mut g = InterferenceGraph::new(nodes.len());
    for (u, a) in nodes.iter().enumerate() {
        for (v, b) in nodes.iter().enumerate().skip(u + 1) {
            let d = a.pos.dist(&b.pos);
            if d < a.r_rej || d < b.r_rej {
                g.adj[u].insert(v);
                g.adj[v].insert(u);
            }
        }
    }
    g
}

/// One frequency per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyPlan {
    freq: Vec<usize>,
    n_freqs: usize,
}

impl FrequencyPlan {
    pub fn from_assignment(freq: Vec<usize>) -> Self {
        let n_freqs = freq.iter().map(|&f| f + 1).max().unwrap_or(0);
        Self { freq, n_freqs }
    }

    pub fn frequency(&self, v: usize) -> usize {
        self.freq[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.freq
    }

    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    /// Node count per frequency.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_freqs];
        for &f in &self.freq {
            sizes[f] += 1;
        }
        sizes
    }

    /// Every node of the graph has a frequency and no conflict edge is monochromatic.
    pub fn is_valid_for(&self, ig: &InterferenceGraph) -> bool {
        self.freq.len() == ig.node_count() && ig.edges().all(|(u, v)| self.freq[u] != self.freq[v])
    }
}

/// Stops the pass as soon as the survivors are interference-free.
struct Independence<'a> {
    ig: &'a InterferenceGraph,
}

impl ReductionGuard for Independence<'_> {
    fn stop(&mut self, state: &ReductionState<'_>) -> bool {
        self.ig.is_independent(&state.complex.vertex_set())
    }
}

/// Strips vertices from `x` until the survivors are independent in `ig`.
/// Returns the survivors.
fn plan_pass<R: Rng + ?Sized>(
    x: &SimplicialComplex,
    ig: &InterferenceGraph,
    rng: &mut R,
) -> Result<BTreeSet<usize>> {
    let mut current = x.clone();
    let none = BTreeSet::new();
    let opts = ReductionOptions {
        min_index: 2,
        trace: false,
    };
    loop {
        let pass = reduce_with_guards(&current, &none, rng, &mut Independence { ig }, opts)?;
        current = pass.complex;
        let survivors = current.vertex_set();
        let conflicts = ig.edges_within(&survivors);
        if conflicts.is_empty() {
            return Ok(survivors);
        }
        // no index left to drive the choice: drop an endpoint of a conflict
        let (u, v) = conflicts[rng.random_range(0..conflicts.len())];
        let w = if rng.random_bool(0.5) { u } else { v };
        current = current.delete_vertex(w)?;
    }
}

/// Frequency auto-planning on the complex `x` whose vertices are the nodes of `ig`.
pub fn auto_plan<R: Rng + ?Sized>(
    x: &SimplicialComplex,
    ig: &InterferenceGraph,
    rng: &mut R,
) -> Result<FrequencyPlan> {
    let n = ig.node_count();
    if x.vertex_set() != (0..n).collect::<BTreeSet<_>>() {
        return Err(Error::Inconsistent(format!(
            "complex has {} vertices, interference graph has {n} nodes",
            x.count(0)
        )));
    }
    let mut freq = vec![usize::MAX; n];
    let mut residual = x.clone();
    let mut i = 0;
    while !residual.is_empty() {
        let survivors = plan_pass(&residual, ig, rng)?;
        for &v in &survivors {
            freq[v] = i;
        }
        residual = residual.retain_vertices(|v| !survivors.contains(&v));
        i += 1;
    }
    Ok(FrequencyPlan::from_assignment(freq))
}

/// First-fit coloring in the given vertex order.
pub fn greedy_coloring(ig: &InterferenceGraph, order: &[usize]) -> Result<FrequencyPlan> {
    let n = ig.node_count();
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(invalid(
                "greedy coloring order must be a permutation of the nodes",
            ));
        }
    }
    if order.len() != n {
        return Err(invalid(
            "greedy coloring order must be a permutation of the nodes",
        ));
    }
    let mut freq = vec![usize::MAX; n];
    let mut used = Vec::new();
    for &v in order {
        used.clear();
        used.extend(
            ig.neighbors(v)
                .iter()
                .map(|&u| freq[u])
                .filter(|&f| f != usize::MAX),
        );
        used.sort_unstable();
        used.dedup();
        freq[v] = used
            .iter()
            .enumerate()
            .find(|&(i, &f)| i != f)
            .map_or(used.len(), |(i, _)| i);
    }
    Ok(FrequencyPlan::from_assignment(freq))
}

/// Greedy coloring in ascending id order.
pub fn greedy_coloring_by_id(ig: &InterferenceGraph) -> FrequencyPlan {
    let order: Vec<usize> = (0..ig.node_count()).collect();
    greedy_coloring(ig, &order).expect("identity order is a permutation")
}

/// For each frequency, the share of the covered area that lies in some
/// communication disk of a node on that frequency.
pub fn coverage_per_frequency(
    ns: &NodeSet,
    plan: &FrequencyPlan,
    resolution: usize,
) -> Result<Vec<f64>> {
    if resolution < 16 {
        return Err(invalid(format!(
            "raster resolution must be at least 16, got {resolution}"
        )));
    }
    if plan.assignment().len() != ns.len() {
        return Err(Error::Inconsistent(format!(
            "plan covers {} nodes, node set has {}",
            plan.assignment().len(),
            ns.len()
        )));
    }
    let raster = Raster::new(ns.side(), resolution);
    let mut any = vec![false; raster.cells()];
    let mut per = vec![vec![false; raster.cells()]; plan.n_freqs()];
    for (n, &f) in ns.nodes().iter().zip(plan.assignment()) {
        raster.for_each_in_disk(&n.pos, n.r_comm, |k| {
            any[k] = true;
            per[f][k] = true;
        });
    }
    let total = any.iter().filter(|&&b| b).count();
    if total == 0 {
        return Ok(vec![0.0; plan.n_freqs()]);
    }
    Ok(per
        .iter()
        .map(|m| m.iter().filter(|&&b| b).count() as f64 / total as f64)
        .collect())
}

/// Least over most covered fraction; 1 means every frequency covers the same area.
pub fn homogeneity(fractions: &[f64]) -> f64 {
    let max = fractions.iter().copied().fold(0.0, f64::max);
    let min = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}
