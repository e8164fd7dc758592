//! Abstract simplicial complexes: Vietoris-Rips (clique) and Čech construction,
//! face/coface navigation, vertex deletion and maximal-simplex enumeration.
//!
//! Simplices are stored per dimension in sorted canonical form, so membership
//! is a binary search and every level iterates in lexicographic order.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use smallvec::SmallVec;

use crate::bits::BitSet;
use crate::error::{Error, Result};
use crate::geometry::{disks_share_point, min_enclosing_ball_radius, NodeSet, Point, RadiusRole};
use crate::homology::BettiPair;

/// A k-simplex: `k + 1` distinct vertex ids in strictly increasing order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(SmallVec<[usize; 6]>);

impl Simplex {
    /// Sorts and deduplicates the given ids.
    pub fn new(vertices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: SmallVec<[usize; 6]> = vertices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Simplex(v)
    }

    pub(crate) fn from_sorted(v: &[usize]) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Simplex(SmallVec::from_slice(v))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Dimension `k` of a k-simplex. Panics on the empty simplex.
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// The codimension-one faces, dropping each vertex in turn.
    pub fn facets(&self) -> impl Iterator<Item = Simplex> + '_ {
        (0..self.0.len())
            .filter(|_| self.0.len() > 1)
            .map(move |skip| {
                Simplex(
                    self.0
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect(),
                )
            })
    }

    /// All 2-dimensional faces (the simplex itself included when it is a triangle).
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let v = &self.0;
        let n = v.len();
        (0..n).flat_map(move |i| {
            (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| [v[i], v[j], v[k]]))
        })
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A finite abstract simplicial complex closed under faces.
#[derive(Clone, Default)]
pub struct SimplicialComplex {
    /// `levels[k]` holds the k-simplices, sorted.
    levels: Vec<Vec<Simplex>>,
    betti: OnceLock<BettiPair>,
}

impl PartialEq for SimplicialComplex {
    fn eq(&self, other: &Self) -> bool {
        self.levels == other.levels
    }
}

impl Eq for SimplicialComplex {}

impl fmt::Debug for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<usize> = self.levels.iter().map(Vec::len).collect();
        f.debug_struct("SimplicialComplex")
            .field("counts", &counts)
            .finish()
    }
}

impl SimplicialComplex {
    pub fn empty() -> Self {
        Self::default()
    }

    fn from_levels(mut levels: Vec<Vec<Simplex>>) -> Self {
        while levels.last().is_some_and(Vec::is_empty) {
            levels.pop();
        }
        debug_assert!(levels.iter().all(|l| l.windows(2).all(|w| w[0] < w[1])));
        Self {
            levels,
            betti: OnceLock::new(),
        }
    }

    /// The downward closure of the given simplices.
    pub fn from_simplices(simplices: impl IntoIterator<Item = Simplex>) -> Self {
        let mut sets: Vec<BTreeSet<Simplex>> = Vec::new();
        let mut stack: Vec<Simplex> = simplices.into_iter().filter(|s| !s.is_empty()).collect();
        while let Some(s) = stack.pop() {
            let k = s.dim();
            if sets.len() <= k {
                sets.resize_with(k + 1, BTreeSet::new);
            }
            if sets[k].contains(&s) {
                continue;
            }
            stack.extend(s.facets());
            sets[k].insert(s);
        }
        Self::from_levels(sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Highest dimension present, `None` for the empty complex.
    pub fn dim(&self) -> Option<usize> {
        self.levels.len().checked_sub(1)
    }

    /// Size of the largest simplex (1 + max dimension).
    pub fn clique_number(&self) -> usize {
        self.levels.len()
    }

    pub fn simplices(&self, k: usize) -> &[Simplex] {
        self.levels.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, k: usize) -> usize {
        self.simplices(k).len()
    }

    pub fn total_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Vertex ids in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.simplices(0).iter().map(|s| s.0[0])
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.vertices().collect()
    }

    pub fn has_vertex(&self, v: usize) -> bool {
        self.position(&[v]).is_some()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.position(s.vertices()).is_some()
    }

    /// Index of a simplex inside its level.
    pub fn position(&self, sorted_vertices: &[usize]) -> Option<usize> {
        let k = sorted_vertices.len().checked_sub(1)?;
        self.levels
            .get(k)?
            .binary_search_by(|s| s.0.as_slice().cmp(sorted_vertices))
            .ok()
    }

    /// Simplices one dimension up that contain `s`.
    pub fn cofaces<'a>(&'a self, s: &'a Simplex) -> impl Iterator<Item = &'a Simplex> + 'a {
        self.simplices(s.len())
            .iter()
            .filter(move |c| s.0.iter().all(|v| c.contains(*v)))
    }

    /// Removes `v` and every simplex containing it.
    pub fn delete_vertex(&self, v: usize) -> Result<Self> {
        if !self.has_vertex(v) {
            return Err(Error::UnknownVertex(v));
        }
        Ok(self.retain_vertices(|u| u != v))
    }

    /// The full subcomplex induced on the vertices accepted by `keep`.
    pub fn retain_vertices(&self, keep: impl Fn(usize) -> bool) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|level| {
                level
                    .iter()
                    .filter(|s| s.0.iter().all(|&u| keep(u)))
                    .cloned()
                    .collect()
            })
            .collect();
        Self::from_levels(levels)
    }

    /// Keeps the simplices accepted by `keep`. The predicate must be
    /// inherited by faces (a face of an accepted simplex is accepted), or the
    /// result is not closed.
    pub fn retain_simplices(&self, keep: impl Fn(&Simplex) -> bool) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|level| level.iter().filter(|s| keep(s)).cloned().collect())
            .collect();
        Self::from_levels(levels)
    }

    /// The simplices of dimension at most `k`.
    pub fn skeleton(&self, k: usize) -> Self {
        Self::from_levels(self.levels.iter().take(k + 1).cloned().collect())
    }

    pub fn induced(&self, vertices: &BTreeSet<usize>) -> Self {
        self.retain_vertices(|u| vertices.contains(&u))
    }

    /// Flags, per level, the simplices that are a facet of some simplex one
    /// level up. Levels below `from` are left unmarked.
    pub(crate) fn non_maximal_marks(&self, from: usize) -> Vec<Vec<bool>> {
        let mut marks: Vec<Vec<bool>> = self.levels.iter().map(|l| vec![false; l.len()]).collect();
        let mut buf: Vec<usize> = Vec::new();
        for k in from + 1..self.levels.len() {
            for s in &self.levels[k] {
                for skip in 0..s.len() {
                    buf.clear();
                    buf.extend(
                        s.0.iter()
                            .enumerate()
                            .filter(|&(i, _)| i != skip)
                            .map(|(_, &u)| u),
                    );
                    if let Some(i) = self.position(&buf) {
                        marks[k - 1][i] = true;
                    }
                }
            }
        }
        marks
    }

    /// Simplices that are not a face of any other simplex, by decreasing size
    /// and lexicographically within a size.
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        let marks = self.non_maximal_marks(0);
        let mut out = Vec::new();
        for k in (0..self.levels.len()).rev() {
            out.extend(
                self.levels[k]
                    .iter()
                    .zip(&marks[k])
                    .filter(|(_, &m)| !m)
                    .map(|(s, _)| s.clone()),
            );
        }
        out
    }

    /// True if every facet of every stored simplex is stored.
    pub fn is_closed(&self) -> bool {
        self.levels
            .iter()
            .skip(1)
            .flatten()
            .all(|s| s.facets().all(|f| self.contains(&f)))
    }

    /// One simplex per line as space-separated ids, dimension ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in self.levels.iter().flatten() {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the [`to_text`](Self::to_text) format and closes it under faces.
    /// Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut simplices = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let ids = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: e.to_string(),
                })?;
            let s = Simplex::new(ids.iter().copied());
            if s.len() != ids.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: "repeated vertex in simplex".into(),
                });
            }
            simplices.push(s);
        }
        Ok(Self::from_simplices(simplices))
    }

    pub(crate) fn betti_cache(&self) -> &OnceLock<BettiPair> {
        &self.betti
    }
}

/// Undirected neighbor relation over dense ids `0..n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighborLists {
    lists: Vec<BTreeSet<usize>>,
}

impl NeighborLists {
    pub fn new(n: usize) -> Self {
        Self {
            lists: vec![BTreeSet::new(); n],
        }
    }

    /// Builds from raw per-node lists, which may be one-sided.
    pub fn from_lists(lists: Vec<BTreeSet<usize>>) -> Self {
        Self { lists }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn add(&mut self, u: usize, v: usize) {
        self.lists[u].insert(v);
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.lists[v]
    }

    /// Union symmetrization: `u ∈ L(v)` or `v ∈ L(u)` gives the edge. Self-loops and
    /// out-of-range ids are dropped.
    pub fn symmetrized(&self) -> Self {
        let n = self.lists.len();
        let mut out = Self::new(n);
        for (u, l) in self.lists.iter().enumerate() {
            for &v in l {
                if v != u && v < n {
                    out.lists[u].insert(v);
                    out.lists[v].insert(u);
                }
            }
        }
        out
    }
}

/// Dense adjacency with higher-neighbor bitsets for ordered clique expansion.
struct OrderedGraph {
    higher: Vec<BitSet>,
}

impl OrderedGraph {
    fn new(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut higher = vec![BitSet::new(n); n];
        for (u, row) in higher.iter_mut().enumerate() {
            for v in u + 1..n {
                if edge(u, v) {
                    row.insert(v);
                }
            }
        }
        Self { higher }
    }
}

/// Enumerates every simplex of size ≤ `max_size` by depth-first ordered
/// expansion. Candidates extending the current simplex must be higher
/// neighbors of all its vertices and pass `extend(simplex, w)`. Depth-first
/// order in increasing ids emits each level already sorted.
fn expand_complex(
    n: usize,
    graph: &OrderedGraph,
    max_size: usize,
    extend: &dyn Fn(&[usize], usize) -> bool,
) -> SimplicialComplex {
    let mut levels: Vec<Vec<Simplex>> = vec![Vec::new(); max_size.min(n.max(1))];
    let mut stack: Vec<usize> = Vec::new();

    fn recurse(
        graph: &OrderedGraph,
        max_size: usize,
        extend: &dyn Fn(&[usize], usize) -> bool,
        stack: &mut Vec<usize>,
        cand: &BitSet,
        levels: &mut Vec<Vec<Simplex>>,
    ) {
        for w in cand.iter() {
            if !extend(stack, w) {
                continue;
            }
            stack.push(w);
            levels[stack.len() - 1].push(Simplex::from_sorted(stack));
            if stack.len() < max_size {
                let mut next = cand.intersection(&graph.higher[w]);
                next.clear_through(w);
                if !next.is_empty() {
                    recurse(graph, max_size, extend, stack, &next, levels);
                }
            }
            stack.pop();
        }
    }

    if max_size == 0 {
        return SimplicialComplex::empty();
    }
    for v in 0..n {
        stack.push(v);
        levels[0].push(Simplex::from_sorted(&stack));
        if max_size > 1 && !graph.higher[v].is_empty() {
            recurse(
                graph,
                max_size,
                extend,
                &mut stack,
                &graph.higher[v],
                &mut levels,
            );
        }
        stack.pop();
    }
    SimplicialComplex::from_levels(levels)
}

fn max_size(max_dim: Option<usize>) -> usize {
    max_dim.map_or(usize::MAX, |d| d + 1)
}

/// Clique complex of the symmetrized neighbor graph, up to `max_dim` if given.
pub fn rips_from_neighbors(nl: &NeighborLists, max_dim: Option<usize>) -> SimplicialComplex {
    let sym = nl.symmetrized();
    let n = sym.len();
    let graph = OrderedGraph::new(n, |u, v| sym.lists[u].contains(&v));
    expand_complex(n, &graph, max_size(max_dim), &|_, _| true)
}

/// Clique complex of the disk graph: `u ~ v` iff `dist(u, v) < r(u) + r(v)` for
/// the chosen radius role.
pub fn rips_from_disks(ns: &NodeSet, role: RadiusRole) -> SimplicialComplex {
    rips_from_disks_capped(ns, role, None)
}

pub fn rips_from_disks_capped(
    ns: &NodeSet,
    role: RadiusRole,
    max_dim: Option<usize>,
) -> SimplicialComplex {
    let nodes = ns.nodes();
    let graph = OrderedGraph::new(nodes.len(), |u, v| {
        let reach = nodes[u].radius(role) + nodes[v].radius(role);
        nodes[u].pos.dist2(&nodes[v].pos) < reach * reach
    });
    expand_complex(nodes.len(), &graph, max_size(max_dim), &|_, _| true)
}

/// Clique complex of the threshold graph `dist < threshold` over bare points.
pub fn rips_from_points(
    points: &[Point],
    threshold: f64,
    max_dim: Option<usize>,
) -> SimplicialComplex {
    let t2 = threshold * threshold;
    let graph = OrderedGraph::new(points.len(), |u, v| points[u].dist2(&points[v]) < t2);
    expand_complex(points.len(), &graph, max_size(max_dim), &|_, _| true)
}

/// Čech complex with common radius `r` over the node positions.
pub fn cech(ns: &NodeSet, r: f64) -> SimplicialComplex {
    cech_from_points(&ns.positions(), r, None)
}

/// Čech complex: a tuple spans a simplex iff its radius-`r` disks share a point,
/// i.e. the centers' minimum enclosing ball has radius ≤ `r`.
///
/// Edges and triangles are tested directly. In the plane, Helly's theorem
/// makes a larger tuple's disks intersect iff every three of them do, so
/// higher simplices are exactly the tuples whose triangles are all present.
pub fn cech_from_points(points: &[Point], r: f64, max_dim: Option<usize>) -> SimplicialComplex {
    let four_r2 = 4.0 * r * r;
    let graph = OrderedGraph::new(points.len(), |u, v| points[u].dist2(&points[v]) <= four_r2);
    let tri_ok = |a: usize, b: usize, c: usize| {
        min_enclosing_ball_radius(&[points[a], points[b], points[c]]).is_ok_and(|m| m <= r)
    };
    let extend = |stack: &[usize], w: usize| {
        stack.len() < 2
            || stack
                .iter()
                .enumerate()
                .all(|(i, &a)| stack[i + 1..].iter().all(|&b| tri_ok(a, b, w)))
    };
    expand_complex(points.len(), &graph, max_size(max_dim), &extend)
}

/// Čech complex of disks with per-node radii: a tuple spans a simplex iff
/// its disks of the chosen role share a point. Helly's theorem reduces every
/// tuple of four or more to its triangles, as in [`cech_from_points`].
pub fn cech_from_disks(
    ns: &NodeSet,
    role: RadiusRole,
    max_dim: Option<usize>,
) -> SimplicialComplex {
    let nodes = ns.nodes();
    let disk = |v: usize| (nodes[v].pos, nodes[v].radius(role));
    let graph = OrderedGraph::new(nodes.len(), |u, v| {
        let reach = nodes[u].radius(role) + nodes[v].radius(role);
        nodes[u].pos.dist2(&nodes[v].pos) <= reach * reach
    });
    let tri_ok = |a: usize, b: usize, c: usize| disks_share_point(&[disk(a), disk(b), disk(c)]);
    let extend = |stack: &[usize], w: usize| {
        stack.len() < 2
            || stack
                .iter()
                .enumerate()
                .all(|(i, &a)| stack[i + 1..].iter().all(|&b| tri_ok(a, b, w)))
    };
    expand_complex(nodes.len(), &graph, max_size(max_dim), &extend)
}
