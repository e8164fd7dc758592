//! Index-driven vertex removal that preserves (β0, β1).
//!
//! Each 2-simplex gets a degree: the dimension of the largest simplex that
//! contains it. Each vertex gets an index: the smallest degree among its
//! 2-cofaces, or [`UNREMOVABLE`] when it is flagged or lies in no 2-simplex.
//! The loop draws a uniformly random vertex of maximal index, deletes it
//! tentatively, and either commits the deletion or flags the vertex.
//!
//! [`reduce_with_guards`] exposes the loop with pluggable stop and veto
//! conditions; frequency planning and energy conservation are built on it.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::homology::{betti, BettiPair};

/// Index of flagged vertices and of vertices in no 2-simplex.
pub const UNREMOVABLE: i32 = -1;

/// Degrees of the 2-simplices, aligned with `x.simplices(2)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeTable(Vec<usize>);

impl DegreeTable {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, x: &SimplicialComplex, triangle: &[usize; 3]) -> Option<usize> {
        x.position(triangle).map(|i| self.0[i])
    }
}

pub fn degrees(x: &SimplicialComplex) -> DegreeTable {
    let mut deg = vec![2usize; x.count(2)];
    if x.clique_number() > 3 {
        let marks = x.non_maximal_marks(3);
        for (k, mk) in marks.iter().enumerate().take(x.clique_number()).skip(3) {
            for (s, &covered) in x.simplices(k).iter().zip(mk) {
                if covered {
                    continue;
                }
                for t in s.triangles() {
                    let i = x.position(&t).expect("complex is closed under faces");
                    deg[i] = deg[i].max(k);
                }
            }
        }
    }
    DegreeTable(deg)
}

/// Vertex indices, aligned with `x.simplices(0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTable {
    vertices: Vec<usize>,
    index: Vec<i32>,
}

impl IndexTable {
    pub fn get(&self, v: usize) -> Option<i32> {
        self.vertices.binary_search(&v).ok().map(|i| self.index[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.vertices
            .iter()
            .copied()
            .zip(self.index.iter().copied())
    }

    /// Largest index, [`UNREMOVABLE`] for an empty table.
    pub fn max(&self) -> i32 {
        self.index.iter().copied().max().unwrap_or(UNREMOVABLE)
    }

    /// Vertices carrying `value`, ascending.
    pub fn with_index(&self, value: i32) -> Vec<usize> {
        self.iter()
            .filter(|&(_, i)| i == value)
            .map(|(v, _)| v)
            .collect()
    }

    fn mark_unremovable(&mut self, v: usize) {
        if let Ok(i) = self.vertices.binary_search(&v) {
            self.index[i] = UNREMOVABLE;
        }
    }
}

pub fn indices(x: &SimplicialComplex, deg: &DegreeTable, flags: &BTreeSet<usize>) -> IndexTable {
    let vertices: Vec<usize> = x.vertices().collect();
    let mut index = vec![i32::MAX; vertices.len()];
    for (t, &d) in x.simplices(2).iter().zip(deg.as_slice()) {
        for &v in t.vertices() {
            let i = vertices
                .binary_search(&v)
                .expect("triangle vertex is a vertex");
            index[i] = index[i].min(d as i32);
        }
    }
    for (v, i) in vertices.iter().zip(index.iter_mut()) {
        if *i == i32::MAX || flags.contains(v) {
            *i = UNREMOVABLE;
        }
    }
    IndexTable { vertices, index }
}

/// What the guard sees before each draw.
pub struct ReductionState<'a> {
    pub complex: &'a SimplicialComplex,
    pub indices: &'a IndexTable,
    pub flags: &'a BTreeSet<usize>,
    pub removed: &'a [usize],
}

/// Caller hooks for [`reduce_with_guards`].
pub trait ReductionGuard {
    /// Ends the loop before the next draw.
    fn stop(&mut self, _state: &ReductionState<'_>) -> bool {
        false
    }

    /// Rejects removing `candidate`, given the complex without it. A vetoed
    /// candidate is flagged unremovable.
    fn veto(
        &mut self,
        _state: &ReductionState<'_>,
        _candidate: usize,
        _without: &SimplicialComplex,
    ) -> bool {
        false
    }

    fn committed(&mut self, _vertex: usize) {}
}

/// Vetoes any removal that changes (β0, β1).
pub struct BettiGuard {
    target: BettiPair,
}

impl BettiGuard {
    pub fn new(target: BettiPair) -> Self {
        Self { target }
    }

    pub fn of(x: &SimplicialComplex) -> Self {
        Self::new(betti(x))
    }
}

impl ReductionGuard for BettiGuard {
    fn veto(&mut self, _: &ReductionState<'_>, _: usize, without: &SimplicialComplex) -> bool {
        betti(without) != self.target
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceAction {
    Removed,
    Flagged,
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceAction::Removed => "removed",
            TraceAction::Flagged => "flagged",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub step: usize,
    pub vertex: usize,
    pub index: i32,
    pub action: TraceAction,
    /// Betti numbers of the complex after the step.
    pub betti: BettiPair,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.step, self.vertex, self.index, self.action, self.betti.beta0, self.betti.beta1
        )
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReductionOptions {
    /// Candidates need an index of at least this value.
    pub min_index: i32,
    pub trace: bool,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            min_index: 3,
            trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub complex: SimplicialComplex,
    /// Removed vertices in removal order.
    pub removed: Vec<usize>,
    /// Input flags plus every vertex flagged during the run.
    pub flags: BTreeSet<usize>,
    pub trace: Vec<TraceStep>,
}

/// Removes maximal-index vertices while keeping (β0, β1), never touching `flags`.
pub fn reduce<R: Rng + ?Sized>(
    x: &SimplicialComplex,
    flags: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<Reduction> {
    reduce_with_guards(
        x,
        flags,
        rng,
        &mut BettiGuard::of(x),
        ReductionOptions::default(),
    )
}

/// The reduction loop with caller-supplied guards.
///
/// Before each draw: stop if `guard.stop` says so or if the maximal index is
/// below `opts.min_index`. Otherwise draw a uniformly random vertex among
/// those with the maximal index, build the complex without it, and either flag
/// it (veto) or commit and recompute degrees and indices from scratch.
pub fn reduce_with_guards<R, G>(
    x: &SimplicialComplex,
    flags: &BTreeSet<usize>,
    rng: &mut R,
    guard: &mut G,
    opts: ReductionOptions,
) -> Result<Reduction>
where
    R: Rng + ?Sized,
    G: ReductionGuard + ?Sized,
{
    if let Some(&bad) = flags.iter().find(|&&v| !x.has_vertex(v)) {
        return Err(Error::UnknownVertex(bad));
    }
    let mut current = x.clone();
    let mut flags = flags.clone();
    let mut removed = Vec::new();
    let mut trace = Vec::new();
    let mut idx = indices(&current, &degrees(&current), &flags);

    loop {
        let state = ReductionState {
            complex: &current,
            indices: &idx,
            flags: &flags,
            removed: &removed,
        };
        if guard.stop(&state) {
            break;
        }
        let imax = idx.max();
        if imax < opts.min_index || imax == UNREMOVABLE {
            break;
        }
        let candidates = idx.with_index(imax);
        let w = candidates[rng.random_range(0..candidates.len())];
        let without = current.delete_vertex(w)?;

        let action = if guard.veto(&state, w, &without) {
            flags.insert(w);
            idx.mark_unremovable(w);
            TraceAction::Flagged
        } else {
            current = without;
            removed.push(w);
            guard.committed(w);
            idx = indices(&current, &degrees(&current), &flags);
            TraceAction::Removed
        };
        if opts.trace {
            trace.push(TraceStep {
                step: trace.len(),
                vertex: w,
                index: imax,
                action,
                betti: betti(&current),
            });
        }
    }

    Ok(Reduction {
        complex: current,
        removed,
        flags,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{rips_from_disks, rips_from_neighbors, NeighborLists, Simplex};
    use crate::geometry::{
        assign_radii_uniform, default_max_radius, make_boundary, sample_poisson, BoundaryMode,
        RadiusRole,
    };
    use crate::seeded_rng;
    use proptest::prelude::*;

    fn from(simplices: &[&[usize]]) -> SimplicialComplex {
        SimplicialComplex::from_simplices(simplices.iter().map(|s| Simplex::new(s.iter().copied())))
    }

    fn none() -> BTreeSet<usize> {
        BTreeSet::new()
    }

    /// Oracle: degree by scanning every simplex of every dimension for containment.
    fn brute_degrees(x: &SimplicialComplex) -> Vec<usize> {
        x.simplices(2)
            .iter()
            .map(|t| {
                (2..x.clique_number())
                    .filter(|&k| {
                        x.simplices(k)
                            .iter()
                            .any(|s| t.vertices().iter().all(|&v| s.contains(v)))
                    })
                    .max()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn degree_fixtures() {
        assert_eq!(degrees(&from(&[&[0, 1, 2]])).as_slice(), &[2]);
        assert!(degrees(&from(&[&[0, 1, 2, 3]]))
            .as_slice()
            .iter()
            .all(|&d| d == 3));
        let k5 = from(&[&[0, 1, 2, 3, 4]]);
        assert_eq!(degrees(&k5).as_slice(), brute_degrees(&k5).as_slice());
        assert!(degrees(&k5).as_slice().iter().all(|&d| d == 4));
    }

    #[test]
    fn index_fixtures() {
        let k4 = from(&[&[0, 1, 2, 3]]);
        let idx = indices(&k4, &degrees(&k4), &none());
        assert!(idx.iter().all(|(_, i)| i == 3));

        let tri = from(&[&[0, 1, 2]]);
        let idx = indices(&tri, &degrees(&tri), &BTreeSet::from([1]));
        assert_eq!(
            idx.iter().collect::<Vec<_>>(),
            vec![(0, 2), (1, -1), (2, 2)]
        );

        // vertex 0 sits in a lone triangle (degree 2) and in a tetrahedron (degree 3)
        let mixed = from(&[&[0, 1, 2], &[0, 3, 4, 5]]);
        let deg = degrees(&mixed);
        assert_eq!(deg.as_slice(), brute_degrees(&mixed).as_slice());
        let idx = indices(&mixed, &deg, &none());
        assert_eq!(idx.get(0), Some(2));
        assert_eq!(idx.get(3), Some(3));

        let edge = from(&[&[0, 1]]);
        assert_eq!(indices(&edge, &degrees(&edge), &none()).max(), UNREMOVABLE);
    }

    #[test]
    fn degrees_match_brute_force_on_random_complexes() {
        use rand::Rng;
        for seed in 0..40 {
            let mut rng = seeded_rng(seed);
            let n = 12;
            let mut nl = NeighborLists::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.55) {
                        nl.add(u, v);
                    }
                }
            }
            let x = rips_from_neighbors(&nl, None);
            assert_eq!(degrees(&x).as_slice(), brute_degrees(&x).as_slice());
        }
    }

    #[test]
    fn lone_triangle_is_left_alone() {
        let tri = from(&[&[0, 1, 2]]);
        let r = reduce(&tri, &none(), &mut seeded_rng(0)).unwrap();
        assert!(r.removed.is_empty());
        assert_eq!(r.complex, tri);
    }

    #[test]
    fn k4_loses_exactly_one_vertex() {
        let k4 = from(&[&[0, 1, 2, 3]]);
        for seed in 0..20 {
            let r = reduce(&k4, &none(), &mut seeded_rng(seed)).unwrap();
            assert_eq!(r.removed.len(), 1);
            assert_eq!(betti(&r.complex), BettiPair::new(1, 0));
            assert_eq!(r.complex.clique_number(), 3);
        }
    }

    #[test]
    fn guards_always_stop_and_always_veto() {
        struct Stop;
        impl ReductionGuard for Stop {
            fn stop(&mut self, _: &ReductionState<'_>) -> bool {
                true
            }
        }
        struct Veto;
        impl ReductionGuard for Veto {
            fn veto(&mut self, _: &ReductionState<'_>, _: usize, _: &SimplicialComplex) -> bool {
                true
            }
        }
        let k5 = from(&[&[0, 1, 2, 3, 4]]);
        let r = reduce_with_guards(
            &k5,
            &none(),
            &mut seeded_rng(1),
            &mut Stop,
            ReductionOptions::default(),
        )
        .unwrap();
        assert_eq!(r.complex, k5);
        let r = reduce_with_guards(
            &k5,
            &none(),
            &mut seeded_rng(1),
            &mut Veto,
            ReductionOptions::default(),
        )
        .unwrap();
        assert!(r.removed.is_empty());
        assert_eq!(r.flags.len(), 5);
    }

    fn scenario(seed: u64) -> (SimplicialComplex, BTreeSet<usize>) {
        let mut rng = seeded_rng(seed);
        let ns = sample_poisson(12.0, 2.0, &mut rng).unwrap();
        let ns = assign_radii_uniform(ns, 0.2, default_max_radius(12.0), &mut rng).unwrap();
        let ns = make_boundary(ns, BoundaryMode::ConvexHull).unwrap();
        (rips_from_disks(&ns, RadiusRole::Comm), ns.boundary_ids())
    }

    #[test]
    fn reduce_equals_guarded_form() {
        struct IndexStop(BettiGuard);
        impl ReductionGuard for IndexStop {
            fn stop(&mut self, s: &ReductionState<'_>) -> bool {
                s.indices.max() <= 2
            }
            fn veto(&mut self, s: &ReductionState<'_>, c: usize, w: &SimplicialComplex) -> bool {
                self.0.veto(s, c, w)
            }
        }
        for seed in 0..10 {
            let (x, flags) = scenario(seed);
            let a = reduce(&x, &flags, &mut seeded_rng(99)).unwrap();
            let mut g = IndexStop(BettiGuard::of(&x));
            let b = reduce_with_guards(
                &x,
                &flags,
                &mut seeded_rng(99),
                &mut g,
                ReductionOptions {
                    min_index: i32::MIN,
                    trace: false,
                },
            )
            .unwrap();
            assert_eq!(a.removed, b.removed);
            assert_eq!(a.complex, b.complex);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn reduce_invariants_on_poisson_scenarios(seed in 0u64..1_000_000) {
            let (x, flags) = scenario(seed);
            let r = reduce(&x, &flags, &mut seeded_rng(seed + 1000)).unwrap();
            prop_assert_eq!(betti(&r.complex), betti(&x));
            prop_assert!(r.removed.iter().all(|v| !flags.contains(v)));
            prop_assert!(r.removed.len() <= x.count(0) - flags.len());
            // recomputed tables equal fresh ones; the loop stopped at I_max <= 2
            let idx = indices(&r.complex, &degrees(&r.complex), &r.flags);
            prop_assert!(idx.max() <= 2);
            let again = reduce(&r.complex, &r.flags, &mut seeded_rng(seed)).unwrap();
            prop_assert!(again.removed.is_empty());
        }
    }

    #[test]
    fn unknown_flag_is_rejected() {
        let tri = from(&[&[0, 1, 2]]);
        assert!(matches!(
            reduce(&tri, &BTreeSet::from([9]), &mut seeded_rng(0)),
            Err(Error::UnknownVertex(9))
        ));
    }

    #[test]
    fn trace_lines() {
        let k4 = from(&[&[0, 1, 2, 3]]);
        let r = reduce_with_guards(
            &k4,
            &none(),
            &mut seeded_rng(3),
            &mut BettiGuard::of(&k4),
            ReductionOptions {
                trace: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.trace.len(), 1);
        let line = r.trace[0].to_string();
        assert!(
            line.starts_with("0 ") && line.ends_with(" 3 removed 1 0"),
            "{line}"
        );
    }
}
