//! Betti numbers β0 and β1 over GF(2).
//!
//! `β0 = s0 − rank ∂1` and `β1 = s1 − rank ∂1 − rank ∂2`, where `s_k` counts
//! k-simplices and `∂k` is the boundary operator from k-chains to
//! (k−1)-chains. Simplices of dimension three and up never enter: they do not
//! change `ker ∂1` or `im ∂2`.

use crate::bits::words_for;
use crate::complex::SimplicialComplex;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BettiPair {
    /// Connected components.
    pub beta0: usize,
    /// Independent one-dimensional holes: coverage holes in the plane.
    pub beta1: usize,
}

impl BettiPair {
    pub const fn new(beta0: usize, beta1: usize) -> Self {
        Self { beta0, beta1 }
    }

    /// One component and no hole.
    pub fn is_patched(&self) -> bool {
        self.beta0 == 1 && self.beta1 == 0
    }
}

impl std::fmt::Display for BettiPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.beta0, self.beta1)
    }
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            bits: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        self.bits[r * self.stride + c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.bits[r * self.stride + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    /// Number of ones in column `c`.
    pub fn column_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }
}

/// The boundary operator `∂k`: rows are (k−1)-simplices, columns are k-simplices,
/// both in the complex's canonical order. Requires `k ≥ 1`.
pub fn boundary_matrix(x: &SimplicialComplex, k: usize) -> BitMatrix {
    assert!(k >= 1, "boundary_matrix needs k >= 1");
    let cols = x.simplices(k);
    let mut m = BitMatrix::zeros(x.count(k - 1), cols.len());
    let mut face: Vec<usize> = Vec::with_capacity(k);
    for (c, s) in cols.iter().enumerate() {
        let v = s.vertices();
        for skip in 0..v.len() {
            face.clear();
            face.extend(
                v.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &u)| u),
            );
            let r = x.position(&face).expect("complex is closed under faces");
            m.set(r, c, true);
        }
    }
    m
}

/// Rank over GF(2) by forward elimination.
pub fn rank_gf2(m: &BitMatrix) -> usize {
    let mut bits = m.bits.clone();
    let stride = m.stride;
    let mut rank = 0;
    for c in 0..m.cols {
        if rank == m.rows {
            break;
        }
        let (w, mask) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..m.rows).find(|&r| bits[r * stride + w] & mask != 0) else {
            continue;
        };
        if p != rank {
            for i in w..stride {
                bits.swap(p * stride + i, rank * stride + i);
            }
        }
        let (head, tail) = bits.split_at_mut((rank + 1) * stride);
        let pivot = &head[rank * stride..];
        for row in tail.chunks_exact_mut(stride) {
            if row[w] & mask != 0 {
                for i in w..stride {
                    row[i] ^= pivot[i];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Ranks of `∂1` and `∂2`.
pub fn boundary_ranks(x: &SimplicialComplex) -> (usize, usize) {
    let r1 = if x.count(1) > 0 {
        rank_gf2(&boundary_matrix(x, 1))
    } else {
        0
    };
    let r2 = if x.count(2) > 0 {
        rank_gf2(&boundary_matrix(x, 2))
    } else {
        0
    };
    (r1, r2)
}

/// (β0, β1) by rank-nullity; memoized on the complex.
pub fn betti(x: &SimplicialComplex) -> BettiPair {
    *x.betti_cache().get_or_init(|| {
        let (r1, r2) = boundary_ranks(x);
        BettiPair {
            beta0: x.count(0) - r1,
            beta1: x.count(1) - r1 - r2,
        }
    })
}

/// Connected components of the 1-skeleton by union-find.
pub fn beta0_unionfind(x: &SimplicialComplex) -> usize {
    let verts = x.simplices(0);
    let index = |v: usize| x.position(&[v]).expect("edge endpoint is a vertex");
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut components = verts.len();
    for e in x.simplices(1) {
        let a = find(&mut parent, index(e.vertices()[0]));
        let b = find(&mut parent, index(e.vertices()[1]));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{rips_from_neighbors, NeighborLists, Simplex};
    use crate::seeded_rng;
    use rand::Rng;

    fn from(simplices: &[&[usize]]) -> SimplicialComplex {
        SimplicialComplex::from_simplices(simplices.iter().map(|s| Simplex::new(s.iter().copied())))
    }

    /// Independent oracle: Gaussian elimination on `Vec<Vec<bool>>`, pivoting by rows.
    fn naive_rank(m: &BitMatrix) -> usize {
        let mut a: Vec<Vec<bool>> = (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
            .collect();
        let mut rank = 0;
        let (rows, cols) = (m.rows(), m.cols());
        let mut col = 0;
        while rank < rows && col < cols {
            if let Some(p) = (rank..rows).find(|&r| a[r][col]) {
                a.swap(rank, p);
                for r in 0..rows {
                    if r != rank && a[r][col] {
                        let pivot = a[rank].clone();
                        for (x, v) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                            *x ^= v;
                        }
                    }
                }
                rank += 1;
            }
            col += 1;
        }
        rank
    }

    #[test]
    fn triangle_boundary_is_all_ones() {
        let x = from(&[&[0, 1, 2]]);
        let d2 = boundary_matrix(&x, 2);
        assert_eq!((d2.rows(), d2.cols()), (3, 1));
        assert!((0..3).all(|r| d2.get(r, 0)));
    }

    #[test]
    fn path_incidence() {
        let x = from(&[&[0, 1], &[1, 2]]);
        let d1 = boundary_matrix(&x, 1);
        assert_eq!((d1.rows(), d1.cols()), (3, 2));
        assert!((0..2).all(|c| d1.column_weight(c) == 2));
    }

    #[test]
    fn k4_second_boundary() {
        let x = from(&[&[0, 1, 2, 3]]);
        let d2 = boundary_matrix(&x, 2);
        assert_eq!((d2.rows(), d2.cols()), (6, 4));
        assert!((0..4).all(|c| d2.column_weight(c) == 3));
        assert_eq!(rank_gf2(&d2), 3);
        assert_eq!(naive_rank(&d2), 3);
    }

    #[test]
    fn no_k_simplices_gives_empty_columns() {
        let x = from(&[&[0, 1]]);
        let d2 = boundary_matrix(&x, 2);
        assert_eq!((d2.rows(), d2.cols()), (1, 0));
        assert_eq!(rank_gf2(&d2), 0);
    }

    #[test]
    fn rank_trivial_cases() {
        assert_eq!(rank_gf2(&BitMatrix::zeros(7, 5)), 0);
        for n in [1, 63, 64, 65, 130] {
            assert_eq!(rank_gf2(&BitMatrix::identity(n)), n);
        }
    }

    #[test]
    fn rank_matches_naive_on_random_matrices() {
        let mut rng = seeded_rng(42);
        for trial in 0..200 {
            let (rows, cols) = if trial < 100 {
                (20, 20)
            } else {
                (rng.random_range(1..90), rng.random_range(1..150))
            };
            let density = rng.random_range(0.05..0.6);
            let mut m = BitMatrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    if rng.random_bool(density) {
                        m.set(r, c, true);
                    }
                }
            }
            assert_eq!(rank_gf2(&m), naive_rank(&m), "trial {trial}");
        }
    }

    #[test]
    fn betti_fixtures() {
        assert_eq!(betti(&from(&[&[0, 1, 2]])), BettiPair::new(1, 0));
        assert_eq!(
            betti(&from(&[&[0, 1], &[1, 2], &[2, 3], &[0, 3]])),
            BettiPair::new(1, 1)
        );
        assert_eq!(
            betti(&from(&[&[0, 1, 2], &[3, 4, 5]])),
            BettiPair::new(2, 0)
        );
        assert_eq!(betti(&from(&[&[0, 1, 2, 3]])), BettiPair::new(1, 0));
        assert_eq!(betti(&SimplicialComplex::empty()), BettiPair::new(0, 0));
    }

    #[test]
    fn hollow_tetrahedron_has_no_one_cycle() {
        // β2 = 1 here, which must not leak into β1
        let x = from(&[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]]);
        assert_eq!(betti(&x), BettiPair::new(1, 0));
    }

    #[test]
    fn union_find_cases() {
        assert_eq!(beta0_unionfind(&from(&[&[0], &[1], &[2], &[3], &[4]])), 5);
        assert_eq!(beta0_unionfind(&from(&[&[0, 1], &[1, 2], &[2, 3]])), 1);
    }

    fn random_complex(seed: u64) -> SimplicialComplex {
        let mut rng = seeded_rng(seed);
        let n = rng.random_range(1..=50);
        let p = rng.random_range(0.0..0.25);
        let mut nl = NeighborLists::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    nl.add(u, v);
                }
            }
        }
        rips_from_neighbors(&nl, Some(3))
    }

    #[test]
    fn union_find_agrees_with_rank_and_euler_identity_holds() {
        for seed in 0..150 {
            let x = random_complex(seed);
            let b = betti(&x);
            assert_eq!(beta0_unionfind(&x), b.beta0);
            let (_, r2) = boundary_ranks(&x);
            assert_eq!(
                b.beta0 as i64 - b.beta1 as i64,
                x.count(0) as i64 - x.count(1) as i64 + r2 as i64
            );
        }
    }

    #[test]
    fn deleting_an_isolated_vertex_drops_beta0_by_one() {
        for seed in 0..60 {
            let x = random_complex(1000 + seed);
            let isolated: Vec<usize> = x
                .vertices()
                .filter(|&v| !x.simplices(1).iter().any(|e| e.contains(v)))
                .collect();
            let Some(&v) = isolated.first() else { continue };
            let before = betti(&x);
            let after = betti(&x.delete_vertex(v).unwrap());
            assert_eq!(after.beta0 + 1, before.beta0);
            assert_eq!(after.beta1, before.beta1);
        }
    }
}
