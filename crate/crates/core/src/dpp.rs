//! Truncated Ginibre determinantal point process on a square, sampled by
//! Metropolis-Hastings with some points held fixed.
//!
//! The kernel is `K(z, w) = Σ_{k<N} φ_k(z) conj(φ_k(w))` with
//! `φ_k(z) = z^k e^{-|z|²/2} / √(π k!)`. Points of the square are mapped to the
//! kernel's frame by centering and scaling so that the process' intensity
//! `1/π` matches the wanted number of points over the square.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;

/// States whose log-determinant falls below this are treated as impossible.
pub const LOG_DET_FLOOR: f64 = -700.0;

/// Pivots below this fraction of their diagonal entry count as zero.
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GinibreKernel {
    n_modes: usize,
    /// Square side, to center the frame.
    side: f64,
    /// Frame units per square unit.
    scale: f64,
}

impl GinibreKernel {
    pub fn new(n_modes: usize, side: f64, scale: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("the kernel needs at least one mode"));
        }
        if !(side > 0.0 && scale > 0.0 && side.is_finite() && scale.is_finite()) {
            return Err(invalid(format!(
                "kernel side {side} and scale {scale} must be positive"
            )));
        }
        Ok(Self {
            n_modes,
            side,
            scale,
        })
    }

    /// Kernel for `points` points on `[0, side]²`: twice as many modes as
    /// points, scaled so the frame intensity matches `points / side²`.
    pub fn for_points(points: usize, side: f64) -> Result<Self> {
        let n = points.max(1);
        Self::new(2 * n, side, (std::f64::consts::PI * n as f64).sqrt() / side)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn frame(&self, p: &Point) -> Complex64 {
        let h = self.side / 2.0;
        Complex64::new((p.x - h) * self.scale, (p.y - h) * self.scale)
    }

    /// `φ_0(p), …, φ_{N-1}(p)` by the recurrence `φ_k = φ_{k-1} z / √k`.
    pub fn eigenfunctions(&self, p: &Point) -> Vec<Complex64> {
        let z = self.frame(p);
        let mut out = Vec::with_capacity(self.n_modes);
        let mut phi = Complex64::new(
            (-z.norm_sqr() / 2.0).exp() / std::f64::consts::PI.sqrt(),
            0.0,
        );
        out.push(phi);
        for k in 1..self.n_modes {
            phi = phi * z / (k as f64).sqrt();
            out.push(phi);
        }
        out
    }

    pub fn eval(&self, p: &Point, q: &Point) -> Complex64 {
        inner(&self.eigenfunctions(p), &self.eigenfunctions(q))
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `K(p_i, p_j)` over the given points.
pub fn kernel_matrix(k: &GinibreKernel, pts: &[Point]) -> Result<DMatrix<Complex64>> {
    if pts.len() > k.n_modes {
        return Err(Error::TooManyPoints {
            points: pts.len(),
            modes: k.n_modes,
        });
    }
    let phi: Vec<Vec<Complex64>> = pts.iter().map(|p| k.eigenfunctions(p)).collect();
    Ok(DMatrix::from_fn(pts.len(), pts.len(), |i, j| {
        inner(&phi[i], &phi[j])
    }))
}

/// `ln det` of a Hermitian positive semidefinite matrix by Cholesky, or −∞
/// when it is numerically singular or below [`LOG_DET_FLOOR`].
pub fn log_det_hermitian(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut l = DMatrix::<Complex64>::zeros(n, n);
    let mut log_det = 0.0;
    for j in 0..n {
        let diag = m[(j, j)].re;
        let d = diag - (0..j).map(|k| l[(j, k)].norm_sqr()).sum::<f64>();
        if !(d > PIVOT_TOLERANCE * diag) {
            return f64::NEG_INFINITY;
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        log_det += 2.0 * ljj.ln();
        for i in j + 1..n {
            let s: Complex64 = (0..j).map(|k| l[(i, k)] * l[(j, k)].conj()).sum();
            l[(i, j)] = (m[(i, j)] - s) / ljj;
        }
    }
    if log_det < LOG_DET_FLOOR {
        f64::NEG_INFINITY
    } else {
        log_det
    }
}

/// Fixed points and the newly placed ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Placement {
    pub fixed: Vec<Point>,
    pub free: Vec<Point>,
}

/// Metropolis-Hastings chain on the free points, targeting a density
/// proportional to `det K(fixed ∪ free)`.
pub struct ConditionalChain {
    kernel: GinibreKernel,
    side: f64,
    n_fixed: usize,
    points: Vec<Point>,
    phi: Vec<Vec<Complex64>>,
    k: DMatrix<Complex64>,
    log_det: f64,
    proposed: usize,
    accepted: usize,
}

impl ConditionalChain {
    pub fn new(kernel: GinibreKernel, side: f64, fixed: &[Point], free: &[Point]) -> Result<Self> {
        let points: Vec<Point> = fixed.iter().chain(free).copied().collect();
        let k = kernel_matrix(&kernel, &points)?;
        let phi = points.iter().map(|p| kernel.eigenfunctions(p)).collect();
        let log_det = log_det_hermitian(&k);
        Ok(Self {
            kernel,
            side,
            n_fixed: fixed.len(),
            points,
            phi,
            k,
            log_det,
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn free(&self) -> &[Point] {
        &self.points[self.n_fixed..]
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Log-determinant of the state with free point `i` moved to `to`.
    fn proposal(&self, i: usize, to: &Point) -> (Vec<Complex64>, DMatrix<Complex64>, f64) {
        let idx = self.n_fixed + i;
        let row = self.kernel.eigenfunctions(to);
        let mut k = self.k.clone();
        for (j, phi) in self.phi.iter().enumerate() {
            let v = if j == idx {
                inner(&row, &row)
            } else {
                inner(&row, phi)
            };
            k[(idx, j)] = v;
            k[(j, idx)] = v.conj();
        }
        let ld = log_det_hermitian(&k);
        (row, k, ld)
    }

    /// Moves free point `i` to `to` if `u < det(new)/det(old)`.
    ///
    /// A proposal with zero determinant is always rejected. While the current
    /// state itself has zero determinant, any possible proposal is accepted.
    pub fn try_move(&mut self, i: usize, to: Point, u: f64) -> bool {
        self.proposed += 1;
        let (row, k, ld) = self.proposal(i, &to);
        let accept = if ld == f64::NEG_INFINITY {
            false
        } else if self.log_det == f64::NEG_INFINITY {
            true
        } else {
            u.ln() < ld - self.log_det
        };
        if accept {
            let idx = self.n_fixed + i;
            self.points[idx] = to;
            self.phi[idx] = row;
            self.k = k;
            self.log_det = ld;
            self.accepted += 1;
        }
        accept
    }

    /// One proposal: a uniformly chosen free point jumps to a uniform location.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let n_free = self.points.len() - self.n_fixed;
        if n_free == 0 {
            return false;
        }
        let i = rng.random_range(0..n_free);
        let to = Point::new(
            rng.random_range(0.0..self.side),
            rng.random_range(0.0..self.side),
        );
        let u: f64 = rng.random();
        self.try_move(i, to, u)
    }
}

/// Places `n_new` points repelled by each other and by `fixed`.
///
/// Free points start uniform on `[0, side]²`, then `mcmc_steps` single-point
/// proposals run; the final state is returned.
pub fn sample_conditional<R: Rng + ?Sized>(
    kernel: &GinibreKernel,
    fixed: &[Point],
    n_new: usize,
    side: f64,
    mcmc_steps: usize,
    rng: &mut R,
) -> Result<Placement> {
    if fixed.len() + n_new > kernel.n_modes() {
        return Err(Error::TooManyPoints {
            points: fixed.len() + n_new,
            modes: kernel.n_modes(),
        });
    }
    if n_new == 0 {
        return Ok(Placement {
            fixed: fixed.to_vec(),
            free: Vec::new(),
        });
    }
    let start: Vec<Point> = (0..n_new)
        .map(|_| Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect();
    let mut chain = ConditionalChain::new(*kernel, side, fixed, &start)?;
    for _ in 0..mcmc_steps {
        chain.step(rng);
    }
    Ok(Placement {
        fixed: fixed.to_vec(),
        free: chain.free().to_vec(),
    })
}

/// Mean distance from each point to its nearest other point.
pub fn mean_nearest_neighbor(pts: &[Point]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let total: f64 = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.dist(q))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / pts.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn random_points(n: usize, seed: u64) -> Vec<Point> {
        let mut rng = seeded_rng(seed);
        (0..n)
            .map(|_| Point::new(rng.random_range(0.0..2.0), rng.random_range(0.0..2.0)))
            .collect()
    }

    #[test]
    fn diagonal_is_real_positive() {
        let k = GinibreKernel::for_points(5, 2.0).unwrap();
        let v = k.eval(&Point::new(0.3, 1.7), &Point::new(0.3, 1.7));
        assert!(v.re > 0.0 && v.im.abs() < 1e-15);
    }

    #[test]
    fn eigenfunctions_match_closed_form() {
        let k = GinibreKernel::new(6, 2.0, 1.3).unwrap();
        let p = Point::new(1.4, 0.2);
        let z = Complex64::new(0.4 * 1.3, -0.8 * 1.3);
        let phi = k.eigenfunctions(&p);
        let mut fact = 1.0;
        for (n, got) in phi.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let want = z.powu(n as u32) * (-z.norm_sqr() / 2.0).exp()
                / (std::f64::consts::PI * fact).sqrt();
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn coincident_points_give_zero_determinant() {
        let k = GinibreKernel::for_points(3, 2.0).unwrap();
        let p = Point::new(0.7, 0.9);
        let m = kernel_matrix(&k, &[p, Point::new(1.5, 0.2), p]).unwrap();
        assert_eq!(log_det_hermitian(&m), f64::NEG_INFINITY);
    }

    #[test]
    fn too_many_points_is_an_error() {
        let k = GinibreKernel::new(2, 2.0, 1.0).unwrap();
        assert!(matches!(
            kernel_matrix(&k, &random_points(3, 0)),
            Err(Error::TooManyPoints { .. })
        ));
        assert!(
            sample_conditional(&k, &random_points(2, 0), 1, 2.0, 10, &mut seeded_rng(0)).is_err()
        );
    }

    #[test]
    fn kernel_matrices_are_hermitian_psd() {
        for seed in 0..50 {
            let k = GinibreKernel::for_points(5, 2.0).unwrap();
            let m = kernel_matrix(&k, &random_points(5, seed)).unwrap();
            assert!((&m - m.adjoint()).norm() < 1e-12);
            let eig = m.clone().symmetric_eigen();
            let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
            assert!(
                eig.eigenvalues.iter().all(|&l| l >= -1e-9 * top.max(1.0)),
                "seed {seed}"
            );
            // log-determinant agrees with the eigenvalues
            let ld: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
            assert!((ld - log_det_hermitian(&m)).abs() < 1e-6 * ld.abs().max(1.0));
        }
    }

    #[test]
    fn proposal_onto_a_fixed_point_is_rejected() {
        let k = GinibreKernel::for_points(6, 2.0).unwrap();
        let fixed = random_points(4, 1);
        let mut chain = ConditionalChain::new(k, 2.0, &fixed, &random_points(2, 2)).unwrap();
        for (i, f) in fixed.iter().enumerate() {
            assert!(!chain.try_move(i % 2, *f, 1e-300));
        }
        let other = chain.free()[1];
        assert!(!chain.try_move(0, other, 1e-300));
    }

    #[test]
    fn chain_keeps_fixed_points_and_stays_in_square() {
        let k = GinibreKernel::for_points(12, 2.0).unwrap();
        let fixed = random_points(6, 3);
        let mut rng = seeded_rng(4);
        let mut chain = ConditionalChain::new(k, 2.0, &fixed, &random_points(6, 5)).unwrap();
        for _ in 0..500 {
            chain.step(&mut rng);
            assert!(chain.log_det().is_finite());
        }
        assert_eq!(&chain.points[..6], fixed.as_slice());
        assert!(chain
            .free()
            .iter()
            .all(|p| (0.0..2.0).contains(&p.x) && (0.0..2.0).contains(&p.y)));
        assert!(chain.acceptance_rate() > 0.0);
    }

    #[test]
    fn determinant_ignores_relabeling() {
        let k = GinibreKernel::for_points(7, 2.0).unwrap();
        let mut pts = random_points(7, 9);
        let a = log_det_hermitian(&kernel_matrix(&k, &pts).unwrap());
        pts.reverse();
        pts.swap(0, 3);
        let b = log_det_hermitian(&kernel_matrix(&k, &pts).unwrap());
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn zero_new_points() {
        let k = GinibreKernel::for_points(3, 2.0).unwrap();
        let p =
            sample_conditional(&k, &random_points(3, 0), 0, 2.0, 100, &mut seeded_rng(0)).unwrap();
        assert!(p.free.is_empty());
        assert_eq!(p.fixed.len(), 3);
    }

    #[test]
    fn samples_repel_compared_with_uniform_points() {
        let (mut dpp, mut uni) = (0.0, 0.0);
        let k = GinibreKernel::for_points(20, 2.0).unwrap();
        for seed in 0..60 {
            let mut rng = seeded_rng(seed);
            let p = sample_conditional(&k, &[], 20, 2.0, 4000, &mut rng).unwrap();
            dpp += mean_nearest_neighbor(&p.free);
            uni += mean_nearest_neighbor(&random_points(20, 10_000 + seed));
        }
        assert!(dpp > 1.1 * uni, "dpp {dpp} uniform {uni}");
    }
}
