//! Planar primitives, node-set sampling, and the disk predicates that feed
//! complex construction.
//!
//! Node ids are dense: the id of a node is its position in the [`NodeSet`].

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Which of a node's radii a construction reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusRole {
    Comm,
    Cov,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub pos: Point,
    pub r_comm: f64,
    pub r_cov: f64,
    /// Interference radius: other nodes inside this disk conflict with this one.
    pub r_rej: f64,
    /// Boundary nodes delimit the area and are never switched off.
    pub boundary: bool,
}

impl Node {
    pub fn at(pos: Point) -> Self {
        Self {
            pos,
            r_comm: 0.0,
            r_cov: 0.0,
            r_rej: 0.0,
            boundary: false,
        }
    }

    pub fn radius(&self, role: RadiusRole) -> f64 {
        match role {
            RadiusRole::Comm => self.r_comm,
            RadiusRole::Cov => self.r_cov,
        }
    }
}

/// Nodes deployed on the square `[0, side]²`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    side: f64,
    nodes: Vec<Node>,
}

impl NodeSet {
    pub fn new(side: f64) -> Self {
        Self {
            side,
            nodes: Vec::new(),
        }
    }

    pub fn from_nodes(side: f64, nodes: Vec<Node>) -> Self {
        Self { side, nodes }
    }

    /// Plain nodes at the given positions with every radius set to `radius`.
    pub fn from_points(side: f64, points: &[Point], radius: f64) -> Self {
        let nodes = points
            .iter()
            .map(|&pos| Node {
                pos,
                r_comm: radius,
                r_cov: radius,
                r_rej: radius / 2.0,
                boundary: false,
            })
            .collect();
        Self { side, nodes }
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&Node> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: usize) -> Result<&mut Node> {
        self.nodes.get_mut(id).ok_or(Error::UnknownNode(id))
    }

    /// Appends a node and returns its id.
    pub fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.pos).collect()
    }

    pub fn boundary_ids(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.boundary)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn interior_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.boundary).count()
    }

    /// Overrides every coverage radius with `factor` times the communication radius.
    pub fn set_cov_from_comm(&mut self, factor: f64) {
        for n in &mut self.nodes {
            n.r_cov = n.r_comm * factor;
        }
    }

    /// Sets one common coverage radius on every node.
    pub fn set_common_cov(&mut self, r: f64) {
        for n in &mut self.nodes {
            n.r_cov = r;
        }
    }

    /// Σ r_cov², the transmit-energy proxy used in reports.
    pub fn coverage_energy(&self) -> f64 {
        self.nodes.iter().map(|n| n.r_cov * n.r_cov).sum()
    }

    /// Checks the structural invariants: finite positions, non-negative
    /// radii, `r_rej ≤ r_comm`, and interior nodes inside the square.
    pub fn validate(&self) -> Result<()> {
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(invalid(format!("side must be positive, got {}", self.side)));
        }
        let eps = 1e-9 * self.side;
        for (id, n) in self.nodes.iter().enumerate() {
            if !n.pos.is_finite() {
                return Err(invalid(format!("node {id} has a non-finite position")));
            }
            if n.r_comm < 0.0 || n.r_cov < 0.0 || n.r_rej < 0.0 {
                return Err(invalid(format!("node {id} has a negative radius")));
            }
            if n.r_rej > n.r_comm + eps {
                return Err(invalid(format!("node {id}: r_rej exceeds r_comm")));
            }
            let inside = (-eps..=self.side + eps).contains(&n.pos.x)
                && (-eps..=self.side + eps).contains(&n.pos.y);
            if !inside && !n.boundary {
                return Err(invalid(format!("node {id} lies outside the square")));
            }
        }
        Ok(())
    }
}

/// Homogeneous Poisson process of `intensity` points per unit area on `[0, side]²`.
/// Radii are left at zero.
pub fn sample_poisson<R: Rng + ?Sized>(intensity: f64, side: f64, rng: &mut R) -> Result<NodeSet> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(invalid(format!(
            "intensity must be positive, got {intensity}"
        )));
    }
    if !(side > 0.0 && side.is_finite()) {
        return Err(invalid(format!("side must be positive, got {side}")));
    }
    let mean = intensity * side * side;
    let count = Poisson::new(mean)
        .map_err(|e| invalid(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    let nodes = (0..count)
        .map(|_| {
            let x = rng.random_range(0.0..side);
            let y = rng.random_range(0.0..side);
            Node::at(Point::new(x, y))
        })
        .collect();
    Ok(NodeSet { side, nodes })
}

/// Upper end of the radius range for a process of the given intensity, `2/√(πλ)`.
pub fn default_max_radius(intensity: f64) -> f64 {
    2.0 / (PI * intensity).sqrt()
}

/// Draws every communication radius uniformly on `[lo, hi]`; rejection and
/// coverage radii are set to half of it.
pub fn assign_radii_uniform<R: Rng + ?Sized>(
    mut ns: NodeSet,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<NodeSet> {
    if !(lo > 0.0) || lo > hi || !hi.is_finite() {
        return Err(invalid(format!(
            "radius range [{lo}, {hi}] is empty or non-positive"
        )));
    }
    for n in &mut ns.nodes {
        let r = rng.random_range(lo..=hi);
        n.r_comm = r;
        n.r_rej = r / 2.0;
        n.r_cov = r / 2.0;
    }
    Ok(ns)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryMode {
    /// Flag the existing nodes on the convex hull.
    ConvexHull,
    /// Append fictional nodes along the square's perimeter, at most `spacing`
    /// apart, each with coverage radius `radius`.
    SquarePerimeter { spacing: f64, radius: f64 },
}

pub fn make_boundary(mut ns: NodeSet, mode: BoundaryMode) -> Result<NodeSet> {
    match mode {
        BoundaryMode::ConvexHull => {
            let pts = ns.positions();
            for id in convex_hull(&pts)? {
                ns.nodes[id].boundary = true;
            }
        }
        BoundaryMode::SquarePerimeter { spacing, radius } => {
            if !(spacing > 0.0) {
                return Err(invalid(format!(
                    "boundary spacing must be positive, got {spacing}"
                )));
            }
            if radius < 0.0 {
                return Err(invalid("boundary radius must be non-negative"));
            }
            for pos in perimeter_points(ns.side, spacing) {
                ns.nodes.push(Node {
                    pos,
                    r_comm: 2.0 * radius,
                    r_cov: radius,
                    r_rej: radius,
                    boundary: true,
                });
            }
        }
    }
    Ok(ns)
}

/// Evenly spaced points around the square, corners included, counter-clockwise from the origin.
pub fn perimeter_points(side: f64, spacing: f64) -> Vec<Point> {
    let per_side = ((side / spacing) - 1e-9).ceil().max(1.0) as usize;
    let step = side / per_side as f64;
    let mut out = Vec::with_capacity(4 * per_side);
    for i in 0..per_side {
        out.push(Point::new(i as f64 * step, 0.0));
    }
    for i in 0..per_side {
        out.push(Point::new(side, i as f64 * step));
    }
    for i in 0..per_side {
        out.push(Point::new(side - i as f64 * step, side));
    }
    for i in 0..per_side {
        out.push(Point::new(0.0, side - i as f64 * step));
    }
    out
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Indices of the strict convex-hull vertices (collinear edge points excluded),
/// via Andrew's monotone chain.
pub fn convex_hull(pts: &[Point]) -> Result<Vec<usize>> {
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "convex hull needs at least 3 nodes, got {}",
            pts.len()
        )));
    }
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| {
        pts[i]
            .x
            .total_cmp(&pts[j].x)
            .then(pts[i].y.total_cmp(&pts[j].y))
    });
    order.dedup_by(|a, b| pts[*a] == pts[*b]);

    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let seq: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(order.iter())
        } else {
            Box::new(order.iter().rev())
        };
        for &i in seq {
            while hull.len() >= start + 2
                && cross(
                    &pts[hull[hull.len() - 2]],
                    &pts[hull[hull.len() - 1]],
                    &pts[i],
                ) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Degenerate("all nodes are collinear".into()));
    }
    hull.sort_unstable();
    Ok(hull)
}

fn circumcircle(a: &Point, b: &Point, c: &Point) -> Option<(Point, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let scale = a.dist2(b).max(b.dist2(c)).max(a.dist2(c));
    if d.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point::new(ux, uy);
    Some((center, center.dist(a)))
}

/// Radius of the smallest disk containing 1 to 4 points.
///
/// Equal-radius disks around the points share a common point exactly when
/// this radius is at most their radius. The optimum is always the diametral
/// circle of some pair or the circumcircle of some triple, so all candidates
/// are enumerated.
pub fn min_enclosing_ball_radius(pts: &[Point]) -> Result<f64> {
    match pts.len() {
        0 => Err(invalid("minimum enclosing ball of an empty point set")),
        1 => Ok(0.0),
        n if n > 4 => Err(invalid(format!(
            "minimum enclosing ball supports at most 4 points, got {n}"
        ))),
        _ => {
            let scale = pts
                .iter()
                .map(|p| p.x.abs().max(p.y.abs()))
                .fold(1.0, f64::max);
            let tol = 1e-12 * scale;
            let encloses = |c: &Point, r: f64| pts.iter().all(|p| p.dist(c) <= r + tol);
            let mut best = f64::INFINITY;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let c = Point::new((pts[i].x + pts[j].x) / 2.0, (pts[i].y + pts[j].y) / 2.0);
                    let r = pts[i].dist(&pts[j]) / 2.0;
                    if r < best && encloses(&c, r) {
                        best = r;
                    }
                    for k in j + 1..pts.len() {
                        if let Some((c, r)) = circumcircle(&pts[i], &pts[j], &pts[k]) {
                            if r < best && encloses(&c, r) {
                                best = r;
                            }
                        }
                    }
                }
            }
            Ok(best)
        }
    }
}

/// True if the closed disks share a point.
///
/// A non-empty intersection of disks has a lowest point, which is either the
/// lowest point of one disk or a crossing of two boundary circles, so only
/// those candidates are tested.
pub fn disks_share_point(disks: &[(Point, f64)]) -> bool {
    let scale = disks
        .iter()
        .map(|(p, r)| p.x.abs().max(p.y.abs()).max(*r))
        .fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let inside = |q: &Point| disks.iter().all(|(c, r)| c.dist(q) <= r + tol);
    for (c, r) in disks {
        if inside(&Point::new(c.x, c.y - r)) {
            return true;
        }
    }
    for (i, (a, ra)) in disks.iter().enumerate() {
        for (b, rb) in &disks[i + 1..] {
            let d = a.dist(b);
            if d == 0.0 || d > ra + rb + tol || d < (ra - rb).abs() - tol {
                continue;
            }
            // distance from a to the chord, then half the chord length
            let l = ((ra * ra - rb * rb + d * d) / (2.0 * d)).clamp(-ra, *ra);
            let h = (ra * ra - l * l).max(0.0).sqrt();
            let (ux, uy) = ((b.x - a.x) / d, (b.y - a.y) / d);
            let (mx, my) = (a.x + l * ux, a.y + l * uy);
            for s in [-1.0, 1.0] {
                if inside(&Point::new(mx - s * h * uy, my + s * h * ux)) {
                    return true;
                }
            }
        }
    }
    false
}

/// Displaces the selected nodes by i.i.d. `N(0, sigma²)` per coordinate.
///
/// Draws happen in ascending id order, x before y.
pub fn perturb_gaussian<R: Rng + ?Sized>(
    mut ns: NodeSet,
    which: &[usize],
    sigma: f64,
    rng: &mut R,
) -> Result<NodeSet> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("sigma must be non-negative, got {sigma}")));
    }
    let ids: BTreeSet<usize> = which.iter().copied().collect();
    if let Some(&bad) = ids.iter().find(|&&id| id >= ns.len()) {
        return Err(Error::UnknownNode(bad));
    }
    if sigma == 0.0 {
        return Ok(ns);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    for id in ids {
        let n = &mut ns.nodes[id];
        n.pos.x += normal.sample(rng);
        n.pos.y += normal.sample(rng);
    }
    Ok(ns)
}

/// Square raster over `[0, side]²`; a cell is inside a disk when its center is.
#[derive(Clone, Copy, Debug)]
pub struct Raster {
    pub side: f64,
    pub resolution: usize,
}

impl Raster {
    pub fn new(side: f64, resolution: usize) -> Self {
        Self { side, resolution }
    }

    pub fn cells(&self) -> usize {
        self.resolution * self.resolution
    }

    fn cell(&self) -> f64 {
        self.side / self.resolution as f64
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        let h = self.cell();
        Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h)
    }

    /// Calls `f(cell_index)` for every cell whose center lies in the closed disk.
    pub fn for_each_in_disk(&self, c: &Point, r: f64, mut f: impl FnMut(usize)) {
        if r <= 0.0 {
            return;
        }
        let h = self.cell();
        let n = self.resolution as isize;
        let lo = |v: f64| (((v - r) / h - 0.5).ceil() as isize).clamp(0, n);
        let hi = |v: f64| (((v + r) / h - 0.5).floor() as isize + 1).clamp(0, n);
        let r2 = r * r;
        for j in lo(c.y)..hi(c.y) {
            let cy = (j as f64 + 0.5) * h;
            let dy = cy - c.y;
            for i in lo(c.x)..hi(c.x) {
                let cx = (i as f64 + 0.5) * h;
                let dx = cx - c.x;
                if dx * dx + dy * dy <= r2 {
                    f(j as usize * self.resolution + i as usize);
                }
            }
        }
    }

    /// Marks the union of the given disks.
    pub fn mask<'a>(&self, disks: impl IntoIterator<Item = (&'a Point, f64)>) -> Vec<bool> {
        let mut mask = vec![false; self.cells()];
        for (c, r) in disks {
            self.for_each_in_disk(c, r, |k| mask[k] = true);
        }
        mask
    }
}

/// Fraction of the square covered by the nodes' disks of the given role.
pub fn covered_fraction(ns: &NodeSet, role: RadiusRole, resolution: usize) -> f64 {
    covered_fraction_where(ns, role, resolution, |_| true)
}

pub fn covered_fraction_where(
    ns: &NodeSet,
    role: RadiusRole,
    resolution: usize,
    keep: impl Fn(&Node) -> bool,
) -> f64 {
    let raster = Raster::new(ns.side(), resolution);
    let mask = raster.mask(
        ns.nodes()
            .iter()
            .filter(|n| keep(n))
            .map(|n| (&n.pos, n.radius(role))),
    );
    mask.iter().filter(|&&b| b).count() as f64 / raster.cells() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn poisson_mean_count() {
        let trials = 10_000;
        let mut total = 0usize;
        for seed in 0..trials {
            total += sample_poisson(6.0, 2.0, &mut seeded_rng(seed))
                .unwrap()
                .len();
        }
        let mean = total as f64 / trials as f64;
        // mean 24, sd of the mean sqrt(24/1e4) ≈ 0.049: the band is very loose
        assert!((22.5..=25.5).contains(&mean), "mean {mean}");
    }

    #[test]
    fn poisson_vanishing_intensity_is_usually_empty() {
        let empty = (0..200)
            .filter(|&s| {
                sample_poisson(1e-4, 2.0, &mut seeded_rng(s))
                    .unwrap()
                    .is_empty()
            })
            .count();
        assert!(empty >= 195);
    }

    #[test]
    fn poisson_rejects_bad_parameters() {
        assert!(sample_poisson(0.0, 2.0, &mut seeded_rng(0)).is_err());
        assert!(sample_poisson(1.0, -2.0, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn poisson_is_deterministic_per_seed() {
        let a = sample_poisson(12.0, 2.0, &mut seeded_rng(7)).unwrap();
        let b = sample_poisson(12.0, 2.0, &mut seeded_rng(7)).unwrap();
        assert_eq!(a, b);
        assert!(a
            .nodes()
            .iter()
            .all(|n| (0.0..2.0).contains(&n.pos.x) && (0.0..2.0).contains(&n.pos.y)));
    }

    #[test]
    fn radii_uniform_degenerate_and_support() {
        let ns = sample_poisson(12.0, 2.0, &mut seeded_rng(1)).unwrap();
        let fixed = assign_radii_uniform(ns.clone(), 0.5, 0.5, &mut seeded_rng(2)).unwrap();
        assert!(fixed
            .nodes()
            .iter()
            .all(|n| n.r_comm == 0.5 && n.r_rej == 0.25 && n.r_cov == 0.25));

        let ranged = assign_radii_uniform(ns.clone(), 0.2, 0.3, &mut seeded_rng(2)).unwrap();
        assert!(ranged
            .nodes()
            .iter()
            .all(|n| (0.2..=0.3).contains(&n.r_comm)));
        assert_eq!(ranged.len(), ns.len());
        for (a, b) in ranged.nodes().iter().zip(ns.nodes()) {
            assert_eq!(a.pos, b.pos);
        }
        assert!(assign_radii_uniform(ns, 0.3, 0.2, &mut seeded_rng(2)).is_err());
    }

    #[test]
    fn default_radius_bound() {
        assert_abs_diff_eq!(default_max_radius(12.0), 0.325_735, epsilon = 1e-6);
    }

    #[test]
    fn hull_of_corners() {
        let mut ns = NodeSet::new(2.0);
        for (x, y) in [
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
            (1.0, 1.0),
            (1.0, 0.0),
        ] {
            ns.push(Node::at(Point::new(x, y)));
        }
        let ns = make_boundary(ns, BoundaryMode::ConvexHull).unwrap();
        assert_eq!(
            ns.boundary_ids().into_iter().collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn hull_rejects_collinear() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
        ];
        assert!(convex_hull(&pts).is_err());
        assert!(convex_hull(&pts[..2]).is_err());
    }

    #[test]
    fn square_perimeter_sixteen_nodes() {
        let mut ns = NodeSet::new(2.0);
        ns.push(Node::at(Point::new(1.0, 1.0)));
        let before = ns.clone();
        let a = 2.0;
        let ns = make_boundary(
            ns,
            BoundaryMode::SquarePerimeter {
                spacing: 0.5,
                radius: a / 3.0,
            },
        )
        .unwrap();
        assert_eq!(ns.len(), 17);
        assert_eq!(ns.nodes()[0], before.nodes()[0]);
        let b: Vec<Point> = ns.nodes()[1..].iter().map(|n| n.pos).collect();
        for (i, p) in b.iter().enumerate() {
            let q = b[(i + 1) % b.len()];
            assert!(p.dist(&q) <= 0.5 + 1e-12);
        }
        assert!(ns.nodes()[1..]
            .iter()
            .all(|n| n.boundary && (n.r_cov - 0.666_666_7).abs() < 1e-6));
        assert!(make_boundary(
            NodeSet::new(2.0),
            BoundaryMode::SquarePerimeter {
                spacing: 0.0,
                radius: 0.5
            }
        )
        .is_err());
    }

    #[test]
    fn meb_closed_forms() {
        let p = Point::new(0.3, -1.0);
        assert_eq!(min_enclosing_ball_radius(&[p]).unwrap(), 0.0);
        let q = Point::new(0.3, 0.5);
        assert_abs_diff_eq!(
            min_enclosing_ball_radius(&[p, q]).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        let s = 0.8;
        let tri = [
            Point::new(0.0, 0.0),
            Point::new(s, 0.0),
            Point::new(s / 2.0, s * 3f64.sqrt() / 2.0),
        ];
        assert_abs_diff_eq!(
            min_enclosing_ball_radius(&tri).unwrap(),
            s / 3f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(min_enclosing_ball_radius(&[]).is_err());
    }

    /// Grid search over candidate centers: radius = min over centers of the max distance.
    /// Oracle: bisection on r, where equal disks of radius r share a point
    /// iff some center or pairwise circle intersection lies in all of them.
    fn meb_brute(pts: &[Point]) -> f64 {
        let common_point = |r: f64| {
            let inside = |c: &Point| pts.iter().all(|p| p.dist(c) <= r * (1.0 + 1e-12));
            if pts.iter().any(inside) {
                return true;
            }
            for (i, a) in pts.iter().enumerate() {
                for b in &pts[i + 1..] {
                    let d = a.dist(b);
                    if d > 2.0 * r || d == 0.0 {
                        continue;
                    }
                    let h = (r * r - d * d / 4.0).max(0.0).sqrt();
                    let (mx, my) = ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
                    let (ux, uy) = ((b.y - a.y) / d, (a.x - b.x) / d);
                    for s in [-1.0, 1.0] {
                        if inside(&Point::new(mx + s * h * ux, my + s * h * uy)) {
                            return true;
                        }
                    }
                }
            }
            false
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..100 {
            let mid = (lo + hi) / 2.0;
            if common_point(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn meb_equilateral_matches_oracle() {
        let s = 1.3;
        let tri = [
            Point::new(0.1, 0.2),
            Point::new(0.1 + s, 0.2),
            Point::new(0.1 + s / 2.0, 0.2 + s * 3f64.sqrt() / 2.0),
        ];
        assert_abs_diff_eq!(meb_brute(&tri), s / 3f64.sqrt(), epsilon = 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn meb_matches_bisection_oracle(coords in proptest::collection::vec(-1.0f64..1.0, 2..=8)) {
            let pts: Vec<Point> = coords.chunks(2).filter(|c| c.len() == 2).map(|c| Point::new(c[0], c[1])).collect();
            let exact = min_enclosing_ball_radius(&pts).unwrap();
            let brute = meb_brute(&pts);
            proptest::prop_assert!((exact - brute).abs() < 1e-9, "{} vs {}", exact, brute);
        }

        #[test]
        fn meb_rigid_motion_invariant(
            coords in proptest::collection::vec(-1.0f64..1.0, 8),
            theta in 0.0f64..std::f64::consts::TAU,
            tx in -5.0f64..5.0,
            ty in -5.0f64..5.0,
            n in 1usize..=4,
        ) {
            let pts: Vec<Point> = coords.chunks(2).take(n).map(|c| Point::new(c[0], c[1])).collect();
            let (s, c) = theta.sin_cos();
            let moved: Vec<Point> = pts.iter().map(|p| Point::new(c * p.x - s * p.y + tx, s * p.x + c * p.y + ty)).collect();
            let a = min_enclosing_ball_radius(&pts).unwrap();
            let b = min_enclosing_ball_radius(&moved).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn perturb_identity_cases_and_errors() {
        let ns = assign_radii_uniform(
            sample_poisson(12.0, 2.0, &mut seeded_rng(3)).unwrap(),
            0.2,
            0.3,
            &mut seeded_rng(4),
        )
        .unwrap();
        let all: Vec<usize> = (0..ns.len()).collect();
        assert_eq!(
            perturb_gaussian(ns.clone(), &all, 0.0, &mut seeded_rng(5)).unwrap(),
            ns
        );
        assert_eq!(
            perturb_gaussian(ns.clone(), &[], 0.1, &mut seeded_rng(5)).unwrap(),
            ns
        );
        assert!(matches!(
            perturb_gaussian(ns.clone(), &[ns.len()], 0.1, &mut seeded_rng(5)),
            Err(Error::UnknownNode(_))
        ));
        let moved = perturb_gaussian(ns.clone(), &[0], 0.1, &mut seeded_rng(5)).unwrap();
        assert_ne!(moved.nodes()[0].pos, ns.nodes()[0].pos);
        assert_eq!(&moved.nodes()[1..], &ns.nodes()[1..]);
    }

    #[test]
    fn perturb_empirical_sigma() {
        let mut ns = NodeSet::new(2.0);
        for _ in 0..10_000 {
            ns.push(Node::at(Point::new(1.0, 1.0)));
        }
        let all: Vec<usize> = (0..ns.len()).collect();
        let moved = perturb_gaussian(ns, &all, 0.1, &mut seeded_rng(11)).unwrap();
        let xs: Vec<f64> = moved.nodes().iter().map(|n| n.pos.x - 1.0).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd =
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!((0.097..=0.103).contains(&sd), "sd {sd}");
    }

    #[test]
    fn raster_disk_area() {
        let raster = Raster::new(2.0, 400);
        let mask = raster.mask([(&Point::new(1.0, 1.0), 0.5)]);
        let frac = mask.iter().filter(|&&b| b).count() as f64 / raster.cells() as f64;
        assert_abs_diff_eq!(frac, PI * 0.25 / 4.0, epsilon = 2e-3);
        // a disk hanging off the corner only counts its in-square quarter
        let corner = raster.mask([(&Point::new(0.0, 0.0), 0.5)]);
        let frac = corner.iter().filter(|&&b| b).count() as f64 / raster.cells() as f64;
        assert_abs_diff_eq!(frac, PI * 0.25 / 16.0, epsilon = 2e-3);
    }

    #[test]
    fn validate_catches_bad_nodes() {
        let mut ns = NodeSet::new(2.0);
        ns.push(Node {
            r_comm: 0.2,
            r_rej: 0.3,
            ..Node::at(Point::new(1.0, 1.0))
        });
        assert!(ns.validate().is_err());
        let mut ns = NodeSet::new(2.0);
        ns.push(Node::at(Point::new(3.0, 1.0)));
        assert!(ns.validate().is_err());
        ns.node_mut(0).unwrap().boundary = true;
        assert!(ns.validate().is_ok());
    }
}
