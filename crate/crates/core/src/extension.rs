//! Extensions of circle traces into the disk: the Poisson integral
//! with its Wirtinger derivatives, finite-element p-harmonic solves,
//! and the radial composition route for star-shaped targets.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;

use crate::boundary::{BoundaryMap, BoundaryTrace, CircleTrace};
use crate::error::{Error, Result};
use crate::geometry::{cross, segments_cross_properly, JordanCurve};
use crate::mesh::{Mesh, MeshField};
use crate::numeric::{pairwise_sum, seeded_rng, Csr, GL16};
use crate::Point;

const SMOOTH_NODES: usize = 4096;
const PANEL_FRACTION: f64 = 0.25;
const MIN_PANEL: f64 = std::f64::consts::TAU / 2048.0;

/// Quadrature for one trip around the circle.  Smooth traces get the
/// uniform rule, which is spectrally accurate and reproduces the
/// boundary mean exactly; traces with corners get composite 16-point
/// Gauss panels broken at the corners and shortened near the
/// evaluation point's distance to the circle.
fn quad_nodes(breaks: &[f64], margin: f64) -> Vec<(f64, f64)> {
    let tau = std::f64::consts::TAU;
    let mut b: Vec<f64> = breaks.iter().map(|t| t.rem_euclid(tau)).collect();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    if b.is_empty() {
        let w = tau / SMOOTH_NODES as f64;
        return (0..SMOOTH_NODES).map(|j| (j as f64 * w, w)).collect();
    }
    let target = (PANEL_FRACTION * margin).max(MIN_PANEL);
    let mut nodes = Vec::new();
    for i in 0..b.len() {
        let lo = b[i];
        let hi = if i + 1 < b.len() { b[i + 1] } else { b[0] + tau };
        let len = hi - lo;
        if len < 1e-12 {
            continue;
        }
        let parts = (len / target).ceil() as usize;
        let h = len / parts as f64;
        for j in 0..parts {
            let mid = lo + (j as f64 + 0.5) * h;
            for &(x, w) in GL16.iter() {
                nodes.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
    }
    nodes
}

/// Poisson integral of the trace at a point of the open unit disk.
pub fn poisson_extend<T: BoundaryTrace + ?Sized>(trace: &T, z: Point) -> Point {
    let r = z.norm();
    if r >= 1.0 - 1e-12 {
        return trace.eval(z.im.atan2(z.re));
    }
    let nodes = quad_nodes(&trace.breakpoints(), 1.0 - r);
    let scale = (1.0 - z.norm_sqr()) / std::f64::consts::TAU;
    let mut acc = Point::new(0.0, 0.0);
    for &(t, w) in &nodes {
        let e = Point::new(t.cos(), t.sin());
        acc += trace.eval(t) * (w * scale / (e - z).norm_sqr());
    }
    acc
}

/// Wirtinger derivatives (H_z, H_zbar) of the Poisson extension,
/// computed from the trace derivative by the integrated-by-parts
/// contour formulas.
pub fn poisson_gradient<T: BoundaryTrace + ?Sized>(trace: &T, z: Point) -> (Point, Point) {
    let nodes = quad_nodes(&trace.breakpoints(), 1.0 - z.norm());
    let mut gz = Point::new(0.0, 0.0);
    let mut gzb = Point::new(0.0, 0.0);
    let zb = z.conj();
    for &(t, w) in &nodes {
        let d = trace.deriv(t);
        let e = Point::new(t.cos(), t.sin());
        gz += d * (w / (z - e));
        gzb += d * (w / (zb - e.conj()));
    }
    let i2pi = Point::new(0.0, 1.0 / std::f64::consts::TAU);
    (gz * i2pi, gzb * -i2pi)
}

/// Jacobian determinant |H_z|^2 - |H_zbar|^2 of the Poisson extension.
pub fn poisson_jacobian<T: BoundaryTrace + ?Sized>(trace: &T, z: Point) -> f64 {
    let (gz, gzb) = poisson_gradient(trace, z);
    gz.norm_sqr() - gzb.norm_sqr()
}

/// Dirichlet data for a mesh whose boundary parameters are circle
/// angles.
pub fn trace_boundary_values(mesh: &Mesh, trace: &dyn BoundaryTrace) -> Vec<Point> {
    mesh.boundary_param().iter().map(|&t| trace.eval(t)).collect()
}

pub struct PHarmonicSolution {
    pub field: MeshField,
    /// unregularized p-energy of the final iterate
    pub energy: f64,
    /// p-energy after the initial harmonic solve and after each
    /// continuation stage
    pub energy_history: Vec<f64>,
    pub outer_iterations: usize,
}

/// Linear finite-element minimizer of the Dirichlet energy with the
/// given boundary values.
pub fn harmonic_fem(mesh: Arc<Mesh>, data: &[Point]) -> Result<PHarmonicSolution> {
    p_harmonic_fem(mesh, data, 2.0)
}

/// Minimizes the regularized p-energy sum_T A_T (|DU|^2 + mu^2)^{p/2}
/// by lagged-weight linear solves with a damped line search, driving
/// mu down a fixed continuation ladder.
pub fn p_harmonic_fem(mesh: Arc<Mesh>, data: &[Point], p: f64) -> Result<PHarmonicSolution> {
    p_harmonic_staged(mesh, data, p, &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
}

fn p_harmonic_staged(
    mesh: Arc<Mesh>,
    data: &[Point],
    p: f64,
    stages: &[f64],
) -> Result<PHarmonicSolution> {
    if !(1.0 < p && p <= 6.0) {
        return Err(Error::invalid("exponent must lie in (1, 6]"));
    }
    if data.len() != mesh.boundary().len() {
        return Err(Error::invalid("one boundary value per boundary node required"));
    }
    let n = mesh.node_count();
    let mut eq_of = vec![usize::MAX; n];
    let mut n_eq = 0;
    for i in 0..n {
        if !mesh.is_boundary(i) {
            eq_of[i] = n_eq;
            n_eq += 1;
        }
    }
    let mut values = vec![Point::new(0.0, 0.0); n];
    for (i, &b) in mesh.boundary().iter().enumerate() {
        values[b as usize] = data[i];
    }
    let flat = vec![1.0; mesh.tri_count()];
    solve_weighted(&mesh, &eq_of, n_eq, &flat, &mut values)?;
    let mut history = vec![energy_of(&mesh, &values, p, 0.0)];
    let mut outer = 1;
    if (p - 2.0).abs() > 1e-12 && n_eq > 0 {
        for (stage, &mu) in stages.iter().enumerate() {
            let drop_tol = if stage + 2 >= stages.len() { 1e-9 } else { 1e-7 };
            let mut e_prev = energy_of(&mesh, &values, p, mu);
            for _ in 0..60 {
                outer += 1;
                let w: Vec<f64> = (0..mesh.tri_count())
                    .map(|t| (grad_sq(&mesh, &values, t) + mu * mu).powf(0.5 * p - 1.0))
                    .collect();
                let mut proposal = values.clone();
                solve_weighted(&mesh, &eq_of, n_eq, &w, &mut proposal)?;
                let mut alpha = 1.0;
                let e_new = loop {
                    let cand: Vec<Point> = values
                        .iter()
                        .zip(&proposal)
                        .map(|(&v, &q)| v + (q - v) * alpha)
                        .collect();
                    let e = energy_of(&mesh, &cand, p, mu);
                    if e <= e_prev * (1.0 + 1e-14) || alpha < 1e-4 {
                        values = cand;
                        break e;
                    }
                    alpha *= 0.5;
                };
                let done = e_prev - e_new <= drop_tol * e_prev.abs();
                e_prev = e_new;
                if done {
                    break;
                }
            }
            history.push(energy_of(&mesh, &values, p, 0.0));
        }
    }
    let energy = energy_of(&mesh, &values, p, 0.0);
    Ok(PHarmonicSolution {
        field: MeshField::new(mesh, values)?,
        energy,
        energy_history: history,
        outer_iterations: outer,
    })
}

fn grad_sq(mesh: &Mesh, values: &[Point], t: usize) -> f64 {
    let tri = mesh.tris()[t];
    let g = mesh.grads(t);
    let mut j = [0.0f64; 4];
    for i in 0..3 {
        let w = values[tri[i] as usize];
        j[0] += w.re * g[i].re;
        j[1] += w.re * g[i].im;
        j[2] += w.im * g[i].re;
        j[3] += w.im * g[i].im;
    }
    j.iter().map(|v| v * v).sum()
}

fn energy_of(mesh: &Mesh, values: &[Point], p: f64, mu: f64) -> f64 {
    let terms: Vec<f64> = (0..mesh.tri_count())
        .map(|t| mesh.area(t) * (grad_sq(mesh, values, t) + mu * mu).powf(0.5 * p))
        .collect();
    pairwise_sum(&terms)
}

/// One weighted Laplace solve with Dirichlet elimination; interior
/// entries of `values` are overwritten, boundary entries are data.
fn solve_weighted(
    mesh: &Mesh,
    eq_of: &[usize],
    n_eq: usize,
    weights: &[f64],
    values: &mut [Point],
) -> Result<()> {
    if n_eq == 0 {
        return Ok(());
    }
    let mut trip = Vec::with_capacity(9 * mesh.tri_count());
    let mut rhs_u = vec![0.0; n_eq];
    let mut rhs_v = vec![0.0; n_eq];
    for t in 0..mesh.tri_count() {
        let tri = mesh.tris()[t];
        let g = mesh.grads(t);
        let c = weights[t] * mesh.area(t);
        for a in 0..3 {
            let ia = tri[a] as usize;
            let ea = eq_of[ia];
            if ea == usize::MAX {
                continue;
            }
            for b in 0..3 {
                let ib = tri[b] as usize;
                let k = c * (g[a].re * g[b].re + g[a].im * g[b].im);
                match eq_of[ib] {
                    usize::MAX => {
                        rhs_u[ea] -= k * values[ib].re;
                        rhs_v[ea] -= k * values[ib].im;
                    }
                    eb => trip.push((ea, eb, k)),
                }
            }
        }
    }
    let a = Csr::from_triplets(n_eq, &trip);
    let x0_u: Vec<f64> = values
        .iter()
        .zip(eq_of)
        .filter(|(_, &e)| e != usize::MAX)
        .map(|(v, _)| v.re)
        .collect();
    let x0_v: Vec<f64> = values
        .iter()
        .zip(eq_of)
        .filter(|(_, &e)| e != usize::MAX)
        .map(|(v, _)| v.im)
        .collect();
    let u = a.solve_pcg(&rhs_u, &x0_u, 1e-10, 20 * n_eq.max(100))?;
    let v = a.solve_pcg(&rhs_v, &x0_v, 1e-10, 20 * n_eq.max(100))?;
    for (i, &e) in eq_of.iter().enumerate() {
        if e != usize::MAX {
            values[i] = Point::new(u[e], v[e]);
        }
    }
    Ok(())
}

/// Radial parameterization of a Jordan polyline that is star-shaped
/// around `center`: every ray from the center meets the boundary once.
pub struct StarShape {
    curve: Arc<JordanCurve>,
    center: Point,
    /// lifted polar angle of vertex i, strictly increasing over one
    /// full turn
    angles: Vec<f64>,
}

impl StarShape {
    pub fn new(curve: Arc<JordanCurve>, center: Point) -> Result<StarShape> {
        let n = curve.vertex_count();
        let tau = std::f64::consts::TAU;
        let mut angles = Vec::with_capacity(n + 1);
        let first = (curve.vertex(0) - center).arg().rem_euclid(tau);
        angles.push(first);
        let mut prev = first;
        for i in 1..=n {
            let raw = (curve.vertex(i % n) - center).arg();
            let step = (raw - prev).rem_euclid(tau);
            if !(1e-12..std::f64::consts::PI).contains(&step) {
                return Err(Error::geometry(
                    "boundary is not star-shaped around the chosen center",
                ));
            }
            prev += step;
            angles.push(prev);
        }
        if (angles[n] - first - tau).abs() > 1e-9 {
            return Err(Error::geometry(
                "boundary winds more than once around the chosen center",
            ));
        }
        Ok(StarShape {
            curve,
            center,
            angles,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn curve(&self) -> &Arc<JordanCurve> {
        &self.curve
    }

    /// Boundary point cut out by the ray at polar angle `theta`.
    pub fn boundary_at(&self, theta: f64) -> Point {
        let tau = std::f64::consts::TAU;
        let th = self.angles[0] + (theta - self.angles[0]).rem_euclid(tau);
        let i = self
            .angles
            .partition_point(|&a| a <= th)
            .clamp(1, self.angles.len() - 1)
            - 1;
        let (a, b) = self.curve.segment(i);
        let e = Point::new(th.cos(), th.sin());
        let denom = cross(b - a, e);
        if denom.abs() < 1e-15 {
            return a;
        }
        let t = cross(self.center - a, e) / denom;
        a + (b - a) * t.clamp(0.0, 1.0)
    }

    /// Radial homeomorphism of the closed unit disk onto the region.
    pub fn radial_map(&self, w: Point) -> Point {
        let r = w.norm();
        if r < 1e-300 {
            return self.center;
        }
        self.center + (self.boundary_at(w.im.atan2(w.re)) - self.center) * r
    }

    /// Largest pairwise stretch of the radial map over seeded random
    /// pairs in the disk.
    pub fn sampled_lipschitz(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = seeded_rng(seed);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| loop {
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p.norm_sqr() < 1.0 {
                return p;
            }
        };
        let mut best: f64 = 0.0;
        for _ in 0..pairs {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let gap = (a - b).norm();
            if gap > 1e-9 {
                best = best.max((self.radial_map(a) - self.radial_map(b)).norm() / gap);
            }
        }
        best
    }
}

/// Circle-to-circle reduction of a boundary map whose target is
/// star-shaped: the trace of the target point's polar angle around the
/// star center.
pub struct StarTrace<'a> {
    map: &'a BoundaryMap,
    star: &'a StarShape,
}

impl<'a> StarTrace<'a> {
    pub fn new(map: &'a BoundaryMap, star: &'a StarShape) -> Result<StarTrace<'a>> {
        if !Arc::ptr_eq(map.target(), star.curve()) {
            return Err(Error::invalid("star parameterization is for a different curve"));
        }
        Ok(StarTrace { map, star })
    }
}

impl CircleTrace for StarTrace<'_> {
    fn eval(&self, theta: f64) -> Point {
        let d = self.map.eval_angle(theta) - self.star.center();
        d / d.norm()
    }
}

impl BoundaryTrace for StarTrace<'_> {
    fn deriv(&self, theta: f64) -> Point {
        let d = self.map.eval_angle(theta) - self.star.center();
        let dp = self.map.deriv(theta);
        // angular speed of the image around the center
        let speed = cross(d, dp) / d.norm_sqr();
        Point::new(0.0, speed) * d / d.norm()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.map.breakpoints()
    }
}

/// Homeomorphic extension of a boundary map onto a star-shaped target:
/// the harmonic extension of the circle-to-circle reduction, pushed
/// forward by the radial map.
pub fn composed_extension_at(trace: &StarTrace<'_>, z: Point) -> Point {
    let w = poisson_extend(trace, z);
    // the harmonic image of the disk under a circle homeomorphism is
    // again in the closed disk; guard the radial map against rounding
    let w = if w.norm() > 1.0 { w / w.norm() } else { w };
    trace.star.radial_map(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomeoReport {
    /// fraction of mesh triangles with strictly positive Jacobian
    pub positive_fraction: f64,
    /// image edges that cross properly away from shared endpoints
    pub edge_crossings: usize,
    /// distinct nodes mapped to coincident image points
    pub coincident_nodes: usize,
}

impl HomeoReport {
    pub fn clean(&self) -> bool {
        self.positive_fraction == 1.0 && self.edge_crossings == 0 && self.coincident_nodes == 0
    }
}

/// Checks a discrete field for injectivity defects: flipped elements,
/// properly crossing image edges, and coincident node images.
pub fn homeomorphy_check(field: &MeshField) -> HomeoReport {
    let mesh = field.mesh();
    let vals = field.values();
    let mut edges: Vec<(u32, u32)> = mesh
        .tris()
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let lens: Vec<f64> = edges
        .iter()
        .map(|&(a, b)| (vals[a as usize] - vals[b as usize]).norm())
        .collect();
    let cell = (pairwise_sum(&lens) / lens.len() as f64).max(1e-12);
    let key = |p: Point| ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (e, &(a, b)) in edges.iter().enumerate() {
        let (pa, pb) = (vals[a as usize], vals[b as usize]);
        let (ka, kb) = (key(pa), key(pb));
        for ix in ka.0.min(kb.0)..=ka.0.max(kb.0) {
            for iy in ka.1.min(kb.1)..=ka.1.max(kb.1) {
                grid.entry((ix, iy)).or_default().push(e as u32);
            }
        }
    }
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut crossings = 0;
    for bucket in grid.values() {
        for (i, &e1) in bucket.iter().enumerate() {
            for &e2 in &bucket[i + 1..] {
                let (p, q) = (edges[e1 as usize], edges[e2 as usize]);
                if p.0 == q.0 || p.0 == q.1 || p.1 == q.0 || p.1 == q.1 {
                    continue;
                }
                let pair = (e1.min(e2), e1.max(e2));
                if !seen.insert(pair) {
                    continue;
                }
                if segments_cross_properly(
                    vals[p.0 as usize],
                    vals[p.1 as usize],
                    vals[q.0 as usize],
                    vals[q.1 as usize],
                ) {
                    crossings += 1;
                }
            }
        }
    }
    let tol = 1e-9 * cell.max(1.0);
    let mut node_grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    let nkey = |p: Point| ((p.re / tol).round() as i64, (p.im / tol).round() as i64);
    let mut coincident = 0;
    for (i, &v) in vals.iter().enumerate() {
        let k = nkey(v);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = node_grid.get(&(k.0 + dx, k.1 + dy)) {
                    coincident += list
                        .iter()
                        .filter(|&&j| (vals[j as usize] - v).norm() <= tol)
                        .count();
                }
            }
        }
        node_grid.entry(k).or_default().push(i as u32);
    }
    HomeoReport {
        positive_fraction: field.positive_jacobian_fraction(),
        edge_crossings: crossings,
        coincident_nodes: coincident,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{fourier_mode, random_monotone_map, TrigPolynomial};
    use crate::geometry::{pentagon_domain, unit_circle_curve};
    use crate::mesh::disk_mesh;

    #[test]
    fn poisson_reproduces_powers_of_z() {
        for k in 1..=3 {
            let trace = fourier_mode(k);
            for &z in &[
                Point::new(0.3, 0.1),
                Point::new(-0.7, 0.55),
                Point::new(0.0, -0.95),
            ] {
                let h = poisson_extend(&trace, z);
                let want = z.powi(k);
                assert!((h - want).norm() < 1e-12, "k={k} z={z}: {h} vs {want}");
            }
        }
    }

    #[test]
    fn center_value_is_the_boundary_mean() {
        let trace = TrigPolynomial {
            terms: vec![
                (0, Point::new(0.37, -1.2)),
                (1, Point::new(0.5, 0.0)),
                (-3, Point::new(0.0, 0.25)),
                (7, Point::new(-0.1, 0.1)),
            ],
        };
        let h = poisson_extend(&trace, Point::new(0.0, 0.0));
        assert!((h - Point::new(0.37, -1.2)).norm() < 1e-12, "{h}");
    }

    #[test]
    fn wirtinger_derivatives_are_exact_on_conjugate_modes() {
        // boundary values e^{it} extend to z, e^{-it} to conj(z)
        let (gz, gzb) = poisson_gradient(&fourier_mode(1), Point::new(0.4, -0.2));
        assert!((gz - Point::new(1.0, 0.0)).norm() < 1e-12, "{gz}");
        assert!(gzb.norm() < 1e-12, "{gzb}");
        let (gz, gzb) = poisson_gradient(&fourier_mode(-1), Point::new(-0.15, 0.6));
        assert!(gz.norm() < 1e-12, "{gz}");
        assert!((gzb - Point::new(1.0, 0.0)).norm() < 1e-12, "{gzb}");
    }

    #[test]
    fn gradient_matches_finite_differences_for_piecewise_traces() {
        let circle = Arc::new(unit_circle_curve(512));
        let target = Arc::new(pentagon_domain().curve().clone());
        let map = random_monotone_map(circle, target, 9, 0.05, 77).unwrap();
        let h = 1e-6;
        for &z in &[Point::new(0.35, 0.2), Point::new(-0.5, -0.3)] {
            let (gz, gzb) = poisson_gradient(&map, z);
            let fx = (poisson_extend(&map, z + Point::new(h, 0.0))
                - poisson_extend(&map, z - Point::new(h, 0.0)))
                / (2.0 * h);
            let fy = (poisson_extend(&map, z + Point::new(0.0, h))
                - poisson_extend(&map, z - Point::new(0.0, h)))
                / (2.0 * h);
            let fd_z = (fx - fy * Point::new(0.0, 1.0)) * 0.5;
            let fd_zb = (fx + fy * Point::new(0.0, 1.0)) * 0.5;
            assert!((gz - fd_z).norm() < 1e-4, "{gz} vs {fd_z}");
            assert!((gzb - fd_zb).norm() < 1e-4, "{gzb} vs {fd_zb}");
        }
    }

    #[test]
    fn polyline_identity_trace_extends_to_the_identity() {
        let circle = Arc::new(unit_circle_curve(512));
        let map = BoundaryMap::identity(circle, 64);
        for &z in &[Point::new(0.2, 0.5), Point::new(-0.6, 0.1)] {
            let h = poisson_extend(&map, z);
            assert!((h - z).norm() < 1e-3, "{h} vs {z}");
        }
    }

    #[test]
    fn harmonic_fem_reproduces_affine_data_exactly() {
        let mesh = Arc::new(disk_mesh(3));
        let data: Vec<Point> = mesh
            .boundary()
            .iter()
            .map(|&b| {
                let p = mesh.node(b as usize);
                Point::new(1.5 * p.re - 0.25 * p.im + 2.0, -p.re + 0.75 * p.im)
            })
            .collect();
        let sol = harmonic_fem(mesh.clone(), &data).unwrap();
        for (i, v) in sol.field.values().iter().enumerate() {
            let p = mesh.node(i);
            let want = Point::new(1.5 * p.re - 0.25 * p.im + 2.0, -p.re + 0.75 * p.im);
            assert!((v - want).norm() < 1e-8, "node {i}: {v} vs {want}");
        }
    }

    #[test]
    fn identity_data_is_p_harmonic_for_any_exponent() {
        let mesh = Arc::new(disk_mesh(3));
        let data: Vec<Point> = mesh
            .boundary()
            .iter()
            .map(|&b| mesh.node(b as usize))
            .collect();
        let sol = p_harmonic_fem(mesh.clone(), &data, 1.5).unwrap();
        for (i, v) in sol.field.values().iter().enumerate() {
            assert!((v - mesh.node(i)).norm() < 1e-7, "node {i}");
        }
        // |DU|^2 = 2 for the identity, so the energy is 2^{p/2} |D|
        let want = 2.0f64.powf(0.75) * mesh.total_area();
        assert!((sol.energy - want).abs() < 1e-9 * want);
    }

    #[test]
    fn lagged_weight_solve_agrees_with_direct_minimization() {
        let mesh = Arc::new(disk_mesh(3));
        let circle = Arc::new(unit_circle_curve(256));
        let target = Arc::new(pentagon_domain().curve().clone());
        let map = random_monotone_map(circle, target, 7, 0.05, 3).unwrap();
        let data = trace_boundary_values(&mesh, &map);
        let p = 1.5;
        let mu = 1e-2;
        let sol = p_harmonic_staged(mesh.clone(), &data, p, &[mu]).unwrap();
        let e_fem = energy_of(&mesh, sol.field.values(), p, mu);
        let n = mesh.node_count();
        // independently coded gradient of the regularized objective
        let grad = |vals: &[Point]| {
            let mut g = vec![Point::new(0.0, 0.0); n];
            for t in 0..mesh.tri_count() {
                let tri = mesh.tris()[t];
                let gt = mesh.grads(t);
                let mut j = [0.0f64; 4];
                for i in 0..3 {
                    let w = vals[tri[i] as usize];
                    j[0] += w.re * gt[i].re;
                    j[1] += w.re * gt[i].im;
                    j[2] += w.im * gt[i].re;
                    j[3] += w.im * gt[i].im;
                }
                let q: f64 = j.iter().map(|v| v * v).sum::<f64>() + mu * mu;
                let f = mesh.area(t) * p * q.powf(0.5 * p - 1.0);
                for i in 0..3 {
                    if !mesh.is_boundary(tri[i] as usize) {
                        g[tri[i] as usize] += Point::new(
                            f * (j[0] * gt[i].re + j[1] * gt[i].im),
                            f * (j[2] * gt[i].re + j[3] * gt[i].im),
                        );
                    }
                }
            }
            g
        };
        let norm = |g: &[Point]| g.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        // the objective is convex, so a vanishing interior gradient
        // certifies the global minimum
        let mut zeroed: Vec<Point> = sol.field.values().to_vec();
        for (i, v) in zeroed.iter_mut().enumerate() {
            if !mesh.is_boundary(i) {
                *v = Point::new(0.0, 0.0);
            }
        }
        let scale = norm(&grad(&zeroed));
        let residual = norm(&grad(sol.field.values()));
        assert!(
            residual < 1e-4 * scale,
            "stationarity residual {residual} vs scale {scale}"
        );
        // and every perturbation costs energy
        let mut rng = seeded_rng(42);
        for _ in 0..5 {
            let bumped: Vec<Point> = sol
                .field
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if mesh.is_boundary(i) {
                        v
                    } else {
                        v + Point::new(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3))
                    }
                })
                .collect();
            assert!(energy_of(&mesh, &bumped, p, mu) > e_fem);
        }
    }

    #[test]
    fn star_parameterization_accepts_and_rejects_correctly() {
        let penta = Arc::new(pentagon_domain().curve().clone());
        let star = StarShape::new(penta.clone(), Point::new(0.0, 0.0)).unwrap();
        for &th in &[0.0, 1.1, 2.9, -2.0] {
            let b = star.boundary_at(th);
            let back = (b - star.center()).arg();
            let diff = (back - th).rem_euclid(std::f64::consts::TAU);
            assert!(diff < 1e-9 || diff > std::f64::consts::TAU - 1e-9, "{diff}");
        }
        let l = Arc::new(crate::geometry::l_shape_domain().curve().clone());
        StarShape::new(l.clone(), Point::new(0.25, 0.25)).unwrap();
        // a point deep inside one arm cannot see around the notch
        assert!(StarShape::new(l, Point::new(1.5, 0.5)).is_err());
    }

    #[test]
    fn radial_map_scales_rays_and_fixes_the_center() {
        let penta = Arc::new(pentagon_domain().curve().clone());
        let star = StarShape::new(penta, Point::new(0.1, -0.05)).unwrap();
        assert_eq!(star.radial_map(Point::new(0.0, 0.0)), star.center());
        let th = 0.77f64;
        let e = Point::new(th.cos(), th.sin());
        let full = star.radial_map(e);
        let half = star.radial_map(e * 0.5);
        let mid = star.center() + (full - star.center()) * 0.5;
        assert!((half - mid).norm() < 1e-12);
        assert!(star.sampled_lipschitz(2000, 5) < 5.0);
    }

    #[test]
    fn composed_extension_is_injective_on_a_mesh() {
        let circle = Arc::new(unit_circle_curve(512));
        let target = Arc::new(pentagon_domain().curve().clone());
        let map = random_monotone_map(circle, target.clone(), 8, 0.05, 11).unwrap();
        let star = StarShape::new(target, Point::new(0.0, 0.0)).unwrap();
        let trace = StarTrace::new(&map, &star).unwrap();
        let mesh = Arc::new(disk_mesh(3));
        let values: Vec<Point> = mesh
            .nodes()
            .iter()
            .map(|&z| composed_extension_at(&trace, z))
            .collect();
        let field = MeshField::new(mesh, values).unwrap();
        let report = homeomorphy_check(&field);
        assert!(report.clean(), "{report:?}");
    }

    #[test]
    fn squaring_map_trips_the_injectivity_detector() {
        let mesh = Arc::new(disk_mesh(3));
        let values: Vec<Point> = mesh.nodes().iter().map(|&z| z * z).collect();
        let field = MeshField::new(mesh.clone(), values).unwrap();
        let report = homeomorphy_check(&field);
        assert!(
            report.coincident_nodes > 0 || report.edge_crossings > 0,
            "{report:?}"
        );
        // while the identity is spotless
        let field = MeshField::new(mesh.clone(), mesh.nodes().to_vec()).unwrap();
        assert!(homeomorphy_check(&field).clean());
    }

    #[test]
    fn fem_energy_of_smooth_data_tracks_the_poisson_energy() {
        // Frobenius energy of z^2 on the disk: int 8|z|^2 = 4pi
        let mesh = Arc::new(disk_mesh(5));
        let trace = fourier_mode(2);
        let data = trace_boundary_values(&mesh, &trace);
        let sol = harmonic_fem(mesh, &data).unwrap();
        let want = 4.0 * std::f64::consts::PI;
        assert!(
            (sol.energy - want).abs() < 0.01 * want,
            "{} vs {want}",
            sol.energy
        );
    }
}
