//! Linear triangle meshes for the disk and for cusp regions, plus
//! piecewise-linear complex-valued fields on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::CuspLayout;
use crate::numeric::pairwise_sum;
use crate::Point;

/// Triangle mesh with a distinguished counterclockwise boundary loop.
/// Every triangle is stored counterclockwise; construction fails on
/// degenerate or inverted elements.
pub struct Mesh {
    nodes: Vec<Point>,
    tris: Vec<[u32; 3]>,
    boundary: Vec<u32>,
    boundary_param: Vec<f64>,
    boundary_mask: Vec<bool>,
    areas: Vec<f64>,
    grads: Vec<[Point; 3]>,
}

impl Mesh {
    /// `boundary_param[i]` is the curve parameter of boundary node
    /// `boundary[i]`: the circle angle for disk meshes, the arc length
    /// along the mesh's own boundary polygon for domain meshes.
    pub fn new(
        nodes: Vec<Point>,
        tris: Vec<[u32; 3]>,
        boundary: Vec<u32>,
        boundary_param: Vec<f64>,
    ) -> Result<Mesh> {
        let n = nodes.len() as u32;
        if boundary.len() != boundary_param.len() {
            return Err(Error::invalid("boundary loop and parameters differ in length"));
        }
        if tris.iter().flatten().any(|&i| i >= n) || boundary.iter().any(|&i| i >= n) {
            return Err(Error::invalid("triangle refers to a missing node"));
        }
        let mut areas = Vec::with_capacity(tris.len());
        let mut grads = Vec::with_capacity(tris.len());
        for (t, tri) in tris.iter().enumerate() {
            let [a, b, c] = tri.map(|i| nodes[i as usize]);
            let double = (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re);
            if double <= 0.0 {
                return Err(Error::geometry(format!(
                    "triangle {t} is degenerate or clockwise (2A = {double:.3e})"
                )));
            }
            // gradient of the hat function at vertex i: the opposite
            // edge rotated a quarter turn, over twice the area
            let g = |p: Point, q: Point| Point::new((p.im - q.im) / double, (q.re - p.re) / double);
            grads.push([g(b, c), g(c, a), g(a, b)]);
            areas.push(0.5 * double);
        }
        let mut boundary_mask = vec![false; nodes.len()];
        for &i in &boundary {
            boundary_mask[i as usize] = true;
        }
        Ok(Mesh {
            nodes,
            tris,
            boundary,
            boundary_param,
            boundary_mask,
            areas,
            grads,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tri_count(&self) -> usize {
        self.tris.len()
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn tris(&self) -> &[[u32; 3]] {
        &self.tris
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        pairwise_sum(&self.areas)
    }

    /// Gradients of the three hat functions on triangle `t`, as
    /// (d/dx, d/dy) pairs.
    pub fn grads(&self, t: usize) -> &[Point; 3] {
        &self.grads[t]
    }

    pub fn boundary(&self) -> &[u32] {
        &self.boundary
    }

    pub fn boundary_param(&self) -> &[f64] {
        &self.boundary_param
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary_mask[i]
    }

    /// Longest edge over all triangles.
    pub fn max_edge(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.tris {
            let [a, b, c] = tri.map(|i| self.nodes[i as usize]);
            h = h.max((b - a).norm()).max((c - b).norm()).max((a - c).norm());
        }
        h
    }
}

/// Concentric ring mesh of the unit disk.  `level` halvings give
/// R = 2^level rings; ring k carries 6k nodes at radius k/R, for
/// 1 + 3R(R+1) nodes and 6R^2 triangles in total.  Boundary parameters
/// are the node angles.
pub fn disk_mesh(level: u32) -> Mesh {
    let r = 1usize << level.min(9);
    let mut nodes = vec![Point::new(0.0, 0.0)];
    for k in 1..=r {
        let rad = k as f64 / r as f64;
        for j in 0..6 * k {
            let th = std::f64::consts::TAU * j as f64 / (6 * k) as f64;
            nodes.push(Point::new(rad * th.cos(), rad * th.sin()));
        }
    }
    // first node of ring k (ring 0 is the center)
    let start = |k: usize| if k == 0 { 0 } else { 1 + 3 * k * (k - 1) };
    let mut tris: Vec<[u32; 3]> = Vec::with_capacity(6 * r * r);
    for j in 0..6usize {
        tris.push([1 + j as u32, 1 + ((j + 1) % 6) as u32, 0]);
    }
    for k in 2..=r {
        let outer = start(k);
        let inner = start(k - 1);
        let no = 6 * k;
        let ni = 6 * k - 6;
        for sector in 0..6 {
            let o = |i: usize| (outer + (sector * k + i) % no) as u32;
            let i_ = |i: usize| (inner + (sector * (k - 1) + i) % ni) as u32;
            for i in 0..k {
                tris.push([o(i), o(i + 1), i_(i)]);
                if i + 1 < k {
                    tris.push([i_(i), o(i + 1), i_(i + 1)]);
                }
            }
        }
    }
    let boundary: Vec<u32> = (0..6 * r).map(|j| (start(r) + j) as u32).collect();
    let theta: Vec<f64> = (0..6 * r)
        .map(|j| std::f64::consts::TAU * j as f64 / (6 * r) as f64)
        .collect();
    Mesh::new(nodes, tris, boundary, theta).expect("ring mesh construction cannot fail")
}

/// Transfinite mesh of a cusp region between the graph y = |x|^s and
/// the circular cap through (-1,1), (0,2), (1,1).  Columns reuse the
/// layout's graded x stations so bottom nodes coincide with the
/// region's polyline vertices; each column is filled with `rows`
/// intervals graded toward the graph with exponent `grading`.  The
/// corner columns at x = +-1 collapse to single fan apexes.
pub fn cusp_mesh(layout: &CuspLayout, rows: usize, grading: f64) -> Result<Mesh> {
    let n = layout.n;
    if !(2..=4096).contains(&rows) {
        return Err(Error::invalid("row count must lie in 2..=4096"));
    }
    if !(1.0..=8.0).contains(&grading) {
        return Err(Error::invalid("row grading must lie in [1, 8]"));
    }
    // column stations left to right, skipping the collapsed ends
    let col_x: Vec<f64> = (1..2 * n)
        .map(|j| {
            if j < n {
                -layout.xs[n - j]
            } else {
                layout.xs[j - n]
            }
        })
        .collect();
    let cols = col_x.len();
    let rp = rows + 1;
    let mut nodes = Vec::with_capacity(cols * rp + 2);
    for &x in &col_x {
        let bot = x.abs().powf(layout.s);
        let top = 1.0 + (1.0 - x * x).max(0.0).sqrt();
        for rr in 0..rp {
            let t = (rr as f64 / rows as f64).powf(grading);
            nodes.push(Point::new(x, bot + t * (top - bot)));
        }
    }
    let left_apex = nodes.len() as u32;
    nodes.push(Point::new(-1.0, 1.0));
    let right_apex = nodes.len() as u32;
    nodes.push(Point::new(1.0, 1.0));
    let idx = |j: usize, rr: usize| (j * rp + rr) as u32;
    let mut tris = Vec::with_capacity(2 * cols * rows);
    for j in 0..cols - 1 {
        for rr in 0..rows {
            let (a, b) = (idx(j, rr), idx(j + 1, rr));
            let (c, d) = (idx(j + 1, rr + 1), idx(j, rr + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    for rr in 0..rows {
        tris.push([left_apex, idx(0, rr), idx(0, rr + 1)]);
        tris.push([idx(cols - 1, rr), right_apex, idx(cols - 1, rr + 1)]);
    }
    // counterclockwise boundary walk from the cusp tip: right branch,
    // right apex, cap right to left, left apex, left branch
    let mut boundary = Vec::with_capacity(2 * cols + 2);
    for j in n - 1..cols {
        boundary.push(idx(j, 0));
    }
    boundary.push(right_apex);
    for j in (0..cols).rev() {
        boundary.push(idx(j, rows));
    }
    boundary.push(left_apex);
    for j in 0..n - 1 {
        boundary.push(idx(j, 0));
    }
    let mut param = Vec::with_capacity(boundary.len());
    let mut acc = 0.0;
    for (i, &b) in boundary.iter().enumerate() {
        if i > 0 {
            acc += (nodes[b as usize] - nodes[boundary[i - 1] as usize]).norm();
        }
        param.push(acc);
    }
    Mesh::new(nodes, tris, boundary, param)
}

/// Piecewise-linear complex-valued field on a mesh.
pub struct MeshField {
    mesh: Arc<Mesh>,
    values: Vec<Point>,
}

impl MeshField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<Point>) -> Result<MeshField> {
        if values.len() != mesh.node_count() {
            return Err(Error::invalid("one value per mesh node required"));
        }
        Ok(MeshField { mesh, values })
    }

    pub fn zero(mesh: Arc<Mesh>) -> MeshField {
        let values = vec![Point::new(0.0, 0.0); mesh.node_count()];
        MeshField { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Point] {
        &mut self.values
    }

    /// Jacobian matrix [u_x, u_y, v_x, v_y] on triangle `t`.
    pub fn jacobian(&self, t: usize) -> [f64; 4] {
        let tri = self.mesh.tris()[t];
        let g = self.mesh.grads(t);
        let mut j = [0.0; 4];
        for i in 0..3 {
            let w = self.values[tri[i] as usize];
            j[0] += w.re * g[i].re;
            j[1] += w.re * g[i].im;
            j[2] += w.im * g[i].re;
            j[3] += w.im * g[i].im;
        }
        j
    }

    pub fn jacobian_det(&self, t: usize) -> f64 {
        let j = self.jacobian(t);
        j[0] * j[3] - j[1] * j[2]
    }

    /// Fraction of triangles with strictly positive Jacobian.
    pub fn positive_jacobian_fraction(&self) -> f64 {
        let good = (0..self.mesh.tri_count())
            .filter(|&t| self.jacobian_det(t) > 0.0)
            .count();
        good as f64 / self.mesh.tri_count() as f64
    }

    /// Integral of |Du|^2 (both components).
    pub fn dirichlet_energy(&self) -> f64 {
        self.p_energy(2.0, 0.0)
    }

    /// Integral of (|Du|^2 + mu^2)^{p/2} with the Frobenius norm.
    pub fn p_energy(&self, p: f64, mu: f64) -> f64 {
        let terms: Vec<f64> = (0..self.mesh.tri_count())
            .map(|t| {
                let j = self.jacobian(t);
                let q = j.iter().map(|v| v * v).sum::<f64>() + mu * mu;
                self.mesh.area(t) * q.powf(0.5 * p)
            })
            .collect();
        pairwise_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cusp_domain;

    #[test]
    fn disk_mesh_counts_match_closed_forms() {
        for (level, nodes, tris) in [(0u32, 7usize, 6usize), (2, 61, 96), (5, 3169, 6144)] {
            let m = disk_mesh(level);
            assert_eq!(m.node_count(), nodes);
            assert_eq!(m.tri_count(), tris);
            assert_eq!(m.boundary().len(), 6 << level);
        }
    }

    #[test]
    fn disk_mesh_area_equals_inscribed_polygon_area() {
        let m = disk_mesh(5);
        let n = 6.0 * 32.0;
        let exact = 0.5 * n * (std::f64::consts::TAU / n).sin();
        assert!((m.total_area() - exact).abs() < 1e-12, "{}", m.total_area());
    }

    #[test]
    fn disk_boundary_is_the_outer_ring_in_angle_order() {
        let m = disk_mesh(3);
        let th = m.boundary_param();
        for (i, &b) in m.boundary().iter().enumerate() {
            let p = m.node(b as usize);
            assert!((p.norm() - 1.0).abs() < 1e-12);
            assert!((p.im.atan2(p.re).rem_euclid(std::f64::consts::TAU) - th[i]).abs() < 1e-9);
            if i > 0 {
                assert!(th[i] > th[i - 1]);
            }
        }
    }

    #[test]
    fn cusp_mesh_covers_the_region_and_walks_its_boundary() {
        let layout = cusp_domain(0.5, 32).unwrap();
        let m = cusp_mesh(&layout, 16, 1.5).unwrap();
        assert_eq!(m.node_count(), 63 * 17 + 2);
        // first boundary node is the cusp tip itself
        let tip = m.node(m.boundary()[0] as usize);
        assert_eq!((tip.re, tip.im), (0.0, 0.0));
        // every boundary node sits on the graph or on the cap circle
        for &b in m.boundary() {
            let p = m.node(b as usize);
            let on_graph = (p.im - p.re.abs().sqrt()).abs() < 1e-12;
            let on_cap = ((p - Point::new(0.0, 1.0)).norm() - 1.0).abs() < 1e-12;
            assert!(on_graph || on_cap, "stray boundary node {p}");
        }
        // triangle areas add up exactly to the boundary polygon area
        let loop_pts: Vec<Point> = m.boundary().iter().map(|&b| m.node(b as usize)).collect();
        let mut shoelace = 0.0;
        for (i, &p) in loop_pts.iter().enumerate() {
            let q = loop_pts[(i + 1) % loop_pts.len()];
            shoelace += 0.5 * (p.re * q.im - p.im * q.re);
        }
        assert!(
            (m.total_area() - shoelace).abs() < 1e-12,
            "{} vs {shoelace}",
            m.total_area()
        );
        // and lands near the smooth region's area
        let smooth = std::f64::consts::FRAC_PI_2 + 2.0 * 0.5 / 1.5;
        assert!((m.total_area() - smooth).abs() < 0.03);
    }

    #[test]
    fn affine_fields_have_exact_gradients() {
        let mesh = Arc::new(disk_mesh(3));
        let values: Vec<Point> = mesh
            .nodes()
            .iter()
            .map(|p| {
                Point::new(2.0 * p.re - 3.0 * p.im + 1.0, p.re + 4.0 * p.im)
            })
            .collect();
        let f = MeshField::new(mesh.clone(), values).unwrap();
        for t in [0, 17, mesh.tri_count() - 1] {
            let j = f.jacobian(t);
            for (got, want) in j.iter().zip([2.0, -3.0, 1.0, 4.0]) {
                assert!((got - want).abs() < 1e-11, "{j:?}");
            }
            assert!((f.jacobian_det(t) - 11.0).abs() < 1e-9);
        }
        assert_eq!(f.positive_jacobian_fraction(), 1.0);
        let want = (4.0 + 9.0 + 1.0 + 16.0) * mesh.total_area();
        assert!((f.dirichlet_energy() - want).abs() < 1e-9 * want);
        assert!((f.p_energy(2.0, 0.0) - want).abs() < 1e-9 * want);
        // p = 1 with mu = 0 integrates the Frobenius norm itself
        let want1 = 30.0f64.sqrt() * mesh.total_area();
        assert!((f.p_energy(1.0, 0.0) - want1).abs() < 1e-9 * want1);
    }
}
