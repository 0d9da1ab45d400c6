//! Planar Jordan curves and domains.
//!
//! Curves are closed polylines with a cumulative arc-length table and an
//! optional analytic tag (currently: exact circles).  Domains wrap a
//! counterclockwise curve together with a bucket-grid distance index and
//! an interior witness point.  Catalog constructors at the bottom build
//! the shapes used throughout the crate: disks, polygons, a power cusp
//! capped by a circular arc, and a chain of shrinking rectangular rooms
//! joined by thin Z-shaped ducts.

use crate::error::{Error, Result};
use crate::Point;

pub fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

pub fn dot(a: Point, b: Point) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Closest point to `p` on segment [a, b].
pub fn nearest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let ab = b - a;
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return a;
    }
    let t = (dot(p - a, ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    (p - nearest_on_segment(p, a, b)).norm()
}

fn orient(p: Point, q: Point, r: Point) -> f64 {
    cross(q - p, r - p)
}

/// True if the closed segments [p1,p2] and [q1,q2] share at least one
/// point.  Collinear overlaps count as touching.
pub fn segments_touch(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| -> bool {
        d == 0.0
            && c.re <= a.re.max(b.re)
            && c.re >= a.re.min(b.re)
            && c.im <= a.im.max(b.im)
            && c.im >= a.im.min(b.im)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True if the open interiors cross at a single proper point.
pub fn segments_cross_properly(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Analytic description of a curve, when one is known exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryTag {
    Circle { center: Point, radius: f64 },
}

/// Closed polyline through `verts` (the edge from the last vertex back
/// to the first is implied), with cumulative arc lengths.
#[derive(Debug, Clone)]
pub struct JordanCurve {
    verts: Vec<Point>,
    cum: Vec<f64>,
    tag: Option<BoundaryTag>,
}

impl JordanCurve {
    pub fn new(verts: Vec<Point>) -> Result<Self> {
        Self::build(verts, None, true)
    }

    pub fn with_tag(verts: Vec<Point>, tag: BoundaryTag) -> Result<Self> {
        Self::build(verts, Some(tag), true)
    }

    /// Skips the O(n)-with-grid self-intersection sweep; intended for
    /// very fine polylines produced by trusted refinement loops.
    pub fn new_unchecked(verts: Vec<Point>) -> Result<Self> {
        Self::build(verts, None, false)
    }

    fn build(verts: Vec<Point>, tag: Option<BoundaryTag>, check_simple: bool) -> Result<Self> {
        if verts.len() < 3 {
            return Err(Error::invalid("a Jordan curve needs at least 3 vertices"));
        }
        if verts.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::invalid("curve vertex is not finite"));
        }
        let n = verts.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let len = (verts[(i + 1) % n] - verts[i]).norm();
            if len == 0.0 {
                return Err(Error::geometry(format!("zero-length edge at vertex {i}")));
            }
            cum.push(cum[i] + len);
        }
        let curve = JordanCurve { verts, cum, tag };
        if check_simple {
            curve.assert_simple()?;
        }
        Ok(curve)
    }

    fn assert_simple(&self) -> Result<()> {
        let n = self.verts.len();
        // consecutive edges may share only their common vertex: reject
        // exact fold-backs
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let c = self.verts[(i + 2) % n];
            if orient(a, b, c) == 0.0 && dot(b - a, c - b) < 0.0 {
                return Err(Error::geometry(format!("edge {i} folds back on itself")));
            }
        }
        let grid = SegmentGrid::build(&self.segments_vec());
        for i in 0..n {
            let (a, b) = self.segment(i);
            let mut hit = false;
            grid.for_candidates(a, b, |j| {
                if hit || j <= i {
                    return;
                }
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    return;
                }
                let (c, d) = self.segment(j);
                if segments_touch(a, b, c, d) {
                    hit = true;
                }
            });
            if hit {
                return Err(Error::geometry(format!(
                    "curve is not simple: edge {i} touches a non-adjacent edge"
                )));
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.verts
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.verts[i % self.verts.len()]
    }

    /// Endpoints of edge `i` (from vertex i to vertex i+1).
    pub fn segment(&self, i: usize) -> (Point, Point) {
        let n = self.verts.len();
        (self.verts[i % n], self.verts[(i + 1) % n])
    }

    pub fn segments_vec(&self) -> Vec<(Point, Point)> {
        (0..self.verts.len()).map(|i| self.segment(i)).collect()
    }

    pub fn total_length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Arc length at vertex `i` (i may equal vertex_count, giving the
    /// total length).
    pub fn arclength_of_vertex(&self, i: usize) -> f64 {
        self.cum[i]
    }

    /// Point at arc length `s`, wrapping modulo the total length.
    pub fn point_at(&self, s: f64) -> Point {
        let total = self.total_length();
        let mut s = s % total;
        if s < 0.0 {
            s += total;
        }
        let i = match self
            .cum
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.verts.len() - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.segment(i);
        let seg = self.cum[i + 1] - self.cum[i];
        a + (b - a) * ((s - self.cum[i]) / seg)
    }

    /// Unit tangent at arc length `s` (constant per edge).
    pub fn tangent_at(&self, s: f64) -> Point {
        let total = self.total_length();
        let mut s = s % total;
        if s < 0.0 {
            s += total;
        }
        let i = match self
            .cum
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.verts.len() - 1),
            Err(i) => i - 1,
        };
        let (a, b) = self.segment(i);
        (b - a) / (b - a).norm()
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.verts.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            s += cross(a, b);
        }
        0.5 * s
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn reversed(&self) -> JordanCurve {
        let mut verts = self.verts.clone();
        verts.reverse();
        // rotation keeps vertex 0 first
        verts.rotate_right(1);
        JordanCurve::build(verts, self.tag, false).expect("reversal preserves validity")
    }

    pub fn tag(&self) -> Option<BoundaryTag> {
        self.tag
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = self.verts[0];
        let mut hi = self.verts[0];
        for p in &self.verts {
            lo.re = lo.re.min(p.re);
            lo.im = lo.im.min(p.im);
            hi.re = hi.re.max(p.re);
            hi.im = hi.im.max(p.im);
        }
        (lo, hi)
    }

    /// Apply a point transform; the analytic tag is dropped and the
    /// result is revalidated.
    pub fn mapped(&self, f: impl Fn(Point) -> Point) -> Result<JordanCurve> {
        JordanCurve::new(self.verts.iter().map(|&p| f(p)).collect())
    }

    /// True when the two curves run through the same vertices, within
    /// `tol` per vertex.
    pub fn same_geometry(&self, other: &JordanCurve, tol: f64) -> bool {
        self.verts.len() == other.verts.len()
            && self
                .verts
                .iter()
                .zip(&other.verts)
                .all(|(a, b)| (a - b).norm() <= tol)
    }
}

/// Uniform bucket grid over a set of segments, used for distance
/// queries and intersection sweeps.  Cell size tracks the mean segment
/// length but the grid never exceeds ~4M cells.
pub struct SegmentGrid {
    segs: Vec<(Point, Point)>,
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
    cell_start: Vec<u32>,
    cell_items: Vec<u32>,
}

impl SegmentGrid {
    pub fn build(segs: &[(Point, Point)]) -> SegmentGrid {
        assert!(!segs.is_empty());
        let mut lo = segs[0].0;
        let mut hi = segs[0].0;
        let mut total = 0.0;
        for &(a, b) in segs {
            for p in [a, b] {
                lo.re = lo.re.min(p.re);
                lo.im = lo.im.min(p.im);
                hi.re = hi.re.max(p.re);
                hi.im = hi.im.max(p.im);
            }
            total += (b - a).norm();
        }
        let w = (hi.re - lo.re).max(1e-30);
        let ht = (hi.im - lo.im).max(1e-30);
        let diag = (w * w + ht * ht).sqrt();
        let mut h = (total / segs.len() as f64).max(diag / 2048.0);
        let mut nx = (w / h).ceil() as usize + 1;
        let mut ny = (ht / h).ceil() as usize + 1;
        if nx.saturating_mul(ny) > 4_000_000 {
            let scale = ((nx * ny) as f64 / 4_000_000.0).sqrt();
            h *= scale;
            nx = (w / h).ceil() as usize + 1;
            ny = (ht / h).ceil() as usize + 1;
        }
        let cell_of = |p: Point| -> (usize, usize) {
            let i = (((p.re - lo.re) / h) as isize).clamp(0, nx as isize - 1) as usize;
            let j = (((p.im - lo.im) / h) as isize).clamp(0, ny as isize - 1) as usize;
            (i, j)
        };
        // two-pass CSR fill over the bbox cover of each segment
        let mut counts = vec![0u32; nx * ny + 1];
        let mut covers: Vec<(usize, usize, usize, usize)> = Vec::with_capacity(segs.len());
        for &(a, b) in segs {
            let (i0, j0) = cell_of(Point::new(a.re.min(b.re), a.im.min(b.im)));
            let (i1, j1) = cell_of(Point::new(a.re.max(b.re), a.im.max(b.im)));
            covers.push((i0, j0, i1, j1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let mut items = vec![0u32; *counts.last().unwrap() as usize];
        let mut next = counts.clone();
        for (idx, &(i0, j0, i1, j1)) in covers.iter().enumerate() {
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let c = j * nx + i;
                    items[next[c] as usize] = idx as u32;
                    next[c] += 1;
                }
            }
        }
        SegmentGrid {
            segs: segs.to_vec(),
            origin: lo,
            h,
            nx,
            ny,
            cell_start: counts,
            cell_items: items,
        }
    }

    fn cell_index(&self, p: Point) -> (i64, i64) {
        (
            ((p.re - self.origin.re) / self.h).floor() as i64,
            ((p.im - self.origin.im) / self.h).floor() as i64,
        )
    }

    /// Visit indices of segments registered in cells covered by the
    /// bbox of [a, b], inflated by one cell.
    pub fn for_candidates(&self, a: Point, b: Point, mut f: impl FnMut(usize)) {
        let (i0, j0) = self.cell_index(Point::new(a.re.min(b.re), a.im.min(b.im)));
        let (i1, j1) = self.cell_index(Point::new(a.re.max(b.re), a.im.max(b.im)));
        let i0 = (i0 - 1).clamp(0, self.nx as i64 - 1) as usize;
        let j0 = (j0 - 1).clamp(0, self.ny as i64 - 1) as usize;
        let i1 = (i1 + 1).clamp(0, self.nx as i64 - 1) as usize;
        let j1 = (j1 + 1).clamp(0, self.ny as i64 - 1) as usize;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = j * self.nx + i;
                for k in self.cell_start[c]..self.cell_start[c + 1] {
                    f(self.cell_items[k as usize] as usize);
                }
            }
        }
    }

    /// Nearest point on the segment set: (distance, point, segment id).
    /// Expanding-ring search; exact with respect to the stored segments.
    pub fn nearest(&self, p: Point) -> (f64, Point, usize) {
        let (ci, cj) = self.cell_index(p);
        let mut best = f64::INFINITY;
        let mut best_pt = self.segs[0].0;
        let mut best_id = 0usize;
        let max_ring = (self.nx + self.ny) as i64 + 2;
        let mut ring = 0i64;
        loop {
            if ring > 0 && (ring - 1) as f64 * self.h >= best {
                break;
            }
            let mut any_cell = false;
            let mut visit = |i: i64, j: i64, f: &mut dyn FnMut(usize)| {
                if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                    return;
                }
                any_cell = true;
                let c = j as usize * self.nx + i as usize;
                for k in self.cell_start[c]..self.cell_start[c + 1] {
                    f(self.cell_items[k as usize] as usize);
                }
            };
            let mut update = |idx: usize| {
                let (a, b) = self.segs[idx];
                let q = nearest_on_segment(p, a, b);
                let d = (p - q).norm();
                if d < best {
                    best = d;
                    best_pt = q;
                    best_id = idx;
                }
            };
            if ring == 0 {
                visit(ci, cj, &mut update);
            } else {
                for i in (ci - ring)..=(ci + ring) {
                    visit(i, cj - ring, &mut update);
                    visit(i, cj + ring, &mut update);
                }
                for j in (cj - ring + 1)..=(cj + ring - 1) {
                    visit(ci - ring, j, &mut update);
                    visit(ci + ring, j, &mut update);
                }
            }
            ring += 1;
            if ring > max_ring && best.is_finite() {
                break;
            }
            if ring > 4 * max_ring {
                break; // unreachable for nonempty grids; safety net
            }
            let _ = any_cell;
        }
        (best, best_pt, best_id)
    }
}

/// Distance-to-boundary queries, analytic when the curve is a tagged
/// circle, bucket-grid otherwise.
pub struct DistanceIndex {
    tag: Option<BoundaryTag>,
    grid: SegmentGrid,
}

impl DistanceIndex {
    pub fn build(curve: &JordanCurve) -> DistanceIndex {
        DistanceIndex {
            tag: curve.tag(),
            grid: SegmentGrid::build(&curve.segments_vec()),
        }
    }

    pub fn distance(&self, p: Point) -> f64 {
        if let Some(BoundaryTag::Circle { center, radius }) = self.tag {
            return (radius - (p - center).norm()).abs();
        }
        self.grid.nearest(p).0
    }

    pub fn nearest(&self, p: Point) -> (f64, Point) {
        if let Some(BoundaryTag::Circle { center, radius }) = self.tag {
            let r = (p - center).norm();
            if r == 0.0 {
                return (radius, center + Point::new(radius, 0.0));
            }
            let q = center + (p - center) * (radius / r);
            return ((radius - r).abs(), q);
        }
        let (d, q, _) = self.grid.nearest(p);
        (d, q)
    }
}

/// A Jordan domain: counterclockwise boundary curve plus a distance
/// index and an interior witness point.
pub struct JordanDomain {
    curve: JordanCurve,
    index: DistanceIndex,
    bbox: (Point, Point),
    witness: Point,
}

impl JordanDomain {
    pub fn new(curve: JordanCurve) -> Result<Self> {
        let curve = if curve.is_ccw() { curve } else { curve.reversed() };
        let index = DistanceIndex::build(&curve);
        let bbox = curve.bbox();
        let witness = find_witness(&curve)?;
        Ok(JordanDomain {
            curve,
            index,
            bbox,
            witness,
        })
    }

    pub fn curve(&self) -> &JordanCurve {
        &self.curve
    }

    pub fn area(&self) -> f64 {
        self.curve.signed_area()
    }

    pub fn bbox(&self) -> (Point, Point) {
        self.bbox
    }

    pub fn diameter(&self) -> f64 {
        (self.bbox.1 - self.bbox.0).norm()
    }

    pub fn witness(&self) -> Point {
        self.witness
    }

    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        self.index.distance(p)
    }

    pub fn nearest_boundary_point(&self, p: Point) -> (f64, Point) {
        self.index.nearest(p)
    }

    /// Strict interior test: boundary points (to within 1e-12 of the
    /// diameter) report false.
    pub fn contains(&self, p: Point) -> bool {
        if p.re < self.bbox.0.re
            || p.re > self.bbox.1.re
            || p.im < self.bbox.0.im
            || p.im > self.bbox.1.im
        {
            return false;
        }
        if !even_odd_inside(&self.curve, p) {
            return false;
        }
        self.dist_to_boundary(p) > 1e-12 * self.diameter().max(1.0)
    }
}

/// Even-odd crossing parity; points exactly on the boundary are
/// classified arbitrarily.
pub fn even_odd_inside(curve: &JordanCurve, p: Point) -> bool {
    let n = curve.vertex_count();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = curve.segment(i);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (b.re - a.re) * (p.im - a.im) / (b.im - a.im);
            if x > p.re {
                inside = !inside;
            }
        }
    }
    inside
}

/// Sorted x-intercepts of the boundary with the horizontal line
/// `y = row`, using the same half-open rule as `even_odd_inside`.
pub fn row_crossings(curve: &JordanCurve, row: f64) -> Vec<f64> {
    let n = curve.vertex_count();
    let mut xs = Vec::new();
    for i in 0..n {
        let (a, b) = curve.segment(i);
        if (a.im > row) != (b.im > row) {
            xs.push(a.re + (b.re - a.re) * (row - a.im) / (b.im - a.im));
        }
    }
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    xs
}

fn find_witness(curve: &JordanCurve) -> Result<Point> {
    let (lo, hi) = curve.bbox();
    // scan a few irrationally-placed rows to dodge vertex alignments
    for k in 0..32 {
        let f = (0.5 + 0.13723 * k as f64).fract();
        let row = lo.im + (hi.im - lo.im) * (0.31 + 0.38 * f);
        let xs = row_crossings(curve, row);
        for pair in xs.chunks(2) {
            if pair.len() == 2 && pair[1] - pair[0] > 1e-12 {
                return Ok(Point::new(0.5 * (pair[0] + pair[1]), row));
            }
        }
    }
    Err(Error::geometry("could not locate an interior point"))
}

// ---------------------------------------------------------------------
// catalog constructors
// ---------------------------------------------------------------------

pub fn circle_curve(center: Point, radius: f64, n: usize) -> JordanCurve {
    let verts: Vec<Point> = (0..n)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            center + Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    JordanCurve::with_tag(verts, BoundaryTag::Circle { center, radius })
        .expect("circle polyline is simple")
}

pub fn unit_circle_curve(n: usize) -> JordanCurve {
    circle_curve(Point::new(0.0, 0.0), 1.0, n)
}

pub fn disk_domain(n: usize) -> JordanDomain {
    JordanDomain::new(unit_circle_curve(n)).expect("disk is a Jordan domain")
}

pub fn square_domain() -> JordanDomain {
    let v = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ];
    JordanDomain::new(JordanCurve::new(v).unwrap()).unwrap()
}

/// Regular convex polygon of `k` vertices, circumradius `r`, first
/// vertex straight up.
pub fn regular_polygon_domain(k: usize, r: f64) -> JordanDomain {
    let verts: Vec<Point> = (0..k)
        .map(|j| {
            let t = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            Point::new(r * t.cos(), r * t.sin())
        })
        .collect();
    JordanDomain::new(JordanCurve::new(verts).unwrap()).unwrap()
}

pub fn pentagon_domain() -> JordanDomain {
    regular_polygon_domain(5, 1.0)
}

/// [0,2]^2 with the closed top-right unit square removed.
pub fn l_shape_domain() -> JordanDomain {
    let v = vec![
        Point::new(0.0, 0.0),
        Point::new(2.0, 0.0),
        Point::new(2.0, 1.0),
        Point::new(1.0, 1.0),
        Point::new(1.0, 2.0),
        Point::new(0.0, 2.0),
    ];
    JordanDomain::new(JordanCurve::new(v).unwrap()).unwrap()
}

/// Domain bounded below by the power graph y = |x|^s over [-1, 1] and
/// above by the circular arc |z - i| = 1, Im z >= 1.  The origin is an
/// inward cusp for s < 1.  Vertices along the graph are power-graded so
/// the polyline resolves the cusp region.
pub struct CuspLayout {
    pub s: f64,
    pub n: usize,
    /// graded |x| grid, 0 = xs[0] < ... < xs[n] = 1 (shared by branches)
    pub xs: Vec<f64>,
    pub domain: JordanDomain,
    /// arc-length spans (start, end) in boundary order
    pub right_branch: (f64, f64),
    pub cap: (f64, f64),
    pub left_branch: (f64, f64),
}

impl CuspLayout {
    /// Boundary arc length of the graph point with abscissa `x` >= 0 on
    /// the right (positive-x) branch.
    pub fn right_arclength(&self, x: f64) -> f64 {
        let j = bracket(&self.xs, x);
        let t = (x - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        let c = self.domain.curve();
        let s0 = c.arclength_of_vertex(j);
        let s1 = c.arclength_of_vertex(j + 1);
        s0 + t * (s1 - s0)
    }

    /// Boundary arc length of the graph point with abscissa `-x` on the
    /// left branch (x >= 0).
    pub fn left_arclength(&self, x: f64) -> f64 {
        let n = self.n;
        let j = bracket(&self.xs, x);
        // left-branch vertex with |x| = xs[j] sits at index 3n - j
        let c = self.domain.curve();
        let hi = c.arclength_of_vertex(3 * n - j); // |x| = xs[j]
        let lo = c.arclength_of_vertex(3 * n - j - 1); // |x| = xs[j+1]
        let t = (self.xs[j + 1] - x) / (self.xs[j + 1] - self.xs[j]);
        lo + t * (hi - lo)
    }

    /// Half-width of the domain at height y (the graph abscissa).
    pub fn half_width_at(&self, y: f64) -> f64 {
        y.powf(1.0 / self.s)
    }
}

fn bracket(xs: &[f64], x: f64) -> usize {
    debug_assert!((0.0..=1.0).contains(&x));
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(j) => j.min(xs.len() - 2),
        Err(j) => j - 1,
    }
}

pub fn cusp_domain(s: f64, n: usize) -> Result<CuspLayout> {
    if !(0.0 < s && s <= 1.0) {
        return Err(Error::invalid("cusp exponent must lie in (0, 1]"));
    }
    if n < 8 {
        return Err(Error::invalid("cusp resolution too small"));
    }
    let gamma = (2.0 / s).clamp(2.0, 8.0);
    let xs: Vec<f64> = (0..=n).map(|j| (j as f64 / n as f64).powf(gamma)).collect();
    let mut verts = Vec::with_capacity(3 * n);
    verts.push(Point::new(0.0, 0.0));
    for &x in &xs[1..] {
        verts.push(Point::new(x, x.powf(s)));
    }
    // cap arc |z - i| = 1 from (1,1) counterclockwise to (-1,1)
    for j in 1..=n {
        let a = std::f64::consts::PI * j as f64 / n as f64;
        verts.push(Point::new(a.cos(), 1.0 + a.sin()));
    }
    for &x in xs[1..n].iter().rev() {
        verts.push(Point::new(-x, x.powf(s)));
    }
    let curve = JordanCurve::new(verts)?;
    debug_assert!(curve.is_ccw());
    let c = &curve;
    let right = (0.0, c.arclength_of_vertex(n));
    let cap = (c.arclength_of_vertex(n), c.arclength_of_vertex(2 * n));
    let left = (c.arclength_of_vertex(2 * n), c.total_length());
    let domain = JordanDomain::new(curve)?;
    Ok(CuspLayout {
        s,
        n,
        xs,
        domain,
        right_branch: right,
        cap,
        left_branch: left,
    })
}

/// Chain of `rooms` shrinking rectangles on the x-axis joined by thin
/// Z-shaped ducts.  Room k (1-based) is [x_k, x_k + w_k] x [0, h_k]
/// with w_k = 2^-k, h_k = 1/k, separated by gaps g_k = 2^-(k+1).  The
/// duct between rooms k and k+1 leaves the top of room k's right wall,
/// drops through a vertical leg in the gap column and enters the bottom
/// of room k+1's left wall, so each room's left wall and right wall
/// remain long free boundary arcs.
pub struct SpiralLayout {
    pub rooms: usize,
    pub widths: Vec<f64>,
    pub heights: Vec<f64>,
    pub gaps: Vec<f64>,
    pub thickness: Vec<f64>,
    pub xs: Vec<f64>,
    pub domain: JordanDomain,
    /// arc length of the anchor point (midpoint of the last room's
    /// right wall)
    pub anchor_s: f64,
    /// traversal spans (start, end): left wall of room k, walked top to
    /// bottom on the return pass
    pub left_walls: Vec<(f64, f64)>,
    /// right wall of room k, walked bottom to top; the last room's span
    /// contains `anchor_s` in its interior
    pub right_walls: Vec<(f64, f64)>,
}

pub fn spiral_domain(rooms: usize) -> Result<SpiralLayout> {
    if !(2..=24).contains(&rooms) {
        return Err(Error::invalid("room count must lie in 2..=24"));
    }
    let widths: Vec<f64> = (1..=rooms).map(|k| 0.5f64.powi(k as i32)).collect();
    let heights: Vec<f64> = (1..=rooms).map(|k| 1.0 / k as f64).collect();
    let gaps: Vec<f64> = (1..=rooms - 1)
        .map(|k| 0.5f64.powi(k as i32 + 1))
        .collect();
    let thickness: Vec<f64> = (0..rooms - 1)
        .map(|k| gaps[k].min(heights[k + 1]) / 4.0)
        .collect();
    let mut xs = vec![0.0];
    for k in 0..rooms - 1 {
        xs.push(xs[k] + widths[k] + gaps[k]);
    }
    let xv: Vec<f64> = (0..rooms - 1)
        .map(|k| xs[k] + widths[k] + 0.5 * (gaps[k] - thickness[k]))
        .collect();

    let mut verts: Vec<Point> = Vec::new();
    let push = |x: f64, y: f64, verts: &mut Vec<Point>| -> usize {
        verts.push(Point::new(x, y));
        verts.len() - 1
    };
    // lower bank: bottoms and right walls, left to right
    let mut right_lo = vec![0usize; rooms];
    let mut right_hi = vec![0usize; rooms];
    let mut anchor_idx = 0usize;
    for k in 0..rooms {
        push(xs[k], 0.0, &mut verts);
        right_lo[k] = push(xs[k] + widths[k], 0.0, &mut verts);
        if k + 1 < rooms {
            right_hi[k] = push(xs[k] + widths[k], heights[k] - thickness[k], &mut verts);
            push(xv[k], heights[k] - thickness[k], &mut verts);
            push(xv[k], 0.0, &mut verts);
        } else {
            anchor_idx = push(xs[k] + widths[k], heights[k] / 2.0, &mut verts);
            right_hi[k] = push(xs[k] + widths[k], heights[k], &mut verts);
        }
    }
    // upper bank: tops and left walls, right to left
    let mut left_hi = vec![0usize; rooms];
    let mut left_lo = vec![0usize; rooms];
    for k in (0..rooms).rev() {
        left_hi[k] = push(xs[k], heights[k], &mut verts);
        if k > 0 {
            left_lo[k] = push(xs[k], thickness[k - 1], &mut verts);
            push(xv[k - 1] + thickness[k - 1], thickness[k - 1], &mut verts);
            push(xv[k - 1] + thickness[k - 1], heights[k - 1], &mut verts);
            push(xs[k - 1] + widths[k - 1], heights[k - 1], &mut verts);
        }
        // room 1's left wall closes back to vertex 0 = (0, 0)
    }
    left_lo[0] = 0; // closing vertex

    let curve = JordanCurve::new(verts)?;
    debug_assert!(curve.is_ccw());
    let c = &curve;
    let sl = |i: usize| c.arclength_of_vertex(i);
    let left_walls: Vec<(f64, f64)> = (0..rooms)
        .map(|k| {
            if k == 0 {
                (sl(left_hi[0]), c.total_length())
            } else {
                (sl(left_hi[k]), sl(left_lo[k]))
            }
        })
        .collect();
    let right_walls: Vec<(f64, f64)> = (0..rooms)
        .map(|k| (sl(right_lo[k]), sl(right_hi[k])))
        .collect();
    let anchor_s = sl(anchor_idx);
    let domain = JordanDomain::new(curve)?;
    Ok(SpiralLayout {
        rooms,
        widths,
        heights,
        gaps,
        thickness,
        xs,
        domain,
        anchor_s,
        left_walls,
        right_walls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn circle_polyline_length_and_area_approach_analytic_values() {
        let c = unit_circle_curve(1024);
        let pi = std::f64::consts::PI;
        assert!((c.total_length() - 2.0 * pi).abs() < 1e-4);
        assert!((c.signed_area() - pi).abs() < 1e-4);
        assert!(c.is_ccw());
    }

    #[test]
    fn point_at_walks_at_unit_speed_and_wraps() {
        let c = unit_circle_curve(256);
        let total = c.total_length();
        let a = c.point_at(1.0);
        let b = c.point_at(1.0 + 1e-4);
        assert!(((b - a).norm() - 1e-4).abs() < 1e-9);
        let w = c.point_at(1.0 - total);
        assert!((w - a).norm() < 1e-12);
    }

    #[test]
    fn reversal_flips_orientation_and_keeps_length() {
        let c = unit_circle_curve(64);
        let r = c.reversed();
        assert!(!r.is_ccw());
        assert!((r.total_length() - c.total_length()).abs() < 1e-12);
        assert!((r.signed_area() + c.signed_area()).abs() < 1e-12);
    }

    #[test]
    fn self_intersecting_polygons_are_rejected() {
        // figure eight
        let v = vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        assert!(JordanCurve::new(v).is_err());
        // bowtie touching at a shared midpoint vertex
        let v = vec![
            pt(0.0, 0.0),
            pt(1.0, 1.0),
            pt(2.0, 0.0),
            pt(2.0, 2.0),
            pt(1.0, 1.0),
            pt(0.0, 2.0),
        ];
        assert!(JordanCurve::new(v).is_err());
    }

    #[test]
    fn containment_and_boundary_distance_on_the_disk() {
        let d = disk_domain(2048);
        assert!(d.contains(pt(0.5, 0.0)));
        assert!(d.contains(pt(-0.3, 0.7)));
        assert!(!d.contains(pt(1.5, 0.0)));
        assert!(!d.contains(pt(1.0, 0.0))); // boundary vertex
        // tagged circle distance is analytic
        assert!((d.dist_to_boundary(pt(0.25, 0.0)) - 0.75).abs() < 1e-14);
        assert!((d.dist_to_boundary(pt(0.0, -0.9)) - 0.1).abs() < 1e-14);
    }

    #[test]
    fn grid_nearest_agrees_with_brute_force() {
        let c = cusp_domain(0.5, 400).unwrap();
        let segs = c.domain.curve().segments_vec();
        let grid = SegmentGrid::build(&segs);
        let mut rng = crate::numeric::seeded_rng(7);
        use rand::Rng;
        for _ in 0..300 {
            let p = pt(rng.gen_range(-1.6..1.6), rng.gen_range(-0.5..2.5));
            let brute = segs
                .iter()
                .map(|&(a, b)| point_segment_distance(p, a, b))
                .fold(f64::INFINITY, f64::min);
            let (d, _, _) = grid.nearest(p);
            assert!(
                (d - brute).abs() <= 1e-12 * (1.0 + brute),
                "ring search missed the nearest segment at {p}"
            );
        }
    }

    #[test]
    fn l_shape_has_area_three_and_correct_membership() {
        let d = l_shape_domain();
        assert!((d.area() - 3.0).abs() < 1e-12);
        assert!(d.contains(pt(0.5, 0.5)));
        assert!(d.contains(pt(0.5, 1.5)));
        assert!(!d.contains(pt(1.5, 1.5)));
    }

    #[test]
    fn rigid_motions_preserve_area_and_length() {
        let d = l_shape_domain();
        let rot = Point::new(0.6, 0.8); // unit modulus
        let shift = pt(-3.0, 2.0);
        let moved = d.curve().mapped(|p| rot * p + shift).unwrap();
        assert!((moved.signed_area() - d.area()).abs() < 1e-12);
        assert!((moved.total_length() - d.curve().total_length()).abs() < 1e-12);
    }

    #[test]
    fn cusp_domain_area_matches_closed_form() {
        // area = pi/2 (half disk above y=1) + 2s/(s+1) (between graph
        // and the chord y=1)
        for &s in &[0.3, 0.5, 0.7] {
            let c = cusp_domain(s, 2048).unwrap();
            let exact = std::f64::consts::FRAC_PI_2 + 2.0 * s / (s + 1.0);
            assert!(
                (c.domain.area() - exact).abs() < 2e-4,
                "s={s}: {} vs {exact}",
                c.domain.area()
            );
        }
    }

    #[test]
    fn cusp_total_length_matches_closed_form_for_sqrt_graph() {
        // for s = 1/2 each branch has length 2*int_0^1 sqrt(u^2+1/4) du
        // = sqrt(5)/2 + (1/4) ln((1+sqrt(5)/2... ) computed once below
        let branch = 1.4789428575445974; // sqrt(1.25) + 0.25*ln((1+sqrt(1.25))/0.5)
        let exact = std::f64::consts::PI + 2.0 * branch;
        let c = cusp_domain(0.5, 1 << 14).unwrap();
        assert!(
            (c.domain.curve().total_length() - exact).abs() < 1e-4,
            "{} vs {exact}",
            c.domain.curve().total_length()
        );
    }

    #[test]
    fn cusp_arclength_lookup_is_consistent_with_point_at() {
        let c = cusp_domain(0.5, 512).unwrap();
        for &x in &[0.9, 0.5, 0.123, 0.02, 1e-3] {
            let s = c.right_arclength(x);
            let p = c.domain.curve().point_at(s);
            assert!((p.re - x).abs() < 1e-12, "right branch x={x} -> {p}");
            let s = c.left_arclength(x);
            let p = c.domain.curve().point_at(s);
            assert!((p.re + x).abs() < 1e-12, "left branch x={x} -> {p}");
        }
        // monotone: larger x on the right branch comes later
        assert!(c.right_arclength(0.2) < c.right_arclength(0.8));
        // left branch runs back toward the origin
        assert!(c.left_arclength(0.8) < c.left_arclength(0.2));
    }

    #[test]
    fn spiral_domain_is_simple_ccw_and_spans_are_coherent() {
        let s = spiral_domain(6).unwrap();
        let c = s.domain.curve();
        assert!(c.is_ccw());
        for k in 0..s.rooms {
            let (a, b) = s.right_walls[k];
            let expect = if k + 1 < s.rooms {
                s.heights[k] - s.thickness[k]
            } else {
                s.heights[k]
            };
            assert!(
                ((b - a) - expect).abs() < 1e-12,
                "right wall {k} length {} vs {expect}",
                b - a
            );
            let (a, b) = s.left_walls[k];
            let expect = if k == 0 {
                s.heights[0]
            } else {
                s.heights[k] - s.thickness[k - 1]
            };
            assert!(((b - a) - expect).abs() < 1e-12, "left wall {k}");
        }
        // anchor sits inside the last right wall span
        let (a, b) = s.right_walls[s.rooms - 1];
        assert!(a < s.anchor_s && s.anchor_s < b);
        // interior witness of each room is inside the domain
        for k in 0..s.rooms {
            let p = pt(s.xs[k] + 0.5 * s.widths[k], 0.5 * s.heights[k]);
            assert!(s.domain.contains(p), "room {k} center");
        }
    }

    #[test]
    fn each_extra_spiral_room_adds_boundary_length() {
        let a = spiral_domain(5).unwrap();
        let b = spiral_domain(6).unwrap();
        let inc = b.domain.curve().total_length() - a.domain.curve().total_length();
        assert!(
            inc >= 2.0 * b.heights[5],
            "increment {inc} vs 2 h_N = {}",
            2.0 * b.heights[5]
        );
    }
}
