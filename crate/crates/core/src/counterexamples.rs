//! Quantitative sharpness studies: partial sums of the slice lower bounds
//! that rule out finite-energy extensions of the spiral and cusp boundary
//! maps, a per-slice energy comparison for mesh fields, divergence
//! certificates over level ladders, and a mesh-refinement escalation study
//! for p-harmonic extensions into power cusps.

use std::sync::Arc;

use crate::boundary::{cusp_boundary_map, CuspMap};
use crate::error::{Error, Result};
use crate::extension::p_harmonic_fem;
use crate::geometry::{cusp_domain, CuspLayout, SpiralLayout};
use crate::mesh::{cusp_mesh, Mesh, MeshField};
use crate::numeric::{inverse_square_tail, linear_fit, pairwise_sum, par_map};
use crate::Point;

/// Chunk width for parallel partial sums; fixed so results do not depend
/// on the number of worker threads.
const SUM_CHUNK: u64 = 1 << 16;

/// Default per-level growth factor a divergence certificate demands.
pub const CERT_GROWTH: f64 = 1.02;

/// Per-refinement growth that counts as escalation of a mesh energy.
pub const ESCALATION_FACTOR: f64 = 1.1;

/// Relative change under which a refinement ladder counts as stabilized.
pub const STABILITY_TOL: f64 = 0.05;

/// Room height of the default spiral family.
pub fn spiral_height(k: u64) -> f64 {
    1.0 / k as f64
}

/// Required image separation of the default spiral family.
pub fn spiral_separation(k: u64) -> f64 {
    1.0 / (1.0 + k as f64).ln()
}

/// Tail of the default cusp increments 1/k^2 from term `k` on.
pub fn cusp_tail(k: u64) -> f64 {
    inverse_square_tail(k as f64)
}

/// Required image separation of the default cusp family; its p-th power
/// is 1/log(1+k), making the lower-bound series diverge for every p.
pub fn cusp_separation(k: u64, p: f64) -> f64 {
    (1.0 + k as f64).ln().powf(-1.0 / p)
}

fn partial_sum(n: u64, term: impl Fn(u64) -> f64 + Sync) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("partial sums need at least one term"));
    }
    let chunks = n.div_ceil(SUM_CHUNK) as usize;
    let sums = par_map(chunks, |c| {
        let a = c as u64 * SUM_CHUNK + 1;
        let b = (a + SUM_CHUNK - 1).min(n);
        let mut acc = 0.0;
        for k in a..=b {
            acc += term(k);
        }
        acc
    });
    Ok(pairwise_sum(&sums))
}

/// Partial sum of the spiral lower bound: any candidate extension spends
/// gradient mass at least `height * separation` in room `k`, so the total
/// variation of the extension dominates this series.
pub fn spiral_lower_bound<H, D>(n: u64, height: H, separation: D) -> Result<f64>
where
    H: Fn(u64) -> f64 + Sync,
    D: Fn(u64) -> f64 + Sync,
{
    partial_sum(n, |k| height(k) * separation(k))
}

/// Partial sum of the cusp slice bound sum of d_k^p eps_k / tail_k, where
/// eps_k = tail(k) - tail(k+1) is recovered from the supplied tail
/// function.  Taking tails rather than increments keeps the deep terms
/// exact: the default tails have a closed form good to 1e-12, while
/// truncating the raw series there would need about 10^12 terms each.
pub fn cusp_lower_bound<T, D>(n: u64, p: f64, tail: T, separation: D) -> Result<f64>
where
    T: Fn(u64) -> f64 + Sync,
    D: Fn(u64) -> f64 + Sync,
{
    if !(1.0 < p && p < 2.0) {
        return Err(Error::invalid("slice exponent must lie in (1, 2)"));
    }
    partial_sum(n, |k| {
        let t = tail(k);
        separation(k).powf(p) * (t - tail(k + 1)) / t
    })
}

/// Divergence evidence from a ladder of partial sums.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    /// `(N, partial sum)` per requested level.
    pub levels: Vec<(u64, f64)>,
    /// Every successive level grew by at least the configured factor.
    pub certificate: bool,
    /// Growth factor the certificate demanded.
    pub min_ratio: f64,
    /// Slope of the partial sums against log log N.
    pub loglog_slope: f64,
    pub r2: f64,
}

/// Evaluates a lower-bound series at increasing truncation levels and
/// certifies divergence when every level-to-level ratio clears
/// `min_ratio`.  The growth rate is fitted against log log N, the scale
/// on which both default families grow linearly.
pub fn divergence_certificate(
    bound: impl Fn(u64) -> Result<f64>,
    levels: &[u64],
    min_ratio: f64,
) -> Result<CertificateReport> {
    if levels.len() < 2 {
        return Err(Error::invalid("a certificate needs at least two levels"));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("levels must increase strictly"));
    }
    if levels[0] < 2 {
        return Err(Error::invalid("levels must start at 2 or later"));
    }
    let mut table = Vec::with_capacity(levels.len());
    for &n in levels {
        table.push((n, bound(n)?));
    }
    let certificate = table
        .windows(2)
        .all(|w| w[0].1 > 0.0 && w[1].1 >= min_ratio * w[0].1);
    let x: Vec<f64> = table.iter().map(|&(n, _)| (n as f64).ln().ln()).collect();
    let y: Vec<f64> = table.iter().map(|&(_, v)| v).collect();
    let fit = linear_fit(&x, &y);
    Ok(CertificateReport {
        levels: table,
        certificate,
        min_ratio,
        loglog_slope: fit.slope,
        r2: fit.r2,
    })
}

/// Axis-aligned slice with the least distance any crossing segment's
/// image must travel.
#[derive(Debug, Clone, Copy)]
pub struct Slice {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub separation: f64,
}

impl Slice {
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
}

/// Pairwise-disjoint slices of one domain.
#[derive(Debug, Clone)]
pub struct SliceFamily {
    slices: Vec<Slice>,
}

impl SliceFamily {
    pub fn new(slices: Vec<Slice>) -> Result<SliceFamily> {
        if slices.is_empty() {
            return Err(Error::invalid("a slice family needs at least one slice"));
        }
        for s in &slices {
            let vals = [s.x0, s.x1, s.y0, s.y1, s.separation];
            if vals.iter().any(|v| !v.is_finite()) || s.separation < 0.0 {
                return Err(Error::invalid("slice metadata must be finite"));
            }
            if !(s.x1 > s.x0 && s.y1 > s.y0) {
                return Err(Error::invalid("slices need positive width and height"));
            }
        }
        for (i, a) in slices.iter().enumerate() {
            for b in &slices[i + 1..] {
                let x_overlap = a.x0 < b.x1 && b.x0 < a.x1;
                let y_overlap = a.y0 < b.y1 && b.y0 < a.y1;
                if x_overlap && y_overlap {
                    return Err(Error::invalid("slices must be pairwise disjoint"));
                }
            }
        }
        Ok(SliceFamily { slices })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }
}

/// Horizontal strips of a cusp domain between consecutive branch knots
/// of the boundary map.  Strip k spans the heights of knots k-1 and k;
/// its widest segment joins the mirrored knots at height y_{k-1}, and a
/// crossing segment's image must join two circle arcs separated by the
/// chord at the deeper knot angle.
pub fn cusp_slices(map: &CuspMap, count: usize) -> Result<SliceFamily> {
    if count == 0 || count >= map.ys.len() {
        return Err(Error::invalid("strip count must stay within the knots"));
    }
    let slices = (1..=count)
        .map(|k| Slice {
            x0: -map.xs[k - 1],
            x1: map.xs[k - 1],
            y0: map.ys[k],
            y1: map.ys[k - 1],
            separation: 2.0 * map.thetas[k].sin(),
        })
        .collect();
    SliceFamily::new(slices)
}

/// Rectangular room interiors of a spiral layout, with the default
/// required image separations.  At p = 1 the separation bound of room k
/// is exactly the series term `spiral_height(k) * spiral_separation(k)`:
/// the room's crossing segments must each travel the separation, and
/// there is a room's height worth of them.
pub fn spiral_slices(layout: &SpiralLayout, count: usize) -> Result<SliceFamily> {
    if count == 0 || count > layout.rooms {
        return Err(Error::invalid("room count must stay within the layout"));
    }
    let slices = (1..=count)
        .map(|k| Slice {
            x0: layout.xs[k - 1],
            x1: layout.xs[k - 1] + layout.widths[k - 1],
            y0: 0.0,
            y1: layout.heights[k - 1],
            separation: spiral_separation(k as u64),
        })
        .collect();
    SliceFamily::new(slices)
}

/// Per-slice energy accounting of a mesh field.
#[derive(Debug, Clone, Copy, Default)]
pub struct SliceBound {
    /// Measured slice area (mesh triangles clipped to the slice).
    pub area: f64,
    /// Integral of |DH| over the slice.
    pub gradient_mass: f64,
    /// Integral of |DH|^p over the slice.
    pub measured: f64,
    /// gradient_mass^p / area^{p-1}; never exceeds `measured`.
    pub holder: f64,
    /// (separation * height)^p / area^{p-1}: what the image separation
    /// alone forces, if every crossing segment's image really travels
    /// the required distance.
    pub separation_bound: f64,
}

/// Compares the measured p-energy of each slice against its own
/// gradient mass (a sharp discrete inequality) and against the
/// separation requirement of the slice family.
pub fn slice_energy_bound(
    field: &MeshField,
    family: &SliceFamily,
    p: f64,
) -> Result<Vec<SliceBound>> {
    if !(p >= 1.0) {
        return Err(Error::invalid("slice exponent must be at least 1"));
    }
    let mesh = field.mesh().clone();
    let norms: Vec<f64> = (0..mesh.tri_count())
        .map(|t| {
            let j = field.jacobian(t);
            j.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();
    let bounds = par_map(family.slices().len(), |i| {
        let sl = family.slices()[i];
        let mut area = 0.0;
        let mut mass = 0.0;
        let mut energy = 0.0;
        for t in 0..mesh.tri_count() {
            let tri = mesh.tris()[t];
            let v = [
                mesh.node(tri[0] as usize),
                mesh.node(tri[1] as usize),
                mesh.node(tri[2] as usize),
            ];
            if v.iter().all(|q| q.im <= sl.y0)
                || v.iter().all(|q| q.im >= sl.y1)
                || v.iter().all(|q| q.re <= sl.x0)
                || v.iter().all(|q| q.re >= sl.x1)
            {
                continue;
            }
            let a = clip_area(&v, &sl);
            if a <= 0.0 {
                continue;
            }
            area += a;
            mass += a * norms[t];
            energy += a * norms[t].powf(p);
        }
        SliceBound {
            area,
            gradient_mass: mass,
            measured: energy,
            holder: 0.0,
            separation_bound: 0.0,
        }
    });
    bounds
        .into_iter()
        .zip(family.slices())
        .map(|(mut b, sl)| {
            if b.area <= 0.0 {
                return Err(Error::Geometry(
                    "slice not covered by the mesh".into(),
                ));
            }
            let scale = b.area.powf(p - 1.0);
            b.holder = b.gradient_mass.powf(p) / scale;
            b.separation_bound = (sl.separation * sl.height()).powf(p) / scale;
            Ok(b)
        })
        .collect()
}

/// Area of a triangle clipped to a slice rectangle.
fn clip_area(tri: &[Point; 3], sl: &Slice) -> f64 {
    let mut poly: Vec<Point> = tri.to_vec();
    let planes: [(f64, f64, f64); 4] = [
        (1.0, 0.0, -sl.x0),
        (-1.0, 0.0, sl.x1),
        (0.0, 1.0, -sl.y0),
        (0.0, -1.0, sl.y1),
    ];
    for &(nx, ny, c) in &planes {
        if poly.is_empty() {
            return 0.0;
        }
        let inside = |q: &Point| nx * q.re + ny * q.im + c >= 0.0;
        let mut out = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let ia = inside(&a);
            let ib = inside(&b);
            if ia {
                out.push(a);
            }
            if ia != ib {
                let fa = nx * a.re + ny * a.im + c;
                let fb = nx * b.re + ny * b.im + c;
                let t = fa / (fa - fb);
                out.push(a + (b - a) * t);
            }
        }
        poly = out;
    }
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        acc += a.re * b.im - b.re * a.im;
    }
    0.5 * acc.abs()
}

/// Mesh-refinement ladder of p-harmonic extension energies into a cusp.
#[derive(Debug, Clone)]
pub struct EscalationStudy {
    /// `(node count, p-energy)` per refinement level.
    pub energies: Vec<(usize, f64)>,
    /// Successive energy ratios.
    pub ratios: Vec<f64>,
    /// Every ratio cleared `ESCALATION_FACTOR`.
    pub escalating: bool,
    /// The final ratio settled within `STABILITY_TOL` of one.
    pub stabilized: bool,
}

/// Boundary values for a cusp mesh: each boundary node is located
/// geometrically on the fine reference polygon and pushed through the
/// inverse of the boundary map, so every refinement level samples the
/// same homeomorphism rather than a remeshed approximation of it.
fn cusp_trace_values(mesh: &Mesh, fine: &CuspLayout, map: &CuspMap) -> Vec<Point> {
    let inv = map.map.inverted();
    let (cap_a, cap_b) = fine.cap;
    mesh.boundary()
        .iter()
        .map(|&b| {
            let q = mesh.node(b as usize);
            let graph_y = q.re.abs().powf(fine.s);
            let s_fine = if q.im <= graph_y + 1e-9 {
                if q.re >= 0.0 {
                    fine.right_arclength(q.re)
                } else {
                    fine.left_arclength(-q.re)
                }
            } else {
                let angle = (q.im - 1.0).atan2(q.re);
                cap_a + angle / std::f64::consts::PI * (cap_b - cap_a)
            };
            inv.eval(s_fine)
        })
        .collect()
}

/// Solves the p-harmonic extension of the default cusp boundary map on
/// a ladder of transfinite meshes, doubling both the column grid and the
/// row count per level, and reports whether the captured energy keeps
/// escalating or stabilizes.  At the critical sharpness s = p - 1 the
/// true energy is infinite, so refinements keep finding more; above the
/// critical sharpness the energy converges.
pub fn fem_escalation(s: f64, p: f64, levels: u32) -> Result<EscalationStudy> {
    if !(2..=7).contains(&levels) {
        return Err(Error::invalid("escalation needs 2..=7 levels"));
    }
    let base_n = 24usize;
    let base_rows = 8usize;
    let fine = cusp_domain(s, base_n << (levels - 1))?;
    let knots = 160;
    let d: Vec<f64> = (1..=knots as u64).map(|k| cusp_separation(k, p)).collect();
    let map = cusp_boundary_map(&fine, &d, knots, 4096)?;

    let mut energies = Vec::with_capacity(levels as usize);
    for level in 0..levels {
        let layout = cusp_domain(s, base_n << level)?;
        let mesh = Arc::new(cusp_mesh(&layout, base_rows << level, 3.0)?);
        let data = cusp_trace_values(&mesh, &fine, &map);
        let solution = p_harmonic_fem(mesh.clone(), &data, p)?;
        energies.push((mesh.node_count(), solution.field.p_energy(p, 0.0)));
    }
    let ratios: Vec<f64> = energies.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let escalating = ratios.iter().all(|&r| r >= ESCALATION_FACTOR);
    let stabilized = ratios
        .last()
        .map(|&r| (r - 1.0).abs() < STABILITY_TOL)
        .unwrap_or(false);
    Ok(EscalationStudy {
        energies,
        ratios,
        escalating,
        stabilized,
    })
}
