//! A small family of analytic reference maps on the unit disk, with
//! exact derivatives: the identity, Moebius transforms, integer
//! powers, and a logarithmically-twisted map with one boundary
//! singularity whose modulus of continuity decays like a power of a
//! logarithm.  Also: Hardy-space integral means, image boundaries as
//! polylines, the Koebe distortion ratio, and a sampling univalence
//! check.

use crate::error::{Error, Result};
use crate::geometry::{JordanCurve, JordanDomain};
use crate::numeric::pairwise_sum;
use crate::Point;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub enum AnalyticMap {
    Identity,
    /// z -> (a z + b) / (c z + d)
    Moebius { a: Point, b: Point, c: Point, d: Point },
    /// z -> z^k
    Power { k: i32 },
    /// z -> w^{-tau} with w = Log((1 - z)/3).  The inner argument has
    /// positive real part on the disk, so the principal log applies;
    /// its image lies in Re w <= ln(2/3) < 0, and the outer power uses
    /// the branch with arg in (0, 2 pi), continuous on that half
    /// plane.  The only boundary singularity is at z = 1, where the
    /// map tends to 0.
    InverseLogPower { tau: f64 },
}

impl AnalyticMap {
    /// Disk automorphism moving `c` to the origin.
    pub fn disk_automorphism(c: Point) -> AnalyticMap {
        AnalyticMap::Moebius {
            a: Point::new(1.0, 0.0),
            b: -c,
            c: -c.conj(),
            d: Point::new(1.0, 0.0),
        }
    }

    pub fn eval(&self, z: Point) -> Point {
        match *self {
            AnalyticMap::Identity => z,
            AnalyticMap::Moebius { a, b, c, d } => (a * z + b) / (c * z + d),
            AnalyticMap::Power { k } => z.powi(k),
            AnalyticMap::InverseLogPower { tau } => {
                let w = ((Point::new(1.0, 0.0) - z) / 3.0).ln();
                left_half_power(w, -tau)
            }
        }
    }

    pub fn deriv(&self, z: Point) -> Point {
        match *self {
            AnalyticMap::Identity => Point::new(1.0, 0.0),
            AnalyticMap::Moebius { a, b, c, d } => {
                let den = c * z + d;
                (a * d - b * c) / (den * den)
            }
            AnalyticMap::Power { k } => z.powi(k - 1) * k as f64,
            AnalyticMap::InverseLogPower { tau } => {
                let w = ((Point::new(1.0, 0.0) - z) / 3.0).ln();
                left_half_power(w, -tau - 1.0) * tau / (Point::new(1.0, 0.0) - z)
            }
        }
    }
}

/// w^alpha with arg w taken in (0, 2 pi); continuous wherever w stays
/// off the positive real axis.
fn left_half_power(w: Point, alpha: f64) -> Point {
    let mut arg = w.im.atan2(w.re);
    if arg < 0.0 {
        arg += TAU;
    }
    let ln_mod = w.norm().ln();
    Point::new(alpha * ln_mod, alpha * arg).exp()
}

/// p-th integral mean on the circle of radius r, midpoint rule.
pub fn integral_mean(map: &AnalyticMap, p: f64, r: f64, n: usize) -> f64 {
    let vals: Vec<f64> = (0..n)
        .map(|j| {
            let th = TAU * (j as f64 + 0.5) / n as f64;
            let z = Point::new(r * th.cos(), r * th.sin());
            map.eval(z).norm().powf(p)
        })
        .collect();
    (pairwise_sum(&vals) / n as f64).powf(1.0 / p)
}

/// Hardy-space norm estimate: the supremum of the integral means over
/// a geometric radius ladder 1 - 2^-j, j = 1..=levels.
pub fn hardy_norm(map: &AnalyticMap, p: f64, levels: u32, n: usize) -> f64 {
    (1..=levels)
        .map(|j| integral_mean(map, p, 1.0 - 0.5f64.powi(j as i32), n))
        .fold(0.0, f64::max)
}

/// Image of the unit circle as a polyline on a midpoint angle grid
/// (so the singular point of `InverseLogPower` at angle 0 is never
/// evaluated; its limit value 0 is inserted as an explicit vertex).
pub fn image_boundary(map: &AnalyticMap, n: usize) -> Result<JordanCurve> {
    let mut verts: Vec<Point> = Vec::with_capacity(n + 1);
    if matches!(map, AnalyticMap::InverseLogPower { .. }) {
        verts.push(Point::new(0.0, 0.0));
    }
    for j in 0..n {
        let th = TAU * (j as f64 + 0.5) / n as f64;
        verts.push(map.eval(Point::new(th.cos(), th.sin())));
    }
    JordanCurve::new(verts)
}

pub fn image_domain(map: &AnalyticMap, n: usize) -> Result<JordanDomain> {
    JordanDomain::new(image_boundary(map, n)?)
}

/// dist(g(z), boundary of the image) / ((1 - |z|) |g'(z)|).  For
/// conformal maps onto Jordan domains this ratio stays within [1/4, 4]
/// by the Koebe distortion and Schwarz bounds.
pub fn koebe_ratio(map: &AnalyticMap, image: &JordanDomain, z: Point) -> Result<f64> {
    let r = z.norm();
    if r >= 1.0 {
        return Err(Error::invalid("Koebe ratio needs an interior point"));
    }
    let denom = (1.0 - r) * map.deriv(z).norm();
    if denom == 0.0 {
        return Err(Error::invalid("derivative vanishes at the sample point"));
    }
    Ok(image.dist_to_boundary(map.eval(z)) / denom)
}

/// Deterministic low-discrepancy disk samples (golden-angle spiral).
pub fn golden_disk_samples(n: usize, r_max: f64) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let r = r_max * (((i as f64) + 0.5) / n as f64).sqrt();
            let th = golden * i as f64;
            Point::new(r * th.cos(), r * th.sin())
        })
        .collect()
}

/// Sampling check for injectivity: hash image points on a grid of cell
/// size `image_tol` and report any pair of samples whose images nearly
/// coincide while their preimages are at least `preimage_gap` apart.
pub fn count_injectivity_collisions(
    map: &AnalyticMap,
    samples: &[Point],
    image_tol: f64,
    preimage_gap: f64,
) -> usize {
    use std::collections::HashMap;
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let imgs: Vec<Point> = samples.iter().map(|&z| map.eval(z)).collect();
    let mut collisions = 0;
    for (i, w) in imgs.iter().enumerate() {
        let ci = (w.re / image_tol).floor() as i64;
        let cj = (w.im / image_tol).floor() as i64;
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(bucket) = grid.get(&(ci + di, cj + dj)) {
                    for &j in bucket {
                        if (imgs[j] - *w).norm() < image_tol
                            && (samples[j] - samples[i]).norm() > preimage_gap
                        {
                            collisions += 1;
                        }
                    }
                }
            }
        }
        grid.entry((ci, cj)).or_default().push(i);
    }
    collisions
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let maps = [
            AnalyticMap::Identity,
            AnalyticMap::disk_automorphism(Point::new(0.3, -0.2)),
            AnalyticMap::Power { k: 3 },
            AnalyticMap::InverseLogPower { tau: 1.0 },
            AnalyticMap::InverseLogPower { tau: 0.5 },
        ];
        let h = 1e-6;
        for map in &maps {
            for j in 0..24 {
                let th = TAU * j as f64 / 24.0;
                let z = Point::new(0.6 * th.cos(), 0.6 * th.sin());
                let fd_re = (map.eval(z + Point::new(h, 0.0)) - map.eval(z - Point::new(h, 0.0)))
                    / (2.0 * h);
                let fd_im = (map.eval(z + Point::new(0.0, h)) - map.eval(z - Point::new(0.0, h)))
                    / (2.0 * h);
                let an = map.deriv(z);
                // analyticity: d/dx = f', d/dy = i f'
                assert!((fd_re - an).norm() < 1e-6 * (1.0 + an.norm()), "{map:?} {z}");
                assert!(
                    (fd_im - an * Point::new(0.0, 1.0)).norm() < 1e-6 * (1.0 + an.norm()),
                    "{map:?} {z}"
                );
            }
        }
    }

    #[test]
    fn disk_automorphism_preserves_the_circle() {
        let m = AnalyticMap::disk_automorphism(Point::new(0.4, 0.1));
        for j in 0..50 {
            let th = TAU * j as f64 / 50.0;
            let w = m.eval(Point::new(th.cos(), th.sin()));
            assert!((w.norm() - 1.0).abs() < 1e-12);
        }
        assert!(m.eval(Point::new(0.4, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn twisted_map_is_bounded_by_the_log_floor() {
        // |w| >= ln(3 / |1 - z|) >= ln(3/2), so |f| <= ln(3/2)^(-tau)
        for &tau in &[0.5, 1.0] {
            let m = AnalyticMap::InverseLogPower { tau };
            let bound = 1.5f64.ln().powf(-tau);
            let mut sup: f64 = 0.0;
            for j in 0..2000 {
                let th = TAU * (j as f64 + 0.5) / 2000.0;
                let z = Point::new(0.999 * th.cos(), 0.999 * th.sin());
                sup = sup.max(m.eval(z).norm());
            }
            assert!(sup <= bound + 1e-9, "tau={tau}: sup {sup} vs bound {bound}");
        }
    }

    #[test]
    fn twisted_map_branch_is_continuous_along_the_boundary() {
        let m = AnalyticMap::InverseLogPower { tau: 1.0 };
        let r = 0.995;
        let n = 4000;
        let mut prev = m.eval(Point::new(r * (0.01f64).cos(), r * (0.01f64).sin()));
        for j in 1..n {
            let th = 0.01 + (TAU - 0.02) * j as f64 / n as f64;
            let cur = m.eval(Point::new(r * th.cos(), r * th.sin()));
            assert!(
                (cur - prev).norm() < 0.05,
                "branch jump near theta={th}: {prev} -> {cur}"
            );
            prev = cur;
        }
    }

    #[test]
    fn hardy_means_grow_with_radius_and_stay_finite() {
        let m = AnalyticMap::InverseLogPower { tau: 1.0 };
        let m1 = integral_mean(&m, 2.0, 0.5, 512);
        let m2 = integral_mean(&m, 2.0, 0.9, 512);
        let m3 = integral_mean(&m, 2.0, 0.999, 2048);
        assert!(m1 <= m2 + 1e-12 && m2 <= m3 + 1e-3);
        let h = hardy_norm(&m, 2.0, 10, 1024);
        assert!(h.is_finite() && h < 2.5);
    }

    #[test]
    fn image_of_the_twisted_map_is_a_jordan_curve() {
        let m = AnalyticMap::InverseLogPower { tau: 1.0 };
        let curve = image_boundary(&m, 2000).expect("image polyline should be simple");
        assert!(curve.vertex_count() == 2001);
        // the inserted singular vertex is the origin
        assert!(curve.vertex(0).norm() == 0.0);
    }

    #[test]
    fn koebe_ratio_is_one_for_the_identity_and_tame_for_twists() {
        let disk = crate::geometry::disk_domain(4096);
        let id = AnalyticMap::Identity;
        for &x in &[0.0, 0.3, -0.7, 0.9] {
            let r = koebe_ratio(&id, &disk, Point::new(x, 0.0)).unwrap();
            assert!((r - 1.0).abs() < 1e-3, "x={x}: {r}");
        }
        let m = AnalyticMap::InverseLogPower { tau: 1.0 };
        let img = image_domain(&m, 4000).unwrap();
        for &x in &[0.0, 0.5, -0.5, 0.8] {
            let r = koebe_ratio(&m, &img, Point::new(x, 0.1)).unwrap();
            assert!(r > 0.2 && r < 4.2, "x={x}: ratio {r}");
        }
    }

    #[test]
    fn injectivity_counter_flags_powers_but_not_conformal_maps() {
        let samples = golden_disk_samples(10_000, 0.97);
        let id_hits = count_injectivity_collisions(&AnalyticMap::Identity, &samples, 1e-4, 1e-2);
        assert_eq!(id_hits, 0);
        let twist_hits = count_injectivity_collisions(
            &AnalyticMap::InverseLogPower { tau: 1.0 },
            &samples,
            1e-6,
            1e-2,
        );
        assert_eq!(twist_hits, 0);
        let sq_hits =
            count_injectivity_collisions(&AnalyticMap::Power { k: 2 }, &samples, 1e-3, 1e-1);
        assert!(sq_hits > 0, "z^2 folds the disk onto itself twice");
    }
}
