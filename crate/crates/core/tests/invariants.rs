//! Property checks for the structural guarantees the library leans on:
//! round trips and monotonicity of boundary homeomorphisms, rigid
//! invariance of curve measurements, metric axioms of the
//! quasihyperbolic grid, mean-value and maximum principles of harmonic
//! extensions, exactness of the discrete Holder bound, covariance of
//! the Carleson estimator, and conformal distortion bounds.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::Rng;
use sobex::boundary::{random_monotone_map, TrigPolynomial};
use sobex::conformal::AnalyticMap;
use sobex::counterexamples::{slice_energy_bound, Slice, SliceFamily};
use sobex::energy::carleson_constant;
use sobex::extension::{harmonic_fem, poisson_extend, trace_boundary_values};
use sobex::geometry::{disk_domain, unit_circle_curve, JordanCurve};
use sobex::hyperbolic::QhGrid;
use sobex::mesh::{disk_mesh, MeshField};
use sobex::numeric::seeded_rng;
use sobex::Point;

const TAU: f64 = 2.0 * std::f64::consts::PI;

fn shared_disk_grid() -> &'static QhGrid {
    static GRID: OnceLock<QhGrid> = OnceLock::new();
    GRID.get_or_init(|| {
        QhGrid::build(&disk_domain(512), 1.0 / 64.0, Point::new(0.0, 0.0)).unwrap()
    })
}

fn star_polygon(radii: &[f64], jitter: &[f64]) -> JordanCurve {
    let n = radii.len();
    let verts = radii
        .iter()
        .zip(jitter)
        .enumerate()
        .map(|(i, (&r, &j))| {
            let th = TAU * (i as f64 + 0.4 * j) / n as f64;
            Point::from_polar(r, th)
        })
        .collect();
    JordanCurve::new(verts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn monotone_maps_invert_exactly_along_the_curve(seed in any::<u64>(), k in 4usize..12) {
        let circle = Arc::new(unit_circle_curve(64));
        let map = random_monotone_map(circle.clone(), circle.clone(), k, 0.2, seed).unwrap();
        let inv = map.inverted();
        let l = circle.total_length();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..48 {
            let s = l * i as f64 / 48.0;
            let lifted = map.target_arclength_lifted(s);
            prop_assert!(lifted >= prev, "lifted arclength must not decrease");
            prev = lifted;
            let round = inv.eval(map.target_arclength(s));
            prop_assert!((round - circle.point_at(s)).norm() < 1e-9);
        }
    }

    #[test]
    fn rigid_motions_preserve_length_and_area(
        radii in prop::collection::vec(0.4f64..1.5, 8..20),
        jitter in prop::collection::vec(0.0f64..1.0, 20),
        angle in 0.0f64..TAU,
        shift in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let curve = star_polygon(&radii, &jitter[..radii.len()]);
        let rot = Point::from_polar(1.0, angle);
        let t = Point::new(shift.0, shift.1);
        let moved = curve.mapped(|p| rot * p + t).unwrap();
        prop_assert!((moved.total_length() - curve.total_length()).abs() < 1e-9 * curve.total_length());
        prop_assert!((moved.signed_area() - curve.signed_area()).abs() < 1e-9 * curve.signed_area().abs());
    }

    #[test]
    fn quasihyperbolic_distance_is_a_symmetric_metric(
        pts in prop::collection::vec((0.0f64..0.8, 0.0f64..TAU), 3),
    ) {
        let grid = shared_disk_grid();
        let [a, b, c]: [Point; 3] = std::array::from_fn(|i| {
            let (r, th) = pts[i];
            Point::from_polar(r, th)
        });
        let ab = grid.distance_between(a, b).unwrap();
        let ba = grid.distance_between(b, a).unwrap();
        let bc = grid.distance_between(b, c).unwrap();
        let ac = grid.distance_between(a, c).unwrap();
        prop_assert!((ab - ba).abs() < 1e-9, "symmetry: {ab} vs {ba}");
        prop_assert!(ac <= ab + bc + 1e-9, "triangle: {ac} > {ab} + {bc}");
    }

    #[test]
    fn poisson_extension_takes_the_mean_at_the_center(
        seed in any::<u64>(),
        modes in 1usize..5,
    ) {
        let mut rng = seeded_rng(seed);
        let terms: Vec<(i32, Point)> = (0..=modes as i32)
            .map(|k| (k, Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let mean = terms[0].1;
        let trace = TrigPolynomial { terms };
        let center = poisson_extend(&trace, Point::new(0.0, 0.0));
        prop_assert!((center - mean).norm() < 1e-9, "center {center}, mean {mean}");
    }

    #[test]
    fn harmonic_fem_obeys_the_maximum_principle(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let terms: Vec<(i32, Point)> = (0..4)
            .map(|k| (k, Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let trace = TrigPolynomial { terms };
        let mesh = Arc::new(disk_mesh(2));
        let data = trace_boundary_values(&mesh, &trace);
        let (lo_re, hi_re) = data.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| {
            (lo.min(v.re), hi.max(v.re))
        });
        let (lo_im, hi_im) = data.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| {
            (lo.min(v.im), hi.max(v.im))
        });
        let sol = harmonic_fem(mesh.clone(), &data).unwrap();
        for i in 0..mesh.node_count() {
            let v = sol.field.values()[i];
            prop_assert!(v.re >= lo_re - 1e-8 && v.re <= hi_re + 1e-8);
            prop_assert!(v.im >= lo_im - 1e-8 && v.im <= hi_im + 1e-8);
        }
    }

    #[test]
    fn discrete_holder_bound_is_never_violated(
        seed in any::<u64>(),
        half_width in 0.2f64..0.5,
        p in 1.0f64..3.0,
    ) {
        let mesh = Arc::new(disk_mesh(2));
        let mut rng = seeded_rng(seed);
        let values: Vec<Point> = (0..mesh.node_count())
            .map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let field = MeshField::new(mesh, values).unwrap();
        let family = SliceFamily::new(vec![
            Slice { x0: -half_width, x1: half_width, y0: -0.45, y1: -0.1, separation: 0.0 },
            Slice { x0: -half_width, x1: half_width, y0: 0.1, y1: 0.45, separation: 0.0 },
        ]).unwrap();
        for b in slice_energy_bound(&field, &family, p).unwrap() {
            prop_assert!(b.measured >= b.holder * (1.0 - 1e-12),
                "measured {} under Holder bound {}", b.measured, b.holder);
        }
    }

    #[test]
    fn carleson_constant_rotates_with_the_weight(beta in 0.0f64..TAU) {
        let eps = [0.25, 0.0625];
        let thetas: Vec<f64> = (0..4).map(|j| TAU * j as f64 / 4.0).collect();
        let base = carleson_constant(
            |z: Point| 1.0 / (Point::new(1.0, 0.0) - z).norm(),
            &eps,
            &thetas,
        ).unwrap();
        let pole = Point::from_polar(1.0, beta);
        let shifted: Vec<f64> = thetas.iter().map(|&t| t + beta).collect();
        let rotated = carleson_constant(
            |z: Point| 1.0 / (pole - z).norm(),
            &eps,
            &shifted,
        ).unwrap();
        prop_assert!((rotated - base).abs() < 1e-12 * base, "base {base}, rotated {rotated}");
    }

    #[test]
    fn koebe_ratio_respects_distortion_bounds(
        c in (0.0f64..0.6, 0.0f64..TAU),
        z in (0.0f64..0.6, 0.0f64..TAU),
    ) {
        let map = AnalyticMap::disk_automorphism(Point::from_polar(c.0, c.1));
        let image = sobex::conformal::image_domain(&map, 1024).unwrap();
        let ratio = sobex::conformal::koebe_ratio(&map, &image, Point::from_polar(z.0, z.1)).unwrap();
        prop_assert!((0.24..=4.04).contains(&ratio), "ratio {ratio} outside Koebe bounds");
    }
}
