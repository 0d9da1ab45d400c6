//! Boundary traces and boundary homeomorphisms.
//!
//! A `BoundaryMap` is an orientation-preserving homeomorphism between
//! two closed curves, stored as monotone knots in arc length and
//! interpolated at constant speed in between.  Inversion swaps the
//! knot coordinates exactly; composition merges breakpoints so the
//! result is again exactly piecewise linear.  The free functions at
//! the bottom build the specific traces exercised in tests and demos:
//! Fourier modes, lacunary trigonometric sums, strictized staircase
//! circle maps, and the wall-to-arc assignments for the room-chain and
//! cusp domains.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{CuspLayout, JordanCurve, SpiralLayout};
use crate::numeric::{inverse_square_tail, seeded_rng};
use crate::Point;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Anything that can be sampled along the unit circle by angle.
pub trait CircleTrace: Sync {
    fn eval(&self, theta: f64) -> Point;
}

/// Closure adapter (a blanket impl over `Fn` would collide with the
/// concrete impls below).
pub struct FnTrace<F>(pub F);

impl<F: Fn(f64) -> Point + Sync> CircleTrace for FnTrace<F> {
    fn eval(&self, theta: f64) -> Point {
        (self.0)(theta)
    }
}

/// A circle trace with an angular derivative and a (possibly empty)
/// list of derivative discontinuities in [0, 2pi).
pub trait BoundaryTrace: CircleTrace {
    fn deriv(&self, theta: f64) -> Point;
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Finite sum of complex exponentials `sum a_k e^{i k theta}`.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    pub terms: Vec<(i32, Point)>,
}

impl CircleTrace for TrigPolynomial {
    fn eval(&self, theta: f64) -> Point {
        let mut s = Point::new(0.0, 0.0);
        for &(k, a) in &self.terms {
            s += a * Point::new(0.0, k as f64 * theta).exp();
        }
        s
    }
}

impl BoundaryTrace for TrigPolynomial {
    fn deriv(&self, theta: f64) -> Point {
        let mut s = Point::new(0.0, 0.0);
        for &(k, a) in &self.terms {
            s += a * Point::new(0.0, k as f64) * Point::new(0.0, k as f64 * theta).exp();
        }
        s
    }
}

/// The single mode `e^{i k theta}`.
pub fn fourier_mode(k: i32) -> TrigPolynomial {
    TrigPolynomial {
        terms: vec![(k, Point::new(1.0, 0.0))],
    }
}

/// Lacunary sum `c * sum_{j<=levels} 2^{-j sigma} e^{i 2^j theta}`,
/// normalized so the coefficients sum to one.  For small `sigma` the
/// high modes decay so slowly that the harmonic extension's Dirichlet
/// partial sums diverge.
pub fn lacunary_trace(levels: u32, sigma: f64) -> TrigPolynomial {
    assert!(levels <= 20);
    let amps: Vec<f64> = (0..=levels).map(|j| 2f64.powf(-(j as f64) * sigma)).collect();
    let norm: f64 = amps.iter().sum();
    TrigPolynomial {
        terms: amps
            .iter()
            .enumerate()
            .map(|(j, &a)| (1i32 << j, Point::new(a / norm, 0.0)))
            .collect(),
    }
}

/// Orientation-preserving homeomorphism between two closed polylines,
/// given by strictly increasing knot pairs in arc length and constant
/// speed between knots.  Knot targets are stored lifted (they may
/// exceed the target length by design: the map wraps once around).
#[derive(Clone)]
pub struct BoundaryMap {
    source: Arc<JordanCurve>,
    target: Arc<JordanCurve>,
    knots_s: Vec<f64>,
    knots_t: Vec<f64>,
}

impl BoundaryMap {
    pub fn new(
        source: Arc<JordanCurve>,
        target: Arc<JordanCurve>,
        knots: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::invalid("a boundary map needs at least two knots"));
        }
        let ls = source.total_length();
        let lt = target.total_length();
        let mut knots_s: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let knots_t: Vec<f64> = knots.iter().map(|k| k.1).collect();
        for w in knots_s.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("source knots must increase strictly"));
            }
        }
        for w in knots_t.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("target knots must increase strictly"));
            }
        }
        if knots_s.last().unwrap() - knots_s[0] >= ls {
            return Err(Error::invalid("source knots span more than one period"));
        }
        if knots_t.last().unwrap() - knots_t[0] >= lt {
            return Err(Error::invalid("target knots span more than one period"));
        }
        if knots.iter().any(|&(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("knots must be finite"));
        }
        // slide the source window so it starts inside [0, L)
        let shift = knots_s[0].rem_euclid(ls) - knots_s[0];
        for s in &mut knots_s {
            *s += shift;
        }
        Ok(BoundaryMap {
            source,
            target,
            knots_s,
            knots_t,
        })
    }

    /// Identity on `curve` with `k` evenly spaced knots.
    pub fn identity(curve: Arc<JordanCurve>, k: usize) -> BoundaryMap {
        let l = curve.total_length();
        let knots = (0..k.max(2))
            .map(|i| {
                let s = l * i as f64 / k.max(2) as f64;
                (s, s)
            })
            .collect();
        BoundaryMap::new(curve.clone(), curve, knots).expect("identity knots are valid")
    }

    pub fn source(&self) -> &Arc<JordanCurve> {
        &self.source
    }

    pub fn target(&self) -> &Arc<JordanCurve> {
        &self.target
    }

    pub fn knot_count(&self) -> usize {
        self.knots_s.len()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots_s
            .iter()
            .zip(&self.knots_t)
            .map(|(&s, &t)| (s, t))
    }

    /// Total variation of the trace = length of the target curve.
    pub fn target_variation(&self) -> f64 {
        self.target.total_length()
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        // reduce into the knot window [s0, s0 + L)
        let ls = self.source.total_length();
        let s0 = self.knots_s[0];
        let q = s0 + (s - s0).rem_euclid(ls);
        let i = match self
            .knots_s
            .binary_search_by(|v| v.partial_cmp(&q).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (i, q)
    }

    /// Lifted target arc length at source arc length `s`; lies in
    /// [t0, t0 + L_target).
    pub fn target_arclength(&self, s: f64) -> f64 {
        let ls = self.source.total_length();
        let lt = self.target.total_length();
        let n = self.knots_s.len();
        let (i, q) = self.locate(s);
        if i + 1 < n {
            let f = (q - self.knots_s[i]) / (self.knots_s[i + 1] - self.knots_s[i]);
            self.knots_t[i] + f * (self.knots_t[i + 1] - self.knots_t[i])
        } else {
            // wrap interval: last knot to first knot + period
            let span_s = self.knots_s[0] + ls - self.knots_s[n - 1];
            let span_t = self.knots_t[0] + lt - self.knots_t[n - 1];
            let f = (q - self.knots_s[n - 1]) / span_s;
            self.knots_t[n - 1] + f * span_t
        }
    }

    /// Like `target_arclength`, but equivariant under full turns:
    /// adding one source period to `s` adds one target period to the
    /// result, so the lift is strictly increasing on all of R.
    pub fn target_arclength_lifted(&self, s: f64) -> f64 {
        let ls = self.source.total_length();
        let lt = self.target.total_length();
        let s0 = self.knots_s[0];
        let q = s0 + (s - s0).rem_euclid(ls);
        let periods = ((s - q) / ls).round();
        self.target_arclength(q) + periods * lt
    }

    pub fn eval(&self, s: f64) -> Point {
        self.target.point_at(self.target_arclength(s))
    }

    /// Treats the source as a circle: angle theta corresponds to the
    /// arc-length fraction theta / 2pi.
    pub fn eval_angle(&self, theta: f64) -> Point {
        self.eval(theta / TAU * self.source.total_length())
    }

    /// Exact inverse: swap knot roles.
    pub fn inverted(&self) -> BoundaryMap {
        let knots: Vec<(f64, f64)> = self
            .knots_t
            .iter()
            .zip(&self.knots_s)
            .map(|(&t, &s)| (t, s))
            .collect();
        BoundaryMap::new(self.target.clone(), self.source.clone(), knots)
            .expect("inverse knots are valid")
    }

    /// Exact composition `other o self` (apply `self` first).  The
    /// target of `self` must be the same curve as the source of
    /// `other`.
    pub fn compose(&self, other: &BoundaryMap) -> Result<BoundaryMap> {
        let tol = 1e-9 * self.target.total_length();
        if !self.target.same_geometry(&other.source, tol) {
            return Err(Error::invalid(
                "composition requires matching intermediate curves",
            ));
        }
        let lb = self.target.total_length();
        let b0 = self.knots_t[0];
        let mut mids: Vec<f64> = self.knots_t.clone();
        for &s in &other.knots_s {
            mids.push(b0 + (s - b0).rem_euclid(lb));
        }
        mids.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mids.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * lb.max(1.0));
        let inv = self.inverted();
        let knots: Vec<(f64, f64)> = mids
            .iter()
            .map(|&b| {
                (
                    inv.target_arclength_lifted(b),
                    other.target_arclength_lifted(b),
                )
            })
            .collect();
        BoundaryMap::new(self.source.clone(), other.target.clone(), knots)
    }
}

impl CircleTrace for BoundaryMap {
    fn eval(&self, theta: f64) -> Point {
        self.eval_angle(theta)
    }
}

impl BoundaryTrace for BoundaryMap {
    fn deriv(&self, theta: f64) -> Point {
        let ls = self.source.total_length();
        let lt = self.target.total_length();
        let s = theta / TAU * ls;
        let n = self.knots_s.len();
        let (i, _q) = self.locate(s);
        let slope = if i + 1 < n {
            (self.knots_t[i + 1] - self.knots_t[i]) / (self.knots_s[i + 1] - self.knots_s[i])
        } else {
            (self.knots_t[0] + lt - self.knots_t[n - 1])
                / (self.knots_s[0] + ls - self.knots_s[n - 1])
        };
        let t = self.target_arclength(s);
        self.target.tangent_at(t) * slope * (ls / TAU)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let ls = self.source.total_length();
        let lt = self.target.total_length();
        let n = self.knots_s.len();
        let mut out: Vec<f64> = Vec::new();
        let mut push = |s: f64| out.push((s / ls * TAU).rem_euclid(TAU));
        for &s in &self.knots_s {
            push(s);
        }
        // pull target polyline vertices back through each knot interval
        let nv = self.target.vertex_count();
        for i in 0..n {
            let (s_lo, s_hi, t_lo, t_hi) = if i + 1 < n {
                (
                    self.knots_s[i],
                    self.knots_s[i + 1],
                    self.knots_t[i],
                    self.knots_t[i + 1],
                )
            } else {
                (
                    self.knots_s[n - 1],
                    self.knots_s[0] + ls,
                    self.knots_t[n - 1],
                    self.knots_t[0] + lt,
                )
            };
            let inv_slope = (s_hi - s_lo) / (t_hi - t_lo);
            // lifted copies of each vertex arc length inside (t_lo, t_hi)
            for v in 0..nv {
                let base = self.target.arclength_of_vertex(v);
                let mut lift = base + ((t_lo - base) / lt).floor() * lt;
                while lift <= t_hi {
                    if lift > t_lo {
                        push(s_lo + (lift - t_lo) * inv_slope);
                    }
                    lift += lt;
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-13 * TAU);
        out
    }
}

/// Random orientation-preserving boundary homeomorphism: `k` knots on
/// each side with increments at least `min_frac` of the even spacing.
pub fn random_monotone_map(
    source: Arc<JordanCurve>,
    target: Arc<JordanCurve>,
    k: usize,
    min_frac: f64,
    seed: u64,
) -> Result<BoundaryMap> {
    if k < 3 {
        return Err(Error::invalid("need at least 3 knots"));
    }
    if !(0.0..1.0).contains(&min_frac) {
        return Err(Error::invalid("min_frac must lie in [0, 1)"));
    }
    let mut rng = seeded_rng(seed);
    fn draw(
        rng: &mut rand_chacha::ChaCha8Rng,
        k: usize,
        min_frac: f64,
        total: f64,
        start: f64,
    ) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut pos = Vec::with_capacity(k);
        let mut acc = start;
        for r in raw {
            pos.push(acc);
            acc += total * (min_frac / k as f64 + (1.0 - min_frac) * r / sum);
        }
        // renormalize so the full cycle is exactly `total`
        let span = acc - start;
        for (i, p) in pos.iter_mut().enumerate() {
            if i > 0 {
                *p = start + (*p - start) * total / span;
            }
        }
        pos
    }
    let ls = source.total_length();
    let lt = target.total_length();
    let s_start = rng.gen_range(0.0..ls);
    let t_start = rng.gen_range(0.0..lt);
    let ss = draw(&mut rng, k, min_frac, ls, s_start);
    let ts = draw(&mut rng, k, min_frac, lt, t_start);
    BoundaryMap::new(source, target, ss.into_iter().zip(ts).collect())
}

/// Breakpoints (x, F(x)) of the ternary staircase at `depth`: F is
/// constant on each removed middle third.
pub fn ternary_staircase_points(depth: u32) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    fn rec(pts: &mut Vec<(f64, f64)>, x0: f64, x1: f64, f0: f64, f1: f64, d: u32) {
        if d == 0 {
            pts.push((x1, f1));
            return;
        }
        let a = x0 + (x1 - x0) / 3.0;
        let b = x0 + 2.0 * (x1 - x0) / 3.0;
        let fm = 0.5 * (f0 + f1);
        rec(pts, x0, a, f0, fm, d - 1);
        pts.push((b, fm));
        rec(pts, b, x1, fm, f1, d - 1);
    }
    rec(&mut pts, 0.0, 1.0, 0.0, 1.0, depth);
    pts
}

/// Breakpoints of a random binary mass cascade: at every dyadic split
/// the left half receives a random fraction drawn from `lo..hi`
/// (side-swapped by a coin flip), giving a singular-looking monotone
/// profile.
pub fn cascade_staircase_points(depth: u32, lo: f64, hi: f64, seed: u64) -> Vec<(f64, f64)> {
    assert!(0.0 < lo && lo < hi && hi < 1.0);
    let mut rng = seeded_rng(seed);
    let mut pts = vec![(0.0, 0.0)];
    fn rec(
        pts: &mut Vec<(f64, f64)>,
        rng: &mut rand_chacha::ChaCha8Rng,
        lo: f64,
        hi: f64,
        x0: f64,
        x1: f64,
        f0: f64,
        f1: f64,
        d: u32,
    ) {
        if d == 0 {
            pts.push((x1, f1));
            return;
        }
        let mut a = rng.gen_range(lo..hi);
        if rng.gen_bool(0.5) {
            a = 1.0 - a;
        }
        let xm = 0.5 * (x0 + x1);
        let fm = f0 + a * (f1 - f0);
        rec(pts, rng, lo, hi, x0, xm, f0, fm, d - 1);
        rec(pts, rng, lo, hi, xm, x1, fm, f1, d - 1);
    }
    rec(&mut pts, &mut rng, lo, hi, 0.0, 1.0, 0.0, 1.0, depth);
    pts
}

/// Circle-to-circle map through a monotone profile F: [0,1] -> [0,1],
/// strictized by blending with the identity: the map sends angle
/// 2 pi x to angle 2 pi ((1-lambda) F(x) + lambda x).
pub fn staircase_map(
    circle: Arc<JordanCurve>,
    profile: &[(f64, f64)],
    lambda: f64,
) -> Result<BoundaryMap> {
    if !(0.0 < lambda && lambda <= 1.0) {
        return Err(Error::invalid("blend weight must lie in (0, 1]"));
    }
    let l = circle.total_length();
    let knots: Vec<(f64, f64)> = profile
        .iter()
        .map(|&(x, f)| (x * l, ((1.0 - lambda) * f + lambda * x) * l))
        .collect();
    // drop the duplicate closing knot at x = 1
    let n = knots.len();
    let knots = if n >= 2 && knots[n - 1].0 >= l {
        knots[..n - 1].to_vec()
    } else {
        knots
    };
    BoundaryMap::new(circle.clone(), circle, knots)
}

/// Wall-to-arc boundary homeomorphism for the room-chain domain, with
/// its separation bookkeeping.
pub struct SpiralMap {
    pub map: BoundaryMap,
    /// upper arc [a_k, b_k] assigned to the left wall of room k+1
    pub arcs: Vec<(f64, f64)>,
    /// chord separations certified per room: 2 sin a_k >= d_k
    pub d: Vec<f64>,
}

/// Default separation sequence for room k (1-based): 1 / ln(1 + k).
pub fn default_spiral_separations(rooms: usize) -> Vec<f64> {
    (1..=rooms).map(|k| 1.0 / (1.0 + k as f64).ln()).collect()
}

/// Assign each room's left wall to an arc in the upper right quarter
/// of the circle and each right wall to the mirror arc, walking inward
/// (deeper rooms sit closer to angle 0, whose image is the anchor on
/// the last room's right wall).  Arc inner edges respect the chord
/// floor 2 sin a_k >= d_k.
pub fn spiral_boundary_map(
    layout: &SpiralLayout,
    d: &[f64],
    n_src: usize,
) -> Result<SpiralMap> {
    let rooms = layout.rooms;
    if d.len() < rooms {
        return Err(Error::invalid("need one separation per room"));
    }
    if d.iter().any(|&x| !(0.0 < x && x < 2.0)) {
        return Err(Error::invalid("separations must lie in (0, 2)"));
    }
    let margin = 0.05;
    let floors: Vec<f64> = d.iter().map(|&x| (x / 2.0).asin()).collect();
    if floors[0] >= std::f64::consts::FRAC_PI_2 - margin - 0.05 {
        return Err(Error::invalid("first separation leaves no room for an arc"));
    }
    // greedy placement outermost-in; arc length tracks wall length
    let scale = 0.2;
    let mut arcs = vec![(0.0, 0.0); rooms];
    let mut b = std::f64::consts::FRAC_PI_2 - margin;
    for k in 0..rooms {
        if b <= floors[k] {
            return Err(Error::invalid(format!(
                "separations are not summable enough: no room for arc {k}"
            )));
        }
        let wall = layout.left_walls[k].1 - layout.left_walls[k].0;
        let a = (b - scale * wall).max(floors[k]).max(0.5 * b.min(floors[k] + 0.5 * (b - floors[k])));
        let a = a.min(b - 1e-4 * b);
        arcs[k] = (a, b);
        if k + 1 < rooms {
            let gap = 0.1 * (a - floors[k + 1]).max(0.0) + 1e-6 * a;
            b = a - gap.min(0.5 * a);
        }
    }
    // knots in (angle, lifted absolute target arc length): the lift
    // places every wall position in the window [anchor, anchor + L)
    let curve = layout.domain.curve();
    let total = curve.total_length();
    let anchor = layout.anchor_s;
    let lift = |s: f64| anchor + (s - anchor).rem_euclid(total);
    let circle = Arc::new(crate::geometry::unit_circle_curve(n_src));
    let ls = circle.total_length();
    let mut knots: Vec<(f64, f64)> = Vec::new();
    let mut add = |theta: f64, t: f64| knots.push((theta / TAU * ls, t));
    add(0.0, anchor);
    let last = rooms - 1;
    // angle 0 .. a_last covers anchor -> top-right corner -> top edge
    let top_corner = lift(layout.right_walls[last].1);
    add(0.5 * arcs[last].0, top_corner);
    for k in (0..rooms).rev() {
        let (a, b) = arcs[k];
        add(a, lift(layout.left_walls[k].0));
        let t_bot = if k == 0 {
            total // closing vertex (0,0), lifted one full turn
        } else {
            lift(layout.left_walls[k].1)
        };
        add(b, t_bot);
    }
    for k in 0..rooms {
        let (a, b) = arcs[k];
        add(TAU - b, lift(layout.right_walls[k].0));
        if k + 1 < rooms {
            add(TAU - a, lift(layout.right_walls[k].1));
        }
        // the last room's right wall runs to the anchor at angle 2 pi,
        // which is the wrap of the first knot
    }
    let target = Arc::new(curve.clone());
    let map = BoundaryMap::new(circle, target, knots)?;
    Ok(SpiralMap {
        map,
        arcs,
        d: d[..rooms].to_vec(),
    })
}

/// Boundary homeomorphism onto a cusp domain concentrating a mirror
/// sequence of circle arcs onto the two graph branches.  Knot k sits
/// at angle +-theta_k with 2 sin theta_k = d_k exactly and maps to the
/// graph points (+-x_k, y_k), where y_k = c * tail_k of the increment
/// weights eps_j = 1/j^2 and x_k = y_k^{1/s}.
pub struct CuspMap {
    pub map: BoundaryMap,
    pub thetas: Vec<f64>,
    pub ys: Vec<f64>,
    pub xs: Vec<f64>,
}

pub fn cusp_boundary_map(
    layout: &CuspLayout,
    d: &[f64],
    knots: usize,
    n_src: usize,
) -> Result<CuspMap> {
    if knots < 2 || d.len() < knots {
        return Err(Error::invalid("need at least two separations"));
    }
    let mut thetas = vec![std::f64::consts::FRAC_PI_2];
    for (k, &dk) in d.iter().take(knots).enumerate() {
        if !(0.0 < dk && dk < 2.0) {
            return Err(Error::invalid("separations must lie in (0, 2)"));
        }
        let th = (dk / 2.0).asin();
        if th >= thetas[k] {
            return Err(Error::invalid("separations must decrease strictly"));
        }
        thetas.push(th);
    }
    let c = 1.0 / inverse_square_tail(1.0);
    let mut ys = vec![1.0];
    for k in 1..=knots {
        ys.push(c * inverse_square_tail(k as f64 + 1.0));
    }
    let xs: Vec<f64> = ys.iter().map(|&y| y.powf(1.0 / layout.s)).collect();
    let circle = Arc::new(crate::geometry::unit_circle_curve(n_src));
    let ls = circle.total_length();
    let total = layout.domain.curve().total_length();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    // descending angles -theta_0 .. -theta_K map the left branch
    for k in 0..=knots {
        pairs.push((-thetas[k], layout.left_arclength(xs[k])));
    }
    // ascending angles theta_K .. theta_0 map the right branch, lifted
    for k in (0..=knots).rev() {
        pairs.push((thetas[k], layout.right_arclength(xs[k]) + total));
    }
    let knots_sl: Vec<(f64, f64)> = pairs
        .into_iter()
        .map(|(th, t)| (th / TAU * ls, t))
        .collect();
    let target = Arc::new(layout.domain.curve().clone());
    let map = BoundaryMap::new(circle, target, knots_sl)?;
    Ok(CuspMap {
        map,
        thetas,
        ys,
        xs,
    })
}
