//! Deterministic geometry of Z^d: points, the two edge models, half-space
//! and box regions, inner boundaries.
//!
//! Everything here is pure; the random environment lives in [`crate::configuration`].

use crate::error::{Error, Result};
use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 12;

/// A site of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    coords: ArrayVec<i64, MAX_DIM>,
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords.as_slice())
    }
}

impl Point {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.len() < 2 || coords.len() > MAX_DIM {
            return Err(Error::BadDimension(coords.len()));
        }
        let mut c = ArrayVec::new();
        c.try_extend_from_slice(coords).unwrap();
        Ok(Point { coords: c })
    }

    /// Origin of Z^d.
    pub fn origin(d: usize) -> Result<Self> {
        Point::new(&vec![0; d])
    }

    /// `value * e_axis` plus optional extra coordinates left at zero.
    pub fn axis(d: usize, axis: usize, value: i64) -> Result<Self> {
        let mut c = vec![0i64; d];
        c[axis] = value;
        Point::new(&c)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> i64 {
        self.coords[i]
    }

    /// First coordinate, the one the half-space constrains.
    pub fn x1(&self) -> i64 {
        self.coords[0]
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut c = self.coords.clone();
        for (a, b) in c.iter_mut().zip(other.coords.iter()) {
            *a += b;
        }
        Point { coords: c }
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut c = self.coords.clone();
        for (a, b) in c.iter_mut().zip(other.coords.iter()) {
            *a -= b;
        }
        Point { coords: c }
    }

    /// Neighbour of `self` shifted by `delta` along `axis`.
    pub fn step(&self, axis: usize, delta: i64) -> Point {
        let mut c = self.coords.clone();
        c[axis] += delta;
        Point { coords: c }
    }
}

/// ℓ∞ norm, written |·| throughout this crate.
pub fn linf_norm(p: &Point) -> i64 {
    p.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// ℓ1 norm.
pub fn l1_norm(p: &Point) -> i64 {
    p.coords.iter().map(|c| c.abs()).sum()
}

/// Euclidean norm ‖·‖, used by the capacity module.
pub fn l2_norm(p: &Point) -> f64 {
    p.coords
        .iter()
        .map(|&c| (c as f64) * (c as f64))
        .sum::<f64>()
        .sqrt()
}

/// ℓ∞ distance between two points.
pub fn linf_dist(a: &Point, b: &Point) -> i64 {
    a.coords
        .iter()
        .zip(b.coords.iter())
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or(0)
}

/// Euclidean distance between two points.
pub fn l2_dist(a: &Point, b: &Point) -> f64 {
    a.coords
        .iter()
        .zip(b.coords.iter())
        .map(|(x, y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Edge model of the ambient graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Edges at ℓ1 distance exactly 1.
    NearestNeighbour,
    /// Edges at ℓ1 distance in [1, L].
    SpreadOut,
}

/// Ambient graph: dimension plus edge model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub dimension: usize,
    pub model: Model,
    /// Spread parameter L; only meaningful for the spread-out model.
    pub spread: i64,
}

impl GraphSpec {
    pub fn nearest_neighbour(dimension: usize) -> Self {
        GraphSpec {
            dimension,
            model: Model::NearestNeighbour,
            spread: 1,
        }
    }

    pub fn spread_out(dimension: usize, spread: i64) -> Self {
        GraphSpec {
            dimension,
            model: Model::SpreadOut,
            spread,
        }
    }

    /// Effective spread: nearest-neighbour behaves as spread-out with L = 1.
    pub fn effective_spread(&self) -> i64 {
        match self.model {
            Model::NearestNeighbour => 1,
            Model::SpreadOut => self.spread,
        }
    }

    pub fn adjacent(&self, a: &Point, b: &Point) -> bool {
        let d = a
            .coords
            .iter()
            .zip(b.coords.iter())
            .map(|(x, y)| (x - y).abs())
            .sum::<i64>();
        d >= 1 && d <= self.effective_spread()
    }

    /// All displacement vectors v ≠ 0 with ‖v‖1 ≤ L, in lexicographic order.
    pub fn offsets(&self) -> Vec<Point> {
        let d = self.dimension;
        let l = self.effective_spread();
        let mut out = Vec::new();
        let mut cur = vec![0i64; d];
        enumerate_offsets(&mut cur, 0, l, &mut out);
        out.sort();
        out.retain(|p| l1_norm(p) >= 1);
        out
    }

    /// Degree of a bulk vertex.
    pub fn degree(&self) -> usize {
        self.offsets().len()
    }
}

fn enumerate_offsets(cur: &mut Vec<i64>, idx: usize, budget: i64, out: &mut Vec<Point>) {
    if idx == cur.len() {
        out.push(Point::new(cur).expect("dimension checked by caller"));
        return;
    }
    for v in -budget..=budget {
        cur[idx] = v;
        enumerate_offsets(cur, idx + 1, budget - v.abs(), out);
    }
    cur[idx] = 0;
}

/// A membership predicate on Z^d, with finite enumeration only for boxes.
///
/// `HBox` is B_r(z) = {y ∈ H : |y - z| ≤ r}: it is always
/// intersected with the half-space {x₁ ≥ 0}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    FullSpace,
    /// {x : x₁ ≥ -shift}; `HalfSpace(0)` is the canonical H, and
    /// H_n = H - n e₁ is `HalfSpace { shift: n }`.
    HalfSpace { shift: i64 },
    HBox { center: Point, radius: i64 },
    Intersection(Vec<Region>),
}

impl Region {
    pub fn half_space(shift: i64) -> Region {
        Region::HalfSpace { shift }
    }

    /// The canonical half-space H = {x : x₁ ≥ 0}.
    pub fn h() -> Region {
        Region::HalfSpace { shift: 0 }
    }

    pub fn hbox(center: Point, radius: i64) -> Region {
        Region::HBox { center, radius }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Region::FullSpace => true,
            Region::HalfSpace { shift } => p.x1() >= -shift,
            Region::HBox { center, radius } => p.x1() >= 0 && linf_dist(p, center) <= *radius,
            Region::Intersection(rs) => rs.iter().all(|r| r.contains(p)),
        }
    }
}

/// Neighbours of `p` under `spec` that lie in `region`; `p` is excluded.
pub fn neighbors(p: &Point, spec: &GraphSpec, region: &Region) -> Vec<Point> {
    spec.offsets()
        .iter()
        .map(|v| p.add(v))
        .filter(|q| region.contains(q))
        .collect()
}

/// Does `u` lie on the inner boundary (in `ambient`) of the box
/// {y ∈ ambient : |y - center| ≤ radius}?
///
/// With `ambient = H` this is ∂B_r(center): a point of the box
/// with at least one neighbour in H outside the box.
pub fn on_box_boundary(
    u: &Point,
    center: &Point,
    radius: i64,
    spec: &GraphSpec,
    ambient: &Region,
) -> bool {
    if !ambient.contains(u) || linf_dist(u, center) > radius {
        return false;
    }
    spec.offsets()
        .iter()
        .map(|v| u.add(v))
        .any(|q| ambient.contains(&q) && linf_dist(&q, center) > radius)
}

/// Is `u` on ∂B_radius(center) (the inner boundary in H)?
pub fn is_inner_boundary(u: &Point, center: &Point, radius: i64, spec: &GraphSpec) -> bool {
    on_box_boundary(u, center, radius, spec, &Region::h())
}

/// Exact comparison u1 ≥ eps * n, treating `eps` as the exact rational its
/// floating-point bits denote. Avoids float tie ambiguity at e.g. eps*n integer.
pub fn ge_eps_times(u1: i64, eps: f64, n: i64) -> bool {
    assert!(eps >= 0.0 && eps.is_finite() && n >= 0);
    if eps == 0.0 || n == 0 {
        return u1 >= 0;
    }
    // eps = m * 2^e with m odd (or the subnormal mantissa), exactly.
    let bits = eps.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if raw_exp == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    // Compare u1 against m * n * 2^e.
    let rhs = (m as i128) * (n as i128); // ≤ 2^53 * 2^63, fits i128
    if e >= 0 {
        // rhs * 2^e may overflow only for absurd eps; saturate.
        if e >= 64 {
            return false;
        }
        match rhs.checked_shl(e as u32) {
            Some(v) => (u1 as i128) >= v,
            None => false,
        }
    } else {
        let shift = (-e) as u32;
        if shift >= 127 {
            // eps * n < 1 here (m*n < 2^117); u1 ≥ eps*n iff u1 ≥ 1.
            return u1 >= 1;
        }
        // u1 * 2^shift vs rhs; guard the shift on the u1 side.
        let lhs = u1 as i128;
        if lhs < 0 {
            return false;
        }
        match lhs.checked_shl(shift) {
            Some(v) => v >= rhs,
            None => true, // huge positive u1 certainly exceeds eps*n
        }
    }
}

/// Enumerate all points of {y ∈ ambient : |y - center| ≤ radius}.
///
/// Only for small boxes; sums over large boxes are Monte Carlo estimated.
pub fn enumerate_box(
    center: &Point,
    radius: i64,
    ambient: &Region,
    limit: usize,
) -> Result<Vec<Point>> {
    let d = center.dim();
    let side = 2 * radius + 1;
    let total = (side as f64).powi(d as i32);
    if total > limit as f64 {
        return Err(Error::BoxTooLarge {
            radius,
            dim: d,
        });
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; d];
    enumerate_box_rec(center, radius, ambient, &mut cur, 0, &mut out);
    Ok(out)
}

fn enumerate_box_rec(
    center: &Point,
    radius: i64,
    ambient: &Region,
    cur: &mut Vec<i64>,
    idx: usize,
    out: &mut Vec<Point>,
) {
    if idx == cur.len() {
        let p = Point::new(cur).expect("dimension bounded by center");
        if ambient.contains(&p) {
            out.push(p);
        }
        return;
    }
    let c = center.coord(idx);
    for v in (c - radius)..=(c + radius) {
        cur[idx] = v;
        enumerate_box_rec(center, radius, ambient, cur, idx + 1, out);
    }
}

/// The inner boundary ∂A of a finite H-box, as an explicit set.
///
/// Enumerates only the outer shell of thickness L, so it stays cheap for
/// moderate radii; use [`is_inner_boundary`] as a predicate for large boxes.
pub fn inner_boundary(center: &Point, radius: i64, spec: &GraphSpec) -> Result<Vec<Point>> {
    let d = center.dim();
    let l = spec.effective_spread();
    if radius < 0 {
        return Err(Error::BoxTooLarge { radius, dim: d });
    }
    // Points at ℓ∞ distance ≤ radius - L from every box face and from the wall
    // have all neighbours inside the box and inside H.
    let shell_inner = (radius - l + 1).max(0);
    let mut out = Vec::new();
    if shell_inner == 0 {
        for p in enumerate_box(center, radius, &Region::h(), 200_000_000)? {
            if is_inner_boundary(&p, center, radius, spec) {
                out.push(p);
            }
        }
        return Ok(out);
    }
    // Enumerate the shell {shell_inner ≤ |y - center| ≤ radius} plus the wall
    // strip {y₁ ≤ l - 1}, the only places boundary points can live.
    let side = 2 * radius + 1;
    let shell = (side as f64).powi(d as i32)
        - ((2 * shell_inner - 1) as f64).powi(d as i32);
    if shell > 2e8 {
        return Err(Error::BoxTooLarge { radius, dim: d });
    }
    let mut cur = vec![0i64; d];
    shell_rec(center, radius, shell_inner, spec, &mut cur, 0, false, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn shell_rec(
    center: &Point,
    radius: i64,
    inner: i64,
    spec: &GraphSpec,
    cur: &mut Vec<i64>,
    idx: usize,
    has_extreme: bool,
    out: &mut Vec<Point>,
) {
    if idx == cur.len() {
        if !has_extreme {
            return;
        }
        let p = Point::new(cur).expect("dimension bounded by center");
        if p.x1() >= 0 && is_inner_boundary(&p, center, radius, spec) {
            out.push(p);
        }
        return;
    }
    let c = center.coord(idx);
    for v in (c - radius)..=(c + radius) {
        cur[idx] = v;
        let extreme = (v - c).abs() >= inner;
        shell_rec(center, radius, inner, spec, cur, idx + 1, has_extreme || extreme, out);
    }
}

/// ∂B_n^ε(x) = {u ∈ ∂B_n(x) : u₁ ≥ εn}, as an explicit set.
pub fn boundary_eps(x: &Point, n: i64, eps: f64, spec: &GraphSpec) -> Result<Vec<Point>> {
    let mut pts = inner_boundary(x, n, spec)?;
    pts.retain(|u| ge_eps_times(u.x1(), eps, n));
    Ok(pts)
}

/// Predicate form of [`boundary_eps`] membership.
pub fn is_boundary_eps(u: &Point, x: &Point, n: i64, eps: f64, spec: &GraphSpec) -> bool {
    is_inner_boundary(u, x, n, spec) && ge_eps_times(u.x1(), eps, n)
}
