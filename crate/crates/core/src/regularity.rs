//! Regularity diagnostics on box boundaries: the density events T_s and
//! T_s^loc, K-regular point detection, random maximal 2K-separated selection,
//! line-good points, extended clusters and their star boundaries.

use crate::cluster::{self, ClusterRecord, DEFAULT_BUDGET};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::estimators::Estimate;
use crate::lattice::{linf_dist, on_box_boundary, Point, Region};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct RegularityParams {
    pub k: i64,
    pub eps: f64,
}

impl RegularityParams {
    pub fn new(k: i64, eps: f64) -> Result<RegularityParams> {
        if k < 2 {
            return Err(Error::BadScale(k));
        }
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::BadProbability(eps));
        }
        Ok(RegularityParams { k, eps })
    }
}

/// The cluster of x in B_n(x) together with the maximal open axis segments
/// grown outward from a 2K-separated family of regular pioneers.
#[derive(Clone, Debug)]
pub struct ExtendedCluster {
    pub base: ClusterRecord,
    pub selected: Vec<Point>,
    /// z -> L_z, the maximal open segment emanating from z (starts at z).
    pub segments: BTreeMap<Point, Vec<Point>>,
    /// Segment endpoints at distance exactly K from the box (line-good).
    pub star_boundary: Vec<Point>,
}

fn thr1(s: i64) -> f64 {
    (s as f64).powi(4) * (s as f64).ln().powi(7)
}

fn thr2(s: i64) -> f64 {
    (s as f64).powi(2) * (s as f64).ln().powi(7)
}

/// Sorted distances-from-z of cluster points, and of cluster points lying on
/// the box boundary; both counts at scale s follow by prefix search.
struct RadialCounts {
    all: Vec<i64>,
    boundary: Vec<i64>,
}

impl RadialCounts {
    fn from_visited(
        visited: &FxHashSet<Point>,
        z: &Point,
        x: &Point,
        n: i64,
        cfg: &Configuration,
    ) -> RadialCounts {
        let h = Region::h();
        let mut all: Vec<i64> = Vec::with_capacity(visited.len());
        let mut boundary: Vec<i64> = Vec::new();
        for v in visited {
            let dist = linf_dist(v, z);
            all.push(dist);
            if on_box_boundary(v, x, n, &cfg.spec, &h) {
                boundary.push(dist);
            }
        }
        all.sort_unstable();
        boundary.sort_unstable();
        RadialCounts { all, boundary }
    }

    fn count_within(sorted: &[i64], s: i64) -> u64 {
        sorted.partition_point(|&d| d <= s) as u64
    }

    fn holds_at(&self, s: i64) -> bool {
        Self::count_within(&self.all, s) as f64 <= thr1(s)
            && Self::count_within(&self.boundary, s) as f64 <= thr2(s)
    }
}

fn check_t_s_inputs(z: &Point, s: i64, rec: &ClusterRecord, n: i64) -> Result<()> {
    if s < 2 {
        return Err(Error::BadScale(s));
    }
    if rec.truncated {
        return Err(Error::Truncated);
    }
    let want = Region::hbox(rec.source.clone(), n);
    if rec.region != want {
        return Err(Error::RegionMismatch);
    }
    if !on_box_boundary(z, &rec.source, n, &rec.cfg.spec, &Region::h()) {
        return Err(Error::OutsideRegion(z.coords().to_vec()));
    }
    Ok(())
}

fn explore_from_z(z: &Point, rec: &ClusterRecord, n: i64) -> Result<ClusterRecord> {
    let region = Region::hbox(rec.source.clone(), n);
    let zrec = cluster::explore_raw(z, &region, &rec.cfg, DEFAULT_BUDGET)?;
    if zrec.truncated {
        return Err(Error::Truncated);
    }
    Ok(zrec)
}

/// The event T_s(z): the cluster of z in B_n(x) has at most s^4 (ln s)^7
/// points within distance s of z, of which at most s^2 (ln s)^7 lie on the
/// box boundary. `rec` carries x (its source), the region and the
/// configuration; the cluster of z is explored afresh.
pub fn t_s(z: &Point, s: i64, rec: &ClusterRecord, n: i64) -> Result<bool> {
    check_t_s_inputs(z, s, rec, n)?;
    let zrec = explore_from_z(z, rec, n)?;
    let counts = RadialCounts::from_visited(&zrec.visited, z, &rec.source, n, &rec.cfg);
    Ok(counts.holds_at(s))
}

/// z is K-regular when T_s(z) holds for every integer s >= K. Checked up to
/// the first scale where both thresholds dominate the total counts, beyond
/// which every T_s holds vacuously.
pub fn is_k_regular(
    z: &Point,
    params: &RegularityParams,
    rec: &ClusterRecord,
    n: i64,
) -> Result<bool> {
    check_t_s_inputs(z, params.k, rec, n)?;
    let zrec = explore_from_z(z, rec, n)?;
    let counts = RadialCounts::from_visited(&zrec.visited, z, &rec.source, n, &rec.cfg);
    Ok(regular_from_counts(&counts, params.k))
}

fn regular_from_counts(counts: &RadialCounts, k: i64) -> bool {
    let total_all = counts.all.len() as f64;
    let total_boundary = counts.boundary.len() as f64;
    let mut s = k;
    loop {
        if !counts.holds_at(s) {
            return false;
        }
        if thr1(s) >= total_all && thr2(s) >= total_boundary {
            return true;
        }
        s += 1;
    }
}

/// The local event T_s^loc(z) relative to the box B_n(x): every cluster of a
/// point of B_s(z), taken inside B_{s^d}(z) ∩ B_n(x), obeys the two density
/// bounds with (ln s)^4 weights, and at most (ln s)^3 edge-disjoint open
/// paths join B_s(z) to the boundary of B_{s^d}(z) inside B_n(x).
pub fn t_s_loc(z: &Point, s: i64, x: &Point, n: i64, cfg: &Configuration) -> Result<bool> {
    if s < 2 {
        return Err(Error::BadScale(s));
    }
    let d = z.dim() as u32;
    let outer = s
        .checked_pow(d)
        .filter(|&o| o < (1 << 31))
        .ok_or(Error::ScaleOverflow(s))?;
    let ambient = Region::hbox(x.clone(), n);
    let region = Region::Intersection(vec![Region::hbox(z.clone(), outer), ambient.clone()]);
    let h = Region::h();
    let lim1 = (s as f64).powi(4) * (s as f64).ln().powi(4);
    let lim2 = (s as f64).powi(2) * (s as f64).ln().powi(4);

    // Component scan: one flood fill shared across all starting points, so
    // every cluster meeting B_s(z) is walked exactly once.
    let starts = crate::lattice::enumerate_box(z, s, &region, 50_000_000)?;
    let offsets = cfg.spec.offsets();
    let mut seen: FxHashSet<Point> = FxHashSet::default();
    let mut stack: Vec<Point> = Vec::new();
    let mut total: u64 = 0;
    for y in &starts {
        if seen.contains(y) {
            continue;
        }
        seen.insert(y.clone());
        stack.push(y.clone());
        let mut near = 0u64;
        let mut near_boundary = 0u64;
        while let Some(u) = stack.pop() {
            total += 1;
            if total > 100_000_000 {
                return Err(Error::Truncated);
            }
            if linf_dist(&u, z) <= s {
                near += 1;
                if on_box_boundary(&u, x, n, &cfg.spec, &h) {
                    near_boundary += 1;
                }
            }
            for o in &offsets {
                let v = u.add(o);
                if region.contains(&v)
                    && !seen.contains(&v)
                    && cfg.edge_open_unchecked(&u, &v)
                {
                    seen.insert(v.clone());
                    stack.push(v);
                }
            }
        }
        if near as f64 > lim1 || near_boundary as f64 > lim2 {
            return Ok(false);
        }
    }

    let paths = cluster::edge_disjoint_paths(z, s, outer, &ambient, cfg, DEFAULT_BUDGET)?;
    Ok(paths as f64 <= (s as f64).ln().powi(3))
}

/// Greedy maximal 2K-separated subset along a seeded uniformly random
/// permutation of the input.
pub fn select_regular_set(regular_pioneers: &[Point], k: i64, rng_seed: u64) -> Vec<Point> {
    let mut pts: Vec<Point> = regular_pioneers.to_vec();
    pts.sort();
    pts.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pts.shuffle(&mut rng);
    let mut selected: Vec<Point> = Vec::new();
    for p in pts {
        if selected.iter().all(|q| linf_dist(&p, q) >= 2 * k) {
            selected.push(p);
        }
    }
    selected.sort();
    selected
}

/// Outward axis at a boundary point z of B_n(x): an axis with displacement
/// exactly n from x (so the first step already leaves the box), lowest index
/// first, skipping the downward first axis when K steps would exit the
/// half-space. Returns the unit step.
fn outward_step(z: &Point, x: &Point, n: i64, k: i64) -> Result<Point> {
    let d = z.dim();
    for axis in 0..d {
        let delta = z.coord(axis) - x.coord(axis);
        if delta.abs() != n {
            continue;
        }
        let sign = if delta > 0 { 1 } else { -1 };
        if axis == 0 && sign < 0 && z.coord(0) - k < 0 {
            continue;
        }
        let mut step = vec![0i64; d];
        step[axis] = sign;
        return Point::new(&step);
    }
    Err(Error::SegmentExitsHalfSpace(z.coords().to_vec()))
}

/// Grow the maximal open segments L_z from each selected pioneer and collect
/// the line-good endpoints (the star boundary of the extended cluster).
pub fn extend_cluster(
    rec: &ClusterRecord,
    selected: &[Point],
    params: &RegularityParams,
    cfg: &Configuration,
) -> Result<ExtendedCluster> {
    let n = match &rec.region {
        Region::HBox { center, radius } if *center == rec.source => *radius,
        _ => return Err(Error::RegionMismatch),
    };
    let mut segments: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    let mut star_boundary: Vec<Point> = Vec::new();
    for z in selected {
        if !rec.visited.contains(z) {
            return Err(Error::OutsideRegion(z.coords().to_vec()));
        }
        let step = outward_step(z, &rec.source, n, params.k)?;
        let mut seg = vec![z.clone()];
        let mut cur = z.clone();
        for _ in 0..params.k {
            let next = cur.add(&step);
            if !cfg.edge_open_unchecked(&cur, &next) {
                break;
            }
            seg.push(next.clone());
            cur = next;
        }
        if seg.len() as i64 == params.k + 1 {
            star_boundary.push(cur.clone());
        }
        segments.insert(z.clone(), seg);
    }
    star_boundary.sort();
    Ok(ExtendedCluster {
        base: rec.clone(),
        selected: selected.to_vec(),
        segments,
        star_boundary,
    })
}

/// Shared-sample estimates of (E[X_n^{eps,K-reg}], E[X_n^eps]): the expected
/// number of regular pioneers and of all pioneers of B_n(x).
pub fn regpoints_fraction(
    x: &Point,
    n: i64,
    params: &RegularityParams,
    samples: u64,
    cfg_master: &Configuration,
    budget: u64,
) -> Result<(Estimate, Estimate)> {
    if n < 1 {
        return Err(Error::BadScale(n));
    }
    let region = Region::hbox(x.clone(), n);
    use rayon::prelude::*;
    let tallies: Vec<(u64, u64, u64, u128, u128)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64, u64, u128, u128)> {
            let c = cfg_master.derive_sample(i);
            let rec = cluster::explore(x, &region, &c, budget)?;
            if rec.truncated {
                return Ok((0, 0, 1, 0, 0));
            }
            let pio = cluster::pioneers(&rec, n, params.eps)?;
            let total = pio.len() as u64;
            // every pioneer lies in C(x; B_n(x)), whose cluster it shares, so
            // the radial counts come from the already-explored record
            let mut regular = 0u64;
            for z in &pio {
                let counts = RadialCounts::from_visited(&rec.visited, z, x, n, &c);
                if regular_from_counts(&counts, params.k) {
                    regular += 1;
                }
            }
            Ok((
                regular,
                total,
                0,
                (regular as u128) * (regular as u128),
                (total as u128) * (total as u128),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum_r = 0u64;
    let mut sum_t = 0u64;
    let mut trunc = 0u64;
    let mut sq_r = 0u128;
    let mut sq_t = 0u128;
    for (r, t, tr, qr, qt) in tallies {
        sum_r += r;
        sum_t += t;
        trunc += tr;
        sq_r += qr;
        sq_t += qt;
    }
    let make = |sum: u64, sq: u128| {
        let nf = samples as f64;
        let mean = sum as f64 / nf;
        let var = if samples > 1 {
            ((sq as f64 - sum as f64 * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / nf).sqrt(),
            samples,
            hits: sum,
            truncated: trunc,
        }
    };
    Ok((make(sum_r, sq_r), make(sum_t, sq_t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GraphSpec;
    use crate::configuration::PC_D7_NN_LITERATURE;

    fn pt(c: &[i64]) -> Point {
        Point::new(c).unwrap()
    }

    fn d7() -> GraphSpec {
        GraphSpec::nearest_neighbour(7)
    }

    #[test]
    fn thresholds_increase_in_s() {
        for s in 2..200 {
            assert!(thr1(s + 1) > thr1(s));
            assert!(thr2(s + 1) > thr2(s));
        }
    }

    #[test]
    fn t_s_isolated_point_true() {
        // p = 0: the cluster of any boundary point is a singleton.
        let x = pt(&[20, 0, 0, 0, 0, 0, 0]);
        let n = 3;
        let cfg = Configuration::new(2, 0.0, d7()).unwrap();
        let rec = cluster::explore(&x, &Region::hbox(x.clone(), n), &cfg, 1000).unwrap();
        let z = pt(&[23, 0, 0, 0, 0, 0, 0]);
        assert!(t_s(&z, 3, &rec, n).unwrap());
        // s = 2 is degenerate: s^2 (ln s)^7 < 1, so the boundary clause
        // fails for z itself and no point is ever 2-regular
        assert!(!t_s(&z, 2, &rec, n).unwrap());
        let params = RegularityParams::new(3, 0.0).unwrap();
        assert!(is_k_regular(&z, &params, &rec, n).unwrap());
    }

    #[test]
    fn t_s_dense_box_false() {
        // p = 1 fills the box; (2s+1)^7 points within distance s far exceeds
        // s^4 (ln s)^7.
        let x = pt(&[20, 0, 0, 0, 0, 0, 0]);
        let n = 3;
        let cfg = Configuration::new(2, 1.0, d7()).unwrap();
        let rec = cluster::explore(&x, &Region::hbox(x.clone(), n), &cfg, 1_000_000).unwrap();
        let z = pt(&[23, 0, 0, 0, 0, 0, 0]);
        assert!(!t_s(&z, 3, &rec, n).unwrap());
        let params = RegularityParams::new(3, 0.0).unwrap();
        assert!(!is_k_regular(&z, &params, &rec, n).unwrap());
    }

    #[test]
    fn k_regular_matches_bruteforce_conjunction() {
        // Equality with the no-cutoff conjunction over s in [K, n+K] on
        // critical samples.
        let x = pt(&[12, 0, 0, 0, 0, 0, 0]);
        let n = 4;
        let params = RegularityParams::new(2, 0.0).unwrap();
        let master = Configuration::new(40, PC_D7_NN_LITERATURE, d7()).unwrap();
        let region = Region::hbox(x.clone(), n);
        let mut checked = 0;
        for i in 0..400u64 {
            let c = master.derive_sample(i);
            let rec = cluster::explore(&x, &region, &c, 1_000_000).unwrap();
            let pio = cluster::pioneers(&rec, n, 0.0).unwrap();
            for z in pio.iter().take(3) {
                let fast = is_k_regular(z, &params, &rec, n).unwrap();
                let mut brute = true;
                for s in params.k..=(n + params.k) {
                    if !t_s(z, s, &rec, n).unwrap() {
                        brute = false;
                        break;
                    }
                }
                assert_eq!(fast, brute);
                checked += 1;
            }
        }
        assert!(checked > 50, "too few pioneer checks: {checked}");
    }

    #[test]
    fn t_s_loc_p0_true_and_implies_t_s() {
        let x = pt(&[12, 0, 0, 0, 0, 0, 0]);
        let n = 4;
        let cfg = Configuration::new(8, 0.0, d7()).unwrap();
        let z = pt(&[16, 0, 0, 0, 0, 0, 0]);
        // s = 2 is degenerate (s^2 (ln s)^4 < 1): always false, even at p = 0
        assert!(!t_s_loc(&z, 2, &x, n, &cfg).unwrap());
        assert!(t_s_loc(&z, 3, &x, n, &cfg).unwrap());
        // implication on critical samples (the local event is rare at these
        // window sizes, so also sample subcritical p where it does hold)
        let region = Region::hbox(x.clone(), n);
        let mut held = 0;
        for (seed, p) in [(41u64, PC_D7_NN_LITERATURE), (43, 0.03)] {
            let master = Configuration::new(seed, p, d7()).unwrap();
            for i in 0..30u64 {
                let c = master.derive_sample(i);
                let loc = t_s_loc(&z, 3, &x, n, &c).unwrap();
                if loc {
                    held += 1;
                    let rec = cluster::explore(&x, &region, &c, 1_000_000).unwrap();
                    assert!(t_s(&z, 3, &rec, n).unwrap());
                }
            }
        }
        assert!(held > 0, "local event never held");
    }

    #[test]
    fn select_far_points_all_kept() {
        let pts: Vec<Point> = (0..5)
            .map(|k| pt(&[10 * k, 0, 0, 0, 0, 0, 0]))
            .collect();
        let sel = select_regular_set(&pts, 2, 99);
        assert_eq!(sel.len(), 5);
    }

    #[test]
    fn select_two_close_points_uniform() {
        let a = pt(&[0, 0, 0, 0, 0, 0, 0]);
        let b = pt(&[1, 0, 0, 0, 0, 0, 0]);
        let mut first = 0u32;
        let trials = 10_000;
        for seed in 0..trials {
            let sel = select_regular_set(&[a.clone(), b.clone()], 2, seed as u64);
            assert_eq!(sel.len(), 1);
            if sel[0] == a {
                first += 1;
            }
        }
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn select_maximality() {
        let pts: Vec<Point> = (0..40)
            .map(|k| pt(&[(k * 3) % 17, (k * 5) % 11, 0, 0, 0, 0, 0]))
            .collect();
        let k = 3;
        let sel = select_regular_set(&pts, k, 7);
        for p in &pts {
            if sel.contains(p) {
                continue;
            }
            assert!(
                sel.iter().any(|q| linf_dist(p, q) < 2 * k),
                "rejected point {:?} addable",
                p
            );
        }
    }

    #[test]
    fn extend_cluster_degenerate_p() {
        let x = pt(&[20, 0, 0, 0, 0, 0, 0]);
        let n = 3;
        let params = RegularityParams::new(2, 0.0).unwrap();
        // p = 1: segments always complete
        let cfg1 = Configuration::new(5, 1.0, d7()).unwrap();
        let rec1 = cluster::explore(&x, &Region::hbox(x.clone(), n), &cfg1, 1_000_000).unwrap();
        let pio = cluster::pioneers(&rec1, n, 0.0).unwrap();
        let sel = select_regular_set(&pio, params.k, 3);
        let ext1 = extend_cluster(&rec1, &sel, &params, &cfg1).unwrap();
        assert_eq!(ext1.star_boundary.len(), sel.len());
        for (z, seg) in &ext1.segments {
            assert_eq!(seg[0], *z);
            assert_eq!(seg.len() as i64, params.k + 1);
        }
        // p = 0: the cluster is {x}, so a boundary point is rejected and an
        // empty selection yields an empty extension
        let cfg0 = Configuration::new(5, 0.0, d7()).unwrap();
        let rec0 = cluster::explore(&x, &Region::hbox(x.clone(), n), &cfg0, 1000).unwrap();
        let z = pt(&[23, 0, 0, 0, 0, 0, 0]);
        assert!(matches!(
            extend_cluster(&rec0, &[z], &params, &cfg0),
            Err(Error::OutsideRegion(_))
        ));
        let ext0 = extend_cluster(&rec0, &[], &params, &cfg0).unwrap();
        assert!(ext0.star_boundary.is_empty());
        assert!(ext0.segments.is_empty());
    }

    #[test]
    fn segment_completion_probability_is_p_to_k() {
        // The K off-box edges are fresh independent Bernoulli(p) variables.
        let x = pt(&[20, 0, 0, 0, 0, 0, 0]);
        let n = 3;
        let k = 3i64;
        let p: f64 = 0.7;
        let params = RegularityParams::new(k, 0.0).unwrap();
        let master = Configuration::new(77, p, d7()).unwrap();
        let z = pt(&[23, 0, 0, 0, 0, 0, 0]);
        let trials = 10_000u64;
        let mut good = 0u64;
        for i in 0..trials {
            let c = master.derive_sample(i);
            let rec = ClusterRecord {
                source: x.clone(),
                region: Region::hbox(x.clone(), n),
                visited: [x.clone(), z.clone()].into_iter().collect(),
                pioneer_inventory: Default::default(),
                truncated: false,
                open_edges_examined: 0,
                cfg: c,
            };
            let ext = extend_cluster(&rec, std::slice::from_ref(&z), &params, &c).unwrap();
            if !ext.star_boundary.is_empty() {
                good += 1;
            }
        }
        let want = p.powi(k as i32);
        let got = good as f64 / trials as f64;
        let sigma = (want * (1.0 - want) / trials as f64).sqrt();
        assert!((got - want).abs() < 4.0 * sigma, "got {got} want {want}");
    }

    #[test]
    fn outward_direction_avoids_half_space_exit() {
        // wall box: boundary point reached downward would exit H, so the
        // next outward axis is used instead when available.
        let x = pt(&[2, 0, 0, 0, 0, 0, 0]);
        let n = 2;
        // z on both the lower x1 face (z1 = 0) and a transverse face
        let z = pt(&[0, 2, 0, 0, 0, 0, 0]);
        let step = outward_step(&z, &x, n, 3).unwrap();
        assert_eq!(step, pt(&[0, 1, 0, 0, 0, 0, 0]));
        // purely downward boundary point with K > z1: reported
        let z2 = pt(&[0, 0, 0, 0, 0, 0, 0]);
        assert!(outward_step(&z2, &x, n, 3).is_err());
        // with K small enough the downward direction is allowed
        let x3 = pt(&[4, 0, 0, 0, 0, 0, 0]);
        let z3 = pt(&[2, 0, 0, 0, 0, 0, 0]);
        assert_eq!(outward_step(&z3, &x3, 2, 2).unwrap(), pt(&[-1, 0, 0, 0, 0, 0, 0]));
    }

    #[test]
    fn regpoints_p0_zero_and_vacuous_k() {
        let x = pt(&[16, 0, 0, 0, 0, 0, 0]);
        let n = 4;
        let params = RegularityParams::new(2, 0.0).unwrap();
        let cfg0 = Configuration::new(6, 0.0, d7()).unwrap();
        let (r, t) = regpoints_fraction(&x, n, &params, 20, &cfg0, 1000).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(t.mean, 0.0);

        // K >= 2n: thresholds dominate before any count can fail, so every
        // pioneer is regular and the two estimates coincide.
        let big_k = RegularityParams::new(2 * n, 0.0).unwrap();
        let cfg = Configuration::new(6, PC_D7_NN_LITERATURE, d7()).unwrap();
        let (r2, t2) = regpoints_fraction(&x, n, &big_k, 300, &cfg, 1_000_000).unwrap();
        assert_eq!(r2.hits, t2.hits);
    }
}
