//! Monte Carlo estimators for restricted two-point functions, sphere sums,
//! pioneer counts and the one-arm style quantity phi. All estimators draw
//! configuration i from `cfg.derive_sample(i)`, accumulate integers, and
//! merge order-free, so results do not depend on the thread count.

use crate::cluster::{self, Connectivity};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::lattice::{Point, Region};
use rayon::prelude::*;
use serde::Serialize;

/// A Monte Carlo estimate together with its raw integer tallies.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    /// Raw integer sum scored across all samples (hits for indicators).
    pub hits: u64,
    /// Samples whose exploration hit the vertex budget.
    pub truncated: u64,
}

impl Estimate {
    pub fn truncation_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.truncated as f64 / self.samples as f64
        }
    }

    /// Build from integer tallies of a per-sample score, optionally rescaled.
    pub(crate) fn from_counts(
        sum: u64,
        sumsq: u128,
        samples: u64,
        truncated: u64,
        scale: f64,
    ) -> Estimate {
        let n = samples as f64;
        let mean_raw = sum as f64 / n;
        let var = if samples > 1 {
            let num = sumsq as f64 - (sum as f64) * mean_raw;
            (num / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean: scale * mean_raw,
            stderr: scale * (var / n).sqrt(),
            samples,
            hits: sum,
            truncated,
        }
    }
}

/// Order-free integer accumulator for a fixed-width score vector.
#[derive(Clone, Debug)]
struct Acc {
    sum: Vec<u64>,
    sumsq: Vec<u128>,
    truncated: u64,
}

impl Acc {
    fn new(width: usize) -> Acc {
        Acc {
            sum: vec![0; width],
            sumsq: vec![0; width],
            truncated: 0,
        }
    }

    fn record(&mut self, scores: &[u64], truncated: bool) {
        for (k, &v) in scores.iter().enumerate() {
            self.sum[k] += v;
            self.sumsq[k] += (v as u128) * (v as u128);
        }
        if truncated {
            self.truncated += 1;
        }
    }

    fn merge(mut self, other: Acc) -> Acc {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sumsq[k] += other.sumsq[k];
        }
        self.truncated += other.truncated;
        self
    }
}

/// Run `score` on every derived sample and merge the integer tallies.
/// Addition is commutative, so any rayon split yields identical totals.
fn run_samples<F>(cfg: &Configuration, samples: u64, width: usize, score: F) -> Result<Acc>
where
    F: Fn(&Configuration, &mut Vec<u64>) -> Result<bool> + Sync,
{
    if samples == 0 {
        return Err(Error::BadBudget(0));
    }
    (0..samples)
        .into_par_iter()
        .try_fold(
            || Acc::new(width),
            |mut acc, i| -> Result<Acc> {
                let c = cfg.derive_sample(i);
                let mut scores = vec![0u64; width];
                let truncated = score(&c, &mut scores)?;
                acc.record(&scores, truncated);
                Ok(acc)
            },
        )
        .try_reduce(|| Acc::new(width), |a, b| Ok(a.merge(b)))
}

/// Signed-permutation orbit of a displacement vector. When `fix_axis1` is
/// set the first coordinate is pinned (the symmetries of a half-space that
/// fix the source point), otherwise all axes may be permuted and reflected.
pub fn displacement_orbit(disp: &Point, fix_axis1: bool) -> Vec<Point> {
    let d = disp.dim();
    let free: Vec<usize> = if fix_axis1 { (1..d).collect() } else { (0..d).collect() };
    let mut perm: Vec<usize> = free.clone();
    let mut out: std::collections::BTreeSet<Point> = std::collections::BTreeSet::new();
    permute(&mut perm, 0, &mut |p| {
        // image coordinates before sign flips
        let mut base = vec![0i64; d];
        if fix_axis1 {
            base[0] = disp.coord(0);
        }
        for (k, &axis) in free.iter().enumerate() {
            base[axis] = disp.coord(p[k]);
        }
        // flip signs only on axes with nonzero entries to bound the fan-out
        let nz: Vec<usize> = free.iter().copied().filter(|&a| base[a] != 0).collect();
        for mask in 0..(1u32 << nz.len()) {
            let mut img = base.clone();
            for (bit, &a) in nz.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    img[a] = -img[a];
                }
            }
            out.insert(Point::new(&img).expect("orbit image in bounds"));
        }
    });
    out.into_iter().collect()
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// tau_region(x, y): probability that x and y are connected inside `region`.
pub fn mc_tau(
    x: &Point,
    y: &Point,
    region: &Region,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Estimate> {
    let acc = run_samples(cfg, samples, 1, |c, scores| {
        match cluster::connected(x, y, region, c, budget)? {
            Connectivity::Connected => {
                scores[0] = 1;
                Ok(false)
            }
            Connectivity::Disconnected => Ok(false),
            Connectivity::Unresolved => Ok(true),
        }
    })?;
    Ok(Estimate::from_counts(
        acc.sum[0],
        acc.sumsq[0],
        samples,
        acc.truncated,
        1.0,
    ))
}

/// Pointwise tau pooled over a list of symmetry-equivalent targets: one
/// exploration of C(x; region) per sample scores every target at once. The
/// returned mean is the per-target connection probability.
pub fn mc_tau_pooled(
    x: &Point,
    targets: &[Point],
    region: &Region,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Estimate> {
    if targets.is_empty() {
        return Err(Error::EmptySupport);
    }
    for t in targets {
        if !region.contains(t) {
            return Err(Error::OutsideRegion(t.coords().to_vec()));
        }
    }
    let acc = run_samples(cfg, samples, 1, |c, scores| {
        let rec = cluster::explore_raw(x, region, c, budget)?;
        scores[0] = targets.iter().filter(|t| rec.visited.contains(t)).count() as u64;
        Ok(rec.truncated)
    })?;
    let m = targets.len() as f64;
    Ok(Estimate::from_counts(
        acc.sum[0],
        acc.sumsq[0],
        samples,
        acc.truncated,
        1.0 / m,
    ))
}

/// One exploration per sample scores several pooled target families (for
/// instance the orbits of several radii). Entry k of the result is the
/// per-target estimate for `families[k]`.
pub fn mc_radial_profile(
    x: &Point,
    families: &[Vec<Point>],
    region: &Region,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Vec<Estimate>> {
    if families.is_empty() || families.iter().any(|f| f.is_empty()) {
        return Err(Error::EmptySupport);
    }
    for t in families.iter().flatten() {
        if !region.contains(t) {
            return Err(Error::OutsideRegion(t.coords().to_vec()));
        }
    }
    let acc = run_samples(cfg, samples, families.len(), |c, scores| {
        let rec = cluster::explore_raw(x, region, c, budget)?;
        for (k, fam) in families.iter().enumerate() {
            scores[k] = fam.iter().filter(|t| rec.visited.contains(t)).count() as u64;
        }
        Ok(rec.truncated)
    })?;
    Ok((0..families.len())
        .map(|k| {
            Estimate::from_counts(
                acc.sum[k],
                acc.sumsq[k],
                samples,
                acc.truncated,
                1.0 / families[k].len() as f64,
            )
        })
        .collect())
}

/// Sphere sums sum_{y in bdry B_r(x)} tau(x, y) for several radii from one
/// exploration per sample, scored through the pioneer inventory.
pub fn mc_sphere_tau(
    x: &Point,
    radii: &[i64],
    region: &Region,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Vec<Estimate>> {
    if radii.is_empty() {
        return Err(Error::EmptySupport);
    }
    if radii.iter().any(|&r| r <= 0) {
        return Err(Error::BadScale(*radii.iter().min().unwrap()));
    }
    let acc = run_samples(cfg, samples, radii.len(), |c, scores| {
        let rec = cluster::explore(x, region, c, budget)?;
        for (k, r) in radii.iter().enumerate() {
            scores[k] = rec
                .pioneer_inventory
                .get(r)
                .map(|v| v.len() as u64)
                .unwrap_or(0);
        }
        Ok(rec.truncated)
    })?;
    Ok((0..radii.len())
        .map(|k| Estimate::from_counts(acc.sum[k], acc.sumsq[k], samples, acc.truncated, 1.0))
        .collect())
}

/// Expected number of eps-pioneer points of B_n(x): cluster points on the
/// boundary of the box with first coordinate at least eps * n.
pub fn mc_pioneer_sum(
    x: &Point,
    n: i64,
    eps: f64,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Estimate> {
    if n <= 0 {
        return Err(Error::BadScale(n));
    }
    let region = Region::hbox(x.clone(), n);
    if !region.contains(x) {
        return Err(Error::OutsideRegion(x.coords().to_vec()));
    }
    let acc = run_samples(cfg, samples, 1, |c, scores| {
        let rec = cluster::explore(x, &region, c, budget)?;
        if rec.truncated {
            return Ok(true);
        }
        scores[0] = cluster::pioneers(&rec, n, eps)?.len() as u64;
        Ok(false)
    })?;
    Ok(Estimate::from_counts(
        acc.sum[0],
        acc.sumsq[0],
        samples,
        acc.truncated,
        1.0,
    ))
}

/// phi_p(H_n) seen from the origin: p times the expected number of open-able
/// edges leading out of the half-space H_n = {x1 >= -n} from the cluster of 0.
///
/// Budget-truncated explorations contribute the exits found so far, so the
/// estimate is a lower bound whose slack shrinks with the budget; the
/// truncation fraction in the result makes the residual bias visible. Deep
/// levels draw most of their mass from rare large clusters, so scoring
/// truncated samples as zero would suppress them much more than shallow ones.
pub fn mc_phi(
    n: i64,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Estimate> {
    if n < 0 {
        return Err(Error::BadScale(n));
    }
    let region = Region::HalfSpace { shift: n };
    let origin = Point::origin(cfg.spec.dimension)?;
    let offsets = cfg.spec.offsets();
    let acc = run_samples(cfg, samples, 1, |c, scores| {
        let rec = cluster::explore_raw(&origin, &region, c, budget)?;
        let mut exits: u64 = 0;
        for u in &rec.visited {
            exits += offsets
                .iter()
                .filter(|o| u.coord(0) + o.coord(0) < -n)
                .count() as u64;
        }
        scores[0] = exits;
        Ok(rec.truncated)
    })?;
    Ok(Estimate::from_counts(
        acc.sum[0],
        acc.sumsq[0],
        samples,
        acc.truncated,
        cfg.p,
    ))
}

/// P(A <-> B inside region). Unresolved queries are tallied as truncated and
/// scored as misses, so the estimate is a lower bound when truncation occurs.
pub fn mc_two_sets(
    a: &[Point],
    b: &[Point],
    region: &Region,
    cfg: &Configuration,
    samples: u64,
    budget: u64,
) -> Result<Estimate> {
    let acc = run_samples(cfg, samples, 1, |c, scores| {
        match cluster::connected_sets(a, b, region, c, budget)? {
            Connectivity::Connected => {
                scores[0] = 1;
                Ok(false)
            }
            Connectivity::Disconnected => Ok(false),
            Connectivity::Unresolved => Ok(true),
        }
    })?;
    Ok(Estimate::from_counts(
        acc.sum[0],
        acc.sumsq[0],
        samples,
        acc.truncated,
        1.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GraphSpec;
    use approx::assert_relative_eq;

    fn pt(c: &[i64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn orbit_of_axis_vector_full_space() {
        // r e_1 in d = 7: orbit is all +/- r e_i, 14 points.
        let disp = pt(&[5, 0, 0, 0, 0, 0, 0]);
        let orb = displacement_orbit(&disp, false);
        assert_eq!(orb.len(), 14);
        // transverse vector with axis 1 pinned: 12 points
        let t = pt(&[0, 5, 0, 0, 0, 0, 0]);
        assert_eq!(displacement_orbit(&t, true).len(), 12);
        // diagonal with axis 1 pinned: choose 2 of 6 axes, 4 sign patterns
        let diag = pt(&[3, 3, 3, 0, 0, 0, 0]);
        assert_eq!(displacement_orbit(&diag, true).len(), 60);
    }

    #[test]
    fn orbit_contains_original_and_preserves_norm() {
        let disp = pt(&[2, -1, 0, 3, 0, 0, 0]);
        for fix in [false, true] {
            let orb = displacement_orbit(&disp, fix);
            assert!(orb.contains(&disp));
            for o in &orb {
                assert_eq!(crate::lattice::l1_norm(o), crate::lattice::l1_norm(&disp));
            }
        }
    }

    #[test]
    fn tau_degenerate_p() {
        let spec = GraphSpec::nearest_neighbour(7);
        let x = pt(&[0, 0, 0, 0, 0, 0, 0]);
        let y = pt(&[2, 0, 0, 0, 0, 0, 0]);
        let h = Region::h();
        let cfg0 = Configuration::new(7, 0.0, spec).unwrap();
        let e0 = mc_tau(&x, &y, &h, &cfg0, 50, 10_000).unwrap();
        assert_eq!(e0.mean, 0.0);
        assert_eq!(e0.stderr, 0.0);
        let cfg1 = Configuration::new(7, 1.0, spec).unwrap();
        let e1 = mc_tau(&x, &y, &h, &cfg1, 50, 10_000).unwrap();
        assert_eq!(e1.mean, 1.0);
    }

    #[test]
    fn tau_single_edge_matches_p() {
        // adjacent pair restricted to a region containing only those two
        // points: tau = p exactly.
        let spec = GraphSpec::nearest_neighbour(2);
        let x = pt(&[5, 5]);
        let y = pt(&[5, 6]);
        // four overlapping boxes cut out exactly {(5,5), (5,6)}
        let two_cells = Region::Intersection(vec![
            Region::hbox(pt(&[7, 5]), 2),
            Region::hbox(pt(&[3, 5]), 2),
            Region::hbox(pt(&[5, 7]), 2),
            Region::hbox(pt(&[5, 4]), 2),
        ]);
        assert!(two_cells.contains(&x) && two_cells.contains(&y));
        assert!(!two_cells.contains(&pt(&[5, 4])));
        assert!(!two_cells.contains(&pt(&[4, 5])));
        let p = 0.37;
        let cfg = Configuration::new(11, p, spec).unwrap();
        let samples = 200_000u64;
        let est = mc_tau(&x, &y, &two_cells, &cfg, samples, 1000).unwrap();
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        assert!(
            (est.mean - p).abs() < 4.0 * sigma,
            "mean {} vs p {} (sigma {})",
            est.mean,
            p,
            sigma
        );
        assert_relative_eq!(est.stderr, sigma, max_relative = 0.05);
    }

    #[test]
    fn pooled_tau_matches_plain_tau() {
        // With a single target the pooled estimator must agree with mc_tau
        // exactly (same configurations, same scoring).
        let spec = GraphSpec::nearest_neighbour(7);
        let x = pt(&[3, 0, 0, 0, 0, 0, 0]);
        let y = pt(&[4, 1, 0, 0, 0, 0, 0]);
        let region = Region::hbox(x.clone(), 3);
        let cfg = Configuration::new(21, 0.09, spec).unwrap();
        let a = mc_tau(&x, &y, &region, &cfg, 4000, 1_000_000).unwrap();
        let b = mc_tau_pooled(&x, std::slice::from_ref(&y), &region, &cfg, 4000, 1_000_000)
            .unwrap();
        assert_eq!(a.hits, b.hits);
        assert_eq!(a.mean, b.mean);
    }

    #[test]
    fn radial_profile_matches_pooled_per_family() {
        let spec = GraphSpec::nearest_neighbour(7);
        let x = pt(&[6, 0, 0, 0, 0, 0, 0]);
        let region = Region::hbox(x.clone(), 4);
        let cfg = Configuration::new(5, 0.08, spec).unwrap();
        let fam1: Vec<Point> = displacement_orbit(&pt(&[2, 0, 0, 0, 0, 0, 0]), false)
            .iter()
            .map(|d| x.add(d))
            .collect();
        let fam2: Vec<Point> = displacement_orbit(&pt(&[4, 0, 0, 0, 0, 0, 0]), false)
            .iter()
            .map(|d| x.add(d))
            .collect();
        let prof = mc_radial_profile(&x, &[fam1.clone(), fam2.clone()], &region, &cfg, 3000, 1_000_000)
            .unwrap();
        let solo1 = mc_tau_pooled(&x, &fam1, &region, &cfg, 3000, 1_000_000).unwrap();
        let solo2 = mc_tau_pooled(&x, &fam2, &region, &cfg, 3000, 1_000_000).unwrap();
        assert_eq!(prof[0].hits, solo1.hits);
        assert_eq!(prof[1].hits, solo2.hits);
        // nearer shell connects at least as often in the mean
        assert!(prof[0].mean >= prof[1].mean);
    }

    #[test]
    fn phi_n0_single_site_nn() {
        // In H_0 from the origin at any p, the cluster always contains 0;
        // with p = 0 the cluster is just {0} and the only exit edge is
        // (0, -e1), so phi = p * 1.
        let spec = GraphSpec::nearest_neighbour(7);
        let cfg = Configuration::new(3, 0.0, spec).unwrap();
        let est = mc_phi(0, &cfg, 10, 1000).unwrap();
        assert_eq!(est.mean, 0.0);
        // subcritical p: clusters stay finite, and the origin alone
        // contributes one exit edge, so phi >= p
        let p = 0.05;
        let cfg = Configuration::new(3, p, spec).unwrap();
        let est = mc_phi(0, &cfg, 500, 1_000_000).unwrap();
        assert_eq!(est.truncated, 0);
        assert!(est.mean >= p - 1e-12);
    }

    #[test]
    fn two_sets_p1_and_overlap() {
        let spec = GraphSpec::nearest_neighbour(7);
        let region = Region::h();
        let a = vec![pt(&[0, 0, 0, 0, 0, 0, 0])];
        let b = vec![pt(&[0, 0, 0, 0, 0, 0, 0]), pt(&[5, 0, 0, 0, 0, 0, 0])];
        let cfg = Configuration::new(1, 0.0, spec).unwrap();
        // shared point: connected with probability 1 even at p = 0
        let est = mc_two_sets(&a, &b, &region, &cfg, 20, 100).unwrap();
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn deterministic_across_rayon_splits() {
        // The same estimate computed under differently sized local pools must
        // agree bit for bit.
        let spec = GraphSpec::nearest_neighbour(7);
        let x = pt(&[2, 0, 0, 0, 0, 0, 0]);
        let y = pt(&[3, 1, 0, 0, 0, 0, 0]);
        let region = Region::hbox(x.clone(), 2);
        let cfg = Configuration::new(19, 0.1, spec).unwrap();
        let mut runs = Vec::new();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let est = pool
                .install(|| mc_tau(&x, &y, &region, &cfg, 2000, 100_000))
                .unwrap();
            runs.push((est.mean.to_bits(), est.stderr.to_bits(), est.hits));
        }
        assert_eq!(runs[0], runs[1]);
    }
}
