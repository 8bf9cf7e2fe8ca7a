//! Budgeted breadth-first exploration of restricted clusters C(x; A),
//! connectivity queries, pioneer extraction and disjoint-path counting.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::flow::FlowNetwork;
use crate::lattice::{
    ge_eps_times, linf_dist, on_box_boundary, Point, Region,
};
#[cfg(test)]
use crate::lattice::GraphSpec;
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::BTreeMap;

/// Default vertex budget per exploration.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// The explored restricted cluster C(x; region) plus per-radius pioneer
/// inventories.
#[derive(Clone, Debug)]
pub struct ClusterRecord {
    pub source: Point,
    pub region: Region,
    pub visited: FxHashSet<Point>,
    /// radius -> cluster points on the inner boundary of B_radius(source)
    /// (boundary taken inside the region's ambient half-/full space).
    pub pioneer_inventory: BTreeMap<i64, Vec<Point>>,
    pub truncated: bool,
    pub open_edges_examined: u64,
    pub cfg: Configuration,
}

/// Outcome of a budgeted connectivity query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Connected,
    Disconnected,
    /// Budget exhausted before the query resolved; never silently "false".
    Unresolved,
}

/// Ambient space against which box boundaries are taken: the region with its
/// box constraints stripped.
pub fn region_base(region: &Region) -> Region {
    match region {
        Region::FullSpace => Region::FullSpace,
        Region::HalfSpace { shift } => Region::HalfSpace { shift: *shift },
        Region::HBox { .. } => Region::h(),
        Region::Intersection(rs) => {
            let bases: Vec<Region> = rs.iter().map(region_base).collect();
            Region::Intersection(bases)
        }
    }
}

struct Bfs<'a> {
    cfg: &'a Configuration,
    region: &'a Region,
    offsets: Vec<Point>,
    visited: FxHashSet<Point>,
    truncated: bool,
    open_edges: u64,
}

impl<'a> Bfs<'a> {
    fn new(cfg: &'a Configuration, region: &'a Region) -> Self {
        Bfs {
            cfg,
            region,
            offsets: cfg.spec.offsets(),
            visited: FxHashSet::default(),
            truncated: false,
            open_edges: 0,
        }
    }

    /// Run until closure or budget, invoking `on_visit` on each newly visited
    /// point. Returns early (without truncation flag) if `on_visit` says stop.
    fn run<F: FnMut(&Point) -> bool>(
        &mut self,
        sources: Vec<Point>,
        budget: u64,
        mut on_visit: F,
    ) {
        let mut layer: Vec<Point> = Vec::new();
        for s in sources {
            if self.visited.insert(s.clone()) {
                layer.push(s);
            }
        }
        layer.sort();
        for p in &layer {
            if !on_visit(p) {
                return;
            }
        }
        while !layer.is_empty() {
            let mut next: Vec<Point> = Vec::new();
            for u in &layer {
                for v in self.offsets.iter().map(|o| u.add(o)) {
                    if !self.region.contains(&v) || self.visited.contains(&v) {
                        continue;
                    }
                    if self.cfg.edge_open_unchecked(u, &v) {
                        self.open_edges += 1;
                        if self.visited.len() as u64 >= budget {
                            self.truncated = true;
                            return;
                        }
                        self.visited.insert(v.clone());
                        if !on_visit(&v) {
                            return;
                        }
                        next.push(v);
                    }
                }
            }
            // Deterministic expansion order: lexicographic within each layer.
            next.sort();
            layer = next;
        }
    }
}

/// Breadth-first exploration of C(x; region) under `cfg`, visiting at most
/// `vertex_budget` points. Each candidate edge's state is queried at most
/// once per exploration.
pub fn explore(
    x: &Point,
    region: &Region,
    cfg: &Configuration,
    vertex_budget: u64,
) -> Result<ClusterRecord> {
    let mut rec = explore_raw(x, region, cfg, vertex_budget)?;
    rec.pioneer_inventory = build_inventory(&rec);
    Ok(rec)
}

/// Same as [`explore`], but skips the pioneer-inventory pass (hot paths that
/// only need membership).
pub fn explore_raw(
    x: &Point,
    region: &Region,
    cfg: &Configuration,
    vertex_budget: u64,
) -> Result<ClusterRecord> {
    if vertex_budget == 0 {
        return Err(Error::BadBudget(vertex_budget));
    }
    if !region.contains(x) {
        return Err(Error::OutsideRegion(x.coords().to_vec()));
    }
    let mut bfs = Bfs::new(cfg, region);
    bfs.run(vec![x.clone()], vertex_budget, |_| true);
    Ok(ClusterRecord {
        source: x.clone(),
        region: region.clone(),
        visited: bfs.visited,
        pioneer_inventory: BTreeMap::new(),
        truncated: bfs.truncated,
        open_edges_examined: bfs.open_edges,
        cfg: *cfg,
    })
}

fn build_inventory(rec: &ClusterRecord) -> BTreeMap<i64, Vec<Point>> {
    let base = region_base(&rec.region);
    let mut inv: BTreeMap<i64, Vec<Point>> = BTreeMap::new();
    for u in &rec.visited {
        let r = linf_dist(u, &rec.source);
        if on_box_boundary(u, &rec.source, r, &rec.cfg.spec, &base) {
            inv.entry(r).or_default().push(u.clone());
        }
    }
    for v in inv.values_mut() {
        v.sort();
    }
    inv
}

/// Is y connected to x inside `region`? Early exit on reaching y.
pub fn connected(
    x: &Point,
    y: &Point,
    region: &Region,
    cfg: &Configuration,
    budget: u64,
) -> Result<Connectivity> {
    connected_sets(std::slice::from_ref(x), std::slice::from_ref(y), region, cfg, budget)
}

/// Multi-source variant: is some point of `a` connected to some point of `b`
/// inside `region`?
pub fn connected_sets(
    a: &[Point],
    b: &[Point],
    region: &Region,
    cfg: &Configuration,
    budget: u64,
) -> Result<Connectivity> {
    if budget == 0 {
        return Err(Error::BadBudget(budget));
    }
    for p in a.iter().chain(b) {
        if !region.contains(p) {
            return Err(Error::OutsideRegion(p.coords().to_vec()));
        }
    }
    let targets: FxHashSet<&Point> = b.iter().collect();
    if a.iter().any(|p| targets.contains(p)) {
        return Ok(Connectivity::Connected);
    }
    let mut bfs = Bfs::new(cfg, region);
    let mut hit = false;
    bfs.run(a.to_vec(), budget, |p| {
        if targets.contains(p) {
            hit = true;
            return false;
        }
        true
    });
    if hit {
        Ok(Connectivity::Connected)
    } else if bfs.truncated {
        Ok(Connectivity::Unresolved)
    } else {
        Ok(Connectivity::Disconnected)
    }
}

/// Pioneers of the record: visited ∩ ∂B_n^ε(source). The record must have
/// been explored with region = B_n(source) and must be complete.
pub fn pioneers(rec: &ClusterRecord, n: i64, eps: f64) -> Result<Vec<Point>> {
    let want = Region::hbox(rec.source.clone(), n);
    if rec.region != want {
        return Err(Error::RegionMismatch);
    }
    if rec.truncated {
        return Err(Error::Truncated);
    }
    let inv = if rec.pioneer_inventory.is_empty() && !rec.visited.is_empty() {
        build_inventory(rec)
    } else {
        rec.pioneer_inventory.clone()
    };
    Ok(inv
        .get(&n)
        .map(|pts| {
            pts.iter()
                .filter(|u| ge_eps_times(u.x1(), eps, n))
                .cloned()
                .collect()
        })
        .unwrap_or_default())
}

/// Maximum number of edge-disjoint open paths from B_s(z) to the inner
/// boundary of B_{s^d}(z), all inside `ambient`.
pub fn disjoint_path_count(
    z: &Point,
    s: i64,
    ambient: &Region,
    cfg: &Configuration,
) -> Result<i64> {
    if s < 2 {
        return Err(Error::BadScale(s));
    }
    let d = z.dim() as u32;
    let outer = s
        .checked_pow(d)
        .filter(|&o| o < (1 << 31))
        .ok_or(Error::ScaleOverflow(s))?;
    edge_disjoint_paths(z, s, outer, ambient, cfg, DEFAULT_BUDGET)
}

/// Edge-disjoint open paths from {y : |y-z| ≤ inner_r} to the inner boundary
/// of B_{outer_r}(z), within `ambient`, as a unit-capacity max flow on the
/// explored open subgraph.
pub fn edge_disjoint_paths(
    z: &Point,
    inner_r: i64,
    outer_r: i64,
    ambient: &Region,
    cfg: &Configuration,
    budget: u64,
) -> Result<i64> {
    let base = region_base(ambient);
    let region = Region::Intersection(vec![
        Region::hbox(z.clone(), outer_r),
        ambient.clone(),
    ]);
    let spec = cfg.spec;
    let sources = crate::lattice::enumerate_box(z, inner_r, &region, 50_000_000)?;
    if sources.is_empty() {
        return Ok(0);
    }
    let is_target = |u: &Point| on_box_boundary(u, z, outer_r, &spec, &base) && ambient.contains(u);

    // Explore the open subgraph reachable from the sources, collecting every
    // open edge among visited points.
    let mut visited: FxHashMap<Point, usize> = FxHashMap::default();
    let mut edges: FxHashSet<(usize, usize)> = FxHashSet::default();
    let add_edge = |edges: &mut FxHashSet<(usize, usize)>, a: usize, b: usize| {
        edges.insert((a.min(b), a.max(b)));
    };
    let offsets = spec.offsets();
    let mut layer: Vec<Point> = Vec::new();
    for s in &sources {
        if !visited.contains_key(s) {
            let id = visited.len();
            visited.insert(s.clone(), id);
            layer.push(s.clone());
        }
    }
    layer.sort();
    while !layer.is_empty() {
        let mut next = Vec::new();
        for u in &layer {
            let uid = visited[u];
            for v in offsets.iter().map(|o| u.add(o)) {
                if !region.contains(&v) {
                    continue;
                }
                if let Some(&vid) = visited.get(&v) {
                    // Edge between two visited points: record once (from the
                    // lexicographically smaller endpoint) if open.
                    if u < &v && cfg.edge_open_unchecked(u, &v) {
                        add_edge(&mut edges, uid, vid);
                    }
                    continue;
                }
                if cfg.edge_open_unchecked(u, &v) {
                    if visited.len() as u64 >= budget {
                        return Err(Error::Truncated);
                    }
                    let vid = visited.len();
                    visited.insert(v.clone(), vid);
                    add_edge(&mut edges, uid, vid);
                    next.push(v);
                }
            }
        }
        next.sort();
        layer = next;
    }

    let n = visited.len();
    let mut net = FlowNetwork::new(n + 2);
    let (s_node, t_node) = (n, n + 1);
    let big = 1i64 << 40;
    for (uid, vid) in edges {
        net.add_undirected_unit(uid, vid);
    }
    let source_set: FxHashSet<&Point> = sources.iter().collect();
    let mut has_target = false;
    for (p, &id) in &visited {
        if source_set.contains(p) {
            net.add_arc(s_node, id, big);
        }
        if is_target(p) {
            net.add_arc(id, t_node, big);
            has_target = true;
        }
    }
    if !has_target {
        return Ok(0);
    }
    Ok(net.max_flow(s_node, t_node))
}
