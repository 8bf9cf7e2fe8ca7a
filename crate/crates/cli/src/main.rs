//! perclab: command-line front end for the percolation laboratory.
//!
//! Every subcommand emits a JSON result document (stdout or `--out`) with an
//! embedded run manifest, plus a one-line summary on stderr. Exit codes:
//! 0 success, 2 invalid arguments, 3 inconclusive statistics, 4 runtime
//! failure. In `--deterministic` mode timing fields are omitted so reruns
//! with identical flags (at any thread count) are byte-identical.

use clap::{Args, Parser, Subcommand, ValueEnum};
use perclab_core::analysis::{self, SandwichStatus};
use perclab_core::capacity;
use perclab_core::estimators::{self, Estimate};
use perclab_core::regularity::{self, RegularityParams};
use perclab_core::{Configuration, CriticalPoint, GraphSpec, Point, Region};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(name = "perclab", version, about = "Percolation laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Nn,
    Spread,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PcSource {
    User,
    Literature,
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Lattice dimension.
    #[arg(long, default_value_t = 7)]
    d: usize,
    /// Edge model.
    #[arg(long, value_enum, default_value_t = ModelArg::Nn)]
    model: ModelArg,
    /// Spread-out range (ignored for nn).
    #[arg(long, default_value_t = 1)]
    l: i64,
    /// Bond density; defaults to the configured critical point.
    #[arg(long)]
    p: Option<f64>,
    /// Where the critical point comes from when --p is absent.
    #[arg(long, value_enum, default_value_t = PcSource::Literature)]
    pc_source: PcSource,
    /// Master seed for the counter-based bond RNG.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Worker threads (also PERCLAB_THREADS); affects speed only.
    #[arg(long)]
    threads: Option<usize>,
    /// Per-exploration vertex budget.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Boundary restriction parameter epsilon in [0, 0.5).
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Regularity scale K.
    #[arg(long, default_value_t = 4)]
    k: i64,
    /// Write the result document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit timing fields so identical reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// JSON config file; its entries override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Point-to-point connection probability.
    Tau {
        #[command(flatten)]
        common: Common,
        /// Source, comma-separated integers of length d.
        #[arg(long)]
        x: String,
        /// Target, comma-separated integers of length d.
        #[arg(long)]
        y: String,
        /// Ambient region.
        #[arg(long, default_value = "half")]
        region: String,
    },
    /// Expected boundary hit counts at several radii from one source.
    SphereTau {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        /// Comma-separated radii.
        #[arg(long)]
        radii: String,
        #[arg(long, default_value = "half")]
        region: String,
    },
    /// Expected eps-restricted pioneer count of B_n(x).
    Pioneers {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        #[arg(long)]
        n: i64,
    },
    /// Shifted half-space one-arm observable phi_p(n) at several n.
    Phi {
        #[command(flatten)]
        common: Common,
        /// Comma-separated shifts.
        #[arg(long)]
        n: String,
    },
    /// (d-4)-capacity of a finite point set.
    Capacity {
        #[command(flatten)]
        common: Common,
        /// CSV file, one point per line as comma-separated integers.
        #[arg(long)]
        points: PathBuf,
        /// Duality-gap tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Regular-pioneer fractions at several box scales.
    Regularity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "origin")]
        x: String,
        /// Comma-separated box scales.
        #[arg(long)]
        n: String,
    },
    /// Decay-regime exponent fits and the normalized ratio sweep.
    VerifyRegimes {
        #[command(flatten)]
        common: Common,
    },
    /// Both sides of the boundary-pair decomposition bound for one geometry.
    Sandwich {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Exact connection probabilities on an explicit small graph.
    ExactOracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vertices: usize,
        /// Edge list like "0-1,1-2,2-0".
        #[arg(long)]
        edges: String,
    },
    /// Bisection estimate of the critical point.
    EstimatePc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        n_max: i64,
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli.cmd, started) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("perclab: error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn apply_config_file(c: &mut Common) -> Result<(), String> {
    let Some(path) = &c.config else {
        return Ok(());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("config file: {e}"))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("config file: {e}"))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| "config file: expected a JSON object".to_string())?;
    for (key, v) in obj {
        match key.as_str() {
            "d" => c.d = as_u64(v, key)? as usize,
            "model" => {
                c.model = match v.as_str() {
                    Some("nn") => ModelArg::Nn,
                    Some("spread") => ModelArg::Spread,
                    _ => return Err(format!("config file: bad model {v}")),
                }
            }
            "l" => c.l = as_u64(v, key)? as i64,
            "p" => c.p = Some(as_f64(v, key)?),
            "pc_source" => {
                c.pc_source = match v.as_str() {
                    Some("user") => PcSource::User,
                    Some("literature") => PcSource::Literature,
                    Some("estimate") => PcSource::Estimate,
                    _ => return Err(format!("config file: bad pc_source {v}")),
                }
            }
            "seed" => c.seed = as_u64(v, key)?,
            "samples" => c.samples = as_u64(v, key)?,
            "threads" => c.threads = Some(as_u64(v, key)? as usize),
            "budget" => c.budget = as_u64(v, key)?,
            "eps" => c.eps = as_f64(v, key)?,
            "k" => c.k = as_u64(v, key)? as i64,
            "deterministic" => {
                c.deterministic = v.as_bool().ok_or(format!("config file: bad {key}"))?
            }
            other => return Err(format!("config file: unknown key {other}")),
        }
    }
    Ok(())
}

fn as_u64(v: &Value, key: &str) -> Result<u64, String> {
    v.as_u64().ok_or(format!("config file: bad {key}"))
}

fn as_f64(v: &Value, key: &str) -> Result<f64, String> {
    v.as_f64().ok_or(format!("config file: bad {key}"))
}

struct Setup {
    cfg: Configuration,
    common: Common,
    pc: Option<CriticalPoint>,
}

fn setup(mut common: Common) -> Result<Setup, String> {
    apply_config_file(&mut common)?;
    let threads = common.threads.or_else(|| {
        std::env::var("PERCLAB_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let spec = match common.model {
        ModelArg::Nn => GraphSpec::nearest_neighbour(common.d),
        ModelArg::Spread => GraphSpec::spread_out(common.d, common.l),
    };
    let (p, pc) = match common.p {
        Some(p) => (p, None),
        None => {
            let pc = match common.pc_source {
                PcSource::Literature | PcSource::User => CriticalPoint::literature_default(&spec)
                    .ok_or_else(|| {
                        "no literature critical point for this graph; pass --p".to_string()
                    })?,
                PcSource::Estimate => {
                    let est = analysis::estimate_pc(&spec, 16, 400, 0.002, common.seed)
                        .map_err(|e| e.to_string())?;
                    est.critical_point
                }
            };
            (pc.value, Some(pc))
        }
    };
    let cfg = Configuration::new(common.seed, p, spec).map_err(|e| e.to_string())?;
    Ok(Setup { cfg, common, pc })
}

fn parse_point(s: &str, d: usize) -> Result<Point, String> {
    if s == "origin" {
        return Point::origin(d).map_err(|e| e.to_string());
    }
    let coords: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if coords.len() != d {
        return Err(format!("expected {d} coordinates, got {}", coords.len()));
    }
    Point::new(&coords).map_err(|e| e.to_string())
}

fn parse_i64_list(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_region(s: &str) -> Result<Region, String> {
    match s {
        "half" => Ok(Region::h()),
        "full" => Ok(Region::FullSpace),
        other => Err(format!("unknown region {other} (use half|full)")),
    }
}

fn est_json(name: &str, e: &Estimate) -> Value {
    json!({
        "name": name,
        "mean": e.mean,
        "stderr": e.stderr,
        "samples": e.samples,
        "hits": e.hits,
        "truncation_fraction": e.truncation_fraction(),
    })
}

fn fit_json(name: &str, f: &analysis::FitResult) -> Value {
    json!({ "name": name, "slope": f.slope, "r2": f.r_squared })
}

struct Report {
    estimates: Vec<Value>,
    fits: Vec<Value>,
    extra: Map<String, Value>,
    status: &'static str,
}

impl Report {
    fn new() -> Report {
        Report {
            estimates: Vec::new(),
            fits: Vec::new(),
            extra: Map::new(),
            status: "ok",
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    command: &str,
    setup: &Setup,
    params: Value,
    report: Report,
    started: Instant,
) -> Result<ExitCode, String> {
    let c = &setup.common;
    let mut manifest = Map::new();
    manifest.insert("subcommand".into(), json!(command));
    manifest.insert("params".into(), params.clone());
    manifest.insert("master_seed".into(), json!(c.seed));
    manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Some(pc) = &setup.pc {
        manifest.insert("pc_provenance".into(), json!(format!("{:?}", pc.provenance)));
        manifest.insert("pc_value".into(), json!(pc.value));
    }
    if !c.deterministic {
        manifest.insert(
            "duration_ms".into(),
            json!(started.elapsed().as_millis() as u64),
        );
        if let Some(t) = c.threads {
            manifest.insert("threads".into(), json!(t));
        }
    }
    let max_trunc = report
        .estimates
        .iter()
        .filter_map(|e| e["truncation_fraction"].as_f64())
        .fold(0.0f64, f64::max);
    manifest.insert("max_truncation_fraction".into(), json!(max_trunc));

    let mut doc = Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert("params".into(), params);
    doc.insert("seed".into(), json!(c.seed));
    doc.insert("estimates".into(), Value::Array(report.estimates.clone()));
    doc.insert("fits".into(), Value::Array(report.fits));
    for (k, v) in report.extra {
        doc.insert(k, v);
    }
    doc.insert("status".into(), json!(report.status));
    doc.insert("manifest".into(), Value::Object(manifest));

    let rendered = match c.format {
        Format::Json => serde_json::to_string_pretty(&Value::Object(doc)).unwrap() + "\n",
        Format::Csv => {
            let mut s = String::from("name,mean,stderr,samples,hits,truncation_fraction\n");
            for e in &report.estimates {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    e["name"].as_str().unwrap_or(""),
                    e["mean"],
                    e["stderr"],
                    e["samples"],
                    e["hits"],
                    e["truncation_fraction"]
                );
            }
            s
        }
    };
    match &c.out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| e.to_string())?,
        None => print!("{rendered}"),
    }
    eprintln!("perclab {command}: status={} seed={}", report.status, c.seed);
    Ok(if report.status == "ok" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INCONCLUSIVE)
    })
}

fn core_err(e: perclab_core::Error) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn run(cmd: Cmd, started: Instant) -> Result<ExitCode, String> {
    match cmd {
        Cmd::Tau {
            common,
            x,
            y,
            region,
        } => {
            let s = setup(common)?;
            let xp = parse_point(&x, s.common.d)?;
            let yp = parse_point(&y, s.common.d)?;
            let reg = parse_region(&region)?;
            let est = estimators::mc_tau(&xp, &yp, &reg, &s.cfg, s.common.samples, s.common.budget)
                .map_err(core_err)?;
            let mut rep = Report::new();
            if est.hits == 0 {
                rep.status = "inconclusive";
            }
            rep.estimates.push(est_json("tau", &est));
            let params = json!({
                "x": x, "y": y, "region": region, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("tau", &s, params, rep, started)
        }
        Cmd::SphereTau {
            common,
            x,
            radii,
            region,
        } => {
            let s = setup(common)?;
            let xp = parse_point(&x, s.common.d)?;
            let rs = parse_i64_list(&radii)?;
            let reg = parse_region(&region)?;
            let ests =
                estimators::mc_sphere_tau(&xp, &rs, &reg, &s.cfg, s.common.samples, s.common.budget)
                    .map_err(core_err)?;
            let mut rep = Report::new();
            for (r, e) in rs.iter().zip(&ests) {
                rep.estimates.push(est_json(&format!("X_{r}"), e));
            }
            let pts: Vec<(f64, f64)> = rs
                .iter()
                .zip(&ests)
                .filter(|(_, e)| e.mean > 0.0)
                .map(|(&r, e)| (r as f64, e.mean))
                .collect();
            if let Ok(fit) = analysis::fit_loglog(&pts) {
                rep.fits.push(fit_json("sphere_tau", &fit));
            }
            let params = json!({
                "x": x, "radii": radii, "region": region, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("sphere-tau", &s, params, rep, started)
        }
        Cmd::Pioneers { common, x, n } => {
            let s = setup(common)?;
            let xp = parse_point(&x, s.common.d)?;
            let est = estimators::mc_pioneer_sum(
                &xp,
                n,
                s.common.eps,
                &s.cfg,
                s.common.samples,
                s.common.budget,
            )
            .map_err(core_err)?;
            let mut rep = Report::new();
            if est.hits == 0 {
                rep.status = "inconclusive";
            }
            rep.estimates.push(est_json(&format!("X_{n}"), &est));
            let params = json!({
                "x": x, "n": n, "eps": s.common.eps, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("pioneers", &s, params, rep, started)
        }
        Cmd::Phi { common, n } => {
            let s = setup(common)?;
            let ns = parse_i64_list(&n)?;
            let mut rep = Report::new();
            let mut means = Vec::new();
            for &shift in &ns {
                let est = estimators::mc_phi(shift, &s.cfg, s.common.samples, s.common.budget)
                    .map_err(core_err)?;
                means.push(est.mean);
                rep.estimates.push(est_json(&format!("phi_{shift}"), &est));
            }
            if means.iter().any(|&m| m <= 0.0) {
                rep.status = "inconclusive";
            } else if ns.len() >= 3 {
                let xs: Vec<f64> = ns.iter().map(|&v| v as f64).collect();
                if let Ok(rho) = analysis::spearman(&xs, &means) {
                    rep.extra.insert("spearman_rho".into(), json!(rho));
                }
            }
            let params = json!({
                "n": n, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("phi", &s, params, rep, started)
        }
        Cmd::Capacity {
            common,
            points,
            tol,
        } => {
            let s = setup(common)?;
            let text = std::fs::read_to_string(&points).map_err(|e| e.to_string())?;
            let mut pts = Vec::new();
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                pts.push(parse_point(line, s.common.d)?);
            }
            let res = capacity::capacity(&pts, s.common.d as u32, tol).map_err(core_err)?;
            let mut rep = Report::new();
            rep.extra.insert("value".into(), json!(res.capacity));
            rep.extra.insert("energy".into(), json!(res.energy));
            rep.extra.insert("gap".into(), json!(res.gap));
            rep.extra.insert("iterations".into(), json!(res.iterations));
            rep.extra.insert(
                "minimizer".into(),
                json!(res
                    .minimizer
                    .support
                    .iter()
                    .zip(&res.minimizer.weights)
                    .map(|(p, w)| json!({ "point": p.coords(), "weight": w }))
                    .collect::<Vec<_>>()),
            );
            let params = json!({ "points": points.display().to_string(), "tol": tol, "d": s.common.d });
            emit("capacity", &s, params, rep, started)
        }
        Cmd::Regularity { common, x, n } => {
            let s = setup(common)?;
            let xp = parse_point(&x, s.common.d)?;
            let ns = parse_i64_list(&n)?;
            let params_r =
                RegularityParams::new(s.common.k, s.common.eps).map_err(core_err)?;
            let mut rep = Report::new();
            let mut any_pioneers = false;
            for &scale in &ns {
                let (reg, tot) = regularity::regpoints_fraction(
                    &xp,
                    scale,
                    &params_r,
                    s.common.samples,
                    &s.cfg,
                    s.common.budget,
                )
                .map_err(core_err)?;
                let frac = if tot.mean > 0.0 { reg.mean / tot.mean } else { 0.0 };
                any_pioneers |= tot.hits > 0;
                rep.estimates.push(est_json(&format!("regular_{scale}"), &reg));
                rep.estimates.push(est_json(&format!("total_{scale}"), &tot));
                rep.extra
                    .insert(format!("regular_fraction_{scale}"), json!(frac));
            }
            if !any_pioneers {
                rep.status = "inconclusive";
            }
            let params = json!({
                "x": x, "n": n, "K": s.common.k, "eps": s.common.eps, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("regularity", &s, params, rep, started)
        }
        Cmd::VerifyRegimes { common } => {
            let s = setup(common)?;
            let report = analysis::regime_suite(s.common.samples, &s.cfg).map_err(core_err)?;
            let mut rep = Report::new();
            let mut all_fits = true;
            for (proto, tag) in [
                (&report.regime_a, "regime_a"),
                (&report.regime_b, "regime_b"),
                (&report.regime_c, "regime_c"),
            ] {
                match &proto.fit {
                    Some(f) => rep.fits.push(fit_json(tag, f)),
                    None => all_fits = false,
                }
            }
            for (proto, tag) in [
                (&report.regime_a, "a"),
                (&report.regime_b, "b"),
                (&report.regime_c, "c"),
            ] {
                for row in &proto.rows {
                    rep.estimates
                        .push(est_json(&format!("tau_{tag}_{}", row.r), &row.estimate));
                }
            }
            rep.extra
                .insert("sweep".into(), serde_json::to_value(&report.sweep).unwrap());
            rep.extra.insert("ratio_max".into(), json!(report.ratio_max));
            rep.extra.insert("ratio_min".into(), json!(report.ratio_min));
            rep.extra
                .insert("bulk_ratio_max".into(), json!(report.bulk_ratio_max));
            rep.extra
                .insert("bulk_ratio_min".into(), json!(report.bulk_ratio_min));
            if !all_fits || !(report.ratio_min > 0.0) || !report.ratio_max.is_finite() {
                rep.status = "inconclusive";
            }
            let params = json!({
                "p": s.cfg.p, "samples": s.common.samples,
            });
            emit("verify-regimes", &s, params, rep, started)
        }
        Cmd::Sandwich { common, x, y } => {
            let s = setup(common)?;
            let xp = parse_point(&x, s.common.d)?;
            let yp = parse_point(&y, s.common.d)?;
            let report = analysis::sandwich_check(
                &xp,
                &yp,
                s.common.eps,
                s.common.samples,
                &s.cfg,
                s.common.budget,
            )
            .map_err(core_err)?;
            let mut rep = Report::new();
            rep.estimates.push(est_json("lhs", &report.lhs));
            rep.estimates.push(est_json("rhs", &report.rhs));
            rep.estimates.push(est_json("rhs_eps", &report.rhs_eps));
            rep.extra.insert("n".into(), json!(report.n));
            rep.extra.insert("constant".into(), json!(report.constant));
            rep.extra.insert("sigma".into(), json!(report.sigma));
            rep.extra
                .insert("bound".into(), json!(format!("{:?}", report.status)));
            if report.status == SandwichStatus::Inconclusive {
                rep.status = "inconclusive";
            }
            let params = json!({
                "x": x, "y": y, "eps": s.common.eps, "p": s.cfg.p,
                "samples": s.common.samples, "budget": s.common.budget,
            });
            emit("sandwich", &s, params, rep, started)
        }
        Cmd::ExactOracle {
            common,
            vertices,
            edges,
        } => {
            let s = setup(common)?;
            let mut edge_list = Vec::new();
            for part in edges.split(',') {
                let (a, b) = part
                    .trim()
                    .split_once('-')
                    .ok_or_else(|| format!("bad edge {part}"))?;
                edge_list.push((
                    a.parse::<usize>().map_err(|e| e.to_string())?,
                    b.parse::<usize>().map_err(|e| e.to_string())?,
                ));
            }
            let p = s.common.p.ok_or("exact-oracle requires --p")?;
            let g = analysis::TinyGraph::new(vertices, edge_list).map_err(core_err)?;
            let tau = g.exact_tau(p).map_err(core_err)?;
            let mut rep = Report::new();
            rep.extra.insert("tau".into(), json!(tau));
            let params = json!({ "vertices": vertices, "edges": edges, "p": p });
            emit("exact-oracle", &s, params, rep, started)
        }
        Cmd::EstimatePc { common, n_max, tol } => {
            let s = setup(common)?;
            let est = analysis::estimate_pc(&s.cfg.spec, n_max, s.common.samples, tol, s.common.seed)
                .map_err(core_err)?;
            let mut rep = Report::new();
            rep.extra
                .insert("pc".into(), json!(est.critical_point.value));
            rep.extra.insert("bracket".into(), json!(est.bracket));
            rep.extra
                .insert("history".into(), serde_json::to_value(&est.history).unwrap());
            if est.bracket.1 - est.bracket.0 > tol {
                rep.status = "inconclusive";
            }
            let params = json!({ "n_max": n_max, "tol": tol, "samples": s.common.samples });
            emit("estimate-pc", &s, params, rep, started)
        }
    }
}
