//! Command implementations behind the `rummage` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use rummage::infogain::build_reachability;
use rummage::io::{self, Snapshot};
use rummage::planner::{Action, PlanningFields};
use rummage::sim::{run_episode_observed, Method, Metrics, Scenario, StepView};
use rummage::stats::{pearson, percentile};

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, scenario or input files. Exit code 1.
    Config(String),
    /// Something went wrong while running or writing results. Exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

fn config(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Seed list syntax: comma separated values and inclusive ranges, e.g. `0-9` or `1,4,7-8`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(format!("empty entry in seed list `{text}`"));
        }
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
                if a > b {
                    return Err(format!("descending seed range `{part}`"));
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?),
        }
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(d) = seeds.iter().find(|s| !seen.insert(**s)) {
        return Err(format!("seed {d} listed twice"));
    }
    Ok(seeds)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub steps: Option<usize>,
    pub out: PathBuf,
    pub export_fields: bool,
    pub snapshots: bool,
    pub traces: bool,
}

struct SeedResult {
    seed: u64,
    metrics: Metrics,
    snapshots: Vec<(usize, String)>,
    fields: Vec<(usize, String)>,
    plans: Vec<(usize, Vec<Action>)>,
}

fn run_seed(scenario: &Scenario, cfg: &RunConfig, seed: u64) -> Result<SeedResult, CliError> {
    let mut snapshots = Vec::new();
    let mut fields = Vec::new();
    let mut plans = Vec::new();
    let reach = cfg.export_fields.then(|| scenario.build_workspace().map(|w| (build_reachability(&w, &scenario.reach), w)));
    let reach = reach.transpose().map_err(config)?;
    let shape = scenario.shape.build().map_err(config)?;
    let info_model = scenario.info_model();
    let mut observer = |v: &StepView| {
        if cfg.snapshots {
            snapshots.push((v.step, Snapshot::capture(scenario, v.step, &v.world.q, v.belief).to_toml()));
        }
        if let Some((reach, ws)) = &reach {
            let f = PlanningFields::build(&v.belief.particles, &shape, ws, &info_model, reach.clone());
            let mut buf = Vec::new();
            io::write_field(&mut buf, &f.info.info).expect("writing to memory");
            fields.push((v.step, String::from_utf8(buf).expect("csv is utf-8")));
        }
        if let (true, Some(p)) = (cfg.traces, v.plan) {
            plans.push((v.step, p.to_vec()));
        }
    };
    let metrics = run_episode_observed(scenario, cfg.method, seed, &mut observer).map_err(|e| runtime(format!("seed {seed}: {e}")))?;
    Ok(SeedResult { seed, metrics, snapshots, fields, plans })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    io::write_file(path, contents).map_err(runtime)
}

/// Per-step median and quartiles of NLL and Chamfer across seeds.
pub fn summary_csv(runs: &[&Metrics]) -> String {
    let mut out = String::from("step,nll_median,nll_p25,nll_p75,chamfer_median,chamfer_p25,chamfer_p75,episodes\n");
    let len = runs.iter().map(|m| m.steps.len()).max().unwrap_or(0);
    for t in 0..len {
        let rows: Vec<_> = runs.iter().filter_map(|m| m.steps.get(t)).collect();
        let nll: Vec<f64> = rows.iter().map(|r| r.nll).collect();
        let ch: Vec<f64> = rows.iter().map(|r| r.chamfer).collect();
        let q = |v: &[f64], p: f64| percentile(v, p).expect("at least one row");
        out.push_str(&format!(
            "{t},{},{},{},{},{},{},{}\n",
            q(&nll, 50.0),
            q(&nll, 25.0),
            q(&nll, 75.0),
            q(&ch, 50.0),
            q(&ch, 25.0),
            q(&ch, 75.0),
            rows.len()
        ));
    }
    out
}

pub fn outcomes_csv(runs: &[(u64, &Metrics)]) -> String {
    let mut out = String::from("seed,initial_nll,final_nll,success_threshold,success,terminated_at,left_reach\n");
    for (seed, m) in runs {
        out.push_str(&format!(
            "{seed},{},{},{},{},{},{}\n",
            m.initial_nll(),
            m.final_nll(),
            m.success_threshold,
            m.success() as u8,
            m.terminated_at.map_or(String::new(), |t| t.to_string()),
            m.left_reach() as u8
        ));
    }
    out
}

/// Runs every seed and writes `metrics_seed<N>.csv`, `summary.csv` and
/// `outcomes.csv` under the output directory. Returns the success count.
pub fn cmd_run(cfg: &RunConfig) -> Result<usize, CliError> {
    if cfg.seeds.is_empty() {
        return Err(config("at least one seed is required"));
    }
    let mut scenario = Scenario::load(&cfg.scenario).map_err(config)?;
    if let Some(n) = cfg.steps {
        scenario.episode.steps = n;
    }
    fs::create_dir_all(&cfg.out).map_err(|e| config(format!("cannot create {}: {e}", cfg.out.display())))?;
    for (flag, dir) in [(cfg.snapshots, "snapshots"), (cfg.export_fields, "fields")] {
        if flag {
            fs::create_dir_all(cfg.out.join(dir)).map_err(runtime)?;
        }
    }
    let results: Vec<Result<SeedResult, CliError>> = cfg.seeds.par_iter().map(|&s| run_seed(&scenario, cfg, s)).collect();
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(r) => done.push(r),
            Err(e) => failures.push(e.to_string()),
        }
    }
    for r in &done {
        write(&cfg.out.join(format!("metrics_seed{}.csv", r.seed)), io::metrics_to_string(&r.metrics.steps).as_bytes())?;
        for (t, text) in &r.snapshots {
            write(&cfg.out.join("snapshots").join(format!("seed{}_step{t:03}.toml", r.seed)), text.as_bytes())?;
        }
        for (t, text) in &r.fields {
            write(&cfg.out.join("fields").join(format!("seed{}_step{t:03}_info.csv", r.seed)), text.as_bytes())?;
        }
        if cfg.traces {
            let mut buf = Vec::new();
            io::write_plans(&mut buf, &r.plans).map_err(runtime)?;
            write(&cfg.out.join(format!("plans_seed{}.csv", r.seed)), &buf)?;
        }
    }
    let metrics: Vec<&Metrics> = done.iter().map(|r| &r.metrics).collect();
    write(&cfg.out.join("summary.csv"), summary_csv(&metrics).as_bytes())?;
    let with_seeds: Vec<(u64, &Metrics)> = done.iter().map(|r| (r.seed, &r.metrics)).collect();
    write(&cfg.out.join("outcomes.csv"), outcomes_csv(&with_seeds).as_bytes())?;
    if !failures.is_empty() {
        return Err(runtime(failures.join("; ")));
    }
    Ok(done.iter().filter(|r| r.metrics.success()).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Info,
    PFree,
    Reach,
}

impl FieldKind {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "info" => Ok(Self::Info),
            "p_free" | "p-free" => Ok(Self::PFree),
            "reach" => Ok(Self::Reach),
            _ => Err(format!("unknown field `{s}` (expected info, p_free or reach)")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Info => "info",
            Self::PFree => "p_free",
            Self::Reach => "reach",
        }
    }
}

/// Rebuilds a field from a belief snapshot and writes `<name>.svg` and `<name>.csv`.
pub fn cmd_export_field(
    snapshot: &Path,
    kind: FieldKind,
    slice_z: Option<f64>,
    cutoff: f64,
    out: &Path,
) -> Result<(PathBuf, PathBuf), CliError> {
    let snap = Snapshot::load(snapshot).map_err(config)?;
    let scenario = &snap.scenario;
    let ws = scenario.build_workspace().map_err(config)?;
    let reach = build_reachability(&ws, &scenario.reach);
    let field = match kind {
        FieldKind::Reach => reach,
        _ => {
            let shape = scenario.shape.build().map_err(config)?;
            let f = PlanningFields::build(&snap.particles(), &shape, &ws, &scenario.info_model(), reach);
            if kind == FieldKind::Info {
                f.info.info
            } else {
                f.info.p_free
            }
        }
    };
    let svg = io::heatmap_svg(&field, slice_z, cutoff).map_err(config)?;
    fs::create_dir_all(out).map_err(|e| config(format!("cannot create {}: {e}", out.display())))?;
    let stem = snapshot.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    let svg_path = out.join(format!("{stem}_{}.svg", kind.name()));
    let csv_path = out.join(format!("{stem}_{}.csv", kind.name()));
    write(&svg_path, svg.as_bytes())?;
    let mut buf = Vec::new();
    io::write_field(&mut buf, &field).map_err(runtime)?;
    write(&csv_path, &buf)?;
    Ok((svg_path, csv_path))
}

/// Pearson correlation of executed (NLL, Chamfer) rows, per parent directory
/// and pooled. Undefined coefficients are reported as `undefined`.
pub fn cmd_correlate(inputs: &[PathBuf]) -> Result<String, CliError> {
    if inputs.is_empty() {
        return Err(config("no input files"));
    }
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut pooled = Vec::new();
    for path in inputs {
        let rows = io::read_metrics_file(path).map_err(config)?;
        let group = path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()).unwrap_or(".").to_string();
        let pairs: Vec<(f64, f64)> = rows.iter().filter(|r| r.executed).map(|r| (r.nll, r.chamfer)).collect();
        pooled.extend_from_slice(&pairs);
        groups.entry(group).or_default().extend(pairs);
    }
    if pooled.len() < 2 {
        return Err(config("need at least two (nll, chamfer) pairs"));
    }
    let fmt = |pairs: &[(f64, f64)]| pearson(pairs).map_or("undefined".to_string(), |r| format!("{r:.6}"));
    let mut out = String::from("group,pairs,pearson\n");
    for (g, pairs) in &groups {
        out.push_str(&format!("{g},{},{}\n", pairs.len(), fmt(pairs)));
    }
    out.push_str(&format!("pooled,{},{}\n", pooled.len(), fmt(&pooled)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("0-3,7").unwrap(), vec![0, 1, 2, 3, 7]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("4-2").is_err());
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn field_names() {
        for k in [FieldKind::Info, FieldKind::PFree, FieldKind::Reach] {
            assert_eq!(FieldKind::parse(k.name()).unwrap(), k);
        }
        assert!(FieldKind::parse("heat").is_err());
    }
}
