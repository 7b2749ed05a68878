//! Config-driven experiment runner behind the `potts` binary.
//!
//! A run reads one JSON [`ExperimentConfig`], executes a [`Task`] and writes
//! into the output directory:
//!
//! - `<task>.csv`: one table per task; every row starts with the config hash,
//!   and rerunning a config replaces its rows instead of duplicating them,
//! - `<task>-<hash>.config.json`: the resolved config,
//! - `<task>-<hash>.summary.json`: hashes, seeds, wall time and the result,
//! - task artifacts such as `sample-graph-<hash>.edges`.

pub mod suites;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::cut::{maxcut_exhaustive, maxcut_localsearch, maxcut_replicas, ConstrainedSpace, ProportionConstraint};
use crate::error::{Error, Result};
use crate::graph::{expected_edges, sample_graph, Graph};
use crate::kernel::{BlockSpec, Kernel, KernelLiteral};
use crate::parisi::{
    functional, ground_state, minimize, model_for_kernel, predict_curve, MinimizeOptions, ModelSpec, ParisiParams, PredictOptions,
    Scheme,
};
use crate::rng::derive_seed;
use crate::species::{species_partition, Proportions, SpeciesPartition, SpeciesStructure};
use crate::spinglass::{free_energy_replicas, ground_state_replicas, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SampleGraph,
    Maxcut,
    FreeEnergy,
    Groundstate,
    ParisiEval,
    ParisiMin,
    Predict,
    Verify,
    Compare,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::SampleGraph => "sample-graph",
            Task::Maxcut => "maxcut",
            Task::FreeEnergy => "free-energy",
            Task::Groundstate => "groundstate",
            Task::ParisiEval => "parisi-eval",
            Task::ParisiMin => "parisi-min",
            Task::Predict => "predict",
            Task::Verify => "verify",
            Task::Compare => "compare",
        }
    }
}

/// Species proportions `ρ` and interactions `Δ²` of the spin-glass model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelLiteral {
    #[serde(default = "one_species")]
    pub rho: Vec<f64>,
    pub delta2: Vec<Vec<f64>>,
}

fn one_species() -> Vec<f64> {
    vec![1.0]
}

/// `(x, Q, λ)` with `q[s][p-1]` given as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsLiteral {
    pub x: Vec<f64>,
    pub q: Vec<Vec<Vec<Vec<f64>>>>,
    pub lambda: Vec<Vec<f64>>,
}

impl ParamsLiteral {
    fn resolve(&self) -> Result<ParisiParams> {
        let q = self
            .q
            .iter()
            .map(|qs| qs.iter().map(|rows| square(rows, "q")).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(ParisiParams { x: self.x.clone(), q, lambda: self.lambda.clone() })
    }
}

fn square(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::ConfigInvalid(format!("`{what}` must be a square matrix")));
    }
    Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
}

/// Every field a task may read. Fields a task does not use are ignored by
/// it but still enter the config hash.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    pub kernel: Option<KernelLiteral>,
    pub model: Option<ModelLiteral>,
    /// Edge-list input for `maxcut`, relative to the config file.
    pub graph: Option<PathBuf>,
    pub n: Option<usize>,
    pub c: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub kappa: Option<usize>,
    pub beta: Option<f64>,
    pub beta_grid: Option<Vec<f64>>,
    pub d: Option<Vec<Vec<f64>>>,
    pub epsilon: Option<f64>,
    pub r: Option<usize>,
    pub params: Option<ParamsLiteral>,
    pub scheme: Option<Scheme>,
    pub solver: Option<Solver>,
    pub replicas: Option<usize>,
    pub seed: u64,
    pub minimize: Option<MinimizeOptions>,
    pub predict: Option<PredictOptions>,
    pub suite: Option<String>,
    pub suite_params: Option<serde_json::Value>,
    pub out: Option<PathBuf>,
}

fn need<T: Clone>(v: &Option<T>, field: &str, task: Task) -> Result<T> {
    v.clone().ok_or_else(|| Error::ConfigInvalid(format!("task `{}` needs `{field}`", task.name())))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    fn kernel(&self, task: Task) -> Result<Kernel> {
        Kernel::try_from(&need(&self.kernel, "kernel", task)?)
    }

    fn model_literal(&self) -> ModelLiteral {
        self.model.clone().unwrap_or(ModelLiteral { rho: one_species(), delta2: vec![vec![1.0]] })
    }

    fn model(&self, task: Task, beta: f64) -> Result<ModelSpec> {
        let lit = self.model_literal();
        ModelSpec::new(need(&self.kappa, "kappa", task)?, lit.rho, square(&lit.delta2, "model.delta2")?, beta)
    }

    fn proportions(&self, species: usize, kappa: usize) -> Result<Proportions> {
        match &self.d {
            Some(d) => Proportions::new(d.clone()),
            None => Ok(Proportions::uniform(species, kappa)),
        }
    }

    fn partition(&self, n: usize) -> Result<SpeciesPartition> {
        let rho = self.model_literal().rho;
        let mut bounds = vec![0.0];
        for p in &rho {
            bounds.push(bounds.last().unwrap() + p);
        }
        *bounds.last_mut().unwrap() = 1.0;
        species_partition(&BlockSpec::new(bounds)?, n)
    }

    fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions { seed: self.seed, ..self.minimize.clone().unwrap_or_default() }
    }

    fn predict_options(&self) -> PredictOptions {
        let mut p = self.predict.clone().unwrap_or_default();
        if let Some(r) = self.r {
            p.r = r;
        }
        if let Some(b) = &self.beta_grid {
            p.beta_grid = b.clone();
        }
        if let Some(m) = &self.minimize {
            p.minimize = m.clone();
        }
        p.minimize.seed = self.seed;
        p
    }

    fn cs(&self, task: Task) -> Result<Vec<f64>> {
        match (&self.c_grid, self.c) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(c)) => Ok(vec![c]),
            _ => Err(Error::ConfigInvalid(format!("task `{}` needs `c` or `c_grid`", task.name()))),
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub task: Task,
    pub config_hash: String,
    /// `false` only when a verification check failed.
    pub passed: bool,
    pub lines: Vec<String>,
    pub csv: PathBuf,
    pub summary: PathBuf,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `sha256("blob <len>\0" ++ content)`, the git object-id construction.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

fn short_hash<T: Serialize>(v: &T) -> String {
    sha256_hex(&serde_json::to_vec(v).expect("serializable"))[..16].to_string()
}

/// Read and run a config file.
pub fn run_file(task: Task, path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let raw = fs::read(path).map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(raw.clone()).map_err(|_| Error::ConfigInvalid("config is not UTF-8".into()))?;
    let config = ExperimentConfig::from_json(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run(task, config, &base, &raw, opts)
}

/// Run `task` on a parsed config. `base` resolves relative input paths and
/// `raw` is the config text as read, for the content hash.
pub fn run(task: Task, mut config: ExperimentConfig, base: &Path, raw: &[u8], opts: &RunOptions) -> Result<RunReport> {
    if let Some(t) = config.task {
        if t != task {
            return Err(Error::ConfigInvalid(format!("config is for task `{}`, not `{}`", t.name(), task.name())));
        }
    }
    config.task = Some(task);
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let Some(out) = &opts.out {
        config.out = Some(out.clone());
    }
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    // where results go is not part of the experiment
    let config_hash = short_hash(&ExperimentConfig { out: None, ..config.clone() });

    let mut inputs = vec![content_hash(raw)];
    let graph_input = match &config.graph {
        Some(p) => {
            let path = base.join(p);
            let bytes = fs::read(&path).map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
            inputs.push(content_hash(&bytes));
            let text = String::from_utf8(bytes).map_err(|_| Error::ConfigInvalid("graph file is not UTF-8".into()))?;
            Some(Graph::from_edge_list(&text)?)
        }
        None => None,
    };
    let input_hash = content_hash(inputs.join("\n").as_bytes());

    fs::create_dir_all(&out_dir)?;
    let stem = format!("{}-{}", task.name(), config_hash);
    let t = Instant::now();
    let ctx = Ctx { config: &config, task, out_dir: &out_dir, stem: &stem, graph: graph_input };
    let out = ctx.execute().map_err(|e| match e {
        Error::ConfigInvalid(_) | Error::SuiteUnknown(_) => e,
        other => Error::TaskFailed { task: task.name().to_string(), source: Box::new(other) },
    })?;
    let wall_ms = t.elapsed().as_millis();

    let rows: Vec<Vec<String>> = out
        .rows
        .into_iter()
        .map(|r| std::iter::once(config_hash.clone()).chain(r.into_iter().map(|c| c.replace("{wall_ms}", &wall_ms.to_string()))).collect())
        .collect();
    let csv = out_dir.join(format!("{}.csv", task.name()));
    let header: Vec<&str> = std::iter::once("config_hash").chain(out.header.iter().copied()).collect();
    write_csv(&csv, &header, &config_hash, &rows)?;

    let config_path = out_dir.join(format!("{stem}.config.json"));
    fs::write(&config_path, serde_json::to_string_pretty(&config)?)?;
    let summary_path = out_dir.join(format!("{stem}.summary.json"));
    let summary = json!({
        "task": task.name(),
        "config_hash": config_hash,
        "input_hash": input_hash,
        "seeds": out.seeds,
        "wall_ms": wall_ms as u64,
        "passed": out.passed,
        "outputs": {
            "csv": csv.file_name().map(|s| s.to_string_lossy().to_string()),
            "config": config_path.file_name().map(|s| s.to_string_lossy().to_string()),
            "artifacts": out.artifacts,
        },
        "result": out.result,
    });
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    Ok(RunReport { task, config_hash, passed: out.passed, lines: out.lines, csv, summary: summary_path })
}

/// Rewrite `path` keeping other configs' rows and replacing this config's.
fn write_csv(path: &Path, header: &[&str], config_hash: &str, rows: &[Vec<String>]) -> Result<()> {
    let head = header.join(",");
    let mut kept: Vec<String> = Vec::new();
    if let Ok(existing) = fs::read_to_string(path) {
        let mut lines = existing.lines();
        if lines.next() == Some(head.as_str()) {
            let prefix = format!("{config_hash},");
            kept.extend(lines.filter(|l| !l.starts_with(&prefix)).map(str::to_string));
        }
    }
    let mut text = head + "\n";
    for l in kept {
        text.push_str(&l);
        text.push('\n');
    }
    for r in rows {
        text.push_str(&r.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    Ok(fs::write(path, text)?)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    task: Task,
    out_dir: &'a Path,
    stem: &'a str,
    graph: Option<Graph>,
}

/// What a task hands back for persisting. Cells may contain the
/// placeholder `{wall_ms}`.
struct TaskOutput {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    result: serde_json::Value,
    seeds: serde_json::Value,
    artifacts: Vec<String>,
    lines: Vec<String>,
    passed: bool,
}

impl TaskOutput {
    fn new(header: Vec<&'static str>, seed: u64) -> Self {
        Self {
            header,
            rows: Vec::new(),
            result: serde_json::Value::Null,
            seeds: json!({ "seed": seed }),
            artifacts: Vec::new(),
            lines: Vec::new(),
            passed: true,
        }
    }
}

const PARISI_COLUMNS: [&str; 8] = ["model_hash", "d_hash", "r", "beta", "value", "err", "wall_ms", "seed"];

impl Ctx<'_> {
    fn execute(&self) -> Result<TaskOutput> {
        match self.task {
            Task::SampleGraph => self.sample_graph(),
            Task::Maxcut => self.maxcut(),
            Task::FreeEnergy => self.free_energy(),
            Task::Groundstate => self.groundstate(),
            Task::ParisiEval => self.parisi_eval(),
            Task::ParisiMin => self.parisi_min(),
            Task::Predict => self.predict(),
            Task::Verify => self.verify(),
            Task::Compare => self.compare(),
        }
    }

    fn sample_graph(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let kernel = cfg.kernel(self.task)?;
        let n = need(&cfg.n, "n", self.task)?;
        let c = need(&cfg.c, "c", self.task)?;
        let g = sample_graph(&kernel, n, c, cfg.seed)?;
        let file = format!("{}.edges", self.stem);
        g.write(&self.out_dir.join(&file))?;
        let expected = expected_edges(&kernel, n, c)?;
        let mut out = TaskOutput::new(vec!["n", "c", "seed", "edges", "expected_edges", "file"], cfg.seed);
        out.rows.push(vec![n.to_string(), num(c), cfg.seed.to_string(), g.edge_count().to_string(), num(expected), file.clone()]);
        out.lines.push(format!("sampled N={n}, c={c}: {} edges (expected {expected:.2}) -> {file}", g.edge_count()));
        out.result = json!({ "n": n, "c": c, "edges": g.edge_count(), "expected_edges": expected });
        out.artifacts.push(file);
        Ok(out)
    }

    fn maxcut(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let kappa = need(&cfg.kappa, "kappa", self.task)?;
        let solver = cfg.solver.unwrap_or(Solver::LocalSearch { restarts: 50 });
        let graphs: Vec<(Graph, u64)> = match &self.graph {
            Some(g) => vec![(g.clone(), cfg.seed)],
            None => {
                let kernel = cfg.kernel(self.task)?;
                let n = need(&cfg.n, "n", self.task)?;
                let c = need(&cfg.c, "c", self.task)?;
                (0..cfg.replicas.unwrap_or(1) as u64)
                    .map(|i| Ok((sample_graph(&kernel, n, c, derive_seed(cfg.seed, 2 * i))?, derive_seed(cfg.seed, 2 * i + 1))))
                    .collect::<Result<_>>()?
            }
        };
        let mut out = TaskOutput::new(
            vec!["instance", "n", "edges", "kappa", "solver", "value", "value_per_n", "graph_seed", "search_seed"],
            cfg.seed,
        );
        let mut results = Vec::new();
        for (i, (g, search_seed)) in graphs.iter().enumerate() {
            let space = match &cfg.d {
                Some(d) => Some(ConstrainedSpace::new(
                    SpeciesPartition::single(g.n()),
                    &ProportionConstraint { d: Proportions::new(d.clone())?, epsilon: cfg.epsilon.unwrap_or(0.0) },
                )?),
                None => None,
            };
            let (best, name) = match solver {
                Solver::Exhaustive => (maxcut_exhaustive(g, kappa, space.as_ref())?, "exhaustive".to_string()),
                Solver::LocalSearch { restarts } => (
                    maxcut_localsearch(g, kappa, restarts, *search_seed, space.as_ref())?,
                    format!("localsearch({restarts})"),
                ),
            };
            let graph_seed = if self.graph.is_some() { "-".to_string() } else { derive_seed(cfg.seed, 2 * i as u64).to_string() };
            out.rows.push(vec![
                i.to_string(),
                g.n().to_string(),
                g.edge_count().to_string(),
                kappa.to_string(),
                name,
                num(best.value),
                num(best.value / g.n().max(1) as f64),
                graph_seed,
                search_seed.to_string(),
            ]);
            out.lines.push(format!("instance {i}: N={} edges={} Max {kappa}-cut {}", g.n(), g.edge_count(), best.value));
            results.push(json!({ "value": best.value, "assignment": best.assignment.one_based() }));
        }
        out.result = json!({ "instances": results });
        Ok(out)
    }

    fn free_energy(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let n = need(&cfg.n, "n", self.task)?;
        let kappa = need(&cfg.kappa, "kappa", self.task)?;
        let betas = match (&cfg.beta_grid, cfg.beta) {
            (Some(b), _) => b.clone(),
            (None, Some(b)) => vec![b],
            _ => return Err(Error::ConfigInvalid("task `free-energy` needs `beta` or `beta_grid`".into())),
        };
        let replicas = cfg.replicas.unwrap_or(20);
        let lit = cfg.model_literal();
        let species = SpeciesStructure::new(self.partition_for(n)?, square(&lit.delta2, "model.delta2")?)?;
        let constraint = match &cfg.d {
            Some(d) => Some(ProportionConstraint { d: Proportions::new(d.clone())?, epsilon: cfg.epsilon.unwrap_or(0.0) }),
            None => None,
        };
        let gs = ground_state_replicas(&species, kappa, constraint.as_ref(), replicas, cfg.seed)?;
        let mut out = TaskOutput::new(
            vec!["n", "kappa", "beta", "replicas", "free_energy", "stderr", "ground_state", "gs_stderr", "seed"],
            cfg.seed,
        );
        let mut res = Vec::new();
        for &beta in &betas {
            let f = free_energy_replicas(&species, kappa, beta, constraint.as_ref(), replicas, cfg.seed)?;
            out.rows.push(vec![
                n.to_string(),
                kappa.to_string(),
                num(beta),
                replicas.to_string(),
                num(f.mean),
                num(f.stderr),
                num(gs.mean),
                num(gs.stderr),
                cfg.seed.to_string(),
            ]);
            out.lines.push(format!("β={beta}: F_N = {:.6} ± {:.6}, GS/N = {:.6} ± {:.6}", f.mean, f.stderr, gs.mean, gs.stderr));
            res.push(json!({ "beta": beta, "free_energy": f, "ground_state": gs }));
        }
        out.seeds = json!({ "seed": cfg.seed, "replica_seeds": "derive_seed(seed, replica)" });
        out.result = json!(res);
        Ok(out)
    }

    fn partition_for(&self, n: usize) -> Result<SpeciesPartition> {
        self.config.partition(n)
    }

    fn hashes(&self, model: &ModelSpec, d: &Proportions) -> (String, String) {
        (short_hash(&model.with_beta(0.0)), short_hash(d))
    }

    fn groundstate(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let model = cfg.model(self.task, 1.0)?;
        let d = cfg.proportions(model.species_count(), model.kappa)?;
        let grid = cfg.beta_grid.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0]);
        let r = cfg.r.unwrap_or(2);
        let gs = ground_state(&model, &d, &grid, r, &cfg.minimize_options())?;
        let (mh, dh) = self.hashes(&model, &d);
        let mut out = TaskOutput::new(PARISI_COLUMNS.to_vec(), cfg.seed);
        for ((b, v), e) in gs.betas.iter().zip(&gs.values).zip(&gs.errs) {
            out.rows.push(vec![mh.clone(), dh.clone(), r.to_string(), num(*b), num(*v), num(*e), "{wall_ms}".into(), cfg.seed.to_string()]);
            out.lines.push(format!("β={b}: inf 𝒫_β = {v:.6} (value/β = {:.6})", v / b));
        }
        out.rows.push(vec![mh, dh, r.to_string(), "inf".into(), num(gs.value), num(gs.residual), "{wall_ms}".into(), cfg.seed.to_string()]);
        out.lines.push(format!(
            "𝒫(d) ≈ {:.6} (fit a + b/β, b = {:.4}, residual {:.2e}{})",
            gs.value,
            gs.slope,
            gs.residual,
            if gs.stalled { ", optimizer stalled" } else { "" }
        ));
        out.result = serde_json::to_value(&gs)?;
        Ok(out)
    }

    fn parisi_eval(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let beta = need(&cfg.beta, "beta", self.task)?;
        let model = cfg.model(self.task, beta)?;
        let d = cfg.proportions(model.species_count(), model.kappa)?;
        let params = need(&cfg.params, "params", self.task)?.resolve()?;
        let scheme = cfg.scheme.unwrap_or_else(|| Scheme::auto(model.kappa, params.r()));
        let v = functional(&params, &model, &d, &scheme)?;
        let (mh, dh) = self.hashes(&model, &d);
        let mut out = TaskOutput::new(PARISI_COLUMNS.to_vec(), cfg.seed);
        out.rows.push(vec![mh, dh, params.r().to_string(), num(beta), num(v.value), num(v.err), "{wall_ms}".into(), cfg.seed.to_string()]);
        out.lines.push(format!(
            "𝒫 = {:.8} ± {:.1e} (X₀ term {:.6}, λ term {:.6}, y term {:.6})",
            v.value, v.err, v.x0_term, v.lambda_term, v.y_term
        ));
        out.result = json!({ "value": v, "scheme": scheme });
        Ok(out)
    }

    fn parisi_min(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let beta = need(&cfg.beta, "beta", self.task)?;
        let model = cfg.model(self.task, beta)?;
        let d = cfg.proportions(model.species_count(), model.kappa)?;
        let r = cfg.r.unwrap_or(1);
        let m = minimize(&model, &d, r, &cfg.minimize_options())?;
        let (mh, dh) = self.hashes(&model, &d);
        let mut out = TaskOutput::new(PARISI_COLUMNS.to_vec(), cfg.seed);
        out.rows.push(vec![mh, dh, r.to_string(), num(beta), num(m.value.value), num(m.value.err), "{wall_ms}".into(), cfg.seed.to_string()]);
        out.lines.push(format!(
            "inf 𝒫 ≈ {:.8} ± {:.1e} at x = {:?} after {} evaluations{}",
            m.value.value,
            m.value.err,
            m.params.x,
            m.evaluations,
            if m.stalled { " (stalled)" } else { "" }
        ));
        let q: Vec<Vec<Vec<Vec<f64>>>> = m
            .params
            .q
            .iter()
            .map(|qs| qs.iter().map(|q| q.row_iter().map(|row| row.iter().copied().collect()).collect()).collect())
            .collect();
        out.result = json!({
            "value": m.value,
            "params": ParamsLiteral { x: m.params.x.clone(), q, lambda: m.params.lambda.clone() },
            "stalled": m.stalled,
            "evaluations": m.evaluations,
        });
        Ok(out)
    }

    fn predict(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let kernel = cfg.kernel(self.task)?;
        let kappa = need(&cfg.kappa, "kappa", self.task)?;
        let cs = cfg.cs(self.task)?;
        let opts = cfg.predict_options();
        let model = model_for_kernel(&kernel, kappa)?;
        let preds = predict_curve(&kernel, &cs, kappa, &opts)?;
        let mut header = PARISI_COLUMNS.to_vec();
        header.extend(["c", "prediction", "leading", "parisi", "d"]);
        let mut out = TaskOutput::new(header, cfg.seed);
        for p in &preds {
            let (mh, dh) = self.hashes(&model, &p.d);
            out.rows.push(vec![
                mh,
                dh,
                opts.r.to_string(),
                "inf".into(),
                num(p.value),
                num(p.ground_state.residual),
                "{wall_ms}".into(),
                cfg.seed.to_string(),
                num(p.c),
                num(p.value),
                num(p.leading),
                num(p.parisi),
                serde_json::to_string(&p.d)?,
            ]);
            out.lines.push(format!(
                "c={}: MaxCut/N ≈ {:.5} = {:.5} + (√c/2)·{:.5} at d* = {:?}",
                p.c, p.value, p.leading, p.parisi, p.d.0
            ));
        }
        out.result = serde_json::to_value(&preds)?;
        Ok(out)
    }

    fn compare(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let kernel = cfg.kernel(self.task)?;
        let kappa = need(&cfg.kappa, "kappa", self.task)?;
        let n = need(&cfg.n, "n", self.task)?;
        let cs = cfg.cs(self.task)?;
        let replicas = cfg.replicas.unwrap_or(8);
        let restarts = match cfg.solver {
            None => 16,
            Some(Solver::LocalSearch { restarts }) => restarts,
            Some(Solver::Exhaustive) => {
                return Err(Error::ConfigInvalid("task `compare` uses local search only".into()));
            }
        };
        let preds = predict_curve(&kernel, &cs, kappa, &cfg.predict_options())?;
        let mut out = TaskOutput::new(
            vec!["c", "n", "replicas", "maxcut_per_n", "stderr", "prediction", "leading", "parisi", "correction", "half_parisi"],
            cfg.seed,
        );
        let mut res = Vec::new();
        for (i, p) in preds.iter().enumerate() {
            let e = maxcut_replicas(&kernel, n, p.c, kappa, replicas, restarts, derive_seed(cfg.seed, i as u64))?;
            let correction = (e.mean - p.leading) / p.c.sqrt();
            out.rows.push(vec![
                num(p.c),
                n.to_string(),
                replicas.to_string(),
                num(e.mean),
                num(e.stderr),
                num(p.value),
                num(p.leading),
                num(p.parisi),
                num(correction),
                num(0.5 * p.parisi),
            ]);
            out.lines.push(format!(
                "c={}: graph {:.5} ± {:.5}, prediction {:.5}; correction {:.4} vs ½𝒫 {:.4}",
                p.c,
                e.mean,
                e.stderr,
                p.value,
                correction,
                0.5 * p.parisi
            ));
            res.push(json!({ "c": p.c, "graph": e, "prediction": p }));
        }
        out.seeds = json!({ "seed": cfg.seed, "per_c": "derive_seed(seed, index of c)" });
        out.result = json!(res);
        Ok(out)
    }

    fn verify(&self) -> Result<TaskOutput> {
        let cfg = self.config;
        let name = need(&cfg.suite, "suite", self.task)?;
        let report = suites::run_suite(&name, cfg.suite_params.as_ref(), cfg.seed)?;
        let mut out = TaskOutput::new(vec!["suite", "check", "pass", "measured", "tolerance", "note"], cfg.seed);
        for c in &report.checks {
            out.rows.push(vec![name.clone(), c.name.clone(), c.pass.to_string(), num(c.measured), num(c.tolerance), c.note.clone()]);
            out.lines.push(c.line());
        }
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        let mut tally = String::new();
        let _ = write!(tally, "suite {name}: {} checks, {failed} failed", report.checks.len());
        out.lines.push(tally);
        out.passed = report.passed();
        out.result = serde_json::to_value(&report)?;
        Ok(out)
    }
}
