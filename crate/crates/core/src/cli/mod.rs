//! Command-line surface: `generate`, `build-matrix`, `grid-search`, `run`
//! and `report`, all driven by one resolved [`RunConfig`].

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{
    grid_search, make_split, read_trials_csv, run_trials, GridSearchResult, ModelClass, SplitSpec,
    TrialContext, TrialRecord,
};
use crate::fixture::{synthetic_edge_list, BUNDLED};
use crate::mackey_glass::{generate, TimeSeries};
use crate::report::{
    build_report, emit_artifacts, summarize_records, ArtifactInputs, Manifest, Overlay,
};
use crate::topology::{
    build_connectivity_matrix, format_hash, matrix_stats, parse_edge_list, random_reservoir,
    read_matrix_files, write_matrix_files, EdgeList, ReservoirKind, ReservoirMatrix,
};

mod config;

pub use config::{
    resolve_config, set_path, FetchConfig, ModelConfig, OutputConfig, Overrides, ReservoirConfig,
    RunConfig, SearchConfig, SeriesConfig, TaskConfig, TrialsConfig, ENV_PREFIX,
};

pub const RESOLVED_CONFIG: &str = "resolved_config.json";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "ffesn",
    version,
    about = "Random vs connectome reservoir benchmark on Mackey-Glass prediction"
)]
pub struct Cli {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config field by dotted path, e.g. `trials.n_trials=5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output directory (`output.directory`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Cap on worker threads. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Master trial seed (`trials.master_seed`).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Comma-separated output formats (`output.formats`).
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    pub formats: Option<Vec<String>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Mackey-Glass series.
    Generate,
    /// Write the reservoir selected by `reservoir.kind` and print its statistics.
    BuildMatrix,
    /// Grid-search both model classes.
    GridSearch,
    /// Full pipeline: series, reservoirs, search, trials, report.
    Run,
    /// Re-render report artifacts from an existing trial CSV.
    Report {
        #[arg(long, value_name = "PATH")]
        trials: PathBuf,
    },
}

impl Cli {
    pub fn overrides(&self, env: Vec<(String, String)>) -> Overrides {
        Overrides {
            config: self.config.clone(),
            env,
            sets: self.sets.clone(),
            out: self.out.clone(),
            seed: self.seed,
            formats: self.formats.clone(),
        }
    }
}

/// Resolves the configuration and runs the subcommand, on a thread pool of
/// `--workers` threads when given.
pub fn execute(cli: &Cli, env: Vec<(String, String)>) -> Result<()> {
    let cfg = resolve_config(&cli.overrides(env))?;
    match cli.workers {
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(&cli.command, &cfg)),
        None => dispatch(&cli.command, &cfg),
    }
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<()> {
    let stage = Stage::new(&cfg.output.directory)?;
    stage.write(RESOLVED_CONFIG, cfg.to_json().as_bytes())?;
    match command {
        Command::Generate => cmd_generate(cfg, &stage)?,
        Command::BuildMatrix => cmd_build_matrix(cfg, &stage)?,
        Command::GridSearch => {
            cmd_grid_search(cfg, &stage)?;
        }
        Command::Run => cmd_run(cfg, &stage)?,
        Command::Report { trials } => cmd_report(cfg, &stage, trials)?,
    }
    stage.commit()
}

/// Scratch directory next to the output directory. Files move into place only
/// on [`Stage::commit`]; dropping an uncommitted stage deletes it.
struct Stage {
    dir: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl Stage {
    fn new(target: &Path) -> Result<Self> {
        let target: PathBuf = target.components().collect();
        let name = target
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let dir = target.with_file_name(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            target,
            committed: false,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    }

    fn commit(mut self) -> Result<()> {
        fs::create_dir_all(&self.target).map_err(|e| Error::io(&self.target, e))?;
        let entries = fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&self.dir, e))?;
            let dest = self.target.join(entry.file_name());
            fs::rename(entry.path(), &dest).map_err(|e| Error::io(dest, e))?;
        }
        fs::remove_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

pub fn load_series(cfg: &RunConfig) -> Result<TimeSeries> {
    let series = match &cfg.series.input {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            TimeSeries::read_csv(BufReader::new(file), cfg.series.params.sample_interval())?
        }
        None => generate(&cfg.series.params)?,
    };
    Ok(if cfg.series.normalize {
        series.normalized()
    } else {
        series
    })
}

fn load_edge_list(cfg: &ReservoirConfig) -> Result<EdgeList> {
    if let Some(fetch) = &cfg.fetch {
        return fetch_edges(fetch);
    }
    match &cfg.edge_list {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            Ok(parse_edge_list(BufReader::new(file), None)?)
        }
        None => Ok(synthetic_edge_list(&BUNDLED).0),
    }
}

#[cfg(feature = "fetch")]
fn fetch_edges(fetch: &FetchConfig) -> Result<EdgeList> {
    use crate::topology::{fetch_edge_list, FetchRequest};
    let token = std::env::var(&fetch.token_env).map_err(|_| {
        Error::Config(format!(
            "fetch token variable `{}` is not set",
            fetch.token_env
        ))
    })?;
    let mut req = FetchRequest::new(&fetch.endpoint, token, &fetch.roi);
    req.dataset = fetch.dataset.clone();
    req.timeout = std::time::Duration::from_secs(fetch.timeout_secs);
    Ok(fetch_edge_list(&req)?)
}

#[cfg(not(feature = "fetch"))]
fn fetch_edges(_: &FetchConfig) -> Result<EdgeList> {
    Err(Error::Config(
        "reservoir.fetch needs the `fetch` feature".into(),
    ))
}

fn check_loaded(m: ReservoirMatrix, kind: ReservoirKind, path: &Path) -> Result<ReservoirMatrix> {
    if m.kind() != kind {
        return Err(Error::Config(format!(
            "{} holds a {:?} matrix, expected {kind:?}",
            path.display(),
            m.kind()
        )));
    }
    Ok(m)
}

fn fit(m: ReservoirMatrix, n: usize, allow_resize: bool) -> Result<ReservoirMatrix> {
    if m.n() == n {
        Ok(m)
    } else if allow_resize {
        Ok(m.resized(n)?)
    } else {
        Err(Error::Config(format!(
            "reservoir has {} nodes but model.n_reservoir is {n}",
            m.n()
        )))
    }
}

/// Connectome matrix at `model.n_reservoir` nodes, plus the edge list when
/// one was fetched.
pub fn build_connectome(cfg: &RunConfig) -> Result<(ReservoirMatrix, Option<EdgeList>)> {
    let r = &cfg.reservoir;
    let n = cfg.model.n_reservoir;
    if let Some(path) = &r.connectome_matrix {
        let m = check_loaded(read_matrix_files(path)?, ReservoirKind::Connectome, path)?;
        return Ok((fit(m, n, r.fit_to_n)?, None));
    }
    let edges = load_edge_list(r)?;
    let m = fit(build_connectivity_matrix(&edges)?, n, r.fit_to_n)?;
    Ok((m, r.fetch.is_some().then_some(edges)))
}

pub fn build_random(cfg: &RunConfig) -> Result<ReservoirMatrix> {
    let r = &cfg.reservoir;
    let n = cfg.model.n_reservoir;
    match &r.random_matrix {
        Some(path) => fit(
            check_loaded(read_matrix_files(path)?, ReservoirKind::Random, path)?,
            n,
            false,
        ),
        None => Ok(random_reservoir(n, r.density, r.seed)?),
    }
}

fn stage_matrix(stage: &Stage, m: &ReservoirMatrix, name: &str) -> Result<()> {
    write_matrix_files(m, &stage.path(name))?;
    Ok(())
}

fn kind_name(kind: ReservoirKind) -> &'static str {
    match kind {
        ReservoirKind::Connectome => "connectome",
        ReservoirKind::Random => "random",
    }
}

fn cmd_generate(cfg: &RunConfig, stage: &Stage) -> Result<()> {
    let series = load_series(cfg)?;
    stage.write("series.csv", series.to_csv_string().as_bytes())?;
    let (lo, hi) = series.min_max().unwrap_or((f64::NAN, f64::NAN));
    println!("series: {} samples, range [{lo:.6}, {hi:.6}]", series.len());
    Ok(())
}

fn cmd_build_matrix(cfg: &RunConfig, stage: &Stage) -> Result<()> {
    let m = match cfg.reservoir.kind {
        ReservoirKind::Connectome => {
            let (m, edges) = build_connectome(cfg)?;
            if let Some(edges) = edges {
                let mut buf = Vec::new();
                edges
                    .write_csv(&mut buf)
                    .map_err(|e| Error::io(stage.path("edges.csv"), e))?;
                stage.write("edges.csv", &buf)?;
            }
            m
        }
        ReservoirKind::Random => build_random(cfg)?,
    };
    let name = kind_name(m.kind());
    stage_matrix(stage, &m, name)?;
    let s = matrix_stats(&m);
    println!(
        "{name}: n={} density={:.4} min={} max={} spectral_radius={:.6} hash={}",
        s.n,
        s.density,
        s.min,
        s.max,
        s.spectral_radius,
        format_hash(m.content_hash())
    );
    Ok(())
}

struct Prepared {
    series: TimeSeries,
    split: SplitSpec,
    reservoirs: [(ModelClass, Arc<ReservoirMatrix>); 2],
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let series = load_series(cfg)?;
    let split = make_split(cfg.task.variant, cfg.task.train_size, cfg.task.val_size)?;
    let (connectome, _) = build_connectome(cfg)?;
    let random = build_random(cfg)?;
    Ok(Prepared {
        series,
        split,
        reservoirs: [
            (ModelClass::Ffesn, Arc::new(connectome)),
            (ModelClass::Esn, Arc::new(random)),
        ],
    })
}

fn context<'a>(
    cfg: &RunConfig,
    p: &'a Prepared,
    class: ModelClass,
    r: &Arc<ReservoirMatrix>,
) -> Result<TrialContext<'a>> {
    Ok(
        TrialContext::new(class, r.clone(), &p.series, p.split.clone())?
            .with_input_scale(cfg.model.input_scale)
            .with_carry_state(cfg.model.carry_state),
    )
}

fn search_all(cfg: &RunConfig, p: &Prepared) -> Result<Vec<GridSearchResult>> {
    let grid = cfg.search.grid();
    let seed = cfg.search.seed.expect("resolved config has a search seed");
    p.reservoirs
        .iter()
        .map(|(class, r)| {
            let result = grid_search(&context(cfg, p, *class, r)?, &grid, seed)?;
            let failed = result.points.iter().filter(|pt| pt.mse.is_none()).count();
            println!(
                "{class} search: lambda={} alpha={} val_mse={:.6e} ({failed} of {} points failed)",
                result.lambda,
                result.alpha,
                result.val_mse,
                result.points.len()
            );
            Ok(result)
        })
        .collect()
}

fn search_json(results: &[GridSearchResult]) -> String {
    serde_json::to_string_pretty(results).expect("search results serialize") + "\n"
}

fn cmd_grid_search(cfg: &RunConfig, stage: &Stage) -> Result<Vec<GridSearchResult>> {
    let p = prepare(cfg)?;
    let results = search_all(cfg, &p)?;
    stage.write("grid_search.json", search_json(&results).as_bytes())?;
    Ok(results)
}

fn cmd_run(cfg: &RunConfig, stage: &Stage) -> Result<()> {
    let started = Instant::now();
    let p = prepare(cfg)?;
    stage.write("series.csv", p.series.to_csv_string().as_bytes())?;
    for (_, r) in &p.reservoirs {
        stage_matrix(stage, r, kind_name(r.kind()))?;
    }
    let results = search_all(cfg, &p)?;
    stage.write("grid_search.json", search_json(&results).as_bytes())?;

    let mut records: Vec<TrialRecord> = Vec::new();
    let mut overlays = Vec::new();
    for ((class, r), best) in p.reservoirs.iter().zip(&results) {
        let ctx = context(cfg, &p, *class, r)?;
        let outcomes = run_trials(
            &ctx,
            best.lambda,
            best.alpha,
            cfg.trials.n_trials,
            cfg.trials.master_seed,
        )?;
        overlays.push(Overlay {
            model_class: *class,
            variant: p.split.variant,
            train_size: p.split.train_size,
            truth: p.series.values[p.split.val_out.clone()].to_vec(),
            predictions: outcomes.iter().map(|o| o.prediction.clone()).collect(),
        });
        records.extend(outcomes.into_iter().map(|o| o.record));
    }

    let summaries = summarize_records(&records)?;
    let report = build_report(&summaries);
    let inputs = ArtifactInputs {
        records: &records,
        report: &report,
        overlays: &overlays,
    };
    let mut manifest = emit_artifacts(&inputs, &stage.dir, &cfg.output.formats)?;
    for s in &summaries {
        println!(
            "{} variant {} A={}: lambda={} alpha={} mean_mse={:.6e} ci95=[{:.6e}, {:.6e}] variance={:.3e} trials={}",
            s.model_class, s.variant, s.train_size, s.best_lambda, s.best_alpha, s.mean_mse, s.ci95[0], s.ci95[1], s.variance, s.n_trials
        );
    }
    for name in [RESOLVED_CONFIG, "series.csv", "grid_search.json"] {
        manifest.record_file(&stage.dir, name)?;
    }
    for (_, r) in &p.reservoirs {
        let name = kind_name(r.kind());
        manifest.record_file(&stage.dir, &format!("{name}.matrix.csv"))?;
        manifest.record_file(&stage.dir, &format!("{name}.meta.json"))?;
    }
    stage.write(MANIFEST, manifest.to_json().as_bytes())?;
    eprintln!("run finished in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_report(cfg: &RunConfig, stage: &Stage, trials: &Path) -> Result<()> {
    let file = fs::File::open(trials).map_err(|e| Error::io(trials, e))?;
    let records = read_trials_csv(BufReader::new(file)).map_err(|e| Error::Parse {
        path: trials.to_path_buf(),
        message: e.to_string(),
    })?;
    if records.is_empty() {
        return Err(Error::Parse {
            path: trials.to_path_buf(),
            message: "no trial records".into(),
        });
    }
    let summaries = summarize_records(&records)?;
    let report = build_report(&summaries);
    let inputs = ArtifactInputs {
        records: &records,
        report: &report,
        overlays: &[],
    };
    let mut manifest: Manifest = emit_artifacts(&inputs, &stage.dir, &cfg.output.formats)?;
    manifest.record_file(&stage.dir, RESOLVED_CONFIG)?;
    stage.write(MANIFEST, manifest.to_json().as_bytes())?;
    print!("{}", report.to_text());
    Ok(())
}
