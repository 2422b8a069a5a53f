//! The `rfsl` command line.
//!
//! Every subcommand reads the same TOML experiment config (plus `--set`
//! overrides) and writes deterministic output: CSV files start with a
//! `# config_hash=...` comment and a header row.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::bounds::accuracy_curve;
use crate::error::{Error, Result};
use crate::geometry::{sample_targets, NetworkGraph};
use crate::io::config::stream;
use crate::io::dataset::{generate_records, DatasetFile, DatasetRecord, GenerationPlan};
use crate::io::rss::{estimate_attenuation, ingest_rss, read_free_space_csv, records_from_rss, write_rss_csv};
use crate::io::{load_checkpoint, save_checkpoint, ExperimentConfig};
use crate::multibody::{simulate_rss, snapshot_at};
use crate::net::{evaluate, train, EvalReport};
use crate::rng::derive_seed;

#[derive(Debug, Parser)]
#[command(name = "rfsl", version, about = "Body-induced RF attenuation, resolvability bounds and graph-network counting")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (TOML). Defaults apply to missing keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set scene.nodes=25`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; replaces `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attenuation snapshots of random scenes (dataset file), optionally as RSS CSV.
    Simulate {
        /// Also write simulated RSS records to this CSV.
        #[arg(long)]
        rss: Option<PathBuf>,
    },
    /// Monte Carlo accuracy bound for each target count (CSV).
    Bounds,
    /// Labeled synthetic dataset for training.
    GenData,
    /// Train a counting network; writes a checkpoint and a history CSV.
    Train {
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        /// History CSV path; defaults to `<out>.history.csv`.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Per-count accuracy of a checkpoint on a dataset (CSV).
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
    },
    /// Measured RSS CSV to an attenuation dataset.
    Ingest {
        #[arg(long)]
        rss: PathBuf,
        /// Graph document (JSON); the config scene is used otherwise.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Free-space powers (`tx_id,rx_id,power_dbm`); otherwise `model.free_space_dbm`.
        #[arg(long)]
        free_space: Option<PathBuf>,
    },
    /// Bounds over the `[sweep.axes]` grid, one row per cell and count (CSV).
    Sweep,
}

struct CsvOut {
    inner: Box<dyn Write>,
}

impl CsvOut {
    fn create(path: Option<&Path>, hash: &str, header: &[&str]) -> Result<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        let mut out = Self { inner };
        writeln!(out.inner, "# config_hash={hash}")?;
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) -> Result<()> {
        let line: Vec<String> = cells.into_iter().collect();
        writeln!(self.inner, "{}", line.join(","))?;
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

fn write_dataset(file: &DatasetFile, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => file.save(p),
        None => file.write(std::io::stdout().lock()),
    }
}

fn header_config(cfg: &ExperimentConfig, command: &str) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "config_hash": cfg.hash(),
        "config": cfg,
    })
}

fn load_datasets(paths: &[PathBuf]) -> Result<Vec<crate::net::LabeledGraphSample>> {
    let mut all = Vec::new();
    for p in paths {
        let file = DatasetFile::load(p)?;
        all.extend(file.samples()?);
    }
    Ok(all)
}

fn cmd_simulate(cfg: &ExperimentConfig, out: Option<&Path>, rss_path: Option<&Path>) -> Result<()> {
    let graph = cfg.build_graph()?;
    let profile = cfg.profile()?;
    let lambda = cfg.wavelength();
    let n = cfg.simulate.targets;
    let base = cfg.stream_seed(stream::SCENES);
    let snapshots: Vec<_> = (0..cfg.simulate.snapshots)
        .into_par_iter()
        .map(|s| {
            let targets = sample_targets(n, graph.area(), &profile, derive_seed(base, s as u64));
            snapshot_at(&graph, &targets, cfg.model.kind, lambda, &cfg.quadrature(), &cfg.membership(), s as u64)
        })
        .collect::<Result<_>>()?;
    if let Some(path) = rss_path {
        let free = vec![cfg.model.free_space_dbm; graph.num_links()];
        let noise_seed = cfg.stream_seed(stream::NOISE);
        let mut records = Vec::new();
        for (s, snap) in snapshots.iter().enumerate() {
            let rss = simulate_rss(&graph, snap, &free, &cfg.noise(), derive_seed(noise_seed, s as u64))?;
            records.extend(records_from_rss(&graph, &rss, s as u64 * cfg.ingest.window_ms, 0));
        }
        write_rss_csv(BufWriter::new(File::create(path)?), &records)?;
    }
    let records = snapshots
        .into_iter()
        .map(|snapshot| DatasetRecord {
            label: Some(n as u32),
            snapshot,
        })
        .collect();
    write_dataset(&DatasetFile::new(graph, header_config(cfg, "simulate"), records)?, out)
}

fn bounds_rows(cfg: &ExperimentConfig) -> Result<Vec<(usize, f64, f64)>> {
    let graph = cfg.build_graph()?;
    let counts: Vec<usize> = (cfg.bounds.n_min..=cfg.bounds.n_max).collect();
    let curve = accuracy_curve(
        &graph,
        &counts,
        &cfg.profile()?,
        &cfg.bound_config(),
        cfg.wavelength(),
        cfg.bounds.n_trials,
        cfg.stream_seed(stream::BOUNDS),
        &cfg.membership(),
    )?;
    Ok(curve.into_iter().map(|p| (p.n_targets, p.accuracy, p.n_hat_mean)).collect())
}

fn cmd_bounds(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let graph = cfg.build_graph()?;
    let rows = bounds_rows(cfg)?;
    let mut csv = CsvOut::create(
        out,
        &cfg.hash(),
        &["N", "accuracy", "n_hat_mean", "tau", "frequency_hz", "nodes", "area_sqm", "variant"],
    )?;
    let area = cfg.area()?.size();
    for (n, acc, n_hat) in rows {
        csv.row([
            n.to_string(),
            acc.to_string(),
            n_hat.to_string(),
            cfg.bounds.tau.to_string(),
            cfg.scene.frequency_hz.to_string(),
            graph.num_nodes().to_string(),
            area.to_string(),
            cfg.bounds.variant.as_str().to_string(),
        ])?;
    }
    csv.finish()
}

fn cmd_gen_data(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let graph = cfg.build_graph()?;
    let plan = GenerationPlan {
        counts: (cfg.data.n_min..=cfg.data.n_max).collect(),
        samples_per_count: cfg.data.samples_per_n,
        profile: cfg.profile()?,
        wavelength: cfg.wavelength(),
        quadrature: cfg.quadrature(),
        membership: cfg.membership(),
        seed: cfg.stream_seed(stream::SCENES),
    };
    let records = generate_records(&graph, &plan, &[cfg.model.kind])?.remove(0);
    write_dataset(&DatasetFile::new(graph, header_config(cfg, "gen-data"), records)?, out)
}

fn cmd_train(cfg: &ExperimentConfig, out: Option<&Path>, data: &[PathBuf], history: Option<&Path>) -> Result<()> {
    let out = out.ok_or_else(|| Error::InvalidArgument("train needs --out for the checkpoint".into()))?;
    let samples = load_datasets(data)?;
    let (params, hist) = train(&samples, &cfg.train_config())?;
    save_checkpoint(out, &params)?;
    let history_path = history.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".history.csv");
        PathBuf::from(p)
    });
    let mut csv = CsvOut::create(Some(&history_path), &cfg.hash(), &["epoch", "train_loss", "val_loss"])?;
    for e in hist {
        csv.row([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string()])?;
    }
    csv.finish()
}

fn write_eval(report: &EvalReport, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let mut csv = CsvOut::create(out, &cfg.hash(), &["N", "samples", "accuracy"])?;
    for c in &report.per_n {
        csv.row([c.n.to_string(), c.samples.to_string(), c.accuracy.to_string()])?;
    }
    let total: usize = report.per_n.iter().map(|c| c.samples).sum();
    csv.row(["all".to_string(), total.to_string(), report.overall.to_string()])?;
    csv.finish()
}

fn cmd_eval(cfg: &ExperimentConfig, out: Option<&Path>, model: &Path, data: &[PathBuf]) -> Result<()> {
    let params = load_checkpoint(model)?;
    let samples = load_datasets(data)?;
    write_eval(&evaluate(&params, &samples)?, cfg, out)
}

fn cmd_ingest(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    rss: &Path,
    graph_path: Option<&Path>,
    free_space: Option<&Path>,
) -> Result<()> {
    let graph = match graph_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let doc: crate::geometry::GraphDocument = serde_json::from_str(&text).map_err(|e| Error::parse(p.display().to_string(), e))?;
            NetworkGraph::try_from(doc)?
        }
        None => cfg.build_graph()?,
    };
    let free = match free_space {
        Some(p) => read_free_space_csv(File::open(p)?, &graph)?,
        None => vec![Some(cfg.model.free_space_dbm); graph.num_links()],
    };
    let windows = ingest_rss(File::open(rss)?, &graph, cfg.ingest.window_ms)?;
    let estimates = estimate_attenuation(&windows, &graph, &free, cfg.ingest.averaging_window)?;
    let records = estimates
        .into_iter()
        .map(|e| DatasetRecord {
            label: cfg.ingest.label,
            snapshot: e.snapshot,
        })
        .collect();
    write_dataset(&DatasetFile::new(graph, header_config(cfg, "ingest"), records)?, out)
}

/// Cartesian product of the sweep axes, in key order.
fn sweep_cells(axes: &BTreeMap<String, Vec<toml::Value>>) -> Vec<Vec<(String, toml::Value)>> {
    let mut cells: Vec<Vec<(String, toml::Value)>> = vec![Vec::new()];
    for (key, values) in axes {
        cells = cells
            .into_iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = cell.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    cells
}

fn cmd_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<()> {
    let cells = sweep_cells(&cfg.sweep.axes);
    let results: Vec<Vec<(usize, f64, f64)>> = cells
        .par_iter()
        .map(|cell| {
            let overrides: Vec<String> = cell.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let mut c = cfg.with_overrides(&overrides)?;
            c.sweep.axes.clear();
            bounds_rows(&c)
        })
        .collect::<Result<_>>()?;
    let mut header = vec!["cell".to_string()];
    header.extend(cfg.sweep.axes.keys().cloned());
    header.extend(["N", "accuracy", "n_hat_mean"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvOut::create(out, &cfg.hash(), &header_refs)?;
    for (i, (cell, rows)) in cells.iter().zip(results).enumerate() {
        for (n, acc, n_hat) in rows {
            let mut line = vec![i.to_string()];
            line.extend(cell.iter().map(|(_, v)| v.to_string().replace(',', ";")));
            line.extend([n.to_string(), acc.to_string(), n_hat.to_string()]);
            csv.row(line)?;
        }
    }
    csv.finish()
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::load(cli.global.config.as_deref(), &cli.global.overrides)?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    log::info!("config hash {} seed {}", cfg.hash(), cfg.seed);
    log::debug!("resolved config:\n{}", cfg.to_toml()?);
    let out = cli.global.out.as_deref();
    match &cli.command {
        Command::Simulate { rss } => cmd_simulate(&cfg, out, rss.as_deref()),
        Command::Bounds => cmd_bounds(&cfg, out),
        Command::GenData => cmd_gen_data(&cfg, out),
        Command::Train { data, history } => cmd_train(&cfg, out, data, history.as_deref()),
        Command::Eval { model, data } => cmd_eval(&cfg, out, model, data),
        Command::Ingest { rss, graph, free_space } => {
            cmd_ingest(&cfg, out, rss, graph.as_deref(), free_space.as_deref())
        }
        Command::Sweep => cmd_sweep(&cfg, out),
    }
}

/// Parse `argv`, run the subcommand and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("RFSL_LOG"))
        .format_timestamp(None)
        .try_init();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs).build() {
        Ok(p) => Arc::new(p),
        Err(e) => {
            eprintln!("error[invalid-argument]: thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category(), e);
            1
        }
    }
}
