//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use captrust_core::data::DatasetFile;
use captrust_core::fitting::FitConfig;
use captrust_core::{
    artificial_trust, evaluate_models, generate_synthetic_dataset, run_belief_updates, run_identification,
    trust_integral, AgentId, CapabilityVector, RatingNoise, SimConfig, SyntheticAgent, SyntheticConfig, TrustParams,
    UniformBelief,
};
use serde::Serialize;

use crate::args::{broadcast, FitArgs, GenerateArgs, SimulateArgs, TrustArgs, ValidateArgs};
use crate::manifest::RunManifest;

const DEFAULT_GRID_BINS: usize = 10;
/// The trust query is a single integral, so it can afford a fine grid.
const DEFAULT_QUERY_BINS: usize = 1000;
const DEFAULT_SNAPSHOTS: [usize; 4] = [0, 50, 200, 1000];
const QUERY_BETA: f64 = 10.0;
const QUERY_ZETA: f64 = 1.0;

/// Bad flags or flag combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub bins: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Globals {
    fn require_output(&self, subcommand: &str) -> Result<OutputDir> {
        match &self.output {
            Some(dir) => OutputDir::create(dir),
            None => Err(usage(format!("{subcommand} requires --output <DIR>"))),
        }
    }

    fn optional_output(&self) -> Result<Option<OutputDir>> {
        self.output.as_deref().map(OutputDir::create).transpose()
    }

    fn command_prefix(&self, bins: usize) -> Vec<String> {
        vec![
            "captrust".into(),
            "--seed".into(),
            self.seed.to_string(),
            "--bins".into(),
            bins.to_string(),
        ]
    }
}

/// An output directory that remembers which files went into it.
struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = self.written;
        manifest.outputs.sort();
        manifest.write(&self.dir)
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    capabilities: Vec<f64>,
    tasks: usize,
    p_high: f64,
    p_low: f64,
    resolution: f64,
    bins: usize,
    snapshots: Vec<usize>,
}

fn snapshot_schedule(requested: Option<&[usize]>, tasks: usize) -> Result<Vec<usize>> {
    let mut schedule = match requested {
        Some(s) => {
            if let Some(bad) = s.iter().find(|&&n| n > tasks) {
                return Err(usage(format!("snapshot {bad} exceeds --tasks {tasks}")));
            }
            s.to_vec()
        }
        None => DEFAULT_SNAPSHOTS
            .iter()
            .copied()
            .filter(|&n| n <= tasks)
            .chain(std::iter::once(tasks))
            .collect(),
    };
    schedule.sort_unstable();
    schedule.dedup();
    if schedule.is_empty() {
        return Err(usage("--snapshots is empty"));
    }
    Ok(schedule)
}

pub fn simulate(globals: &Globals, args: &SimulateArgs) -> Result<()> {
    let bins = globals.bins.unwrap_or(DEFAULT_GRID_BINS);
    let snapshots = snapshot_schedule(args.snapshots.as_deref(), args.tasks)?;
    let sim = SimConfig {
        dim: args.capabilities.len(),
        task_count: args.tasks,
        bins_per_dim: bins,
        resolution: args.resolution,
        seed: globals.seed,
        snapshots: snapshots.clone(),
    };
    sim.validate().map_err(|e| usage(e.to_string()))?;
    let capabilities = CapabilityVector::new(args.capabilities.clone()).map_err(|e| usage(e.to_string()))?;
    let agent = SyntheticAgent::new(AgentId::human("agent"), capabilities, args.p_high, args.p_low)
        .map_err(|e| usage(e.to_string()))?;
    let mut out = globals.require_output("simulate")?;

    let results = run_identification(&agent, &sim)?;
    let width = args.tasks.to_string().len();
    let mut bounds = String::new();
    let mut fits = String::from("observations,objective,evaluations\n");
    for snap in &results {
        let n = snap.observations;
        bounds.push_str(&snap.fit.belief.snapshot_line(n as u64));
        bounds.push('\n');
        fits.push_str(&format!("{n},{},{}\n", snap.fit.objective, snap.fit.evaluations));
        out.write(&format!("grid_n{n:0width$}.csv"), &snap.grid.to_table())?;
        out.write(&format!("surface_n{n:0width$}.csv"), &snap.surface_table())?;
        let support: Vec<String> = (0..sim.dim)
            .map(|i| {
                let (l, u) = snap.fit.belief.bounds(i);
                format!("{l}:{u}")
            })
            .collect();
        println!("n={n}\tbelief={}\tobjective={}", support.join(","), snap.fit.objective);
    }
    out.write("bounds.txt", &bounds)?;
    out.write("fits.csv", &fits)?;
    out.write("interval_updates.txt", &run_belief_updates(&agent, &sim)?.to_lines())?;

    let config = SimulateConfig {
        capabilities: args.capabilities.clone(),
        tasks: args.tasks,
        p_high: args.p_high,
        p_low: args.p_low,
        resolution: args.resolution,
        bins,
        snapshots: snapshots.clone(),
    };
    let mut manifest = RunManifest::new("simulate", globals.seed, &config)?;
    manifest.command = globals.command_prefix(bins);
    manifest.command.extend([
        "simulate".into(),
        "--capabilities".into(),
        join(&args.capabilities),
        "--tasks".into(),
        args.tasks.to_string(),
        "--p-high".into(),
        args.p_high.to_string(),
        "--p-low".into(),
        args.p_low.to_string(),
        "--resolution".into(),
        args.resolution.to_string(),
        "--snapshots".into(),
        join(&snapshots),
    ]);
    out.finish(manifest)
}

#[derive(Debug, Serialize)]
struct FitCommandConfig {
    folds: usize,
    #[serde(flatten)]
    fit: FitConfig,
}

pub fn fit(globals: &Globals, args: &FitArgs) -> Result<()> {
    let bins = globals.bins.unwrap_or(DEFAULT_GRID_BINS);
    let folds = args.folds as usize;
    let mut out = globals.require_output("fit")?;
    let data = DatasetFile::load(&args.data)?;
    let config = FitConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        patience: args.patience,
        validation_fraction: args.validation_fraction,
        bins_per_dim: bins,
        seed: globals.seed,
        ..FitConfig::default()
    };
    let comparison = evaluate_models(&data.records, folds, globals.seed, &config)?;

    let summary = comparison.summary_table();
    print!("{summary}");
    out.write("comparison.tsv", &summary)?;
    out.write("folds.csv", &comparison.fold_table())?;
    for report in &comparison.reports {
        let table = comparison
            .learning_curve_table(&report.model)
            .expect("report names come from the comparison");
        out.write(&format!("learning_curve_{}.csv", report.model.to_lowercase()), &table)?;
    }
    let mut params = serde_json::to_string_pretty(&comparison)?;
    params.push('\n');
    out.write("models.json", &params)?;

    let mut manifest = RunManifest::new(
        "fit",
        globals.seed,
        FitCommandConfig {
            folds,
            fit: config.clone(),
        },
    )?;
    manifest.inputs.push(args.data.display().to_string());
    manifest.command = globals.command_prefix(bins);
    manifest.command.extend([
        "fit".into(),
        "--data".into(),
        args.data.display().to_string(),
        "--folds".into(),
        folds.to_string(),
        "--epochs".into(),
        config.epochs.to_string(),
        "--learning-rate".into(),
        config.learning_rate.to_string(),
        "--patience".into(),
        config.patience.to_string(),
        "--validation-fraction".into(),
        config.validation_fraction.to_string(),
    ]);
    out.finish(manifest)
}

#[derive(Debug, Serialize)]
struct TrustConfig {
    belief: Vec<(f64, f64)>,
    task: Vec<f64>,
    beta: Vec<f64>,
    zeta: Vec<f64>,
    bins: usize,
}

pub fn trust(globals: &Globals, args: &TrustArgs) -> Result<()> {
    let n = args.belief.len();
    if args.task.len() != n {
        return Err(usage(format!(
            "--task has {} values but --belief has {n} dimensions",
            args.task.len()
        )));
    }
    let bins = globals.bins.unwrap_or(DEFAULT_QUERY_BINS);
    let beta = broadcast(args.beta.as_deref().unwrap_or(&[QUERY_BETA]), n, "beta").map_err(usage)?;
    let zeta = broadcast(args.zeta.as_deref().unwrap_or(&[QUERY_ZETA]), n, "zeta").map_err(usage)?;
    let belief = UniformBelief::from_bounds(&args.belief).map_err(|e| usage(e.to_string()))?;
    let task = CapabilityVector::new(args.task.clone()).map_err(|e| usage(e.to_string()))?;
    let params = TrustParams::new(beta.clone(), zeta.clone()).map_err(|e| usage(e.to_string()))?;

    let natural = trust_integral(&belief, &task, &params, bins)?;
    let artificial = artificial_trust(&belief, &task)?;
    let report = format!("natural\t{natural}\nartificial\t{artificial}\n");
    print!("{report}");

    if let Some(mut out) = globals.optional_output()? {
        out.write("trust.tsv", &report)?;
        let belief_flag: Vec<String> = args.belief.iter().map(|(l, u)| format!("{l}:{u}")).collect();
        let mut manifest = RunManifest::new(
            "trust",
            globals.seed,
            TrustConfig {
                belief: args.belief.clone(),
                task: args.task.clone(),
                beta: beta.clone(),
                zeta: zeta.clone(),
                bins,
            },
        )?;
        manifest.command = globals.command_prefix(bins);
        manifest.command.extend([
            "trust".into(),
            "--belief".into(),
            belief_flag.join(","),
            "--task".into(),
            join(&args.task),
            "--beta".into(),
            join(&beta),
            "--zeta".into(),
            join(&zeta),
        ]);
        out.finish(manifest)?;
    }
    Ok(())
}

pub fn validate_data(globals: &Globals, args: &ValidateArgs) -> Result<()> {
    let data = DatasetFile::load(&args.data)?;
    let observations: usize = data.records.iter().map(|r| r.observations.len()).sum();
    let report = format!(
        "ok\trecords={}\tobservations={}\tdimensions={}\n",
        data.records.len(),
        observations,
        data.dimensions.join(",")
    );
    print!("{report}");
    if let Some(mut out) = globals.optional_output()? {
        out.write("validation.txt", &report)?;
        let mut manifest = RunManifest::new("validate-data", globals.seed, serde_json::json!({}))?;
        manifest.inputs.push(args.data.display().to_string());
        manifest.command = vec![
            "captrust".into(),
            "validate-data".into(),
            "--data".into(),
            args.data.display().to_string(),
        ];
        out.finish(manifest)?;
    }
    Ok(())
}

pub const DATASET_FILE: &str = "dataset.jsonl";

#[derive(Debug, Serialize)]
struct GenerateConfig {
    beta: Vec<f64>,
    zeta: Vec<f64>,
    #[serde(flatten)]
    synthetic: SyntheticConfig,
}

pub fn generate_data(globals: &Globals, args: &GenerateArgs) -> Result<()> {
    let n = args.dimensions.len();
    let bins = globals.bins.unwrap_or(DEFAULT_GRID_BINS);
    let beta = broadcast(&args.beta, n, "beta").map_err(usage)?;
    let zeta = broadcast(&args.zeta, n, "zeta").map_err(usage)?;
    let params = TrustParams::new(beta.clone(), zeta.clone()).map_err(|e| usage(e.to_string()))?;
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(usage(format!("--noise {} must be finite and >= 0", args.noise)));
    }
    if args.records == 0 {
        return Err(usage("--records must be >= 1"));
    }
    let synthetic = SyntheticConfig {
        dimensions: args.dimensions.clone(),
        record_count: args.records,
        observations_per_record: args.observations,
        noise: if args.noise == 0.0 {
            RatingNoise::None
        } else {
            RatingNoise::Gaussian { std: args.noise }
        },
        bins_per_dim: bins,
        seed: globals.seed,
    };
    let mut out = globals.require_output("generate-data")?;
    let dataset = generate_synthetic_dataset(&params, &synthetic)?;
    out.write(DATASET_FILE, &dataset.to_jsonl())?;
    println!("wrote {} records to {DATASET_FILE}", dataset.records.len());

    let mut manifest = RunManifest::new(
        "generate-data",
        globals.seed,
        GenerateConfig {
            beta: beta.clone(),
            zeta: zeta.clone(),
            synthetic,
        },
    )?;
    manifest.command = globals.command_prefix(bins);
    manifest.command.extend([
        "generate-data".into(),
        "--records".into(),
        args.records.to_string(),
        "--observations".into(),
        args.observations.to_string(),
        "--dimensions".into(),
        args.dimensions.join(","),
        "--beta".into(),
        join(&beta),
        "--zeta".into(),
        join(&zeta),
        "--noise".into(),
        args.noise.to_string(),
    ]);
    out.finish(manifest)
}
