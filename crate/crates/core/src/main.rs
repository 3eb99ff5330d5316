use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use geest::data::{load_dataset, write_dataset, Role, Schema};
use geest::error::{Error, Result};
use geest::experiments::{estimate_ge_multi, run_study, ExperimentSpec, Generator, StudyKind, Weighting};
use geest::learners::LearnerSpec;
use geest::metrics::MetricSpec;
use geest::rng;
use geest::simgen::{draw_pps_sample, gen_clustered, gen_drift, gen_nsrs_population, HierModel};
use geest::splitters::{Boundary, ClusterSource, ResamplingPlan, Scheme};

/// Generalization-error estimation for non-i.i.d. data.
#[derive(Parser)]
#[command(name = "geest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset from one of the simulation models.
    Simulate {
        study: StudyKind,
        /// Generator config (JSON); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a resampling plan for a dataset.
    Split {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the generalization error of a learner on a dataset.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// Plan file written by `split`; otherwise the scheme flags are used.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// e.g. `ols`, `forest:n_trees=100`, `topdown`.
        #[arg(long)]
        learner: LearnerSpec,
        /// Repeat for several metrics.
        #[arg(long = "metric", required = true)]
        metrics: Vec<MetricSpec>,
        /// Column holding inclusion probabilities; enables design weighting.
        #[arg(long)]
        design: Option<String>,
        #[arg(long, value_enum, default_value_t = Estimator::Ht)]
        estimator: Estimator,
        #[arg(long)]
        population_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a simulation study and write the result table.
    Study {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Ht,
    Hajek,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column-role schema (JSON); roles are inferred from header names otherwise.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeName {
    Holdout,
    Kfold,
    RepeatedKfold,
    GroupedKfold,
    StratifiedKfold,
    SingleSpatialSplit,
    RectangularTiles,
    ClusteredGroups,
    LooBuffer,
    LeaveOneDiscOut,
    GeoUnits,
    TimeseriesCv,
    OutOfSample,
}

#[derive(Args)]
struct SchemeArgs {
    #[arg(long, value_enum)]
    scheme: Option<SchemeName>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// `vertical:X`, `horizontal:Y`, `halfplane:A,B,C` or `polygon:x,y;x,y;...`
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    buffer: Option<f64>,
    /// Tile grid as ROWSxCOLS.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_enum)]
    source: Option<Source>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    disc_radius: Option<f64>,
    #[arg(long)]
    gap: Option<u32>,
    #[arg(long)]
    test_seasons: Option<u32>,
    #[arg(long)]
    seasons: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Coords,
    Features,
}

fn need<T>(v: Option<T>, flag: &str, scheme: &str) -> std::result::Result<T, String> {
    v.ok_or_else(|| format!("--{flag} is required for scheme {scheme}"))
}

impl SchemeArgs {
    fn scheme(&self) -> std::result::Result<Scheme, String> {
        let name = self.scheme.ok_or("either --plan or --scheme is required")?;
        let label = name.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        let s = label.as_str();
        Ok(match name {
            SchemeName::Holdout => Scheme::Holdout { test_fraction: need(self.test_fraction, "test-fraction", s)? },
            SchemeName::Kfold => Scheme::Kfold { k: need(self.k, "k", s)? },
            SchemeName::RepeatedKfold => {
                Scheme::RepeatedKfold { k: need(self.k, "k", s)?, repeats: need(self.repeats, "repeats", s)? }
            }
            SchemeName::GroupedKfold => Scheme::GroupedKfold { k: need(self.k, "k", s)?, repeats: self.repeats.unwrap_or(1) },
            SchemeName::StratifiedKfold => {
                Scheme::StratifiedKfold { k: need(self.k, "k", s)?, repeats: self.repeats.unwrap_or(1) }
            }
            SchemeName::SingleSpatialSplit => {
                let b: Boundary = need(self.boundary.as_deref(), "boundary", s)?.parse().map_err(|e: Error| e.to_string())?;
                Scheme::SingleSpatialSplit { boundary: b, buffer: self.buffer.unwrap_or(0.0) }
            }
            SchemeName::RectangularTiles => {
                let g = need(self.grid.as_deref(), "grid", s)?;
                let (rows, cols) = g
                    .split_once(['x', 'X'])
                    .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
                    .ok_or_else(|| format!("--grid expects ROWSxCOLS, got {g:?}"))?;
                Scheme::RectangularTiles { rows, cols, folds: self.folds, extent: None }
            }
            SchemeName::ClusteredGroups => Scheme::ClusteredGroups {
                k: need(self.k, "k", s)?,
                source: match self.source.unwrap_or(Source::Coords) {
                    Source::Coords => ClusterSource::Coords,
                    Source::Features => ClusterSource::Features,
                },
            },
            SchemeName::LooBuffer => Scheme::LooBuffer { radius: need(self.radius, "radius", s)? },
            SchemeName::LeaveOneDiscOut => Scheme::LeaveOneDiscOut {
                k: need(self.k, "k", s)?,
                disc_radius: need(self.disc_radius, "disc-radius", s)?,
                buffer: self.buffer.unwrap_or(0.0),
            },
            SchemeName::GeoUnits => Scheme::GeoUnits { folds: self.folds },
            SchemeName::TimeseriesCv => Scheme::TimeseriesCv { gap: self.gap.unwrap_or(0), seasons: self.seasons },
            SchemeName::OutOfSample => Scheme::OutOfSample {
                test_seasons: need(self.test_seasons, "test-seasons", s)?,
                gap: self.gap.unwrap_or(0),
                seasons: self.seasons,
            },
        })
    }
}

fn usage_error(msg: String) -> ! {
    Cli::command().error(ErrorKind::MissingRequiredArgument, msg).exit()
}

fn read_schema(path: Option<&Path>) -> Result<Schema> {
    match path {
        Some(p) => Schema::read(p),
        None => Ok(Schema::inferred()),
    }
}

fn simulate(study: StudyKind, config: Option<&Path>, out: &Path, seed: u64) -> Result<()> {
    let value = match config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => serde_json::json!({}),
    };
    let d = match Generator::parse(study, value)? {
        Generator::Clustered(cfg) => gen_clustered(&cfg, seed)?,
        Generator::Nsrs(cfg) => {
            let (pop, design) = gen_nsrs_population(&cfg, rng::derive(seed, &[0]))?;
            pop.subset(&draw_pps_sample(&design, rng::derive(seed, &[1]))?)?
        }
        Generator::Drift(cfg) => gen_drift(&cfg, seed)?.0,
        Generator::Hierarchical(cfg) => {
            let model = HierModel::generate(&cfg, rng::derive(seed, &[u64::MAX]))?;
            model.sample(cfg.n_train, rng::derive(seed, &[0]))?
        }
        Generator::Custom(_) => return Err(Error::Config("custom studies have no generator to simulate".into())),
    };
    write_dataset(&d, out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { study, config, out, seed } => simulate(study, config.as_deref(), &out, seed),
        Command::Split { scheme, data, out, seed } => {
            let scheme = scheme.scheme().unwrap_or_else(|m| usage_error(m));
            let d = load_dataset(&data.data, &read_schema(data.schema.as_deref())?)?;
            scheme.build(&d, seed)?.write(out)
        }
        Command::Evaluate { data, plan, scheme, learner, metrics, design, estimator, population_size, seed } => {
            let mut schema = read_schema(data.schema.as_deref())?;
            if let Some(col) = &design {
                schema = schema.with_role(col, Role::Pi);
            }
            if population_size.is_some() {
                schema.population_size = population_size;
            }
            let d = load_dataset(&data.data, &schema)?;
            let plan = match plan {
                Some(p) => ResamplingPlan::read(p)?,
                None => scheme.scheme().unwrap_or_else(|m| usage_error(m)).build(&d, rng::derive(seed, &[0]))?,
            };
            let weighting = match (&design, estimator) {
                (None, _) => Weighting::None,
                (Some(_), Estimator::Ht) => Weighting::Ht,
                (Some(_), Estimator::Hajek) => Weighting::Hajek,
            };
            let est = estimate_ge_multi(&d, &plan, &learner, &metrics, weighting, rng::derive(seed, &[1]))?;
            println!("metric,estimate,splits,skipped");
            for (m, e) in metrics.iter().zip(&est) {
                for (j, why) in &e.skipped {
                    eprintln!("warning: split {j} skipped: {why}");
                }
                println!("{m},{},{},{}", e.result.value, plan.len(), e.skipped.len());
            }
            Ok(())
        }
        Command::Study { config, out, seed, workers } => {
            let mut spec = ExperimentSpec::read(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            if workers.is_some() {
                spec.workers = workers;
            }
            let out = out
                .or_else(|| spec.output.clone())
                .ok_or_else(|| Error::Config("no output path: pass --out or set \"output\" in the config".into()))?;
            run_study(&spec)?.write(out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
