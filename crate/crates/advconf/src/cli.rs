//! The `advconf` command line: thin subcommands over the library,
//! reproducible by construction.
//!
//! Every JSON report embeds a [`RunManifest`] with the full parameter set
//! and seeds, and all randomness flows from explicit `--seed` flags. Exit
//! codes: 0 success, 1 runtime error, 2 usage error. `ADVCONF_LOG` set to
//! `quiet`, `info` (default) or `debug` controls progress output on stderr.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::attack::{batch_evade_threads, AttackParams};
use crate::classifier::{
    parse_svm, serialize_svm, train_svm, KernelSpec, Label, LabeledDataset, SvmModel,
    TrainParams,
};
use crate::encoding::{build_encoder, FeatureVector};
use crate::error::{Error, Result};
use crate::oracle::{label_batch, make_scenario, Scenario};
use crate::retrain::{run_adversarial_loop, run_random_loop, LabelingStrategy, LoopParams};
use crate::rules::{distill_tree, extract_constraints, inject_constraints};
use crate::varmodel::{
    csv as config_csv, parse_constraint, parse_model, serialize_model, VariabilityModel,
};

/// Everything needed to re-run a command bit-identically, embedded in each
/// JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Wall-clock time; informational only and excluded from any
    /// reproducibility comparison.
    pub duration_seconds: f64,
}

#[derive(Parser, Debug)]
#[command(
    name = "advconf",
    version,
    about = "Adversarial configuration generation, retraining, and rule extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ModelSource {
    /// Variability model JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    model: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long, value_name = "NAME", value_parser = ["band2d", "motivlike80"])]
    scenario: Option<String>,
    /// Seed for scenario construction.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelSource {
    fn load_model(&self) -> Result<VariabilityModel> {
        match (&self.model, &self.scenario) {
            (Some(path), _) => parse_model(&std::fs::read_to_string(path)?),
            (None, Some(name)) => Ok(make_scenario(name, self.seed)?.model),
            (None, None) => Err(Error::InvalidParams(
                "either --model or --scenario is required".into(),
            )),
        }
    }

    fn load_scenario(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(name) => make_scenario(name, self.seed),
            None => Err(Error::InvalidParams(
                "this command needs --scenario (oracles exist only for scenarios)".into(),
            )),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct TrainFlags {
    /// Soft-margin penalty.
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Kernel: linear | rbf.
    #[arg(long, default_value = "rbf")]
    kernel: String,
    /// RBF width; defaults to 1/d.
    #[arg(long)]
    gamma: Option<f64>,
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Convergence passes without an alpha change.
    #[arg(long, default_value_t = 10)]
    max_passes: usize,
    /// Seed for the SMO working-set choice.
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
}

impl TrainFlags {
    fn to_params(&self) -> Result<TrainParams> {
        let kernel = match self.kernel.as_str() {
            "linear" => KernelSpec::Linear,
            "rbf" => KernelSpec::Rbf { gamma: self.gamma },
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown kernel `{other}` (expected linear or rbf)"
                )))
            }
        };
        Ok(TrainParams {
            c: self.c,
            kernel,
            tol: self.tol,
            max_passes: self.max_passes,
            seed: self.train_seed,
        })
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a scenario's variability model as JSON.
    GenModel {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Sample valid configurations into CSV.
    Sample {
        #[command(flatten)]
        source: ModelSource,
        /// Number of configurations.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        sample_seed: u64,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Label a configuration CSV with a scenario's oracle.
    Label {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Train an SVM on a labeled configuration CSV.
    Train {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        /// Output classifier JSON.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Evaluate a classifier on a labeled configuration CSV.
    Evaluate {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        classifier: PathBuf,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        /// Output metrics JSON (stdout when omitted).
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run the evasion attack from one configuration of a CSV.
    Attack {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        classifier: PathBuf,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        /// Row index of the start configuration.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Target class: 1 or -1.
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        target: i32,
        #[arg(long, default_value_t = 0.002)]
        step: f64,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long)]
        early_stop: bool,
        /// Comma-separated frozen feature slots.
        #[arg(long, value_name = "SLOTS")]
        freeze: Option<String>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Output trace CSV.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Adversarial retraining loop.
    Loop(LoopArgs),
    /// Random-acquisition baseline loop.
    RandomLoop(LoopArgs),
    /// Distill a classifier into a decision tree and extract constraints.
    Distill {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, value_name = "PATH")]
        classifier: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n_samples: usize,
        #[arg(long, default_value_t = 4)]
        max_depth: usize,
        /// Sampling seed for distillation.
        #[arg(long, default_value_t = 0)]
        distill_seed: u64,
        /// Output tree text.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Also write extracted constraints, one per line.
        #[arg(long, value_name = "PATH")]
        constraints_out: Option<PathBuf>,
    },
    /// Append constraints (one per line) to a model.
    Inject {
        /// Variability model JSON file.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Constraint file, one expression per line.
        #[arg(long, value_name = "PATH")]
        constraints: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Export the decision values of a 2-D classifier on a grid.
    BoundaryMap {
        #[arg(long, value_name = "PATH")]
        classifier: PathBuf,
        /// Grid resolution per axis (at least 2).
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct LoopArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, default_value_t = 200)]
    init_size: usize,
    #[arg(long, default_value_t = 500)]
    holdout: usize,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 10)]
    attacks_per_round: usize,
    #[arg(long, default_value_t = 0.002)]
    step: f64,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Labeling strategy for adversarial points: source | oracle.
    #[arg(long, default_value = "source")]
    labeling: String,
    /// Drop adversarial configurations invalid under the model.
    #[arg(long)]
    discard_invalid: bool,
    /// Loop seed (sampling, source selection).
    #[arg(long = "loop-seed", default_value_t = 0)]
    loop_seed: u64,
    /// Worker threads for the per-round attacks (timing only).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    train: TrainFlags,
    /// Report CSV path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Optional JSON report with the embedded manifest.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

impl LoopArgs {
    fn to_params(&self) -> Result<LoopParams> {
        let labeling = match self.labeling.as_str() {
            "source" => LabelingStrategy::SourceLabel,
            "oracle" => LabelingStrategy::OracleLabel,
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown labeling `{other}` (expected source or oracle)"
                )))
            }
        };
        Ok(LoopParams {
            rounds: self.rounds,
            attacks_per_round: self.attacks_per_round,
            attack: AttackParams {
                target: Label::Acceptable,
                step: self.step,
                iterations: self.iterations,
                early_stop: false,
                frozen_features: BTreeSet::new(),
            },
            labeling,
            seed: self.loop_seed,
            holdout_size: self.holdout,
            discard_invalid: self.discard_invalid,
            threads: self.threads,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum LogLevel {
    Quiet = 0,
    Info = 1,
    Debug = 2,
}

fn log_level() -> LogLevel {
    match std::env::var("ADVCONF_LOG").as_deref() {
        Ok("quiet") => LogLevel::Quiet,
        Ok("debug") => LogLevel::Debug,
        _ => LogLevel::Info,
    }
}

fn info(msg: impl AsRef<str>) {
    if log_level() >= LogLevel::Info {
        eprintln!("{}", msg.as_ref());
    }
}

/// Parse and dispatch. Returns the process exit code instead of exiting so
/// the whole CLI is testable in-process.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, &argv) {
        Ok(()) => 0,
        Err(Error::InvalidParams(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn manifest(
    command: &str,
    argv: &[String],
    inputs: &[&Path],
    outputs: &[&Path],
    started: Instant,
) -> RunManifest {
    RunManifest {
        command: command.into(),
        argv: argv.to_vec(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        duration_seconds: started.elapsed().as_secs_f64(),
    }
}

fn load_classifier(path: &Path) -> Result<SvmModel> {
    parse_svm(&std::fs::read_to_string(path)?)
}

fn encode_dataset(
    model: &VariabilityModel,
    path: &Path,
) -> Result<(Vec<FeatureVector>, Option<Vec<Label>>)> {
    let text = std::fs::read_to_string(path)?;
    let (configs, labels) = config_csv::read_configurations(model, &text)?;
    let encoder = build_encoder(model);
    let vectors = configs
        .iter()
        .map(|c| encoder.encode(c))
        .collect::<Result<Vec<_>>>()?;
    Ok((vectors, labels))
}

fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::GenModel { source, out } => {
            let model = source.load_model()?;
            std::fs::write(&out, serialize_model(&model))?;
            info(format!(
                "wrote model with {} options to {}",
                model.options.len(),
                out.display()
            ));
        }
        Command::Sample {
            source,
            n,
            sample_seed,
            out,
        } => {
            let model = source.load_model()?;
            let configs = model.sample_valid(n, sample_seed)?;
            std::fs::write(&out, config_csv::write_configurations(&model, &configs, None)?)?;
            info(format!("wrote {n} configurations to {}", out.display()));
        }
        Command::Label { source, dataset, out } => {
            let scenario = source.load_scenario()?;
            let text = std::fs::read_to_string(&dataset)?;
            let labeled = label_batch(&scenario.oracle, &scenario.model, &text)?;
            std::fs::write(&out, labeled)?;
            info(format!(
                "labeled {} with {} oracle queries",
                dataset.display(),
                scenario.oracle.queries()
            ));
        }
        Command::Train {
            source,
            dataset,
            train,
            out,
        } => {
            let model = source.load_model()?;
            let (vectors, labels) = encode_dataset(&model, &dataset)?;
            let labels = labels.ok_or_else(|| {
                Error::InvalidParams("training needs a labeled dataset (label column)".into())
            })?;
            let data = LabeledDataset::from_pairs(vectors.into_iter().zip(labels))?;
            let params = train.to_params()?;
            let svm = train_svm(&data, &params)?;
            std::fs::write(&out, serialize_svm(&svm))?;
            info(format!(
                "trained {} kernel SVM with {} support vectors",
                train.kernel,
                svm.num_support_vectors()
            ));
        }
        Command::Evaluate {
            source,
            classifier,
            dataset,
            out,
        } => {
            let model = source.load_model()?;
            let svm = load_classifier(&classifier)?;
            let (vectors, labels) = encode_dataset(&model, &dataset)?;
            let labels = labels.ok_or_else(|| {
                Error::InvalidParams("evaluation needs a labeled dataset".into())
            })?;
            let data = LabeledDataset::from_pairs(vectors.into_iter().zip(labels))?;
            let metrics = svm.evaluate(&data)?;
            #[derive(Serialize)]
            struct EvaluateReport {
                manifest: RunManifest,
                metrics: crate::classifier::Metrics,
            }
            let outputs: Vec<&Path> = out.iter().map(PathBuf::as_path).collect();
            let report = EvaluateReport {
                manifest: manifest(
                    "evaluate",
                    argv,
                    &[classifier.as_path(), dataset.as_path()],
                    &outputs,
                    started,
                ),
                metrics,
            };
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
        Command::Attack {
            source,
            classifier,
            dataset,
            index,
            target,
            step,
            iterations,
            early_stop,
            freeze,
            threads,
            out,
        } => {
            let model = source.load_model()?;
            let svm = load_classifier(&classifier)?;
            let (vectors, _) = encode_dataset(&model, &dataset)?;
            let x0 = vectors.get(index).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "row {index} out of range ({} rows)",
                    vectors.len()
                ))
            })?;
            let frozen_features = match freeze {
                None => BTreeSet::new(),
                Some(list) => list
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.trim().parse::<usize>().map_err(|_| {
                            Error::InvalidParams(format!("bad frozen slot `{s}`"))
                        })
                    })
                    .collect::<Result<BTreeSet<_>>>()?,
            };
            let params = AttackParams {
                target: Label::from_int(target)?,
                step,
                iterations,
                early_stop,
                frozen_features,
            };
            let traces = batch_evade_threads(&svm, std::slice::from_ref(x0), &params, threads)?;
            std::fs::write(&out, traces[0].to_csv())?;
            info(format!(
                "attack finished with status {:?}: g {} -> {}",
                traces[0].status,
                traces[0].start_decision(),
                traces[0].final_decision()
            ));
        }
        Command::Loop(args) => run_loop_command("loop", args, argv, started)?,
        Command::RandomLoop(args) => run_loop_command("random-loop", args, argv, started)?,
        Command::Distill {
            source,
            classifier,
            n_samples,
            max_depth,
            distill_seed,
            out,
            constraints_out,
        } => {
            let model = source.load_model()?;
            let svm = load_classifier(&classifier)?;
            let encoder = build_encoder(&model);
            let tree = distill_tree(&svm, &encoder, &model, n_samples, max_depth, distill_seed)?;
            std::fs::write(&out, tree.to_text(&encoder))?;
            let constraints = extract_constraints(&tree, &encoder, &model);
            info(format!(
                "distilled depth-{} tree; {} constraint(s) extracted",
                tree.depth(),
                constraints.len()
            ));
            if let Some(path) = constraints_out {
                let mut text = String::new();
                for c in &constraints {
                    text.push_str(&c.to_string());
                    text.push('\n');
                }
                std::fs::write(path, text)?;
            }
        }
        Command::Inject {
            model,
            constraints,
            out,
        } => {
            let base = parse_model(&std::fs::read_to_string(&model)?)?;
            let text = std::fs::read_to_string(&constraints)?;
            let parsed = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| parse_constraint(l, &base.options))
                .collect::<Result<Vec<_>>>()?;
            let injected = inject_constraints(&base, &parsed)?;
            std::fs::write(&out, serialize_model(&injected))?;
            info(format!(
                "injected {} constraint(s); model now has {}",
                parsed.len(),
                injected.constraints.len()
            ));
        }
        Command::BoundaryMap {
            classifier,
            grid,
            out,
        } => {
            let svm = load_classifier(&classifier)?;
            let csv = boundary_map(&svm, grid)?;
            std::fs::write(&out, csv)?;
        }
    }
    Ok(())
}

fn run_loop_command(
    mode: &str,
    args: LoopArgs,
    argv: &[String],
    started: Instant,
) -> Result<()> {
    let scenario = args.source.load_scenario()?;
    let train_params = args.train.to_params()?;
    let params = args.to_params()?;
    let labeling_note = match mode {
        "loop" => format!(", labeling {}", params.labeling),
        _ => String::new(), // the baseline always labels with the oracle
    };
    info(format!(
        "{mode}: scenario {} seed {}, init {}, {} rounds x {} attacks{labeling_note}",
        scenario.name,
        scenario.seed,
        args.init_size,
        params.rounds,
        params.attacks_per_round,
    ));
    let report = match mode {
        "loop" => run_adversarial_loop(&scenario, args.init_size, &train_params, &params)?,
        _ => run_random_loop(&scenario, args.init_size, &train_params, &params)?,
    };
    std::fs::write(&args.out, report.to_csv())?;
    if let Some(json_path) = &args.json {
        #[derive(Serialize)]
        struct LoopJson<'a> {
            manifest: RunManifest,
            report: &'a crate::retrain::LoopReport,
        }
        let wrapped = LoopJson {
            manifest: manifest(
                mode,
                argv,
                &[],
                &[args.out.as_path(), json_path.as_path()],
                started,
            ),
            report: &report,
        };
        std::fs::write(json_path, serde_json::to_string_pretty(&wrapped)?)?;
    }
    let last = report.rows.last().expect("report always has row 0");
    info(format!(
        "final round {}: train size {}, disagreement {:.4}, oracle queries {}",
        last.round, last.train_size, last.disagreement, last.oracle_queries
    ));
    if let crate::retrain::LoopStatus::Aborted { round, reason } = &report.status {
        return Err(Error::DegenerateTrainingSet(format!(
            "aborted at round {round}: {reason} (partial report written)"
        )));
    }
    Ok(())
}

/// Decision values of a 2-D classifier on a uniform grid over \[0,1\]^2,
/// as CSV rows `x0,x1,g`.
pub fn boundary_map(model: &SvmModel, grid: usize) -> Result<String> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: model.dim(),
        });
    }
    if grid < 2 {
        return Err(Error::InvalidParams(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    let mut out = String::from("x0,x1,g\n");
    for i in 0..grid {
        let x0 = i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let x1 = j as f64 / (grid - 1) as f64;
            let g = model.decision_slice(&[x0, x1]);
            out.push_str(&format!("{x0:?},{x1:?},{g:?}\n"));
        }
    }
    Ok(out)
}
