use anyhow::{bail, Context};
use ate_predict::pipeline::{self, CommandOutcome, Overrides, ResolvedConfig, DEFAULT_OUTPUT_DIR, OUTPUT_ENV};
use ate_predict::pooling::PoolKind;
use ate_predict::synth::{SynthConfig, SynthProfile};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Predict SLAM absolute trajectory error from characterized sensor sequences.
#[derive(Parser)]
#[command(name = "ate-predict", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Pooling kind, e.g. mean, max, concat_all.
    #[arg(long, value_name = "KIND")]
    pool: Option<PoolKind>,
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
    /// Master seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output root. Otherwise the config's output_dir, then $ATE_PREDICT_OUT.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus and a config that points at it.
    Synth {
        /// Corpus directory (default: $ATE_PREDICT_OUT, then ate-predict-out).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, value_name = "N", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        sequences: usize,
        #[arg(long, default_value_t = 30)]
        keyframes: usize,
        /// smooth or superlinear.
        #[arg(long, default_value = "smooth")]
        profile: SynthProfile,
        /// Relative per-sequence target noise.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value = "SYNTH")]
        testcase_id: String,
    },
    /// Label every keyframe prefix with its ATE and write pooled examples.
    GenerateExamples(Common),
    /// Write characterization matrices and whole-sequence descriptors.
    Characterize(Common),
    /// Decorrelate, tune, fit, evaluate and save a forest per testcase.
    Train(Common),
    /// Predict from a descriptor or dataset CSV.
    Predict {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long, value_name = "PATH")]
        output: Option<PathBuf>,
    },
    /// Training-fraction sweep and the early-ATE baseline table.
    Sweep(Common),
    /// Train once per pooling kind.
    ComparePoolings(Common),
    /// Dummy, linear, tree and forest on the same split.
    CompareModels(Common),
}

fn resolve(c: &Common) -> anyhow::Result<ResolvedConfig> {
    let overrides = Overrides {
        pooling_kind: c.pool,
        train_fraction: c.train_fraction,
        master_seed: c.seed,
        output_dir: c.out.clone(),
    };
    pipeline::load_config(&c.config, &overrides).with_context(|| format!("loading {}", c.config.display()))
}

fn report(outcome: &CommandOutcome, rc: &ResolvedConfig) -> bool {
    for (tc, e) in &outcome.errors {
        eprintln!("error: testcase `{tc}`: {e}");
    }
    let n = outcome.manifest.stages.iter().filter(|s| s.testcase_id != "*").count();
    println!(
        "{}: {} testcase(s), {} failed; outputs in {}",
        outcome.manifest.command,
        n,
        outcome.errors.len(),
        rc.output_root.display()
    );
    outcome.is_ok()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        #[cfg(not(feature = "parallel"))]
        log::warn!("built without the parallel feature; --jobs {n} ignored");
    }
    type Cmd = fn(&ResolvedConfig) -> pipeline::Result<CommandOutcome>;
    let (common, cmd): (&Common, Cmd) = match &cli.command {
        Command::Synth {
            out,
            seed,
            sequences,
            keyframes,
            profile,
            noise,
            testcase_id,
        } => {
            let out = out.clone().unwrap_or_else(|| match std::env::var_os(OUTPUT_ENV) {
                Some(v) if !v.is_empty() => PathBuf::from(v),
                _ => PathBuf::from(DEFAULT_OUTPUT_DIR),
            });
            let cfg = SynthConfig {
                n_sequences: *sequences,
                keyframes: *keyframes,
                noise: *noise,
                profile: *profile,
                seed: *seed,
                ..SynthConfig::default()
            };
            let s = pipeline::cmd_synth(&cfg, &out, testcase_id)?;
            let clamped: usize = s.clamped.iter().map(|(_, c)| c).sum();
            println!(
                "synth: {} sequence(s) of {} keyframes in {}; config {}",
                sequences,
                keyframes,
                out.display(),
                s.config_path.display()
            );
            if clamped > 0 {
                log::warn!("{clamped} prefix target(s) were raised to the reachable minimum");
            }
            return Ok(true);
        }
        Command::Predict { model, input, output } => {
            let summary = match output {
                Some(p) => pipeline::cmd_predict(model, input, p)?,
                None => {
                    let m = ate_predict::regress::load_forest(model)?;
                    let f = std::fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
                    pipeline::predict_stream(&m, f, std::io::stdout().lock(), input)?
                }
            };
            log::info!("predicted {} row(s)", summary.rows);
            return Ok(true);
        }
        Command::GenerateExamples(c) => (c, pipeline::cmd_generate_examples),
        Command::Characterize(c) => (c, pipeline::cmd_characterize),
        Command::Train(c) => (c, pipeline::cmd_train),
        Command::Sweep(c) => (c, pipeline::cmd_sweep),
        Command::ComparePoolings(c) => (c, pipeline::cmd_compare_poolings),
        Command::CompareModels(c) => (c, pipeline::cmd_compare_models),
    };
    let rc = resolve(common)?;
    let outcome = cmd(&rc)?;
    Ok(report(&outcome, &rc))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
