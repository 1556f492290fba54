//! `jgcs`: similarity queries, gradient checks, and the simulation experiments.
//!
//! Exit codes: 0 success, 1 computation or tolerance failure, 2 usage or
//! malformed input, 3 degenerate (near-zero) input vector.

mod input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use jgcs::gradcheck::run_gradcheck;
use jgcs::harness::align::{run_alignment_experiment_with, AlignConfig};
use jgcs::harness::bench::{analyze_scaling, run_runtime_benchmark, BenchConfig, BenchMode};
use jgcs::harness::noise::{run_noise_experiment, DIM, SIGMAS, TRIPLETS};
use jgcs::harness::output::{self, Metadata};
use jgcs::losses::{LossConfig, NegScheme};
use jgcs::nn::{save_checkpoint, TrainConfig, DEFAULT_SIM_LEARNING_RATE, DEFAULT_SIM_TAU};
use jgcs::similarity::{phi3, similarity_rows};
use jgcs::{Error, Exec};

#[derive(Parser)]
#[command(name = "jgcs", version, about = "Joint generalized cosine similarity and GHA loss experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity of the vectors in a file (one per line).
    Sim(SimArgs),
    /// Finite-difference check of every analytic gradient.
    Checkgrad(CheckgradArgs),
    /// Noise-robustness experiment.
    Noise(NoiseArgs),
    /// Train three encoders to align random data; dump embeddings.
    Align(AlignArgs),
    /// Time the GHA loss against the pairwise Dual loss.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Parallel,
    Sequential,
}

impl From<ExecArg> for Exec {
    fn from(e: ExecArg) -> Exec {
        match e {
            ExecArg::Parallel => Exec::Parallel,
            ExecArg::Sequential => Exec::Sequential,
        }
    }
}

#[derive(Args)]
struct SimArgs {
    /// Vector file; `-` reads standard input.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CheckgradArgs {
    #[arg(long = "modalities", default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct LossArgs {
    /// Softmax temperature.
    #[arg(long)]
    tau: Option<f64>,
    /// Weight of the angular-equilibrium term.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Negative tuples per sample (K).
    #[arg(long, default_value_t = 7)]
    negatives: usize,
    #[arg(long, default_value = "anchor-fixed", value_parser = ["anchor-fixed", "resample-all"])]
    neg_scheme: String,
}

impl LossArgs {
    fn config(&self, default_tau: f64) -> Result<LossConfig, Error> {
        Ok(LossConfig {
            tau: self.tau.unwrap_or(default_tau),
            lambda: self.lambda,
            negatives: self.negatives,
            scheme: self.neg_scheme.parse::<NegScheme>()?,
        })
    }
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_SIM_LEARNING_RATE)]
    lr: f64,
    #[arg(long = "modalities", default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 256)]
    dim: usize,
    #[arg(long, default_value_t = 4000)]
    count: usize,
    /// Hidden width of each encoder.
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    /// Samples exported before and after training.
    #[arg(long, default_value_t = 7)]
    dump_samples: usize,
    /// Stop once mean positive similarity exceeds this; negative disables.
    #[arg(long, default_value_t = 0.99, allow_negative_numbers = true)]
    early_stop: f64,
    /// Also write the trained encoders (with optimizer state) here.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "parallel")]
    exec: ExecArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Suppress per-epoch progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "by-negatives")]
    mode: ModeArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 256)]
    batch: usize,
    #[arg(long, default_value_t = 256)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, default_value_t = 2)]
    warmups: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "by_negatives", alias = "by-negatives")]
    ByNegatives,
    #[value(name = "by_modalities", alias = "by-modalities")]
    ByModalities,
}

impl From<ModeArg> for BenchMode {
    fn from(m: ModeArg) -> BenchMode {
        match m {
            ModeArg::ByNegatives => BenchMode::ByNegatives,
            ModeArg::ByModalities => BenchMode::ByModalities,
        }
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::DegenerateVector { .. } => 3,
            Error::Config(_) | Error::Parse { .. } | Error::Dimension(_) | Error::NonFinite(_) => 2,
            Error::Training { .. } | Error::Io(_) | Error::Json(_) => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values are serializable"));
}

fn cmd_sim(args: &SimArgs) -> CmdResult {
    let text = if args.input.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(&args.input).map_err(|e| Failure {
            code: 2,
            message: format!("cannot read {}: {e}", args.input.display()),
        })?
    };
    let rows = input::parse_vectors(&text)?;
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let r = similarity_rows(&refs)?;
    let phi = if rows.len() == 3 { Some(phi3(&rows[0], &rows[1], &rows[2])?) } else { None };
    match args.format {
        Format::Json => {
            let mut v = json!({
                "n": rows.len(),
                "dim": rows[0].len(),
                "detG": r.det_g,
                "V": r.hypervolume,
                "sin2Theta": r.sin2,
                "cosTheta": r.cos_theta,
                "theta": r.theta,
                "norms": r.norms,
                "pairwiseCos": r.pairwise_cos,
            });
            if let Some(p) = phi {
                v["phi3"] = json!(p);
            }
            print_json(&v);
        }
        Format::Csv => {
            println!("field,value");
            for (k, v) in [("n", rows.len() as f64), ("dim", rows[0].len() as f64)] {
                println!("{k},{v}");
            }
            for (k, v) in [("detG", r.det_g), ("V", r.hypervolume), ("sin2Theta", r.sin2), ("cosTheta", r.cos_theta), ("theta", r.theta)] {
                println!("{k},{}", output::fmt_f64(v));
            }
            if let Some(p) = phi {
                println!("phi3,{}", output::fmt_f64(p));
            }
        }
    }
    Ok(())
}

fn cmd_checkgrad(args: &CheckgradArgs) -> CmdResult {
    if args.n < 2 || args.dim < 2 {
        return Err(Error::Config(format!("checkgrad needs n >= 2 and D >= 2, got n={}, D={}", args.n, args.dim)).into());
    }
    let report = run_gradcheck(args.n, args.dim, args.seed)?;
    match args.format {
        Format::Json => print_json(&serde_json::to_value(&report).map_err(Error::from)?),
        Format::Csv => {
            println!("component,max_rel_error,tolerance,checked,status");
            for c in &report.components {
                println!(
                    "{},{:.3e},{:.0e},{},{}",
                    c.name,
                    c.max_rel_error,
                    c.tolerance,
                    c.checked,
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: 1, message: "gradient check failed".into() })
    }
}

fn cmd_noise(args: &NoiseArgs) -> CmdResult {
    ensure_dir(&args.out)?;
    let report = run_noise_experiment(args.seed)?;
    let meta = Metadata::new("noise", args.seed)
        .with("triplets", TRIPLETS)
        .with("dim", DIM)
        .with_json("sigmas", &SIGMAS)?;
    output::write_noise_report(&args.out, &report, &meta)?;
    output::write_noise_summary(&args.out, &report, &meta)?;
    match args.format {
        Format::Json => print_json(&output::noise_summary_json(&report, &meta)),
        Format::Csv => {
            println!("sigma,mean_abs_error,std,reference_mean");
            for l in &report.levels {
                let reference = output::reference_mean(l.sigma).map_or(String::new(), |r| r.to_string());
                println!("{},{:.6},{:.6},{reference}", l.sigma, l.mean, l.std);
            }
            println!(
                "# linear fit: slope {:.6}, intercept {:.6}, R^2 {:.4}; strictly increasing: {}",
                report.fit.slope, report.fit.intercept, report.fit.r_squared, report.strictly_increasing
            );
        }
    }
    Ok(())
}

fn cmd_align(args: &AlignArgs) -> CmdResult {
    let cfg = AlignConfig {
        count: args.count,
        n: args.n,
        dim: args.dim,
        dump_samples: args.dump_samples,
        train: TrainConfig {
            epochs: args.epochs,
            batch_size: args.batch,
            adam: jgcs::nn::AdamConfig { learning_rate: args.lr, ..Default::default() },
            loss: args.loss.config(DEFAULT_SIM_TAU)?,
            seed: args.seed,
            hidden: args.hidden,
            early_stop: (args.early_stop >= 0.0).then_some(args.early_stop),
            exec: args.exec.into(),
            ..TrainConfig::default()
        },
    };
    cfg.validate()?;
    ensure_dir(&args.out)?;
    let quiet = args.quiet;
    let report = run_alignment_experiment_with(&cfg, |h| {
        if !quiet {
            eprintln!(
                "epoch {:>4}  L_C {:.5}  L_A {:.5}  L_GHA {:.5}  mean cos_pos {:.4}  skipped {}",
                h.epoch, h.l_contrastive, h.l_angular, h.l_total, h.mean_cos_pos, h.skipped
            );
        }
    })?;
    let meta = Metadata::new("align", args.seed)
        .with_json("config", &cfg)?
        .with("early_stopped", report.early_stopped)
        .with("epochs_run", report.history.len());
    output::write_history(&args.out, &report.history, &meta)?;
    output::write_embeddings(&args.out, output::EMBEDDINGS_BEFORE, &report.before, &meta.clone().with("stage", "before"))?;
    output::write_embeddings(&args.out, output::EMBEDDINGS_AFTER, &report.after, &meta.clone().with("stage", "after"))?;
    if let Some(path) = &args.checkpoint {
        let file = std::fs::File::create(path)?;
        save_checkpoint(std::io::BufWriter::new(file), &report.encoders, args.seed)?;
    }
    let first = report.history.first().map_or(f64::NAN, |h| h.l_total);
    let last = report.history.last().map_or(f64::NAN, |h| h.l_total);
    match args.format {
        Format::Json => print_json(&json!({
            "initial_mean_cos_pos": report.initial_mean_cos_pos,
            "final_mean_cos_pos": report.final_mean_cos_pos,
            "epochs_run": report.history.len(),
            "early_stopped": report.early_stopped,
            "first_epoch_loss": first,
            "last_epoch_loss": last,
        })),
        Format::Csv => {
            println!("stage,mean_cos_pos,l_gha");
            println!("before,{:.6},", report.initial_mean_cos_pos);
            println!("first_epoch,,{first:.6}");
            println!("after,{:.6},{last:.6}", report.final_mean_cos_pos);
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let cfg = BenchConfig {
        mode: args.mode.into(),
        batch: args.batch,
        dim: args.dim,
        repetitions: args.repetitions,
        warmups: args.warmups,
        loss: args.loss.config(LossConfig::default().tau)?,
        seed: args.seed,
    };
    cfg.validate()?;
    ensure_dir(&args.out)?;
    let records = run_runtime_benchmark(&cfg)?;
    let scaling = match cfg.mode {
        BenchMode::ByModalities => Some(analyze_scaling(&records)?),
        BenchMode::ByNegatives => None,
    };
    let meta = Metadata::new("bench", args.seed)
        .with_json("config", &cfg)?
        .with("threads", "1 (both loss kinds run sequentially)")
        .with("timed", "forward loss value only; negative sampling in sampler_ms");
    output::write_bench(&args.out, &records, scaling.as_ref(), &meta)?;
    match args.format {
        Format::Json => print_json(&json!({ "records": records, "scaling": scaling })),
        Format::Csv => {
            println!("kind,n,k,mean_ms,std_ms,sampler_ms");
            for r in &records {
                println!("{},{},{},{:.3},{:.3},{:.3}", r.kind, r.n, r.k, r.mean_ms, r.std_ms, r.sampler_ms);
            }
            if let Some(s) = &scaling {
                println!(
                    "# GHA linear R^2 {:.4}; Dual linear/quadratic RSS {:.2}; Dual/GHA ratio {:.3} -> {:.3}",
                    s.gha_linear_r_squared, s.dual_residual_ratio, s.ratio_first, s.ratio_last
                );
            }
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure { code: 2, message: format!("cannot create {}: {e}", dir.display()) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Sim(a) => cmd_sim(a),
        Command::Checkgrad(a) => cmd_checkgrad(a),
        Command::Noise(a) => cmd_noise(a),
        Command::Align(a) => cmd_align(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("jgcs: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
