use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use textattr::evaluation::LogBase;
use textattr::pipeline::{
    attribute_documents, emit_report, evaluate, ingest_annotations, load_data, load_models, run_experiment,
    run_stage, synth_records, train_models, write_highlights, ExperimentConfig, OutputLayout, SignalMode,
    SyntheticSpec,
};
use textattr::{Error, Result};

#[derive(Parser)]
#[command(name = "textattr", version, about = "Feature attribution robustness experiments for text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train D1 and D2 and derive the randomized-head model R.
    Train(ConfigArgs),
    /// Compute attributions with the trained checkpoints.
    Attribute(ConfigArgs),
    /// Compute metrics from checkpoints and attribution files and write reports.
    Evaluate(ConfigArgs),
    /// Run the whole pipeline.
    Run(ConfigArgs),
    /// Write a synthetic corpus as JSONL.
    Synth(SynthArgs),
    /// Write highlight pages from D1's attributions.
    Highlight(ConfigArgs),
    /// Mutual information and information transfer rate of annotation files.
    Itr(ItrArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override any config key, e.g. `--set evaluation.k_percent=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    k_percent: Option<f64>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    overlap_runs: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    ig_steps: Option<usize>,
    #[arg(long)]
    highlight_budget: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut overrides = Vec::new();
        let mut flag = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                overrides.push(format!("{key}={v}"));
            }
        };
        flag(
            "output_dir",
            self.output_dir.as_ref().map(|p| format!("{:?}", p.display().to_string())),
        );
        flag("evaluation.k_percent", self.k_percent.map(|v| format!("{v:?}")));
        flag("attribution.sample_size", self.sample_size.map(|v| v.to_string()));
        flag("attribution.overlap_runs", self.overlap_runs.map(|v| v.to_string()));
        flag("attribution.budget", self.budget.map(|v| v.to_string()));
        flag("attribution.ig_steps", self.ig_steps.map(|v| v.to_string()));
        flag("evaluation.highlight_budget", self.highlight_budget.map(|v| format!("{v:?}")));
        overrides.extend(self.overrides.iter().cloned());
        ExperimentConfig::load_with_overrides(&self.config, &overrides)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SentenceLevel,
    TokenLevel,
}

#[derive(Args)]
struct SynthArgs {
    /// Output JSONL path.
    #[arg(short, long)]
    out: PathBuf,
    /// Take the [synthetic] section of this config instead of the flags.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    documents: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::SentenceLevel)]
    mode: ModeArg,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct ItrArgs {
    /// CSV files with columns y,y_h,time_seconds.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Report in nats instead of bits.
    #[arg(long)]
    nats: bool,
}

fn prepare(args: &ConfigArgs) -> Result<(ExperimentConfig, OutputLayout)> {
    let config = args.load()?;
    let layout = OutputLayout::new(&config.output_dir);
    std::fs::create_dir_all(&layout.root).map_err(|e| Error::Io {
        path: layout.root.clone(),
        source: e,
    })?;
    Ok((config, layout))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = match &args.config {
        Some(path) => ExperimentConfig::load(path)?
            .synthetic
            .ok_or_else(|| Error::Config(format!("{} has no [synthetic] section", path.display())))?,
        None => SyntheticSpec {
            documents: args.documents,
            classes: args.classes,
            noise: args.noise,
            mode: match args.mode {
                ModeArg::SentenceLevel => SignalMode::SentenceLevel,
                ModeArg::TokenLevel => SignalMode::TokenLevel,
            },
            seed: args.seed,
            ..SyntheticSpec::default()
        },
    };
    let corpus = synth_records(&spec)?;
    let mut out = String::new();
    for r in &corpus.records {
        let value = serde_json::json!({ "id": r.id, "text": r.text, "label": r.label });
        out.push_str(&value.to_string());
        out.push('\n');
    }
    std::fs::write(&args.out, out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    println!(
        "wrote {} documents ({} labels flipped) to {}",
        corpus.records.len(),
        corpus.flipped(),
        args.out.display()
    );
    Ok(())
}

fn itr(args: &ItrArgs) -> Result<()> {
    let base = if args.nats { LogBase::Nats } else { LogBase::Bits };
    let unit = if args.nats { "nats" } else { "bits" };
    println!("file,records,rejected,mutual_information_{unit},mean_time_seconds,itr_{unit}_per_second");
    let mut rates = Vec::new();
    for file in &args.files {
        let s = ingest_annotations(file, base)?;
        for r in &s.rejected {
            eprintln!("{}:{}: rejected: {}", file.display(), r.line, r.reason);
        }
        println!(
            "{},{},{},{},{},{}",
            file.display(),
            s.records.len(),
            s.rejected.len(),
            s.mutual_information,
            s.mean_time_seconds,
            s.itr
        );
        rates.push(s.itr);
    }
    if rates.len() > 1 {
        let n = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / n;
        let std = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        println!("# itr across files: mean {mean} std {std}");
    }
    Ok(())
}

fn print_paths(label: &str, paths: &[PathBuf], root: &Path) {
    println!("{label}: {} files under {}", paths.len(), root.display());
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.load()?;
            let outcome = run_experiment(&config)?;
            print_paths("reports", &outcome.report_files, &outcome.layout.reports());
            print_paths("highlights", &outcome.highlight_files, &outcome.layout.highlights());
            for a in &outcome.results.agreement {
                println!("agreement {}: {:.2}%", a.pair, a.percent);
            }
            for e in &outcome.results.robustness {
                println!(
                    "{} {}: median J_s - J_t = {} ({})",
                    e.report.kind.as_str(),
                    e.method,
                    e.report.median_diff.map_or("n/a".into(), |m| m.to_string()),
                    e.report.kind.sign_convention()
                );
            }
            Ok(())
        }
        Command::Train(args) => {
            let (config, layout) = prepare(&args)?;
            let dataset = run_stage(&layout, "data", || load_data(&config))?;
            let models = run_stage(&layout, "train", || train_models(&config, &dataset, &layout))?;
            if let Some((r1, r2)) = &models.reports {
                println!("d1: lr {} test accuracy {:?}", r1.selected_learning_rate, r1.test_accuracy);
                println!("d2: lr {} test accuracy {:?}", r2.selected_learning_rate, r2.test_accuracy);
            }
            Ok(())
        }
        Command::Attribute(args) => {
            let (config, layout) = prepare(&args)?;
            let dataset = run_stage(&layout, "data", || load_data(&config))?;
            let models = run_stage(&layout, "load", || load_models(&layout, &dataset))?;
            let keys = run_stage(&layout, "attribute", || attribute_documents(&config, &dataset, &models, &layout))?;
            println!("wrote {} attribution files under {}", keys.len(), layout.attributions().display());
            Ok(())
        }
        Command::Evaluate(args) => {
            let (config, layout) = prepare(&args)?;
            let dataset = run_stage(&layout, "data", || load_data(&config))?;
            let models = run_stage(&layout, "load", || load_models(&layout, &dataset))?;
            let results = run_stage(&layout, "evaluate", || evaluate(&config, &dataset, &models, &layout))?;
            let files = run_stage(&layout, "report", || emit_report(&results, &layout.reports()))?;
            print_paths("reports", &files, &layout.reports());
            Ok(())
        }
        Command::Highlight(args) => {
            let (config, layout) = prepare(&args)?;
            let dataset = run_stage(&layout, "data", || load_data(&config))?;
            let files = run_stage(&layout, "highlight", || write_highlights(&config, &dataset, &layout))?;
            print_paths("highlights", &files, &layout.highlights());
            Ok(())
        }
        Command::Synth(args) => synth(&args),
        Command::Itr(args) => itr(&args),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
