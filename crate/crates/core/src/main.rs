use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use layersep::bundle::Bundle;
use layersep::gdv::{self, GdvOptions};
use layersep::pipeline::{self, AnalysisConfig, GdvSplit, PipelineError, ReportFormat, SynthSpec};
use layersep::probes::ProbeConfig;
use layersep::stats::{PValueMethod, DEFAULT_PERMUTATIONS};

#[derive(Parser)]
#[command(name = "layersep", version, about = "Layer-wise probing and GDV separability analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probe accuracies, GDV, normality and Spearman correlations per layer.
    Analyze(AnalyzeArgs),
    /// GDV breakdown of a single layer.
    Gdv {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        layer: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Generate a synthetic bundle from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a bundle against its manifest.
    Validate {
        #[arg(long)]
        bundle: PathBuf,
    },
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    #[arg(long)]
    token_bundle: Option<PathBuf>,
    #[arg(long)]
    sentence_bundle: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    format: Vec<FormatArg>,
    /// Also write accuracy.svg, gdv.svg and correlation.svg.
    #[arg(long)]
    figures: bool,
    #[arg(long, default_value_t = 500)]
    lr_epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr_rate: f64,
    #[arg(long, default_value_t = 50)]
    svm_epochs: usize,
    /// L2 strength; defaults to 1/N of the training rows.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GdvSplitArg::All)]
    gdv_split: GdvSplitArg,
    #[arg(long, value_enum, default_value_t = PMethodArg::T)]
    p_method: PMethodArg,
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum GdvSplitArg {
    All,
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum PMethodArg {
    T,
    Mc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Analyze(args) => analyze(args),
        Command::Gdv { bundle, layer, workers } => {
            let bundle = Bundle::read(&bundle)?;
            let slice = bundle.slice_layer(layer)?;
            let b = gdv::gdv_with(&slice.cloud, &GdvOptions { workers, ..GdvOptions::default() })?;
            let out = json!({
                "layer": layer,
                "n": slice.cloud.len(),
                "dim": slice.cloud.dim(),
                "class_sizes": slice.cloud.class_sizes(),
                "per_class_intra": b.per_class_intra,
                "mean_intra": b.mean_intra,
                "mean_inter": b.mean_inter,
                "gdv": b.gdv,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Synth { spec, seed, out } => {
            let text = fs::read_to_string(&spec).map_err(|source| PipelineError::Io { path: spec.clone(), source })?;
            let spec: SynthSpec = serde_json::from_str(&text)?;
            let bundle = pipeline::write_synth_bundle(&spec, seed, &out)?;
            println!(
                "wrote {} ({} layers, {} rows, dim {})",
                out.display(),
                bundle.num_layers(),
                bundle.manifest.count,
                bundle.manifest.dim
            );
            Ok(())
        }
        Command::Validate { bundle: dir } => {
            let bundle = Bundle::read(&dir)?;
            let m = &bundle.manifest;
            println!(
                "ok: {} level={} layers={} dim={} count={}",
                dir.display(),
                m.level,
                m.num_layers,
                m.dim,
                m.count
            );
            Ok(())
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), PipelineError> {
    let config = AnalysisConfig {
        token_bundle: args.token_bundle,
        sentence_bundle: args.sentence_bundle,
        probes: ProbeConfig {
            lambda: args.lambda,
            lr_epochs: args.lr_epochs,
            lr_learning_rate: args.lr_rate,
            svm_epochs: args.svm_epochs,
            seed: args.seed,
        },
        gdv_split: match args.gdv_split {
            GdvSplitArg::All => GdvSplit::All,
            GdvSplitArg::Train => GdvSplit::Train,
            GdvSplitArg::Test => GdvSplit::Test,
        },
        p_method: match args.p_method {
            PMethodArg::T => PValueMethod::TApprox,
            PMethodArg::Mc => PValueMethod::MonteCarlo {
                permutations: args.permutations,
                seed: args.seed,
            },
        },
        workers: args.workers,
    };
    let report = pipeline::run_analysis(&config)?;

    fs::create_dir_all(&args.out).map_err(|source| PipelineError::Io { path: args.out.clone(), source })?;
    for format in args.format {
        let format = match format {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        };
        let path = args.out.join(format!("report.{}", format.extension()));
        pipeline::emit_report(&report, format, &path)?;
    }
    if args.figures {
        pipeline::emit_figures(&report, &args.out.join(""))?;
    }
    for c in &report.correlations {
        match (c.r_s, c.p_value) {
            (Some(r), Some(p)) => println!("{} {} vs gdv: r_s = {r}, p = {p}, n = {}", c.level, c.classifier.as_str(), c.n),
            _ => println!("{} {} vs gdv: undefined ({})", c.level, c.classifier.as_str(), c.error.as_deref().unwrap_or("")),
        }
    }
    Ok(())
}
