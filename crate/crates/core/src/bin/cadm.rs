use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cadm::datagen::{DriftSchedule, Shape};
use cadm::experiment::{self, parse_seeds, Dataset, ExperimentSpec, LearnerName};
use cadm::stream::StreamConfig;
use cadm::threshold::StdKind;
use cadm::Error;

#[derive(Parser)]
#[command(name = "cadm", version, about = "Real concept-drift detection on chunked streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector over one dataset for a list of seeds.
    Run(RunArgs),
    /// Run the detector over a labeled stream CSV.
    Replay {
        csv: PathBuf,
        #[command(flatten)]
        args: DetectorArgs,
        #[arg(long, default_value = "0", value_parser = seeds)]
        seeds: SeedList,
        #[arg(long, env = "CADM_OUT_DIR", default_value = "results")]
        out: PathBuf,
    },
    /// Write a synthetic stream to CSV.
    Export {
        #[arg(long, default_value = "line", value_parser = shape)]
        dataset: Shape,
        #[arg(long, default_value_t = 200)]
        chunk_size: usize,
        #[arg(long, default_value_t = 500)]
        chunks: usize,
        #[arg(long, default_value_t = 25)]
        drift_every: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// line, circle, square, doubleline or csv:<path>
    #[arg(long, default_value = "line", value_parser = dataset)]
    dataset: Dataset,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Seed list: `3`, `1,2,5` or `1..10`.
    #[arg(long, default_value = "1..10", value_parser = seeds)]
    seeds: SeedList,
    #[arg(long, env = "CADM_OUT_DIR", default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct DetectorArgs {
    #[arg(long, default_value = "gnb", value_parser = learner)]
    classifier: LearnerName,
    #[arg(long, default_value_t = 0.2)]
    label_ratio: f64,
    #[arg(long, default_value_t = 10)]
    window: usize,
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    /// Use the n−1 standard deviation in the threshold window.
    #[arg(long)]
    sample_std: bool,
    #[arg(long, default_value_t = 200)]
    chunk_size: usize,
    #[arg(long, default_value_t = 500)]
    chunks: usize,
    /// Drift period in chunks; 0 for a stationary stream.
    #[arg(long, default_value_t = 25)]
    drift_every: usize,
    #[arg(long, default_value_t = 3)]
    tolerance: usize,
    /// Disable the drift branch (no-detection baseline).
    #[arg(long)]
    no_detect: bool,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn seeds(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList).map_err(|e| e.to_string())
}

fn dataset(s: &str) -> Result<Dataset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn shape(s: &str) -> Result<Shape, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn learner(s: &str) -> Result<LearnerName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl DetectorArgs {
    fn into_spec(self, dataset: Dataset, seeds: Vec<u64>, out: PathBuf) -> ExperimentSpec {
        ExperimentSpec {
            dataset,
            classifier: self.classifier,
            label_ratio: self.label_ratio,
            window: self.window,
            k: self.k,
            std_kind: if self.sample_std { StdKind::Sample } else { StdKind::Population },
            chunk_size: self.chunk_size,
            chunks: self.chunks,
            drift_every: self.drift_every,
            tolerance: self.tolerance,
            seeds,
            out_dir: out,
            detect: !self.no_detect,
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(a) => {
            let spec = a.detector.into_spec(a.dataset, a.seeds.0, a.out);
            report(&spec, &experiment::run_experiment(&spec)?);
        }
        Command::Replay { csv, args, seeds, out } => {
            let spec = args.into_spec(Dataset::Csv(csv), seeds.0, out);
            report(&spec, &experiment::run_experiment(&spec)?);
        }
        Command::Export {
            dataset,
            chunk_size,
            chunks,
            drift_every,
            seed,
            out,
        } => {
            let schedule = match drift_every {
                0 => DriftSchedule::none(),
                p => DriftSchedule::every(p, chunks)?,
            };
            let config = StreamConfig {
                dimension: 2,
                classes: 2,
                chunk_size,
                chunks,
                seed,
            };
            experiment::export(dataset, schedule, config, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn report(spec: &ExperimentSpec, runs: &[experiment::SeedRun]) {
    for r in runs {
        println!(
            "seed {:>4}: detected {:>2}/{:<2} false alarms {:>2} accuracy {:.4}",
            r.seed,
            r.summary.detected(),
            r.summary.matches.len(),
            r.summary.false_alarms.len(),
            r.report.accuracy
        );
    }
    println!("results written to {}", spec.out_dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
