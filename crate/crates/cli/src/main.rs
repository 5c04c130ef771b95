//! `lccf`: train and evaluate latent-constrained correlation filters.
//!
//! Exit codes: 2 for configuration errors, 3 for data errors, 4 for
//! numerical failures.

mod data;
mod detection;
mod failure;
mod run;
mod settings;
mod tracking;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lccf", version, about = "Latent-constrained correlation filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an MCCF or LC-LCF detector from a manifest.
    Train(detection::TrainArgs),
    /// Apply a trained model to every image of a manifest.
    Detect(detection::DetectArgs),
    /// Localization-rate curve for a detections CSV.
    EvalDetect(detection::EvalDetectArgs),
    /// Run KCF or LC-KCF over a sequence directory.
    Track(tracking::TrackArgs),
    /// Precision and success curves for a boxes CSV.
    EvalTrack(tracking::EvalTrackArgs),
    /// Noise or occlusion copies of a corpus with a merged manifest.
    Corrupt(data::CorruptArgs),
    /// Seeded synthetic detection corpus or tracking sequence.
    Synth(data::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => detection::train(a),
        Command::Detect(a) => detection::detect(a),
        Command::EvalDetect(a) => detection::eval_detect(a),
        Command::Track(a) => tracking::track(a),
        Command::EvalTrack(a) => tracking::eval_track(a),
        Command::Corrupt(a) => data::corrupt(a),
        Command::Synth(a) => data::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("lccf: {failure}");
            failure.exit_code()
        }
    }
}
