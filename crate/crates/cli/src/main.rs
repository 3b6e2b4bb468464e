//! `formforge`: corpus preparation, descriptors, atlas rendering, single-image
//! decoding, and the HTTP server.
//!
//! Exit status is 0 on success, 2 on a usage error, 1 on any other failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "formforge", version, about = "Latent-space sketch workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalize a raw corpus to 512x512 white-on-black PNGs.
    Prep {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long = "out", value_name = "DIR")]
        output: PathBuf,
        /// Append a horizontal mirror of every image.
        #[arg(long)]
        mirror: bool,
        #[arg(long, default_value_t = 512)]
        size: usize,
    },
    /// Write a seeded synthetic corpus decoded from random latents.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long = "out", value_name = "DIR")]
        output: PathBuf,
    },
    /// Compute the 384-dimensional descriptor of every corpus image.
    Features {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long = "out", value_name = "CSV")]
        output: PathBuf,
    },
    /// Embed features with t-SNE, snap to a grid, and render a montage.
    Atlas {
        #[arg(long, value_name = "CSV")]
        features: PathBuf,
        #[arg(long = "out", value_name = "PNG")]
        output: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Tile size in pixels.
        #[arg(long, default_value_t = 64)]
        thumb: usize,
        /// Corpus directory to take images from, in manifest order, instead
        /// of the paths in the feature file.
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        /// Also write the point-to-cell assignment as CSV.
        #[arg(long, value_name = "CSV")]
        assignment: Option<PathBuf>,
    },
    /// Decode a latent file (512 lines, one value each) to a PNG.
    Generate {
        #[arg(long, value_name = "FILE")]
        latent: PathBuf,
        #[arg(long = "out", value_name = "PNG")]
        output: PathBuf,
        /// `procedural` or `external:<url>`.
        #[arg(long, default_value = "procedural")]
        decoder: String,
    },
    /// Replay a recorded cursor trace and print the final values.
    Replay {
        #[arg(long, value_name = "FILE")]
        trace: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Run the HTTP server.
    Serve {
        #[arg(long, default_value_t = formforge_server::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// `procedural` or `external:<url>`.
        #[arg(long, default_value = "procedural")]
        decoder: String,
        #[arg(long, value_name = "DIR", default_value = "formforge-store")]
        store: PathBuf,
        /// Directory of built UI assets served at `/`.
        #[arg(long, value_name = "DIR")]
        ui: Option<PathBuf>,
        /// Montage served at `/atlas.png`.
        #[arg(long, value_name = "PNG")]
        atlas: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
