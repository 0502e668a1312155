use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use retrack::config::RunConfig;
use retrack::error::{AppError, AppResult};
use retrack::io::{annotations, index_store};
use retrack::pipeline::{
    build_index_from_dirs, evaluate_clear, evaluate_single, single_scores, sweep,
    track_directory, SweepParam,
};
use retrack::report;
use retrack::synth::{generate, write_corpus, Scenario, SynthSpec};
use retrack_core::metrics::{mean_curves, threshold_grid};

/// Motion-pattern search-and-retrieval object tracker.
#[derive(Parser)]
#[command(name = "retrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalMode {
    Single,
    Clear,
}

#[derive(Subcommand)]
enum Command {
    /// Build a searchable index from annotated videos.
    Build {
        /// Directory with one sub-directory of frames per video.
        #[arg(long)]
        videos: PathBuf,
        /// Annotation CSV (video_id,track_id,frame,left,top,right,bottom).
        #[arg(long)]
        annotations: PathBuf,
        /// Output index directory.
        #[arg(long)]
        out: PathBuf,
        /// JSON run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Track objects in a query video using a built index.
    Track {
        #[arg(long)]
        index: PathBuf,
        /// Directory of query frames (PGM/PPM).
        #[arg(long)]
        query: PathBuf,
        /// Output track CSV.
        #[arg(long)]
        out: PathBuf,
        /// Directory of .flo files (frame i to i+1); otherwise a `flow/`
        /// sub-directory of the query is used, else flow is estimated.
        #[arg(long)]
        flows: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score a hypothesis track file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, value_enum)]
        mode: EvalMode,
        /// Output report JSON; single mode also writes precision-curve CSVs
        /// next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Track and evaluate across a list of parameter values.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values, e.g. `0.5,0.6,0.7,0.8,0.9,1`.
        #[arg(long)]
        values: String,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Output CSV of (value, overlap_precision, distance_precision).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        flows: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for gamma sub-sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic benchmark corpus with analytic flows and
    /// ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        scenario: Scenario,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Build {
            videos,
            annotations: annotations_path,
            out,
            config,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            let index = build_index_from_dirs(&videos, &annotations_path, &cfg)?;
            index_store::save_index(&index, &out)?;
            println!("indexed {} videos", index.videos.len());
            println!("fragment forward entries: {}", index.fragment_forward.len());
            println!("fragment inverse entries: {}", index.fragment_inverse.len());
            println!("flow fields: {}", index.flow_fields.len());
            println!("tracks: {}", index.track_forward.len());
            println!("fragment-track links: {}", index.track_inverse.len());
            Ok(())
        }
        Command::Track {
            index,
            query,
            out,
            flows,
            config,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            let index = index_store::load_index(&index)?;
            let tracks = track_directory(&index, &query, flows.as_deref(), &cfg)?;
            annotations::write_tracks(&out, &tracks)?;
            println!("wrote {} tracks to {}", tracks.len(), out.display());
            Ok(())
        }
        Command::Eval {
            gt,
            hyp,
            mode,
            out,
            config,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            let gt_tracks = annotations::tracks_from_rows(&annotations::read_annotations(&gt)?)?;
            let hyp_tracks = annotations::tracks_from_rows(&annotations::read_annotations(&hyp)?)?;
            match mode {
                EvalMode::Single => {
                    let rep = evaluate_single(&gt_tracks, &hyp_tracks, &cfg);
                    report::write_json(&out, &rep)?;
                    let scores = single_scores(&gt_tracks, &hyp_tracks);
                    let (overlap, distance) = mean_curves(
                        &scores,
                        &threshold_grid(0.0, 1.0, 20),
                        &threshold_grid(0.0, 50.0, 50),
                    );
                    report::write_curve(&out.with_extension("overlap.csv"), &overlap)?;
                    report::write_curve(&out.with_extension("distance.csv"), &distance)?;
                    println!(
                        "mean overlap {:.4}, overlap precision {:.4}, distance precision {:.4}",
                        rep.mean_overlap, rep.overlap_precision, rep.distance_precision
                    );
                }
                EvalMode::Clear => {
                    let rep = evaluate_clear(&gt_tracks, &hyp_tracks, &cfg)?;
                    report::write_json(&out, &rep)?;
                    println!("MOTA {:.4}, MOTP {:.4}", rep.mota, rep.motp);
                }
            }
            Ok(())
        }
        Command::Sweep {
            param,
            values,
            index,
            query,
            gt,
            out,
            flows,
            config,
            seed,
        } => {
            let cfg = RunConfig::load(config.as_deref())?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| AppError::input(format!("bad sweep value '{v}'")))
                })
                .collect::<AppResult<_>>()?;
            if values.is_empty() {
                return Err(AppError::input("empty sweep value list"));
            }
            let index = index_store::load_index(&index)?;
            let gt_tracks = annotations::tracks_from_rows(&annotations::read_annotations(&gt)?)?;
            let rows = sweep(
                param,
                &values,
                &index,
                &query,
                flows.as_deref(),
                &gt_tracks,
                &cfg,
                seed,
            )?;
            let mut csv = String::from("value,overlap_precision,distance_precision\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    r.value, r.overlap_precision, r.distance_precision
                ));
                println!(
                    "{} = {}: overlap precision {:.4}, distance precision {:.4}",
                    match param {
                        SweepParam::Gamma => "gamma",
                        SweepParam::Alpha => "alpha",
                    },
                    r.value,
                    r.overlap_precision,
                    r.distance_precision
                );
            }
            std::fs::write(&out, csv).map_err(|e| AppError::format(&out, e))?;
            Ok(())
        }
        Command::Synth { out, scenario, seed } => {
            let video = generate(&SynthSpec::scenario(scenario, seed));
            write_corpus(&out, &[video])?;
            println!("wrote corpus to {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
