//! `gesturebot`: classify clinical speech, build annotated corpora, and
//! retarget human motion onto a 12-joint humanoid.
//!
//! The `route` subcommand is the whole pipeline in one call: classify a
//! sentence, then either mimic the speaker's own pose (consent and
//! instruction utterances) or play a generated gesture from mocap
//! (everything else). The remaining subcommands expose each stage for
//! scripting; exit codes are 1 usage, 2 bad input, 3 backend transport,
//! 4 safety violation, with a JSON error report on stderr.

mod config;
mod errors;
mod fsio;
mod ops;

use clap::{Args, Parser, Subcommand};
use config::Overrides;
use errors::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gesturebot",
    version,
    about = "Speech-act classification and human-to-robot motion retargeting"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify utterances as consent, instruction, or neither.
    #[command(subcommand)]
    Gsd(GsdCmd),
    /// Build an annotated conversation corpus from ASR output.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Retarget recorded human motion onto the robot.
    #[command(subcommand)]
    Retarget(RetargetCmd),
    /// Check, re-export, or render robot command documents.
    #[command(subcommand)]
    Traj(TrajCmd),
    /// Classify one sentence and run the matching motion path.
    Route(RouteArgs),
}

#[derive(Subcommand)]
enum GsdCmd {
    /// Label every sentence in a JSONL file.
    Classify {
        /// Sentences JSONL (one {"id", "text", ...} object per line).
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Labels JSONL destination (default: <out_dir>/labels.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score the configured model against a finalized dataset.
    Eval {
        /// Dataset JSONL with final labels.
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Full report JSON destination (default: <out_dir>/eval_report.json).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Also write the confusion matrix as CSV.
        #[arg(long, value_name = "FILE")]
        matrix_csv: Option<PathBuf>,
        /// Also render the confusion matrix as a PNG.
        #[arg(long, value_name = "FILE")]
        matrix_png: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Rebuild sentences from ASR segments and emit a clip cut list.
    Merge {
        /// ASR segments JSONL.
        #[arg(long, value_name = "FILE")]
        segments: PathBuf,
        /// Padding added around each clip, in seconds.
        #[arg(long, value_name = "SECONDS", default_value_t = 0.5)]
        padding: f64,
        /// Sentences JSONL destination (default: <out_dir>/sentences.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Cut-list CSV destination (default: <out_dir>/cut_list.csv).
        #[arg(long, value_name = "FILE")]
        cuts: Option<PathBuf>,
    },
    /// Run multi-model annotation with consensus over sentences.
    Annotate {
        /// Sentences JSONL from `corpus merge`.
        #[arg(long, value_name = "FILE")]
        sentences: PathBuf,
        /// Annotator model names (default: the configured model alone).
        #[arg(long, value_name = "NAME", value_delimiter = ',')]
        models: Vec<String>,
        /// Dataset JSONL destination (default: <out_dir>/dataset.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Failure list destination (default: <out_dir>/annotate_failures.jsonl).
        #[arg(long, value_name = "FILE")]
        failures: Option<PathBuf>,
        /// Review queue destination (default: <out_dir>/review_queue.jsonl).
        #[arg(long, value_name = "FILE")]
        queue: Option<PathBuf>,
    },
    /// Apply human review decisions back onto a dataset.
    Reconcile {
        /// Dataset JSONL from `corpus annotate`.
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Review queue JSONL with `final_label` and `reviewer` filled in.
        #[arg(long, value_name = "FILE")]
        review: PathBuf,
        /// Reconciled dataset destination (default: <out_dir>/reconciled.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Class counts, disagreement rate, and review bookkeeping.
    Stats {
        /// Dataset JSONL.
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Report JSON destination (default: <out_dir>/stats.json).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Select the audit sample: the longest fifth of Neither sentences.
    Audit {
        /// Dataset JSONL.
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Audit JSONL destination (default: <out_dir>/audit.jsonl).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RetargetCmd {
    /// Project a BVH mocap file onto the robot (generated-motion path).
    Bvh {
        /// BVH motion capture file.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Command JSON destination (default: <out_dir>/commands.json).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Project a pose-landmark recording onto the robot (mimic path).
    Pose {
        /// Landmark frames JSONL.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Command JSON destination (default: <out_dir>/commands.json).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TrajCmd {
    /// Report velocity violations in a command document.
    Check {
        /// Command JSON document.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
    },
    /// Re-export a command document, refusing unsafe trajectories.
    Export {
        /// Command JSON document.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Destination (default: <out_dir>/exported.json).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Render joint angles over time as a PNG.
    Preview {
        /// Command JSON document.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Destination (default: <out_dir>/trajectory.png).
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RouteArgs {
    /// The utterance to classify.
    #[arg(long, value_name = "TEXT")]
    sentence: String,
    /// Landmark frames JSONL for the mimic path.
    #[arg(long, value_name = "FILE")]
    landmarks: Option<PathBuf>,
    /// BVH file for the generated-motion path.
    #[arg(long, value_name = "FILE")]
    bvh: Option<PathBuf>,
    /// Command JSON destination (default: <out_dir>/route_commands.json).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = config::resolve(&cli.overrides)?;
    match cli.command {
        Cmd::Gsd(GsdCmd::Classify { input, out }) => ops::gsd_classify(&cfg, &input, out),
        Cmd::Gsd(GsdCmd::Eval {
            dataset,
            out,
            matrix_csv,
            matrix_png,
        }) => ops::gsd_eval(&cfg, &dataset, out, matrix_csv, matrix_png),
        Cmd::Corpus(CorpusCmd::Merge {
            segments,
            padding,
            out,
            cuts,
        }) => ops::corpus_merge(&cfg, &segments, padding, out, cuts),
        Cmd::Corpus(CorpusCmd::Annotate {
            sentences,
            models,
            out,
            failures,
            queue,
        }) => ops::corpus_annotate(&cfg, &sentences, &models, out, failures, queue),
        Cmd::Corpus(CorpusCmd::Reconcile {
            dataset,
            review,
            out,
        }) => ops::corpus_reconcile(&cfg, &dataset, &review, out),
        Cmd::Corpus(CorpusCmd::Stats { dataset, out }) => ops::corpus_stats(&cfg, &dataset, out),
        Cmd::Corpus(CorpusCmd::Audit { dataset, out }) => ops::corpus_audit(&cfg, &dataset, out),
        Cmd::Retarget(RetargetCmd::Bvh { input, out }) => ops::retarget_bvh_cmd(&cfg, &input, out),
        Cmd::Retarget(RetargetCmd::Pose { input, out }) => {
            ops::retarget_pose_cmd(&cfg, &input, out)
        }
        Cmd::Traj(TrajCmd::Check { input }) => ops::traj_check(&cfg, &input),
        Cmd::Traj(TrajCmd::Export { input, out }) => ops::traj_export(&cfg, &input, out),
        Cmd::Traj(TrajCmd::Preview { input, out }) => ops::traj_preview(&cfg, &input, out),
        Cmd::Route(args) => ops::route(&cfg, &args.sentence, args.landmarks, args.bvh, args.out),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            // Human-readable rendering first, then the JSON report as
            // the final stderr line for scripts.
            let rendered = e.render().to_string();
            eprint!("{rendered}");
            let first_line = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid usage")
                .trim()
                .to_string();
            let err = CliError::usage(first_line);
            eprintln!("{}", err.to_json());
            std::process::exit(err.kind.exit_code());
        }
    };

    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.kind.exit_code());
    }
}
