//! One function per subcommand. Each reads its inputs, runs the library
//! pipeline, writes artifacts atomically, and prints a short summary to
//! stdout. Artifacts and stdout carry no timestamps or timing, so a run
//! against fixtures is reproducible byte for byte.

use crate::config::PipelineConfig;
use crate::errors::CliError;
use crate::fsio::{atomic_write, read_file};
use gesturebot::bvh::{retarget_bvh, BvhDocument};
use gesturebot::corpus;
use gesturebot::gsd::{self, Label};
use gesturebot::llm::parallel_map;
use gesturebot::metrics::{self, eval_model};
use gesturebot::motion::{check_velocity, export_commands, import_commands, CommandDocument};
use gesturebot::pose::{retarget_pose, PoseSequence};
use gesturebot::viz;
use serde::Serialize;
use std::path::{Path, PathBuf};

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable row"));
        out.push('\n');
    }
    out
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text.into_bytes()
}

/// One labeled sentence, as written by `gsd classify`.
#[derive(Debug, Serialize)]
struct LabelRow<'a> {
    sentence_id: &'a str,
    label: Label,
    /// Whether this label routes to the mimic path.
    trigger: bool,
    reasoning: &'a str,
}

pub fn gsd_classify(
    cfg: &PipelineConfig,
    input: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sentences = corpus::parse_sentences(&read_file(input)?)
        .map_err(|e| CliError::input(format!("sentences `{}`: {e}", input.display())))?;
    let template = cfg.template()?;
    let backend = cfg.single_backend()?;

    let results = parallel_map(&sentences, cfg.concurrency, |_, s| {
        gsd::classify(backend.as_ref(), &template, &s.id, &s.text)
    });
    let mut classified = Vec::with_capacity(results.len());
    for result in results {
        classified.push(result?);
    }
    let rows: Vec<LabelRow> = classified
        .iter()
        .map(|c| LabelRow {
            sentence_id: &c.sentence_id,
            label: c.label,
            trigger: gsd::gesture_trigger(c.label),
            reasoning: &c.reasoning,
        })
        .collect();

    let out_path = cfg.out_path(out, "labels.jsonl");
    atomic_write(&out_path, jsonl(&rows).as_bytes())?;

    let count = |label: Label| rows.iter().filter(|r| r.label == label).count();
    println!(
        "{}",
        serde_json::json!({
            "sentences": rows.len(),
            "consent": count(Label::Consent),
            "instruction": count(Label::Instruction),
            "neither": count(Label::Neither),
            "unknown": count(Label::Unknown),
            "output": out_path,
        })
    );
    Ok(())
}

pub fn gsd_eval(
    cfg: &PipelineConfig,
    dataset: &Path,
    out: Option<PathBuf>,
    matrix_csv: Option<PathBuf>,
    matrix_png: Option<PathBuf>,
) -> Result<(), CliError> {
    let records = corpus::parse_dataset(&read_file(dataset)?)
        .map_err(|e| CliError::input(format!("dataset `{}`: {e}", dataset.display())))?;
    let template = cfg.template()?;
    let backend = cfg.single_backend()?;

    let evaluation = eval_model(&records, backend.as_ref(), &template, cfg.concurrency)?;

    let out_path = cfg.out_path(out, "eval_report.json");
    atomic_write(&out_path, &pretty(&evaluation))?;
    if let Some(csv_path) = matrix_csv {
        atomic_write(&csv_path, evaluation.matrix.to_csv().as_bytes())?;
    }
    if let Some(png_path) = matrix_png {
        let image = viz::plot_confusion(&evaluation.matrix);
        atomic_write(&png_path, &viz::encode_png(&image))?;
    }

    print!("{}", metrics::render_matrix(&evaluation.matrix));
    println!();
    print!("{}", metrics::render_report(&evaluation.report));
    if !evaluation.valid {
        log::warn!(
            "{} of {} classifications failed; the report is marked invalid",
            evaluation.failures,
            records.len()
        );
    }
    println!("report: {}", out_path.display());
    Ok(())
}

pub fn corpus_merge(
    cfg: &PipelineConfig,
    segments_path: &Path,
    padding: f64,
    out: Option<PathBuf>,
    cuts: Option<PathBuf>,
) -> Result<(), CliError> {
    let segments = corpus::parse_segments(&read_file(segments_path)?)
        .map_err(|e| CliError::input(format!("segments `{}`: {e}", segments_path.display())))?;
    let sentences = corpus::merge_segments(&segments)?;
    let clips = corpus::clip_boundaries(&sentences, padding)?;

    let out_path = cfg.out_path(out, "sentences.jsonl");
    let cuts_path = cfg.out_path(cuts, "cut_list.csv");
    atomic_write(&out_path, corpus::write_sentences(&sentences).as_bytes())?;
    atomic_write(&cuts_path, corpus::write_cut_list(&clips).as_bytes())?;

    println!(
        "{}",
        serde_json::json!({
            "segments": segments.len(),
            "sentences": sentences.len(),
            "fragments": sentences.iter().filter(|s| s.fragment).count(),
            "output": out_path,
            "cuts": cuts_path,
        })
    );
    Ok(())
}

pub fn corpus_annotate(
    cfg: &PipelineConfig,
    sentences_path: &Path,
    models: &[String],
    out: Option<PathBuf>,
    failures_out: Option<PathBuf>,
    queue_out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sentences = corpus::parse_sentences(&read_file(sentences_path)?)
        .map_err(|e| CliError::input(format!("sentences `{}`: {e}", sentences_path.display())))?;

    let models: Vec<String> = if models.is_empty() {
        vec![cfg.backend.model_name.clone()]
    } else {
        models.to_vec()
    };
    for (i, model) in models.iter().enumerate() {
        if models[..i].contains(model) {
            return Err(CliError::usage(format!(
                "annotator model `{model}` is listed twice; votes must come from distinct annotators"
            )));
        }
    }
    let template = cfg.template()?;
    let backends = cfg.annotator_backends(&models)?;
    let named: Vec<(&str, &dyn gesturebot::llm::Backend)> = backends
        .iter()
        .map(|(name, backend)| (name.as_str(), backend.as_ref()))
        .collect();

    let run = corpus::annotate_corpus(&sentences, &named, &template, cfg.concurrency)?;
    let dataset = corpus::build_dataset(&sentences, &run.records)?;
    let queue = corpus::review_queue(&dataset);

    let out_path = cfg.out_path(out, "dataset.jsonl");
    let failures_path = cfg.out_path(failures_out, "annotate_failures.jsonl");
    let queue_path = cfg.out_path(queue_out, "review_queue.jsonl");
    atomic_write(&out_path, corpus::write_dataset(&dataset).as_bytes())?;
    atomic_write(&failures_path, corpus::write_failures(&run.failures).as_bytes())?;
    atomic_write(&queue_path, corpus::write_review_queue(&queue).as_bytes())?;

    println!(
        "{}",
        serde_json::json!({
            "sentences": sentences.len(),
            "annotators": models,
            "records": run.records.len(),
            "failures": run.failures.len(),
            "needs_review": queue.len(),
            "dataset": out_path,
            "failures_file": failures_path,
            "review_queue": queue_path,
        })
    );
    Ok(())
}

pub fn corpus_reconcile(
    cfg: &PipelineConfig,
    dataset_path: &Path,
    review_path: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut dataset = corpus::parse_dataset(&read_file(dataset_path)?)
        .map_err(|e| CliError::input(format!("dataset `{}`: {e}", dataset_path.display())))?;
    let review = corpus::parse_review_queue(&read_file(review_path)?)
        .map_err(|e| CliError::input(format!("review file `{}`: {e}", review_path.display())))?;

    let summary = corpus::reconcile(&mut dataset, &review)?;
    let out_path = cfg.out_path(out, "reconciled.jsonl");
    atomic_write(&out_path, corpus::write_dataset(&dataset).as_bytes())?;

    println!(
        "{}",
        serde_json::json!({
            "applied": summary.applied,
            "pending": summary.pending,
            "overridden": summary.overridden,
            "output": out_path,
        })
    );
    Ok(())
}

pub fn corpus_stats(
    cfg: &PipelineConfig,
    dataset_path: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let dataset = corpus::parse_dataset(&read_file(dataset_path)?)
        .map_err(|e| CliError::input(format!("dataset `{}`: {e}", dataset_path.display())))?;
    let report = corpus::stats_report(&dataset)?;

    let out_path = cfg.out_path(out, "stats.json");
    atomic_write(&out_path, &pretty(&report))?;
    println!("{}", serde_json::to_string(&report).expect("serializable report"));
    Ok(())
}

/// One sentence picked for manual audit.
#[derive(Debug, Serialize)]
struct AuditRow<'a> {
    sentence_id: &'a str,
    text: &'a str,
}

pub fn corpus_audit(
    cfg: &PipelineConfig,
    dataset_path: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let dataset = corpus::parse_dataset(&read_file(dataset_path)?)
        .map_err(|e| CliError::input(format!("dataset `{}`: {e}", dataset_path.display())))?;
    let selected = corpus::audit_selection(&dataset);
    let rows: Vec<AuditRow> = selected
        .iter()
        .map(|id| {
            let record = dataset
                .iter()
                .find(|r| &r.sentence.id == id)
                .expect("selection comes from this dataset");
            AuditRow {
                sentence_id: &record.sentence.id,
                text: &record.sentence.text,
            }
        })
        .collect();

    let pool = dataset
        .iter()
        .filter(|r| r.outcome.final_label == Some(Label::Neither))
        .count();
    let out_path = cfg.out_path(out, "audit.jsonl");
    atomic_write(&out_path, jsonl(&rows).as_bytes())?;
    println!(
        "{}",
        serde_json::json!({
            "selected": rows.len(),
            "pool": pool,
            "output": out_path,
        })
    );
    Ok(())
}

fn write_commands(
    cfg: &PipelineConfig,
    traj: &gesturebot::JointTrajectory,
    profile: &gesturebot::RobotProfile,
    out: Option<PathBuf>,
    default_name: &str,
) -> Result<(PathBuf, CommandDocument), CliError> {
    let doc = export_commands(traj, profile)?;
    let out_path = cfg.out_path(out, default_name);
    atomic_write(&out_path, &pretty(&doc))?;
    Ok((out_path, doc))
}

pub fn retarget_bvh_cmd(
    cfg: &PipelineConfig,
    input: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let doc = BvhDocument::parse(&read_file(input)?)
        .map_err(|e| CliError::input(format!("bvh `{}`: {e}", input.display())))?;
    let mapping = cfg.mapping()?;
    let profile = cfg.profile()?;
    let traj = retarget_bvh(&doc, &mapping, &profile, cfg.downsample_factor)?;
    let (out_path, _) = write_commands(cfg, &traj, &profile, out, "commands.json")?;
    println!(
        "{}",
        serde_json::json!({
            "source_frames": doc.frame_count(),
            "keyframes": traj.len(),
            "duration": traj.duration(),
            "downsample_factor": cfg.downsample_factor,
            "output": out_path,
        })
    );
    Ok(())
}

pub fn retarget_pose_cmd(
    cfg: &PipelineConfig,
    input: &Path,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let seq = PoseSequence::parse_jsonl(&read_file(input)?)
        .map_err(|e| CliError::input(format!("landmarks `{}`: {e}", input.display())))?;
    let profile = cfg.profile()?;
    let traj = retarget_pose(&seq, &profile, cfg.speed_scale)?;
    let (out_path, _) = write_commands(cfg, &traj, &profile, out, "commands.json")?;
    println!(
        "{}",
        serde_json::json!({
            "source_frames": seq.len(),
            "keyframes": traj.len(),
            "duration": traj.duration(),
            "speed_scale": cfg.speed_scale,
            "output": out_path,
        })
    );
    Ok(())
}

fn load_commands(cfg: &PipelineConfig, input: &Path) -> Result<(gesturebot::JointTrajectory, gesturebot::RobotProfile), CliError> {
    let doc: CommandDocument = serde_json::from_str(&read_file(input)?)
        .map_err(|e| CliError::input(format!("command document `{}`: {e}", input.display())))?;
    let profile = cfg.profile()?;
    let traj = import_commands(&doc, &profile)?;
    Ok((traj, profile))
}

pub fn traj_check(cfg: &PipelineConfig, input: &Path) -> Result<(), CliError> {
    let (traj, profile) = load_commands(cfg, input)?;
    let violations = check_velocity(&traj, &profile)?;
    println!(
        "{}",
        serde_json::json!({
            "frames": traj.len(),
            "duration": traj.duration(),
            "violations": violations,
        })
    );
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::safety(format!(
            "{} velocity violation(s); first: {}",
            violations.len(),
            violations[0]
        )))
    }
}

pub fn traj_export(cfg: &PipelineConfig, input: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let (traj, profile) = load_commands(cfg, input)?;
    let (out_path, doc) = write_commands(cfg, &traj, &profile, out, "exported.json")?;
    println!(
        "{}",
        serde_json::json!({
            "frames": doc.commands.len(),
            "duration": traj.duration(),
            "output": out_path,
        })
    );
    Ok(())
}

pub fn traj_preview(cfg: &PipelineConfig, input: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let (traj, profile) = load_commands(cfg, input)?;
    let image = viz::plot_trajectory(&traj, &profile);
    let out_path = cfg.out_path(out, "trajectory.png");
    atomic_write(&out_path, &viz::encode_png(&image))?;
    println!(
        "{}",
        serde_json::json!({
            "frames": traj.len(),
            "width": image.width(),
            "height": image.height(),
            "output": out_path,
        })
    );
    Ok(())
}

pub fn route(
    cfg: &PipelineConfig,
    sentence: &str,
    landmarks: Option<PathBuf>,
    bvh_path: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let template = cfg.template()?;
    let backend = cfg.single_backend()?;
    let classified = gsd::classify(backend.as_ref(), &template, "route", sentence)?;
    let profile = cfg.profile()?;

    let (traj, provenance) = if gsd::gesture_trigger(classified.label) {
        let path = landmarks.ok_or_else(|| {
            CliError::input(format!(
                "label {} routes to the mimic path, which needs --landmarks",
                classified.label
            ))
        })?;
        let seq = PoseSequence::parse_jsonl(&read_file(&path)?)
            .map_err(|e| CliError::input(format!("landmarks `{}`: {e}", path.display())))?;
        (retarget_pose(&seq, &profile, cfg.speed_scale)?, "mimic")
    } else {
        let path = bvh_path.ok_or_else(|| {
            CliError::input(format!(
                "label {} routes to the generated-motion path, which needs --bvh",
                classified.label
            ))
        })?;
        let doc = BvhDocument::parse(&read_file(&path)?)
            .map_err(|e| CliError::input(format!("bvh `{}`: {e}", path.display())))?;
        let mapping = cfg.mapping()?;
        (
            retarget_bvh(&doc, &mapping, &profile, cfg.downsample_factor)?,
            "generated",
        )
    };

    let (out_path, doc) = write_commands(cfg, &traj, &profile, out, "route_commands.json")?;
    println!(
        "{}",
        serde_json::json!({
            "label": classified.label,
            "provenance": provenance,
            "frames": doc.commands.len(),
            "duration": traj.duration(),
            "output": out_path,
        })
    );
    Ok(())
}
