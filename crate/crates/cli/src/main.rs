//! Command-line surface: synthesize scenes, train models, run the online
//! localizer, evaluate tracks, and run the acceptance demo. Logs go to
//! stderr (level via STREAMLOC_LOG), data only to files under --out.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use streamloc_core::bbox::BoundingBox;
use streamloc_core::error::Error;
use streamloc_core::eval::{
    accuracy_vs_observation, auc_vs_threshold, observation_fractions, precision_recall,
    roc_at_overlap, synthesize_scene, Detection, GtInstance, SceneSpec, StreamedVideo,
};
use streamloc_core::ingest::{load_sequence, load_track, GroundTruth};
use streamloc_core::pipeline::{run_online, run_train, PipelineConfig, TrainedModels};

#[derive(Parser)]
#[command(
    name = "streamloc",
    about = "Online action localization and early prediction",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene dataset from a TOML scene spec
    Synthesize {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train codebook and classifiers from annotated sequence directories
    Train {
        /// directory containing one subdirectory per training video
        #[arg(long)]
        data: PathBuf,
        /// optional file of "subdir class" lines overriding ground-truth labels
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream a sequence through the online localizer, writing a track
    Localize {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score tracks against ground truth; writes CSV curves and a summary
    Evaluate {
        /// glob over track files; each track's parent directory names its video
        #[arg(long)]
        tracks: String,
        /// directory of scene directories holding the ground truth
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance suite end-to-end on generated scenes
    DemoAccept {
        /// working directory for generated data (temporary when omitted)
        #[arg(long)]
        workdir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new()
            .filter("STREAMLOC_LOG")
            .default_filter_or("error"),
    )
    .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Synthesize { spec, out, seed } => {
            let spec = SceneSpec::from_toml_file(&spec)?;
            synthesize_scene(&spec, &out, seed)?;
            log::info!("scene written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            data,
            labels,
            config,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let label_map = match labels {
                Some(path) => parse_labels(&path)?,
                None => BTreeMap::new(),
            };
            let dirs = sequence_dirs(&data)?;
            let models = run_train(&dirs, &label_map, &config)?;
            models.save(&out)?;
            config.to_toml_file(&out.join("config.toml"))?;
            log::info!("models written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Localize {
            data,
            models,
            config,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let models = TrainedModels::load(&models)?;
            let scene = load_sequence(&data)?;
            let timings = run_online(&scene, &models, &config, &out)?;
            let mean = timings.iter().sum::<f64>() / timings.len().max(1) as f64;
            log::info!(
                "track written to {} ({} frames, {mean:.1} ms/frame)",
                out.display(),
                timings.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate {
            tracks,
            gt,
            theta,
            out,
        } => {
            evaluate(&tracks, &gt, theta, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::DemoAccept { workdir } => {
            let (dir, _guard) = match workdir {
                Some(d) => {
                    std::fs::create_dir_all(&d)?;
                    (d, None)
                }
                None => {
                    let tmp = tempdir()?;
                    (tmp.clone(), Some(tmp))
                }
            };
            let results = streamloc_core::acceptance::run_all(&dir)?;
            streamloc_core::acceptance::print_table(&results);
            let all = results.iter().all(|r| r.passed);
            Ok(if all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn tempdir() -> std::io::Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("streamloc-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_toml_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn parse_labels(path: &Path) -> Result<BTreeMap<String, String>, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (dir, class) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(path, lineno + 1, "expected '<subdir> <class>'"))?;
        map.insert(dir.trim().to_string(), class.trim().to_string());
    }
    Ok(map)
}

fn sequence_dirs(data: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(data)
        .map_err(|e| Error::io(data, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.is_dir() && p.join("manifest.txt").exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no sequence directories (with manifest.txt) under {}",
            data.display()
        )));
    }
    Ok(dirs)
}

/// Minimal '*' glob over path components.
fn glob_tracks(pattern: &str) -> Result<Vec<PathBuf>, Error> {
    fn matches(name: &str, pat: &str) -> bool {
        // wildcard match with '*' only
        let parts: Vec<&str> = pat.split('*').collect();
        if parts.len() == 1 {
            return name == pat;
        }
        let mut rest = name;
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                continue;
            }
            match rest.find(part) {
                Some(pos) => {
                    if i == 0 && pos != 0 {
                        return false;
                    }
                    rest = &rest[pos + part.len()..];
                }
                None => return false,
            }
        }
        parts.last().map_or(true, |last| {
            last.is_empty() || name.ends_with(last)
        })
    }
    let pattern_path = Path::new(pattern);
    let mut stack: Vec<PathBuf> = vec![if pattern_path.is_absolute() {
        PathBuf::from("/")
    } else {
        PathBuf::from(".")
    }];
    for comp in pattern_path.components() {
        let comp = comp.as_os_str().to_string_lossy();
        if comp == "/" {
            continue;
        }
        let mut next = Vec::new();
        for base in &stack {
            if comp.contains('*') {
                if let Ok(entries) = std::fs::read_dir(base) {
                    for entry in entries.filter_map(|e| e.ok()) {
                        let name = entry.file_name().to_string_lossy().to_string();
                        if matches(&name, &comp) {
                            next.push(entry.path());
                        }
                    }
                }
            } else {
                let p = base.join(comp.as_ref());
                if p.exists() {
                    next.push(p);
                }
            }
        }
        stack = next;
    }
    stack.sort();
    if stack.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no track files match {pattern}"
        )));
    }
    Ok(stack)
}

fn evaluate(
    tracks_glob: &str,
    gt_dir: &Path,
    theta: f64,
    out: &Path,
) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let track_paths = glob_tracks(tracks_glob)?;

    let mut detections = Vec::new();
    let mut gt_instances = Vec::new();
    let mut streamed = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    for track_path in &track_paths {
        let video_id = track_path
            .parent()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "unknown".into());
        let track = load_track(track_path)?;
        if classes.is_empty() {
            classes = track.classes.clone();
        }
        let gt_path = gt_dir.join(&video_id).join("gt.txt");
        let gt = GroundTruth::load(&gt_path)?;

        let boxes: BTreeMap<u32, BoundingBox> = track
            .records
            .iter()
            .map(|r| (r.frame_index, r.bbox))
            .collect();
        let final_conf = track
            .records
            .last()
            .map(|r| r.confidences.clone())
            .unwrap_or_default();
        let (best, conf) = final_conf
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .map(|(i, &v)| (i, v))
            .unwrap_or((0, 0.0));
        detections.push(Detection {
            video_id: video_id.clone(),
            class_label: classes.get(best).cloned().unwrap_or_default(),
            confidence: conf,
            boxes,
        });
        gt_instances.extend(GtInstance::from_ground_truth(&video_id, &gt));
        streamed.push(StreamedVideo {
            video_id,
            true_class: gt.class_label.clone(),
            t_start: gt.t_start,
            t_end: gt.t_end,
            records: track
                .records
                .iter()
                .map(|r| (r.frame_index, r.confidences.clone()))
                .collect(),
        });
    }

    let roc = roc_at_overlap(&detections, &gt_instances, theta)?;
    roc.write_csv(&out.join(format!("roc_at_{theta}.csv")))?;
    let thetas: Vec<f64> = (1..=6).map(|i| i as f64 / 10.0).collect();
    let auc_curve = auc_vs_threshold(&detections, &gt_instances, &thetas)?;
    auc_curve.write_csv(&out.join("auc_vs_threshold.csv"))?;
    let (pr, ap) = precision_recall(&detections, &gt_instances, theta)?;
    pr.write_csv(&out.join(format!("pr_at_{theta}.csv")))?;
    let acc = accuracy_vs_observation(&streamed, &classes, &observation_fractions())?;
    acc.write_csv(&out.join("acc_vs_observation.csv"))?;

    let summary = serde_json::json!({
        "videos": streamed.len(),
        "theta": theta,
        "roc_auc": roc.auc(),
        "average_precision": ap,
        "auc_vs_threshold": auc_curve.points,
        "accuracy_full_observation": acc.points.last().map(|p| p.1),
    });
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )
    .map_err(|e| Error::io(out, e))?;
    log::info!("evaluation written to {}", out.display());
    Ok(())
}
