//! The frame-by-frame online loop: segment, score, refine poses, infer the
//! actor segment, update the box state and appearance model, and emit one
//! irrevocable record per frame. No step ever reads a frame past the one
//! being processed.

use std::collections::VecDeque;
use std::path::Path;
use std::time::Instant;

use crate::appearance::{AppearanceModel, AppearanceSample};
use crate::bbox::BoundingBox;
use crate::crf::{
    build_graph, infer_labels, map_update, segment_to_box, CrfParams, LocalizationState,
    PoseEvidence, StateCandidate,
};
use crate::error::Result;
use crate::ingest::{Scene, TrackRecord, TrackWriter};
use crate::ingest::track::RecordFlag;
use crate::pipeline::config::PipelineConfig;
use crate::pipeline::train::TrainedModels;
use crate::pose::{pose_likelihood, refine_poses, Pose, RefineContext};
use crate::predict::{
    encode_segment, ranking_score, sigmoid, BuiltinDescriptor, DpStream, SegmentFeature,
};
use crate::superpixel::{extract_features, slic_segment, SuperpixelMap};

const LIKELIHOOD_FLOOR: f64 = 1e-6;

struct OnlineState {
    maps: VecDeque<SuperpixelMap>,
    window_candidates: VecDeque<Vec<Pose>>,
    interval: VecDeque<(SuperpixelMap, BoundingBox)>,
    model: Option<AppearanceModel>,
    loc: Option<LocalizationState>,
    dp_streams: Vec<DpStream>,
    cumulative_words: Vec<f64>,
    held_confidences: Vec<f64>,
}

/// Mean appearance likelihood over superpixels whose centroids fall inside
/// the candidate box, floored so empty boxes stay usable.
fn box_likelihood(map: &SuperpixelMap, model: &AppearanceModel, bbox: &BoundingBox) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for sp in &map.superpixels {
        if bbox.contains(sp.centroid.0, sp.centroid.1) {
            sum += model.score_superpixel(sp);
            n += 1;
        }
    }
    if n == 0 {
        LIKELIHOOD_FLOOR
    } else {
        (sum / n as f64).max(LIKELIHOOD_FLOOR)
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values[values.len() / 2]
}

fn labeled_samples(
    map: &SuperpixelMap,
    fg_ids: &[u32],
) -> (Vec<AppearanceSample>, Vec<AppearanceSample>) {
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    let set: std::collections::BTreeSet<u32> = fg_ids.iter().copied().collect();
    for sp in &map.superpixels {
        if set.contains(&sp.id) {
            fg.push(AppearanceSample::from(sp));
        } else {
            bg.push(AppearanceSample::from(sp));
        }
    }
    (fg, bg)
}

fn split_by_box(
    map: &SuperpixelMap,
    bbox: &BoundingBox,
) -> (Vec<AppearanceSample>, Vec<AppearanceSample>) {
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for sp in &map.superpixels {
        if bbox.contains(sp.centroid.0, sp.centroid.1) {
            fg.push(AppearanceSample::from(sp));
        } else {
            bg.push(AppearanceSample::from(sp));
        }
    }
    (fg, bg)
}

/// Run the online localization and prediction loop over a loaded scene,
/// appending one record per frame to `out_track`. Returns per-frame wall
/// clock milliseconds.
pub fn run_online(
    scene: &Scene,
    models: &TrainedModels,
    config: &PipelineConfig,
    out_track: &Path,
) -> Result<Vec<f64>> {
    config.validate()?;
    let interval_frames = models.bank.interval_frames.max(1);
    let segment_count = models.bank.segment_count;
    let classes = models.bank.classes.clone();
    let mut writer = TrackWriter::create(out_track, &classes, &config.to_json_line())?;

    let width = scene.video.width();
    let height = scene.video.height();
    let crf_params = CrfParams {
        alpha_fg: config.alpha_fg,
        alpha_pose: config.alpha_pose,
        beta: config.beta,
        temporal_overlap: config.temporal_overlap,
    };

    let mut state = OnlineState {
        maps: VecDeque::new(),
        window_candidates: VecDeque::new(),
        interval: VecDeque::new(),
        model: None,
        loc: None,
        dp_streams: classes.iter().map(|_| DpStream::new(segment_count)).collect(),
        cumulative_words: vec![0.0; models.codebook.len()],
        held_confidences: vec![0.0; classes.len()],
    };
    let mut timings = Vec::with_capacity(scene.video.len() as usize);

    for t in 1..=scene.video.len() {
        let started = Instant::now();
        let frame = scene.video.frame(t);
        let prev_map = state.maps.back();
        let map = slic_segment(frame, config.superpixel_target, config.superpixel_compactness)
            .and_then(|m| {
                let mut m = m;
                m.frame_index = t;
                extract_features(m, frame, scene.flow(t), prev_map)
            });
        let mut map = match map {
            Ok(m) => m,
            Err(e) => {
                log::error!("frame {t}: segmentation failed: {e}");
                emit_propagated(&mut writer, &mut state, t, width, height, RecordFlag::Error)?;
                timings.push(started.elapsed().as_secs_f64() * 1e3);
                continue;
            }
        };
        map.frame_index = t;

        // maintain the trailing window
        state.maps.push_back(map);
        state
            .window_candidates
            .push_back(scene.poses.candidates(t).iter().map(Pose::from_candidate).collect());
        while state.maps.len() > config.window_frames + 1 {
            state.maps.pop_front();
            state.window_candidates.pop_front();
        }

        match process_frame(scene, models, config, &crf_params, &mut state, t) {
            Ok((bbox, segment_ids, flag)) => {
                let record = TrackRecord {
                    frame_index: t,
                    bbox,
                    segment_ids,
                    confidences: state.held_confidences.clone(),
                    flag,
                };
                writer.append(&record)?;
            }
            Err(e) => {
                log::error!("frame {t}: {e}; propagating previous state");
                emit_propagated(&mut writer, &mut state, t, width, height, RecordFlag::Error)?;
            }
        }
        let ms = started.elapsed().as_secs_f64() * 1e3;
        log::debug!("frame {t} processed in {ms:.2} ms");
        timings.push(ms);

        if t % interval_frames == 0 {
            update_confidences(models, &mut state, interval_frames, segment_count);
        }
    }
    Ok(timings)
}

fn emit_propagated(
    writer: &mut TrackWriter,
    state: &mut OnlineState,
    t: u32,
    width: u32,
    height: u32,
    flag: RecordFlag,
) -> Result<()> {
    let bbox = state
        .loc
        .as_ref()
        .map(|l| *l.current())
        .unwrap_or_else(|| fallback_box(width, height));
    writer.append(&TrackRecord {
        frame_index: t,
        bbox,
        segment_ids: Vec::new(),
        confidences: state.held_confidences.clone(),
        flag,
    })
}

fn fallback_box(width: u32, height: u32) -> BoundingBox {
    BoundingBox::new(
        width as f64 / 4.0,
        height as f64 / 4.0,
        width as f64 / 2.0,
        height as f64 / 2.0,
    )
}

fn process_frame(
    scene: &Scene,
    models: &TrainedModels,
    config: &PipelineConfig,
    crf_params: &CrfParams,
    state: &mut OnlineState,
    t: u32,
) -> Result<(BoundingBox, Vec<u32>, RecordFlag)> {
    let width = scene.video.width();
    let height = scene.video.height();
    let current_map_index = state.maps.len() - 1;

    // bootstrap the appearance model and the box state from the best raw
    // pose of the first frame
    if state.model.is_none() {
        let init_box = scene
            .poses
            .candidates(t)
            .iter()
            .max_by(|a, b| a.raw_score.partial_cmp(&b.raw_score).unwrap())
            .map(Pose::from_candidate)
            .and_then(|p| p.bbox(config.pose_box_margin))
            .map(|b| b.clamp_to(width, height))
            .unwrap_or_else(|| {
                log::warn!("frame {t}: no pose hypotheses; bootstrapping from a centered box");
                fallback_box(width, height)
            });
        let map = &state.maps[current_map_index];
        let (fg, bg) = split_by_box(map, &init_box);
        state.model = Some(AppearanceModel::fit(
            fg,
            bg,
            config.appearance_clusters,
            config.window_frames.max(1),
            config.seed,
        )?);
        state.loc = Some(LocalizationState::new(
            init_box,
            config.window_frames + 1,
        ));
    }
    let model_snapshot = state.model.as_ref().expect("model fitted").clone();

    // pose refinement over the window
    let maps_slice: Vec<SuperpixelMap> = state.maps.iter().cloned().collect();
    let candidates: Vec<Vec<Pose>> = state.window_candidates.iter().cloned().collect();
    let refine = refine_poses(
        &candidates,
        &RefineContext {
            maps: &maps_slice,
            model: &model_snapshot,
            smoothing: config.spline_smoothing,
            iterations: config.refine_iterations,
        },
    )?;

    let evidence: Vec<PoseEvidence> = refine
        .selected
        .iter()
        .zip(&refine.final_costs)
        .map(|(pose, &cost)| PoseEvidence {
            bbox: pose
                .bbox(config.pose_box_margin)
                .map(|b| b.clamp_to(width, height)),
            likelihood: pose_likelihood(cost),
        })
        .collect();

    // window CRF
    let flows: Vec<Option<&crate::ingest::FlowField>> = state
        .maps
        .iter()
        .map(|m| scene.flow(m.frame_index))
        .collect();
    let graph = build_graph(&maps_slice, &flows, &model_snapshot, &evidence, crf_params)?;
    let labels = infer_labels(&graph)?;
    let current_map = &maps_slice[current_map_index];
    let segment = segment_to_box(&labels, &graph, current_map_index, current_map);

    // candidate set for the state update
    let prev_state = state.loc.as_ref().expect("state initialized").clone();
    let prev_box = *prev_state.current();
    let mut flag = RecordFlag::Ok;
    let crf_box = match &segment {
        Some((b, _)) => *b,
        None => {
            flag = RecordFlag::Propagated;
            prev_box
        }
    };
    let mut candidate_boxes = vec![crf_box];
    let pose_box = evidence[current_map_index].bbox;
    if let Some(b) = pose_box {
        candidate_boxes.push(b);
    }
    if t > 1 {
        if let Some(flow_prev) = scene.flow(t - 1) {
            let mut us = Vec::new();
            let mut vs = Vec::new();
            let x0 = prev_box.x.max(0.0) as u32;
            let y0 = prev_box.y.max(0.0) as u32;
            let x1 = ((prev_box.x + prev_box.w) as u32).min(width);
            let y1 = ((prev_box.y + prev_box.h) as u32).min(height);
            for y in y0..y1 {
                for x in x0..x1 {
                    let (u, v) = flow_prev.at(x, y);
                    us.push(u);
                    vs.push(v);
                }
            }
            let shift = (median(&mut us), median(&mut vs));
            candidate_boxes.push(prev_box.translate(shift.0, shift.1).clamp_to(width, height));
        }
    }

    let pose_likelihood_now = evidence[current_map_index].likelihood;
    let candidates: Vec<StateCandidate> = candidate_boxes
        .iter()
        .map(|b| {
            // pose affinity: agreement with the refined pose box scales the
            // pose likelihood, floored to stay informative-free when absent
            let pose_term = match &pose_box {
                Some(pb) => pose_likelihood_now * (0.1 + 0.9 * b.iou(pb)),
                None => 1.0,
            };
            StateCandidate {
                bbox: *b,
                superpixel_likelihood: box_likelihood(current_map, &model_snapshot, b),
                pose_likelihood: pose_term.max(LIKELIHOOD_FLOOR),
            }
        })
        .collect();
    let (new_state, _) = map_update(&prev_state, &candidates, &config.transition_var)?;
    let emitted_box = *new_state.current();
    state.loc = Some(new_state);

    // appearance update from the CRF decision on the current frame
    let segment_ids = segment.map(|(_, ids)| ids).unwrap_or_default();
    if !segment_ids.is_empty() {
        let (fg, bg) = labeled_samples(current_map, &segment_ids);
        if let Some(model) = state.model.as_mut() {
            model.update(fg, bg)?;
        }
    }

    // interval buffer for prediction features
    state
        .interval
        .push_back((current_map.clone(), emitted_box));
    while state.interval.len() > models.bank.interval_frames.max(1) as usize {
        state.interval.pop_front();
    }
    // cumulative word counts inside the tube (structural predictor input)
    for sp in &current_map.superpixels {
        if emitted_box.contains(sp.centroid.0, sp.centroid.1) {
            let d = crate::predict::DescriptorExtractor::descriptor(&BuiltinDescriptor, sp);
            state.cumulative_words[models.codebook.quantize(&d)] += 1.0;
        }
    }

    Ok((emitted_box, segment_ids, flag))
}

fn update_confidences(
    models: &TrainedModels,
    state: &mut OnlineState,
    _interval_frames: u32,
    segment_count: usize,
) {
    let pairs: Vec<(&SuperpixelMap, BoundingBox)> =
        state.interval.iter().map(|(m, b)| (m, *b)).collect();
    let feature: SegmentFeature = encode_segment(&pairs, &models.codebook, &BuiltinDescriptor, 1);

    let mode = models.bank.mode;
    if mode.has_dp() {
        for (ci, class) in models.bank.classes.iter().enumerate() {
            if let Some(bank) = models.bank.dp.get(class) {
                let scores: Vec<f64> = (0..segment_count)
                    .map(|z| sigmoid(bank[z].decision(&feature.histogram)))
                    .collect();
                let conf = state.dp_streams[ci].push_interval(&scores);
                if !mode.has_ssvm() {
                    state.held_confidences[ci] = conf;
                }
            }
        }
    }
    if mode.has_ssvm() {
        let total: f64 = state.cumulative_words.iter().sum();
        let cumulative: Vec<f64> = if total > 0.0 {
            state.cumulative_words.iter().map(|v| v / total).collect()
        } else {
            state.cumulative_words.clone()
        };
        for (ci, class) in models.bank.classes.iter().enumerate() {
            if let Some(w) = models.bank.ssvm.get(class) {
                state.held_confidences[ci] = ranking_score(w, &cumulative);
            }
        }
    }
}
