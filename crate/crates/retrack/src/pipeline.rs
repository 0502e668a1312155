//! Command-level plumbing: loading corpora from disk, building and querying
//! indexes, evaluation and parameter sweeps.

use std::collections::BTreeMap;
use std::path::Path;


use retrack_core::flow::{compute_flow, FlowField};
use retrack_core::frame::Frame;
use retrack_core::index::{
    build_library, sample_sublibrary, AnnotationRow, LibraryIndex, LibrarySource, Track,
};
use retrack_core::metrics::{
    best_hypothesis, clear_mot, group_by_video, single_target_scores, ClearCounts,
    SingleTargetScores,
};
use retrack_core::pipeline::{track_query, QueryInput};

use crate::config::RunConfig;
use crate::error::{AppError, AppResult};
use crate::io::{annotations, flo, pnm};
use crate::report::{ClearReport, SingleReport, TrackReport};

/// Centered crop geometry making both dimensions divisible by `unit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropInfo {
    pub offset_x: u32,
    pub offset_y: u32,
    pub width: u32,
    pub height: u32,
}

pub fn crop_geometry(width: u32, height: u32, unit: u32) -> AppResult<CropInfo> {
    let w = width / unit * unit;
    let h = height / unit * unit;
    if w == 0 || h == 0 {
        return Err(AppError::input(format!(
            "frame {width}x{height} smaller than the minimum unit {unit}"
        )));
    }
    Ok(CropInfo {
        offset_x: (width - w) / 2,
        offset_y: (height - h) / 2,
        width: w,
        height: h,
    })
}

fn crop_frames(frames: &[Frame], crop: &CropInfo) -> Vec<Frame> {
    frames
        .iter()
        .map(|f| {
            f.crop(crop.offset_x, crop.offset_y, crop.width, crop.height)
                .expect("crop geometry fits the frame")
        })
        .collect()
}

fn crop_flows(flows: &[FlowField], crop: &CropInfo) -> Vec<FlowField> {
    flows
        .iter()
        .map(|f| {
            f.crop(crop.offset_x, crop.offset_y, crop.width, crop.height)
                .expect("crop geometry fits the field")
        })
        .collect()
}

/// Flow fields for a frame sequence: an explicit `.flo` directory wins, then
/// a `flow/` subdirectory next to the frames, then built-in estimation.
pub fn load_or_compute_flows(
    video_dir: &Path,
    explicit: Option<&Path>,
    frames: &[Frame],
    cfg: &RunConfig,
) -> AppResult<Vec<FlowField>> {
    let dir = match explicit {
        Some(d) => Some(d.to_path_buf()),
        None => {
            let side = video_dir.join("flow");
            side.is_dir().then_some(side)
        }
    };
    let flows = match dir {
        Some(d) => flo::load_flow_dir(&d)?,
        None => {
            let params = cfg.flow_params();
            let lumas: Vec<_> = frames.iter().map(|f| f.luma()).collect();
            lumas
                .windows(2)
                .map(|pair| compute_flow(&pair[0], &pair[1], &params))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    if flows.len() + 1 != frames.len() {
        return Err(AppError::input(format!(
            "{}: {} flow fields for {} frames",
            video_dir.display(),
            flows.len(),
            frames.len()
        )));
    }
    for f in &flows {
        if f.width != frames[0].width() || f.height != frames[0].height() {
            return Err(AppError::input(format!(
                "{}: flow field {}x{} does not match frames {}x{}",
                video_dir.display(),
                f.width,
                f.height,
                frames[0].width(),
                frames[0].height()
            )));
        }
    }
    Ok(flows)
}

fn video_dirs(videos_dir: &Path) -> AppResult<Vec<std::path::PathBuf>> {
    let mut dirs: Vec<_> = std::fs::read_dir(videos_dir)
        .map_err(|e| AppError::format(videos_dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(AppError::format(videos_dir, "no video directories"));
    }
    Ok(dirs)
}

/// Loads every video directory, ingests or computes flows, applies the
/// centered crop needed by the cube grid, and builds the index.
pub fn build_index_from_dirs(
    videos_dir: &Path,
    annotations_path: &Path,
    cfg: &RunConfig,
) -> AppResult<LibraryIndex> {
    let rows = annotations::read_annotations(annotations_path)?;
    let mut sources = Vec::new();
    let mut crops: BTreeMap<String, CropInfo> = BTreeMap::new();

    for dir in video_dirs(videos_dir)? {
        let seq = pnm::load_frames(&dir, cfg.fps)?;
        let crop = crop_geometry(seq.width(), seq.height(), cfg.cube_base)?;
        let frames = crop_frames(seq.frames(), &crop);
        let flows = crop_flows(
            &load_or_compute_flows(&dir, None, seq.frames(), cfg)?,
            &crop,
        );
        crops.insert(seq.video_id.clone(), crop);
        sources.push(LibrarySource {
            video_id: seq.video_id.clone(),
            width: crop.width,
            height: crop.height,
            frame_count: frames.len() as u32,
            flows,
        });
    }

    // Shift annotations into cropped coordinates; boxes that fall outside
    // the crop entirely are rejected as invalid for that geometry.
    let mut shifted = Vec::with_capacity(rows.len());
    for row in rows {
        let Some(crop) = crops.get(&row.video_id) else {
            return Err(AppError::Pipeline(format!(
                "dangling reference: annotation references unknown video '{}'",
                row.video_id
            )));
        };
        let moved = retrack_core::geometry::BoundingBox {
            left: row.bbox.left - crop.offset_x as i32,
            top: row.bbox.top - crop.offset_y as i32,
            right: row.bbox.right - crop.offset_x as i32,
            bottom: row.bbox.bottom - crop.offset_y as i32,
        };
        let clamped = moved.clamped(crop.width, crop.height).ok_or_else(|| {
            AppError::input(format!(
                "annotation for '{}' frame {} lies outside the cropped frame",
                row.video_id, row.frame
            ))
        })?;
        shifted.push(AnnotationRow {
            bbox: clamped,
            ..row
        });
    }

    Ok(build_library(&sources, &shifted, &cfg.index_params())?)
}

/// Runs the tracker on a query directory against a loaded index. Returned
/// tracks are in the original (uncropped) query coordinates.
pub fn track_directory(
    index: &LibraryIndex,
    query_dir: &Path,
    flows_dir: Option<&Path>,
    cfg: &RunConfig,
) -> AppResult<Vec<Track>> {
    let seq = pnm::load_frames(query_dir, cfg.fps)?;
    let unit = 4 * index.params.cube_base;
    let crop = crop_geometry(seq.width(), seq.height(), unit)?;
    let frames = crop_frames(seq.frames(), &crop);
    let flows = crop_flows(
        &load_or_compute_flows(query_dir, flows_dir, seq.frames(), cfg)?,
        &crop,
    );

    let input = QueryInput {
        video_id: &seq.video_id,
        frames: &frames,
        flows: &flows,
    };
    let tracks = track_query(&input, index, &cfg.tracker_config())?;

    Ok(tracks
        .into_iter()
        .map(|t| Track {
            boxes: t
                .boxes
                .iter()
                .map(|b| retrack_core::geometry::BoundingBox {
                    left: b.left + crop.offset_x as i32,
                    top: b.top + crop.offset_y as i32,
                    right: b.right + crop.offset_x as i32,
                    bottom: b.bottom + crop.offset_y as i32,
                })
                .collect(),
            ..t
        })
        .collect())
}

/// Per-ground-truth-track single-target evaluation: each ground truth is
/// scored against the hypothesis sharing the most frames in its video, and
/// the report averages over ground-truth tracks.
pub fn evaluate_single(gt: &[Track], hyp: &[Track], cfg: &RunConfig) -> SingleReport {
    let hyp_by_video = group_by_video(hyp);
    let empty: Vec<Track> = Vec::new();

    let mut reports = Vec::new();
    for gt_track in gt {
        let candidates = hyp_by_video.get(&gt_track.video_id).unwrap_or(&empty);
        let best = best_hypothesis(gt_track, candidates);
        let score = best.map(|h| {
            single_target_scores(gt_track, h).expect("best hypothesis shares frames")
        });
        reports.push(TrackReport {
            video_id: gt_track.video_id.clone(),
            gt_track: gt_track.track_id.clone(),
            hyp_track: best.map(|h| h.track_id.clone()),
            mean_overlap: score.as_ref().map_or(0.0, |s| s.mean_overlap()),
            mean_center_error: score.as_ref().and_then(|s| s.mean_center_error()),
            overlap_precision: score
                .as_ref()
                .map_or(0.0, |s| s.overlap_precision(cfg.overlap_threshold)),
            distance_precision: score
                .as_ref()
                .map_or(0.0, |s| s.distance_precision(cfg.distance_threshold)),
        });
    }

    let n = reports.len().max(1) as f64;
    let mean_overlap = reports.iter().map(|r| r.mean_overlap).sum::<f64>() / n;
    let overlap_precision = reports.iter().map(|r| r.overlap_precision).sum::<f64>() / n;
    let distance_precision = reports.iter().map(|r| r.distance_precision).sum::<f64>() / n;
    let errors: Vec<f64> = reports
        .iter()
        .filter_map(|r| r.mean_center_error)
        .collect();
    let mean_center_error = if errors.is_empty() {
        None
    } else {
        Some(errors.iter().sum::<f64>() / errors.len() as f64)
    };

    SingleReport {
        mode: "single",
        overlap_threshold: cfg.overlap_threshold,
        distance_threshold: cfg.distance_threshold,
        mean_overlap,
        mean_center_error,
        overlap_precision,
        distance_precision,
        tracks: reports,
    }
}

/// Per-frame single-target scores for every ground-truth track, used for
/// the mean precision curves.
pub fn single_scores(gt: &[Track], hyp: &[Track]) -> Vec<SingleTargetScores> {
    let hyp_by_video = group_by_video(hyp);
    let empty: Vec<Track> = Vec::new();
    gt.iter()
        .map(|g| {
            let candidates = hyp_by_video.get(&g.video_id).unwrap_or(&empty);
            match best_hypothesis(g, candidates) {
                Some(h) => single_target_scores(g, h).expect("best hypothesis shares frames"),
                // No hypothesis at all: every frame scores zero overlap.
                None => SingleTargetScores {
                    per_frame: (g.start_frame..g.end_frame())
                        .map(|frame| retrack_core::metrics::FrameScore {
                            frame,
                            overlap: 0.0,
                            center_error: None,
                        })
                        .collect(),
                },
            }
        })
        .collect()
}

/// Multi-object evaluation: error components accumulate across videos
/// before the final ratios.
pub fn evaluate_clear(gt: &[Track], hyp: &[Track], cfg: &RunConfig) -> AppResult<ClearReport> {
    let gt_by_video = group_by_video(gt);
    let hyp_by_video = group_by_video(hyp);
    let empty: Vec<Track> = Vec::new();
    let mut counts = ClearCounts::default();
    for (video, gt_tracks) in &gt_by_video {
        let hyp_tracks = hyp_by_video.get(video).unwrap_or(&empty);
        counts.accumulate(&clear_mot(gt_tracks, hyp_tracks, cfg.clear_iou)?);
    }
    if counts.gt_boxes == 0 {
        return Err(AppError::input("ground truth has no boxes".to_string()));
    }
    Ok(ClearReport {
        mode: "clear",
        match_threshold: cfg.clear_iou,
        mota: counts.mota(),
        motp: counts.motp(),
        gt_boxes: counts.gt_boxes,
        misses: counts.misses,
        false_positives: counts.false_positives,
        id_switches: counts.id_switches,
        matches: counts.matches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Gamma,
    Alpha,
}

/// One sweep row: parameter value plus the two headline precisions.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub value: f64,
    pub overlap_precision: f64,
    pub distance_precision: f64,
}

/// Re-runs track + evaluate per parameter value: sub-sampled library for
/// `gamma`, warp-penalty override for `alpha`.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    index: &LibraryIndex,
    query_dir: &Path,
    flows_dir: Option<&Path>,
    gt: &[Track],
    cfg: &RunConfig,
    seed: u64,
) -> AppResult<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let report = match param {
            SweepParam::Gamma => {
                let sub = sample_sublibrary(index, value, seed)?;
                let hyp = track_directory(&sub, query_dir, flows_dir, cfg)?;
                evaluate_single(gt, &hyp, cfg)
            }
            SweepParam::Alpha => {
                let mut tuned = cfg.clone();
                tuned.alpha = value;
                let hyp = track_directory(index, query_dir, flows_dir, &tuned)?;
                evaluate_single(gt, &hyp, &tuned)
            }
        };
        rows.push(SweepRow {
            value,
            overlap_precision: report.overlap_precision,
            distance_precision: report.distance_precision,
        });
    }
    Ok(rows)
}
