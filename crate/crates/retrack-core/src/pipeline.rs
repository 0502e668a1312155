//! End-to-end query tracking: retrieval, transfer, warping, suppression,
//! association and smoothing over in-memory inputs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::assoc::{link_tracks, smooth_tracks, AssociationParams};
use crate::document::{multiscale_configs, Flip};
use crate::error::{Error, Result};
use crate::flow::{magnitude, timestep_average, FlowField, MagnitudeField};
use crate::frame::Frame;
use crate::index::{LibraryIndex, Track};
use crate::math;
use crate::retrieval::{query_video, RetrievalParams};
use crate::transfer::{nms, resample_magnitude, transfer_boxes, warp_box, CandidateBox, WarpParams};

/// Everything the query side of the tracker can be tuned with. Document
/// parameters are not here: they come from the index so query documents
/// stay comparable with the library.
#[derive(Debug, Clone, Copy)]
pub struct TrackerConfig {
    pub retrieval: RetrievalParams,
    pub warp: WarpParams,
    pub nms_iou: f64,
    pub association: AssociationParams,
    pub smooth_half_window: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            retrieval: RetrievalParams::default(),
            warp: WarpParams::default(),
            nms_iou: 0.5,
            association: AssociationParams::default(),
            smooth_half_window: 2,
        }
    }
}

/// A query video in memory: RGB frames plus the per-consecutive-pair flow
/// fields (`frames.len() - 1` of them).
pub struct QueryInput<'a> {
    pub video_id: &'a str,
    pub frames: &'a [Frame],
    pub flows: &'a [FlowField],
}

/// Key identifying one warp-equivalent group of candidates: same query
/// frame and box, same source magnitudes and mapping. Duplicates produced
/// by overlapping query fragments are warped once.
type WarpGroup = (crate::geometry::BoundingBox, String, Flip, u32, u8, String);

fn validate_input(input: &QueryInput<'_>) -> Result<()> {
    if input.frames.len() < 2 {
        return Err(Error::EmptyInput);
    }
    if input.flows.len() + 1 != input.frames.len() {
        return Err(Error::DimensionMismatch {
            expected: (input.frames.len() as u32 - 1, 1),
            found: (input.flows.len() as u32, 1),
        });
    }
    Ok(())
}

/// Retrieval, transfer, warping and suppression: the per-frame surviving
/// boxes before any identity linking. Index `f` of the result corresponds
/// to query frame `f`.
pub fn detect_boxes(
    input: &QueryInput<'_>,
    index: &LibraryIndex,
    config: &TrackerConfig,
) -> Result<Vec<Vec<CandidateBox>>> {
    validate_input(input)?;
    let width = input.frames[0].width();
    let height = input.frames[0].height();

    let matches = query_video(input.video_id, input.flows, index, &config.retrieval)?;
    let configs = multiscale_configs(width, height);

    let step_flows = timestep_average(input.flows, index.params.step)?;
    let step_mags: Vec<MagnitudeField> = step_flows.iter().map(magnitude).collect();

    // Pool transferred boxes per frame, de-duplicated per warp group.
    let mut per_frame: BTreeMap<u32, BTreeMap<WarpGroup, CandidateBox>> = BTreeMap::new();
    for m in &matches {
        for candidate in transfer_boxes(&m.result, index, &m.config) {
            let group: WarpGroup = (
                candidate.bbox,
                candidate.source_fragment.video_id.clone(),
                candidate.source_fragment.flip,
                candidate.lib_step,
                candidate.config_id,
                candidate.source_track.clone(),
            );
            per_frame
                .entry(candidate.frame)
                .or_default()
                .entry(group)
                .or_insert(candidate);
        }
    }

    let step = index.params.step;
    let mut detections: Vec<Vec<CandidateBox>> = alloc::vec![Vec::new(); input.frames.len()];
    for (&frame, groups) in &per_frame {
        let query_mag = &step_mags[(frame / step) as usize];
        // Library magnitudes resampled into query coordinates, shared by
        // every candidate of this frame with the same source and mapping.
        let mut resampled: BTreeMap<(String, Flip, u32, u8), MagnitudeField> = BTreeMap::new();
        let mut warped: Vec<CandidateBox> = Vec::with_capacity(groups.len());
        for (group, candidate) in groups.iter() {
            let (bbox0, video, flip, lib_step, config_id, track) = group;
            let field = resampled
                .entry((video.clone(), *flip, *lib_step, *config_id))
                .or_insert_with(|| {
                    let lib_mag = &index.flow_fields[&(video.clone(), *flip, *lib_step)];
                    resample_magnitude(lib_mag, width, height, &configs[*config_id as usize])
                });
            // The RNG stream is keyed by the candidate's identity, not its
            // position in the pool, so results are independent of pooling
            // order and of unrelated candidates.
            let key = alloc::format!(
                "{},{},{},{},{}:{}:{}:{}:{}",
                bbox0.left,
                bbox0.top,
                bbox0.right,
                bbox0.bottom,
                video,
                flip.tag(),
                lib_step,
                config_id,
                track
            );
            let params = WarpParams {
                seed: math::derive_seed(config.warp.seed, frame, math::fnv1a(key.as_bytes())),
                ..config.warp
            };
            let bbox = warp_box(&candidate.bbox, &candidate.bbox, query_mag, field, &params);
            let mut c = candidate.clone();
            c.bbox = bbox;
            warped.push(c);
        }
        detections[frame as usize] = nms(warped, query_mag, config.nms_iou);
    }
    Ok(detections)
}

/// Runs the whole tracking pipeline for one query video.
pub fn track_query(
    input: &QueryInput<'_>,
    index: &LibraryIndex,
    config: &TrackerConfig,
) -> Result<Vec<Track>> {
    let detections = detect_boxes(input, index, config)?;
    let width = input.frames[0].width();
    let height = input.frames[0].height();
    let linked = link_tracks(input.video_id, input.frames, &detections, &config.association);
    Ok(smooth_tracks(
        &linked,
        config.smooth_half_window,
        width,
        height,
    ))
}
