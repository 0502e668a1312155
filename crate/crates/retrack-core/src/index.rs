//! Annotated-library construction: fragment forward/inverse tables, flow
//! magnitudes, track tables and sub-library sampling.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::{build_document, fragmentize, DocumentParams, Flip, FragmentId, ScaleConfig};
use crate::error::{Error, Result};
use crate::flow::{magnitude, timestep_average, FlowField, MagnitudeField};
use crate::geometry::BoundingBox;
use crate::math;

/// An identity with one bounding box per frame over a contiguous range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub track_id: String,
    pub video_id: String,
    pub flip: Flip,
    pub start_frame: u32,
    pub boxes: Vec<BoundingBox>,
}

impl Track {
    /// One past the last annotated frame.
    pub fn end_frame(&self) -> u32 {
        self.start_frame + self.boxes.len() as u32
    }

    pub fn box_at(&self, frame: u32) -> Option<BoundingBox> {
        if frame < self.start_frame || frame >= self.end_frame() {
            return None;
        }
        Some(self.boxes[(frame - self.start_frame) as usize])
    }

    /// Key under which the track is stored: unique across videos and
    /// flip variants.
    pub fn key(&self) -> String {
        alloc::format!("{}/{}~{}", self.video_id, self.track_id, self.flip.tag())
    }
}

/// One parsed row of an annotation file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRow {
    pub video_id: String,
    pub track_id: String,
    pub frame: u32,
    pub bbox: BoundingBox,
}

/// Flow fields of one library video plus its geometry; the flows are the
/// per-consecutive-frame-pair fields (`frame_count - 1` of them).
#[derive(Debug, Clone)]
pub struct LibrarySource {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub flows: Vec<FlowField>,
}

/// Geometry and temporal extent of an indexed video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoMeta {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub time_steps: u32,
}

/// Parameters the index was built with; query documents must reuse them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    pub cube_base: u32,
    /// Frames averaged into one time step.
    pub step: u32,
    /// Fragment length in time steps.
    pub window: u32,
    pub mag_threshold: f32,
    pub vote_threshold: f32,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams {
            cube_base: 20,
            step: 4,
            window: 8,
            mag_threshold: 1.0,
            vote_threshold: 0.10,
        }
    }
}

impl IndexParams {
    pub fn document_params(&self) -> DocumentParams {
        DocumentParams {
            cube_base: self.cube_base,
            mag_threshold: self.mag_threshold,
            vote_threshold: self.vote_threshold,
        }
    }
}

pub type TrackKey = String;
pub type FlowKey = (String, Flip, u32);

/// The five library tables plus build metadata. The forward and inverse
/// fragment tables are exact transposes; the track inverse maps fragments
/// to every track whose frame span intersects the fragment window.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryIndex {
    pub params: IndexParams,
    pub videos: BTreeMap<String, VideoMeta>,
    pub fragment_forward: BTreeMap<FragmentId, BTreeSet<(u32, u32)>>,
    pub fragment_inverse: BTreeMap<(u32, u32), BTreeSet<FragmentId>>,
    pub flow_fields: BTreeMap<FlowKey, MagnitudeField>,
    pub track_forward: BTreeMap<TrackKey, Track>,
    pub track_inverse: BTreeMap<FragmentId, BTreeSet<TrackKey>>,
}

impl LibraryIndex {
    pub fn empty(params: IndexParams) -> Self {
        LibraryIndex {
            params,
            videos: BTreeMap::new(),
            fragment_forward: BTreeMap::new(),
            fragment_inverse: BTreeMap::new(),
            flow_fields: BTreeMap::new(),
            track_forward: BTreeMap::new(),
            track_inverse: BTreeMap::new(),
        }
    }

    /// Inserts one fragment, keeping forward and inverse tables in sync.
    pub fn insert_fragment(&mut self, id: FragmentId, activations: BTreeSet<(u32, u32)>) {
        for &key in &activations {
            self.fragment_inverse
                .entry(key)
                .or_default()
                .insert(id.clone());
        }
        self.fragment_forward.insert(id, activations);
    }
}

/// Groups annotation rows into validated per-video tracks.
fn collect_tracks(
    annotations: &[AnnotationRow],
    videos: &BTreeMap<String, VideoMeta>,
) -> Result<Vec<Track>> {
    let mut grouped: BTreeMap<(String, String), Vec<&AnnotationRow>> = BTreeMap::new();
    for row in annotations {
        let Some(meta) = videos.get(&row.video_id) else {
            return Err(Error::Reference(alloc::format!(
                "annotation references unknown video '{}'",
                row.video_id
            )));
        };
        if row.frame >= meta.frame_count {
            return Err(Error::Reference(alloc::format!(
                "annotation for '{}' references frame {} of {}",
                row.video_id,
                row.frame,
                meta.frame_count
            )));
        }
        if !row.bbox.within_frame(meta.width, meta.height) {
            return Err(Error::InvalidAnnotation(alloc::format!(
                "box outside frame in video '{}' frame {}",
                row.video_id,
                row.frame
            )));
        }
        grouped
            .entry((row.video_id.clone(), row.track_id.clone()))
            .or_default()
            .push(row);
    }

    let mut tracks = Vec::new();
    for ((video_id, track_id), mut rows) in grouped {
        rows.sort_by_key(|r| r.frame);
        for pair in rows.windows(2) {
            if pair[1].frame != pair[0].frame + 1 {
                return Err(Error::InvalidAnnotation(alloc::format!(
                    "track '{track_id}' in '{video_id}' has a frame gap at {}",
                    pair[0].frame
                )));
            }
        }
        tracks.push(Track {
            track_id,
            video_id,
            flip: Flip::Identity,
            start_frame: rows[0].frame,
            boxes: rows.iter().map(|r| r.bbox).collect(),
        });
    }
    Ok(tracks)
}

/// Builds all five tables over the given videos, including horizontally and
/// vertically flipped variants of every video, its flows and its tracks.
/// Library documents are built at the original scale only.
pub fn build_library(
    sources: &[LibrarySource],
    annotations: &[AnnotationRow],
    params: &IndexParams,
) -> Result<LibraryIndex> {
    let mut index = LibraryIndex::empty(*params);

    for src in sources {
        if src.flows.len() + 1 != src.frame_count as usize {
            return Err(Error::Reference(alloc::format!(
                "video '{}' has {} flow fields for {} frames",
                src.video_id,
                src.flows.len(),
                src.frame_count
            )));
        }
        if src.width % params.cube_base != 0 || src.height % params.cube_base != 0 {
            return Err(Error::Geometry(alloc::format!(
                "video '{}' is {}x{}, not divisible by cube size {}",
                src.video_id,
                src.width,
                src.height,
                params.cube_base
            )));
        }
        let step_flows = timestep_average(&src.flows, params.step)?;
        index.videos.insert(
            src.video_id.clone(),
            VideoMeta {
                video_id: src.video_id.clone(),
                width: src.width,
                height: src.height,
                frame_count: src.frame_count,
                time_steps: step_flows.len() as u32,
            },
        );

        let full = ScaleConfig {
            config_id: 0,
            offset_x: 0,
            offset_y: 0,
            width: src.width,
            height: src.height,
            level: 1,
        };

        for flip in [Flip::Identity, Flip::Horizontal, Flip::Vertical] {
            let variant: Vec<FlowField> = match flip.axis() {
                None => step_flows.clone(),
                Some(axis) => step_flows.iter().map(|f| f.flipped(axis)).collect(),
            };
            let doc = build_document(&variant, &full, &params.document_params())?;
            for frag in fragmentize(&doc, &src.video_id, flip, params.window) {
                index.insert_fragment(frag.id, frag.activations);
            }
            for (t, field) in variant.iter().enumerate() {
                index
                    .flow_fields
                    .insert((src.video_id.clone(), flip, t as u32), magnitude(field));
            }
        }
    }

    let base_tracks = collect_tracks(annotations, &index.videos)?;
    for track in base_tracks {
        let meta = &index.videos[&track.video_id];
        for flip in [Flip::Identity, Flip::Horizontal, Flip::Vertical] {
            let variant = match flip.axis() {
                None => track.clone(),
                Some(axis) => Track {
                    flip,
                    boxes: track
                        .boxes
                        .iter()
                        .map(|b| b.flipped(axis, meta.width, meta.height))
                        .collect(),
                    ..track.clone()
                },
            };
            index.track_forward.insert(variant.key(), variant);
        }
    }

    // Fragment -> track links: any track of the same video and flip whose
    // frame span intersects the fragment's frame window.
    let step = params.step;
    let window_frames = params.window * step;
    for fragment_id in index.fragment_forward.keys() {
        let first = fragment_id.start * step;
        let last = first + window_frames;
        let mut linked = BTreeSet::new();
        for (key, track) in &index.track_forward {
            if track.video_id == fragment_id.video_id
                && track.flip == fragment_id.flip
                && track.start_frame < last
                && track.end_frame() > first
            {
                linked.insert(key.clone());
            }
        }
        if !linked.is_empty() {
            index.track_inverse.insert(fragment_id.clone(), linked);
        }
    }

    Ok(index)
}

/// Retains `ceil(gamma * videos)` videos chosen by a seeded shuffle and
/// filters every table consistently. Flip variants follow their video.
pub fn sample_sublibrary(index: &LibraryIndex, gamma: f64, seed: u64) -> Result<LibraryIndex> {
    if gamma <= 0.0 || gamma > 1.0 {
        return Err(Error::InvalidParam("gamma"));
    }
    let mut ids: Vec<&String> = index.videos.keys().collect();
    let keep_count = (math::ceil(gamma * ids.len() as f64) as usize).min(ids.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..ids.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        ids.swap(i, j);
    }
    let kept: BTreeSet<String> = ids.into_iter().take(keep_count).cloned().collect();

    let mut out = LibraryIndex::empty(index.params);
    out.videos = index
        .videos
        .iter()
        .filter(|(id, _)| kept.contains(*id))
        .map(|(id, meta)| (id.clone(), meta.clone()))
        .collect();
    for (id, activations) in &index.fragment_forward {
        if kept.contains(&id.video_id) {
            out.insert_fragment(id.clone(), activations.clone());
        }
    }
    out.flow_fields = index
        .flow_fields
        .iter()
        .filter(|((video, _, _), _)| kept.contains(video))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    out.track_forward = index
        .track_forward
        .iter()
        .filter(|(_, t)| kept.contains(&t.video_id))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    out.track_inverse = index
        .track_inverse
        .iter()
        .filter(|(id, _)| kept.contains(&id.video_id))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn square_flow_video(id: &str, frames: u32) -> LibrarySource {
        // 160x40 frame, one 20x20 block moving right 2px/frame.
        let mut flows = Vec::new();
        for i in 0..frames - 1 {
            let mut f = FlowField::zeros(160, 40);
            let x0 = 4 + 2 * i;
            for y in 10..30u32 {
                for x in x0..x0 + 20 {
                    if x < 160 {
                        f.u[(y * 160 + x) as usize] = 2.0;
                    }
                }
            }
            flows.push(f);
        }
        LibrarySource {
            video_id: id.to_string(),
            width: 160,
            height: 40,
            frame_count: frames,
            flows,
        }
    }

    fn annotation(video: &str, track: &str, frame: u32) -> AnnotationRow {
        let x0 = (4 + 2 * frame) as i32;
        AnnotationRow {
            video_id: video.to_string(),
            track_id: track.to_string(),
            frame,
            bbox: BoundingBox::new(x0, 10, x0 + 20, 30).unwrap(),
        }
    }

    fn small_params() -> IndexParams {
        IndexParams {
            cube_base: 20,
            step: 4,
            window: 8,
            ..IndexParams::default()
        }
    }

    #[test]
    fn one_video_one_window_gives_three_variants() {
        // 33 frames -> 32 flows -> 8 time steps -> exactly one fragment.
        let src = square_flow_video("v", 33);
        let rows: Vec<_> = (0..33).map(|f| annotation("v", "t0", f)).collect();
        let index = build_library(&[src], &rows, &small_params()).unwrap();
        assert_eq!(index.fragment_forward.len(), 3);
        for links in index.track_inverse.values() {
            assert_eq!(links.len(), 1);
        }
        assert_eq!(index.track_inverse.len(), 3);
        assert_eq!(index.track_forward.len(), 3);
    }

    #[test]
    fn zero_tracks_still_indexes_fragments() {
        let src = square_flow_video("v", 41);
        let index = build_library(&[src], &[], &small_params()).unwrap();
        assert!(index.track_forward.is_empty());
        assert!(index.track_inverse.is_empty());
        assert!(!index.fragment_forward.is_empty());
    }

    #[test]
    fn forward_and_inverse_tables_are_transposes() {
        let src = square_flow_video("v", 49);
        let rows: Vec<_> = (0..49).map(|f| annotation("v", "t0", f)).collect();
        let index = build_library(&[src], &rows, &small_params()).unwrap();

        // Exhaustive cross-scan in both directions.
        for (id, activations) in &index.fragment_forward {
            for key in activations {
                assert!(index.fragment_inverse[key].contains(id));
            }
        }
        for (key, ids) in &index.fragment_inverse {
            assert!(!ids.is_empty());
            for id in ids {
                assert!(index.fragment_forward[id].contains(key));
            }
        }
    }

    #[test]
    fn missing_video_reference_is_rejected() {
        let src = square_flow_video("v", 33);
        let rows = vec![annotation("other", "t0", 0)];
        let err = build_library(&[src], &rows, &small_params()).unwrap_err();
        assert!(matches!(err, Error::Reference(_)));
    }

    #[test]
    fn frame_gap_is_rejected() {
        let src = square_flow_video("v", 33);
        let rows = vec![annotation("v", "t0", 0), annotation("v", "t0", 2)];
        let err = build_library(&[src], &rows, &small_params()).unwrap_err();
        assert!(matches!(err, Error::InvalidAnnotation(_)));
    }

    #[test]
    fn flipped_tracks_mirror_boxes() {
        let src = square_flow_video("v", 33);
        let rows = vec![annotation("v", "t0", 0)];
        let index = build_library(&[src], &rows, &small_params()).unwrap();
        let original = &index.track_forward["v/t0~o"];
        let flipped = &index.track_forward["v/t0~h"];
        assert_eq!(flipped.boxes[0].left, 160 - original.boxes[0].right);
    }

    #[test]
    fn gamma_one_keeps_everything() {
        let a = square_flow_video("a", 33);
        let b = square_flow_video("b", 33);
        let index = build_library(&[a, b], &[], &small_params()).unwrap();
        let sampled = sample_sublibrary(&index, 1.0, 7).unwrap();
        assert_eq!(index, sampled);
    }

    #[test]
    fn gamma_half_keeps_half_deterministically() {
        let sources: Vec<_> = (0..10)
            .map(|i| square_flow_video(&alloc::format!("v{i}"), 33))
            .collect();
        let index = build_library(&sources, &[], &small_params()).unwrap();
        let s1 = sample_sublibrary(&index, 0.5, 42).unwrap();
        let s2 = sample_sublibrary(&index, 0.5, 42).unwrap();
        assert_eq!(s1.videos.len(), 5);
        assert_eq!(s1, s2);
        let s3 = sample_sublibrary(&index, 0.5, 43).unwrap();
        assert_eq!(s3.videos.len(), 5);
    }

    #[test]
    fn sampling_keeps_references_consistent() {
        let sources: Vec<_> = (0..4)
            .map(|i| square_flow_video(&alloc::format!("v{i}"), 41))
            .collect();
        let mut rows = Vec::new();
        for i in 0..4 {
            for f in 0..41 {
                rows.push(annotation(&alloc::format!("v{i}"), "t0", f));
            }
        }
        let index = build_library(&sources, &rows, &small_params()).unwrap();
        let sampled = sample_sublibrary(&index, 0.5, 3).unwrap();

        for id in sampled.fragment_forward.keys() {
            assert!(sampled.videos.contains_key(&id.video_id));
        }
        for ids in sampled.fragment_inverse.values() {
            for id in ids {
                assert!(sampled.fragment_forward.contains_key(id));
            }
        }
        for (id, tracks) in &sampled.track_inverse {
            assert!(sampled.fragment_forward.contains_key(id));
            for t in tracks {
                assert!(sampled.track_forward.contains_key(t));
            }
        }
        for (video, _, _) in sampled.flow_fields.keys() {
            assert!(sampled.videos.contains_key(video));
        }
    }
}
