//! Annotation transfer, flow-histogram edge warping and non-maximal
//! suppression of candidate boxes.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::{FragmentId, ScaleConfig};
use crate::flow::MagnitudeField;
use crate::geometry::BoundingBox;
use crate::index::{LibraryIndex, TrackKey};
use crate::math;
use crate::metrics::iou;
use crate::retrieval::CompositionResult;

/// A transferred bounding box awaiting warping and suppression.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBox {
    /// Query frame the box belongs to.
    pub frame: u32,
    /// Box in full-query-frame pixel coordinates.
    pub bbox: BoundingBox,
    pub source_fragment: FragmentId,
    pub source_track: TrackKey,
    /// Library time step the source magnitudes come from.
    pub lib_step: u32,
    /// Query configuration the box was mapped through.
    pub config_id: u8,
    /// Flow-density score assigned during suppression.
    pub warp_score: f64,
}

/// Edge-warping knobs.
#[derive(Debug, Clone, Copy)]
pub struct WarpParams {
    /// Variance of the edge-deviation penalty.
    pub alpha: f64,
    /// Histogram bin count.
    pub bins: usize,
    /// Maximum rounds of randomized edge updates.
    pub batches: u32,
    pub seed: u64,
}

impl Default for WarpParams {
    fn default() -> Self {
        WarpParams {
            alpha: 2000.0,
            bins: 16,
            batches: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxEdge {
    Left,
    Right,
    Top,
    Bottom,
}

/// Maps a library-frame box into the query configuration's sub-rectangle:
/// normalized by the library dimensions, scaled into the region, expressed
/// in full-query-frame pixels. The result keeps at least a 2x2 extent.
pub fn map_box_into_region(
    bbox: &BoundingBox,
    lib_width: u32,
    lib_height: u32,
    region: &ScaleConfig,
) -> BoundingBox {
    let fx = region.width as f64 / lib_width as f64;
    let fy = region.height as f64 / lib_height as f64;
    let mut left = math::round(region.offset_x as f64 + bbox.left as f64 * fx) as i32;
    let mut right = math::round(region.offset_x as f64 + bbox.right as f64 * fx) as i32;
    let mut top = math::round(region.offset_y as f64 + bbox.top as f64 * fy) as i32;
    let mut bottom = math::round(region.offset_y as f64 + bbox.bottom as f64 * fy) as i32;

    let region_right = (region.offset_x + region.width) as i32;
    let region_bottom = (region.offset_y + region.height) as i32;
    if right - left < 2 {
        right = (left + 2).min(region_right);
        left = right - 2;
    }
    if bottom - top < 2 {
        bottom = (top + 2).min(region_bottom);
        top = bottom - 2;
    }
    BoundingBox {
        left,
        top,
        right,
        bottom,
    }
}

/// Resamples a library magnitude field into full-query-frame coordinates
/// through the configuration's affine map. Each query pixel takes the
/// area-weighted mean of its preimage rectangle, which preserves the
/// magnitude distribution across scales and is exact when the map is the
/// identity. Pixels outside the configuration region carry no motion
/// evidence and are zero.
pub fn resample_magnitude(
    lib: &MagnitudeField,
    query_width: u32,
    query_height: u32,
    region: &ScaleConfig,
) -> MagnitudeField {
    let sx = lib.width as f64 / region.width as f64;
    let sy = lib.height as f64 / region.height as f64;
    let mut mag = vec![0.0f32; (query_width * query_height) as usize];
    let span = |start: f64, scale: f64, limit: u32| {
        let lo = start * scale;
        let hi = lo + scale;
        let first = math::floor(lo) as i64;
        let last = (math::ceil(hi) as i64).min(limit as i64);
        (lo, hi, first.max(0), last)
    };
    for y in region.offset_y..(region.offset_y + region.height).min(query_height) {
        let (y0, y1, fy, ly) = span((y - region.offset_y) as f64, sy, lib.height);
        for x in region.offset_x..(region.offset_x + region.width).min(query_width) {
            let (x0, x1, fx, lx) = span((x - region.offset_x) as f64, sx, lib.width);
            let mut sum = 0.0f64;
            let mut weight = 0.0f64;
            for j in fy..ly {
                let wy = (y1.min(j as f64 + 1.0) - y0.max(j as f64)).max(0.0);
                if wy <= 0.0 {
                    continue;
                }
                for i in fx..lx {
                    let wx = (x1.min(i as f64 + 1.0) - x0.max(i as f64)).max(0.0);
                    if wx <= 0.0 {
                        continue;
                    }
                    sum += (wx * wy) * lib.at(i as u32, j as u32) as f64;
                    weight += wx * wy;
                }
            }
            if weight > 0.0 {
                mag[(y * query_width + x) as usize] = (sum / weight) as f32;
            }
        }
    }
    MagnitudeField {
        width: query_width,
        height: query_height,
        mag,
    }
}

/// Fetches the annotated boxes of every track linked to every chosen
/// fragment and maps them into query coordinates. Frame alignment matches
/// offsets inside the fragment window: the k-th frame of the library window
/// lands on the k-th frame of the query window.
pub fn transfer_boxes(
    result: &CompositionResult,
    index: &LibraryIndex,
    query_config: &ScaleConfig,
) -> Vec<CandidateBox> {
    let step = index.params.step;
    let window_frames = index.params.window * step;
    let query_first = result.query_fragment.start * step;
    let mut out = Vec::new();

    for chosen in &result.chosen {
        let Some(tracks) = index.track_inverse.get(&chosen.fragment) else {
            continue;
        };
        let meta = &index.videos[&chosen.fragment.video_id];
        let lib_first = chosen.fragment.start * step;
        for track_key in tracks {
            let track = &index.track_forward[track_key];
            for offset in 0..window_frames {
                let Some(bbox) = track.box_at(lib_first + offset) else {
                    continue;
                };
                let mapped = map_box_into_region(&bbox, meta.width, meta.height, query_config);
                out.push(CandidateBox {
                    frame: query_first + offset,
                    bbox: mapped,
                    source_fragment: chosen.fragment.clone(),
                    source_track: track_key.clone(),
                    lib_step: chosen.fragment.start + offset / step,
                    config_id: query_config.config_id,
                    warp_score: 0.0,
                });
            }
        }
    }
    out
}

/// Histogram bin for a magnitude value given the shared upper bound.
/// Everything lands in bin 0 when the bound is zero; values above the
/// bound clamp into the last bin.
#[inline]
fn bin_of(value: f32, max_value: f32, bins: usize) -> usize {
    if max_value <= 0.0 {
        return 0;
    }
    let b = math::floor(value as f64 / max_value as f64 * bins as f64) as usize;
    b.min(bins - 1)
}

/// Pixel counts per bin over the box clipped to the field.
fn hist_counts(field: &MagnitudeField, bbox: &BoundingBox, max_value: f32, bins: usize) -> Vec<u32> {
    let mut counts = vec![0u32; bins];
    if let Some(b) = bbox.clamped(field.width, field.height) {
        for y in b.top..b.bottom {
            for x in b.left..b.right {
                counts[bin_of(field.at(x as u32, y as u32), max_value, bins)] += 1;
            }
        }
    }
    counts
}

/// Intersection of two count histograms normalized to unit mass.
fn hist_intersection(a: &[u32], b: &[u32]) -> f64 {
    let ta: u32 = a.iter().sum();
    let tb: u32 = b.iter().sum();
    if ta == 0 || tb == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += (a[i] as f64 / ta as f64).min(b[i] as f64 / tb as f64);
    }
    sum
}

struct EdgeRange {
    lo: i32,
    hi: i32,
}

/// Integer candidate range for one edge: within three standard deviations
/// of the anchor edge, inside the frame, and keeping at least a 2x2 box.
fn candidate_range(
    edge: BoxEdge,
    query_box: &BoundingBox,
    anchor_edge: i32,
    field: &MagnitudeField,
    alpha: f64,
) -> EdgeRange {
    let radius = math::floor(3.0 * math::sqrt(alpha)) as i32;
    let (valid_lo, valid_hi) = match edge {
        BoxEdge::Left => (0, query_box.right - 2),
        BoxEdge::Right => (query_box.left + 2, field.width as i32),
        BoxEdge::Top => (0, query_box.bottom - 2),
        BoxEdge::Bottom => (query_box.top + 2, field.height as i32),
    };
    EdgeRange {
        lo: valid_lo.max(anchor_edge - radius),
        hi: valid_hi.min(anchor_edge + radius),
    }
}

fn edge_value(bbox: &BoundingBox, edge: BoxEdge) -> i32 {
    match edge {
        BoxEdge::Left => bbox.left,
        BoxEdge::Right => bbox.right,
        BoxEdge::Top => bbox.top,
        BoxEdge::Bottom => bbox.bottom,
    }
}

fn with_edge(mut bbox: BoundingBox, edge: BoxEdge, value: i32) -> BoundingBox {
    match edge {
        BoxEdge::Left => bbox.left = value,
        BoxEdge::Right => bbox.right = value,
        BoxEdge::Top => bbox.top = value,
        BoxEdge::Bottom => bbox.bottom = value,
    }
    bbox
}

/// Moves one edge of the query box to the integer position maximizing
///
/// ```text
/// sum_i min(H_anchor(i), H_candidate(i)) * exp(-(e_anchor - e)^2 / (2 alpha))
/// ```
///
/// where both histograms share bin edges spanning `[0, M]` with `M` the
/// largest magnitude of either field inside the union bounds of the two
/// boxes. Ties prefer the candidate closest to the anchor edge, then the
/// smaller coordinate. A degenerate candidate range returns the current
/// edge unchanged.
pub fn warp_edge(
    edge: BoxEdge,
    query_box: &BoundingBox,
    anchor_box: &BoundingBox,
    query_mag: &MagnitudeField,
    result_mag: &MagnitudeField,
    params: &WarpParams,
) -> i32 {
    let anchor_edge = edge_value(anchor_box, edge);
    let range = candidate_range(edge, query_box, anchor_edge, query_mag, params.alpha);
    if range.lo > range.hi {
        return edge_value(query_box, edge);
    }

    let bounds = query_box.union_bounds(anchor_box);
    let max_value = query_mag.max_in(&bounds).max(result_mag.max_in(&bounds));
    let anchor_hist = hist_counts(result_mag, anchor_box, max_value, params.bins);

    // Incremental sweep: the candidate box gains or loses exactly one pixel
    // strip per unit step, so the counts are updated instead of rebuilt.
    let mut counts = hist_counts(
        query_mag,
        &with_edge(*query_box, edge, range.lo),
        max_value,
        params.bins,
    );

    let strip = |counts: &mut Vec<u32>, coord: i32, add: bool| {
        let (from, to, vertical) = match edge {
            BoxEdge::Left | BoxEdge::Right => (query_box.top, query_box.bottom, true),
            BoxEdge::Top | BoxEdge::Bottom => (query_box.left, query_box.right, false),
        };
        for t in from..to {
            let (x, y) = if vertical { (coord, t) } else { (t, coord) };
            if x < 0 || y < 0 || x >= query_mag.width as i32 || y >= query_mag.height as i32 {
                continue;
            }
            let b = bin_of(query_mag.at(x as u32, y as u32), max_value, params.bins);
            if add {
                counts[b] += 1;
            } else {
                counts[b] -= 1;
            }
        }
    };

    let mut best_edge = range.lo;
    let mut best_obj = f64::NEG_INFINITY;
    for e in range.lo..=range.hi {
        let deviation = (anchor_edge - e) as f64;
        let objective = hist_intersection(&anchor_hist, &counts)
            * math::exp(-(deviation * deviation) / (2.0 * params.alpha));
        let better = objective > best_obj
            || (objective == best_obj
                && ((e - anchor_edge).abs() < (best_edge - anchor_edge).abs()
                    || ((e - anchor_edge).abs() == (best_edge - anchor_edge).abs()
                        && e < best_edge)));
        if better {
            best_obj = objective;
            best_edge = e;
        }
        if e < range.hi {
            match edge {
                // Moving the left/top edge up by one drops its strip; moving
                // the right/bottom edge up by one gains the strip at `e`.
                BoxEdge::Left | BoxEdge::Top => strip(&mut counts, e, false),
                BoxEdge::Right | BoxEdge::Bottom => strip(&mut counts, e, true),
            }
        }
    }
    best_edge
}

/// Runs up to `batches` rounds of edge updates, each round visiting the four
/// edges in a seeded random order, stopping early when a full round leaves
/// the box unchanged. Deterministic per seed.
pub fn warp_box(
    query_box: &BoundingBox,
    anchor_box: &BoundingBox,
    query_mag: &MagnitudeField,
    result_mag: &MagnitudeField,
    params: &WarpParams,
) -> BoundingBox {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut edges = [BoxEdge::Left, BoxEdge::Right, BoxEdge::Top, BoxEdge::Bottom];
    let mut current = *query_box;
    for _ in 0..params.batches {
        for i in (1..edges.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            edges.swap(i, j);
        }
        let before = current;
        for &edge in &edges {
            let e = warp_edge(edge, &current, anchor_box, query_mag, result_mag, params);
            current = with_edge(current, edge, e);
        }
        if current == before {
            break;
        }
    }
    current
}

/// Greedy non-maximal suppression. Boxes are scored by the mean flow
/// magnitude they cover; the highest-scoring box is kept and anything
/// overlapping a kept box by more than `iou_threshold` is dropped.
/// Score ties prefer the larger box, then the lexicographically first.
pub fn nms(
    mut candidates: Vec<CandidateBox>,
    query_mag: &MagnitudeField,
    iou_threshold: f64,
) -> Vec<CandidateBox> {
    for c in &mut candidates {
        c.warp_score = query_mag.mean_in(&c.bbox);
    }
    candidates.sort_by(|a, b| {
        b.warp_score
            .total_cmp(&a.warp_score)
            .then(b.bbox.area().cmp(&a.bbox.area()))
            .then(a.bbox.cmp(&b.bbox))
            .then(a.source_fragment.cmp(&b.source_fragment))
            .then(a.source_track.cmp(&b.source_track))
    });
    let mut kept: Vec<CandidateBox> = Vec::new();
    'next: for c in candidates {
        for k in &kept {
            if iou(&k.bbox, &c.bbox) > iou_threshold {
                continue 'next;
            }
        }
        kept.push(c);
    }
    kept
}
