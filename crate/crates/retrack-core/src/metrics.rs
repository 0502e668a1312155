//! Tracker scoring: overlap and center-error statistics for single targets
//! and the multi-object accuracy/precision pair.

use alloc::collections::BTreeMap;
use alloc::string::String;

use alloc::vec::Vec;

use crate::assoc::hungarian_assign;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::index::Track;
use crate::math;

/// Intersection area over union area.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Euclidean distance between box centers, in pixels.
pub fn cle(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    math::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by))
}

/// Per-frame comparison of one ground-truth track against one hypothesis.
/// Frames where the hypothesis is absent score zero overlap and carry no
/// center error.
#[derive(Debug, Clone)]
pub struct FrameScore {
    pub frame: u32,
    pub overlap: f64,
    /// `None` when the hypothesis has no box on this frame.
    pub center_error: Option<f64>,
}

/// Frame-by-frame scores over a ground-truth span.
#[derive(Debug, Clone)]
pub struct SingleTargetScores {
    pub per_frame: Vec<FrameScore>,
}

impl SingleTargetScores {
    /// Mean overlap over every ground-truth frame (missing frames count 0).
    pub fn mean_overlap(&self) -> f64 {
        if self.per_frame.is_empty() {
            return 0.0;
        }
        self.per_frame.iter().map(|f| f.overlap).sum::<f64>() / self.per_frame.len() as f64
    }

    /// Mean center error over frames where the hypothesis exists. Frames
    /// without a hypothesis are excluded here and handled as failures by
    /// the distance precision instead.
    pub fn mean_center_error(&self) -> Option<f64> {
        let errors: Vec<f64> = self.per_frame.iter().filter_map(|f| f.center_error).collect();
        if errors.is_empty() {
            None
        } else {
            Some(errors.iter().sum::<f64>() / errors.len() as f64)
        }
    }

    /// Fraction of ground-truth frames with overlap at or above `threshold`.
    pub fn overlap_precision(&self, threshold: f64) -> f64 {
        if self.per_frame.is_empty() {
            return 0.0;
        }
        let hits = self
            .per_frame
            .iter()
            .filter(|f| f.overlap >= threshold)
            .count();
        hits as f64 / self.per_frame.len() as f64
    }

    /// Fraction of ground-truth frames with center error at or below
    /// `threshold`; frames without a hypothesis count as failures.
    pub fn distance_precision(&self, threshold: f64) -> f64 {
        if self.per_frame.is_empty() {
            return 0.0;
        }
        let hits = self
            .per_frame
            .iter()
            .filter(|f| f.center_error.is_some_and(|e| e <= threshold))
            .count();
        hits as f64 / self.per_frame.len() as f64
    }
}

/// Scores a hypothesis track against one ground-truth track over the
/// ground-truth span. The spans must overlap in at least one frame.
pub fn single_target_scores(gt: &Track, hyp: &Track) -> Result<SingleTargetScores> {
    if gt.boxes.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if hyp.end_frame() <= gt.start_frame || hyp.start_frame >= gt.end_frame() {
        return Err(Error::EmptyOverlap);
    }
    let per_frame = (gt.start_frame..gt.end_frame())
        .map(|frame| {
            let g = gt.box_at(frame).expect("frame inside gt span");
            match hyp.box_at(frame) {
                Some(h) => FrameScore {
                    frame,
                    overlap: iou(&g, &h),
                    center_error: Some(cle(&g, &h)),
                },
                None => FrameScore {
                    frame,
                    overlap: 0.0,
                    center_error: None,
                },
            }
        })
        .collect();
    Ok(SingleTargetScores { per_frame })
}

/// Picks the hypothesis whose boxes overlap the ground-truth track on the
/// most frames; ties prefer the smaller track id. Co-temporal tracks that
/// never touch the ground truth spatially are not candidates.
pub fn best_hypothesis<'a>(gt: &Track, hypotheses: &'a [Track]) -> Option<&'a Track> {
    hypotheses
        .iter()
        .map(|h| {
            let lo = h.start_frame.max(gt.start_frame);
            let hi = h.end_frame().min(gt.end_frame());
            let overlapping = (lo..hi.max(lo))
                .filter(|&f| match (gt.box_at(f), h.box_at(f)) {
                    (Some(g), Some(b)) => g.intersection_area(&b) > 0,
                    _ => false,
                })
                .count();
            (overlapping, h)
        })
        .filter(|(overlapping, _)| *overlapping > 0)
        .max_by(|(a, ta), (b, tb)| a.cmp(b).then_with(|| tb.track_id.cmp(&ta.track_id)))
        .map(|(_, t)| t)
}

/// Error components of a multi-object run; totals accumulate across
/// sequences before the final ratios are taken.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClearCounts {
    pub gt_boxes: u64,
    pub misses: u64,
    pub false_positives: u64,
    pub id_switches: u64,
    pub matches: u64,
    pub overlap_sum: f64,
}

impl ClearCounts {
    pub fn accumulate(&mut self, other: &ClearCounts) {
        self.gt_boxes += other.gt_boxes;
        self.misses += other.misses;
        self.false_positives += other.false_positives;
        self.id_switches += other.id_switches;
        self.matches += other.matches;
        self.overlap_sum += other.overlap_sum;
    }

    /// Accuracy scaled so 100 means no misses, false positives or identity
    /// switches. Can go negative.
    pub fn mota(&self) -> f64 {
        100.0
            * (1.0
                - (self.misses + self.false_positives + self.id_switches) as f64
                    / self.gt_boxes as f64)
    }

    /// Mean matched overlap scaled so 100 means perfect alignment.
    pub fn motp(&self) -> f64 {
        if self.matches == 0 {
            return 0.0;
        }
        100.0 * self.overlap_sum / self.matches as f64
    }
}

/// Multi-object scoring with persistent correspondences.
///
/// A ground-truth/hypothesis pair that still overlaps at or above the
/// threshold keeps its correspondence; remaining boxes are matched per
/// frame by minimum-cost assignment on `1 - overlap`, gated at the
/// threshold. A ground-truth object whose matched hypothesis id changes
/// counts one identity switch.
pub fn clear_mot(gt: &[Track], hyp: &[Track], match_threshold: f64) -> Result<ClearCounts> {
    if match_threshold <= 0.0 || match_threshold >= 1.0 {
        return Err(Error::InvalidParam("match_threshold"));
    }
    let total_gt: u64 = gt.iter().map(|t| t.boxes.len() as u64).sum();
    if total_gt == 0 {
        return Err(Error::EmptyGroundTruth);
    }

    let first = gt
        .iter()
        .chain(hyp.iter())
        .map(|t| t.start_frame)
        .min()
        .unwrap_or(0);
    let last = gt
        .iter()
        .chain(hyp.iter())
        .map(|t| t.end_frame())
        .max()
        .unwrap_or(0);

    let mut counts = ClearCounts {
        gt_boxes: total_gt,
        ..ClearCounts::default()
    };
    // Persistent correspondence and the last hypothesis each ground truth
    // was ever matched to (for switch counting across gaps).
    let mut corresponding: BTreeMap<usize, usize> = BTreeMap::new();
    let mut last_partner: BTreeMap<usize, usize> = BTreeMap::new();

    for frame in first..last {
        let gt_here: Vec<(usize, BoundingBox)> = gt
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.box_at(frame).map(|b| (i, b)))
            .collect();
        let hyp_here: Vec<(usize, BoundingBox)> = hyp
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.box_at(frame).map(|b| (j, b)))
            .collect();

        let mut matched_gt: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
        let mut used_hyp: Vec<usize> = Vec::new();

        // Carry forward still-valid correspondences.
        for &(gi, gbox) in &gt_here {
            if let Some(&hj) = corresponding.get(&gi) {
                if let Some(&(_, hbox)) = hyp_here.iter().find(|&&(j, _)| j == hj) {
                    let o = iou(&gbox, &hbox);
                    if o >= match_threshold {
                        matched_gt.insert(gi, (hj, o));
                        used_hyp.push(hj);
                    }
                }
            }
        }

        // Assign the remaining boxes by maximum overlap.
        let free_gt: Vec<&(usize, BoundingBox)> = gt_here
            .iter()
            .filter(|(gi, _)| !matched_gt.contains_key(gi))
            .collect();
        let free_hyp: Vec<&(usize, BoundingBox)> = hyp_here
            .iter()
            .filter(|(hj, _)| !used_hyp.contains(hj))
            .collect();
        if !free_gt.is_empty() && !free_hyp.is_empty() {
            let costs: Vec<Vec<f64>> = free_gt
                .iter()
                .map(|(_, gbox)| {
                    free_hyp
                        .iter()
                        .map(|(_, hbox)| 1.0 - iou(gbox, hbox))
                        .collect()
                })
                .collect();
            for (i, j) in hungarian_assign(&costs) {
                let (gi, gbox) = *free_gt[i];
                let (hj, hbox) = *free_hyp[j];
                let o = iou(&gbox, &hbox);
                if o >= match_threshold {
                    matched_gt.insert(gi, (hj, o));
                    used_hyp.push(hj);
                }
            }
        }

        for (gi, (hj, o)) in &matched_gt {
            if let Some(prev) = last_partner.get(gi) {
                if prev != hj {
                    counts.id_switches += 1;
                }
            }
            last_partner.insert(*gi, *hj);
            corresponding.insert(*gi, *hj);
            counts.matches += 1;
            counts.overlap_sum += o;
        }
        // Correspondences that failed this frame are dropped.
        let stale: Vec<usize> = corresponding
            .keys()
            .copied()
            .filter(|gi| {
                gt_here.iter().any(|(i, _)| i == gi) && !matched_gt.contains_key(gi)
            })
            .collect();
        for gi in stale {
            corresponding.remove(&gi);
        }

        counts.misses += (gt_here.len() - matched_gt.len()) as u64;
        counts.false_positives += (hyp_here.len() - used_hyp.len()) as u64;
    }
    Ok(counts)
}

/// Builds a uniform threshold grid from `lo` to `hi` inclusive.
pub fn threshold_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect()
}

/// A labelled precision curve: `(threshold, precision)` samples.
pub type PrecisionCurve = Vec<(f64, f64)>;

/// Mean overlap- and distance-precision curves over a set of evaluations.
pub fn mean_curves(
    scores: &[SingleTargetScores],
    overlap_grid: &[f64],
    distance_grid: &[f64],
) -> (PrecisionCurve, PrecisionCurve) {
    let n = scores.len().max(1) as f64;
    let overlap = overlap_grid
        .iter()
        .map(|&t| {
            let p = scores.iter().map(|s| s.overlap_precision(t)).sum::<f64>() / n;
            (t, p)
        })
        .collect();
    let distance = distance_grid
        .iter()
        .map(|&t| {
            let p = scores.iter().map(|s| s.distance_precision(t)).sum::<f64>() / n;
            (t, p)
        })
        .collect();
    (overlap, distance)
}

/// Convenience: tracks keyed by video for per-sequence grouping.
pub fn group_by_video(tracks: &[Track]) -> BTreeMap<String, Vec<Track>> {
    let mut map: BTreeMap<String, Vec<Track>> = BTreeMap::new();
    for t in tracks {
        map.entry(t.video_id.clone()).or_default().push(t.clone());
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Flip;
    use alloc::string::ToString;

    fn bx(l: i32, t: i32, r: i32, b: i32) -> BoundingBox {
        BoundingBox::new(l, t, r, b).unwrap()
    }

    fn track(id: &str, start: u32, boxes: Vec<BoundingBox>) -> Track {
        Track {
            track_id: id.to_string(),
            video_id: "v".to_string(),
            flip: Flip::Identity,
            start_frame: start,
            boxes,
        }
    }

    #[test]
    fn iou_examples() {
        let a = bx(0, 0, 10, 10);
        assert_eq!(iou(&a, &a), 1.0);
        let b = bx(5, 0, 15, 10);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        let c = bx(20, 20, 30, 30);
        assert_eq!(iou(&a, &c), 0.0);
        assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn cle_examples() {
        let a = bx(0, 0, 10, 10);
        assert_eq!(cle(&a, &a), 0.0);
        // centers (5,5) and (8,9): a 3-4-5 triangle
        let b = bx(3, 4, 13, 14);
        assert_eq!(cle(&a, &b), 5.0);
        // centers 20 px apart
        let c = bx(20, 0, 30, 10);
        assert_eq!(cle(&a, &c), 20.0);
    }

    #[test]
    fn perfect_hypothesis_scores_perfectly() {
        let gt = track("g", 0, (0..10).map(|i| bx(i, 0, i + 10, 10)).collect());
        let hyp = track("h", 0, (0..10).map(|i| bx(i, 0, i + 10, 10)).collect());
        let s = single_target_scores(&gt, &hyp).unwrap();
        assert_eq!(s.mean_overlap(), 1.0);
        assert_eq!(s.mean_center_error(), Some(0.0));
        assert_eq!(s.overlap_precision(0.5), 1.0);
        assert_eq!(s.distance_precision(20.0), 1.0);
    }

    #[test]
    fn half_coverage_halves_overlap_precision() {
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 10]);
        let hyp = track("h", 0, vec![bx(0, 0, 10, 10); 5]);
        let s = single_target_scores(&gt, &hyp).unwrap();
        assert_eq!(s.overlap_precision(0.5), 0.5);
        assert_eq!(s.mean_center_error(), Some(0.0)); // absent frames excluded
        assert_eq!(s.distance_precision(20.0), 0.5); // but counted here
    }

    #[test]
    fn known_per_frame_overlaps_average_correctly() {
        // Ten frames: gt fixed, hyp shifts right i pixels; per-frame overlap
        // of two 10x10 boxes offset by i is (10-i)/(10+i).
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 10]);
        let hyp = track(
            "h",
            0,
            (0..10).map(|i| bx(i, 0, i + 10, 10)).collect(),
        );
        let s = single_target_scores(&gt, &hyp).unwrap();
        let expected: f64 = (0..10)
            .map(|i| (10.0 - i as f64) / (10.0 + i as f64))
            .sum::<f64>()
            / 10.0;
        assert!((s.mean_overlap() - expected).abs() < 1e-12);
        let expected_cle: f64 = (0..10).map(|i| i as f64).sum::<f64>() / 10.0;
        assert_eq!(s.mean_center_error(), Some(expected_cle));
    }

    #[test]
    fn disjoint_spans_are_rejected() {
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 5]);
        let hyp = track("h", 10, vec![bx(0, 0, 10, 10); 5]);
        assert_eq!(single_target_scores(&gt, &hyp).unwrap_err(), Error::EmptyOverlap);
    }

    #[test]
    fn precision_curves_are_monotone() {
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 10]);
        let hyp = track("h", 0, (0..10).map(|i| bx(i, 0, i + 10, 10)).collect());
        let s = single_target_scores(&gt, &hyp).unwrap();
        let mut prev = f64::INFINITY;
        for t in threshold_grid(0.0, 1.0, 20) {
            let p = s.overlap_precision(t);
            assert!(p <= prev + 1e-12);
            prev = p;
        }
        let mut prev = -1.0;
        for t in threshold_grid(0.0, 50.0, 50) {
            let p = s.distance_precision(t);
            assert!(p >= prev - 1e-12);
            prev = p;
        }
    }

    fn two_object_scene() -> Vec<Track> {
        vec![
            track("g0", 0, (0..6).map(|i| bx(2 * i, 0, 2 * i + 10, 10)).collect()),
            track("g1", 0, (0..6).map(|i| bx(50, 30 + i, 60, 40 + i)).collect()),
        ]
    }

    #[test]
    fn perfect_tracking_scores_one_hundred() {
        let gt = two_object_scene();
        let mut hyp = gt.clone();
        hyp[0].track_id = "h0".to_string();
        hyp[1].track_id = "h1".to_string();
        let c = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!(c.mota(), 100.0);
        assert_eq!(c.motp(), 100.0);
        assert_eq!(c.id_switches, 0);
    }

    #[test]
    fn one_missed_box_costs_its_share() {
        let gt = two_object_scene();
        let mut hyp = gt.clone();
        // Drop the last box of the second track: 12 gt boxes, 1 miss.
        hyp[1].boxes.pop();
        let c = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!(c.misses, 1);
        assert_eq!(c.false_positives, 0);
        assert_eq!(c.id_switches, 0);
        assert!((c.mota() - 100.0 * (1.0 - 1.0 / 12.0)).abs() < 1e-9);
        assert_eq!(c.motp(), 100.0);
    }

    #[test]
    fn ten_boxes_one_miss_scores_ninety() {
        let gt = vec![track("g", 0, vec![bx(0, 0, 10, 10); 10])];
        let hyp = vec![track("h", 0, vec![bx(0, 0, 10, 10); 9])];
        let c = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!(c.mota(), 90.0);
        assert_eq!(c.motp(), 100.0);
    }

    #[test]
    fn identity_swap_is_counted_per_object() {
        let gt = two_object_scene();
        // Hypotheses follow the right boxes but exchange identities from
        // frame 3 on: both ground truths change partners, two switches.
        let h0: Vec<BoundingBox> = (0..6)
            .map(|i| {
                if i < 3 {
                    gt[0].boxes[i]
                } else {
                    gt[1].boxes[i]
                }
            })
            .collect();
        let h1: Vec<BoundingBox> = (0..6)
            .map(|i| {
                if i < 3 {
                    gt[1].boxes[i]
                } else {
                    gt[0].boxes[i]
                }
            })
            .collect();
        let hyp = vec![track("h0", 0, h0), track("h1", 0, h1)];
        let c = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!(c.id_switches, 2);
        assert_eq!(c.misses, 0);
        assert_eq!(c.false_positives, 0);
        assert!((c.mota() - 100.0 * (1.0 - 2.0 / 12.0)).abs() < 1e-9);
        assert_eq!(c.motp(), 100.0);
    }

    #[test]
    fn continuing_matches_are_never_reassigned() {
        // A second hypothesis overlaps gt slightly better from frame 2 on,
        // but the original correspondence stays while above threshold.
        let gt = vec![track("g", 0, vec![bx(0, 0, 10, 10); 4])];
        let hyp = vec![
            track("h0", 0, vec![bx(1, 0, 11, 10); 4]),
            track("h1", 2, vec![bx(0, 0, 10, 10); 2]),
        ];
        let c = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!(c.id_switches, 0);
        // h1 is two pure false positives.
        assert_eq!(c.false_positives, 2);
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        let hyp = vec![track("h", 0, vec![bx(0, 0, 10, 10); 2])];
        assert_eq!(clear_mot(&[], &hyp, 0.5).unwrap_err(), Error::EmptyGroundTruth);
    }

    #[test]
    fn best_hypothesis_prefers_most_overlapping_frames() {
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 10]);
        let short = track("s", 0, vec![bx(0, 0, 10, 10); 3]);
        let long = track("l", 4, vec![bx(0, 0, 10, 10); 6]);
        let hyps = [short, long];
        let best = best_hypothesis(&gt, &hyps).unwrap();
        assert_eq!(best.track_id, "l");
    }

    #[test]
    fn best_hypothesis_ignores_co_temporal_but_disjoint_tracks() {
        // A full-length track elsewhere in the frame must not shadow the
        // shorter track that actually follows the target.
        let gt = track("g", 0, vec![bx(0, 0, 10, 10); 10]);
        let elsewhere = track("a", 0, vec![bx(100, 100, 110, 110); 10]);
        let follower = track("b", 0, vec![bx(1, 0, 11, 10); 6]);
        let hyps = [elsewhere, follower];
        let best = best_hypothesis(&gt, &hyps).unwrap();
        assert_eq!(best.track_id, "b");

        let only_elsewhere = [track("a", 0, vec![bx(100, 100, 110, 110); 10])];
        assert!(best_hypothesis(&gt, &only_elsewhere).is_none());
    }
}
