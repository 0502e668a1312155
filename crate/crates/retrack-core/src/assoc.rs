//! Frame-to-frame data association: appearance histograms, minimum-cost
//! assignment, track linking and temporal smoothing.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::document::Flip;
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::index::Track;
use crate::math;
use crate::transfer::CandidateBox;

pub const HUE_BINS: usize = 10;
pub const SAT_BINS: usize = 5;

/// Joint hue/saturation histogram, normalized to unit mass (all zero for an
/// empty pixel set). Zero-saturation pixels have no defined hue and are
/// assigned hue bin 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HsvHistogram {
    pub bins: [f64; HUE_BINS * SAT_BINS],
}

impl HsvHistogram {
    pub fn intersection(&self, other: &HsvHistogram) -> f64 {
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|(a, b)| a.min(*b))
            .sum()
    }
}

/// Histogram-intersection distance: `1 - sum_i min(a_i, b_i)`.
pub fn histogram_distance(a: &HsvHistogram, b: &HsvHistogram) -> f64 {
    1.0 - a.intersection(b)
}

fn rgb_to_hs(r: u8, g: u8, b: u8) -> (f64, f64) {
    let r = r as f64 / 255.0;
    let g = g as f64 / 255.0;
    let b = b as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let saturation = if max <= 0.0 { 0.0 } else { delta / max };
    let hue = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * math::rem_euclid((g - b) / delta, 6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (hue, saturation)
}

/// Joint 10x5 hue/saturation histogram of the pixels inside `bbox`.
pub fn hsv_histogram(frame: &Frame, bbox: &BoundingBox) -> HsvHistogram {
    let mut bins = [0.0f64; HUE_BINS * SAT_BINS];
    let Some(b) = bbox.clamped(frame.width(), frame.height()) else {
        return HsvHistogram { bins };
    };
    let mut count = 0u64;
    for y in b.top..b.bottom {
        for x in b.left..b.right {
            let (r, g, bl) = frame.rgb(x as u32, y as u32);
            let (h, s) = rgb_to_hs(r, g, bl);
            let hue_bin = ((h / 360.0 * HUE_BINS as f64) as usize).min(HUE_BINS - 1);
            let sat_bin = ((s * SAT_BINS as f64) as usize).min(SAT_BINS - 1);
            bins[hue_bin * SAT_BINS + sat_bin] += 1.0;
            count += 1;
        }
    }
    if count > 0 {
        for v in bins.iter_mut() {
            *v /= count as f64;
        }
    }
    HsvHistogram { bins }
}

/// Association weights: appearance-vs-geometry balance and the hard gate on
/// center displacement.
#[derive(Debug, Clone, Copy)]
pub struct AssociationParams {
    pub beta: f64,
    pub gate_distance: f64,
}

impl Default for AssociationParams {
    fn default() -> Self {
        AssociationParams {
            beta: 2.5,
            // Bounds one object's plausible per-frame displacement. Wide
            // gates let the globally optimal assignment trade a cheap true
            // continuation away to absorb clutter churn.
            gate_distance: 12.0,
        }
    }
}

/// Pairwise association cost: histogram-intersection distance of the two
/// appearance histograms plus `beta` times the center distance in pixels.
pub fn association_cost(
    hist_a: &HsvHistogram,
    box_a: &BoundingBox,
    hist_b: &HsvHistogram,
    box_b: &BoundingBox,
    beta: f64,
) -> f64 {
    let (ax, ay) = box_a.center();
    let (bx, by) = box_b.center();
    let d = math::sqrt((ax - bx) * (ax - bx) + (ay - by) * (ay - by));
    histogram_distance(hist_a, hist_b) + beta * d
}

/// Minimum-cost one-to-one assignment of `min(rows, cols)` pairs.
///
/// Rectangular inputs are padded to a square with a sentinel of ten times
/// the largest finite cost; pad pairs are dropped from the result. The
/// square case is the classical shortest-augmenting-path construction with
/// row/column potentials.
#[allow(clippy::needless_range_loop)]
pub fn hungarian_assign(costs: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = costs.len();
    let cols = costs.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let dim = rows.max(cols);
    let max_cost = costs
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .fold(0.0f64, f64::max);
    let pad = 10.0 * max_cost;
    let cost_at = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            costs[r][c]
        } else {
            pad
        }
    };

    // Column j is assigned to row `assigned[j]`; index 0 is a virtual column.
    let mut potential_row = vec![0.0f64; dim + 1];
    let mut potential_col = vec![0.0f64; dim + 1];
    let mut assigned = vec![usize::MAX; dim + 1];
    let mut path = vec![0usize; dim + 1];

    for r in 1..=dim {
        assigned[0] = r;
        let mut j0 = 0usize;
        let mut min_to = vec![f64::INFINITY; dim + 1];
        let mut used = vec![false; dim + 1];
        loop {
            used[j0] = true;
            let i0 = assigned[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=dim {
                if used[j] {
                    continue;
                }
                let reduced =
                    cost_at(i0 - 1, j - 1) - potential_row[i0] - potential_col[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    path[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=dim {
                if used[j] {
                    potential_row[assigned[j]] += delta;
                    potential_col[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if assigned[j0] == usize::MAX {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = path[j0];
            assigned[j0] = assigned[j1];
            j0 = j1;
        }
    }

    let mut pairs = Vec::new();
    for j in 1..=dim {
        let r = assigned[j];
        if r != usize::MAX && r >= 1 && r - 1 < rows && j - 1 < cols {
            pairs.push((r - 1, j - 1));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Links per-frame boxes into tracks with frame-by-frame minimum-cost
/// assignment. Pairs whose centers are farther apart than the gate are
/// never matched; unmatched boxes start new tracks and unmatched tracks
/// terminate. Track ids are sequential integers in creation order.
pub fn link_tracks(
    video_id: &str,
    frames: &[Frame],
    detections: &[Vec<CandidateBox>],
    params: &AssociationParams,
) -> Vec<Track> {
    assert_eq!(frames.len(), detections.len());
    let mut tracks: Vec<Track> = Vec::new();
    // Indices into `tracks` that were extended on the previous frame.
    let mut active: Vec<usize> = Vec::new();

    for (f, dets) in detections.iter().enumerate() {
        let mut next_active = Vec::new();
        let det_hists: Vec<HsvHistogram> = dets
            .iter()
            .map(|d| hsv_histogram(&frames[f], &d.bbox))
            .collect();

        let mut matched_det = vec![false; dets.len()];
        if !active.is_empty() && !dets.is_empty() {
            let prev_frame = &frames[f - 1];
            let prev_hists: Vec<HsvHistogram> = active
                .iter()
                .map(|&ti| {
                    let b = *tracks[ti].boxes.last().expect("active track has boxes");
                    hsv_histogram(prev_frame, &b)
                })
                .collect();

            let mut feasible = false;
            let mut costs = vec![vec![0.0f64; dets.len()]; active.len()];
            let mut gated = vec![vec![false; dets.len()]; active.len()];
            let mut max_feasible = 0.0f64;
            for (i, &ti) in active.iter().enumerate() {
                let prev_box = *tracks[ti].boxes.last().unwrap();
                for (j, det) in dets.iter().enumerate() {
                    let cost = association_cost(
                        &prev_hists[i],
                        &prev_box,
                        &det_hists[j],
                        &det.bbox,
                        params.beta,
                    );
                    let (px, py) = prev_box.center();
                    let (dx, dy) = det.bbox.center();
                    let dist = math::sqrt((px - dx) * (px - dx) + (py - dy) * (py - dy));
                    if dist > params.gate_distance {
                        gated[i][j] = true;
                    } else {
                        feasible = true;
                        max_feasible = max_feasible.max(cost);
                    }
                    costs[i][j] = cost;
                }
            }
            if feasible {
                let sentinel = 10.0 * max_feasible + 1.0;
                for i in 0..active.len() {
                    for j in 0..dets.len() {
                        if gated[i][j] {
                            costs[i][j] = sentinel;
                        }
                    }
                }
                for (i, j) in hungarian_assign(&costs) {
                    if gated[i][j] {
                        continue;
                    }
                    let ti = active[i];
                    tracks[ti].boxes.push(dets[j].bbox);
                    matched_det[j] = true;
                    next_active.push(ti);
                }
            }
        }

        for (j, det) in dets.iter().enumerate() {
            if !matched_det[j] {
                let ti = tracks.len();
                tracks.push(Track {
                    track_id: ti.to_string(),
                    video_id: video_id.to_string(),
                    flip: Flip::Identity,
                    start_frame: f as u32,
                    boxes: vec![det.bbox],
                });
                next_active.push(ti);
            }
        }
        next_active.sort_unstable();
        active = next_active;
    }
    tracks
}

/// Moving-average smoothing of box centers and scales, each averaged
/// independently over `[t - half_window, t + half_window]` clipped to the
/// track span. Track count, ids and frame spans are preserved; boxes are
/// clamped back into the frame.
pub fn smooth_tracks(
    tracks: &[Track],
    half_window: u32,
    frame_width: u32,
    frame_height: u32,
) -> Vec<Track> {
    let k = half_window as i64;
    tracks
        .iter()
        .map(|track| {
            let n = track.boxes.len() as i64;
            let smoothed: Vec<BoundingBox> = (0..n)
                .map(|i| {
                    let lo = (i - k).max(0);
                    let hi = (i + k).min(n - 1);
                    let mut cx = 0.0;
                    let mut cy = 0.0;
                    let mut w = 0.0;
                    let mut h = 0.0;
                    for idx in lo..=hi {
                        let b = &track.boxes[idx as usize];
                        let (bx, by) = b.center();
                        cx += bx;
                        cy += by;
                        w += b.width() as f64;
                        h += b.height() as f64;
                    }
                    let m = (hi - lo + 1) as f64;
                    let b =
                        BoundingBox::from_center_scale(cx / m, cy / m, w / m, h / m);
                    b.clamped(frame_width, frame_height).unwrap_or(b)
                })
                .collect();
            Track {
                boxes: smoothed,
                ..track.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn solid_frame(width: u32, height: u32, rgb: (u8, u8, u8)) -> Frame {
        let mut data = Vec::new();
        for _ in 0..width * height {
            data.extend_from_slice(&[rgb.0, rgb.1, rgb.2]);
        }
        Frame::new(width, height, data).unwrap()
    }

    fn bx(l: i32, t: i32, r: i32, b: i32) -> BoundingBox {
        BoundingBox::new(l, t, r, b).unwrap()
    }

    #[test]
    fn pure_red_lands_in_first_hue_top_sat_bin() {
        let f = solid_frame(8, 8, (255, 0, 0));
        let h = hsv_histogram(&f, &bx(0, 0, 8, 8));
        assert_eq!(h.bins[SAT_BINS - 1], 1.0);
        assert!((h.bins.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gray_pixels_have_zero_saturation() {
        let f = solid_frame(4, 4, (120, 120, 120));
        let h = hsv_histogram(&f, &bx(0, 0, 4, 4));
        assert_eq!(h.bins[0], 1.0); // hue bin 0, sat bin 0
    }

    #[test]
    fn histogram_sums_to_one_for_any_box() {
        let mut data = Vec::new();
        for i in 0..64u32 {
            data.extend_from_slice(&[(i * 3) as u8, (255 - i) as u8, (i * i % 255) as u8]);
        }
        let f = Frame::new(8, 8, data).unwrap();
        let h = hsv_histogram(&f, &bx(1, 2, 7, 6));
        assert!((h.bins.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cost_examples() {
        let f = solid_frame(16, 16, (10, 200, 30));
        let b = bx(2, 2, 6, 6);
        let h = hsv_histogram(&f, &b);
        assert_eq!(association_cost(&h, &b, &h, &b, 2.5), 0.0);

        let shifted = bx(8, 10, 12, 14); // centers 10px apart (6, 8)
        assert!((association_cost(&h, &b, &h, &shifted, 2.5) - 25.0).abs() < 1e-9);

        let red = hsv_histogram(&solid_frame(4, 4, (255, 0, 0)), &bx(0, 0, 4, 4));
        let blue = hsv_histogram(&solid_frame(4, 4, (0, 0, 255)), &bx(0, 0, 4, 4));
        assert!((association_cost(&red, &b, &blue, &b, 2.5) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cost_is_symmetric() {
        let f1 = solid_frame(8, 8, (200, 40, 10));
        let f2 = solid_frame(8, 8, (10, 40, 200));
        let b1 = bx(0, 0, 4, 4);
        let b2 = bx(3, 2, 8, 8);
        let h1 = hsv_histogram(&f1, &b1);
        let h2 = hsv_histogram(&f2, &b2);
        let ab = association_cost(&h1, &b1, &h2, &b2, 2.5);
        let ba = association_cost(&h2, &b2, &h1, &b1, 2.5);
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn hungarian_solves_diagonal_and_trivial_cases() {
        let m = vec![
            vec![1.0, 9.0, 9.0],
            vec![9.0, 1.0, 9.0],
            vec![9.0, 9.0, 1.0],
        ];
        assert_eq!(hungarian_assign(&m), vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(hungarian_assign(&[vec![7.0]]), vec![(0, 0)]);
    }

    #[test]
    fn hungarian_rectangular_returns_min_dim_pairs() {
        let m = vec![vec![5.0, 1.0, 3.0], vec![4.0, 2.0, 9.0]];
        let pairs = hungarian_assign(&m);
        assert_eq!(pairs.len(), 2);
        let total: f64 = pairs.iter().map(|&(i, j)| m[i][j]).sum();
        assert_eq!(total, 5.0); // (0,1)=1 + (1,0)=4
    }

    #[test]
    fn hungarian_matches_brute_force_on_random_matrices() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = 5;
            let m: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| (rng.next_u32() % 1000) as f64).collect())
                .collect();
            let pairs = hungarian_assign(&m);
            let total: f64 = pairs.iter().map(|&(i, j)| m[i][j]).sum();

            // Enumerate all 120 permutations.
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                let t: f64 = p.iter().enumerate().map(|(i, &j)| m[i][j]).sum();
                if t < best {
                    best = t;
                }
            });
            assert_eq!(total, best);
        }
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    fn moving_cand(bbox: BoundingBox) -> CandidateBox {
        use crate::document::FragmentId;
        CandidateBox {
            frame: 0,
            bbox,
            source_fragment: FragmentId {
                video_id: String::from("lib"),
                config_id: 0,
                flip: Flip::Identity,
                start: 0,
            },
            source_track: String::from("lib/t~o"),
            lib_step: 0,
            config_id: 0,
            warp_score: 0.0,
        }
    }

    #[test]
    fn single_mover_links_into_one_track() {
        let frames: Vec<Frame> = (0..10).map(|_| solid_frame(64, 48, (90, 90, 90))).collect();
        let dets: Vec<Vec<CandidateBox>> = (0..10)
            .map(|f| vec![moving_cand(bx(2 * f, 10, 2 * f + 12, 22))])
            .collect();
        let tracks = link_tracks("q", &frames, &dets, &AssociationParams::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].boxes.len(), 10);
        assert_eq!(tracks[0].track_id, "0");
    }

    #[test]
    fn two_separated_movers_keep_identities() {
        // Make the two movers visually distinct and far apart; cross costs
        // exceed within costs at every frame.
        let mut frames = Vec::new();
        for _ in 0..8 {
            let mut data = Vec::new();
            for y in 0..48u32 {
                for _x in 0..64u32 {
                    if y < 24 {
                        data.extend_from_slice(&[255, 0, 0]);
                    } else {
                        data.extend_from_slice(&[0, 0, 255]);
                    }
                }
            }
            frames.push(Frame::new(64, 48, data).unwrap());
        }
        let dets: Vec<Vec<CandidateBox>> = (0..8)
            .map(|f| {
                vec![
                    moving_cand(bx(2 * f, 2, 2 * f + 10, 12)),
                    moving_cand(bx(40 - 2 * f, 34, 50 - 2 * f, 44)),
                ]
            })
            .collect();
        let tracks = link_tracks("q", &frames, &dets, &AssociationParams::default());
        assert_eq!(tracks.len(), 2);
        for t in &tracks {
            assert_eq!(t.boxes.len(), 8);
            // No identity swap: vertical position stays on one side.
            let top_side = t.boxes[0].top < 24;
            assert!(t.boxes.iter().all(|b| (b.top < 24) == top_side));
        }
    }

    #[test]
    fn gap_terminates_and_restarts_tracks() {
        let frames: Vec<Frame> = (0..5).map(|_| solid_frame(64, 48, (90, 90, 90))).collect();
        let dets = vec![
            vec![moving_cand(bx(0, 0, 10, 10))],
            vec![moving_cand(bx(2, 0, 12, 10))],
            vec![],
            vec![moving_cand(bx(6, 0, 16, 10))],
            vec![moving_cand(bx(8, 0, 18, 10))],
        ];
        let tracks = link_tracks("q", &frames, &dets, &AssociationParams::default());
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].start_frame, 0);
        assert_eq!(tracks[0].boxes.len(), 2);
        assert_eq!(tracks[1].start_frame, 3);
        assert_eq!(tracks[1].track_id, "1");
    }

    #[test]
    fn no_two_boxes_share_a_track_per_frame() {
        let frames: Vec<Frame> = (0..6).map(|_| solid_frame(64, 48, (90, 90, 90))).collect();
        let dets: Vec<Vec<CandidateBox>> = (0..6)
            .map(|f| {
                vec![
                    moving_cand(bx(f, 10, f + 8, 20)),
                    moving_cand(bx(f + 4, 12, f + 12, 22)),
                ]
            })
            .collect();
        let tracks = link_tracks("q", &frames, &dets, &AssociationParams::default());
        let total: usize = tracks.iter().map(|t| t.boxes.len()).sum();
        assert_eq!(total, 12);
        for t in &tracks {
            assert!(t.boxes.len() <= 6);
        }
    }

    #[test]
    fn smoothing_preserves_constant_and_linear_tracks() {
        let constant = Track {
            track_id: String::from("0"),
            video_id: String::from("q"),
            flip: Flip::Identity,
            start_frame: 0,
            boxes: vec![bx(10, 10, 20, 20); 7],
        };
        let linear = Track {
            track_id: String::from("1"),
            video_id: String::from("q"),
            flip: Flip::Identity,
            start_frame: 0,
            boxes: (0..7).map(|i| bx(10 + 2 * i, 10, 20 + 2 * i, 20)).collect(),
        };
        let out = smooth_tracks(&[constant.clone(), linear.clone()], 2, 64, 48);
        assert_eq!(out[0].boxes, constant.boxes);
        // Interior frames of a linearly moving box are unchanged.
        for i in 2..5usize {
            assert_eq!(out[1].boxes[i], linear.boxes[i]);
        }
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].track_id, "1");
        assert_eq!(out[1].boxes.len(), 7);
    }

    #[test]
    fn smoothing_averages_center_spikes() {
        let centers = [0, 0, 10, 0, 0];
        let track = Track {
            track_id: String::from("0"),
            video_id: String::from("q"),
            flip: Flip::Identity,
            start_frame: 0,
            boxes: centers
                .iter()
                .map(|&c| bx(c, 0, c + 10, 10))
                .collect(),
        };
        let out = smooth_tracks(&[track], 2, 64, 48);
        let (cx, _) = out[0].boxes[2].center();
        assert_eq!(cx, 7.0); // mean of {0,0,10,0,0} centers = 2 + half width 5
    }
}
