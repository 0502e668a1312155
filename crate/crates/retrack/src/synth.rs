//! Synthetic benchmark videos: textured rectangles translating rigidly over
//! a textured background, with analytic ground-truth boxes and exact flow
//! fields. The flows let pipeline tests bypass flow-estimation error.

use std::fs;
use std::path::Path;

use retrack_core::flow::FlowField;
use retrack_core::frame::Frame;
use retrack_core::geometry::BoundingBox;
use retrack_core::index::AnnotationRow;

use crate::error::{AppError, AppResult};
use crate::io::{annotations, flo, pnm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    MovingSquare,
    TwoMovers,
    Occlusion,
}

/// One rigidly translating rectangle.
#[derive(Debug, Clone, Copy)]
pub struct MoverSpec {
    pub size: (u32, u32),
    pub start: (f64, f64),
    /// Pixels per frame (averaged over a hold period when `hold > 1`).
    pub velocity: (f64, f64),
    /// The mover advances once per `hold` frames by `hold * velocity`,
    /// giving crisp ramp-free step-averaged magnitudes. 1 means ordinary
    /// per-frame motion.
    pub hold: u32,
    /// Base color the object texture is modulated around.
    pub color: (u8, u8, u8),
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub frames: u32,
    pub movers: Vec<MoverSpec>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn scenario(scenario: Scenario, seed: u64) -> SynthSpec {
        let (video_id, frames, movers) = match scenario {
            Scenario::MovingSquare => (
                "moving_square",
                100,
                vec![MoverSpec {
                    size: (40, 40),
                    start: (20.0, 40.0),
                    velocity: (2.0, 0.0),
                    hold: 1,
                    color: (200, 60, 50),
                }],
            ),
            Scenario::TwoMovers => (
                "two_movers",
                80,
                vec![
                    MoverSpec {
                        size: (40, 40),
                        start: (20.0, 40.0),
                        velocity: (2.0, 0.0),
                        hold: 1,
                        color: (200, 60, 50),
                    },
                    MoverSpec {
                        size: (40, 40),
                        start: (260.0, 160.0),
                        velocity: (-2.0, 0.0),
                        hold: 1,
                        color: (50, 80, 210),
                    },
                ],
            ),
            Scenario::Occlusion => (
                "occlusion",
                80,
                vec![
                    MoverSpec {
                        size: (40, 40),
                        start: (20.0, 100.0),
                        velocity: (2.0, 0.0),
                        hold: 1,
                        color: (200, 60, 50),
                    },
                    MoverSpec {
                        size: (40, 40),
                        start: (260.0, 100.0),
                        velocity: (-2.0, 0.0),
                        hold: 1,
                        color: (50, 80, 210),
                    },
                ],
            ),
        };
        SynthSpec {
            video_id: video_id.to_string(),
            width: 320,
            height: 240,
            frames,
            movers,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthVideo {
    pub video_id: String,
    pub width: u32,
    pub height: u32,
    pub frames: Vec<Frame>,
    /// Exact flow from frame i to i+1, one field per consecutive pair.
    pub flows: Vec<FlowField>,
    pub annotations: Vec<AnnotationRow>,
}

fn mix(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

fn texture(x: i64, y: i64, seed: u64) -> u8 {
    (mix(seed ^ ((x as u64) << 32) ^ (y as u64 & 0xffff_ffff)) & 0xff) as u8
}

fn mover_position(spec: &MoverSpec, frame: u32) -> (i32, i32) {
    let hold = spec.hold.max(1);
    let t = (frame / hold * hold) as f64;
    let x = spec.start.0 + spec.velocity.0 * t;
    let y = spec.start.1 + spec.velocity.1 * t;
    (x.round() as i32, y.round() as i32)
}

fn mover_box(spec: &MoverSpec, frame: u32) -> BoundingBox {
    let (x, y) = mover_position(spec, frame);
    BoundingBox {
        left: x,
        top: y,
        right: x + spec.size.0 as i32,
        bottom: y + spec.size.1 as i32,
    }
}

/// Renders the whole scenario. Mover boxes must stay inside the frame over
/// the requested duration.
pub fn generate(spec: &SynthSpec) -> SynthVideo {
    let (w, h) = (spec.width, spec.height);
    for (m, mover) in spec.movers.iter().enumerate() {
        for f in [0, spec.frames - 1] {
            let b = mover_box(mover, f);
            assert!(
                b.within_frame(w, h),
                "mover {m} leaves the frame at frame {f}"
            );
        }
    }

    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut annotations = Vec::new();
    for f in 0..spec.frames {
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                // Painter order: later movers draw over earlier ones.
                let mut px = {
                    let t = texture(x as i64, y as i64, spec.seed);
                    let base = 70 + (t % 50);
                    (base, base, 40 + (t % 60))
                };
                for (m, mover) in spec.movers.iter().enumerate() {
                    let b = mover_box(mover, f);
                    if b.contains_point(x, y) {
                        // Texture in object coordinates so it translates
                        // with the mover.
                        let t = texture(
                            (x - b.left) as i64,
                            (y - b.top) as i64,
                            spec.seed ^ (m as u64 + 1),
                        );
                        let jitter = t % 40;
                        px = (
                            mover.color.0.saturating_add(jitter / 2),
                            mover.color.1.saturating_add(jitter),
                            mover.color.2.saturating_add(jitter),
                        );
                    }
                }
                data.extend_from_slice(&[px.0, px.1, px.2]);
            }
        }
        frames.push(Frame::new(w, h, data).expect("generated frame is well formed"));

        for (m, mover) in spec.movers.iter().enumerate() {
            annotations.push(AnnotationRow {
                video_id: spec.video_id.clone(),
                track_id: format!("t{m}"),
                frame: f,
                bbox: mover_box(mover, f),
            });
        }
    }

    let mut flows = Vec::with_capacity(spec.frames as usize - 1);
    for f in 0..spec.frames - 1 {
        let mut flow = FlowField::zeros(w, h);
        for mover in &spec.movers {
            let b = mover_box(mover, f);
            let next = mover_box(mover, f + 1);
            let du = (next.left - b.left) as f32;
            let dv = (next.top - b.top) as f32;
            for y in b.top.max(0)..b.bottom.min(h as i32) {
                for x in b.left.max(0)..b.right.min(w as i32) {
                    let i = (y as u32 * w + x as u32) as usize;
                    flow.u[i] = du;
                    flow.v[i] = dv;
                }
            }
        }
        flows.push(flow);
    }

    SynthVideo {
        video_id: spec.video_id.clone(),
        width: w,
        height: h,
        frames,
        flows,
        annotations,
    }
}

/// Writes a corpus directory:
///
/// ```text
/// out/videos/<video_id>/000000.ppm ...
/// out/videos/<video_id>/flow/000000.flo ...   (frame i -> i+1)
/// out/annotations.csv
/// ```
pub fn write_corpus(dir: &Path, videos: &[SynthVideo]) -> AppResult<()> {
    let mut all_rows = Vec::new();
    for video in videos {
        let vdir = dir.join("videos").join(&video.video_id);
        let fdir = vdir.join("flow");
        fs::create_dir_all(&fdir).map_err(|e| AppError::format(&fdir, e))?;
        for (i, frame) in video.frames.iter().enumerate() {
            pnm::write_ppm(&vdir.join(format!("{i:06}.ppm")), frame)?;
        }
        for (i, flow) in video.flows.iter().enumerate() {
            flo::write_flo(&fdir.join(format!("{i:06}.flo")), flow)?;
        }
        all_rows.extend(video.annotations.iter().cloned());
    }
    let tracks = annotations::tracks_from_rows(&all_rows)?;
    annotations::write_tracks(&dir.join("annotations.csv"), &tracks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_square_preset_matches_its_contract() {
        let video = generate(&SynthSpec::scenario(Scenario::MovingSquare, 7));
        assert_eq!(video.frames.len(), 100);
        // Flow inside the square is exactly (2, 0), zero outside.
        assert_eq!(video.flows[0].at(30, 50), (2.0, 0.0));
        assert_eq!(video.flows[0].at(200, 200), (0.0, 0.0));
        let b0 = video.annotations[0].bbox;
        let b1 = video.annotations[1].bbox;
        assert_eq!(b1.left - b0.left, 2);
        assert_eq!(b1.top, b0.top);
    }

    #[test]
    fn two_movers_tracks_stay_disjoint() {
        let video = generate(&SynthSpec::scenario(Scenario::TwoMovers, 3));
        for f in 0..80u32 {
            let boxes: Vec<_> = video
                .annotations
                .iter()
                .filter(|r| r.frame == f)
                .map(|r| r.bbox)
                .collect();
            assert_eq!(boxes.len(), 2);
            assert_eq!(boxes[0].intersection_area(&boxes[1]), 0);
        }
    }

    #[test]
    fn occlusion_movers_cross_mid_sequence() {
        let video = generate(&SynthSpec::scenario(Scenario::Occlusion, 3));
        let overlaps = (0..80u32).filter(|&f| {
            let boxes: Vec<_> = video
                .annotations
                .iter()
                .filter(|r| r.frame == f)
                .map(|r| r.bbox)
                .collect();
            boxes[0].intersection_area(&boxes[1]) > 0
        });
        assert!(overlaps.count() > 10, "movers never occlude");
    }

    #[test]
    fn held_movers_advance_once_per_hold_period() {
        let spec = SynthSpec {
            video_id: "held".into(),
            width: 320,
            height: 240,
            frames: 12,
            movers: vec![MoverSpec {
                size: (20, 20),
                start: (15.0, 20.0),
                velocity: (1.5, 0.0),
                hold: 4,
                color: (60, 190, 80),
            }],
            seed: 0,
        };
        let video = generate(&spec);
        let lefts: Vec<i32> = video.annotations.iter().map(|r| r.bbox.left).collect();
        assert_eq!(lefts, vec![15, 15, 15, 15, 21, 21, 21, 21, 27, 27, 27, 27]);
        // The jump lands entirely in the flow field of the frame pair that
        // crosses the hold boundary.
        assert_eq!(video.flows[3].at(20, 25), (6.0, 0.0));
        assert_eq!(video.flows[2].at(20, 25), (0.0, 0.0));
    }
}
