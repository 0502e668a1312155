//! Binary motion documents: per-cube direction codes, multi-scale
//! configurations and sliding-window fragments.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::geometry::FlipAxis;
use crate::math;

/// Number of quantized motion directions per cube.
pub const DIRECTIONS: usize = 4;

/// Unit vectors for the quantized directions, ordered (up, left, down,
/// right) in image coordinates where +y points down.
const AXES: [(f32, f32); DIRECTIONS] = [(0.0, -1.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)];

/// 4-bit activity pattern of one spatio-temporal cube,
/// ordered (up, left, down, right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotionCode {
    pub bits: [bool; DIRECTIONS],
}

impl MotionCode {
    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Quantizes the flow vectors of one cube over one time step.
///
/// Vectors at or below `mag_threshold` are discarded. Each surviving vector
/// votes for the one or two nearest axis directions with weight equal to its
/// clamped cosine similarity to that axis; vote sums are normalized by the
/// cube pixel count and a direction bit is set when its normalized sum
/// exceeds `vote_threshold`.
pub fn encode_cube(vectors: &[(f32, f32)], mag_threshold: f32, vote_threshold: f32) -> MotionCode {
    let mut votes = [0.0f32; DIRECTIONS];
    for &(u, v) in vectors {
        let mag = math::sqrtf(u * u + v * v);
        if mag <= mag_threshold {
            continue;
        }
        for (d, &(ax, ay)) in AXES.iter().enumerate() {
            let cos = (u * ax + v * ay) / mag;
            if cos > 0.0 {
                votes[d] += cos;
            }
        }
    }
    let norm = vectors.len() as f32;
    let mut bits = [false; DIRECTIONS];
    for d in 0..DIRECTIONS {
        bits[d] = votes[d] / norm > vote_threshold;
    }
    MotionCode { bits }
}

/// One of the 21 spatial configurations of a video: a sub-rectangle of the
/// full frame together with its subdivision level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleConfig {
    pub config_id: u8,
    pub offset_x: u32,
    pub offset_y: u32,
    pub width: u32,
    pub height: u32,
    /// Subdivision factor: 1, 2 or 4 along each axis.
    pub level: u8,
}

/// Full frame, the four quadrants, then sixteen equal parts; 21 in total,
/// row-major within each level. Regions of one level tile the frame exactly
/// when the dimensions are divisible by 4.
pub fn multiscale_configs(width: u32, height: u32) -> Vec<ScaleConfig> {
    let mut configs = Vec::with_capacity(21);
    let mut id = 0u8;
    for level in [1u32, 2, 4] {
        let w = width / level;
        let h = height / level;
        for row in 0..level {
            for col in 0..level {
                configs.push(ScaleConfig {
                    config_id: id,
                    offset_x: col * w,
                    offset_y: row * h,
                    width: w,
                    height: h,
                    level: level as u8,
                });
                id += 1;
            }
        }
    }
    configs
}

/// Cube geometry derived from a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeGrid {
    pub cube_w: u32,
    pub cube_h: u32,
    pub cols: u32,
    pub rows: u32,
}

impl CubeGrid {
    /// Grid for `config` with the base cube size scaled down by the
    /// subdivision level, keeping the word count constant across levels.
    pub fn for_config(config: &ScaleConfig, cube_base: u32) -> Result<Self> {
        let level = config.level as u32;
        if level == 0 || !cube_base.is_multiple_of(level) {
            return Err(Error::Geometry(alloc::format!(
                "cube base {cube_base} not divisible by level {level}"
            )));
        }
        let cube = cube_base / level;
        if cube == 0 || !config.width.is_multiple_of(cube) || !config.height.is_multiple_of(cube) {
            return Err(Error::Geometry(alloc::format!(
                "region {}x{} not divisible by cube {cube}",
                config.width,
                config.height
            )));
        }
        Ok(CubeGrid {
            cube_w: cube,
            cube_h: cube,
            cols: config.width / cube,
            rows: config.height / cube,
        })
    }

    pub fn word_count(&self) -> u32 {
        self.cols * self.rows * DIRECTIONS as u32
    }
}

/// Binary word-by-time activation matrix for one video configuration,
/// stored sparsely as the set of active `(word, time_step)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionDocument {
    pub config_id: u8,
    /// Word count per time step.
    pub words: u32,
    /// Number of time steps.
    pub steps: u32,
    pub activations: BTreeSet<(u32, u32)>,
}

/// Document generation knobs shared by library and query sides.
#[derive(Debug, Clone, Copy)]
pub struct DocumentParams {
    pub cube_base: u32,
    pub mag_threshold: f32,
    pub vote_threshold: f32,
}

impl Default for DocumentParams {
    fn default() -> Self {
        DocumentParams {
            cube_base: 20,
            mag_threshold: 1.0,
            vote_threshold: 0.10,
        }
    }
}

/// Builds the document of `config` from per-time-step flow fields of the
/// full frame. Word layout: `(row * cols + col) * 4 + direction`.
pub fn build_document(
    flows: &[FlowField],
    config: &ScaleConfig,
    params: &DocumentParams,
) -> Result<MotionDocument> {
    let grid = CubeGrid::for_config(config, params.cube_base)?;
    let mut activations = BTreeSet::new();
    let mut vectors = Vec::with_capacity((grid.cube_w * grid.cube_h) as usize);

    for (t, flow) in flows.iter().enumerate() {
        if flow.width < config.offset_x + config.width || flow.height < config.offset_y + config.height
        {
            return Err(Error::Geometry(alloc::format!(
                "config {} region exceeds flow field {}x{}",
                config.config_id,
                flow.width,
                flow.height
            )));
        }
        for row in 0..grid.rows {
            for col in 0..grid.cols {
                vectors.clear();
                let x0 = config.offset_x + col * grid.cube_w;
                let y0 = config.offset_y + row * grid.cube_h;
                for y in y0..y0 + grid.cube_h {
                    for x in x0..x0 + grid.cube_w {
                        vectors.push(flow.at(x, y));
                    }
                }
                let code = encode_cube(&vectors, params.mag_threshold, params.vote_threshold);
                if code.is_empty() {
                    continue;
                }
                let base = (row * grid.cols + col) * DIRECTIONS as u32;
                for (d, &bit) in code.bits.iter().enumerate() {
                    if bit {
                        activations.insert((base + d as u32, t as u32));
                    }
                }
            }
        }
    }

    Ok(MotionDocument {
        config_id: config.config_id,
        words: grid.word_count(),
        steps: flows.len() as u32,
        activations,
    })
}

/// Mirror variant of a library video. `Identity` precedes the flipped
/// variants in the derived ordering, which retrieval tie-breaks rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flip {
    Identity,
    Horizontal,
    Vertical,
}

impl Flip {
    pub fn axis(&self) -> Option<FlipAxis> {
        match self {
            Flip::Identity => None,
            Flip::Horizontal => Some(FlipAxis::Horizontal),
            Flip::Vertical => Some(FlipAxis::Vertical),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Flip::Identity => "o",
            Flip::Horizontal => "h",
            Flip::Vertical => "v",
        }
    }
}

/// Identity of one indexed fragment. The derived ordering (video id, config,
/// flip, start) doubles as the deterministic retrieval tie-break.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FragmentId {
    pub video_id: String,
    pub config_id: u8,
    pub flip: Flip,
    pub start: u32,
}

impl core::fmt::Display for FragmentId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{}:c{}:{}:t{}",
            self.video_id,
            self.config_id,
            self.flip.tag(),
            self.start
        )
    }
}

/// A sliding window of a document: the atomic retrieval unit. Activations
/// are re-based to window-relative time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub id: FragmentId,
    /// Window length in time steps.
    pub window: u32,
    pub activations: BTreeSet<(u32, u32)>,
}

/// Cuts a document into overlapping fragments of `window` steps at stride 1.
/// Fragments with no activations are kept. Returns an empty list when the
/// document is shorter than the window.
pub fn fragmentize(
    doc: &MotionDocument,
    video_id: &str,
    flip: Flip,
    window: u32,
) -> Vec<Fragment> {
    if window == 0 || doc.steps < window {
        return Vec::new();
    }
    let mut fragments = Vec::with_capacity((doc.steps - window + 1) as usize);
    for start in 0..=doc.steps - window {
        let activations = doc
            .activations
            .iter()
            .filter(|&&(_, t)| t >= start && t < start + window)
            .map(|&(w, t)| (w, t - start))
            .collect();
        fragments.push(Fragment {
            id: FragmentId {
                video_id: String::from(video_id),
                config_id: doc.config_id,
                flip,
                start,
            },
            window,
            activations,
        });
    }
    fragments
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn constant_flow(w: u32, h: u32, u: f32, v: f32) -> FlowField {
        let n = (w * h) as usize;
        FlowField::new(w, h, vec![u; n], vec![v; n]).unwrap()
    }

    #[test]
    fn axis_aligned_vector_votes_one_direction() {
        let vectors = vec![(0.0, -2.0); 16];
        let code = encode_cube(&vectors, 1.0, 0.1);
        assert_eq!(code.bits, [true, false, false, false]);
    }

    #[test]
    fn diagonal_vector_splits_evenly() {
        let s = 2.0f32 / core::f32::consts::SQRT_2;
        let vectors = vec![(-s, -s); 16];
        let code = encode_cube(&vectors, 1.0, 0.1);
        assert_eq!(code.bits, [true, true, false, false]);
    }

    #[test]
    fn magnitude_gate_discards_slow_vectors() {
        let vectors = vec![(0.3, -0.4); 16]; // magnitude 0.5
        let code = encode_cube(&vectors, 1.0, 0.1);
        assert!(code.is_empty());
    }

    #[test]
    fn vote_order_does_not_matter() {
        let mut vectors = vec![(0.0, -2.0); 8];
        vectors.extend(vec![(3.0, 0.0); 8]);
        let a = encode_cube(&vectors, 1.0, 0.1);
        vectors.reverse();
        let b = encode_cube(&vectors, 1.0, 0.1);
        assert_eq!(a, b);
    }

    #[test]
    fn word_count_is_constant_across_configs() {
        let configs = multiscale_configs(320, 240);
        assert_eq!(configs.len(), 21);
        let params = DocumentParams::default();
        let flows = [constant_flow(320, 240, 0.0, 0.0)];
        let counts: Vec<u32> = configs
            .iter()
            .map(|c| build_document(&flows, c, &params).unwrap().words)
            .collect();
        assert!(counts.iter().all(|&w| w == 768));
    }

    #[test]
    fn quadrant_regions_tile_the_frame() {
        let configs = multiscale_configs(320, 240);
        let level2: Vec<_> = configs.iter().filter(|c| c.level == 2).collect();
        assert_eq!(level2.len(), 4);
        let offsets: Vec<_> = level2.iter().map(|c| (c.offset_x, c.offset_y)).collect();
        assert_eq!(offsets, vec![(0, 0), (160, 0), (0, 120), (160, 120)]);
        assert!(level2.iter().all(|c| c.width == 160 && c.height == 120));
        let level4: Vec<_> = configs.iter().filter(|c| c.level == 4).collect();
        assert_eq!(level4.len(), 16);
        assert!(level4.iter().all(|c| c.width == 80 && c.height == 60));
    }

    #[test]
    fn zero_flow_gives_empty_document() {
        let configs = multiscale_configs(320, 240);
        let flows = vec![constant_flow(320, 240, 0.0, 0.0); 3];
        let doc = build_document(&flows, &configs[0], &DocumentParams::default()).unwrap();
        assert!(doc.activations.is_empty());
        assert_eq!(doc.steps, 3);
    }

    #[test]
    fn rejects_non_divisible_geometry() {
        let config = ScaleConfig {
            config_id: 0,
            offset_x: 0,
            offset_y: 0,
            width: 330,
            height: 240,
            level: 1,
        };
        let flows = [constant_flow(330, 240, 0.0, 0.0)];
        let err = build_document(&flows, &config, &DocumentParams::default()).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn fragment_counts_and_rebasing() {
        let mut activations = BTreeSet::new();
        activations.insert((5u32, 9u32));
        let doc = MotionDocument {
            config_id: 0,
            words: 768,
            steps: 20,
            activations,
        };
        let frags = fragmentize(&doc, "v", Flip::Identity, 8);
        assert_eq!(frags.len(), 13);
        assert!(frags[2].activations.contains(&(5, 7)));
        assert!(frags[9].activations.contains(&(5, 0)));
        assert!(frags[0].activations.is_empty());
    }

    #[test]
    fn single_window_fragment_is_whole_document() {
        let mut activations = BTreeSet::new();
        activations.insert((1u32, 0u32));
        activations.insert((2u32, 7u32));
        let doc = MotionDocument {
            config_id: 0,
            words: 768,
            steps: 8,
            activations: activations.clone(),
        };
        let frags = fragmentize(&doc, "v", Flip::Identity, 8);
        assert_eq!(frags.len(), 1);
        assert_eq!(frags[0].activations, activations);
        assert!(fragmentize(&doc, "v", Flip::Identity, 9).is_empty());
    }

    #[test]
    fn every_fragment_activation_maps_back_to_the_document() {
        let mut activations = BTreeSet::new();
        for t in 0..12u32 {
            activations.insert((t * 4 % 768, t));
            activations.insert(((t * 7 + 3) % 768, t));
        }
        let doc = MotionDocument {
            config_id: 0,
            words: 768,
            steps: 12,
            activations: activations.clone(),
        };
        for frag in fragmentize(&doc, "v", Flip::Identity, 8) {
            for &(w, tau) in &frag.activations {
                assert!(activations.contains(&(w, tau + frag.id.start)));
            }
            // and the window is covered losslessly
            let expected: BTreeSet<_> = activations
                .iter()
                .filter(|&&(_, t)| t >= frag.id.start && t < frag.id.start + 8)
                .map(|&(w, t)| (w, t - frag.id.start))
                .collect();
            assert_eq!(frag.activations, expected);
        }
    }

    #[test]
    fn horizontal_flip_permutes_words() {
        // One moving cube on a small 80x40 frame with 20px cubes.
        let params = DocumentParams::default();
        let config = ScaleConfig {
            config_id: 0,
            offset_x: 0,
            offset_y: 0,
            width: 80,
            height: 40,
            level: 1,
        };
        let mut flow = constant_flow(80, 40, 0.0, 0.0);
        for y in 0..20u32 {
            for x in 20..40u32 {
                let i = (y * 80 + x) as usize;
                flow.u[i] = 2.0;
            }
        }
        let doc = build_document(core::slice::from_ref(&flow), &config, &params).unwrap();
        let flipped = flow.flipped(FlipAxis::Horizontal);
        let doc_f = build_document(core::slice::from_ref(&flipped), &config, &params).unwrap();

        let cols = 4u32;
        let permuted: BTreeSet<(u32, u32)> = doc
            .activations
            .iter()
            .map(|&(w, t)| {
                let dir = w % 4;
                let cube = w / 4;
                let (row, col) = (cube / cols, cube % cols);
                let dir_f = match dir {
                    1 => 3,
                    3 => 1,
                    d => d,
                };
                ((row * cols + (cols - 1 - col)) * 4 + dir_f, t)
            })
            .collect();
        assert_eq!(doc_f.activations, permuted);
        assert!(!doc.activations.is_empty());
    }
}
