//! Run configuration: one JSON file covering every tunable, with defaults
//! matching the reference operating point.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use retrack_core::assoc::AssociationParams;
use retrack_core::flow::FlowParams;
use retrack_core::index::IndexParams;
use retrack_core::pipeline::TrackerConfig;
use retrack_core::retrieval::RetrievalParams;
use retrack_core::transfer::WarpParams;

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // document generation
    pub cube_base: u32,
    pub step: u32,
    pub window: u32,
    pub mag_threshold: f32,
    pub vote_threshold: f32,
    // retrieval
    pub stop_fraction: f64,
    pub max_iterations: u32,
    // warping
    pub alpha: f64,
    pub hist_bins: usize,
    pub warp_batches: u32,
    pub warp_seed: u64,
    // suppression
    pub nms_iou: f64,
    // association and smoothing
    pub beta: f64,
    pub gate_distance: f64,
    pub smooth_half_window: u32,
    // evaluation
    pub clear_iou: f64,
    pub overlap_threshold: f64,
    pub distance_threshold: f64,
    // sampling and flow estimation
    pub sample_seed: u64,
    pub flow_smoothness: f32,
    pub flow_iterations: u32,
    pub fps: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cube_base: 20,
            step: 4,
            window: 8,
            mag_threshold: 1.0,
            vote_threshold: 0.10,
            stop_fraction: 0.1,
            max_iterations: 16,
            alpha: 2000.0,
            hist_bins: 16,
            warp_batches: 10,
            warp_seed: 0,
            nms_iou: 0.5,
            beta: 2.5,
            gate_distance: 12.0,
            smooth_half_window: 2,
            clear_iou: 0.5,
            overlap_threshold: 0.5,
            distance_threshold: 20.0,
            sample_seed: 0,
            flow_smoothness: 0.1,
            flow_iterations: 200,
            fps: 24.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> AppResult<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let bytes = fs::read(p).map_err(|e| AppError::format(p, e))?;
                serde_json::from_slice(&bytes).map_err(|e| AppError::format(p, e))
            }
        }
    }

    pub fn index_params(&self) -> IndexParams {
        IndexParams {
            cube_base: self.cube_base,
            step: self.step,
            window: self.window,
            mag_threshold: self.mag_threshold,
            vote_threshold: self.vote_threshold,
        }
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            retrieval: RetrievalParams {
                stop_fraction: self.stop_fraction,
                max_iterations: self.max_iterations,
            },
            warp: WarpParams {
                alpha: self.alpha,
                bins: self.hist_bins,
                batches: self.warp_batches,
                seed: self.warp_seed,
            },
            nms_iou: self.nms_iou,
            association: AssociationParams {
                beta: self.beta,
                gate_distance: self.gate_distance,
            },
            smooth_half_window: self.smooth_half_window,
        }
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            smoothness: self.flow_smoothness,
            iterations: self.flow_iterations,
        }
    }
}
