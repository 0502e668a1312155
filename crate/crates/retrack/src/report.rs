//! Serializable evaluation reports and curve files.

use std::path::Path;

use serde::Serialize;

use crate::error::{AppError, AppResult};

#[derive(Debug, Serialize)]
pub struct TrackReport {
    pub video_id: String,
    pub gt_track: String,
    pub hyp_track: Option<String>,
    pub mean_overlap: f64,
    pub mean_center_error: Option<f64>,
    pub overlap_precision: f64,
    pub distance_precision: f64,
}

#[derive(Debug, Serialize)]
pub struct SingleReport {
    pub mode: &'static str,
    pub overlap_threshold: f64,
    pub distance_threshold: f64,
    pub mean_overlap: f64,
    pub mean_center_error: Option<f64>,
    pub overlap_precision: f64,
    pub distance_precision: f64,
    pub tracks: Vec<TrackReport>,
}

#[derive(Debug, Serialize)]
pub struct ClearReport {
    pub mode: &'static str,
    pub match_threshold: f64,
    pub mota: f64,
    pub motp: f64,
    pub gt_boxes: u64,
    pub misses: u64,
    pub false_positives: u64,
    pub id_switches: u64,
    pub matches: u64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let json = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    std::fs::write(path, json).map_err(|e| AppError::format(path, e))
}

/// Writes a `threshold,precision` CSV next to the report.
pub fn write_curve(path: &Path, curve: &[(f64, f64)]) -> AppResult<()> {
    let mut out = String::from("threshold,precision\n");
    for (t, p) in curve {
        out.push_str(&format!("{t},{p}\n"));
    }
    std::fs::write(path, out).map_err(|e| AppError::format(path, e))
}
