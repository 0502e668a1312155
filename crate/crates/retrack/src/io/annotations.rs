//! Track CSV files, shared by library annotations, ground truth and tracker
//! output: `video_id,track_id,frame,left,top,right,bottom`, frames 0-based.

use std::collections::BTreeMap;
use std::path::Path;

use retrack_core::document::Flip;
use retrack_core::geometry::BoundingBox;
use retrack_core::index::{AnnotationRow, Track};

use crate::error::{AppError, AppResult};

pub const HEADER: [&str; 7] = [
    "video_id", "track_id", "frame", "left", "top", "right", "bottom",
];

pub fn read_annotations(path: &Path) -> AppResult<Vec<AnnotationRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| AppError::format(path, e))?;
    let headers = reader.headers().map_err(|e| AppError::format(path, e))?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(AppError::format(path, "unexpected CSV header"));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AppError::format(path, e))?;
        let parse_i32 = |i: usize| -> AppResult<i32> {
            record[i]
                .trim()
                .parse()
                .map_err(|_| AppError::format(path, format!("bad integer on row {}", line + 2)))
        };
        let frame: u32 = record[2]
            .trim()
            .parse()
            .map_err(|_| AppError::format(path, format!("bad frame on row {}", line + 2)))?;
        let bbox = BoundingBox::new(parse_i32(3)?, parse_i32(4)?, parse_i32(5)?, parse_i32(6)?)
            .map_err(|e| AppError::format(path, e))?;
        rows.push(AnnotationRow {
            video_id: record[0].to_string(),
            track_id: record[1].to_string(),
            frame,
            bbox,
        });
    }
    Ok(rows)
}

pub fn write_tracks(path: &Path, tracks: &[Track]) -> AppResult<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e))?;
    writer
        .write_record(HEADER)
        .map_err(|e| AppError::format(path, e))?;
    for track in tracks {
        for (i, bbox) in track.boxes.iter().enumerate() {
            let frame = track.start_frame + i as u32;
            writer
                .write_record([
                    track.video_id.as_str(),
                    track.track_id.as_str(),
                    &frame.to_string(),
                    &bbox.left.to_string(),
                    &bbox.top.to_string(),
                    &bbox.right.to_string(),
                    &bbox.bottom.to_string(),
                ])
                .map_err(|e| AppError::format(path, e))?;
        }
    }
    writer.flush().map_err(|e| AppError::format(path, e))?;
    Ok(())
}

/// Groups annotation rows into tracks with contiguous frame ranges; used
/// when evaluating CSV files that come without video geometry.
pub fn tracks_from_rows(rows: &[AnnotationRow]) -> AppResult<Vec<Track>> {
    let mut grouped: BTreeMap<(String, String), Vec<&AnnotationRow>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry((row.video_id.clone(), row.track_id.clone()))
            .or_default()
            .push(row);
    }
    let mut tracks = Vec::new();
    for ((video_id, track_id), mut entries) in grouped {
        entries.sort_by_key(|r| r.frame);
        for pair in entries.windows(2) {
            if pair[1].frame != pair[0].frame + 1 {
                return Err(AppError::input(format!(
                    "track '{track_id}' in '{video_id}' has a frame gap at {}",
                    pair[0].frame
                )));
            }
        }
        tracks.push(Track {
            track_id,
            video_id,
            flip: Flip::Identity,
            start_frame: entries[0].frame,
            boxes: entries.iter().map(|r| r.bbox).collect(),
        });
    }
    Ok(tracks)
}
