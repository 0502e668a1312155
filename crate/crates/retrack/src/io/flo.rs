//! Optical-flow files: 4-byte magic "PIEH", little-endian 32-bit width and
//! height, then row-major interleaved (u, v) little-endian 32-bit floats.

use std::fs;
use std::path::Path;

use retrack_core::flow::FlowField;

use crate::error::{AppError, AppResult};

const MAGIC: &[u8; 4] = b"PIEH";

pub fn read_flo(path: &Path) -> AppResult<FlowField> {
    let bytes = fs::read(path).map_err(|e| AppError::format(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != MAGIC {
        return Err(AppError::format(path, "bad flow-file magic"));
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(AppError::format(path, "non-positive dimensions"));
    }
    let (width, height) = (width as u32, height as u32);
    let count = width as usize * height as usize;
    if bytes.len() != 12 + count * 8 {
        return Err(AppError::format(path, "payload size does not match header"));
    }
    let mut u = Vec::with_capacity(count);
    let mut v = Vec::with_capacity(count);
    for pair in bytes[12..].chunks_exact(8) {
        u.push(f32::from_le_bytes(pair[0..4].try_into().unwrap()));
        v.push(f32::from_le_bytes(pair[4..8].try_into().unwrap()));
    }
    FlowField::new(width, height, u, v).map_err(|e| AppError::format(path, e))
}

pub fn write_flo(path: &Path, field: &FlowField) -> AppResult<()> {
    let count = field.u.len();
    let mut out = Vec::with_capacity(12 + count * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(field.width as i32).to_le_bytes());
    out.extend_from_slice(&(field.height as i32).to_le_bytes());
    for i in 0..count {
        out.extend_from_slice(&field.u[i].to_le_bytes());
        out.extend_from_slice(&field.v[i].to_le_bytes());
    }
    fs::write(path, out).map_err(|e| AppError::format(path, e))
}

/// Loads every `.flo` file of a directory in lexicographic name order.
pub fn load_flow_dir(dir: &Path) -> AppResult<Vec<FlowField>> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| AppError::format(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("flo"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_flo(p)).collect()
}
