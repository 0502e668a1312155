//! Binary PGM (P5) and PPM (P6) images, 8 bits per channel.

use std::fs;
use std::io::Write;
use std::path::Path;

use retrack_core::frame::{Frame, FrameSequence};

use crate::error::{AppError, AppResult};

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn skip_separators(&mut self) {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<u32> {
        let tok = self.token()?;
        std::str::from_utf8(tok).ok()?.parse().ok()
    }
}

/// Reads one P5/P6 file; grayscale images are replicated across channels.
pub fn read_pnm(path: &Path) -> AppResult<Frame> {
    let bytes = fs::read(path).map_err(|e| AppError::format(path, e))?;
    let mut parser = HeaderParser {
        bytes: &bytes,
        pos: 0,
    };
    let magic = parser
        .token()
        .ok_or_else(|| AppError::format(path, "missing magic"))?;
    let channels = match magic {
        b"P5" => 1usize,
        b"P6" => 3usize,
        _ => return Err(AppError::format(path, "not a binary PGM/PPM file")),
    };
    let width = parser
        .number()
        .ok_or_else(|| AppError::format(path, "bad width"))?;
    let height = parser
        .number()
        .ok_or_else(|| AppError::format(path, "bad height"))?;
    let maxval = parser
        .number()
        .ok_or_else(|| AppError::format(path, "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(AppError::format(path, "only 8-bit samples are supported"));
    }
    // Exactly one whitespace byte separates the header from the payload.
    let data_start = parser.pos + 1;
    let expected = width as usize * height as usize * channels;
    if bytes.len() < data_start + expected {
        return Err(AppError::format(path, "truncated pixel data"));
    }
    let data = &bytes[data_start..data_start + expected];
    let frame = if channels == 1 {
        Frame::from_gray(width, height, data)
    } else {
        Frame::new(width, height, data.to_vec())
    };
    frame.map_err(|e| AppError::format(path, e))
}

pub fn write_ppm(path: &Path, frame: &Frame) -> AppResult<()> {
    let mut out = Vec::with_capacity(frame.data().len() + 32);
    write!(out, "P6\n{} {}\n255\n", frame.width(), frame.height())
        .expect("write to vec cannot fail");
    out.extend_from_slice(frame.data());
    fs::write(path, out).map_err(|e| AppError::format(path, e))
}

pub fn write_pgm(path: &Path, width: u32, height: u32, gray: &[u8]) -> AppResult<()> {
    assert_eq!(gray.len(), (width * height) as usize);
    let mut out = Vec::with_capacity(gray.len() + 32);
    write!(out, "P5\n{width} {height}\n255\n").expect("write to vec cannot fail");
    out.extend_from_slice(gray);
    fs::write(path, out).map_err(|e| AppError::format(path, e))
}

/// Loads all PGM/PPM files of a directory in lexicographic name order as one
/// sequence; the video id is the directory name.
pub fn load_frames(dir: &Path, fps: f64) -> AppResult<FrameSequence> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| AppError::format(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    if paths.len() < 2 {
        return Err(AppError::format(dir, "need at least two frames"));
    }
    let frames = paths
        .iter()
        .map(|p| read_pnm(p))
        .collect::<AppResult<Vec<_>>>()?;
    let video_id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("query")
        .to_string();
    FrameSequence::new(video_id, fps, frames).map_err(|e| AppError::format(dir, e))
}
