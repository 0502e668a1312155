//! In-memory RGB frames, grayscale planes and frame sequences.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::FlipAxis;

/// One 8-bit RGB image, interleaved row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) * 3 {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: ((data.len() / 3) as u32, 1),
            });
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    /// Builds an RGB frame from a grayscale plane by channel replication.
    pub fn from_gray(width: u32, height: u32, gray: &[u8]) -> Result<Self> {
        if gray.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (gray.len() as u32, 1),
            });
        }
        let mut data = Vec::with_capacity(gray.len() * 3);
        for &g in gray {
            data.extend_from_slice(&[g, g, g]);
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> (u8, u8, u8) {
        let i = ((y * self.width + x) * 3) as usize;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }

    /// Rec. 601 luma, kept at the 0..255 scale.
    pub fn luma(&self) -> GrayImage {
        let mut data = Vec::with_capacity((self.width * self.height) as usize);
        for px in self.data.chunks_exact(3) {
            data.push(0.299 * px[0] as f32 + 0.587 * px[1] as f32 + 0.114 * px[2] as f32);
        }
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn flipped(&self, axis: FlipAxis) -> Frame {
        let mut out = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in 0..self.width {
                let (sx, sy) = match axis {
                    FlipAxis::Horizontal => (self.width - 1 - x, y),
                    FlipAxis::Vertical => (x, self.height - 1 - y),
                };
                let i = ((sy * self.width + sx) * 3) as usize;
                out.extend_from_slice(&self.data[i..i + 3]);
            }
        }
        Frame {
            width: self.width,
            height: self.height,
            data: out,
        }
    }

    /// Extracts the sub-image at `(x, y)` of size `w`×`h`.
    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<Frame> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::Geometry(alloc::format!(
                "crop {w}x{h}+{x}+{y} exceeds frame {}x{}",
                self.width,
                self.height
            )));
        }
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for row in y..y + h {
            let start = ((row * self.width + x) * 3) as usize;
            data.extend_from_slice(&self.data[start..start + (w * 3) as usize]);
        }
        Ok(Frame {
            width: w,
            height: h,
            data,
        })
    }
}

/// Floating-point grayscale plane used by the flow estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl GrayImage {
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.data[(y * self.width + x) as usize]
    }
}

/// An ordered run of equally sized frames from one video.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    pub video_id: String,
    pub fps: f64,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(video_id: String, fps: f64, frames: Vec<Frame>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::EmptyInput);
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        for f in &frames[1..] {
            if f.width() != w || f.height() != h {
                return Err(Error::DimensionMismatch {
                    expected: (w, h),
                    found: (f.width(), f.height()),
                });
            }
        }
        Ok(FrameSequence {
            video_id,
            fps,
            frames,
        })
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty() // construction requires at least two frames
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn sequence_rejects_mixed_dimensions() {
        let a = Frame::from_gray(4, 4, &[0; 16]).unwrap();
        let b = Frame::from_gray(8, 8, &[0; 64]).unwrap();
        let err = FrameSequence::new("v".to_string(), 24.0, vec![a, b]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn sequence_requires_two_frames() {
        let a = Frame::from_gray(4, 4, &[0; 16]).unwrap();
        assert!(FrameSequence::new("v".to_string(), 24.0, vec![a]).is_err());
    }

    #[test]
    fn gray_replication_and_luma() {
        let f = Frame::from_gray(2, 1, &[10, 200]).unwrap();
        assert_eq!(f.rgb(0, 0), (10, 10, 10));
        let l = f.luma();
        assert!((l.at(1, 0) - 200.0).abs() < 1e-3);
    }

    #[test]
    fn flip_round_trip() {
        let f = Frame::new(2, 2, vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12]).unwrap();
        let g = f.flipped(FlipAxis::Horizontal).flipped(FlipAxis::Horizontal);
        assert_eq!(f, g);
        assert_eq!(f.flipped(FlipAxis::Horizontal).rgb(0, 0), (4, 5, 6));
    }
}
