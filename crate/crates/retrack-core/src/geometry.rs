//! Axis-aligned bounding boxes and mirror transforms.

use crate::error::{Error, Result};
use crate::math;

/// Mirror axis for frames, flow fields, boxes and annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipAxis {
    Horizontal,
    Vertical,
}

/// Half-open rectangle in pixel coordinates: `left <= x < right`,
/// `top <= y < bottom`. Positive area is a construction invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoundingBox {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl BoundingBox {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Result<Self> {
        if left >= right || top >= bottom {
            return Err(Error::InvalidAnnotation(alloc::format!(
                "degenerate box ({left},{top},{right},{bottom})"
            )));
        }
        Ok(BoundingBox {
            left,
            top,
            right,
            bottom,
        })
    }

    pub fn width(&self) -> i32 {
        self.right - self.left
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    pub fn area(&self) -> i64 {
        self.width() as i64 * self.height() as i64
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.left + self.right) as f64 / 2.0,
            (self.top + self.bottom) as f64 / 2.0,
        )
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let w = (self.right.min(other.right) - self.left.max(other.left)).max(0);
        let h = (self.bottom.min(other.bottom) - self.top.max(other.top)).max(0);
        w as i64 * h as i64
    }

    /// Smallest box containing both operands.
    pub fn union_bounds(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }

    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.left && x < self.right && y >= self.top && y < self.bottom
    }

    pub fn within_frame(&self, width: u32, height: u32) -> bool {
        self.left >= 0 && self.top >= 0 && self.right <= width as i32 && self.bottom <= height as i32
    }

    /// Mirrors the box inside a frame of the given extent along `axis`.
    pub fn flipped(&self, axis: FlipAxis, frame_width: u32, frame_height: u32) -> BoundingBox {
        match axis {
            FlipAxis::Horizontal => BoundingBox {
                left: frame_width as i32 - self.right,
                top: self.top,
                right: frame_width as i32 - self.left,
                bottom: self.bottom,
            },
            FlipAxis::Vertical => BoundingBox {
                left: self.left,
                top: frame_height as i32 - self.bottom,
                right: self.right,
                bottom: frame_height as i32 - self.top,
            },
        }
    }

    /// Clamps the box into the frame, preserving validity. Returns `None`
    /// when nothing of the box remains inside.
    pub fn clamped(&self, width: u32, height: u32) -> Option<BoundingBox> {
        let left = self.left.max(0);
        let top = self.top.max(0);
        let right = self.right.min(width as i32);
        let bottom = self.bottom.min(height as i32);
        if left < right && top < bottom {
            Some(BoundingBox {
                left,
                top,
                right,
                bottom,
            })
        } else {
            None
        }
    }

    /// Rebuilds a box from fractional center and scale, rounding each edge.
    pub fn from_center_scale(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        let left = math::round(cx - w / 2.0) as i32;
        let right = math::round(cx + w / 2.0) as i32;
        let top = math::round(cy - h / 2.0) as i32;
        let bottom = math::round(cy + h / 2.0) as i32;
        BoundingBox {
            left,
            top,
            right: right.max(left + 1),
            bottom: bottom.max(top + 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(BoundingBox::new(5, 5, 5, 10).is_err());
        assert!(BoundingBox::new(0, 8, 10, 8).is_err());
        assert!(BoundingBox::new(0, 0, 1, 1).is_ok());
    }

    #[test]
    fn horizontal_flip_mirrors_edges() {
        let b = BoundingBox::new(10, 20, 30, 40).unwrap();
        let f = b.flipped(FlipAxis::Horizontal, 320, 240);
        assert_eq!((f.left, f.top, f.right, f.bottom), (290, 20, 310, 40));
    }

    #[test]
    fn double_flip_is_identity() {
        let b = BoundingBox::new(3, 7, 50, 90).unwrap();
        for axis in [FlipAxis::Horizontal, FlipAxis::Vertical] {
            assert_eq!(b.flipped(axis, 320, 240).flipped(axis, 320, 240), b);
        }
    }

    #[test]
    fn center_and_reassembly_round_trip() {
        let b = BoundingBox::new(4, 6, 14, 26).unwrap();
        let (cx, cy) = b.center();
        let r = BoundingBox::from_center_scale(cx, cy, b.width() as f64, b.height() as f64);
        assert_eq!(r, b);
    }
}
