//! Dense optical flow: estimation, temporal averaging and magnitudes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::GrayImage;
use crate::geometry::{BoundingBox, FlipAxis};
use crate::math;

/// Per-pixel displacement field for one frame interval. Image coordinates:
/// `+u` points right, `+v` points down, units are pixels per interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: u32, height: u32) -> Self {
        let n = (width as usize) * (height as usize);
        FlowField {
            width,
            height,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn new(width: u32, height: u32, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        let n = (width as usize) * (height as usize);
        if u.len() != n || v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (u.len() as u32, v.len() as u32),
            });
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
        })
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> (f32, f32) {
        let i = (y * self.width + x) as usize;
        (self.u[i], self.v[i])
    }

    /// Mirrors the field; the displacement component along the flipped axis
    /// changes sign so that the motion stays physically consistent.
    pub fn flipped(&self, axis: FlipAxis) -> FlowField {
        let mut u = Vec::with_capacity(self.u.len());
        let mut v = Vec::with_capacity(self.v.len());
        for y in 0..self.height {
            for x in 0..self.width {
                let (sx, sy) = match axis {
                    FlipAxis::Horizontal => (self.width - 1 - x, y),
                    FlipAxis::Vertical => (x, self.height - 1 - y),
                };
                let (su, sv) = self.at(sx, sy);
                match axis {
                    FlipAxis::Horizontal => {
                        u.push(-su);
                        v.push(sv);
                    }
                    FlipAxis::Vertical => {
                        u.push(su);
                        v.push(-sv);
                    }
                }
            }
        }
        FlowField {
            width: self.width,
            height: self.height,
            u,
            v,
        }
    }

    pub fn crop(&self, x: u32, y: u32, w: u32, h: u32) -> Result<FlowField> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::Geometry(alloc::format!(
                "crop {w}x{h}+{x}+{y} exceeds field {}x{}",
                self.width,
                self.height
            )));
        }
        let mut u = Vec::with_capacity((w * h) as usize);
        let mut v = Vec::with_capacity((w * h) as usize);
        for row in y..y + h {
            let start = (row * self.width + x) as usize;
            u.extend_from_slice(&self.u[start..start + w as usize]);
            v.extend_from_slice(&self.v[start..start + w as usize]);
        }
        Ok(FlowField {
            width: w,
            height: h,
            u,
            v,
        })
    }
}

/// Euclidean norm of a flow field, one value per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeField {
    pub width: u32,
    pub height: u32,
    pub mag: Vec<f32>,
}

impl MagnitudeField {
    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.mag[(y * self.width + x) as usize]
    }

    /// Maximum value over the box clipped to the field extent; 0 when the
    /// clipped region is empty.
    pub fn max_in(&self, region: &BoundingBox) -> f32 {
        let mut m = 0.0f32;
        if let Some(r) = region.clamped(self.width, self.height) {
            for y in r.top..r.bottom {
                let row = (y as u32 * self.width) as usize;
                for x in r.left..r.right {
                    m = m.max(self.mag[row + x as usize]);
                }
            }
        }
        m
    }

    /// Arithmetic mean over the box clipped to the field extent.
    pub fn mean_in(&self, region: &BoundingBox) -> f64 {
        let Some(r) = region.clamped(self.width, self.height) else {
            return 0.0;
        };
        let mut sum = 0.0f64;
        for y in r.top..r.bottom {
            let row = (y as u32 * self.width) as usize;
            for x in r.left..r.right {
                sum += self.mag[row + x as usize] as f64;
            }
        }
        sum / r.area() as f64
    }
}

pub fn magnitude(field: &FlowField) -> MagnitudeField {
    let mag = field
        .u
        .iter()
        .zip(&field.v)
        .map(|(&u, &v)| math::sqrtf(u * u + v * v))
        .collect();
    MagnitudeField {
        width: field.width,
        height: field.height,
        mag,
    }
}

/// Averages consecutive runs of `step` fields; a trailing run shorter than
/// `step` is dropped so the output length is exactly `len / step`.
pub fn timestep_average(flows: &[FlowField], step: u32) -> Result<Vec<FlowField>> {
    if flows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if step == 0 {
        return Err(Error::InvalidParam("step"));
    }
    let (w, h) = (flows[0].width, flows[0].height);
    for f in flows {
        if f.width != w || f.height != h {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                found: (f.width, f.height),
            });
        }
    }
    let step = step as usize;
    let n = (w as usize) * (h as usize);
    let mut out = Vec::with_capacity(flows.len() / step);
    for chunk in flows.chunks_exact(step) {
        let mut u = vec![0.0f32; n];
        let mut v = vec![0.0f32; n];
        for f in chunk {
            for i in 0..n {
                u[i] += f.u[i];
                v[i] += f.v[i];
            }
        }
        let inv = 1.0 / step as f32;
        for i in 0..n {
            u[i] *= inv;
            v[i] *= inv;
        }
        out.push(FlowField {
            width: w,
            height: h,
            u,
            v,
        });
    }
    Ok(out)
}

/// Smoothness weight and iteration budget for [`compute_flow`].
#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    pub smoothness: f32,
    pub iterations: u32,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            smoothness: 0.1,
            iterations: 200,
        }
    }
}

#[inline]
fn clamp_at(img: &GrayImage, x: i64, y: i64) -> f32 {
    let cx = x.clamp(0, img.width as i64 - 1) as u32;
    let cy = y.clamp(0, img.height as i64 - 1) as u32;
    img.at(cx, cy)
}

/// Classical iterative variational flow between two grayscale images.
///
/// Gradients are averaged forward differences over the 2x2x2 cube spanned
/// by the frame pair; the update relaxes each pixel towards the weighted
/// neighbourhood average corrected by the brightness-constancy residual.
/// Deterministic for fixed inputs and parameters.
pub fn compute_flow(prev: &GrayImage, next: &GrayImage, params: &FlowParams) -> Result<FlowField> {
    if prev.width != next.width || prev.height != next.height {
        return Err(Error::DimensionMismatch {
            expected: (prev.width, prev.height),
            found: (next.width, next.height),
        });
    }
    if params.smoothness <= 0.0 {
        return Err(Error::InvalidParam("smoothness"));
    }
    if params.iterations == 0 {
        return Err(Error::InvalidParam("iterations"));
    }

    let (w, h) = (prev.width as i64, prev.height as i64);
    let n = (w * h) as usize;
    let mut ex = vec![0.0f32; n];
    let mut ey = vec![0.0f32; n];
    let mut et = vec![0.0f32; n];

    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let e = |img: &GrayImage, dx: i64, dy: i64| clamp_at(img, x + dx, y + dy);
            ex[i] = 0.25
                * (e(prev, 1, 0) - e(prev, 0, 0) + e(prev, 1, 1) - e(prev, 0, 1)
                    + e(next, 1, 0)
                    - e(next, 0, 0)
                    + e(next, 1, 1)
                    - e(next, 0, 1));
            ey[i] = 0.25
                * (e(prev, 0, 1) - e(prev, 0, 0) + e(prev, 1, 1) - e(prev, 1, 0)
                    + e(next, 0, 1)
                    - e(next, 0, 0)
                    + e(next, 1, 1)
                    - e(next, 1, 0));
            et[i] = 0.25
                * (e(next, 0, 0) - e(prev, 0, 0) + e(next, 1, 0) - e(prev, 1, 0)
                    + e(next, 0, 1)
                    - e(prev, 0, 1)
                    + e(next, 1, 1)
                    - e(prev, 1, 1));
        }
    }

    let mut u = vec![0.0f32; n];
    let mut v = vec![0.0f32; n];
    let mut nu = vec![0.0f32; n];
    let mut nv = vec![0.0f32; n];
    let lambda = params.smoothness;

    // Weighted 8-neighbour average: sides 1/6, diagonals 1/12.
    let avg = |field: &[f32], x: i64, y: i64| -> f32 {
        let sample = |dx: i64, dy: i64| {
            let cx = (x + dx).clamp(0, w - 1);
            let cy = (y + dy).clamp(0, h - 1);
            field[(cy * w + cx) as usize]
        };
        (sample(-1, 0) + sample(1, 0) + sample(0, -1) + sample(0, 1)) / 6.0
            + (sample(-1, -1) + sample(1, -1) + sample(-1, 1) + sample(1, 1)) / 12.0
    };

    for _ in 0..params.iterations {
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                let ub = avg(&u, x, y);
                let vb = avg(&v, x, y);
                let denom = lambda + ex[i] * ex[i] + ey[i] * ey[i];
                let residual = (ex[i] * ub + ey[i] * vb + et[i]) / denom;
                nu[i] = ub - ex[i] * residual;
                nv[i] = vb - ey[i] * residual;
            }
        }
        core::mem::swap(&mut u, &mut nu);
        core::mem::swap(&mut v, &mut nv);
    }

    Ok(FlowField {
        width: prev.width,
        height: prev.height,
        u,
        v,
    })
}
