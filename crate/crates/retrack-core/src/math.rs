//! Float intrinsics routed through `libm` when building without `std`.

#[cfg(feature = "std")]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline]
    pub fn sqrtf(x: f32) -> f32 {
        x.sqrt()
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        x.floor()
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        x.round()
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        x.ceil()
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline]
    pub fn sqrtf(x: f32) -> f32 {
        libm::sqrtf(x)
    }
    #[inline]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline]
    pub fn floor(x: f64) -> f64 {
        libm::floor(x)
    }
    #[inline]
    pub fn round(x: f64) -> f64 {
        libm::round(x)
    }
    #[inline]
    pub fn ceil(x: f64) -> f64 {
        libm::ceil(x)
    }
}

pub(crate) use imp::*;

/// Euclidean remainder for positive moduli, usable without `std`.
pub(crate) fn rem_euclid(a: f64, b: f64) -> f64 {
    a - b * floor(a / b)
}

/// Mixes a base seed with per-item coordinates so that independently
/// warped candidates get distinct, order-independent RNG streams.
pub(crate) fn derive_seed(base: u64, frame: u32, item: u64) -> u64 {
    base ^ (frame as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ item.wrapping_mul(0xd1b5_4a32_d192_ed03)
}

/// FNV-1a over a byte string; stable across platforms.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
