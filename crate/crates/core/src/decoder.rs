//! Deterministic procedural decoder: latent vector to 512x512 line sketch.
//!
//! The latent is split into 16 blocks of 32 coordinates. With `u_k = z[32b + k] / 3`,
//! block `b` describes one quadrilateral outline:
//!
//! | dims        | parameter                                   |
//! |-------------|---------------------------------------------|
//! | u1, u2      | center `256 + 160 u`                        |
//! | u3, u4      | half extents `20 + 60 (u + 1)`              |
//! | u5          | rotation `π u`                              |
//! | u6          | stroke width `1 + (u + 1)`                  |
//! | u7          | opacity `(u + 1) / 2`, hidden below 0.2     |
//! | u8..u15     | corner offsets `8 u`, (dx, dy) per corner   |
//! | u0, u16..31 | unused                                      |
//!
//! Corners are ordered (-w,-h), (w,-h), (w,h), (-w,h) before rotation. Each
//! edge is drawn as a square-capped anti-aliased stroke and quads are
//! composited with per-pixel max.
//!
//! Geometry is evaluated relative to the image center so that a horizontal
//! flip is an exact sign change on every x coordinate.

use std::f64::consts::PI;

use crate::error::Result;
use crate::latent::{LatentVector, LATENT_DIMS};
use crate::raster::SketchImage;
use crate::scalar::{clamp, Scalar};

pub const IMAGE_SIZE: usize = 512;
pub const BLOCKS: usize = 16;
pub const BLOCK_DIMS: usize = LATENT_DIMS / BLOCKS;
pub const MIN_VISIBLE_OPACITY: f64 = 0.2;

/// Offsets within a block. Dimensions not listed have no visual effect.
pub mod dims {
    pub const CENTER_X: usize = 1;
    pub const CENTER_Y: usize = 2;
    pub const HALF_W: usize = 3;
    pub const HALF_H: usize = 4;
    pub const ROTATION: usize = 5;
    pub const STROKE: usize = 6;
    pub const OPACITY: usize = 7;
    /// Corner `k` offset is at `CORNER_OFFSETS + 2k` (dx) and `+ 2k + 1` (dy).
    pub const CORNER_OFFSETS: usize = 8;
}

/// One stroked quadrilateral, in absolute pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPrimitive<T> {
    pub center: [T; 2],
    pub half_extents: [T; 2],
    pub rotation: T,
    pub stroke: T,
    pub opacity: T,
    pub corner_offsets: [[T; 2]; 4],
}

impl<T: Scalar> QuadPrimitive<T> {
    pub fn from_block(z: &LatentVector<T>, block: usize) -> Self {
        let u = |k: usize| z[block * BLOCK_DIMS + k] / T::lit(3.0);
        let one = T::one();
        let mut corner_offsets = [[T::zero(); 2]; 4];
        for (k, off) in corner_offsets.iter_mut().enumerate() {
            *off = [
                T::lit(8.0) * u(dims::CORNER_OFFSETS + 2 * k),
                T::lit(8.0) * u(dims::CORNER_OFFSETS + 2 * k + 1),
            ];
        }
        QuadPrimitive {
            center: [
                T::lit(256.0) + T::lit(160.0) * u(dims::CENTER_X),
                T::lit(256.0) + T::lit(160.0) * u(dims::CENTER_Y),
            ],
            half_extents: [
                T::lit(20.0) + T::lit(60.0) * (u(dims::HALF_W) + one),
                T::lit(20.0) + T::lit(60.0) * (u(dims::HALF_H) + one),
            ],
            rotation: T::lit(PI) * u(dims::ROTATION),
            stroke: one + (u(dims::STROKE) + one),
            opacity: (u(dims::OPACITY) + one) / T::lit(2.0),
            corner_offsets,
        }
    }

    pub fn is_visible(&self) -> bool {
        self.opacity >= T::lit(MIN_VISIBLE_OPACITY)
    }

    /// Corners relative to the image center `(256, 256)`.
    fn centered_corners(&self, block: &[T]) -> [[T; 2]; 4] {
        // Recompute the center offset directly from the latent so it is an exact
        // odd function of u1; `center - 256` would round differently for ±u.
        let u1 = block[dims::CENTER_X] / T::lit(3.0);
        let u2 = block[dims::CENTER_Y] / T::lit(3.0);
        let c = [T::lit(160.0) * u1, T::lit(160.0) * u2];
        let [w, h] = self.half_extents;
        let (s, co) = self.rotation.sin_cos();
        let local = [[-w, -h], [w, -h], [w, h], [-w, h]];
        let mut out = [[T::zero(); 2]; 4];
        for k in 0..4 {
            let [a, b] = local[k];
            let rx = a * co - b * s;
            let ry = a * s + b * co;
            let [dx, dy] = self.corner_offsets[k];
            out[k] = [c[0] + (rx + dx), c[1] + (ry + dy)];
        }
        out
    }

    /// Corners in absolute pixel coordinates.
    pub fn corners(&self) -> [[T; 2]; 4] {
        let [w, h] = self.half_extents;
        let (s, co) = self.rotation.sin_cos();
        let local = [[-w, -h], [w, -h], [w, h], [-w, h]];
        let mut out = [[T::zero(); 2]; 4];
        for k in 0..4 {
            let [a, b] = local[k];
            let [dx, dy] = self.corner_offsets[k];
            out[k] = [
                self.center[0] + (a * co - b * s + dx),
                self.center[1] + (a * s + b * co + dy),
            ];
        }
        out
    }
}

/// All 16 quads described by `z`, visible or not.
pub fn quads<T: Scalar>(z: &LatentVector<T>) -> Vec<QuadPrimitive<T>> {
    (0..BLOCKS)
        .map(|b| QuadPrimitive::from_block(z, b))
        .collect()
}

/// Validates raw values then decodes.
pub fn decode_values<T: Scalar>(values: &[T]) -> Result<SketchImage> {
    let z = LatentVector::new(values.to_vec())?;
    Ok(decode(&z))
}

/// Decodes to an 8-bit image. Intensities are truncated toward zero.
pub fn decode<T: Scalar>(z: &LatentVector<T>) -> SketchImage {
    let field = decode_intensity(z);
    let pixels = field
        .into_iter()
        .map(|v| clamp(v, T::zero(), T::lit(255.0)).to_u8().unwrap_or(0))
        .collect();
    SketchImage::from_pixels(IMAGE_SIZE, IMAGE_SIZE, pixels).expect("nonzero size")
}

/// Unquantized intensity field in `[0, 255]`, row-major 512x512.
pub fn decode_intensity<T: Scalar>(z: &LatentVector<T>) -> Vec<T> {
    let mut field = vec![T::zero(); IMAGE_SIZE * IMAGE_SIZE];
    let values = z.as_slice();
    for b in 0..BLOCKS {
        let quad = QuadPrimitive::from_block(z, b);
        if !quad.is_visible() {
            continue;
        }
        let block = &values[b * BLOCK_DIMS..(b + 1) * BLOCK_DIMS];
        let corners = quad.centered_corners(block);
        let peak = T::lit(255.0) * quad.opacity;
        for k in 0..4 {
            draw_segment(
                &mut field,
                corners[k],
                corners[(k + 1) % 4],
                quad.stroke,
                peak,
            );
        }
    }
    field
}

/// Max-composites one square-capped anti-aliased segment into `field`.
/// Endpoints are relative to the image center.
fn draw_segment<T: Scalar>(field: &mut [T], a: [T; 2], b: [T; 2], stroke: T, peak: T) {
    let half = T::lit(0.5);
    let reach = stroke * half + half;
    let pad = reach * T::lit(1.5) + T::one();
    let origin = T::lit(IMAGE_SIZE as f64 / 2.0);
    let lo = |p: T, q: T| (p.min(q) - pad + origin).floor();
    let hi = |p: T, q: T| (p.max(q) + pad + origin).ceil();
    let last = T::from_usize_lossy(IMAGE_SIZE - 1);
    let range = |l: T, h: T| -> Option<(usize, usize)> {
        let l = clamp(l, T::zero(), last);
        let h = clamp(h, T::zero(), last);
        if l > h {
            None
        } else {
            Some((l.to_usize()?, h.to_usize()?))
        }
    };
    let Some((x0, x1)) = range(lo(a[0], b[0]), hi(a[0], b[0])) else {
        return;
    };
    let Some((y0, y1)) = range(lo(a[1], b[1]), hi(a[1], b[1])) else {
        return;
    };
    for py in y0..=y1 {
        let cy = T::from_usize_lossy(py) + half - origin;
        for px in x0..=x1 {
            let cx = T::from_usize_lossy(px) + half - origin;
            let d = segment_distance([cx, cy], a, b);
            let coverage = clamp(reach - d, T::zero(), T::one());
            if coverage > T::zero() {
                let v = peak * coverage;
                let slot = &mut field[py * IMAGE_SIZE + px];
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
}

/// Box distance in the segment's own frame: the larger of the perpendicular
/// distance and the overshoot past either endpoint. Symmetric in endpoint
/// order and equivariant under reflection.
pub fn segment_distance<T: Scalar>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    segment_distance_directed(p, a, b).min(segment_distance_directed(p, b, a))
}

fn segment_distance_directed<T: Scalar>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let ex = b[0] - a[0];
    let ey = b[1] - a[1];
    let len = ex.hypot(ey);
    let px = p[0] - a[0];
    let py = p[1] - a[1];
    if len.is_zero() {
        return px.hypot(py);
    }
    let along = (px * ex + py * ey) / len;
    let perp = (ex * py - ey * px).abs() / len;
    let overshoot = (-along).max(along - len).max(T::zero());
    perp.max(overshoot)
}

/// Latent whose decoded image is the horizontal mirror of `decode(z)`:
/// negates center x, rotation, and corner x offsets, and swaps corner
/// offsets 0<->1 and 2<->3 so each offset follows its mirrored corner.
pub fn mirror_latent<T: Scalar>(z: &LatentVector<T>) -> LatentVector<T> {
    let mut v = z.as_slice().to_vec();
    for b in 0..BLOCKS {
        let base = b * BLOCK_DIMS;
        v[base + dims::CENTER_X] = -v[base + dims::CENTER_X];
        v[base + dims::ROTATION] = -v[base + dims::ROTATION];
        let off = |k: usize| base + dims::CORNER_OFFSETS + 2 * k;
        let src: Vec<[T; 2]> = (0..4).map(|k| [z[off(k)], z[off(k) + 1]]).collect();
        for (k, partner) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            v[off(k)] = -src[partner][0];
            v[off(k) + 1] = src[partner][1];
        }
    }
    LatentVector::new(v).expect("mirroring preserves validity")
}
