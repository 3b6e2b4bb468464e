//! Grayscale raster type, resampling, and PNG I/O.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat};

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image. 0 is black background, 255 full white stroke.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SketchImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for SketchImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SketchImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl SketchImage {
    /// All-black image.
    pub fn black(width: usize, height: usize) -> Self {
        SketchImage {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel buffer length must equal width * height"
        );
        Ok(SketchImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        SketchImage {
            width,
            height,
            pixels,
        }
    }

    /// Converts any decoded image to grayscale using 0.299/0.587/0.114 luminance weights.
    /// Alpha is composited over black.
    pub fn from_dynamic(img: &DynamicImage) -> Self {
        let (width, height) = (img.width() as usize, img.height() as usize);
        let pixels = match img {
            DynamicImage::ImageLuma8(g) => g.as_raw().clone(),
            _ => {
                let rgba = img.to_rgba8();
                rgba.pixels()
                    .map(|p| {
                        let [r, g, b, a] = p.0;
                        let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
                        let y = y * f64::from(a) / 255.0;
                        y.round().clamp(0.0, 255.0) as u8
                    })
                    .collect()
            }
        };
        SketchImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn mean_intensity(&self) -> f64 {
        let sum: u64 = self.pixels.iter().map(|&p| u64::from(p)).sum();
        sum as f64 / self.pixels.len() as f64
    }

    pub fn histogram(&self) -> [usize; 256] {
        let mut h = [0usize; 256];
        for &p in &self.pixels {
            h[p as usize] += 1;
        }
        h
    }

    pub fn invert(&self) -> Self {
        SketchImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| 255 - p).collect(),
        }
    }

    /// Left-right mirror.
    pub fn flip_horizontal(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks_exact(self.width) {
            pixels.extend(row.iter().rev());
        }
        SketchImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Top-bottom mirror.
    pub fn flip_vertical(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks_exact(self.width).rev() {
            pixels.extend_from_slice(row);
        }
        SketchImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Bilinear resample with pixel-center alignment. Resizing to the same
    /// dimensions is the identity.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Self {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;

        let xs: Vec<(usize, usize, f64)> = (0..width)
            .map(|x| {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                (x0, x1, fx - x0 as f64)
            })
            .collect();

        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for &(x0, x1, tx) in &xs {
                let top =
                    f64::from(self.get(x0, y0)) * (1.0 - tx) + f64::from(self.get(x1, y0)) * tx;
                let bot =
                    f64::from(self.get(x0, y1)) * (1.0 - tx) + f64::from(self.get(x1, y1)) * tx;
                let v = top * (1.0 - ty) + bot * ty;
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        SketchImage {
            width,
            height,
            pixels,
        }
    }

    /// Copies `tile` into `self` with its top-left corner at `(x0, y0)`.
    pub fn paste(&mut self, tile: &SketchImage, x0: usize, y0: usize) {
        assert!(x0 + tile.width <= self.width && y0 + tile.height <= self.height);
        for y in 0..tile.height {
            let dst = (y0 + y) * self.width + x0;
            let src = y * tile.width;
            self.pixels[dst..dst + tile.width].copy_from_slice(&tile.pixels[src..src + tile.width]);
        }
    }

    fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width as u32, self.height as u32, self.pixels.clone())
            .expect("buffer size matches dimensions")
    }

    /// Encodes as an 8-bit grayscale PNG.
    pub fn to_png(&self) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        self.to_gray_image()
            .write_to(&mut buf, ImageFormat::Png)
            .expect("PNG encoding into memory cannot fail");
        buf.into_inner()
    }

    /// Decodes a PNG byte stream, converting to grayscale if needed.
    pub fn from_png(bytes: &[u8]) -> Result<Self, image::ImageError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(Self::from_dynamic(&img))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_png()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        if img.width() == 0 || img.height() == 0 {
            return Err(Error::EmptyImage);
        }
        Ok(Self::from_dynamic(&img))
    }
}
