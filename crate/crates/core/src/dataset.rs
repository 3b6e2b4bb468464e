//! Corpus normalization, mirror augmentation, and the synthetic stand-in corpus.

use std::path::{Path, PathBuf};

use image::DynamicImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::decode;
use crate::error::{Error, Result};
use crate::latent::{LatentVector, LATENT_DIMS};
use crate::raster::SketchImage;

/// Default side length for normalized sketches.
pub const TARGET_SIZE: usize = 512;

/// Images whose mean intensity exceeds this are treated as dark-on-light and inverted.
pub const POLARITY_THRESHOLD: f64 = 127.0;

/// Coordinate range for synthetic latents.
pub const SYNTH_RANGE: f64 = 2.0;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Polarity fix, centered black padding to square, then bilinear resize.
pub fn normalize_image(raw: &SketchImage, target: usize) -> Result<SketchImage> {
    if raw.width() == 0 || raw.height() == 0 || target == 0 {
        return Err(Error::EmptyImage);
    }
    let img = if raw.mean_intensity() > POLARITY_THRESHOLD {
        raw.invert()
    } else {
        raw.clone()
    };
    let side = img.width().max(img.height());
    let squared = if img.is_square() {
        img
    } else {
        let mut canvas = SketchImage::black(side, side);
        canvas.paste(&img, (side - img.width()) / 2, (side - img.height()) / 2);
        canvas
    };
    Ok(squared.resize_bilinear(target, target))
}

/// Grayscale conversion followed by [`normalize_image`].
pub fn normalize_dynamic(raw: &DynamicImage, target: usize) -> Result<SketchImage> {
    if raw.width() == 0 || raw.height() == 0 {
        return Err(Error::EmptyImage);
    }
    normalize_image(&SketchImage::from_dynamic(raw), target)
}

/// Input followed by the horizontal mirror of each input. Never flips vertically.
pub fn mirror_augment(corpus: &[SketchImage]) -> Vec<SketchImage> {
    let mut out = Vec::with_capacity(corpus.len() * 2);
    out.extend(corpus.iter().cloned());
    out.extend(corpus.iter().map(SketchImage::flip_horizontal));
    out
}

/// `n` seeded latents with coordinates uniform in `[-2, 2]`.
pub fn synth_latents(n: usize, seed: u64) -> Vec<LatentVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v = (0..LATENT_DIMS)
                .map(|_| rng.random_range(-SYNTH_RANGE..=SYNTH_RANGE))
                .collect();
            LatentVector::new(v).expect("synthetic range inside latent bounds")
        })
        .collect()
}

/// Decodes [`synth_latents`].
pub fn synth_corpus(n: usize, seed: u64) -> Vec<SketchImage> {
    synth_latents(n, seed).iter().map(decode).collect()
}

/// A directory of PNG files with an ordered manifest.
#[derive(Clone, Debug)]
pub struct CorpusDir {
    pub root: PathBuf,
    pub files: Vec<String>,
}

impl CorpusDir {
    /// Reads `manifest.txt` if present, else every `.png` in name order.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let manifest = root.join(MANIFEST_NAME);
        let files = if manifest.is_file() {
            let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect()
        } else {
            let rd = std::fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
            let mut names = Vec::new();
            for entry in rd {
                let entry = entry.map_err(|e| Error::io(&root, e))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                if name.to_ascii_lowercase().ends_with(".png") {
                    names.push(name);
                }
            }
            names.sort();
            names
        };
        Ok(CorpusDir { root, files })
    }

    pub fn paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.files.iter().map(|f| self.root.join(f))
    }

    pub fn load_all(&self) -> Result<Vec<SketchImage>> {
        self.paths().map(SketchImage::load).collect()
    }

    /// Writes images as `{prefix}_{index:05}.png` plus the manifest.
    pub fn write(root: impl AsRef<Path>, prefix: &str, images: &[SketchImage]) -> Result<Self> {
        let names: Vec<String> = (0..images.len())
            .map(|i| format!("{prefix}_{i:05}.png"))
            .collect();
        Self::write_named(root, &names, images)
    }

    pub fn write_named(
        root: impl AsRef<Path>,
        names: &[String],
        images: &[SketchImage],
    ) -> Result<Self> {
        assert_eq!(names.len(), images.len());
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        for (name, img) in names.iter().zip(images) {
            img.save_png(root.join(name))?;
        }
        Self::write_manifest(root, names)
    }

    /// Writes only the manifest, for images already saved under `root`.
    pub fn write_manifest(root: impl AsRef<Path>, names: &[String]) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let manifest = root.join(MANIFEST_NAME);
        let mut text = names.join("\n");
        text.push('\n');
        std::fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e))?;
        Ok(CorpusDir {
            root,
            files: names.to_vec(),
        })
    }
}
