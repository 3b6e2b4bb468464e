//! Per-image feature vectors: a built-in intensity + edge-orientation
//! descriptor, and CSV ingestion of externally computed features.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::SketchImage;
use crate::scalar::Scalar;

pub const INTENSITY_GRID: usize = 16;
pub const ORIENTATION_CELLS: usize = 4;
pub const ORIENTATION_BINS: usize = 8;
pub const DESCRIPTOR_DIMS: usize =
    INTENSITY_GRID * INTENSITY_GRID + ORIENTATION_CELLS * ORIENTATION_CELLS * ORIENTATION_BINS;
pub const MIN_DESCRIPTOR_SIDE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    Descriptor,
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T> {
    pub values: Vec<T>,
    pub source: FeatureSource,
}

impl<T> AsRef<[T]> for FeatureVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.values
    }
}

/// 256 block-mean intensities followed by 128 orientation-histogram bins, L2-normalized.
///
/// The intensity part is a 16x16 grid of block means scaled to `[0, 1]`. The
/// orientation part takes central-difference gradients (edge pixels replicate
/// their neighbor), quantizes the unsigned angle into 8 bins of `π/8`, and
/// accumulates gradient magnitude per bin over a 4x4 cell grid, divided by
/// the cell's pixel count.
pub fn compute_descriptor<T: Scalar>(img: &SketchImage) -> Result<FeatureVector<T>> {
    let n = img.width();
    if !img.is_square() || n < MIN_DESCRIPTOR_SIDE {
        return Err(Error::DescriptorInput {
            width: img.width(),
            height: img.height(),
        });
    }
    let at = |x: usize, y: usize| T::lit(f64::from(img.get(x, y)) / 255.0);
    let mut out = Vec::with_capacity(DESCRIPTOR_DIMS);

    let bounds = |cells: usize, c: usize| (c * n / cells, (c + 1) * n / cells);
    for by in 0..INTENSITY_GRID {
        let (y0, y1) = bounds(INTENSITY_GRID, by);
        for bx in 0..INTENSITY_GRID {
            let (x0, x1) = bounds(INTENSITY_GRID, bx);
            let mut sum = T::zero();
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += at(x, y);
                }
            }
            out.push(sum / T::from_usize_lossy((y1 - y0) * (x1 - x0)));
        }
    }

    let bin_width = T::lit(PI / ORIENTATION_BINS as f64);
    let mut hist = vec![T::zero(); ORIENTATION_CELLS * ORIENTATION_CELLS * ORIENTATION_BINS];
    for y in 0..n {
        let (ya, yb) = (y.saturating_sub(1), (y + 1).min(n - 1));
        let cy = y * ORIENTATION_CELLS / n;
        for x in 0..n {
            let (xa, xb) = (x.saturating_sub(1), (x + 1).min(n - 1));
            let gx = at(xb, y) - at(xa, y);
            let gy = at(x, yb) - at(x, ya);
            let mag = gx.hypot(gy);
            if mag.is_zero() {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < T::zero() {
                angle += T::lit(PI);
            }
            let bin = (angle / bin_width).floor().to_usize().unwrap_or(0) % ORIENTATION_BINS;
            let cx = x * ORIENTATION_CELLS / n;
            hist[(cy * ORIENTATION_CELLS + cx) * ORIENTATION_BINS + bin] += mag;
        }
    }
    for cy in 0..ORIENTATION_CELLS {
        let (y0, y1) = bounds(ORIENTATION_CELLS, cy);
        for cx in 0..ORIENTATION_CELLS {
            let (x0, x1) = bounds(ORIENTATION_CELLS, cx);
            let area = T::from_usize_lossy((y1 - y0) * (x1 - x0));
            let base = (cy * ORIENTATION_CELLS + cx) * ORIENTATION_BINS;
            for v in &mut hist[base..base + ORIENTATION_BINS] {
                *v /= area;
            }
        }
    }
    out.extend(hist);

    let norm = out.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if norm < T::lit(1e-9) {
        out.iter_mut().for_each(|v| *v = T::zero());
    } else {
        out.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(FeatureVector {
        values: out,
        source: FeatureSource::Descriptor,
    })
}

/// Rows of a feature CSV, with filenames when the file carries them.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable<T> {
    pub names: Option<Vec<String>>,
    pub vectors: Vec<FeatureVector<T>>,
}

impl<T: Scalar> FeatureTable<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.values.len())
    }

    /// Reorders rows to follow `manifest`. Every manifest entry must be present.
    pub fn align_to(&self, manifest: &[String]) -> Result<Self> {
        let names = self
            .names
            .as_ref()
            .ok_or_else(|| Error::NotFound("feature file has no filename column".into()))?;
        let base = |s: &str| {
            Path::new(s)
                .file_name()
                .map_or_else(|| s.to_string(), |f| f.to_string_lossy().into_owned())
        };
        let mut vectors = Vec::with_capacity(manifest.len());
        for want in manifest {
            let i = names
                .iter()
                .position(|n| n == want || base(n) == base(want))
                .ok_or_else(|| Error::NotFound(format!("no features for {want}")))?;
            vectors.push(self.vectors[i].clone());
        }
        Ok(FeatureTable {
            names: Some(manifest.to_vec()),
            vectors,
        })
    }
}

/// Parses feature CSV text. A non-numeric first cell marks the filename column;
/// the choice is made on the first row and enforced for the rest.
pub fn parse_features<T: Scalar>(text: &str) -> Result<FeatureTable<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut names: Option<Vec<String>> = None;
    let mut vectors: Vec<FeatureVector<T>> = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let named = match &names {
            Some(_) => true,
            None if vectors.is_empty() => {
                let first = record.get(0).unwrap_or("");
                if first.parse::<f64>().is_err() {
                    names = Some(Vec::new());
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        let skip = usize::from(named);
        let mut values = Vec::with_capacity(record.len().saturating_sub(skip));
        for (col, cell) in record.iter().enumerate().skip(skip) {
            let v = cell.parse::<T>().ok().filter(|v| v.is_finite());
            values.push(v.ok_or_else(|| Error::FeatureParse {
                row,
                column: col + 1,
                value: cell.to_string(),
            })?);
        }
        match expected {
            None => expected = Some(values.len()),
            Some(e) if e != values.len() => {
                return Err(Error::InconsistentFeatures {
                    row,
                    found: values.len(),
                    expected: e,
                })
            }
            Some(_) => {}
        }
        if let Some(n) = names.as_mut() {
            n.push(record.get(0).unwrap_or("").to_string());
        }
        vectors.push(FeatureVector {
            values,
            source: FeatureSource::External,
        });
    }
    Ok(FeatureTable { names, vectors })
}

pub fn load_features<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureTable<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text)
}

/// Writes rows as `name,v0,v1,...` using shortest round-trip float formatting.
pub fn write_features<T: Scalar>(
    path: impl AsRef<Path>,
    names: Option<&[String]>,
    vectors: &[FeatureVector<T>],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    for (i, v) in vectors.iter().enumerate() {
        let mut row: Vec<String> = Vec::with_capacity(v.values.len() + 1);
        if let Some(names) = names {
            row.push(names[i].clone());
        }
        row.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
