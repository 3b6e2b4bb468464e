//! On-disk carousel of saved samples.
//!
//! A store is a directory holding `manifest.tsv` and one `<id>.png` thumbnail
//! per sample. Each manifest line is tab-separated:
//!
//! ```text
//! <id> TAB <created_at_ms> TAB <512 comma-separated values, 9 significant digits> TAB <4096 hex digits: f64 little-endian bits>
//! ```
//!
//! The decimal column is for people; restore reads the hex column, so values
//! round-trip bit for bit. The manifest and thumbnails are replaced by
//! write-to-temp-then-rename, so a reader never observes a partial file.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::latent::{LatentVector, LATENT_DIMS};
use crate::raster::SketchImage;
use crate::scalar::Scalar;

pub const MANIFEST: &str = "manifest.tsv";
pub const THUMBNAIL_SIZE: usize = 128;

#[derive(Clone, Debug, PartialEq)]
pub struct SavedSample<T> {
    pub id: String,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    pub latent: LatentVector<T>,
    pub thumbnail: SketchImage,
}

/// Single-writer sample store backed by a directory.
#[derive(Debug)]
pub struct SessionStore<T> {
    dir: PathBuf,
    samples: Vec<SavedSample<T>>,
}

impl<T: Scalar> SessionStore<T> {
    /// Opens (creating if needed) the store at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let manifest = dir.join(MANIFEST);
        let mut samples = Vec::new();
        if manifest.exists() {
            let text = std::fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let (id, created_at, latent) =
                    parse_line::<T>(line).map_err(|message| Error::CorruptStore {
                        line: idx + 1,
                        message,
                    })?;
                let thumbnail = SketchImage::load(dir.join(format!("{id}.png")))?;
                samples.push(SavedSample {
                    id,
                    created_at,
                    latent,
                    thumbnail,
                });
            }
        }
        Ok(SessionStore { dir, samples })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Samples in insertion order.
    pub fn list(&self) -> &[SavedSample<T>] {
        &self.samples
    }

    pub fn get(&self, id: &str) -> Option<&SavedSample<T>> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn thumbnail_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.png"))
    }

    /// Captures a latent and its rendered image (downscaled to 128x128).
    pub fn save_sample(
        &mut self,
        latent: LatentVector<T>,
        image: &SketchImage,
    ) -> Result<SavedSample<T>> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        let thumbnail = image.resize_bilinear(THUMBNAIL_SIZE, THUMBNAIL_SIZE);
        atomic_write(&self.thumbnail_path(&id), &thumbnail.to_png())?;
        let record = SavedSample {
            id,
            created_at,
            latent,
            thumbnail,
        };
        self.samples.push(record.clone());
        if let Err(e) = self.write_manifest() {
            self.samples.pop();
            let _ = std::fs::remove_file(self.thumbnail_path(&record.id));
            return Err(e);
        }
        Ok(record)
    }

    pub fn delete_sample(&mut self, id: &str) -> Result<()> {
        let pos = self
            .samples
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| Error::NotFound(format!("sample {id}")))?;
        let removed = self.samples.remove(pos);
        if let Err(e) = self.write_manifest() {
            self.samples.insert(pos, removed);
            return Err(e);
        }
        let thumb = self.thumbnail_path(id);
        match std::fs::remove_file(&thumb) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(Error::io(thumb, e)),
        }
    }

    pub fn restore_sample(&self, id: &str) -> Result<LatentVector<T>> {
        self.get(id)
            .map(|s| s.latent.clone())
            .ok_or_else(|| Error::NotFound(format!("sample {id}")))
    }

    fn write_manifest(&self) -> Result<()> {
        let mut text = String::new();
        for s in &self.samples {
            text.push_str(&format_line(s));
            text.push('\n');
        }
        atomic_write(&self.dir.join(MANIFEST), text.as_bytes())
    }
}

fn format_line<T: Scalar>(s: &SavedSample<T>) -> String {
    let values = s.latent.as_slice();
    let mut line = String::with_capacity(values.len() * 32);
    write!(line, "{}\t{}\t", s.id, s.created_at).unwrap();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        write!(line, "{:.8e}", v.to_f64_lossless()).unwrap();
    }
    line.push('\t');
    let bytes: Vec<u8> = values
        .iter()
        .flat_map(|v| v.to_f64_lossless().to_le_bytes())
        .collect();
    line.push_str(&hex::encode(bytes));
    line
}

fn parse_line<T: Scalar>(line: &str) -> Result<(String, u64, LatentVector<T>), String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [id, created, decimal, binary] = fields[..] else {
        return Err(format!(
            "expected 4 tab-separated fields, found {}",
            fields.len()
        ));
    };
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return Err(format!("invalid id {id:?}"));
    }
    let created_at = created
        .parse::<u64>()
        .map_err(|_| format!("invalid timestamp {created:?}"))?;
    if decimal.split(',').count() != LATENT_DIMS {
        return Err("decimal column does not hold 512 values".into());
    }
    let bytes = hex::decode(binary).map_err(|e| format!("binary column: {e}"))?;
    if bytes.len() != LATENT_DIMS * 8 {
        return Err("binary column has wrong length".into());
    }
    let values: Vec<T> = bytes
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    let latent = LatentVector::new(values).map_err(|e| e.to_string())?;
    Ok((id.to_string(), created_at, latent))
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
