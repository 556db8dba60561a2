//! Loader for IDX-format image/label containers (the MNIST family).
//!
//! Images carry the big-endian magic `0x00000803` (unsigned bytes, 3
//! dimensions); labels carry `0x00000801`. Four-dimensional image files
//! (`0x00000804`, channels first) are accepted and reduced to grayscale by
//! averaging across the channel dimension. Files ending in `.gz` are
//! decompressed transparently.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

use super::{Dataset, Normalization, Split};

const IMAGE_MAGIC_3D: u32 = 0x0000_0803;
const IMAGE_MAGIC_4D: u32 = 0x0000_0804;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Loads an IDX image/label pair into a dataset.
///
/// Pixel bytes are scaled to `[0, 1]`, or to `[-1, 1]` when `signed` is set.
pub fn load_idx(images_path: &Path, labels_path: &Path, signed: bool) -> Result<Dataset> {
    let image_bytes = read_maybe_gzipped(images_path)?;
    let label_bytes = read_maybe_gzipped(labels_path)?;

    let mut img = Cursor::new(images_path, &image_bytes);
    let magic = img.read_u32("image magic")?;
    let channels = match magic {
        IMAGE_MAGIC_3D => 1usize,
        IMAGE_MAGIC_4D => 0, // read from the dimension list below
        other => {
            return Err(img.format_error(
                0,
                format!("bad image magic {other:#010x}, expected {IMAGE_MAGIC_3D:#010x}"),
            ))
        }
    };
    let image_count = img.read_u32("image count")? as usize;
    let channels = if channels == 0 {
        img.read_u32("channel count")? as usize
    } else {
        channels
    };
    let rows = img.read_u32("row count")? as usize;
    let cols = img.read_u32("column count")? as usize;
    let pixels = img.read_exact(image_count * channels * rows * cols, "pixel payload")?;

    let mut lab = Cursor::new(labels_path, &label_bytes);
    let magic = lab.read_u32("label magic")?;
    if magic != LABEL_MAGIC {
        return Err(lab.format_error(
            0,
            format!("bad label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let label_count_offset = lab.offset;
    let label_count = lab.read_u32("label count")? as usize;
    if label_count != image_count {
        return Err(lab.format_error(
            label_count_offset,
            format!("{label_count} labels for {image_count} images"),
        ));
    }
    let raw_labels = lab.read_exact(label_count, "label payload")?;

    let dim = rows * cols;
    let mut features = Vec::with_capacity(image_count * dim);
    for sample in 0..image_count {
        let base = sample * channels * dim;
        for p in 0..dim {
            let mut sum = 0.0;
            for c in 0..channels {
                sum += pixels[base + c * dim + p] as f64;
            }
            let unit = sum / (channels as f64 * 255.0);
            features.push(if signed { 2.0 * unit - 1.0 } else { unit });
        }
    }

    let labels: Vec<usize> = raw_labels.iter().map(|&b| b as usize).collect();
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    Dataset::new(
        features,
        labels,
        dim,
        classes,
        Split::Train,
        if signed {
            Normalization::SignedUnit
        } else {
            Normalization::UnitInterval
        },
    )
}

fn read_maybe_gzipped(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path)?;
    let mut bytes = Vec::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file).read_to_end(&mut bytes)?;
    } else {
        { file }.read_to_end(&mut bytes)?;
    }
    Ok(bytes)
}

/// Byte-offset-tracking reader over a decoded IDX payload.
struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    offset: u64,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        Self {
            path,
            bytes,
            offset: 0,
        }
    }

    fn format_error(&self, offset: u64, message: String) -> Error {
        Error::IdxFormat {
            path: PathBuf::from(self.path),
            offset,
            message,
        }
    }

    fn read_u32(&mut self, what: &str) -> Result<u32> {
        let bytes = self.read_exact(4, what)?;
        Ok(u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]))
    }

    fn read_exact(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let start = self.offset as usize;
        let end = start.checked_add(len).ok_or_else(|| {
            self.format_error(self.offset, format!("{what} length overflows"))
        })?;
        if end > self.bytes.len() {
            return Err(self.format_error(
                self.bytes.len() as u64,
                format!(
                    "truncated {what}: need {len} bytes at offset {start}, file has {}",
                    self.bytes.len()
                ),
            ));
        }
        self.offset = end as u64;
        Ok(&self.bytes[start..end])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_images(dir: &Path, name: &str, count: u32, rows: u32, cols: u32, px: &[u8]) -> PathBuf {
        let path = dir.join(name);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&IMAGE_MAGIC_3D.to_be_bytes());
        bytes.extend_from_slice(&count.to_be_bytes());
        bytes.extend_from_slice(&rows.to_be_bytes());
        bytes.extend_from_slice(&cols.to_be_bytes());
        bytes.extend_from_slice(px);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    fn write_labels(dir: &Path, name: &str, labels: &[u8]) -> PathBuf {
        let path = dir.join(name);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
        bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        bytes.extend_from_slice(labels);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn fixture_round_trip_and_scaling() {
        let tmp = tempfile::tempdir().unwrap();
        let px = [0u8, 255, 128, 64, 255, 0, 32, 16];
        let images = write_images(tmp.path(), "imgs", 2, 2, 2, &px);
        let labels = write_labels(tmp.path(), "labs", &[1, 0]);

        let ds = load_idx(&images, &labels, false).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.feature_row(0)[0], 0.0);
        assert_eq!(ds.feature_row(0)[1], 1.0);
        assert_eq!(ds.label(0), 1);
        assert_eq!(ds.normalization(), Normalization::UnitInterval);

        let signed = load_idx(&images, &labels, true).unwrap();
        assert_eq!(signed.feature_row(0)[0], -1.0);
        assert_eq!(signed.feature_row(0)[1], 1.0);
    }

    #[test]
    fn gzip_round_trip_matches_plain() {
        let tmp = tempfile::tempdir().unwrap();
        let px = [0u8, 255, 10, 20];
        let images = write_images(tmp.path(), "imgs", 1, 2, 2, &px);
        let labels = write_labels(tmp.path(), "labs", &[3]);
        let plain = load_idx(&images, &labels, false).unwrap();

        for src in [&images, &labels] {
            let gz_path = src.with_extension("gz");
            let mut enc =
                flate2::write::GzEncoder::new(File::create(&gz_path).unwrap(), Default::default());
            enc.write_all(&std::fs::read(src).unwrap()).unwrap();
            enc.finish().unwrap();
        }
        let zipped = load_idx(
            &images.with_extension("gz"),
            &labels.with_extension("gz"),
            false,
        )
        .unwrap();
        assert_eq!(plain, zipped);
    }

    #[test]
    fn count_mismatch_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let images = write_images(tmp.path(), "imgs", 3, 1, 1, &[0, 1, 2]);
        let labels = write_labels(tmp.path(), "labs", &[0, 1]);
        let err = load_idx(&images, &labels, false).unwrap_err();
        match err {
            Error::IdxFormat {
                offset, message, ..
            } => {
                assert_eq!(offset, 4);
                assert!(message.contains("2 labels for 3 images"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_magic_names_offset_zero() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("bogus");
        std::fs::write(&path, [0xde, 0xad, 0xbe, 0xef, 0, 0, 0, 0]).unwrap();
        let labels = write_labels(tmp.path(), "labs", &[0]);
        let err = load_idx(&path, &labels, false).unwrap_err();
        match err {
            Error::IdxFormat { offset, .. } => assert_eq!(offset, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_names_offset() {
        let tmp = tempfile::tempdir().unwrap();
        // Claims 2 images of 2x2 but carries only 5 pixel bytes.
        let images = write_images(tmp.path(), "imgs", 2, 2, 2, &[1, 2, 3, 4, 5]);
        let labels = write_labels(tmp.path(), "labs", &[0, 1]);
        let err = load_idx(&images, &labels, false).unwrap_err();
        match err {
            Error::IdxFormat {
                offset, message, ..
            } => {
                assert_eq!(offset, 21); // 16-byte header + 5 available bytes
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
