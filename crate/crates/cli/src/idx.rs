//! Reader for the big-endian magic-tagged image/label binary format.
//!
//! Layout: u32 magic (2051 for images, 2049 for labels), then big-endian u32
//! dimension sizes (count, rows, cols for images; count for labels), then the
//! payload as unsigned bytes. Pixels are rescaled by 1/255 into [0, 1].

use std::io::Cursor;
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use almask_core::{Dataset, Matrix};

use crate::error::{CliError, Result};
use crate::fsio;

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

fn read_header_u32(cur: &mut Cursor<&[u8]>, path: &Path, field: &str) -> Result<u32> {
    cur.read_u32::<BigEndian>()
        .map_err(|_| CliError::format(path, format!("truncated header field `{field}`")))
}

#[derive(Debug, Clone)]
pub struct IdxImages {
    pub n: usize,
    pub d: usize,
    /// Row-major, n * d values in [0, 1].
    pub pixels: Vec<f64>,
}

pub fn load_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = fsio::read_bytes(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let magic = read_header_u32(&mut cur, path, "magic")?;
    if magic != IMAGE_MAGIC {
        return Err(CliError::format(
            path,
            format!("header field `magic` is {magic}, expected {IMAGE_MAGIC} for images"),
        ));
    }
    let n = read_header_u32(&mut cur, path, "count")? as usize;
    let rows = read_header_u32(&mut cur, path, "rows")? as usize;
    let cols = read_header_u32(&mut cur, path, "cols")? as usize;
    let d = rows * cols;
    let payload = &bytes[cur.position() as usize..];
    if payload.len() != n * d {
        return Err(CliError::format(
            path,
            format!(
                "pixel payload holds {} bytes but header fields count*rows*cols demand {}",
                payload.len(),
                n * d
            ),
        ));
    }
    let pixels = payload.iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(IdxImages { n, d, pixels })
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = fsio::read_bytes(path)?;
    let mut cur = Cursor::new(bytes.as_slice());
    let magic = read_header_u32(&mut cur, path, "magic")?;
    if magic != LABEL_MAGIC {
        return Err(CliError::format(
            path,
            format!("header field `magic` is {magic}, expected {LABEL_MAGIC} for labels"),
        ));
    }
    let n = read_header_u32(&mut cur, path, "count")? as usize;
    let payload = &bytes[cur.position() as usize..];
    if payload.len() != n {
        return Err(CliError::format(
            path,
            format!(
                "label payload holds {} bytes but header field `count` demands {n}",
                payload.len()
            ),
        ));
    }
    Ok(payload.iter().map(|&b| b as usize).collect())
}

/// Load matching image and label files into one labeled dataset.
/// The class count is taken from the data itself: 1 + the largest label.
pub fn load_idx_pair(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = load_idx_images(images_path)?;
    let labels = load_idx_labels(labels_path)?;
    if labels.len() != images.n {
        return Err(CliError::format(
            labels_path,
            format!(
                "header field `count` is {} but {} declares {} images",
                labels.len(),
                images_path.display(),
                images.n
            ),
        ));
    }
    let n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);
    let features = Matrix::from_fn(images.n, images.d, |i, j| images.pixels[i * images.d + j]);
    Dataset::new(features, Some(labels), n_classes).map_err(CliError::Core)
}

/// Encode an image file in the same format `load_idx_images` reads.
/// Exists for fixtures and round-trip tests.
pub fn encode_images(n: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
    use byteorder::WriteBytesExt;
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.write_u32::<BigEndian>(IMAGE_MAGIC).unwrap();
    out.write_u32::<BigEndian>(n).unwrap();
    out.write_u32::<BigEndian>(rows).unwrap();
    out.write_u32::<BigEndian>(cols).unwrap();
    out.extend_from_slice(pixels);
    out
}

/// Encode a label file in the same format `load_idx_labels` reads.
pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    use byteorder::WriteBytesExt;
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABEL_MAGIC).unwrap();
    out.write_u32::<BigEndian>(labels.len() as u32).unwrap();
    out.extend_from_slice(labels);
    out
}
