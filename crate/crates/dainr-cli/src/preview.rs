//! 8-bit grayscale previews of complex image sequences.
//!
//! Every preview is written as binary PGM; with the `png` feature (on by
//! default) and `output.png = true`, a PNG sibling appears next to each
//! one. Brightness is scaled by the sequence-global peak so frames of one
//! sequence stay comparable, with zero signal mapping to black.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dainr::image::ImageSequence;
use dainr::Real;

use crate::error::{CliError, Result};

/// Quantize `[0, 1]` values to a binary PGM file.
pub fn write_pgm(path: &Path, size: usize, values: &[f64]) -> Result<()> {
    assert_eq!(values.len(), size * size);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{size} {size}\n255\n")?;
    let bytes: Vec<u8> =
        values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

#[cfg(feature = "png")]
fn write_png(path: &Path, size: usize, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> =
        values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let img = image::GrayImage::from_raw(size as u32, size as u32, bytes)
        .expect("buffer length was checked against size");
    img.save(path).map_err(|e| CliError::Config(format!("png export failed: {e}")))?;
    Ok(())
}

#[cfg(not(feature = "png"))]
fn write_png(path: &Path, _size: usize, _values: &[f64]) -> Result<()> {
    Err(CliError::Usage(format!(
        "output.png requested but {} was built without png support",
        path.display()
    )))
}

fn frame_path(dir: &Path, stem: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{index:03}.{ext}"))
}

/// Write one preview per frame from already-scaled `[0, 1]` planes.
pub fn write_planes(
    dir: &Path,
    stem: &str,
    size: usize,
    planes: &[Vec<f64>],
    png: bool,
) -> Result<()> {
    for (k, plane) in planes.iter().enumerate() {
        write_pgm(&frame_path(dir, stem, k, "pgm"), size, plane)?;
        if png {
            write_png(&frame_path(dir, stem, k, "png"), size, plane)?;
        }
    }
    Ok(())
}

/// Scale a stack of nonnegative planes by its global peak (an all-zero
/// stack stays black) and write previews.
pub fn write_scaled_planes(
    dir: &Path,
    stem: &str,
    size: usize,
    planes: &[Vec<f64>],
    png: bool,
) -> Result<()> {
    let peak = planes.iter().flatten().fold(0.0f64, |a, &v| a.max(v));
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let scaled: Vec<Vec<f64>> =
        planes.iter().map(|p| p.iter().map(|v| v * scale).collect()).collect();
    write_planes(dir, stem, size, &scaled, png)
}

/// Magnitude previews of a complex sequence, one file per frame.
pub fn sequence_previews<T: Real>(
    dir: &Path,
    stem: &str,
    seq: &ImageSequence<T>,
    png: bool,
) -> Result<()> {
    let planes: Vec<Vec<f64>> = seq
        .magnitudes()
        .into_iter()
        .map(|f| f.into_iter().map(|v| v.to_f64().unwrap_or(0.0)).collect())
        .collect();
    write_scaled_planes(dir, stem, seq.size(), &planes, png)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        write_pgm(&path, 2, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0u8, 128, 255, 255]);
    }

    #[test]
    fn scaling_uses_the_global_peak() {
        let dir = tempfile::tempdir().unwrap();
        write_scaled_planes(
            dir.path(),
            "f",
            1,
            &[vec![1.0], vec![4.0]],
            false,
        )
        .unwrap();
        let first = std::fs::read(dir.path().join("f_000.pgm")).unwrap();
        let second = std::fs::read(dir.path().join("f_001.pgm")).unwrap();
        assert_eq!(*first.last().unwrap(), 64);
        assert_eq!(*second.last().unwrap(), 255);
    }

    #[cfg(feature = "png")]
    #[test]
    fn png_sibling_appears_on_request() {
        let dir = tempfile::tempdir().unwrap();
        write_planes(dir.path(), "f", 2, &[vec![0.0, 0.25, 0.5, 1.0]], true).unwrap();
        let png = std::fs::read(dir.path().join("f_000.png")).unwrap();
        assert_eq!(&png[1..4], b"PNG");
    }
}
