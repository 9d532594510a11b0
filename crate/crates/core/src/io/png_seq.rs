//! Directories of numbered PNG frames.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::IoError;
use crate::error::{io_at, Error, Result};
use crate::video::VideoBuffer;

pub const DEFAULT_PATTERN: &str = "*.png";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_value(self) -> f64 {
        match self {
            Self::Eight => 255.0,
            Self::Sixteen => 65535.0,
        }
    }
}

impl TryFrom<u32> for BitDepth {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(Self::Eight),
            16 => Ok(Self::Sixteen),
            other => Err(Error::config(format!("bit depth must be 8 or 16, got {other}"))),
        }
    }
}

/// Round-half-up quantisation of `v` (clamped to `[0, 1]`) to `0..=max`.
pub fn quantize(v: f64, max: f64) -> u32 {
    (v.clamp(0.0, 1.0) * max + 0.5).floor() as u32
}

/// Zero-padded name of frame `index` in a sequence of `total` frames.
pub fn frame_name(index: usize, total: usize) -> String {
    let digits = total.saturating_sub(1).max(1).to_string().len().max(4);
    format!("{index:0digits$}.png")
}

/// Writes `video` (3 channels) as `0000.png`, `0001.png`, ... into `dir`,
/// creating it if needed.
pub fn write_png_sequence(video: &VideoBuffer, dir: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let dir = dir.as_ref();
    if video.is_empty() {
        return Err(IoError::EmptyVideo.into());
    }
    if video.channels() != 3 {
        return Err(Error::structural(format!("png frames need 3 channels, got {}", video.channels())));
    }
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let [t_n, h, w] = video.dims();
    (0..t_n).into_par_iter().try_for_each(|t| {
        let path = dir.join(frame_name(t, t_n));
        write_frame(&path, video.frame(t), [h, w], depth)
    })
}

fn write_frame(path: &Path, frame: &[f64], [h, w]: [usize; 2], depth: BitDepth) -> Result<()> {
    let max = depth.max_value();
    let bytes: Vec<u8> = match depth {
        BitDepth::Eight => frame.iter().map(|&v| quantize(v, max) as u8).collect(),
        BitDepth::Sixteen => frame.iter().flat_map(|&v| (quantize(v, max) as u16).to_be_bytes()).collect(),
    };
    let encode_err = |e: png::EncodingError| IoError::Encode { path: path.to_path_buf(), message: e.to_string() };
    let file = File::create(path).map_err(io_at(path))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(match depth {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    });
    let mut writer = enc.write_header().map_err(encode_err)?;
    writer.write_image_data(&bytes).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    Ok(())
}

fn list_frames(dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let pat = glob::Pattern::new(pattern)
        .map_err(|e| IoError::BadPattern { pattern: pattern.to_string(), message: e.to_string() })?;
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_at(dir))? {
        let entry = entry.map_err(io_at(dir))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if pat.matches(name) && entry.path().is_file() {
            paths.push(entry.path());
        }
    }
    if paths.is_empty() {
        return Err(IoError::EmptyDirectory { path: dir.to_path_buf(), pattern: pattern.to_string() }.into());
    }
    paths.sort();
    Ok(paths)
}

/// One decoded RGB frame: `(height, width, samples)`.
fn read_frame(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let decode_err = |e: png::DecodingError| match e {
        png::DecodingError::IoError(source) if source.kind() != std::io::ErrorKind::UnexpectedEof => {
            IoError::Os { path: path.to_path_buf(), source }
        }
        other => IoError::Decode { path: path.to_path_buf(), message: other.to_string() },
    };
    let file = File::open(path).map_err(io_at(path))?;
    let mut dec = png::Decoder::new(BufReader::new(file));
    dec.set_transformations(png::Transformations::EXPAND);
    let mut reader = dec.read_info().map_err(decode_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| IoError::UnsupportedFormat { path: path.to_path_buf(), message: "image too large".into() })?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(decode_err)?;
    buf.truncate(info.buffer_size());
    let (h, w) = (info.height as usize, info.width as usize);
    let per_pixel = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb => 3,
        png::ColorType::Rgba => 4,
        other => {
            return Err(IoError::UnsupportedFormat {
                path: path.to_path_buf(),
                message: format!("color type {other:?}"),
            }
            .into())
        }
    };
    let samples: Vec<f64> = match info.bit_depth {
        png::BitDepth::Eight => buf.iter().map(|&b| b as f64 / 255.0).collect(),
        png::BitDepth::Sixteen => {
            buf.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0).collect()
        }
        other => {
            return Err(IoError::UnsupportedFormat {
                path: path.to_path_buf(),
                message: format!("bit depth {other:?}"),
            }
            .into())
        }
    };
    let row = samples.len() / h.max(1);
    let mut rgb = Vec::with_capacity(h * w * 3);
    for y in 0..h {
        for x in 0..w {
            let p = &samples[y * row + x * per_pixel..];
            match per_pixel {
                1 | 2 => rgb.extend_from_slice(&[p[0]; 3]),
                _ => rgb.extend_from_slice(&p[..3]),
            }
        }
    }
    Ok((h, w, rgb))
}

/// Reads every file in `dir` whose name matches `pattern`, in sorted
/// filename order, as one RGB video in `[0, 1]`. Grayscale frames are
/// replicated across channels and alpha is dropped.
pub fn read_png_sequence(dir: impl AsRef<Path>, pattern: &str) -> Result<VideoBuffer> {
    let dir = dir.as_ref();
    let paths = list_frames(dir, pattern)?;
    let frames: Vec<(usize, usize, Vec<f64>)> = paths.par_iter().map(|p| read_frame(p)).collect::<Result<_>>()?;
    let (h, w) = (frames[0].0, frames[0].1);
    let mut data = Vec::with_capacity(frames.len() * h * w * 3);
    for (path, (fh, fw, rgb)) in paths.iter().zip(frames) {
        if (fh, fw) != (h, w) {
            return Err(IoError::InconsistentDims { path: path.clone(), expected: [h, w], found: [fh, fw] }.into());
        }
        data.extend(rgb);
    }
    VideoBuffer::from_data([paths.len(), h, w], 3, data)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize(0.5, 255.0), 128);
        assert_eq!(quantize(1.0, 255.0), 255);
        assert_eq!(quantize(-0.2, 255.0), 0);
        assert_eq!(quantize(1.7, 65535.0), 65535);
        assert_eq!(frame_name(3, 10), "0003.png");
        assert_eq!(frame_name(3, 123_456), "000003.png");
    }

    #[test]
    fn round_trip_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = VideoBuffer::from_fn([3, 5, 7], 3, |_, _, _, _| rng.random::<f64>());
        for (depth, sub) in [(BitDepth::Eight, "a"), (BitDepth::Sixteen, "b")] {
            let path = dir.path().join(sub);
            write_png_sequence(&v, &path, depth).unwrap();
            let back = read_png_sequence(&path, DEFAULT_PATTERN).unwrap();
            assert_eq!(back.dims(), v.dims());
            let bound = 0.5 / depth.max_value() + 1e-12;
            for (a, b) in back.data().iter().zip(v.data()) {
                assert!((a - b).abs() <= bound);
            }
        }
    }

    #[test]
    fn error_cases() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_png_sequence(dir.path(), DEFAULT_PATTERN),
            Err(Error::Io(IoError::EmptyDirectory { .. }))
        ));
        assert!(matches!(
            read_png_sequence(dir.path().join("missing"), DEFAULT_PATTERN),
            Err(Error::Io(IoError::Os { .. }))
        ));
        assert!(matches!(
            write_png_sequence(&VideoBuffer::zeros(0, 2, 2, 3), dir.path(), BitDepth::Eight),
            Err(Error::Io(IoError::EmptyVideo))
        ));
        write_png_sequence(&VideoBuffer::filled(1, 2, 2, 3, 1.0), dir.path(), BitDepth::Eight).unwrap();
        write_frame(&dir.path().join("0001.png"), &[0.0; 3 * 3 * 3], [3, 3], BitDepth::Eight).unwrap();
        assert!(matches!(
            read_png_sequence(dir.path(), DEFAULT_PATTERN),
            Err(Error::Io(IoError::InconsistentDims { .. }))
        ));
        std::fs::write(dir.path().join("0002.png"), b"not a png").unwrap();
        std::fs::remove_file(dir.path().join("0001.png")).unwrap();
        assert!(matches!(read_png_sequence(dir.path(), DEFAULT_PATTERN), Err(Error::Io(IoError::Decode { .. }))));
        let one = read_png_sequence(dir.path(), "0000.png").unwrap();
        assert!(one.data().iter().all(|&v| v == 1.0));
    }
}
