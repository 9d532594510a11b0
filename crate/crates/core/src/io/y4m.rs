//! YUV4MPEG2 streams with 8-bit BT.601 limited-range YCbCr.

use std::fmt;
use std::path::Path;

use super::IoError;
use crate::error::{io_at, Error, Result};
use crate::video::VideoBuffer;

const SIGNATURE: &str = "YUV4MPEG2";
const MAX_HEADER: usize = 4096;
const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
    /// 4:2:0 with chroma sited between luma samples (also the default when
    /// the header has no `C` tag).
    C420Jpeg,
    /// Other 4:2:0 sitings (`C420`, `C420mpeg2`, `C420paldv`); read with the
    /// same centred siting.
    C420,
    C444,
}

impl Colorspace {
    fn parse(tag: &str) -> Result<Self, IoError> {
        match tag {
            "420jpeg" => Ok(Self::C420Jpeg),
            "420" | "420mpeg2" | "420paldv" => Ok(Self::C420),
            "444" => Ok(Self::C444),
            other => Err(IoError::UnknownColorspace(other.to_string())),
        }
    }

    fn is_420(self) -> bool {
        !matches!(self, Self::C444)
    }
}

impl fmt::Display for Colorspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::C420Jpeg => "420jpeg",
            Self::C420 => "420",
            Self::C444 => "444",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl FrameRate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::config(format!("frame rate {num}:{den} must be positive")));
        }
        Ok(Self { num, den })
    }

    pub fn fps(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self { num: 30, den: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub rate: FrameRate,
    pub colorspace: Colorspace,
}

fn malformed(msg: impl Into<String>) -> IoError {
    IoError::MalformedHeader(msg.into())
}

/// Parses the stream header line (without the trailing newline).
pub fn parse_y4m_header(line: &str) -> Result<Y4mHeader, IoError> {
    let mut tokens = line.split(' ');
    if tokens.next() != Some(SIGNATURE) {
        return Err(malformed("missing YUV4MPEG2 signature"));
    }
    let (mut width, mut height, mut rate, mut colorspace) = (None, None, None, Colorspace::C420Jpeg);
    for tok in tokens.filter(|t| !t.is_empty()) {
        let (tag, val) = tok.split_at(1);
        match tag {
            "W" => width = Some(val.parse::<usize>().map_err(|_| malformed(format!("bad width {val:?}")))?),
            "H" => height = Some(val.parse::<usize>().map_err(|_| malformed(format!("bad height {val:?}")))?),
            "F" => {
                let (n, d) = val.split_once(':').ok_or_else(|| malformed(format!("bad frame rate {val:?}")))?;
                let n = n.parse::<u32>().map_err(|_| malformed(format!("bad frame rate {val:?}")))?;
                let d = d.parse::<u32>().map_err(|_| malformed(format!("bad frame rate {val:?}")))?;
                if n == 0 || d == 0 {
                    return Err(malformed(format!("bad frame rate {val:?}")));
                }
                rate = Some(FrameRate { num: n, den: d });
            }
            "C" => colorspace = Colorspace::parse(val)?,
            // interlacing, aspect ratio and extensions do not affect decoding
            "I" | "A" | "X" => {}
            _ => return Err(malformed(format!("unknown header tag {tok:?}"))),
        }
    }
    let width = width.filter(|&w| w > 0).ok_or_else(|| malformed("missing or zero width"))?;
    let height = height.filter(|&h| h > 0).ok_or_else(|| malformed("missing or zero height"))?;
    Ok(Y4mHeader { width, height, rate: rate.unwrap_or_default(), colorspace })
}

fn to_rgb(y: u8, cb: f64, cr: f64) -> [f64; 3] {
    let yy = (y as f64 - 16.0) / 219.0;
    let pb = (cb - 128.0) / 224.0;
    let pr = (cr - 128.0) / 224.0;
    let r = yy + 2.0 * (1.0 - KR) * pr;
    let b = yy + 2.0 * (1.0 - KB) * pb;
    let g = (yy - KR * r - KB * b) / KG;
    [r, g, b].map(|v| v.clamp(0.0, 1.0))
}

fn to_ycbcr(rgb: &[f64]) -> [f64; 3] {
    let [r, g, b] = [rgb[0], rgb[1], rgb[2]].map(|v| v.clamp(0.0, 1.0));
    let yy = KR * r + KG * g + KB * b;
    let pb = 0.5 * (b - yy) / (1.0 - KB);
    let pr = 0.5 * (r - yy) / (1.0 - KR);
    [16.0 + 219.0 * yy, 128.0 + 224.0 * pb, 128.0 + 224.0 * pr]
}

fn byte(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Bilinear interpolation of a half-resolution plane with chroma centred
/// between 2x2 luma blocks.
fn upsample_420(plane: &[u8], cw: usize, ch: usize, w: usize, h: usize) -> Vec<f64> {
    let taps = |v: usize, n: usize| {
        let c = ((v as f64 - 0.5) / 2.0).clamp(0.0, (n - 1) as f64);
        let lo = c.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        (lo, hi, c - lo as f64)
    };
    let xs: Vec<_> = (0..w).map(|x| taps(x, cw)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1, fy) = taps(y, ch);
        for &(x0, x1, fx) in &xs {
            let at = |yy: usize, xx: usize| plane[yy * cw + xx] as f64;
            let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
            let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Decodes a complete stream held in memory.
pub fn decode_y4m(bytes: &[u8]) -> Result<(Y4mHeader, VideoBuffer)> {
    let nl = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("header line not terminated"))?;
    let line = std::str::from_utf8(&bytes[..nl]).map_err(|_| malformed("header is not ascii"))?;
    let header = parse_y4m_header(line)?;
    let (w, h) = (header.width, header.height);
    let (cw, ch) = if header.colorspace.is_420() { (w.div_ceil(2), h.div_ceil(2)) } else { (w, h) };
    let frame_bytes = w
        .checked_mul(h)
        .and_then(|l| cw.checked_mul(ch)?.checked_mul(2)?.checked_add(l))
        .ok_or_else(|| malformed("frame size overflows"))?;

    let mut pos = nl + 1;
    let mut data = Vec::new();
    let mut frames = 0;
    while pos < bytes.len() {
        let rest = &bytes[pos..];
        if !rest.starts_with(b"FRAME") {
            return Err(IoError::MalformedFrame { index: frames }.into());
        }
        let end =
            rest.iter().take(MAX_HEADER).position(|&b| b == b'\n').ok_or(IoError::MalformedFrame { index: frames })?;
        if end > 5 && rest[5] != b' ' {
            return Err(IoError::MalformedFrame { index: frames }.into());
        }
        let payload = &rest[end + 1..];
        if payload.len() < frame_bytes {
            return Err(IoError::Truncated { index: frames }.into());
        }
        let (yp, chroma) = payload[..frame_bytes].split_at(w * h);
        let (cbp, crp) = chroma.split_at(cw * ch);
        let (cb, cr): (Vec<f64>, Vec<f64>) = if header.colorspace.is_420() {
            (upsample_420(cbp, cw, ch, w, h), upsample_420(crp, cw, ch, w, h))
        } else {
            (cbp.iter().map(|&v| v as f64).collect(), crp.iter().map(|&v| v as f64).collect())
        };
        data.reserve(w * h * 3);
        for p in 0..w * h {
            data.extend_from_slice(&to_rgb(yp[p], cb[p], cr[p]));
        }
        frames += 1;
        pos += end + 1 + frame_bytes;
    }
    if frames == 0 {
        return Err(Error::structural("y4m stream holds no frames"));
    }
    let video = VideoBuffer::from_data([frames, h, w], 3, data)?;
    Ok((header, video))
}

/// Encodes `video` as a 4:4:4 stream.
pub fn encode_y4m(video: &VideoBuffer, rate: FrameRate) -> Result<Vec<u8>> {
    if video.is_empty() {
        return Err(IoError::EmptyVideo.into());
    }
    if video.channels() != 3 {
        return Err(Error::structural(format!("y4m needs 3 channels, got {}", video.channels())));
    }
    let [t_n, h, w] = video.dims();
    let mut out = format!("{SIGNATURE} W{w} H{h} F{}:{} Ip A1:1 C444\n", rate.num, rate.den).into_bytes();
    out.reserve(t_n * (6 + 3 * w * h));
    let mut planes = [vec![0u8; w * h], vec![0u8; w * h], vec![0u8; w * h]];
    for t in 0..t_n {
        for (p, rgb) in video.frame(t).chunks_exact(3).enumerate() {
            let ycc = to_ycbcr(rgb);
            for k in 0..3 {
                planes[k][p] = byte(ycc[k]);
            }
        }
        out.extend_from_slice(b"FRAME\n");
        for plane in &planes {
            out.extend_from_slice(plane);
        }
    }
    Ok(out)
}

pub fn read_y4m_with_header(path: impl AsRef<Path>) -> Result<(Y4mHeader, VideoBuffer)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_at(path))?;
    decode_y4m(&bytes)
}

pub fn read_y4m(path: impl AsRef<Path>) -> Result<VideoBuffer> {
    Ok(read_y4m_with_header(path)?.1)
}

pub fn write_y4m(video: &VideoBuffer, path: impl AsRef<Path>, rate: FrameRate) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_y4m(video, rate)?;
    std::fs::write(path, bytes).map_err(io_at(path))
}
