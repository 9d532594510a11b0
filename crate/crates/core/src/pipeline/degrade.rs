//! The degradation operator: bicubic spatial downsampling followed by
//! keyframe subsampling in time.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::video::VideoBuffer;

/// Catmull-Rom cubic (`a = -0.5`).
pub fn cubic_kernel(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

/// Normalised taps `(input index, weight)` for each output sample along one
/// axis. Output `o` is centred on input coordinate `(o + 0.5) s - 0.5`, and
/// the kernel is stretched by `s`.
pub(crate) fn resample_taps(n_in: usize, n_out: usize, s: f64) -> Vec<Vec<(usize, f64)>> {
    let support = 2.0 * s;
    (0..n_out)
        .map(|o| {
            let center = (o as f64 + 0.5) * s - 0.5;
            let lo = (center - support).ceil() as isize;
            let hi = (center + support).floor() as isize;
            let mut taps: Vec<(usize, f64)> = Vec::new();
            let mut total = 0.0;
            for k in lo..=hi {
                let w = cubic_kernel((k as f64 - center) / s);
                if w == 0.0 {
                    continue;
                }
                total += w;
                let idx = k.clamp(0, n_in as isize - 1) as usize;
                match taps.iter_mut().find(|(i, _)| *i == idx) {
                    Some(t) => t.1 += w,
                    None => taps.push((idx, w)),
                }
            }
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Downsampled extent: `round(n / s)`, at least 1.
pub fn downsampled_len(n: usize, s: f64) -> usize {
    ((n as f64 / s).round() as usize).max(1)
}

/// Separable anti-aliased bicubic downsampling of every frame by `s >= 1`.
pub fn bicubic_downsample(video: &VideoBuffer, s: f64) -> Result<VideoBuffer> {
    if !(s.is_finite() && s >= 1.0) {
        return Err(Error::config(format!("spatial downsampling factor must be >= 1, got {s}")));
    }
    if s == 1.0 {
        return Ok(video.clone());
    }
    let [t_n, h, w] = video.dims();
    let c_n = video.channels();
    let (h2, w2) = (downsampled_len(h, s), downsampled_len(w, s));
    let taps_x = resample_taps(w, w2, s);
    let taps_y = resample_taps(h, h2, s);

    let mut out = VideoBuffer::zeros(t_n, h2, w2, c_n);
    let out_len = out.frame_len();
    out.data_mut().par_chunks_mut(out_len.max(1)).enumerate().for_each(|(t, dst)| {
        let src = video.frame(t);
        // horizontal pass: h x w2
        let mut tmp = vec![0.0; h * w2 * c_n];
        for y in 0..h {
            for (x, taps) in taps_x.iter().enumerate() {
                for c in 0..c_n {
                    let mut acc = 0.0;
                    for &(k, wt) in taps {
                        acc += wt * src[(y * w + k) * c_n + c];
                    }
                    tmp[(y * w2 + x) * c_n + c] = acc;
                }
            }
        }
        for (y, taps) in taps_y.iter().enumerate() {
            for x in 0..w2 {
                for c in 0..c_n {
                    let mut acc = 0.0;
                    for &(k, wt) in taps {
                        acc += wt * tmp[(k * w2 + x) * c_n + c];
                    }
                    dst[(y * w2 + x) * c_n + c] = acc.clamp(0.0, 1.0);
                }
            }
        }
    });
    Ok(out)
}

/// Parses a temporal factor that must be a positive integer.
pub(crate) fn integer_factor(r: f64) -> Result<usize> {
    if !(r.is_finite() && r >= 1.0 && r.fract() == 0.0) {
        return Err(Error::config(format!("temporal factor must be a positive integer, got {r}")));
    }
    Ok(r as usize)
}

/// Keeps frames `0, r, 2r, ...`.
pub fn temporal_subsample(video: &VideoBuffer, r: f64) -> Result<VideoBuffer> {
    let r = integer_factor(r)?;
    if video.frames() < r {
        return Err(Error::config(format!("cannot subsample {} frames by {r}", video.frames())));
    }
    let frames: Vec<usize> = (0..video.frames()).step_by(r).collect();
    Ok(video.select_frames(&frames))
}

/// Full degradation: bicubic by `s` in space, keyframes every `r` in time.
pub fn degrade(video: &VideoBuffer, s: f64, r: f64) -> Result<VideoBuffer> {
    let kept = temporal_subsample(video, r)?;
    bicubic_downsample(&kept, s)
}
