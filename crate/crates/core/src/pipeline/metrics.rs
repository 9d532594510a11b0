//! Luminance PSNR and SSIM.

use crate::error::{Error, Result};
use crate::video::VideoBuffer;

/// BT.601 studio-swing luma, `Y = (16 + 65.481 R + 128.553 G + 24.966 B) / 255`.
pub fn luma(r: f64, g: f64, b: f64) -> f64 {
    (16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0
}

/// Single-channel luma video of an RGB video.
pub fn rgb_to_luma(video: &VideoBuffer) -> Result<VideoBuffer> {
    if video.channels() != 3 {
        return Err(Error::structural(format!("luma conversion needs 3 channels, got {}", video.channels())));
    }
    let data = video.data().chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect();
    VideoBuffer::from_data(video.dims(), 1, data)
}

fn luma_or_self(video: &VideoBuffer) -> Result<VideoBuffer> {
    match video.channels() {
        1 => Ok(video.clone()),
        3 => rgb_to_luma(video),
        c => Err(Error::structural(format!("expected 1 or 3 channels, got {c}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScores {
    pub per_frame: Vec<f64>,
    pub mean: f64,
}

impl FrameScores {
    fn from_frames(per_frame: Vec<f64>) -> Self {
        let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
        Self { per_frame, mean }
    }

    /// Mean over the frames selected by `keep`.
    pub fn mean_where(&self, keep: impl Fn(usize) -> bool) -> Option<f64> {
        let vals: Vec<f64> = self.per_frame.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, v)| *v).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// PSNR with peak 1.0, per frame and averaged over frames. Identical frames
/// score `f64::INFINITY`.
pub fn psnr(pred: &VideoBuffer, reference: &VideoBuffer, on_luma: bool) -> Result<FrameScores> {
    pred.check_same_shape(reference)?;
    if pred.is_empty() {
        return Err(Error::structural("cannot score an empty video"));
    }
    let (a, b) =
        if on_luma { (rgb_to_luma(pred)?, rgb_to_luma(reference)?) } else { (pred.clone(), reference.clone()) };
    let per_frame = (0..a.frames())
        .map(|t| {
            let (fa, fb) = (a.frame(t), b.frame(t));
            let mse = fa.iter().zip(fb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / fa.len() as f64;
            if mse == 0.0 {
                f64::INFINITY
            } else {
                -10.0 * mse.log10()
            }
        })
        .collect();
    Ok(FrameScores::from_frames(per_frame))
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Valid-region separable filtering of an `h x w` plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (h2, w2) = (h - n + 1, w - n + 1);
    let mut tmp = vec![0.0; h * w2];
    for y in 0..h {
        for x in 0..w2 {
            tmp[y * w2 + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; h2 * w2];
    for y in 0..h2 {
        for x in 0..w2 {
            out[y * w2 + x] = (0..n).map(|i| k[i] * tmp[(y + i) * w2 + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    let k = gaussian_window();
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, &k);
    let mu_b = filter_valid(b, h, w, &k);
    let s_aa = filter_valid(&aa, h, w, &k);
    let s_bb = filter_valid(&bb, h, w, &k);
    let s_ab = filter_valid(&ab, h, w, &k);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = s_aa[i] - ma * ma;
        let vb = s_bb[i] - mb * mb;
        let cov = s_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / mu_a.len() as f64
}

/// Single-scale SSIM on luma (11x11 Gaussian window, sigma 1.5, peak 1.0),
/// averaged over valid pixels, per frame. Single-channel inputs are used as is.
pub fn ssim(pred: &VideoBuffer, reference: &VideoBuffer) -> Result<FrameScores> {
    pred.check_same_shape(reference)?;
    let [t, h, w] = pred.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::config(format!("ssim needs frames of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}")));
    }
    if t == 0 {
        return Err(Error::structural("cannot score an empty video"));
    }
    let a = luma_or_self(pred)?;
    let b = luma_or_self(reference)?;
    let per_frame = (0..t).map(|i| ssim_plane(a.frame(i), b.frame(i), h, w).clamp(-1.0, 1.0)).collect();
    Ok(FrameScores::from_frames(per_frame))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Keyframe,
    Interpolated,
}

/// Frame `tau` is a keyframe when it is a multiple of `r`.
pub fn classify_frames(frames: usize, r: usize) -> Vec<FrameKind> {
    (0..frames).map(|t| if r <= 1 || t % r == 0 { FrameKind::Keyframe } else { FrameKind::Interpolated }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub psnr: Option<FrameScores>,
    pub ssim: Option<FrameScores>,
    /// Present when a temporal factor above 1 was given.
    pub frame_kinds: Option<Vec<FrameKind>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub psnr: bool,
    pub ssim: bool,
    pub on_luma: bool,
    pub keyframe_interval: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { psnr: true, ssim: true, on_luma: true, keyframe_interval: None }
    }
}

pub fn evaluate(pred: &VideoBuffer, reference: &VideoBuffer, opts: &EvalOptions) -> Result<MetricReport> {
    let psnr = opts.psnr.then(|| psnr(pred, reference, opts.on_luma)).transpose()?;
    let ssim = opts.ssim.then(|| ssim(pred, reference)).transpose()?;
    let frame_kinds = opts.keyframe_interval.filter(|&r| r > 1).map(|r| classify_frames(pred.frames(), r));
    Ok(MetricReport { psnr, ssim, frame_kinds })
}

impl MetricReport {
    /// Mean of `scores` over frames of `kind`.
    pub fn split_mean(&self, scores: &FrameScores, kind: FrameKind) -> Option<f64> {
        let kinds = self.frame_kinds.as_ref()?;
        scores.mean_where(|i| kinds[i] == kind)
    }
}
