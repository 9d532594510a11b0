//! Degrade, fit, resample, and score.

mod degrade;
mod metrics;
mod spectral;

pub use degrade::{bicubic_downsample, cubic_kernel, degrade, downsampled_len, temporal_subsample};
pub use metrics::{
    classify_frames, evaluate, luma, psnr, rgb_to_luma, ssim, EvalOptions, FrameKind, FrameScores, MetricReport,
};
pub use spectral::high_band_energy;

use crate::error::{Error, Result};
use crate::field::{FieldGrid, FrequencyBank, PsfSpec};
use crate::fit::{fit_video, FitConfig};
use crate::sample::{sample_grid, SampleSpec};
use crate::video::VideoBuffer;

pub const DEFAULT_NU: f64 = 0.5;

/// Spatial Gaussian with `sigma = nu * s` on x and y, point sampling in time.
pub fn auto_psf(s: f64, r: f64, nu: f64) -> Result<PsfSpec> {
    if !(s.is_finite() && s > 0.0 && r.is_finite() && r > 0.0) {
        return Err(Error::config(format!("scale factors must be positive, got s={s}, r={r}")));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::config(format!("nu must be positive, got {nu}")));
    }
    PsfSpec::spatial(nu * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsfPolicy {
    Auto { nu: f64 },
    Manual(PsfSpec),
}

impl Default for PsfPolicy {
    fn default() -> Self {
        Self::Auto { nu: DEFAULT_NU }
    }
}

impl PsfPolicy {
    pub fn resolve(&self, s: f64, r: f64) -> Result<PsfSpec> {
        match *self {
            Self::Auto { nu } => auto_psf(s, r, nu),
            Self::Manual(psf) => Ok(psf),
        }
    }
}

fn check_scales(s: f64, r: f64) -> Result<()> {
    if !(s.is_finite() && s >= 1.0 && r.is_finite() && r >= 1.0) {
        return Err(Error::config(format!("upsampling factors must be >= 1, got s={s}, r={r}")));
    }
    Ok(())
}

/// Continuous space-time super-resolution: fit `lr`, then sample the field on
/// the `(s, r)` lattice and clamp to `[0, 1]`.
pub fn stvsr(
    lr: &VideoBuffer,
    s: f64,
    r: f64,
    bank: &FrequencyBank,
    fit_cfg: &FitConfig,
    psf_policy: &PsfPolicy,
) -> Result<VideoBuffer> {
    check_scales(s, r)?;
    let psf = psf_policy.resolve(s, r)?;
    let spec = SampleSpec::new(lr.dims(), s, r)?;
    let grid: FieldGrid = fit_video(lr, bank, fit_cfg)?;
    Ok(sample_grid(&grid, &spec, &psf)?.clamp01())
}

fn linear_taps(v: f64, n: usize) -> (usize, usize, f64) {
    let v = v.clamp(0.0, (n - 1) as f64);
    let lo = (v.floor() as usize).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    (lo, hi, v - lo as f64)
}

/// Trilinear interpolation of `lr` on the same output lattice `stvsr` uses.
pub fn trilinear_upsample(lr: &VideoBuffer, s: f64, r: f64) -> Result<VideoBuffer> {
    check_scales(s, r)?;
    if lr.is_empty() {
        return Err(Error::config("cannot upsample an empty video"));
    }
    let spec = SampleSpec::new(lr.dims(), s, r)?;
    let [t_in, h_in, w_in] = lr.dims();
    let [t_out, h_out, w_out] = spec.out_dims();
    let c_n = lr.channels();
    let mut out = VideoBuffer::zeros(t_out, h_out, w_out, c_n);
    let xs: Vec<_> = (0..w_out).map(|k| linear_taps(spec.x_coord(k), w_in)).collect();
    let ys: Vec<_> = (0..h_out).map(|i| linear_taps(spec.y_coord(i), h_in)).collect();
    for tau in 0..t_out {
        let (t0, t1, ft) = linear_taps(spec.t_coord(tau), t_in);
        for (i, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (k, &(x0, x1, fx)) in xs.iter().enumerate() {
                for c in 0..c_n {
                    let at = |t, y, x| lr.get(t, y, x, c);
                    let plane = |t| {
                        let top = at(t, y0, x0) * (1.0 - fx) + at(t, y0, x1) * fx;
                        let bottom = at(t, y1, x0) * (1.0 - fx) + at(t, y1, x1) * fx;
                        top * (1.0 - fy) + bottom * fy
                    };
                    out.set(tau, i, k, c, plane(t0) * (1.0 - ft) + plane(t1) * ft);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::BorderMode;

    #[test]
    fn auto_psf_formula() {
        let p = auto_psf(1.0, 1.0, 0.5).unwrap();
        assert_eq!(p.sigma(), [0.5, 0.5, f64::INFINITY]);
        assert_eq!(auto_psf(4.0, 8.0, 0.5).unwrap().sigma()[..2], [2.0, 2.0]);
        let manual = PsfSpec::new(0.3, 0.4, 0.7).unwrap();
        assert_eq!(PsfPolicy::Manual(manual).resolve(3.0, 2.0).unwrap(), manual);
        // larger s admits more of the band
        let w = [2.0, 1.0, 0.0];
        let a = auto_psf(2.0, 1.0, 0.5).unwrap().attenuation(w);
        let b = auto_psf(4.0, 1.0, 0.5).unwrap().attenuation(w);
        assert!(b > a);
        assert!(auto_psf(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn stvsr_shape_and_identity_on_constant() {
        let lr = VideoBuffer::filled(3, 6, 5, 3, 0.25);
        let bank = FrequencyBank::new(vec![[0.0; 3], [1.0, 0.5, 0.25]], 0).unwrap();
        let cfg = FitConfig { window: [3, 3, 3], border_mode: BorderMode::Clamp, ..Default::default() };
        let out = stvsr(&lr, 2.0, 2.0, &bank, &cfg, &PsfPolicy::default()).unwrap();
        assert_eq!(out.dims(), [6, 12, 10]);
        assert!(out.data().iter().all(|v| (v - 0.25).abs() < 1e-6));
        assert!(stvsr(&lr, 0.5, 1.0, &bank, &cfg, &PsfPolicy::default()).is_err());
    }

    #[test]
    fn trilinear_reproduces_affine_interior() {
        let lr =
            VideoBuffer::from_fn([3, 6, 6], 1, |t, y, x, _| 0.1 + 0.05 * x as f64 + 0.03 * y as f64 + 0.1 * t as f64);
        let out = trilinear_upsample(&lr, 2.0, 2.0).unwrap();
        let spec = SampleSpec::new([3, 6, 6], 2.0, 2.0).unwrap();
        for tau in 0..5 {
            for i in 1..11 {
                for k in 1..11 {
                    let p = spec.coordinate(tau, i, k);
                    let want = 0.1 + 0.05 * p.x + 0.03 * p.y + 0.1 * p.t;
                    assert!((out.get(tau, i, k, 0) - want).abs() < 1e-12);
                }
            }
        }
    }
}
