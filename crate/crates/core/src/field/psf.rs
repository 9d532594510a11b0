//! Closed-form Gaussian point spread functions.
//!
//! Convolving `sin(w * u + phi)` with a Gaussian of standard deviation
//! `1 / (2 pi sigma)` scales it by `exp(-w^2 / (8 pi^2 sigma^2))` and leaves
//! the phase alone, so sampling a sinusoidal field through the PSF is just a
//! per-basis rescale. A larger `sigma` means a narrower kernel and therefore
//! *less* smoothing; `sigma = inf` is plain point sampling.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Per-axis PSF bandwidths `(sigma_x, sigma_y, sigma_t)`.
///
/// `f64::INFINITY` on an axis means point sampling on that axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsfSpec {
    sigma: [f64; 3],
}

impl PsfSpec {
    pub const POINT_SAMPLING: f64 = f64::INFINITY;

    pub fn new(sigma_x: f64, sigma_y: f64, sigma_t: f64) -> Result<Self> {
        let sigma = [sigma_x, sigma_y, sigma_t];
        for (axis, s) in ["x", "y", "t"].iter().zip(sigma) {
            let valid = s == f64::INFINITY || (s.is_finite() && s > 0.0);
            if !valid {
                return Err(Error::config(format!(
                    "sigma_{axis} must be positive (or infinite for point sampling), got {s}"
                )));
            }
        }
        Ok(Self { sigma })
    }

    /// No attenuation on any axis.
    pub fn point() -> Self {
        Self { sigma: [f64::INFINITY; 3] }
    }

    /// Gaussian in space with the given bandwidth, point sampling in time.
    pub fn spatial(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma, f64::INFINITY)
    }

    pub fn isotropic(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma, sigma)
    }

    /// `[sigma_x, sigma_y, sigma_t]`.
    pub fn sigma(&self) -> [f64; 3] {
        self.sigma
    }

    pub fn is_point(&self) -> bool {
        self.sigma.iter().all(|s| s.is_infinite())
    }

    /// Attenuation of a basis function with frequency `omega` (rad/sample).
    pub fn attenuation(&self, omega: [f64; 3]) -> f64 {
        psf_attenuation(omega, self)
    }
}

impl Default for PsfSpec {
    fn default() -> Self {
        Self::point()
    }
}

/// `exp(-sum_d omega_d^2 / (8 pi^2 sigma_d^2))`, skipping point-sampled axes.
pub fn psf_attenuation(omega: [f64; 3], psf: &PsfSpec) -> f64 {
    let mut exponent = 0.0;
    for (w, s) in omega.iter().zip(psf.sigma) {
        if s.is_infinite() {
            continue;
        }
        exponent += w * w / (8.0 * PI * PI * s * s);
    }
    (-exponent).exp()
}

/// Standard deviation of the spatial-domain Gaussian equivalent to `sigma`.
pub fn kernel_std(sigma: f64) -> f64 {
    1.0 / (2.0 * PI * sigma)
}
