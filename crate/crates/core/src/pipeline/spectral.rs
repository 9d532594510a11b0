use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::video::VideoBuffer;

/// Spatial DFT energy (per frame and channel, summed) in bins whose
/// frequency exceeds `band` times the Nyquist frequency along x or y.
/// `band = 1` leaves nothing; `band = 0.25` measures everything above the
/// Nyquist of a 4x coarser lattice.
pub fn high_band_energy(video: &VideoBuffer, band: f64) -> Result<f64> {
    if !(band.is_finite() && band > 0.0 && band <= 1.0) {
        return Err(Error::config(format!("band must be in (0, 1], got {band}")));
    }
    let [t_n, h, w] = video.dims();
    if video.is_empty() {
        return Ok(0.0);
    }
    let c_n = video.channels();
    let mut planner = FftPlanner::<f64>::new();
    let fft_x = planner.plan_fft_forward(w);
    let fft_y = planner.plan_fft_forward(h);
    let above = |k: usize, n: usize| {
        let f = k.min(n - k) as f64 / n as f64;
        f > 0.5 * band + 1e-12
    };
    let mut total = 0.0;
    let mut buf = vec![Complex::new(0.0, 0.0); h * w];
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for t in 0..t_n {
        let frame = video.frame(t);
        for c in 0..c_n {
            for (p, z) in buf.iter_mut().enumerate() {
                *z = Complex::new(frame[p * c_n + c], 0.0);
            }
            for row in buf.chunks_mut(w) {
                fft_x.process(row);
            }
            for x in 0..w {
                for (y, v) in col.iter_mut().enumerate() {
                    *v = buf[y * w + x];
                }
                fft_y.process(&mut col);
                for (y, v) in col.iter().enumerate() {
                    if above(x, w) || above(y, h) {
                        total += v.norm_sqr();
                    }
                }
            }
        }
    }
    Ok(total / (h * w) as f64)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn separates_low_and_high_tones() {
        let n = 32;
        let tone = |cycles: f64| {
            VideoBuffer::from_fn([1, n, n], 1, move |_, _, x, _| (2.0 * PI * cycles * x as f64 / n as f64).cos())
        };
        // 2 cycles over 32 samples sits at 1/8 of Nyquist; 12 cycles at 3/4
        assert!(high_band_energy(&tone(2.0), 0.25).unwrap() < 1e-18);
        let e = high_band_energy(&tone(12.0), 0.25).unwrap();
        // Parseval: total energy of a unit cosine is n*n/2
        assert!((e - (n * n) as f64 / 2.0).abs() < 1e-8);
    }
}
