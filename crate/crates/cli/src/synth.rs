//! Synthetic clips with closed-form ground truth.

use std::f64::consts::PI;
use std::fmt::Write as _;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vff::VideoBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Pattern {
    TranslatingSinusoid,
    TranslatingCheckerboard,
    RotatingBars,
    AcceleratingDot,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Self::TranslatingSinusoid => "translating-sinusoid",
            Self::TranslatingCheckerboard => "translating-checkerboard",
            Self::RotatingBars => "rotating-bars",
            Self::AcceleratingDot => "accelerating-dot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub pattern: Pattern,
    /// `[T, H, W]`.
    pub dims: [usize; 3],
    /// Pixels per frame, `[x, y]`.
    pub velocity: [f64; 2],
    /// Pixels per frame squared, `[x, y]` (accelerating-dot).
    pub acceleration: [f64; 2],
    /// Radians per frame (rotating-bars).
    pub angular_rate: f64,
    /// Cycles per pixel `[x, y]` of the first sinusoid component.
    pub frequency: [f64; 2],
    /// Number of sinusoid components.
    pub components: usize,
    /// Peak deviation from mid-gray.
    pub amplitude: f64,
    /// Square size (checkerboard) or bar period (rotating-bars) in pixels.
    pub period: f64,
    /// Dot radius (Gaussian standard deviation) in pixels.
    pub radius: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            pattern: Pattern::TranslatingSinusoid,
            dims: [16, 64, 64],
            velocity: [1.0, 0.0],
            acceleration: [0.0, 0.0],
            angular_rate: 0.05,
            frequency: [1.0 / 16.0, 1.0 / 32.0],
            components: 1,
            amplitude: 0.4,
            period: 8.0,
            radius: 3.0,
            seed: 0,
        }
    }
}

/// One plane wave `a sin(2 pi (fx x + fy y) + phase_c)`.
#[derive(Debug, Clone, PartialEq)]
struct Wave {
    freq: [f64; 2],
    amp: f64,
    phase: [f64; 3],
}

/// A clip's analytic form, evaluable at any continuous `(x, y, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    spec: SynthSpec,
    waves: Vec<Wave>,
    origin: [f64; 2],
    angle0: f64,
    tint: [f64; 3],
}

/// Snaps a frequency (cycles/pixel) so an integer number of periods spans `n`.
fn snap(f: f64, n: usize) -> f64 {
    (f * n as f64).round() / n as f64
}

impl Scene {
    pub fn new(spec: &SynthSpec) -> anyhow::Result<Self> {
        anyhow::ensure!(!spec.dims.contains(&0), "dims must be nonzero, got {:?}", spec.dims);
        anyhow::ensure!(spec.components >= 1, "components must be at least 1");
        anyhow::ensure!((0.0..=0.5).contains(&spec.amplitude), "amplitude must be in [0, 0.5], got {}", spec.amplitude);
        anyhow::ensure!(spec.period > 0.0 && spec.radius > 0.0, "period and radius must be positive");
        let [_, h, w] = spec.dims;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let fmax = spec.frequency[0].abs().max(spec.frequency[1].abs());
        let amp = spec.amplitude / spec.components as f64;
        let waves = (0..spec.components)
            .map(|k| {
                let f = if k == 0 {
                    spec.frequency
                } else {
                    [rng.random_range(-fmax..=fmax), rng.random_range(-fmax..=fmax)]
                };
                Wave { freq: [snap(f[0], w), snap(f[1], h)], amp, phase: [0, 1, 2].map(|_| rng.random_range(-PI..PI)) }
            })
            .collect();
        let origin = [rng.random_range(0.25..0.75) * (w - 1) as f64, rng.random_range(0.25..0.75) * (h - 1) as f64];
        let angle0 = rng.random_range(0.0..PI);
        let tint = [0, 1, 2].map(|_| rng.random_range(0.7..1.0));
        Ok(Self { spec: spec.clone(), waves, origin, angle0, tint })
    }

    pub fn spec(&self) -> &SynthSpec {
        &self.spec
    }

    /// Value of channel `c` at pixel-centre coordinates `(x, y)` and frame time `t`.
    pub fn value(&self, x: f64, y: f64, t: f64, c: usize) -> f64 {
        let s = &self.spec;
        let v = match s.pattern {
            Pattern::TranslatingSinusoid => {
                let (px, py) = (x - s.velocity[0] * t, y - s.velocity[1] * t);
                0.5 + self
                    .waves
                    .iter()
                    .map(|wv| wv.amp * (2.0 * PI * (wv.freq[0] * px + wv.freq[1] * py) + wv.phase[c]).sin())
                    .sum::<f64>()
            }
            Pattern::TranslatingCheckerboard => {
                let px = x - s.velocity[0] * t + self.origin[0];
                let py = y - s.velocity[1] * t + self.origin[1];
                let parity = ((px / s.period).floor() + (py / s.period).floor()).rem_euclid(2.0);
                0.5 + s.amplitude * if parity < 1.0 { -1.0 } else { 1.0 }
            }
            Pattern::RotatingBars => {
                let [_, h, w] = s.dims;
                let (cx, cy) = ((w - 1) as f64 / 2.0, (h - 1) as f64 / 2.0);
                let theta = self.angle0 + s.angular_rate * t;
                let u = (x - cx) * theta.cos() + (y - cy) * theta.sin();
                0.5 + s.amplitude * (2.0 * PI * u / s.period).cos()
            }
            Pattern::AcceleratingDot => {
                let p = [0, 1].map(|a| self.origin[a] + s.velocity[a] * t + 0.5 * s.acceleration[a] * t * t);
                let d2 = (x - p[0]).powi(2) + (y - p[1]).powi(2);
                let peak = 0.5 + s.amplitude * self.tint[c];
                let base = 0.5 - s.amplitude;
                base + (peak - base) * (-d2 / (2.0 * s.radius * s.radius)).exp()
            }
        };
        v.clamp(0.0, 1.0)
    }

    /// Renders the clip at its own resolution.
    pub fn render(&self) -> VideoBuffer {
        VideoBuffer::from_fn(self.spec.dims, 3, |t, y, x, c| self.value(x as f64, y as f64, t as f64, c))
    }

    /// Human-readable description of the generator and its motion.
    pub fn describe(&self) -> String {
        let s = &self.spec;
        let [t, h, w] = s.dims;
        let mut out = String::new();
        let _ = writeln!(out, "pattern: {}", s.pattern.name());
        let _ = writeln!(out, "dims: {t}x{h}x{w} (frames x height x width), 3 channels");
        let _ = writeln!(out, "seed: {}", s.seed);
        let _ = writeln!(out, "coordinates: x, y at pixel centres (integers), t in frames");
        match s.pattern {
            Pattern::TranslatingSinusoid => {
                let _ = writeln!(out, "velocity: ({}, {}) px/frame", s.velocity[0], s.velocity[1]);
                let _ = writeln!(
                    out,
                    "formula: v_c = 0.5 + sum_k a_k sin(2 pi (fx_k (x - vx t) + fy_k (y - vy t)) + phase_kc)"
                );
                for (k, wv) in self.waves.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "component {k}: fx={} fy={} cycles/px, a={}, phase_rgb=({:.6}, {:.6}, {:.6})",
                        wv.freq[0], wv.freq[1], wv.amp, wv.phase[0], wv.phase[1], wv.phase[2]
                    );
                }
            }
            Pattern::TranslatingCheckerboard => {
                let _ = writeln!(out, "velocity: ({}, {}) px/frame", s.velocity[0], s.velocity[1]);
                let _ = writeln!(out, "square size: {} px, levels 0.5 -/+ {}", s.period, s.amplitude);
                let _ = writeln!(out, "origin offset: ({:.6}, {:.6}) px", self.origin[0], self.origin[1]);
            }
            Pattern::RotatingBars => {
                let _ = writeln!(out, "angular rate: {} rad/frame about the frame centre", s.angular_rate);
                let _ = writeln!(out, "bar period: {} px, initial angle {:.6} rad", s.period, self.angle0);
                let _ = writeln!(out, "formula: v = 0.5 + a cos(2 pi u / period), u along the rotating normal");
            }
            Pattern::AcceleratingDot => {
                let _ = writeln!(
                    out,
                    "trajectory: p(t) = ({:.6}, {:.6}) + ({}, {}) t + 0.5 ({}, {}) t^2 px",
                    self.origin[0], self.origin[1], s.velocity[0], s.velocity[1], s.acceleration[0], s.acceleration[1]
                );
                let _ = writeln!(out, "dot: Gaussian, radius {} px", s.radius);
            }
        }
        out
    }
}

/// Renders `spec` at its own resolution.
pub fn render(spec: &SynthSpec) -> anyhow::Result<VideoBuffer> {
    Ok(Scene::new(spec)?.render())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_shifts_circularly() {
        let spec = SynthSpec { dims: [5, 12, 20], frequency: [0.13, 0.2], components: 3, ..Default::default() };
        let v = render(&spec).unwrap();
        for t in 0..5 {
            for y in 0..12 {
                for x in 0..20 {
                    for c in 0..3 {
                        let src = (x + 20 - t % 20) % 20;
                        assert!((v.get(t, y, x, c) - v.get(0, y, src, c)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_and_static() {
        for pattern in Pattern::value_variants() {
            let spec = SynthSpec { pattern: *pattern, dims: [3, 9, 11], seed: 5, ..Default::default() };
            let a = render(&spec).unwrap();
            assert_eq!(a, render(&spec).unwrap());
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let still = SynthSpec { velocity: [0.0, 0.0], acceleration: [0.0, 0.0], angular_rate: 0.0, ..spec };
            let v = render(&still).unwrap();
            assert_eq!(v.frame(0), v.frame(2));
        }
    }
}
