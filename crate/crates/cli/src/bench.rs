//! Fit and sampling throughput on a synthetic patch.

use std::time::Instant;

use serde_json::{json, Value};
use vff::fit::{init_bank, BankInitConfig, FitConfig};
use vff::pipeline::auto_psf;
use vff::sample::{sample_frames_naive, sample_grid, SampleSpec};
use vff::{fit_video, FieldGrid};

use crate::synth::{render, Pattern, SynthSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// Input patch `[T, H, W]`.
    pub patch: [usize; 3],
    pub sscale: f64,
    pub tscale: f64,
    pub repeat: usize,
    pub n_basis: usize,
    pub nu: f64,
    /// Output frames rendered by the naive sampler; its full-clip time is
    /// extrapolated from these.
    pub naive_frames: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            patch: [14, 80, 80],
            sscale: 4.0,
            tscale: 8.0,
            repeat: 3,
            n_basis: 512,
            nu: 0.5,
            naive_frames: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub runs: Vec<f64>,
}

impl Timing {
    pub fn min(&self) -> f64 {
        self.runs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn median(&self) -> f64 {
        let mut v = self.runs.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    fn to_json(&self) -> Value {
        json!({ "runs_s": self.runs, "min_s": self.min(), "median_s": self.median() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub out_dims: [usize; 3],
    pub fit: Timing,
    pub sample_batched: Timing,
    /// Measured on `naive_frames` output frames.
    pub sample_naive_subset: Timing,
    pub naive_frames: usize,
    /// Largest absolute difference between the two samplers on the subset.
    pub max_abs_diff: f64,
    pub peak_rss_bytes: Option<u64>,
    pub threads: usize,
}

impl BenchReport {
    pub fn output_samples(&self) -> usize {
        self.out_dims.iter().product()
    }

    /// Naive full-clip time extrapolated from the subset median.
    pub fn naive_full_estimate(&self) -> f64 {
        self.sample_naive_subset.median() * self.out_dims[0] as f64 / self.naive_frames as f64
    }

    pub fn speedup(&self) -> f64 {
        self.naive_full_estimate() / self.sample_batched.median()
    }

    pub fn to_json(&self) -> Value {
        let c = &self.config;
        json!({
            "schema": "vff-bench/1",
            "patch": c.patch,
            "sscale": c.sscale,
            "tscale": c.tscale,
            "n_basis": c.n_basis,
            "repeat": c.repeat,
            "threads": self.threads,
            "out_dims": self.out_dims,
            "fit": self.fit.to_json(),
            "sample_batched": self.sample_batched.to_json(),
            "sample_naive": {
                "frames_measured": self.naive_frames,
                "subset": self.sample_naive_subset.to_json(),
                "full_estimate_s": self.naive_full_estimate(),
            },
            "samples_per_s_batched": self.output_samples() as f64 / self.sample_batched.median(),
            "samples_per_s_naive": self.output_samples() as f64 / self.naive_full_estimate(),
            "speedup": self.speedup(),
            "max_abs_diff": self.max_abs_diff,
            "peak_rss_bytes": self.peak_rss_bytes,
        })
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let [t, h, w] = c.patch;
        let [ot, oh, ow] = self.out_dims;
        let mut s = format!(
            "patch {t}x{h}x{w} -> {ot}x{oh}x{ow} (s={}, r={}, N={}, threads={})\n",
            c.sscale, c.tscale, c.n_basis, self.threads
        );
        let line =
            |name: &str, tm: &Timing| format!("{name:<16} min {:>9.3} s  median {:>9.3} s\n", tm.min(), tm.median());
        s += &line("fit", &self.fit);
        s += &line("sample batched", &self.sample_batched);
        s += &format!(
            "{:<16} min {:>9.3} s  median {:>9.3} s  ({} of {} frames; full clip ~{:.3} s)\n",
            "sample naive",
            self.sample_naive_subset.min(),
            self.sample_naive_subset.median(),
            self.naive_frames,
            ot,
            self.naive_full_estimate()
        );
        s += &format!(
            "throughput       batched {:.3e} samples/s, naive {:.3e} samples/s\n",
            self.output_samples() as f64 / self.sample_batched.median(),
            self.output_samples() as f64 / self.naive_full_estimate()
        );
        s += &format!("speedup          {:.1}x (max |batched - naive| = {:.2e})\n", self.speedup(), self.max_abs_diff);
        s += &match self.peak_rss_bytes {
            Some(b) => format!("peak rss         {:.1} MiB\n", b as f64 / (1024.0 * 1024.0)),
            None => "peak rss         unavailable\n".to_string(),
        };
        s
    }
}

/// Peak resident set size of this process (Linux only).
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib * 1024)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub fn run_bench(cfg: &BenchConfig) -> anyhow::Result<BenchReport> {
    anyhow::ensure!(cfg.repeat >= 1, "repeat must be at least 1");
    anyhow::ensure!(cfg.naive_frames >= 1, "naive-frames must be at least 1");
    let clip = render(&SynthSpec {
        pattern: Pattern::TranslatingSinusoid,
        dims: cfg.patch,
        components: 4,
        seed: cfg.seed,
        ..Default::default()
    })?;
    let bank = init_bank(&BankInitConfig { n_basis: cfg.n_basis, seed: cfg.seed, ..Default::default() })?;
    let fit_cfg = FitConfig::default();
    let spec = SampleSpec::new(cfg.patch, cfg.sscale, cfg.tscale)?;
    let psf = auto_psf(cfg.sscale, cfg.tscale, cfg.nu)?;
    let naive_frames = cfg.naive_frames.min(spec.out_dims()[0]);

    let mut fit = Vec::new();
    let mut batched = Vec::new();
    let mut naive = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    for _ in 0..cfg.repeat {
        let (grid, dt) = timed(|| fit_video::<f32>(&clip, &bank, &fit_cfg));
        let grid: FieldGrid = grid?;
        fit.push(dt);
        let (fast, dt) = timed(|| sample_grid(&grid, &spec, &psf));
        let fast = fast?;
        batched.push(dt);
        let (slow, dt) = timed(|| sample_frames_naive(&grid, &spec, &psf, 0..naive_frames));
        let slow = slow?;
        naive.push(dt);
        let n = slow.data().len();
        for (a, b) in fast.data()[..n].iter().zip(slow.data()) {
            max_abs_diff = max_abs_diff.max((a - b).abs());
        }
    }
    Ok(BenchReport {
        config: cfg.clone(),
        out_dims: spec.out_dims(),
        fit: Timing { runs: fit },
        sample_batched: Timing { runs: batched },
        sample_naive_subset: Timing { runs: naive },
        naive_frames,
        max_abs_diff,
        peak_rss_bytes: peak_rss_bytes(),
        threads: rayon::current_num_threads(),
    })
}
