//! Frequency bank initialisation.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::FrequencyBank;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankStrategy {
    /// Latin hypercube over the frequency box.
    StratifiedRandom,
    /// The lowest-norm points of a regular lattice over the box.
    AxisGrid,
}

impl std::str::FromStr for BankStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stratified-random" | "stratified" => Ok(Self::StratifiedRandom),
            "axis-grid" | "grid" => Ok(Self::AxisGrid),
            other => {
                Err(Error::config(format!("unknown bank strategy {other:?} (expected stratified-random or axis-grid)")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankInitConfig {
    pub n_basis: usize,
    /// Per-axis ceiling `[x, y, t]` in rad/sample.
    pub omega_max: [f64; 3],
    pub strategy: BankStrategy,
    pub seed: u64,
}

/// Largest upsampling factor the default bank is meant to serve.
pub const DEFAULT_MAX_SCALE: f64 = 4.0;

impl Default for BankInitConfig {
    fn default() -> Self {
        Self { n_basis: 512, omega_max: [PI * DEFAULT_MAX_SCALE; 3], strategy: BankStrategy::StratifiedRandom, seed: 0 }
    }
}

impl BankInitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_basis < 2 {
            return Err(Error::config(format!(
                "bank needs a dc entry plus at least one frequency, got n_basis={}",
                self.n_basis
            )));
        }
        if self.omega_max.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::config(format!("omega_max must be positive, got {:?}", self.omega_max)));
        }
        Ok(())
    }
}

/// Rounds toward zero onto the `f32` lattice so the bank survives the on-disk
/// format exactly and never exceeds its ceiling.
pub(crate) fn to_f32_lattice(v: f64) -> f64 {
    let f = v as f32;
    let f = if (f as f64).abs() > v.abs() { f32::from_bits(f.to_bits() - 1) } else { f };
    f as f64
}

/// Builds a deterministic bank: entry 0 is the dc term, the remaining
/// `n_basis - 1` frequencies cover `[-omega_max, omega_max]^3` with
/// `omega_x >= 0` (a basis at `-w` duplicates the one at `w`).
pub fn init_bank(cfg: &BankInitConfig) -> Result<FrequencyBank> {
    cfg.validate()?;
    let m = cfg.n_basis - 1;
    let mut omegas = Vec::with_capacity(cfg.n_basis);
    omegas.push([0.0; 3]);
    match cfg.strategy {
        BankStrategy::StratifiedRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut columns = [Vec::new(), Vec::new(), Vec::new()];
            for (axis, col) in columns.iter_mut().enumerate() {
                let mut strata: Vec<usize> = (0..m).collect();
                strata.shuffle(&mut rng);
                let w = cfg.omega_max[axis];
                *col = strata.into_iter().map(|k| -w + 2.0 * w * (k as f64 + rng.random::<f64>()) / m as f64).collect();
            }
            let [cx, cy, ct] = &columns;
            for ((&x, &y), &t) in cx.iter().zip(cy).zip(ct) {
                let mut w = [x, y, t];
                if w[0] < 0.0 {
                    w = w.map(|v| -v);
                }
                omegas.push(w.map(to_f32_lattice));
            }
        }
        BankStrategy::AxisGrid => {
            // smallest K whose half-lattice (excluding the origin) has m points
            let mut k = 1i64;
            while (((2 * k + 1).pow(3) - 1) / 2) < m as i64 {
                k += 1;
            }
            let mut points = Vec::new();
            for a in 0..=k {
                for b in -k..=k {
                    for c in -k..=k {
                        let canonical = a > 0 || (a == 0 && (b > 0 || (b == 0 && c > 0)));
                        if canonical {
                            points.push([a, b, c]);
                        }
                    }
                }
            }
            points.sort_by_key(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2], *p));
            for p in points.into_iter().take(m) {
                let mut w = [0.0; 3];
                for axis in 0..3 {
                    w[axis] = to_f32_lattice(cfg.omega_max[axis] * p[axis] as f64 / k as f64);
                }
                omegas.push(w);
            }
        }
    }
    FrequencyBank::new(omegas, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_bank() {
        for seed in [0, 1, 99] {
            let bank = init_bank(&BankInitConfig { n_basis: 2, seed, ..Default::default() }).unwrap();
            assert_eq!(bank.len(), 2);
            assert_eq!(bank.omega(bank.dc_index()), [0.0; 3]);
            assert_ne!(bank.omega(1), [0.0; 3]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = BankInitConfig { n_basis: 64, seed: 7, ..Default::default() };
        assert_eq!(init_bank(&cfg).unwrap(), init_bank(&cfg).unwrap());
        let other = BankInitConfig { seed: 8, ..cfg.clone() };
        assert_ne!(init_bank(&cfg).unwrap(), init_bank(&other).unwrap());
    }

    #[test]
    fn default_bank_bounds() {
        let cfg = BankInitConfig { n_basis: 512, omega_max: [4.0 * PI; 3], ..Default::default() };
        let bank = init_bank(&cfg).unwrap();
        assert_eq!(bank.len(), 512);
        let zeros = bank.omegas().iter().filter(|w| **w == [0.0; 3]).count();
        assert_eq!(zeros, 1);
        for w in bank.omegas() {
            assert!(w.iter().all(|v| v.abs() <= 4.0 * PI));
            assert!(w[0] >= 0.0);
            assert!(w.iter().all(|&v| (v as f32) as f64 == v));
        }
    }

    #[test]
    fn stratified_fills_every_stratum() {
        let m = 63;
        let cfg = BankInitConfig { n_basis: m + 1, omega_max: [1.0, 2.0, 3.0], ..Default::default() };
        let bank = init_bank(&cfg).unwrap();
        // Sign canonicalisation mirrors a stratum k onto m-1-k, so every
        // mirror pair of strata holds exactly two points (one for the middle).
        for axis in 1..3 {
            let w = cfg.omega_max[axis];
            let mut pair_hits = vec![0; m];
            for o in &bank.omegas()[1..] {
                let k = ((((o[axis] + w) / (2.0 * w)) * m as f64).floor() as usize).min(m - 1);
                pair_hits[k.min(m - 1 - k)] += 1;
            }
            for (k, &h) in pair_hits.iter().enumerate().take(m / 2 + 1) {
                let want = if k == m - 1 - k { 1 } else { 2 };
                assert_eq!(h, want, "axis {axis} stratum pair {k}");
            }
        }
    }

    #[test]
    fn axis_grid_is_regular() {
        let cfg = BankInitConfig { n_basis: 14, omega_max: [PI; 3], strategy: BankStrategy::AxisGrid, seed: 0 };
        let bank = init_bank(&cfg).unwrap();
        // K = 1: the 13 canonical neighbours of the origin
        assert_eq!(bank.len(), 14);
        for w in &bank.omegas()[1..] {
            for v in w {
                assert!([0.0, to_f32_lattice(PI), -to_f32_lattice(PI)].contains(v));
            }
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(init_bank(&BankInitConfig { n_basis: 1, ..Default::default() }).is_err());
        assert!(init_bank(&BankInitConfig { omega_max: [1.0, 0.0, 1.0], ..Default::default() }).is_err());
        assert!("bogus".parse::<BankStrategy>().is_err());
    }
}
