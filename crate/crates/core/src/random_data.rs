//! Seeded random initial data and train/test datasets.
//!
//! All randomness comes from ChaCha8 streams keyed by `(seed, stream)`:
//! every sample record owns its own stream, so a record depends only on the
//! seed, the family, the split and its index. The stream id packs
//! `family (8 bits) | split (8 bits) | redraw attempt (8 bits) | index (40 bits)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of terms in the Karhunen-Loeve expansion.
pub const KL_TERMS: usize = 3;

/// Uniform draws in `[0, 1)` from stream `stream` of generator `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Initial amplitude `u0` of the linear oscillator.
    Oscillator,
    /// Initial population `u0` of the logistic ODE.
    Logistic,
    /// Amplitudes `Y_1..Y_3` of the smooth three-term sine expansion.
    KarhunenLoeve,
    /// Amplitude and edge perturbations of the random step function.
    Rough,
    /// Perturbations `Y_1..Y_5` of the Sod shock tube.
    Sod,
}

impl Family {
    pub fn dimension(self) -> usize {
        match self {
            Family::Oscillator | Family::Logistic => 1,
            Family::KarhunenLoeve | Family::Rough => 3,
            Family::Sod => 5,
        }
    }

    fn tag(self) -> u64 {
        match self {
            Family::Oscillator => 1,
            Family::Logistic => 2,
            Family::KarhunenLoeve => 3,
            Family::Rough => 4,
            Family::Sod => 5,
        }
    }

    /// Whether a record yields valid initial data; inadmissible draws are redrawn.
    pub fn admissible(self, rec: &[f64]) -> bool {
        match self {
            Family::Rough => RoughData::from_record(rec).is_ok(),
            Family::Sod => SodData::from_record(rec).is_ok(),
            _ => true,
        }
    }

    pub fn default_ranges(self) -> SampleRanges {
        let d = self.dimension();
        let (train, test) = match self {
            Family::Oscillator => ((0.0, 1.0), (-5.0, 5.0)),
            Family::Logistic => ((0.0, 2.0), (0.0, 5.0)),
            Family::KarhunenLoeve => ((0.0, 1.0), (0.0, 1.0)),
            Family::Rough | Family::Sod => ((-1.0, 1.0), (-1.0, 1.0)),
        };
        SampleRanges { train: vec![train; d], test: vec![test; d] }
    }
}

/// Per-coordinate uniform ranges for each split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRanges {
    pub train: Vec<(f64, f64)>,
    pub test: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub family: Family,
    pub seed: u64,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn draw_record(seed: u64, family: Family, split: u64, attempt: u64, index: usize, ranges: &[(f64, f64)]) -> Vec<f64> {
    let stream = (family.tag() << 56) | (split << 48) | ((attempt & 0xff) << 40) | (index as u64 & ((1 << 40) - 1));
    let mut rng = stream_rng(seed, stream);
    ranges.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
}

/// Draws disjoint train and test records uniformly over `ranges`.
pub fn sample_dataset(
    family: Family,
    train_size: usize,
    test_size: usize,
    seed: u64,
    ranges: &SampleRanges,
) -> Result<Dataset> {
    if train_size == 0 || test_size == 0 {
        return Err(Error::InvalidArgument("dataset splits need at least one sample".into()));
    }
    let d = family.dimension();
    if ranges.train.len() != d || ranges.test.len() != d {
        return Err(Error::InvalidArgument(format!("{family:?} records have {d} coordinates")));
    }
    if let Some(&(lo, hi)) = ranges.train.iter().chain(&ranges.test).find(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
    }
    let draw = |split: u64, i: usize, range: &[(f64, f64)], accept: &dyn Fn(&[f64]) -> bool| -> Result<Vec<f64>> {
        for attempt in 0..=255 {
            let rec = draw_record(seed, family, split, attempt, i, range);
            if family.admissible(&rec) && accept(&rec) {
                return Ok(rec);
            }
        }
        Err(Error::InvalidArgument(format!("no admissible {family:?} record for index {i} after 256 draws")))
    };
    let train = (0..train_size).map(|i| draw(0, i, &ranges.train, &|_| true)).collect::<Result<Vec<_>>>()?;
    let test = (0..test_size).map(|i| draw(1, i, &ranges.test, &|r| !train.contains(&r.to_vec()))).collect::<Result<_>>()?;
    Ok(Dataset { family, seed, train, test })
}

/// Three-term sine expansion with amplitudes `λ_l = 2^{1-l}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KLData {
    pub y: [f64; KL_TERMS],
}

impl KLData {
    pub fn lambdas() -> [f64; KL_TERMS] {
        std::array::from_fn(|l| 0.5f64.powi(l as i32))
    }

    pub fn from_record(rec: &[f64]) -> Result<Self> {
        let y: [f64; KL_TERMS] = rec
            .try_into()
            .map_err(|_| Error::InvalidSample(format!("expected {KL_TERMS} coordinates, got {}", rec.len())))?;
        Ok(KLData { y })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pi = std::f64::consts::PI;
        Self::lambdas()
            .iter()
            .zip(&self.y)
            .enumerate()
            .map(|(l, (lam, y))| lam * y * ((l + 1) as f64 * pi * x).sin())
            .sum()
    }
}

pub fn eval_kl(d: &KLData, x: f64) -> f64 {
    d.eval(x)
}

/// Step of height `1 + εY_1` on `(1/3 + εY_2, 2/3 + εY_3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoughData {
    pub eps: f64,
    pub y: [f64; 3],
}

impl RoughData {
    pub const EPS: f64 = 0.2;

    pub fn from_record(rec: &[f64]) -> Result<Self> {
        let y: [f64; 3] = rec
            .try_into()
            .map_err(|_| Error::InvalidSample(format!("expected 3 coordinates, got {}", rec.len())))?;
        let d = RoughData { eps: Self::EPS, y };
        d.edges()?;
        Ok(d)
    }

    pub fn edges(&self) -> Result<(f64, f64)> {
        let left = 1.0 / 3.0 + self.eps * self.y[1];
        let right = 2.0 / 3.0 + self.eps * self.y[2];
        if left >= right {
            return Err(Error::InvalidSample(format!("step edges out of order: {left} >= {right}")));
        }
        Ok((left, right))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (left, right) = self.edges()?;
        Ok(if left < x && x < right { 1.0 + self.eps * self.y[0] } else { 0.0 })
    }
}

pub fn eval_rough(d: &RoughData, x: f64) -> Result<f64> {
    d.eval(x)
}

/// Randomly perturbed Sod shock tube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SodData {
    pub rho_l: f64,
    pub p_l: f64,
    pub rho_r: f64,
    pub p_r: f64,
    pub eps: f64,
    pub y: [f64; 5],
}

impl SodData {
    pub fn standard() -> Self {
        SodData { rho_l: 1.0, p_l: 1.0, rho_r: 0.4, p_r: 0.4, eps: 0.1, y: [0.0; 5] }
    }

    pub fn from_record(rec: &[f64]) -> Result<Self> {
        let y: [f64; 5] = rec
            .try_into()
            .map_err(|_| Error::InvalidSample(format!("expected 5 coordinates, got {}", rec.len())))?;
        Ok(SodData { y, ..Self::standard() })
    }

    pub fn interface(&self) -> f64 {
        0.5 + self.eps * self.y[1]
    }

    /// `(ρ, p)` to the left and right of the interface.
    pub fn states(&self) -> Result<((f64, f64), (f64, f64))> {
        let left = (self.rho_l + self.eps * self.y[0], self.p_l + self.eps * self.y[3]);
        let right = (self.rho_r + self.eps * self.y[2], self.p_r + self.eps * self.y[4]);
        for (rho, p) in [left, right] {
            if !(rho > 0.0 && p > 0.0) {
                return Err(Error::InvalidSample(format!("non-positive Sod state rho={rho}, p={p}")));
            }
        }
        let xi = self.interface();
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidSample(format!("interface {xi} outside (0, 1)")));
        }
        Ok((left, right))
    }

    /// Primitive state `(ρ, v, p)` at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let ((rl, pl), (rr, pr)) = self.states()?;
        Ok(if x < self.interface() { (rl, 0.0, pl) } else { (rr, 0.0, pr) })
    }
}

pub fn eval_sod(d: &SodData, x: f64) -> Result<(f64, f64, f64)> {
    d.eval(x)
}
