use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::numkit::Vector;
use crate::{Error, Result};

/// Shape of one scalar disturbance channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceKind {
    Zero,
    Constant { value: f64 },
    /// Independent `U(−bound, bound)` draws, one per time step.
    UniformBounded { bound: f64 },
    /// `bound · e^{−decay t} · U(−1, 1)`.
    UniformDecreasing { bound: f64, decay: f64 },
    /// Piecewise-constant: `(start_time, value)` pairs sorted by time; the
    /// signal is zero before the first start.
    Piecewise { segments: Vec<(f64, f64)> },
    /// Explicit per-step samples; the last one is held.
    Samples { values: Vec<f64> },
}

/// One channel: a kind plus the seed of its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSignal {
    pub kind: DisturbanceKind,
    pub seed: u64,
}

impl DisturbanceSignal {
    pub fn new(kind: DisturbanceKind, seed: u64) -> Result<Self> {
        let s = Self { kind, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn zero() -> Self {
        Self { kind: DisturbanceKind::Zero, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match &self.kind {
            DisturbanceKind::Zero => Ok(()),
            DisturbanceKind::Constant { value } if !value.is_finite() => bad(format!("constant disturbance {value}")),
            DisturbanceKind::Constant { .. } => Ok(()),
            DisturbanceKind::UniformBounded { bound } | DisturbanceKind::UniformDecreasing { bound, .. }
                if !(*bound >= 0.0 && bound.is_finite()) =>
            {
                bad(format!("disturbance bound {bound} must be finite and non-negative"))
            }
            DisturbanceKind::UniformDecreasing { decay, .. } if !(*decay >= 0.0 && decay.is_finite()) => {
                bad(format!("envelope decay {decay} must be finite and non-negative"))
            }
            DisturbanceKind::UniformBounded { .. } | DisturbanceKind::UniformDecreasing { .. } => Ok(()),
            DisturbanceKind::Piecewise { segments } => {
                if segments.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return bad("piecewise disturbance has non-finite entries".into());
                }
                if segments.windows(2).any(|w| w[1].0 < w[0].0) {
                    return bad("piecewise segments must be sorted by start time".into());
                }
                Ok(())
            }
            DisturbanceKind::Samples { values } if values.iter().any(|v| !v.is_finite()) => {
                bad("sampled disturbance has non-finite entries".into())
            }
            DisturbanceKind::Samples { .. } => Ok(()),
        }
    }

    /// Declared bound on `|d(t)|`, if any.
    pub fn sup_bound(&self) -> f64 {
        match &self.kind {
            DisturbanceKind::Zero => 0.0,
            DisturbanceKind::Constant { value } => value.abs(),
            DisturbanceKind::UniformBounded { bound } | DisturbanceKind::UniformDecreasing { bound, .. } => *bound,
            DisturbanceKind::Piecewise { segments } => segments.iter().map(|s| s.1.abs()).fold(0.0, f64::max),
            DisturbanceKind::Samples { values } => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    /// Value held over the step `[k dt, (k+1) dt)` containing `t`.
    /// `channel` selects an independent random stream under the same seed.
    pub fn sample(&self, t: f64, dt: f64, channel: u64) -> f64 {
        let k = step_index(t, dt);
        let t_k = k as f64 * dt;
        match &self.kind {
            DisturbanceKind::Zero => 0.0,
            DisturbanceKind::Constant { value } => *value,
            DisturbanceKind::UniformBounded { bound } => bound * unit_draw(self.seed, channel, k),
            DisturbanceKind::UniformDecreasing { bound, decay } => {
                bound * (-decay * t_k).exp() * unit_draw(self.seed, channel, k)
            }
            DisturbanceKind::Piecewise { segments } => segments
                .iter()
                .take_while(|(start, _)| *start <= t_k + 1e-12)
                .last()
                .map_or(0.0, |s| s.1),
            DisturbanceKind::Samples { values } => {
                values.get(k as usize).or(values.last()).copied().unwrap_or(0.0)
            }
        }
    }
}

fn step_index(t: f64, dt: f64) -> u64 {
    if !(t > 0.0) || !(dt > 0.0) {
        return 0;
    }
    (t / dt + 1e-9).floor() as u64
}

/// Uniform draw on `[−1, 1)` addressed by `(seed, channel, step)`, so any
/// sample can be reproduced without replaying the stream.
fn unit_draw(seed: u64, channel: u64, k: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel);
    rng.set_word_pos(2 * k as u128);
    let bits = rng.next_u64() >> 11;
    let unit = bits as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * unit - 1.0
}

/// A vector disturbance entering additively on the plant input.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance {
    pub channels: Vec<DisturbanceSignal>,
}

impl Disturbance {
    pub fn new(channels: Vec<DisturbanceSignal>) -> Result<Self> {
        for c in &channels {
            c.validate()?;
        }
        Ok(Self { channels })
    }

    pub fn zero(dim: usize) -> Self {
        Self { channels: vec![DisturbanceSignal::zero(); dim] }
    }

    /// One channel of the given kind, the rest zero.
    pub fn single(dim: usize, index: usize, signal: DisturbanceSignal) -> Result<Self> {
        if index >= dim {
            return Err(Error::Dimension(format!("disturbance channel {index} out of range for {dim} inputs")));
        }
        let mut d = Self::zero(dim);
        d.channels[index] = signal;
        Self::new(d.channels)
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Replace every random stream seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        for c in &mut self.channels {
            c.seed = seed;
        }
        self
    }

    pub fn sup_bound(&self) -> f64 {
        self.channels.iter().map(DisturbanceSignal::sup_bound).fold(0.0, f64::max)
    }

    pub fn sample(&self, t: f64, dt: f64) -> Vector {
        Vector::from_iterator(
            self.channels.len(),
            self.channels.iter().enumerate().map(|(i, c)| c.sample(t, dt, i as u64)),
        )
    }
}

/// Disturbance vector at time `t` on a grid of step `dt`.
pub fn disturbance_sample(signal: &Disturbance, t: f64, dt: f64) -> Vector {
    signal.sample(t, dt)
}
