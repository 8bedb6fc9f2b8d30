//! Noisy ranking families: Mallows, random utility models and Plackett-Luce.

pub mod mallows;
pub mod noise;
pub mod order_probability;
pub mod plackett_luce;
pub mod rum;

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{CandidatePool, Permutation};

pub use mallows::MallowsModel;
pub use noise::{DiscreteNoise, Noise};
pub use order_probability::{conditional_order_probability, well_ordered_check, well_ordered_margin};
pub use plackett_luce::{pl_pmf, pl_top_choice};
pub use rum::rum_sample;

/// A family of ranking distributions indexed by an accuracy θ.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Mallows with φ = θ + 1.
    Mallows,
    Rum(Noise),
    PlackettLuce,
}

impl Family {
    pub fn at(&self, theta: f64) -> Result<RankingModel> {
        RankingModel::new(self.clone(), theta)
    }

    /// True when utilities depend on the pool only through the ranks.
    pub fn is_value_independent(&self) -> bool {
        matches!(self, Family::Mallows)
    }

    pub fn name(&self) -> String {
        match self {
            Family::Mallows => "mallows".into(),
            Family::Rum(n) => format!("rum-{n}"),
            Family::PlackettLuce => "plackett-luce".into(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// A family member at a fixed accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    family: Family,
    theta: f64,
}

impl RankingModel {
    pub fn new(family: Family, theta: f64) -> Result<Self> {
        let ok = match family {
            Family::PlackettLuce => theta >= 0.0,
            _ => theta > 0.0,
        };
        if !ok || !theta.is_finite() {
            return Err(Error::invalid(format!("accuracy must be positive and finite, got {theta}")));
        }
        Ok(Self { family, theta })
    }

    pub fn mallows(phi: f64) -> Result<Self> {
        Self::new(Family::Mallows, phi - 1.0)
    }

    pub fn rum(noise: Noise, theta: f64) -> Result<Self> {
        Self::new(Family::Rum(noise), theta)
    }

    pub fn plackett_luce(theta: f64) -> Result<Self> {
        Self::new(Family::PlackettLuce, theta)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Mallows dispersion φ = θ + 1, if this is a Mallows model.
    pub fn phi(&self) -> Option<f64> {
        matches!(self.family, Family::Mallows).then_some(self.theta + 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, pool: &CandidatePool, rng: &mut R) -> Result<Permutation> {
        let mut s = self.sampler(pool.len())?;
        let mut out = Vec::new();
        s.draw(pool.values(), rng, &mut out)?;
        Ok(Permutation::from_vec_unchecked(out))
    }

    pub fn sampler(&self, n: usize) -> Result<Sampler> {
        Ok(match &self.family {
            Family::Mallows => Sampler::Mallows(MallowsModel::new(self.theta + 1.0, n)?),
            Family::Rum(noise) => Sampler::Rum { noise: noise.clone(), theta: self.theta, keys: Vec::new() },
            Family::PlackettLuce => Sampler::PlackettLuce { theta: self.theta, keys: Vec::new() },
        })
    }
}

/// Reusable sampler with scratch space, for hot Monte Carlo loops.
#[derive(Debug, Clone)]
pub enum Sampler {
    Mallows(MallowsModel),
    Rum { noise: Noise, theta: f64, keys: Vec<f64> },
    PlackettLuce { theta: f64, keys: Vec<f64> },
}

impl Sampler {
    /// Writes a ranking of `values` (best first) into `out`.
    pub fn draw<R: Rng + ?Sized>(&mut self, values: &[f64], rng: &mut R, out: &mut Vec<usize>) -> Result<()> {
        match self {
            Sampler::Mallows(m) => {
                m.sample_into(rng, out);
                Ok(())
            }
            Sampler::Rum { noise, theta, keys } => {
                keys.clear();
                keys.extend(values.iter().map(|x| x + noise.sample(rng) / *theta));
                rank_by_keys(keys, out, !noise.is_continuous())
            }
            Sampler::PlackettLuce { theta, keys } => {
                keys.clear();
                keys.extend(values.iter().map(|x| {
                    let u: f64 = rng.random();
                    *theta * x - (-(u.max(f64::MIN_POSITIVE)).ln()).ln()
                }));
                rank_by_keys(keys, out, false)
            }
        }
    }
}

/// Indices sorted by descending key; optionally rejects exact ties.
pub(crate) fn rank_by_keys(keys: &[f64], out: &mut Vec<usize>, reject_ties: bool) -> Result<()> {
    out.clear();
    out.extend(0..keys.len());
    out.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    if reject_ties {
        for w in out.windows(2) {
            if keys[w[0]] == keys[w[1]] {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                return Err(Error::Tie(a + 1, b + 1));
            }
        }
    }
    Ok(())
}
