//! Coupled Monte Carlo estimates and the condition checks built on them.
//!
//! Trials run in fixed-size batches. Batch `b` draws from a ChaCha8 stream
//! `b` of the run seed, and batch moments are merged in batch order, so a
//! result depends only on (seed, parameters), never on the thread count.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{ExactLaw, UtilityTable};
use crate::models::{Family, Noise, Sampler};
use crate::types::{CandidateDistribution, CandidateSet};

pub const DEFAULT_Z_THRESHOLD: f64 = 3.0;
pub const DEFAULT_CHECK_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_CELL_SAMPLES: u64 = 100_000;
const BATCH: u64 = 4096;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    pub fn estimate(&self) -> EstimateWithError {
        let stderr = if self.n > 1 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        EstimateWithError::new(self.mean, stderr, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub z: f64,
}

impl EstimateWithError {
    pub fn new(mean: f64, stderr: f64, n_samples: u64) -> Self {
        let z = if stderr > 0.0 {
            mean / stderr
        } else if mean > 0.0 {
            f64::INFINITY
        } else if mean < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        Self { mean, stderr, n_samples, z }
    }

    pub fn exact(value: f64) -> Self {
        Self::new(value, 0.0, 0)
    }

    /// Difference of two independent estimates.
    pub fn minus(&self, other: &Self) -> Self {
        Self::new(self.mean - other.mean, self.stderr.hypot(other.stderr), self.n_samples.min(other.n_samples))
    }
}

impl fmt::Display for EstimateWithError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6e} ± {:.2e} (z = {:.2})", self.mean, self.stderr, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn from_z(z: f64, threshold: f64) -> Self {
        if z > threshold {
            Verdict::Holds
        } else if z < -threshold {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    PrefFirstPosition,
    PrefWeakerCompetition,
    Monotonicity,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::PrefFirstPosition => "pref_first_position",
            Condition::PrefWeakerCompetition => "pref_weaker_competition",
            Condition::Monotonicity => "monotonicity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: Condition,
    /// For monotonicity: the least significant consecutive increase.
    pub estimate: EstimateWithError,
    pub verdict: Verdict,
    /// For monotonicity: E[top survivor] at each grid point.
    pub points: Vec<EstimateWithError>,
}

/// Sample count and seed for one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        Ok(Self { samples, seed })
    }
}

/// SplitMix64 mixing of a base seed with two coordinates.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `trial` `cfg.samples` times; each call fills `width` outputs.
pub fn run_trials<S, I, F>(cfg: McConfig, width: usize, init: I, trial: F) -> Result<Vec<Moments>>
where
    I: Fn() -> Result<S> + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
{
    let batches = cfg.samples.div_ceil(BATCH);
    let per_batch: Vec<Vec<Moments>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b);
            let mut state = init()?;
            let mut out = vec![0.0; width];
            let mut acc = vec![Moments::default(); width];
            let count = BATCH.min(cfg.samples - b * BATCH);
            for _ in 0..count {
                trial(&mut state, &mut rng, &mut out)?;
                for (m, &v) in acc.iter_mut().zip(&out) {
                    m.push(v);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::default(); width];
    for batch in &per_batch {
        for (t, m) in total.iter_mut().zip(batch) {
            t.merge(m);
        }
    }
    Ok(total)
}

fn top_excluding(order: &[usize], removed: usize) -> usize {
    if order[0] != removed {
        order[0]
    } else {
        order[1]
    }
}

/// Utility table plus paired estimates of the differences that matter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McUtilityEstimate {
    pub table: UtilityTable,
    pub ah_minus_aa: EstimateWithError,
    pub hh_minus_ah: EstimateWithError,
    /// U_A + U_AA - U_H - U_AH
    pub dom1: EstimateWithError,
    /// U_A + U_HA - U_H - U_HH
    pub dom2: EstimateWithError,
    pub welfare_aa: EstimateWithError,
    pub welfare_hh: EstimateWithError,
    /// W_HH - W_AA
    pub welfare_gap: EstimateWithError,
}

struct TableScratch {
    a: Sampler,
    h: Sampler,
    sigma: Vec<usize>,
    pi: Vec<usize>,
    tau: Vec<usize>,
}

/// Per trial: σ from the algorithm, π and τ from two independent humans,
/// all six utilities read off the same draws.
pub fn mc_utility_estimate(
    theta_a: f64,
    theta_h: f64,
    family: &Family,
    source: &CandidateDistribution,
    cfg: McConfig,
) -> Result<McUtilityEstimate> {
    let ma = family.at(theta_a)?;
    let mh = family.at(theta_h)?;
    let n = source.len();
    let init = || {
        Ok(TableScratch {
            a: ma.sampler(n)?,
            h: mh.sampler(n)?,
            sigma: Vec::with_capacity(n),
            pi: Vec::with_capacity(n),
            tau: Vec::with_capacity(n),
        })
    };
    let m = run_trials(cfg, 13, init, |s, rng, out| {
        let pool = source.sample(rng);
        let x = pool.values();
        s.a.draw(x, rng, &mut s.sigma)?;
        s.h.draw(x, rng, &mut s.pi)?;
        s.h.draw(x, rng, &mut s.tau)?;
        let first_a = x[s.sigma[0]];
        let first_h = x[s.pi[0]];
        let aa = x[s.sigma[1]];
        let ah = x[top_excluding(&s.pi, s.sigma[0])];
        let ha = x[top_excluding(&s.sigma, s.pi[0])];
        let hh = x[top_excluding(&s.pi, s.tau[0])];
        let first_tau = x[s.tau[0]];
        out.copy_from_slice(&[
            first_a,
            first_h,
            aa,
            ah,
            ha,
            hh,
            ah - aa,
            hh - ah,
            first_a + aa - first_h - ah,
            first_a + ha - first_h - hh,
            first_a + aa,
            first_tau + hh,
            first_tau + hh - first_a - aa,
        ]);
        Ok(())
    })?;
    let e: Vec<EstimateWithError> = m.iter().map(Moments::estimate).collect();
    Ok(McUtilityEstimate {
        table: UtilityTable {
            first_a: e[0].mean,
            first_h: e[1].mean,
            aa: e[2].mean,
            ah: e[3].mean,
            ha: e[4].mean,
            hh: e[5].mean,
            stderr: [e[0].stderr, e[1].stderr, e[2].stderr, e[3].stderr, e[4].stderr, e[5].stderr],
        },
        ah_minus_aa: e[6],
        hh_minus_ah: e[7],
        dom1: e[8],
        dom2: e[9],
        welfare_aa: e[10],
        welfare_hh: e[11],
        welfare_gap: e[12],
    })
}

pub fn mc_utility_table(
    theta_a: f64,
    theta_h: f64,
    family: &Family,
    source: &CandidateDistribution,
    cfg: McConfig,
) -> Result<UtilityTable> {
    Ok(mc_utility_estimate(theta_a, theta_h, family, source, cfg)?.table)
}

/// E[(π_1 - π_2) 1{π_1 ≠ σ_1}] with σ, π i.i.d. at accuracy θ.
pub fn check_pref_first_position(
    family: &Family,
    theta: f64,
    source: &CandidateDistribution,
    cfg: McConfig,
    z_threshold: f64,
) -> Result<ConditionReport> {
    let model = family.at(theta)?;
    let n = source.len();
    let init = || Ok((model.sampler(n)?, Vec::with_capacity(n), Vec::with_capacity(n)));
    let m = run_trials(cfg, 1, init, |(s, sigma, pi), rng, out| {
        let pool = source.sample(rng);
        let x = pool.values();
        s.draw(x, rng, sigma)?;
        s.draw(x, rng, pi)?;
        out[0] = if pi[0] != sigma[0] { x[pi[0]] - x[pi[1]] } else { 0.0 };
        Ok(())
    })?;
    let estimate = m[0].estimate();
    Ok(ConditionReport {
        condition: Condition::PrefFirstPosition,
        estimate,
        verdict: Verdict::from_z(estimate.z, z_threshold),
        points: Vec::new(),
    })
}

/// E[π_1^(-τ_1)] - E[π_1^(-σ_1)] with σ at θ1 > θ2 and π, τ at θ2.
pub fn check_pref_weaker_competition(
    family: &Family,
    theta1: f64,
    theta2: f64,
    source: &CandidateDistribution,
    cfg: McConfig,
    z_threshold: f64,
) -> Result<ConditionReport> {
    if !(theta1 > theta2) {
        return Err(Error::invalid(format!("need theta1 > theta2, got {theta1} and {theta2}")));
    }
    let strong = family.at(theta1)?;
    let weak = family.at(theta2)?;
    let n = source.len();
    let init = || Ok((strong.sampler(n)?, weak.sampler(n)?, vec![0usize; n], vec![0usize; n], vec![0usize; n]));
    let m = run_trials(cfg, 1, init, |(s1, s2, sigma, pi, tau), rng, out| {
        let pool = source.sample(rng);
        let x = pool.values();
        s1.draw(x, rng, sigma)?;
        s2.draw(x, rng, tau)?;
        s2.draw(x, rng, pi)?;
        out[0] = x[top_excluding(pi, tau[0])] - x[top_excluding(pi, sigma[0])];
        Ok(())
    })?;
    let estimate = m[0].estimate();
    Ok(ConditionReport {
        condition: Condition::PrefWeakerCompetition,
        estimate,
        verdict: Verdict::from_z(estimate.z, z_threshold),
        points: Vec::new(),
    })
}

/// E[π_1^(-S)] along an increasing θ grid.
///
/// Exact when the family allows it; otherwise one noise draw per trial is
/// shared by every grid point, so consecutive differences are paired.
/// Holds when no step decreases significantly and, for S = {}, every step
/// increases significantly.
pub fn check_monotonicity(
    family: &Family,
    theta_grid: &[f64],
    removed: CandidateSet,
    source: &CandidateDistribution,
    cfg: McConfig,
    z_threshold: f64,
) -> Result<ConditionReport> {
    if theta_grid.is_empty() {
        return Err(Error::invalid("empty accuracy grid"));
    }
    if theta_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("accuracy grid must be strictly increasing"));
    }
    let n = source.len();
    if removed.0 & !CandidateSet::full(n).0 != 0 || removed.len() >= n {
        return Err(Error::invalid("removed set must leave a candidate"));
    }
    let (points, diffs) = match monotonicity_exact(family, theta_grid, removed, source)? {
        Some(values) => {
            let diffs = values.windows(2).map(|w| EstimateWithError::exact(w[1] - w[0])).collect();
            (values.into_iter().map(EstimateWithError::exact).collect(), diffs)
        }
        None => monotonicity_mc(family, theta_grid, removed, source, cfg)?,
    };
    let strict = removed.is_empty();
    let worst = diffs.iter().copied().min_by(|a: &EstimateWithError, b| a.z.total_cmp(&b.z));
    let (estimate, verdict) = match worst {
        None => (points[0], Verdict::Holds),
        Some(w) => {
            let v = if w.z < -z_threshold {
                Verdict::Fails
            } else if !strict || w.z > z_threshold {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            };
            (w, v)
        }
    };
    Ok(ConditionReport { condition: Condition::Monotonicity, estimate, verdict, points })
}

fn monotonicity_exact(
    family: &Family,
    grid: &[f64],
    removed: CandidateSet,
    source: &CandidateDistribution,
) -> Result<Option<Vec<f64>>> {
    let pool = match (family, source) {
        (Family::Mallows, _) => source.expected_pool()?,
        (Family::PlackettLuce | Family::Rum(Noise::Discrete(_)), CandidateDistribution::Fixed(p)) => p.clone(),
        _ => return Ok(None),
    };
    grid.iter()
        .map(|&t| {
            let law = ExactLaw::new(&family.at(t)?, &pool)?;
            Ok(law.top_choice(removed).iter().zip(pool.values()).map(|(p, x)| p * x).sum())
        })
        .collect::<Result<Vec<f64>>>()
        .map(Some)
}

fn monotonicity_mc(
    family: &Family,
    grid: &[f64],
    removed: CandidateSet,
    source: &CandidateDistribution,
    cfg: McConfig,
) -> Result<(Vec<EstimateWithError>, Vec<EstimateWithError>)> {
    let n = source.len();
    let g = grid.len();
    let noise = match family {
        Family::Rum(noise) => noise.clone(),
        // PL is the Gumbel RUM with a rescaled accuracy
        Family::PlackettLuce => Noise::Gumbel,
        Family::Mallows => unreachable!("Mallows is always exact"),
    };
    let scale = match family {
        Family::PlackettLuce => crate::models::noise::gumbel_scale(),
        _ => 1.0,
    };
    let m = run_trials(
        cfg,
        2 * g - 1,
        || Ok(vec![0.0; n]),
        |eps, rng, out| {
            let pool = source.sample(rng);
            let x = pool.values();
            for e in eps.iter_mut() {
                *e = noise.sample(rng);
            }
            for (k, &t) in grid.iter().enumerate() {
                let t = t * scale;
                let best = (0..n)
                    .filter(|&c| !removed.contains(c))
                    .max_by(|&a, &b| (x[a] + eps[a] / t).total_cmp(&(x[b] + eps[b] / t)))
                    .expect("survivor");
                out[k] = x[best];
            }
            for k in 0..g - 1 {
                out[g + k] = out[k + 1] - out[k];
            }
            Ok(())
        },
    )?;
    let e: Vec<EstimateWithError> = m.iter().map(Moments::estimate).collect();
    Ok((e[..g].to_vec(), e[g..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.m2 - all.m2).abs() < 1e-8);
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_z(3.5, 3.0), Verdict::Holds);
        assert_eq!(Verdict::from_z(-3.5, 3.0), Verdict::Fails);
        assert_eq!(Verdict::from_z(1.0, 3.0), Verdict::Inconclusive);
        assert_eq!(EstimateWithError::exact(0.2).z, f64::INFINITY);
        assert_eq!(EstimateWithError::new(1.0, 0.5, 10).z, 2.0);
    }

    #[test]
    fn weaker_competition_rejects_bad_order() {
        let src = CandidateDistribution::uniform(0.0, 1.0, 3).unwrap();
        let cfg = McConfig::new(10, 1).unwrap();
        assert!(check_pref_weaker_competition(&Family::Mallows, 1.0, 2.0, &src, cfg, 3.0).is_err());
    }

    #[test]
    fn single_point_grid_holds() {
        let src = CandidateDistribution::uniform(0.0, 1.0, 4).unwrap();
        let cfg = McConfig::new(100, 1).unwrap();
        let r = check_monotonicity(&Family::Rum(Noise::Gaussian), &[1.0], CandidateSet::EMPTY, &src, cfg, 3.0).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
    }
}
