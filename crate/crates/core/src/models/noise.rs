use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Laplace scale giving unit variance.
pub const LAPLACE_SCALE: f64 = 1.0 / SQRT_2;

/// Gumbel scale giving unit variance.
pub fn gumbel_scale() -> f64 {
    6f64.sqrt() / PI
}

/// Finite-support noise given as (value, probability) atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNoise {
    atoms: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl DiscreteNoise {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("discrete noise needs at least one atom"));
        }
        if atoms.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid("atoms need finite values and positive probabilities"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("atom probabilities sum to {total}, not 1")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("duplicate atom values"));
        }
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Ok(Self { atoms, cumulative })
    }

    /// Atoms at -1, 0, 1 with probabilities δ/2, 1-δ, δ/2.
    pub fn three_point(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Self::new(vec![(-1.0, delta / 2.0), (0.0, 1.0 - delta), (1.0, delta / 2.0)])
    }

    /// Atoms at ±1 with probability (1-δ)/2 each and ±10 with δ/2 each.
    pub fn four_point(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let (s, w) = ((1.0 - delta) / 2.0, delta / 2.0);
        Self::new(vec![(-10.0, w), (-1.0, s), (1.0, s), (10.0, w)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[k].0
    }

    /// First pair of candidates (0-based) whose perturbed values can coincide.
    pub fn first_tie(&self, values: &[f64], theta: f64) -> Option<(usize, usize)> {
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                for &(a, _) in &self.atoms {
                    for &(b, _) in &self.atoms {
                        if values[i] + a / theta == values[j] + b / theta {
                            return Some((i, j));
                        }
                    }
                }
            }
        }
        None
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Noise added to candidate values before ranking. Continuous kinds have
/// unit variance.
#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    Gaussian,
    Laplacian,
    Gumbel,
    Discrete(DiscreteNoise),
}

impl Noise {
    pub fn is_continuous(&self) -> bool {
        !matches!(self, Noise::Discrete(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Noise::Gaussian => "gaussian",
            Noise::Laplacian => "laplacian",
            Noise::Gumbel => "gumbel",
            Noise::Discrete(_) => "discrete",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Noise::Gaussian => StandardNormal.sample(rng),
            Noise::Laplacian => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -LAPLACE_SCALE * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Noise::Gumbel => {
                let u: f64 = rng.random();
                -gumbel_scale() * (-(u.max(f64::MIN_POSITIVE)).ln()).ln()
            }
            Noise::Discrete(d) => d.sample(rng),
        }
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        Ok(self.log_pdf(z)?.exp())
    }

    pub fn log_pdf(&self, z: f64) -> Result<f64> {
        match self {
            Noise::Gaussian => Ok(-0.5 * z * z - 0.5 * (2.0 * PI).ln()),
            Noise::Laplacian => Ok(-z.abs() / LAPLACE_SCALE - (2.0 * LAPLACE_SCALE).ln()),
            Noise::Gumbel => {
                let b = gumbel_scale();
                let t = z / b;
                Ok(-t - (-t).exp() - b.ln())
            }
            Noise::Discrete(_) => Err(Error::unsupported("discrete noise has no density")),
        }
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        match self {
            Noise::Gaussian => Ok(0.5 * libm::erfc(-z / SQRT_2)),
            Noise::Laplacian => Ok(laplace_cdf(z, 1.0 / LAPLACE_SCALE)),
            Noise::Gumbel => Ok((-(-z / gumbel_scale()).exp()).exp()),
            Noise::Discrete(d) => Ok(d.atoms.iter().filter(|a| a.0 <= z).map(|a| a.1).sum()),
        }
    }

    /// Survival function, accurate in the upper tail.
    pub fn sf(&self, z: f64) -> Result<f64> {
        match self {
            Noise::Gaussian => Ok(0.5 * libm::erfc(z / SQRT_2)),
            Noise::Laplacian => Ok(laplace_cdf(-z, 1.0 / LAPLACE_SCALE)),
            Noise::Gumbel => Ok(-(-(-z / gumbel_scale()).exp()).exp_m1()),
            Noise::Discrete(d) => Ok(d.atoms.iter().filter(|a| a.0 > z).map(|a| a.1).sum()),
        }
    }

    /// Half-width (in noise units) beyond which the density is negligible.
    pub(crate) fn tail_reach(&self) -> f64 {
        match self {
            Noise::Gaussian => 39.0,
            _ => 60.0,
        }
    }
}

pub(crate) fn laplace_cdf(z: f64, lambda: f64) -> f64 {
    if z < 0.0 {
        0.5 * (lambda * z).exp()
    } else {
        1.0 - 0.5 * (-lambda * z).exp()
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Discrete(d) => {
                write!(f, "discrete:")?;
                for (k, (v, p)) in d.atoms.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}@{p}")?;
                }
                Ok(())
            }
            other => f.write_str(other.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(noise: &Noise) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    #[test]
    fn continuous_kinds_have_unit_variance() {
        for noise in [Noise::Gaussian, Noise::Laplacian, Noise::Gumbel] {
            let (_, v) = moments(&noise);
            assert!((v - 1.0).abs() < 0.02, "{noise}: {v}");
            let var = integrate(&|z: f64| z * z * noise.pdf(z).unwrap(), -60.0, 60.0, &[0.0], 1e-12);
            let mean = integrate(&|z: f64| z * noise.pdf(z).unwrap(), -60.0, 60.0, &[0.0], 1e-12);
            assert!((var - mean * mean - 1.0).abs() < 1e-9, "{noise}: {var}");
        }
    }

    #[test]
    fn cdf_matches_integrated_density() {
        for noise in [Noise::Gaussian, Noise::Laplacian, Noise::Gumbel] {
            for z in [-2.0, -0.3, 0.0, 0.7, 3.0] {
                let num = integrate(&|t: f64| noise.pdf(t).unwrap(), -60.0, z, &[0.0], 1e-13);
                assert!((num - noise.cdf(z).unwrap()).abs() < 1e-11, "{noise} at {z}");
                assert!((noise.cdf(z).unwrap() + noise.sf(z).unwrap() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn discrete_validation() {
        assert!(DiscreteNoise::new(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(DiscreteNoise::new(vec![(0.0, 0.5), (0.0, 0.5)]).is_err());
        assert!(DiscreteNoise::three_point(1.5).is_err());
        let d = DiscreteNoise::four_point(0.1).unwrap();
        assert_eq!(d.atoms().len(), 4);
    }

    #[test]
    fn three_point_pool_is_tie_free() {
        let d = DiscreteNoise::three_point(0.1).unwrap();
        assert_eq!(d.first_tie(&[1.75, 0.5, 0.0], 1.0), None);
        assert_eq!(d.first_tie(&[2.0, 1.0, 0.0], 1.0), Some((0, 1)));
    }

    #[test]
    fn discrete_sampling_frequencies() {
        let d = DiscreteNoise::three_point(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let zeros = (0..n).filter(|_| d.sample(&mut rng) == 0.0).count();
        assert!((zeros as f64 / n as f64 - 0.8).abs() < 0.005);
    }
}
