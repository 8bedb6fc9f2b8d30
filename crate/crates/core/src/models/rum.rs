//! Random utility models: candidates ranked by x_i + ε_i / θ.

use std::collections::BTreeMap;

use rand::Rng;

use super::noise::{DiscreteNoise, Noise};
use super::rank_by_keys;
use crate::error::{Error, Result};
use crate::quad;
use crate::types::{CandidatePool, CandidateSet, Permutation};

/// Largest joint atom count enumerated exactly.
pub const MAX_JOINT_ATOMS: usize = 1 << 22;

const QUAD_TOL: f64 = 1e-14;

pub fn rum_sample<R: Rng + ?Sized>(
    noise: &Noise,
    theta: f64,
    pool: &CandidatePool,
    rng: &mut R,
) -> Result<Permutation> {
    let keys: Vec<f64> = pool.values().iter().map(|x| x + noise.sample(rng) / theta).collect();
    let mut out = Vec::with_capacity(keys.len());
    rank_by_keys(&keys, &mut out, !noise.is_continuous())?;
    Ok(Permutation::from_vec_unchecked(out))
}

/// Continuous-noise RUM on a fixed pool; selection probabilities by 1-D quadrature.
#[derive(Debug, Clone)]
pub struct ContinuousRum {
    noise: Noise,
    theta: f64,
    x: Vec<f64>,
}

impl ContinuousRum {
    pub fn new(noise: Noise, theta: f64, pool: &CandidatePool) -> Result<Self> {
        if !noise.is_continuous() {
            return Err(Error::unsupported("quadrature needs a continuous noise kind"));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { noise, theta, x: pool.values().to_vec() })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn pdf(&self, c: usize, y: f64) -> f64 {
        self.theta * self.noise.pdf(self.theta * (y - self.x[c])).unwrap_or(0.0)
    }

    fn cdf(&self, c: usize, y: f64) -> f64 {
        self.noise.cdf(self.theta * (y - self.x[c])).unwrap_or(0.0)
    }

    fn sf(&self, c: usize, y: f64) -> f64 {
        self.noise.sf(self.theta * (y - self.x[c])).unwrap_or(0.0)
    }

    fn window(&self, c: usize) -> (f64, f64) {
        let r = self.noise.tail_reach() / self.theta;
        (self.x[c] - r, self.x[c] + r)
    }

    /// Pr[best survivor = c] = ∫ f_c Π_{j alive, j≠c} F_j.
    pub fn top_choice(&self, removed: CandidateSet) -> Vec<f64> {
        let n = self.x.len();
        let alive: Vec<usize> = (0..n).filter(|&c| !removed.contains(c)).collect();
        let mut out = vec![0.0; n];
        for &c in &alive {
            let f = |y: f64| {
                let mut v = self.pdf(c, y);
                for &j in &alive {
                    if j != c {
                        v *= self.cdf(j, y);
                    }
                }
                v
            };
            let (a, b) = self.window(c);
            out[c] = quad::integrate(&f, a, b, &self.x, QUAD_TOL);
        }
        out
    }

    /// `m[i][j] = Pr[σ_1 = i, σ_2 = j]` = ∫ f_j (1 - F_i) Π_{k≠i,j} F_k.
    pub fn top_two(&self) -> Vec<Vec<f64>> {
        let n = self.x.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let f = |y: f64| {
                    let mut v = self.pdf(j, y) * self.sf(i, y);
                    for k in 0..n {
                        if k != i && k != j {
                            v *= self.cdf(k, y);
                        }
                    }
                    v
                };
                let (a, b) = self.window(j);
                m[i][j] = quad::integrate(&f, a, b, &self.x, QUAD_TOL);
            }
        }
        m
    }
}

/// Exact ranking distribution of a discrete-noise RUM by enumerating the
/// joint atom support. Fails on any pool where a tie can occur.
pub fn discrete_permutation_law(
    noise: &DiscreteNoise,
    theta: f64,
    pool: &CandidatePool,
) -> Result<Vec<(Permutation, f64)>> {
    let x = pool.values();
    let n = x.len();
    if let Some((i, j)) = noise.first_tie(x, theta) {
        return Err(Error::Tie(i + 1, j + 1));
    }
    let atoms = noise.atoms();
    let m = atoms.len();
    let total = (m as f64).powi(n as i32);
    if total > MAX_JOINT_ATOMS as f64 {
        return Err(Error::unsupported(format!("{m}^{n} joint atoms is too many to enumerate")));
    }
    let mut law: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut digits = vec![0usize; n];
    let mut keys = vec![0.0; n];
    let mut order = Vec::with_capacity(n);
    loop {
        let mut p = 1.0;
        for c in 0..n {
            let (v, w) = atoms[digits[c]];
            keys[c] = x[c] + v / theta;
            p *= w;
        }
        rank_by_keys(&keys, &mut order, true)?;
        *law.entry(order.clone()).or_insert(0.0) += p;
        // odometer increment
        let mut k = 0;
        while k < n {
            digits[k] += 1;
            if digits[k] < m {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(law.into_iter().map(|(o, p)| (Permutation::from_vec_unchecked(o), p)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::plackett_luce::pl_top_choice;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool3() -> CandidatePool {
        CandidatePool::new(vec![1.0, 0.5, 0.0]).unwrap()
    }

    #[test]
    fn gumbel_quadrature_matches_softmax() {
        let pool = CandidatePool::new(vec![1.2, 0.4, 0.1, -0.7]).unwrap();
        for theta in [0.3, 1.0, 4.0] {
            let rum = ContinuousRum::new(Noise::Gumbel, theta, &pool).unwrap();
            let pl_theta = theta / super::super::noise::gumbel_scale();
            for removed in [CandidateSet::EMPTY, CandidateSet::from_indices(&[0]), CandidateSet::from_indices(&[1, 3])]
            {
                let q = rum.top_choice(removed);
                let s = pl_top_choice(pl_theta, &pool, removed);
                for (a, b) in q.iter().zip(&s) {
                    assert!((a - b).abs() < 1e-12, "theta={theta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn quadrature_sums_to_one() {
        for noise in [Noise::Gaussian, Noise::Laplacian] {
            for theta in [0.2, 1.0, 8.0] {
                let rum = ContinuousRum::new(noise.clone(), theta, &pool3()).unwrap();
                let s: f64 = rum.top_choice(CandidateSet::EMPTY).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "{noise} {theta}: {s}");
                let t = rum.top_two();
                let s2: f64 = t.iter().flatten().sum();
                assert!((s2 - 1.0).abs() < 1e-12);
                // marginal of the top-two table is the first-choice pmf
                let first = rum.top_choice(CandidateSet::EMPTY);
                for i in 0..3 {
                    let row: f64 = t[i].iter().sum();
                    assert!((row - first[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_first_choice_agrees_with_sampling() {
        let pool = pool3();
        let rum = ContinuousRum::new(Noise::Gaussian, 1.0, &pool).unwrap();
        let exact = rum.top_choice(CandidateSet::EMPTY)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| rum_sample(&Noise::Gaussian, 1.0, &pool, &mut rng).unwrap().top() == 0).count();
        let p = hits as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn vanishing_noise_gives_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ok = (0..10_000)
            .filter(|_| rum_sample(&Noise::Gaussian, 1e6, &pool3(), &mut rng).unwrap() == Permutation::identity(3))
            .count();
        assert!(ok > 9_990);
    }

    #[test]
    fn discrete_law_is_normalized_and_tie_checked() {
        let d = DiscreteNoise::three_point(0.1).unwrap();
        let law = discrete_permutation_law(&d, 1.0, &CandidatePool::new(vec![1.75, 0.5, 0.0]).unwrap()).unwrap();
        let s: f64 = law.iter().map(|l| l.1).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let bad = CandidatePool::new(vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(discrete_permutation_law(&d, 1.0, &bad).unwrap_err(), Error::Tie(1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise = Noise::Discrete(d);
        let r = (0..1000).map(|_| rum_sample(&noise, 1.0, &bad, &mut rng)).find(|r| r.is_err());
        assert!(matches!(r, Some(Err(Error::Tie(_, _)))));
    }
}
