//! Candidates, rankings and the small set algebra used everywhere else.
//!
//! Candidate indices are 0-based: index 0 is always the best candidate.
//! Display and parsing at the CLI boundary use 1-based labels.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Largest pool the bitset representation supports.
pub const MAX_CANDIDATES: usize = 32;

/// True candidate values, strictly decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    values: Vec<f64>,
}

impl CandidatePool {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a pool needs at least two candidates"));
        }
        if values.len() > MAX_CANDIDATES {
            return Err(Error::invalid(format!(
                "pool of {} candidates exceeds the limit of {MAX_CANDIDATES}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("candidate values must be finite"));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[0] <= w[1] {
                return Err(Error::invalid(format!(
                    "candidate values must be strictly decreasing (positions {} and {})",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn best(&self) -> f64 {
        self.values[0]
    }

    pub fn worst(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Same pool with every value shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v + c).collect())
    }
}

/// Where candidate values come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CandidateDistribution {
    Fixed(CandidatePool),
    Uniform {
        lo: f64,
        hi: f64,
        n: usize,
    },
    /// Uniform on `[-halfwidth, halfwidth]`.
    UniformCentered {
        halfwidth: f64,
        n: usize,
    },
}

impl CandidateDistribution {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("uniform bounds must satisfy lo < hi (got {lo}, {hi})")));
        }
        check_count(n)?;
        Ok(Self::Uniform { lo, hi, n })
    }

    pub fn centered(halfwidth: f64, n: usize) -> Result<Self> {
        if !(halfwidth.is_finite() && halfwidth > 0.0) {
            return Err(Error::invalid("halfwidth must be positive"));
        }
        check_count(n)?;
        Ok(Self::UniformCentered { halfwidth, n })
    }

    /// Uniform with unit variance, i.e. on `[-sqrt 3, sqrt 3]`.
    pub fn unit_variance_uniform(n: usize) -> Result<Self> {
        Self::centered(3f64.sqrt(), n)
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Fixed(p) => p.len(),
            Self::Uniform { n, .. } | Self::UniformCentered { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, Self::Fixed(_))
    }

    fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Self::Fixed(_) => None,
            Self::Uniform { lo, hi, .. } => Some((*lo, *hi)),
            Self::UniformCentered { halfwidth, .. } => Some((-halfwidth, *halfwidth)),
        }
    }

    /// Draws a pool, resampling on (measure-zero) ties.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CandidatePool {
        match self.bounds() {
            None => match self {
                Self::Fixed(p) => p.clone(),
                _ => unreachable!(),
            },
            Some((lo, hi)) => loop {
                let mut v: Vec<f64> = (0..self.len()).map(|_| rng.random_range(lo..hi)).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                if let Ok(p) = CandidatePool::new(v) {
                    break p;
                }
            },
        }
    }

    /// Expected value of the i-th best candidate, as a pool.
    ///
    /// Exact for any value-independent ranking model, since utilities are
    /// then linear in the sorted values.
    pub fn expected_pool(&self) -> Result<CandidatePool> {
        match self {
            Self::Fixed(p) => Ok(p.clone()),
            _ => {
                let (lo, hi) = self.bounds().expect("continuous kind");
                CandidatePool::new(uniform_order_statistic_means(self.len(), lo, hi)?)
            }
        }
    }
}

fn check_count(n: usize) -> Result<()> {
    if !(2..=MAX_CANDIDATES).contains(&n) {
        return Err(Error::invalid(format!("candidate count must be in 2..={MAX_CANDIDATES}, got {n}")));
    }
    Ok(())
}

/// Means of the descending order statistics of `n` i.i.d. uniforms on `[lo, hi]`.
pub fn uniform_order_statistic_means(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("need at least one candidate"));
    }
    if !(lo < hi) {
        return Err(Error::invalid(format!("need lo < hi (got {lo}, {hi})")));
    }
    let m = (n + 1) as f64;
    Ok((1..=n).map(|i| lo + (hi - lo) * (n + 1 - i) as f64 / m).collect())
}

/// A set of candidate indices, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct CandidateSet(pub u32);

impl CandidateSet {
    pub const EMPTY: Self = Self(0);

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            Self(u32::MAX)
        } else {
            Self((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        Self(1 << i)
    }

    pub fn from_indices(idx: &[usize]) -> Self {
        idx.iter().fold(Self::EMPTY, |s, &i| s.with(i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        Self(self.0 | 1 << i)
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn complement(self, n: usize) -> Self {
        Self(!self.0 & Self::full(n).0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

/// A full ranking, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::invalid("empty permutation"));
        }
        let mut seen = vec![false; n];
        for &c in &order {
            if c >= n || seen[c] {
                return Err(Error::invalid(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[c] = true;
        }
        Ok(Self { order })
    }

    /// Builds from 1-based labels, e.g. `(2,1,3)`.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::invalid("1-based labels cannot contain 0"));
        }
        Self::new(labels.iter().map(|l| l - 1).collect())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Self {
        debug_assert!(Self::new(order.clone()).is_ok());
        Self { order }
    }

    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn top(&self) -> usize {
        self.order[0]
    }

    /// First candidate in ranking order that is not in `removed`.
    pub fn top_excluding(&self, removed: CandidateSet) -> Option<usize> {
        self.order.iter().copied().find(|&c| !removed.contains(c))
    }

    /// Number of pairs ranked opposite to the true order.
    pub fn inversions(&self) -> usize {
        let o = &self.order;
        let mut count = 0;
        for a in 0..o.len() {
            for b in a + 1..o.len() {
                if o[a] > o[b] {
                    count += 1;
                }
            }
        }
        count
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.order.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c + 1)?;
        }
        write!(f, ")")
    }
}

/// A ranking restricted to the candidates that survive a removal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialRanking {
    order: Vec<usize>,
    removed: CandidateSet,
}

impl PartialRanking {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn removed(&self) -> CandidateSet {
        self.removed
    }

    pub fn top(&self) -> usize {
        self.order[0]
    }

    /// Removes more candidates; `S` then `T` equals removing `S ∪ T` once.
    pub fn remove(&self, more: CandidateSet) -> Result<Self> {
        let order: Vec<usize> = self.order.iter().copied().filter(|&c| !more.contains(c)).collect();
        if order.is_empty() {
            return Err(Error::invalid("removal would leave no candidates"));
        }
        Ok(Self { order, removed: self.removed.union(more) })
    }
}

/// Number of candidate pairs the two rankings order differently.
pub fn kendall_tau(pi: &Permutation, sigma: &Permutation) -> Result<usize> {
    let n = pi.len();
    if sigma.len() != n {
        return Err(Error::invalid(format!("size mismatch: {} vs {}", n, sigma.len())));
    }
    let mut pos = vec![0usize; n];
    for (p, &c) in sigma.order.iter().enumerate() {
        pos[c] = p;
    }
    // pi read through sigma's positions; discordant pairs are its inversions
    let mapped: Vec<usize> = pi.order.iter().map(|&c| pos[c]).collect();
    Ok(Permutation { order: mapped }.inversions())
}

pub fn remove_candidates(pi: &Permutation, removed: CandidateSet) -> Result<PartialRanking> {
    let n = pi.len();
    if removed.0 & !CandidateSet::full(n).0 != 0 {
        return Err(Error::invalid("removed set refers to candidates outside the pool"));
    }
    if removed.len() >= n {
        return Err(Error::invalid("cannot remove every candidate"));
    }
    let order = pi.order.iter().copied().filter(|&c| !removed.contains(c)).collect();
    Ok(PartialRanking { order, removed })
}

pub fn top_value(pr: &PartialRanking, pool: &CandidatePool) -> f64 {
    pool.value(pr.top())
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    use itertools::Itertools;
    (0..n).permutations(n).map(Permutation::from_vec_unchecked).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: &[usize]) -> Permutation {
        Permutation::from_one_based(l).unwrap()
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau(&p(&[1, 2, 3]), &p(&[1, 2, 3])).unwrap(), 0);
        assert_eq!(kendall_tau(&p(&[4, 3, 2, 1]), &p(&[1, 2, 3, 4])).unwrap(), 6);
        assert_eq!(kendall_tau(&p(&[2, 1, 3]), &p(&[1, 3, 2])).unwrap(), 2);
        assert!(kendall_tau(&p(&[1, 2]), &p(&[1, 2, 3])).is_err());
    }

    #[test]
    fn removal_examples() {
        let r = remove_candidates(&p(&[2, 1, 3]), CandidateSet::EMPTY).unwrap();
        assert_eq!(r.order(), &[1, 0, 2]);
        let r = remove_candidates(&p(&[2, 1, 3]), CandidateSet::from_indices(&[1])).unwrap();
        assert_eq!(r.order(), &[0, 2]);
        let r = remove_candidates(&p(&[3, 1, 2]), CandidateSet::from_indices(&[0, 1])).unwrap();
        assert_eq!(r.order(), &[2]);
        assert!(remove_candidates(&p(&[1, 2]), CandidateSet::full(2)).is_err());
    }

    #[test]
    fn top_value_examples() {
        let pool = CandidatePool::new(vec![1.0, 0.5, 0.0]).unwrap();
        let r = remove_candidates(&p(&[1, 3, 2]), CandidateSet::from_indices(&[1])).unwrap();
        assert_eq!(top_value(&r, &pool), 1.0);
        let r = remove_candidates(&p(&[3, 1, 2]), CandidateSet::from_indices(&[0, 1])).unwrap();
        assert_eq!(top_value(&r, &pool), 0.0);
        let pool = CandidatePool::new(vec![1.75, 0.5, 0.0]).unwrap();
        let r = remove_candidates(&p(&[2, 1, 3]), CandidateSet::EMPTY).unwrap();
        assert_eq!(top_value(&r, &pool), 0.5);
    }

    #[test]
    fn order_statistic_examples() {
        let m = uniform_order_statistic_means(4, 0.0, 1.0).unwrap();
        for (a, b) in m.iter().zip([0.8, 0.6, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(uniform_order_statistic_means(1, 0.0, 1.0).unwrap(), vec![0.5]);
        assert_eq!(uniform_order_statistic_means(3, -1.0, 1.0).unwrap(), vec![0.5, 0.0, -0.5]);
        assert!(uniform_order_statistic_means(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn pool_rejects_bad_input() {
        assert!(CandidatePool::new(vec![1.0]).is_err());
        assert!(CandidatePool::new(vec![1.0, 1.0]).is_err());
        assert!(CandidatePool::new(vec![0.0, 1.0]).is_err());
        assert!(CandidatePool::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn permutation_rejects_non_bijection() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert_eq!(p(&[2, 1, 3]).to_string(), "(2,1,3)");
    }

    #[test]
    fn set_iteration() {
        let s = CandidateSet::from_indices(&[4, 0, 2]);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(s.complement(5).iter().collect::<Vec<_>>(), vec![1, 3]);
    }
}
