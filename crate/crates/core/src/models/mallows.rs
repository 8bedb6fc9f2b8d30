use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{CandidateSet, Permutation};

/// Mallows distribution around the true ranking: Pr[π] ∝ φ^(-inversions).
#[derive(Debug, Clone, PartialEq)]
pub struct MallowsModel {
    phi: f64,
    n: usize,
    z: f64,
    /// insertion[j][p]: probability that item j lands at position p of j+1 slots
    insertion: Vec<Vec<f64>>,
}

impl MallowsModel {
    pub fn new(phi: f64, n: usize) -> Result<Self> {
        if !(phi > 1.0 && phi.is_finite()) {
            return Err(Error::invalid(format!("Mallows needs phi > 1, got {phi}")));
        }
        if n == 0 {
            return Err(Error::invalid("Mallows needs at least one candidate"));
        }
        let mut z = 1.0;
        let mut insertion = Vec::with_capacity(n);
        for j in 0..n {
            // landing at p puts j - p better items behind it
            let w: Vec<f64> = (0..=j).map(|p| phi.powi(-((j - p) as i32))).collect();
            let s: f64 = w.iter().sum();
            z *= s;
            insertion.push(w.into_iter().map(|x| x / s).collect());
        }
        Ok(Self { phi, n, z, insertion })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn pmf(&self, pi: &Permutation) -> f64 {
        debug_assert_eq!(pi.len(), self.n);
        self.phi.powi(-(pi.inversions() as i32)) / self.z
    }

    /// Repeated insertion: item j goes to position p with probability ∝ φ^-(j-p).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let mut order = Vec::with_capacity(self.n);
        self.sample_into(rng, &mut order);
        Permutation::from_vec_unchecked(order)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, order: &mut Vec<usize>) {
        order.clear();
        for (j, probs) in self.insertion.iter().enumerate() {
            let mut u: f64 = rng.random();
            let mut p = j;
            for (k, &q) in probs.iter().enumerate().rev() {
                if u < q {
                    p = k;
                    break;
                }
                u -= q;
                p = k;
            }
            order.insert(p, j);
        }
    }

    /// Pr[π_1 = i] from the closed form (1-φ^-1) / (φ^i (1-φ^-n)), 0-based i.
    pub fn first_choice_closed_form(&self, i: usize) -> f64 {
        let phi = self.phi;
        (1.0 - 1.0 / phi) / (phi.powi(i as i32) * (1.0 - phi.powi(-(self.n as i32))))
    }

    /// Probability that `i` is the best survivor after removing `removed`.
    pub fn first_choice_pmf(&self, i: usize, removed: CandidateSet) -> Result<f64> {
        if i >= self.n {
            return Err(Error::invalid(format!("candidate {} outside pool of {}", i + 1, self.n)));
        }
        if removed.contains(i) {
            return Err(Error::invalid(format!("candidate {} is in the removed set", i + 1)));
        }
        if removed.is_empty() {
            return Ok(self.first_choice_closed_form(i));
        }
        Ok(self.top_choice_pmf(removed)[i])
    }

    /// Distribution of the best survivor after removing `removed`.
    ///
    /// Runs the insertion process while tracking which survivor currently
    /// leads and where it sits, which is exact for any removed set.
    pub fn top_choice_pmf(&self, removed: CandidateSet) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        if removed.len() >= n {
            return out;
        }
        if removed.is_empty() {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.first_choice_closed_form(i);
            }
            return out;
        }
        // lead[t][q]: survivor t leads and sits at position q
        let mut none = 1.0;
        let mut lead = vec![vec![0.0; n]; n];
        let mut next = vec![vec![0.0; n]; n];
        for j in 0..n {
            let w = &self.insertion[j];
            let survivor = !removed.contains(j);
            for row in next.iter_mut() {
                row.iter_mut().for_each(|x| *x = 0.0);
            }
            if none > 0.0 && survivor {
                for (p, &wp) in w.iter().enumerate() {
                    next[j][p] += none * wp;
                }
                none = 0.0;
            }
            for t in 0..j {
                for q in 0..j {
                    let m = lead[t][q];
                    if m == 0.0 {
                        continue;
                    }
                    let ahead: f64 = w[..=q].iter().sum();
                    if survivor {
                        for (p, &wp) in w[..=q].iter().enumerate() {
                            next[j][p] += m * wp;
                        }
                    } else {
                        next[t][q + 1] += m * ahead;
                    }
                    next[t][q] += m * (1.0 - ahead);
                }
            }
            std::mem::swap(&mut lead, &mut next);
        }
        for (t, row) in lead.iter().enumerate() {
            out[t] = row.iter().sum();
        }
        out
    }

    /// Joint pmf of the top two: `m[i][j] = Pr[π_1 = i, π_2 = j]`.
    ///
    /// Given π_1 = i the rest is Mallows on n-1 items with the same φ.
    pub fn top_two_pmf(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut m = vec![vec![0.0; n]; n];
        if n < 2 {
            return m;
        }
        let rest = MallowsModel::new(self.phi, n - 1).expect("valid");
        for i in 0..n {
            let pi = self.first_choice_closed_form(i);
            for j in 0..n {
                if j != i {
                    let r = if j < i { j } else { j - 1 };
                    m[i][j] = pi * rest.first_choice_closed_form(r);
                }
            }
        }
        m
    }
}
