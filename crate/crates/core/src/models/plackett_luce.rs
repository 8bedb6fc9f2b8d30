use crate::types::{CandidatePool, CandidateSet, Permutation};

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Probability of `pi` under sequential softmax selection with weights exp(θ x_i).
pub fn pl_pmf(theta: f64, pool: &CandidatePool, pi: &Permutation) -> f64 {
    let x = pool.values();
    let order = pi.order();
    let mut log_p = 0.0;
    for k in 0..order.len() {
        let rest = order[k..].iter().map(|&c| theta * x[c]);
        log_p += theta * x[order[k]] - log_sum_exp(rest);
    }
    log_p.exp()
}

/// Softmax over survivors: the best survivor's distribution.
pub fn pl_top_choice(theta: f64, pool: &CandidatePool, removed: CandidateSet) -> Vec<f64> {
    let x = pool.values();
    let alive = || (0..x.len()).filter(|&c| !removed.contains(c));
    let lse = log_sum_exp(alive().map(|c| theta * x[c]));
    (0..x.len()).map(|c| if removed.contains(c) { 0.0 } else { (theta * x[c] - lse).exp() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::all_permutations;

    #[test]
    fn uniform_at_zero_theta() {
        let pool = CandidatePool::new(vec![3.0, 1.0, 0.5, -2.0]).unwrap();
        for pi in all_permutations(4) {
            assert!((pl_pmf(0.0, &pool, &pi) - 1.0 / 24.0).abs() < 1e-15);
        }
        for p in pl_top_choice(0.0, &pool, CandidateSet::EMPTY) {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_candidates() {
        let pool = CandidatePool::new(vec![1.0, 0.0]).unwrap();
        let p = pl_pmf(2f64.ln(), &pool, &Permutation::identity(2));
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normalized() {
        for n in 2..=6 {
            let pool = CandidatePool::new((0..n).map(|i| -(i as f64).powf(1.3)).collect()).unwrap();
            let s: f64 = all_permutations(n).iter().map(|p| pl_pmf(0.8, &pool, p)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
