//! Exact k-firm sequential hiring under Mallows rankings.
//!
//! All A-firms share one algorithmic permutation σ; every H-firm draws its
//! own independent human ranking. The state is the joint law of (σ, set of
//! candidates already hired). An A-firm hires the first unhired candidate in
//! σ; an H-firm hires its top survivor, whose law given the hired set comes
//! from the exact subset table of the human model.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::MallowsModel;
use crate::types::{all_permutations, CandidateDistribution, CandidateSet};

/// Largest pool for the sequential engine.
pub const MAX_SEQUENTIAL_N: usize = 7;

/// Tolerance below which A is not considered strictly better than H.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    A,
    H,
}

impl Strategy {
    pub fn letter(self) -> char {
        match self {
            Strategy::A => 'A',
            Strategy::H => 'H',
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A hiring sequence read as a binary number with A = 1, H = 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategySequence {
    choices: Vec<Strategy>,
}

impl StrategySequence {
    pub fn new(choices: Vec<Strategy>) -> Self {
        Self { choices }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let choices = s
            .chars()
            .map(|c| match c {
                'A' | 'a' => Ok(Strategy::A),
                'H' | 'h' => Ok(Strategy::H),
                other => Err(Error::parse(format!("strategy letter must be A or H, got {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if choices.is_empty() {
            return Err(Error::parse("empty strategy sequence"));
        }
        Ok(Self { choices })
    }

    pub fn choices(&self) -> &[Strategy] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn binary_value(&self) -> u64 {
        self.choices.iter().fold(0, |acc, s| acc << 1 | u64::from(*s == Strategy::A))
    }
}

impl fmt::Display for StrategySequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.choices.iter().try_for_each(|s| write!(f, "{s}"))
    }
}

/// Permutations of the pool with, for each hired set, the first unhired entry.
#[derive(Debug, Clone)]
pub struct PermutationIndex {
    n: usize,
    inversions: Vec<u32>,
    /// first_unhired[s * 2^n + mask]
    first_unhired: Vec<u8>,
}

impl PermutationIndex {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=MAX_SEQUENTIAL_N).contains(&n) {
            return Err(Error::invalid(format!("sequential engine needs 1 <= n <= {MAX_SEQUENTIAL_N}, got {n}")));
        }
        let perms = all_permutations(n);
        let masks = 1usize << n;
        let mut first_unhired = vec![u8::MAX; perms.len() * masks];
        for (s, p) in perms.iter().enumerate() {
            for mask in 0..masks - 1 {
                let c = p.top_excluding(CandidateSet(mask as u32)).expect("nonfull mask");
                first_unhired[s * masks + mask] = c as u8;
            }
        }
        let inversions = perms.iter().map(|p| p.inversions() as u32).collect();
        Ok(Self { n, inversions, first_unhired })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn perms(&self) -> usize {
        self.inversions.len()
    }
}

/// One (φ_A, φ_H, values) instance of the sequential game.
#[derive(Debug, Clone)]
pub struct SequentialGame<'a> {
    index: &'a PermutationIndex,
    values: Vec<f64>,
    weights_a: Vec<f64>,
    /// human[mask * n + c]: Pr[human top survivor = c | hired = mask]
    human: Vec<f64>,
}

impl<'a> SequentialGame<'a> {
    pub fn new(index: &'a PermutationIndex, phi_a: f64, phi_h: f64, values: &[f64]) -> Result<Self> {
        let n = index.n;
        if values.len() != n {
            return Err(Error::invalid(format!("expected {n} values, got {}", values.len())));
        }
        let ma = MallowsModel::new(phi_a, n)?;
        let mh = MallowsModel::new(phi_h, n)?;
        let weights_a = index.inversions.iter().map(|&inv| phi_a.powi(-(inv as i32)) / ma.normalizer()).collect();
        let masks = 1usize << n;
        let mut human = vec![0.0; masks * n];
        for mask in 0..masks - 1 {
            let p = mh.top_choice_pmf(CandidateSet(mask as u32));
            human[mask * n..(mask + 1) * n].copy_from_slice(&p);
        }
        Ok(Self { index, values: values.to_vec(), weights_a, human })
    }

    fn initial(&self) -> Vec<f64> {
        let masks = 1usize << self.index.n;
        let mut st = vec![0.0; self.index.perms() * masks];
        for (s, w) in self.weights_a.iter().enumerate() {
            st[s * masks] = *w;
        }
        st
    }

    /// Expected utility of the next firm playing `strategy`, and the state after.
    fn step(&self, state: &[f64], strategy: Strategy) -> (f64, Vec<f64>) {
        let n = self.index.n;
        let masks = 1usize << n;
        let x = &self.values;
        let mut next = vec![0.0; state.len()];
        let utils: Vec<f64> = next
            .par_chunks_mut(masks)
            .zip(state.par_chunks(masks))
            .enumerate()
            .map(|(s, (out, row))| {
                let mut u = 0.0;
                for (mask, &p) in row.iter().enumerate() {
                    if p == 0.0 || mask == masks - 1 {
                        continue;
                    }
                    match strategy {
                        Strategy::A => {
                            let c = self.index.first_unhired[s * masks + mask] as usize;
                            u += p * x[c];
                            out[mask | 1 << c] += p;
                        }
                        Strategy::H => {
                            let h = &self.human[mask * n..(mask + 1) * n];
                            for (c, &q) in h.iter().enumerate() {
                                if q > 0.0 {
                                    u += p * q * x[c];
                                    out[mask | 1 << c] += p * q;
                                }
                            }
                        }
                    }
                }
                u
            })
            .collect();
        // fixed-order reduction keeps results independent of the thread count
        (utils.iter().sum(), next)
    }

    /// Expected utility of each firm in hiring order.
    pub fn utilities(&self, sequence: &StrategySequence) -> Result<Vec<f64>> {
        if sequence.len() > self.index.n {
            return Err(Error::invalid("more firms than candidates"));
        }
        let mut state = self.initial();
        let mut out = Vec::with_capacity(sequence.len());
        for &s in sequence.choices() {
            let (u, next) = self.step(&state, s);
            out.push(u);
            state = next;
        }
        Ok(out)
    }

    /// Each firm best-responds to the choices before it; ties go to H.
    pub fn greedy(&self, k: usize) -> Result<(StrategySequence, Vec<f64>)> {
        let (seq, utils, _) = self.greedy_with_margins(k)?;
        Ok((seq, utils))
    }

    /// As [`greedy`](Self::greedy), also returning u_A - u_H for each firm.
    pub fn greedy_with_margins(&self, k: usize) -> Result<(StrategySequence, Vec<f64>, Vec<f64>)> {
        if k == 0 || k > self.index.n {
            return Err(Error::invalid(format!("need 1 <= k <= n, got k = {k}")));
        }
        let mut state = self.initial();
        let mut choices = Vec::with_capacity(k);
        let mut utils = Vec::with_capacity(k);
        let mut margins = Vec::with_capacity(k);
        for _ in 0..k {
            let (ua, sa) = self.step(&state, Strategy::A);
            let (uh, sh) = self.step(&state, Strategy::H);
            margins.push(ua - uh);
            if ua > uh + TIE_TOLERANCE {
                choices.push(Strategy::A);
                utils.push(ua);
                state = sa;
            } else {
                choices.push(Strategy::H);
                utils.push(uh);
                state = sh;
            }
        }
        Ok((StrategySequence::new(choices), utils, margins))
    }
}

fn sequential_values(source: &CandidateDistribution) -> Result<Vec<f64>> {
    Ok(source.expected_pool()?.values().to_vec())
}

/// Per-firm expected utilities for a fixed hiring order.
///
/// For a uniform distribution the values are replaced by order-statistic
/// means, which is exact because Mallows rankings ignore values.
pub fn exact_sequential_utilities(
    sequence: &StrategySequence,
    phi_a: f64,
    phi_h: f64,
    source: &CandidateDistribution,
) -> Result<Vec<f64>> {
    let index = PermutationIndex::new(source.len())?;
    SequentialGame::new(&index, phi_a, phi_h, &sequential_values(source)?)?.utilities(sequence)
}

pub fn sequential_optimal_sequence(
    k: usize,
    phi_a: f64,
    phi_h: f64,
    source: &CandidateDistribution,
) -> Result<(StrategySequence, Vec<f64>)> {
    let index = PermutationIndex::new(source.len())?;
    SequentialGame::new(&index, phi_a, phi_h, &sequential_values(source)?)?.greedy(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_utility_table;
    use crate::models::Family;
    use crate::types::CandidatePool;

    #[test]
    fn binary_values() {
        assert_eq!(StrategySequence::parse("AAAHH").unwrap().binary_value(), 28);
        assert_eq!(StrategySequence::parse("AHAHA").unwrap().binary_value(), 21);
        assert_eq!(StrategySequence::parse("HHHHH").unwrap().binary_value(), 0);
        assert!(StrategySequence::parse("AXH").is_err());
        assert_eq!(StrategySequence::parse("ahha").unwrap().to_string(), "AHHA");
    }

    #[test]
    fn two_firm_sequences_match_the_utility_table() {
        let pool = CandidatePool::new(vec![1.0, 0.7, 0.2, -0.5]).unwrap();
        let src = CandidateDistribution::Fixed(pool.clone());
        let (pa, ph) = (2.5, 1.6);
        let t = exact_utility_table(pa - 1.0, ph - 1.0, &Family::Mallows, &pool).unwrap();
        let cases =
            [("AA", t.first_a, t.aa), ("AH", t.first_a, t.ah), ("HA", t.first_h, t.ha), ("HH", t.first_h, t.hh)];
        for (seq, u1, u2) in cases {
            let u = exact_sequential_utilities(&StrategySequence::parse(seq).unwrap(), pa, ph, &src).unwrap();
            assert!((u[0] - u1).abs() < 1e-12 && (u[1] - u2).abs() < 1e-12, "{seq}");
        }
    }

    #[test]
    fn single_firm_is_the_first_choice_mean() {
        let src = CandidateDistribution::uniform(0.0, 1.0, 5).unwrap();
        let m = MallowsModel::new(1.8, 5).unwrap();
        let means = src.expected_pool().unwrap();
        let expect: f64 = (0..5).map(|i| m.first_choice_closed_form(i) * means.value(i)).sum();
        for s in ["A", "H"] {
            let phis = if s == "A" { (1.8, 3.0) } else { (3.0, 1.8) };
            let u = exact_sequential_utilities(&StrategySequence::parse(s).unwrap(), phis.0, phis.1, &src).unwrap();
            assert!((u[0] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_oversized_pools() {
        let src = CandidateDistribution::uniform(0.0, 1.0, 8).unwrap();
        assert!(sequential_optimal_sequence(3, 2.0, 1.5, &src).is_err());
    }
}
