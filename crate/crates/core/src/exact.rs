//! Exact selection probabilities, utility tables and welfare.

use crate::error::{Error, Result};
use crate::models::rum::{discrete_permutation_law, ContinuousRum};
use crate::models::{pl_top_choice, Family, MallowsModel, Noise, RankingModel};
use crate::types::{CandidatePool, CandidateSet, Permutation};

/// Largest pool handled by permutation enumeration.
pub const MAX_ENUMERATION_N: usize = 8;
/// Largest pool handled by the continuous-noise quadrature path.
pub const MAX_QUADRATURE_N: usize = 3;

/// Distribution of the best surviving candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPmf(Vec<f64>);

impl SelectionPmf {
    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, c: usize) -> f64 {
        self.0[c]
    }

    pub fn expected_value(&self, pool: &CandidatePool) -> f64 {
        dot(&self.0, pool.values())
    }
}

fn dot(p: &[f64], x: &[f64]) -> f64 {
    p.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// A model bound to a pool, with an exact route to its selection probabilities.
#[derive(Debug, Clone)]
pub enum ExactLaw {
    Mallows(MallowsModel),
    PlackettLuce { theta: f64, pool: CandidatePool },
    Enumerated { n: usize, law: Vec<(Permutation, f64)> },
    Quadrature(ContinuousRum),
}

impl ExactLaw {
    pub fn new(model: &RankingModel, pool: &CandidatePool) -> Result<Self> {
        let n = pool.len();
        match model.family() {
            Family::Mallows => Ok(Self::Mallows(MallowsModel::new(model.theta() + 1.0, n)?)),
            Family::PlackettLuce => Ok(Self::PlackettLuce { theta: model.theta(), pool: pool.clone() }),
            Family::Rum(Noise::Discrete(d)) => {
                if n > MAX_ENUMERATION_N {
                    return Err(Error::unsupported(format!("exact discrete RUM needs n <= {MAX_ENUMERATION_N}")));
                }
                Ok(Self::Enumerated { n, law: discrete_permutation_law(d, model.theta(), pool)? })
            }
            Family::Rum(noise) => {
                if n > MAX_QUADRATURE_N {
                    return Err(Error::unsupported(format!(
                        "exact {noise} RUM is limited to n <= {MAX_QUADRATURE_N}; use the Monte Carlo engine"
                    )));
                }
                Ok(Self::Quadrature(ContinuousRum::new(noise.clone(), model.theta(), pool)?))
            }
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Mallows(m) => m.n(),
            Self::PlackettLuce { pool, .. } => pool.len(),
            Self::Enumerated { n, .. } => *n,
            Self::Quadrature(q) => q.len(),
        }
    }

    pub fn top_choice(&self, removed: CandidateSet) -> Vec<f64> {
        match self {
            Self::Mallows(m) => m.top_choice_pmf(removed),
            Self::PlackettLuce { theta, pool } => pl_top_choice(*theta, pool, removed),
            Self::Enumerated { n, law } => {
                let mut out = vec![0.0; *n];
                for (pi, p) in law {
                    if let Some(c) = pi.top_excluding(removed) {
                        out[c] += p;
                    }
                }
                out
            }
            Self::Quadrature(q) => q.top_choice(removed),
        }
    }

    /// `m[i][j] = Pr[rank 1 = i, rank 2 = j]`.
    pub fn top_two(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Mallows(m) => m.top_two_pmf(),
            Self::PlackettLuce { theta, pool } => {
                let n = pool.len();
                let first = pl_top_choice(*theta, pool, CandidateSet::EMPTY);
                let mut m = vec![vec![0.0; n]; n];
                for i in 0..n {
                    let rest = pl_top_choice(*theta, pool, CandidateSet::singleton(i));
                    for j in 0..n {
                        m[i][j] = first[i] * rest[j];
                    }
                }
                m
            }
            Self::Enumerated { n, law } => {
                let mut m = vec![vec![0.0; *n]; *n];
                for (pi, p) in law {
                    m[pi.order()[0]][pi.order()[1]] += p;
                }
                m
            }
            Self::Quadrature(q) => q.top_two(),
        }
    }
}

pub fn exact_selection_pmf(model: &RankingModel, pool: &CandidatePool, removed: CandidateSet) -> Result<SelectionPmf> {
    if removed.0 & !CandidateSet::full(pool.len()).0 != 0 || removed.len() >= pool.len() {
        return Err(Error::invalid("removed set must leave at least one candidate of the pool"));
    }
    Ok(SelectionPmf(ExactLaw::new(model, pool)?.top_choice(removed)))
}

/// The six expected utilities of the two-firm game.
///
/// `ah` is the second mover's utility when the first mover used A and the
/// second uses H; the other second-mover entries follow the same pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityTable {
    pub first_a: f64,
    pub first_h: f64,
    pub aa: f64,
    pub ah: f64,
    pub ha: f64,
    pub hh: f64,
    /// Standard errors in the field order above; zero when exact.
    pub stderr: [f64; 6],
}

impl UtilityTable {
    pub fn entries(&self) -> [f64; 6] {
        [self.first_a, self.first_h, self.aa, self.ah, self.ha, self.hh]
    }

    pub fn is_exact(&self) -> bool {
        self.stderr.iter().all(|&s| s == 0.0)
    }
}

/// Second-mover expected utility when the first mover draws from `first`
/// and the second mover ranks with `second`.
fn second_mover(first: &[f64], second: &ExactLaw, x: &[f64]) -> f64 {
    first
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| p * dot(&second.top_choice(CandidateSet::singleton(i)), x))
        .sum()
}

pub fn exact_utility_table(theta_a: f64, theta_h: f64, family: &Family, pool: &CandidatePool) -> Result<UtilityTable> {
    let law_a = ExactLaw::new(&family.at(theta_a)?, pool)?;
    let law_h = ExactLaw::new(&family.at(theta_h)?, pool)?;
    let x = pool.values();
    let fa = law_a.top_choice(CandidateSet::EMPTY);
    let fh = law_h.top_choice(CandidateSet::EMPTY);
    let top_two_a = law_a.top_two();
    let aa = top_two_a.iter().map(|row| dot(row, x)).sum();
    Ok(UtilityTable {
        first_a: dot(&fa, x),
        first_h: dot(&fh, x),
        aa,
        ah: second_mover(&fa, &law_h, x),
        ha: second_mover(&fh, &law_a, x),
        hh: second_mover(&fh, &law_h, x),
        stderr: [0.0; 6],
    })
}

/// |(U_AH - U_AA) - E[(π_1 - π_2) 1{π_1 ≠ σ_1}]| with the right side
/// built from the top-two law of π and the first-choice law of σ.
pub fn identity_check_uah_uaa(theta_a: f64, theta_h: f64, family: &Family, pool: &CandidatePool) -> Result<f64> {
    if theta_a != theta_h {
        return Err(Error::invalid("the identity needs equal accuracies"));
    }
    let table = exact_utility_table(theta_a, theta_h, family, pool)?;
    let law = ExactLaw::new(&family.at(theta_h)?, pool)?;
    let first = law.top_choice(CandidateSet::EMPTY);
    let two = law.top_two();
    let x = pool.values();
    let mut rhs = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                rhs += two[i][j] * (x[i] - x[j]) * (1.0 - first[i]);
            }
        }
    }
    Ok(((table.ah - table.aa) - rhs).abs())
}

/// Strategy pair (first firm, second firm) in the two-firm game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    AA,
    AH,
    HA,
    HH,
}

/// Total expected utility of both firms when hiring order is a fair coin.
pub fn exact_welfare(table: &UtilityTable, profile: Profile) -> f64 {
    match profile {
        Profile::AA => table.first_a + table.aa,
        Profile::HH => table.first_h + table.hh,
        Profile::AH | Profile::HA => 0.5 * (table.first_a + table.ah) + 0.5 * (table.first_h + table.ha),
    }
}
