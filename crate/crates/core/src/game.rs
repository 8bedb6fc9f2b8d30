//! Equilibria of the hiring game.
//!
//! Two firms hire in a uniformly random order, so each firm's payoff for
//! strategy s against a rival playing r is ½ U_first(s) + ½ U_second(r, s).

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{derive_seed, mc_utility_estimate, McConfig, McUtilityEstimate};
use crate::exact::{exact_utility_table, exact_welfare, Profile, UtilityTable};
use crate::models::Family;
use crate::sequential::{PermutationIndex, SequentialGame, Strategy, StrategySequence};
use crate::types::CandidateDistribution;

/// Comparisons closer than this are reported as ties.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Payoffs of the symmetric one-shot game induced by random hiring order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix {
    /// payoff[own][rival] with index 0 = A, 1 = H
    pub payoff: [[f64; 2]; 2],
}

impl PayoffMatrix {
    pub fn from_table(t: &UtilityTable) -> Self {
        Self {
            payoff: [
                [0.5 * t.first_a + 0.5 * t.aa, 0.5 * t.first_a + 0.5 * t.ha],
                [0.5 * t.first_h + 0.5 * t.ah, 0.5 * t.first_h + 0.5 * t.hh],
            ],
        }
    }

    pub fn get(&self, own: Strategy, rival: Strategy) -> f64 {
        let i = |s: Strategy| if s == Strategy::A { 0 } else { 1 };
        self.payoff[i(own)][i(rival)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumLabel {
    HH,
    AA,
    /// One firm on each side; `mixed_p` is the symmetric mixed equilibrium's
    /// probability of playing A.
    Asymmetric {
        mixed_p: f64,
    },
}

impl EquilibriumLabel {
    pub fn name(&self) -> &'static str {
        match self {
            EquilibriumLabel::HH => "HH",
            EquilibriumLabel::AA => "AA",
            EquilibriumLabel::Asymmetric { .. } => "AH",
        }
    }

    pub fn mixed_p(&self) -> Option<f64> {
        match self {
            EquilibriumLabel::Asymmetric { mixed_p } => Some(*mixed_p),
            _ => None,
        }
    }
}

impl fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dominance {
    /// U_A + U_AA - (U_H + U_AH): A beats H against an A rival.
    pub dom1_margin: f64,
    /// U_A + U_HA - (U_H + U_HH): A beats H against an H rival.
    pub dom2_margin: f64,
}

impl Dominance {
    pub fn dom1(&self) -> bool {
        self.dom1_margin > BOUNDARY_TOLERANCE
    }

    pub fn dom2(&self) -> bool {
        self.dom2_margin > BOUNDARY_TOLERANCE
    }

    pub fn a_strictly_dominant(&self) -> bool {
        self.dom1() && self.dom2()
    }

    pub fn h_strictly_dominant(&self) -> bool {
        self.dom1_margin < -BOUNDARY_TOLERANCE && self.dom2_margin < -BOUNDARY_TOLERANCE
    }

    pub fn is_boundary(&self) -> bool {
        self.dom1_margin.abs() <= BOUNDARY_TOLERANCE || self.dom2_margin.abs() <= BOUNDARY_TOLERANCE
    }
}

pub fn check_dominance(t: &UtilityTable) -> Dominance {
    Dominance { dom1_margin: t.first_a + t.aa - (t.first_h + t.ah), dom2_margin: t.first_a + t.ha - (t.first_h + t.hh) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOutcome {
    pub label: EquilibriumLabel,
    pub welfare_aa: f64,
    pub welfare_hh: f64,
    pub braess: bool,
    /// Some best-response comparison is a tie within tolerance.
    pub boundary: bool,
    pub dominance: Dominance,
}

/// Symmetric pure equilibria from the best responses; if both AA and HH are
/// stable, the one with the higher common payoff is reported.
pub fn classify_equilibrium(t: &UtilityTable) -> EquilibriumOutcome {
    let d = check_dominance(t);
    let pm = PayoffMatrix::from_table(t);
    // A-A stable iff A is a best response to A, i.e. dom1 holds weakly
    let aa_stable = d.dom1_margin >= -BOUNDARY_TOLERANCE;
    let hh_stable = d.dom2_margin <= BOUNDARY_TOLERANCE;
    let label = match (aa_stable, hh_stable) {
        (true, false) => EquilibriumLabel::AA,
        (false, true) => EquilibriumLabel::HH,
        (true, true) => {
            if pm.get(Strategy::A, Strategy::A) > pm.get(Strategy::H, Strategy::H) + BOUNDARY_TOLERANCE {
                EquilibriumLabel::AA
            } else {
                EquilibriumLabel::HH
            }
        }
        (false, false) => {
            // p·(A|A - H|A) + (1-p)·(A|H - H|H) = 0
            let gain_vs_a = d.dom1_margin;
            let gain_vs_h = d.dom2_margin;
            EquilibriumLabel::Asymmetric { mixed_p: gain_vs_h / (gain_vs_h - gain_vs_a) }
        }
    };
    let welfare_aa = exact_welfare(t, Profile::AA);
    let welfare_hh = exact_welfare(t, Profile::HH);
    EquilibriumOutcome {
        label,
        welfare_aa,
        welfare_hh,
        braess: d.a_strictly_dominant() && welfare_aa < welfare_hh,
        boundary: d.is_boundary(),
        dominance: d,
    }
}

/// Classification from a Monte Carlo table: comparisons need |z| > threshold.
///
/// Returns `None` for the label when a best-response comparison is not
/// resolved; the Braess flag is only set from resolved comparisons.
pub fn classify_estimate(e: &McUtilityEstimate, z_threshold: f64) -> (Option<EquilibriumOutcome>, bool) {
    let resolved = e.dom1.z.abs() > z_threshold && e.dom2.z.abs() > z_threshold;
    let outcome = classify_equilibrium(&e.table);
    let braess = resolved && e.dom1.z > z_threshold && e.dom2.z > z_threshold && e.welfare_gap.z > z_threshold;
    (resolved.then_some(EquilibriumOutcome { braess, ..outcome }), braess)
}

/// Where the algorithm becomes a strictly dominant strategy, and a strict
/// witness of the welfare loss just beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaStar {
    pub theta_star: f64,
    /// f - g at θ*
    pub gap_at_star: f64,
    pub theta_prime: f64,
    /// f, g, h at θ'
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub welfare_aa: f64,
    pub welfare_hh: f64,
    pub dominance: Dominance,
}

/// Bisection on f(θ_A) - g(θ_A) with f = U_A + U_AA and g = U_H + U_AH.
pub fn find_theta_star(theta_h: f64, family: &Family, source: &CandidateDistribution, tol: f64) -> Result<ThetaStar> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let pool = match (family, source) {
        (Family::Mallows, _) => source.expected_pool()?,
        (_, CandidateDistribution::Fixed(p)) => p.clone(),
        _ => return Err(Error::unsupported("exact root finding needs a fixed pool for value-dependent families")),
    };
    let table = |ta: f64| exact_utility_table(ta, theta_h, family, &pool);
    let gap = |ta: f64| -> Result<f64> {
        let t = table(ta)?;
        Ok(t.first_a + t.aa - t.first_h - t.ah)
    };
    let mut lo = theta_h;
    let g_lo = gap(lo)?;
    if !(g_lo < -BOUNDARY_TOLERANCE) {
        return Err(Error::Bracket { what: "f - g (not negative at equal accuracy)".into(), lo, hi: lo });
    }
    let mut hi = 64.0 * theta_h;
    while gap(hi)? <= 0.0 {
        if hi >= 1024.0 * theta_h {
            return Err(Error::Bracket { what: "f - g".into(), lo: theta_h, hi });
        }
        lo = hi;
        hi *= 2.0;
    }
    let mut star = hi;
    let mut g_star = gap(hi)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = gap(mid)?;
        if gm > 0.0 {
            hi = mid;
            star = mid;
            g_star = gm;
        } else {
            lo = mid;
        }
        if g_star.abs() < tol && hi - lo < tol * hi.max(1.0) {
            break;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    if g_star.abs() >= tol {
        return Err(Error::Numerical(format!("bisection stalled with |f - g| = {g_star:e}")));
    }
    for m in 1..=52 {
        let tp = star * (1.0 + 2f64.powi(-m));
        let t = table(tp)?;
        let d = check_dominance(&t);
        let (f, g, h) = (t.first_a + t.aa, t.first_h + t.ah, t.first_h + t.hh);
        if f > g && f < h && d.dom1_margin > 0.0 && d.dom2_margin > 0.0 {
            return Ok(ThetaStar {
                theta_star: star,
                gap_at_star: g_star,
                theta_prime: tp,
                f,
                g,
                h,
                welfare_aa: exact_welfare(&t, Profile::AA),
                welfare_hh: exact_welfare(&t, Profile::HH),
                dominance: d,
            });
        }
    }
    Err(Error::NotFound(format!("no welfare-losing dominant point found above theta* = {star}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// One accuracy pair of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub theta_h: f64,
    pub theta_a: f64,
    pub result: std::result::Result<EquilibriumOutcome, String>,
}

/// Classifies every (θ_H, θ_A) pair; rows follow θ_H, columns θ_A.
pub fn sweep_plane(
    theta_h_grid: &[f64],
    theta_a_grid: &[f64],
    family: &Family,
    source: &CandidateDistribution,
    engine: Engine,
) -> Vec<SweepCell> {
    let cells: Vec<(usize, usize)> =
        (0..theta_h_grid.len()).flat_map(|i| (0..theta_a_grid.len()).map(move |j| (i, j))).collect();
    let exact_pool = match (family, source) {
        (Family::Mallows, _) => source.expected_pool().ok(),
        (_, CandidateDistribution::Fixed(p)) => Some(p.clone()),
        _ => None,
    };
    cells
        .par_iter()
        .map(|&(i, j)| {
            let (th, ta) = (theta_h_grid[i], theta_a_grid[j]);
            let result = match engine {
                Engine::Exact => match &exact_pool {
                    Some(pool) => exact_utility_table(ta, th, family, pool).map(|t| classify_equilibrium(&t)),
                    None => Err(Error::unsupported("exact engine needs a fixed pool for this family")),
                }
                .map_err(|e| e.to_string()),
                Engine::MonteCarlo { samples, seed } => McConfig::new(samples, derive_seed(seed, i as u64, j as u64))
                    .and_then(|cfg| mc_utility_estimate(ta, th, family, source, cfg))
                    .map_err(|e| e.to_string())
                    .and_then(|e| {
                        classify_estimate(&e, crate::estimate::DEFAULT_Z_THRESHOLD)
                            .0
                            .ok_or_else(|| "inconclusive at z threshold".to_string())
                    }),
            };
            SweepCell { theta_h: th, theta_a: ta, result }
        })
        .collect()
}

/// Result of walking φ_A upward at fixed φ_H.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub points: Vec<(f64, StrategySequence)>,
    pub monotone: bool,
    /// Index of the first point whose binary value drops.
    pub first_violation: Option<usize>,
}

impl ScanReport {
    /// Distinct sequences in order of appearance.
    pub fn distinct(&self) -> Vec<StrategySequence> {
        let mut out: Vec<StrategySequence> = Vec::new();
        for (_, s) in &self.points {
            if out.last() != Some(s) {
                out.push(s.clone());
            }
        }
        out
    }
}

pub fn binary_counter_scan(
    phi_h: f64,
    phi_a_grid: &[f64],
    k: usize,
    source: &CandidateDistribution,
) -> Result<ScanReport> {
    if phi_a_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("scan grid must be strictly increasing"));
    }
    let index = PermutationIndex::new(source.len())?;
    let values = source.expected_pool()?.values().to_vec();
    let mut points = Vec::with_capacity(phi_a_grid.len());
    for &pa in phi_a_grid {
        let (seq, _) = SequentialGame::new(&index, pa, phi_h, &values)?.greedy(k)?;
        points.push((pa, seq));
    }
    let first_violation = points.windows(2).position(|w| w[1].1.binary_value() < w[0].1.binary_value()).map(|i| i + 1);
    Ok(ScanReport { monotone: first_violation.is_none(), first_violation, points })
}

/// Simultaneous k-firm game under random hiring order.
#[derive(Debug, Clone, PartialEq)]
pub struct KFirmReport {
    pub k: usize,
    /// Expected utility of a firm playing A (index 0) or H (index 1) when
    /// `m` of the other k-1 firms play A: `payoff[s][m]`.
    pub payoff: [Vec<f64>; 2],
    pub all_a_equilibrium: bool,
    pub a_dominant: bool,
    /// Per-firm utility when everyone uses the algorithm.
    pub all_a_utility: f64,
    pub all_h_utility: f64,
    /// Hiring-position breakdown for all-A and all-H.
    pub all_a_by_position: Vec<f64>,
    pub all_h_by_position: Vec<f64>,
    pub braess: bool,
}

pub fn kfirm_braess_check(k: usize, phi_a: f64, phi_h: f64, source: &CandidateDistribution) -> Result<KFirmReport> {
    let n = source.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    if k > 20 {
        return Err(Error::invalid("too many firms"));
    }
    let index = PermutationIndex::new(n)?;
    let game = SequentialGame::new(&index, phi_a, phi_h, source.expected_pool()?.values())?;
    // per-position utilities of every hiring-order sequence
    let seqs: Vec<StrategySequence> = (0..1u32 << k)
        .map(|bits| {
            StrategySequence::new(
                (0..k).map(|p| if bits >> (k - 1 - p) & 1 == 1 { Strategy::A } else { Strategy::H }).collect(),
            )
        })
        .collect();
    let utils: Vec<Vec<f64>> = seqs.iter().map(|s| game.utilities(s)).collect::<Result<_>>()?;
    // random order: own position uniform, the m A-rivals uniformly placed among the rest
    let mut payoff = [vec![0.0; k], vec![0.0; k]];
    let mut counts = [vec![0usize; k], vec![0usize; k]];
    for (s, u) in seqs.iter().zip(&utils) {
        let total_a = s.choices().iter().filter(|&&c| c == Strategy::A).count();
        for (p, &own) in s.choices().iter().enumerate() {
            let si = usize::from(own == Strategy::H);
            let m = total_a - usize::from(own == Strategy::A);
            payoff[si][m] += u[p];
            counts[si][m] += 1;
        }
    }
    for si in 0..2 {
        for m in 0..k {
            payoff[si][m] /= counts[si][m] as f64;
        }
    }
    let all_a_equilibrium = payoff[0][k - 1] > payoff[1][k - 1] + BOUNDARY_TOLERANCE;
    let a_dominant = (0..k).all(|m| payoff[0][m] > payoff[1][m] + BOUNDARY_TOLERANCE);
    let all_a_by_position = utils.last().expect("all-A sequence").clone();
    let all_h_by_position = utils[0].clone();
    let all_a_utility = payoff[0][k - 1];
    let all_h_utility = payoff[1][0];
    Ok(KFirmReport {
        k,
        braess: a_dominant && all_a_utility < all_h_utility,
        payoff,
        all_a_equilibrium,
        a_dominant,
        all_a_utility,
        all_h_utility,
        all_a_by_position,
        all_h_by_position,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::CandidatePool;

    fn table(first_a: f64, first_h: f64, aa: f64, ah: f64, ha: f64, hh: f64) -> UtilityTable {
        UtilityTable { first_a, first_h, aa, ah, ha, hh, stderr: [0.0; 6] }
    }

    #[test]
    fn payoff_indexing() {
        let pm = PayoffMatrix::from_table(&table(1.0, 0.8, 0.3, 0.5, 0.6, 0.4));
        assert!((pm.get(Strategy::A, Strategy::H) - 0.8).abs() < 1e-15);
        assert!((pm.get(Strategy::H, Strategy::A) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn mixed_probability_solves_indifference() {
        // A|A < H|A and A|H > H|H
        let t = table(1.0, 0.9, 0.3, 0.5, 0.6, 0.4);
        let out = classify_equilibrium(&t);
        let p = out.label.mixed_p().expect("asymmetric");
        assert!(p > 0.0 && p < 1.0);
        let pm = PayoffMatrix::from_table(&t);
        use Strategy::{A, H};
        let ua = p * pm.get(A, A) + (1.0 - p) * pm.get(A, H);
        let uh = p * pm.get(H, A) + (1.0 - p) * pm.get(H, H);
        assert!((ua - uh).abs() < 1e-14);
    }

    #[test]
    fn equal_models_are_boundary() {
        let pool = CandidatePool::new(vec![1.0, 0.5, 0.0]).unwrap();
        let t = exact_utility_table(1.0, 1.0, &Family::Mallows, &pool).unwrap();
        assert!((t.first_a - t.first_h).abs() < 1e-15 && (t.ah - t.ha).abs() < 1e-15);
        let d = check_dominance(&t);
        assert!(d.dom2_margin.abs() < 1e-12);
    }

    #[test]
    fn plackett_luce_has_no_bracket() {
        let src = CandidateDistribution::Fixed(CandidatePool::new(vec![1.0, 0.5, 0.0]).unwrap());
        let r = find_theta_star(1.0, &Family::PlackettLuce, &src, 1e-6);
        assert!(matches!(r, Err(Error::Bracket { .. })), "{r:?}");
    }

    #[test]
    fn scan_single_point() {
        let src = CandidateDistribution::uniform(0.0, 1.0, 4).unwrap();
        let r = binary_counter_scan(2.0, &[2.5], 3, &src).unwrap();
        assert!(r.monotone && r.points.len() == 1);
    }
}
