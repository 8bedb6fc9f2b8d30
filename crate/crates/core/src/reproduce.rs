//! Pinned reproductions of the numeric claims: each target runs a frozen
//! configuration and compares against a stated tolerance.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::estimate::{derive_seed, mc_utility_estimate, McConfig, McUtilityEstimate, DEFAULT_Z_THRESHOLD};
use crate::exact::{exact_utility_table, ExactLaw};
use crate::game::{binary_counter_scan, find_theta_star, kfirm_braess_check, sweep_plane, Engine, EquilibriumLabel};
use crate::models::{DiscreteNoise, Family, Noise};
use crate::output::{Cell, Table};
use crate::sequential::{PermutationIndex, SequentialGame};
use crate::types::{CandidateDistribution, CandidatePool, CandidateSet};

pub const TARGETS: &[&str] = &[
    "figure2",
    "figure3",
    "figure4",
    "counterexample-b1",
    "counterexample-b2",
    "kfirm-braess",
    "four-percent",
    "theta-star",
];

/// Pinned seeds, one per Monte Carlo target.
pub const SEED_FIGURE2: u64 = 20_220_601;
pub const SEED_FOUR_PERCENT: u64 = 4_040_404;

/// One claim compared against a computed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub claim: String,
    pub computed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl Check {
    pub fn new(
        claim: impl Into<String>,
        computed: impl Into<String>,
        tolerance: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self { claim: claim.into(), computed: computed.into(), tolerance: tolerance.into(), pass }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
}

impl Report {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), checks: Vec::new(), table: None }
    }

    fn check(
        &mut self,
        claim: impl Into<String>,
        computed: impl Into<String>,
        tolerance: impl Into<String>,
        pass: bool,
    ) {
        self.checks.push(Check::new(claim, computed, tolerance, pass));
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== {} ==", self.name)?;
        for c in &self.checks {
            writeln!(f, "[{}] {}", if c.pass { "pass" } else { "FAIL" }, c.claim)?;
            writeln!(f, "       computed: {}", c.computed)?;
            writeln!(f, "       tolerance: {}", c.tolerance)?;
        }
        write!(f, "{}: {}", self.name, if self.passed() { "all checks pass" } else { "FAILED" })
    }
}

pub fn reproduce(target: &str) -> Result<Report> {
    match target {
        "figure2" => figure2(),
        "figure3" => figure3(),
        "figure4" => figure4(),
        "counterexample-b1" => counterexample_b1(),
        "counterexample-b2" => counterexample_b2(),
        "kfirm-braess" => kfirm_braess(),
        "four-percent" => four_percent(),
        "theta-star" => theta_star(),
        other => Err(Error::invalid(format!("unknown target {other:?}; available: {}", TARGETS.join(", ")))),
    }
}

fn pool(v: &[f64]) -> CandidatePool {
    CandidatePool::new(v.to_vec()).expect("pinned pool")
}

/// U_AH - U_AA for the three-point noise on (x1, x2, 0), as a polynomial in δ.
pub fn three_point_gap_polynomial(delta: f64, x1: f64, x2: f64) -> f64 {
    let d = delta;
    d * d / 32.0
        * (d.powi(3) * x1 - 4.0 * d * d * x1 + 4.0 * d * x1 + 2.0 * d.powi(3) * x2 - 14.0 * d * d * x2 + 20.0 * d * x2
            - 8.0 * x2)
}

fn counterexample_b1() -> Result<Report> {
    let mut r = Report::new("counterexample-b1");
    let p = pool(&[1.75, 0.5, 0.0]);
    let mut table = Table::new(&["delta", "u_ah_minus_u_aa", "polynomial"]);
    let mut worst_poly: f64 = 0.0;
    for delta in [0.01, 0.05, 0.1, 0.2, 0.3] {
        let fam = Family::Rum(Noise::Discrete(DiscreteNoise::three_point(delta)?));
        let t = exact_utility_table(1.0, 1.0, &fam, &p)?;
        let poly = three_point_gap_polynomial(delta, 1.75, 0.5);
        worst_poly = worst_poly.max((t.ah - t.aa - poly).abs());
        table.push(vec![delta.into(), (t.ah - t.aa).into(), poly.into()]);
        if delta == 0.1 {
            let d = t.ah - t.aa;
            r.check(
                "pool (7/4, 1/2, 0), three-point noise, delta = 0.1: U_AH - U_AA = -7.6164e-4 (paper: about -0.00076)",
                format!("{d:.6e}"),
                "abs error <= 1e-7",
                (d + 7.6164e-4).abs() <= 1e-7,
            );
            r.check("U_AH < U_AA, so the first-position preference fails", format!("{d:.6e}"), "< 0", d < 0.0);
        }
    }
    r.check(
        "exact enumeration matches the closed-form polynomial in delta at delta in {0.01, 0.05, 0.1, 0.2, 0.3}",
        format!("max abs difference {worst_poly:.3e}"),
        "<= 1e-12",
        worst_poly <= 1e-12,
    );
    r.table = Some(table);
    Ok(r)
}

/// Atom weight for the four-point noise of the second counterexample.
pub const B2_DELTA: f64 = 0.05;

fn counterexample_b2() -> Result<Report> {
    let mut r = Report::new("counterexample-b2");
    let p = pool(&[3.0, 2.0, 0.0]);
    let noise = DiscreteNoise::four_point(B2_DELTA)?;
    let fam = Family::Rum(Noise::Discrete(noise));
    let (ta, th) = (1.1, 0.9);
    let t = exact_utility_table(ta, th, &fam, &p)?;
    let d = t.ah - t.hh;
    r.check(
        format!("pool (3, 2, 0), four-point noise delta = {B2_DELTA}, theta_A = 1.1, theta_H = 0.9: U_AH > U_HH"),
        format!("U_AH - U_HH = {d:.6e}"),
        "> 0",
        d > 0.0,
    );
    let fa = ExactLaw::new(&fam.at(ta)?, &p)?.top_choice(CandidateSet::EMPTY);
    let fh = ExactLaw::new(&fam.at(th)?, &p)?.top_choice(CandidateSet::EMPTY);
    r.check(
        "algorithm and human pick the best candidate first with equal probability",
        format!("{:.15} vs {:.15}", fa[0], fh[0]),
        "abs difference <= 1e-15",
        (fa[0] - fh[0]).abs() <= 1e-15,
    );
    r.check(
        "the algorithm picks the second candidate first more often than the human",
        format!("{:.6} vs {:.6}", fa[1], fh[1]),
        "strictly greater",
        fa[1] > fh[1],
    );
    let mut table = Table::new(&["quantity", "value"]);
    for (name, v) in [("u_ah", t.ah), ("u_hh", t.hh), ("u_ah_minus_u_hh", d)] {
        table.push(vec![Cell::text(name), v.into()]);
    }
    r.table = Some(table);
    Ok(r)
}

fn kfirm_braess() -> Result<Report> {
    let mut r = Report::new("kfirm-braess");
    let src = CandidateDistribution::uniform(0.0, 1.0, 4)?;
    let rep = kfirm_braess_check(3, 2.0, 1.75, &src)?;
    r.check(
        "n = 4, k = 3, phi_A = 2, phi_H = 1.75: the algorithm is a dominant strategy",
        format!("dominant = {}", rep.a_dominant),
        "strict at every number of rival A-firms",
        rep.a_dominant,
    );
    r.check(
        "per-firm utility when all firms use the algorithm is about 0.551",
        format!("{:.6}", rep.all_a_utility),
        "0.551 +/- 0.002",
        (rep.all_a_utility - 0.551).abs() <= 0.002,
    );
    r.check(
        "per-firm utility when all firms use humans is about 0.552",
        format!("{:.6}", rep.all_h_utility),
        "0.552 +/- 0.002",
        (rep.all_h_utility - 0.552).abs() <= 0.002,
    );
    r.check(
        "all-human utility is strictly larger (welfare loss at the dominant-strategy equilibrium)",
        format!("{:.3e}", rep.all_h_utility - rep.all_a_utility),
        "> 0",
        rep.braess,
    );
    let mut table = Table::new(&["strategy", "rival_a_count", "payoff"]);
    for (si, name) in ["A", "H"].iter().enumerate() {
        for (m, v) in rep.payoff[si].iter().enumerate() {
            table.push(vec![Cell::text(name), Cell::text(m), (*v).into()]);
        }
    }
    r.table = Some(table);
    Ok(r)
}

fn theta_star() -> Result<Report> {
    let mut r = Report::new("theta-star");
    let src = CandidateDistribution::Fixed(pool(&[1.0, 0.5, 0.0]));
    let mut table =
        Table::new(&["phi_h", "theta_star", "gap_at_star", "theta_prime", "f", "g", "h", "welfare_aa", "welfare_hh"]);
    for phi_h in [1.5, 2.0, 3.0] {
        let ts = find_theta_star(phi_h - 1.0, &Family::Mallows, &src, 1e-6)?;
        r.check(
            format!("phi_H = {phi_h}: bisection finds theta_A* with f = g"),
            format!("theta_A* = {:.9}, |f - g| = {:.2e}", ts.theta_star, ts.gap_at_star.abs()),
            "< 1e-6",
            ts.gap_at_star.abs() < 1e-6,
        );
        r.check(
            format!("phi_H = {phi_h}: just above theta_A*, A is strictly dominant and W_AA < W_HH"),
            format!(
                "theta_A' = {:.9}, dom margins ({:.2e}, {:.2e}), W_HH - W_AA = {:.3e}",
                ts.theta_prime,
                ts.dominance.dom1_margin,
                ts.dominance.dom2_margin,
                ts.welfare_hh - ts.welfare_aa
            ),
            "all > 0",
            ts.dominance.a_strictly_dominant() && ts.welfare_aa < ts.welfare_hh && ts.h > ts.f && ts.f > ts.g,
        );
        table.push(vec![
            phi_h.into(),
            ts.theta_star.into(),
            ts.gap_at_star.into(),
            ts.theta_prime.into(),
            ts.f.into(),
            ts.g.into(),
            ts.h.into(),
            ts.welfare_aa.into(),
            ts.welfare_hh.into(),
        ]);
    }
    r.table = Some(table);
    Ok(r)
}

pub const FIGURE2_THETAS: &[f64] = &[0.1, 0.3, 1.0, 3.0];
pub const FIGURE2_SIZES: &[usize] = &[3, 5, 15];
pub const FIGURE2_SAMPLES: u64 = 1_000_000;

fn figure2() -> Result<Report> {
    let mut r = Report::new("figure2");
    let mut table = Table::new(&["noise", "n", "theta", "u_ah_minus_u_aa", "stderr", "z"]);
    let noises = [Noise::Gaussian, Noise::Laplacian, Noise::Gumbel];
    let mut laplace15 = Vec::new();
    let mut gaussian = Vec::new();
    for (ni, noise) in noises.iter().enumerate() {
        for (si, &n) in FIGURE2_SIZES.iter().enumerate() {
            let src = CandidateDistribution::unit_variance_uniform(n)?;
            for (ti, &theta) in FIGURE2_THETAS.iter().enumerate() {
                let cfg = McConfig::new(FIGURE2_SAMPLES, derive_seed(SEED_FIGURE2, (ni * 16 + si) as u64, ti as u64))?;
                let est = mc_utility_estimate(theta, theta, &Family::Rum(noise.clone()), &src, cfg)?;
                let d = est.ah_minus_aa;
                table.push(vec![
                    Cell::text(noise.name()),
                    Cell::text(n),
                    theta.into(),
                    d.mean.into(),
                    d.stderr.into(),
                    d.z.into(),
                ]);
                match (noise, n) {
                    (Noise::Laplacian, 15) => laplace15.push((theta, d)),
                    (Noise::Gaussian, _) => gaussian.push((n, theta, d)),
                    _ => {}
                }
            }
        }
    }
    let neg = laplace15.iter().filter(|(_, d)| d.z < -DEFAULT_Z_THRESHOLD).map(|(t, _)| *t).collect::<Vec<_>>();
    r.check(
        "Laplacian noise, n = 15, unit-variance uniform values: U_AH - U_AA < 0 at some scanned theta",
        format!(
            "z by theta: {}; negative at theta in {neg:?}",
            laplace15.iter().map(|(t, d)| format!("{t}: {:.1}", d.z)).collect::<Vec<_>>().join(", ")
        ),
        "z < -3 at one or more theta",
        !neg.is_empty(),
    );
    let bad: Vec<String> = gaussian
        .iter()
        .filter(|(_, _, d)| !(d.z > DEFAULT_Z_THRESHOLD))
        .map(|(n, t, d)| format!("n={n} theta={t} z={:.1}", d.z))
        .collect();
    r.check(
        "Gaussian noise, n in {3, 5, 15}: U_AH - U_AA > 0 at every scanned theta",
        if bad.is_empty() {
            format!("min z = {:.1}", gaussian.iter().map(|g| g.2.z).fold(f64::INFINITY, f64::min))
        } else {
            format!("not significant: {}", bad.join("; "))
        },
        "z > 3 at every theta",
        bad.is_empty(),
    );
    r.table = Some(table);
    Ok(r)
}

pub const FIGURE3_AXIS: (f64, f64, usize) = (0.1, 0.1, 30);

fn figure3() -> Result<Report> {
    let mut r = Report::new("figure3");
    let (start, step, count) = FIGURE3_AXIS;
    let axis: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
    let src = CandidateDistribution::uniform(0.0, 1.0, 3)?;
    let cells = sweep_plane(&axis, &axis, &Family::Mallows, &src, Engine::Exact);
    let mut table = sweep_table();
    let mut hh_below = true;
    let mut ordered = true;
    let mut braess_outside_aa = 0usize;
    let mut counts = [0usize; 3];
    let mut braess = 0usize;
    for row in cells.chunks(axis.len()) {
        let mut stage = 0;
        for c in row {
            let o = c.result.as_ref().map_err(|e| Error::Numerical(e.clone()))?;
            let s = match o.label {
                EquilibriumLabel::HH => 0,
                EquilibriumLabel::Asymmetric { .. } => 1,
                EquilibriumLabel::AA => 2,
            };
            counts[s] += 1;
            if c.theta_a <= c.theta_h + 1e-12 && s != 0 {
                hh_below = false;
            }
            if s < stage {
                ordered = false;
            }
            stage = s;
            if o.braess {
                braess += 1;
                if s != 2 {
                    braess_outside_aa += 1;
                }
            }
            push_sweep_row(&mut table, c.theta_h, c.theta_a, &c.result);
        }
    }
    r.check(
        "Mallows, n = 3: HH wherever the algorithm is no more accurate than humans",
        if hh_below { "HH on the whole half-plane" } else { "other labels found" },
        "exact",
        hh_below,
    );
    r.check(
        "AA, asymmetric/mixed, and HH regions all appear",
        format!("HH {} cells, AH/mixed {} cells, AA {} cells", counts[0], counts[1], counts[2]),
        "each > 0",
        counts.iter().all(|&c| c > 0),
    );
    r.check(
        "along increasing theta_A the labels go HH, then AH/mixed, then AA",
        if ordered { "ordered on every row" } else { "order violated" },
        "every row",
        ordered,
    );
    r.check(
        "a part of the AA region has lower welfare than HH (shaded region)",
        format!("{braess} Braess cells, {braess_outside_aa} outside AA"),
        "> 0 cells, all inside AA",
        braess > 0 && braess_outside_aa == 0,
    );
    r.table = Some(table);
    Ok(r)
}

pub fn sweep_table() -> Table {
    Table::new(&[
        "theta_h",
        "theta_a",
        "label",
        "p_mixed",
        "welfare_aa",
        "welfare_hh",
        "braess",
        "sequence",
        "binary_value",
        "error",
    ])
}

pub fn push_sweep_row(
    table: &mut Table,
    theta_h: f64,
    theta_a: f64,
    result: &std::result::Result<crate::game::EquilibriumOutcome, String>,
) {
    match result {
        Ok(o) => table.push(vec![
            theta_h.into(),
            theta_a.into(),
            Cell::text(o.label.name()),
            o.label.mixed_p().map_or(Cell::text(""), Cell::F),
            o.welfare_aa.into(),
            o.welfare_hh.into(),
            Cell::text(o.braess),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
        ]),
        Err(e) => table.push(vec![
            theta_h.into(),
            theta_a.into(),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
            Cell::text(""),
            Cell::text(e),
        ]),
    }
}

pub const FIGURE4_FIRMS: usize = 5;
pub const FIGURE4_CANDIDATES: usize = 6;
/// φ_H lines of the coarse sweep: geometric from 1.05 to 60.
pub const FIGURE4_LINES: usize = 24;
/// φ_A = φ_H · exp(0.01 j) for j = 0..=150, then boundaries bisected.
pub const FIGURE4_RATIO_STEPS: usize = 150;
/// Vertical lines scanned at step 0.01 in φ_A: (φ_H, φ_A upper end).
pub const FIGURE4_SCANS: &[(f64, f64)] = &[(2.0, 6.0), (5.0, 12.0), (10.0, 20.0)];

/// Distinct labels found on the coarse sweep, with boundary refinement.
pub fn figure4_labels(src: &CandidateDistribution, table: Option<&mut Table>) -> Result<BTreeSet<String>> {
    let index = PermutationIndex::new(src.len())?;
    let values = src.expected_pool()?.values().to_vec();
    let label = |pa: f64, ph: f64| -> Result<String> {
        Ok(SequentialGame::new(&index, pa, ph, &values)?.greedy(FIGURE4_FIRMS)?.0.to_string())
    };
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for l in 0..FIGURE4_LINES {
        let ph = (1.05f64.ln() + (60f64.ln() - 1.05f64.ln()) * l as f64 / (FIGURE4_LINES - 1) as f64).exp();
        let grid: Vec<f64> = (0..=FIGURE4_RATIO_STEPS).map(|j| ph * (0.01 * j as f64).exp()).collect();
        let labels = grid.iter().map(|&pa| label(pa, ph)).collect::<Result<Vec<_>>>()?;
        for (pa, lab) in grid.iter().zip(&labels) {
            rows.push((ph, *pa, lab.clone()));
        }
        seen.extend(labels.iter().cloned());
        for j in 0..grid.len() - 1 {
            if labels[j] == labels[j + 1] {
                continue;
            }
            let mut stack = vec![(grid[j], grid[j + 1], labels[j].clone(), labels[j + 1].clone())];
            while let Some((lo, hi, la, lb)) = stack.pop() {
                if hi - lo < 1e-9 * ph {
                    continue;
                }
                let m = 0.5 * (lo + hi);
                let lm = label(m, ph)?;
                seen.insert(lm.clone());
                if lm != la {
                    stack.push((lo, m, la.clone(), lm.clone()));
                }
                if lm != lb {
                    stack.push((m, hi, lm, lb.clone()));
                }
            }
        }
    }
    if let Some(t) = table {
        for (ph, pa, lab) in rows {
            let v = crate::sequential::StrategySequence::parse(&lab)?.binary_value();
            t.push(vec![ph.into(), pa.into(), Cell::text(&lab), Cell::text(v)]);
        }
    }
    Ok(seen)
}

fn figure4() -> Result<Report> {
    let mut r = Report::new("figure4");
    let src = CandidateDistribution::uniform(0.0, 1.0, FIGURE4_CANDIDATES)?;
    let mut table = Table::new(&["phi_h", "phi_a", "sequence", "binary_value"]);
    let seen = figure4_labels(&src, Some(&mut table))?;
    let expected: BTreeSet<String> = (0..16u32)
        .map(|b| std::iter::once('A').chain((0..4).rev().map(|i| if b >> i & 1 == 1 { 'A' } else { 'H' })).collect())
        .collect();
    let missing: Vec<&String> = expected.difference(&seen).collect();
    r.check(
        "k = 5, n = 6, uniform values: all 16 A-prefixed sequences appear as optimal labels",
        format!(
            "{} of 16 found; missing {:?}",
            expected.intersection(&seen).count(),
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>()
        ),
        "16 of 16",
        missing.is_empty(),
    );
    r.check(
        "the all-H label appears on the diagonal phi_A = phi_H",
        format!("labels seen: {}", seen.len()),
        "HHHHH present",
        seen.contains("HHHHH"),
    );
    for &(ph, top) in FIGURE4_SCANS {
        let steps = ((top - ph) / 0.01).round() as usize;
        let grid: Vec<f64> = (0..=steps).map(|i| ph + 0.01 * i as f64).collect();
        let scan = binary_counter_scan(ph, &grid, FIGURE4_FIRMS, &src)?;
        let distinct: Vec<String> = scan.distinct().iter().map(|s| s.to_string()).collect();
        r.check(
            format!("binary-counter property along phi_H = {ph}, phi_A in [{ph}, {top}] step 0.01"),
            format!(
                "{} labels in order {}{}",
                distinct.len(),
                distinct.join(" < "),
                scan.first_violation.map_or(String::new(), |i| format!("; drop at phi_A = {}", scan.points[i].0))
            ),
            "binary value never decreases",
            scan.monotone,
        );
    }
    r.table = Some(table);
    Ok(r)
}

pub const FOUR_PERCENT_HALFWIDTH: f64 = 1.0;
pub const FOUR_PERCENT_COARSE_SAMPLES: u64 = 100_000;
pub const FOUR_PERCENT_SAMPLES: u64 = 1_000_000;
pub const FOUR_PERCENT_BAND: (f64, f64) = (0.03, 0.05);

/// A point of the four-percent search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfarePoint {
    pub theta_h: f64,
    pub theta_a: f64,
    pub relative_loss: f64,
    pub relative_loss_stderr: f64,
    pub estimate: McUtilityEstimate,
}

fn welfare_point(theta_h: f64, theta_a: f64, src: &CandidateDistribution, cfg: McConfig) -> Result<WelfarePoint> {
    let e = mc_utility_estimate(theta_a, theta_h, &Family::Rum(Noise::Gaussian), src, cfg)?;
    let w_hh = e.welfare_hh.mean;
    Ok(WelfarePoint {
        theta_h,
        theta_a,
        relative_loss: e.welfare_gap.mean / w_hh,
        relative_loss_stderr: e.welfare_gap.stderr / w_hh.abs(),
        estimate: e,
    })
}

fn in_band(p: &WelfarePoint) -> bool {
    let e = &p.estimate;
    e.dom1.z > DEFAULT_Z_THRESHOLD
        && e.welfare_aa.mean >= 0.0
        && (FOUR_PERCENT_BAND.0..=FOUR_PERCENT_BAND.1).contains(&p.relative_loss)
}

/// Coarse grid over (θ_H, θ_A/θ_H), then a finer local grid around the best
/// coarse point, then an independent confirmation run.
pub fn four_percent_search(seed: u64) -> Result<(WelfarePoint, WelfarePoint)> {
    let src = CandidateDistribution::centered(FOUR_PERCENT_HALFWIDTH, 3)?;
    let target = 0.5 * (FOUR_PERCENT_BAND.0 + FOUR_PERCENT_BAND.1);
    let mut best: Option<WelfarePoint> = None;
    for (i, th) in [0.5, 0.75, 1.0, 1.25, 1.5, 2.0].into_iter().enumerate() {
        for j in 1..=15u64 {
            let ta = th * (1.0 + 0.02 * j as f64);
            let p = welfare_point(
                th,
                ta,
                &src,
                McConfig::new(FOUR_PERCENT_COARSE_SAMPLES, derive_seed(seed, i as u64, j))?,
            )?;
            let e = &p.estimate;
            if e.dom1.z > 2.0 && e.welfare_aa.mean >= 0.0 {
                let closer =
                    best.as_ref().is_none_or(|b| (p.relative_loss - target).abs() < (b.relative_loss - target).abs());
                if closer {
                    best = Some(p);
                }
            }
        }
    }
    let coarse = best.ok_or_else(|| Error::NotFound("no coarse point with AA an equilibrium".into()))?;
    let mut found = None;
    'refine: for k in 0..=8u64 {
        let ta = coarse.theta_a * (1.0 + 0.005 * (k as f64 - 4.0));
        if ta <= coarse.theta_h {
            continue;
        }
        let p =
            welfare_point(coarse.theta_h, ta, &src, McConfig::new(FOUR_PERCENT_SAMPLES, derive_seed(seed, 100, k))?)?;
        if in_band(&p) {
            let better = found
                .as_ref()
                .is_none_or(|f: &WelfarePoint| (p.relative_loss - target).abs() < (f.relative_loss - target).abs());
            if better {
                found = Some(p);
            }
            if (p.relative_loss - target).abs() < 0.002 {
                break 'refine;
            }
        }
    }
    let point = found.ok_or_else(|| Error::NotFound("no refined point inside the band".into()))?;
    let confirm = welfare_point(
        point.theta_h,
        point.theta_a,
        &src,
        McConfig::new(FOUR_PERCENT_SAMPLES, derive_seed(seed, 200, 0))?,
    )?;
    Ok((point, confirm))
}

fn four_percent() -> Result<Report> {
    let mut r = Report::new("four-percent");
    match four_percent_search(SEED_FOUR_PERCENT) {
        Ok((p, c)) => {
            for (what, q) in [("search", &p), ("independent confirmation run", &c)] {
                r.check(
                    format!(
                        "{what}: three candidates uniform on [-1, 1], Gaussian noise, theta_H = {:.4}, theta_A = {:.4}: AA is an equilibrium, W_AA >= 0, and W_AA is 3-5% below W_HH",
                        q.theta_h, q.theta_a
                    ),
                    format!(
                        "loss {:.4} +/- {:.4}, W_AA = {:.4}, dom1 z = {:.1}",
                        q.relative_loss, q.relative_loss_stderr, q.estimate.welfare_aa.mean, q.estimate.dom1.z
                    ),
                    "loss in [0.03, 0.05], W_AA >= 0, dom1 z > 3",
                    in_band(q),
                );
            }
            let mut table = Table::new(&[
                "run",
                "theta_h",
                "theta_a",
                "relative_loss",
                "stderr",
                "welfare_aa",
                "welfare_hh",
                "dom1_z",
                "dom2_z",
            ]);
            for (name, q) in [("search", &p), ("confirm", &c)] {
                table.push(vec![
                    Cell::text(name),
                    q.theta_h.into(),
                    q.theta_a.into(),
                    q.relative_loss.into(),
                    q.relative_loss_stderr.into(),
                    q.estimate.welfare_aa.mean.into(),
                    q.estimate.welfare_hh.mean.into(),
                    q.estimate.dom1.z.into(),
                    q.estimate.dom2.z.into(),
                ]);
            }
            r.table = Some(table);
        }
        Err(e) => r.check("bounded search finds a point in the 3-5% band", e.to_string(), "a point", false),
    }
    Ok(r)
}
