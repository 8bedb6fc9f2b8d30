//! Invariant suites with measured margins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimate::{derive_seed, mc_utility_estimate, mc_utility_table, McConfig, DEFAULT_Z_THRESHOLD};
use crate::exact::exact_utility_table;
use crate::game::{check_dominance, kfirm_braess_check, sweep_plane, Engine};
use crate::models::{conditional_order_probability, pl_pmf, well_ordered_check, Family, MallowsModel, Noise};
use crate::reproduce::{push_sweep_row, sweep_table, Report};
use crate::sequential::{PermutationIndex, SequentialGame, Strategy};
use crate::types::{all_permutations, CandidateDistribution, CandidatePool, CandidateSet, Permutation};

pub const SUITES: &[&str] = &["mallows-lemmas", "conditions", "appendix-c", "plackett-luce", "sequential", "engines"];

pub const SEED_CONDITIONS: u64 = 31_337;
pub const SEED_APPENDIX_C: u64 = 271_828;
pub const SEED_ENGINES: u64 = 8_675_309;
pub const SEED_PLACKETT_LUCE: u64 = 55_555;

pub fn verify(suite: &str) -> Result<Report> {
    match suite {
        "mallows-lemmas" => mallows_lemmas(),
        "conditions" => conditions(),
        "appendix-c" => appendix_c(),
        "plackett-luce" => plackett_luce(),
        "sequential" => sequential(),
        "engines" => engines(),
        other => Err(Error::invalid(format!("unknown suite {other:?}; available: {}", SUITES.join(", ")))),
    }
}

fn report(name: &str) -> Report {
    Report { name: name.to_string(), checks: Vec::new(), table: None }
}

fn add(
    r: &mut Report,
    claim: impl Into<String>,
    computed: impl Into<String>,
    tolerance: impl Into<String>,
    pass: bool,
) {
    r.checks.push(crate::reproduce::Check::new(claim, computed, tolerance, pass));
}

pub const LEMMA_PHIS: &[f64] = &[1.1, 2.0, 5.0];
pub const LEMMA_MAX_N: usize = 6;

/// Law of the survivors' relative order, as a pmf over permutations of 0..m.
fn induced_law(m: &MallowsModel, perms: &[Permutation], removed: CandidateSet) -> Vec<f64> {
    let n = m.n();
    let survivors: Vec<usize> = (0..n).filter(|&c| !removed.contains(c)).collect();
    let k = survivors.len();
    let sub = all_permutations(k);
    let mut law = vec![0.0; sub.len()];
    for p in perms {
        let order: Vec<usize> = p
            .order()
            .iter()
            .filter(|c| !removed.contains(**c))
            .map(|c| survivors.iter().position(|s| s == c).expect("survivor"))
            .collect();
        let idx = sub.iter().position(|q| q.order() == order.as_slice()).expect("sub-permutation");
        law[idx] += m.pmf(p);
    }
    law
}

fn mallows_lemmas() -> Result<Report> {
    let mut r = report("mallows-lemmas");
    let (mut p1, mut abba, mut norm, mut dp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut contiguous_tv = 0.0f64;
    let mut gapped_tv = f64::INFINITY;
    for n in 2..=LEMMA_MAX_N {
        let perms = all_permutations(n);
        for &phi in LEMMA_PHIS {
            let m = MallowsModel::new(phi, n)?;
            let z: f64 = perms.iter().map(|p| phi.powi(-(p.inversions() as i32))).sum();
            norm = norm.max((z - m.normalizer()).abs() / z);
            let mut first = vec![0.0; n];
            let mut two = vec![vec![0.0; n]; n];
            for p in &perms {
                let w = m.pmf(p);
                first[p.order()[0]] += w;
                two[p.order()[0]][p.order()[1]] += w;
            }
            for (i, f) in first.iter().enumerate() {
                p1 = p1.max((f - m.first_choice_closed_form(i)).abs());
            }
            for i in 0..n {
                for j in i + 1..n {
                    abba = abba.max((two[i][j] / two[j][i] - phi).abs());
                }
            }
            for mask in 0..(1u32 << n) - 1 {
                let removed = CandidateSet(mask);
                let mut brute = vec![0.0; n];
                for p in &perms {
                    brute[p.top_excluding(removed).expect("survivor")] += m.pmf(p);
                }
                for (a, b) in brute.iter().zip(m.top_choice_pmf(removed)) {
                    dp = dp.max((a - b).abs());
                }
                if removed.len() > 2 || n - removed.len() < 2 || removed.is_empty() {
                    continue;
                }
                let law = induced_law(&m, &perms, removed);
                let k = n - removed.len();
                let target = MallowsModel::new(phi, k)?;
                let tv: f64 =
                    0.5 * all_permutations(k).iter().zip(&law).map(|(q, l)| (target.pmf(q) - l).abs()).sum::<f64>();
                let survivors: Vec<usize> = (0..n).filter(|&c| !removed.contains(c)).collect();
                if survivors.windows(2).all(|w| w[1] == w[0] + 1) {
                    contiguous_tv = contiguous_tv.max(tv);
                } else {
                    gapped_tv = gapped_tv.min(tv);
                }
            }
        }
    }
    add(&mut r, "first-choice closed form (1 - 1/phi) / (phi^(i-1) (1 - phi^-n)) matches enumeration, n <= 6, phi in {1.1, 2, 5}", format!("max abs error {p1:.2e}"), "<= 1e-12", p1 <= 1e-12);
    add(
        &mut r,
        "top-two swap ratio Pr[i then j] / Pr[j then i] = phi for every i < j",
        format!("max abs error {abba:.2e}"),
        "<= 1e-10",
        abba <= 1e-10,
    );
    add(
        &mut r,
        "normalizer product form matches the enumerated sum",
        format!("max relative error {norm:.2e}"),
        "<= 1e-10",
        norm <= 1e-10,
    );
    add(
        &mut r,
        "best-survivor pmf (insertion recursion) matches enumeration for every removed set",
        format!("max abs error {dp:.2e}"),
        "<= 1e-12",
        dp <= 1e-12,
    );
    add(
        &mut r,
        "restricting to a contiguous block of survivors (|S| <= 2) is Mallows with the same phi",
        format!("max total variation {contiguous_tv:.2e}"),
        "<= 1e-10",
        contiguous_tv <= 1e-10,
    );
    add(
        &mut r,
        "restricting to gapped survivors is not Mallows with the same phi (so the recursion above is used instead)",
        format!("min total variation {gapped_tv:.2e}"),
        "> 1e-6",
        gapped_tv > 1e-6,
    );
    Ok(r)
}

pub const CONDITION_THETAS: &[f64] = &[0.5, 1.0, 2.0];
pub const CONDITION_SAMPLES: u64 = 1_000_000;

/// Three pools of three values drawn uniformly from [0, 1] with a pinned seed.
pub fn random_pools(seed: u64, count: usize, n: usize) -> Vec<CandidatePool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            if let Ok(p) = CandidatePool::new(v) {
                break p;
            }
        })
        .collect()
}

/// Gaussian and Laplacian RUMs with three candidates satisfy both
/// conditions; Mallows satisfies them for every pool.
pub fn conditions_rum(r: &mut Report) -> Result<()> {
    let pools = random_pools(SEED_CONDITIONS, 3, 3);
    let mut table =
        crate::output::Table::new(&["noise", "pool", "theta_h", "theta_a", "quantity", "mean", "stderr", "z"]);
    for (ni, noise) in [Noise::Gaussian, Noise::Laplacian].into_iter().enumerate() {
        let fam = Family::Rum(noise.clone());
        let mut worst_first = f64::INFINITY;
        let mut worst_weaker = f64::INFINITY;
        for (pi, pool) in pools.iter().enumerate() {
            let src = CandidateDistribution::Fixed(pool.clone());
            for (ti, &theta) in CONDITION_THETAS.iter().enumerate() {
                let cfg =
                    McConfig::new(CONDITION_SAMPLES, derive_seed(SEED_CONDITIONS, (ni * 8 + pi) as u64, ti as u64))?;
                let eq = mc_utility_estimate(theta, theta, &fam, &src, cfg)?;
                let cfg = McConfig::new(
                    CONDITION_SAMPLES,
                    derive_seed(SEED_CONDITIONS, (ni * 8 + pi) as u64, 100 + ti as u64),
                )?;
                let strong = mc_utility_estimate(1.5 * theta, theta, &fam, &src, cfg)?;
                worst_first = worst_first.min(eq.ah_minus_aa.z);
                worst_weaker = worst_weaker.min(strong.hh_minus_ah.z);
                let label = pool.values().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ");
                for (ta, q, e) in
                    [(theta, "u_ah_minus_u_aa", eq.ah_minus_aa), (1.5 * theta, "u_hh_minus_u_ah", strong.hh_minus_ah)]
                {
                    table.push(vec![
                        crate::output::Cell::text(noise.name()),
                        crate::output::Cell::text(&label),
                        theta.into(),
                        ta.into(),
                        crate::output::Cell::text(q),
                        e.mean.into(),
                        e.stderr.into(),
                        e.z.into(),
                    ]);
                }
            }
        }
        add(
            r,
            format!(
                "{} RUM, n = 3, 3 random pools, theta in {{0.5, 1, 2}}: U_AH - U_AA > 0 at equal accuracy",
                noise.name()
            ),
            format!("min z = {worst_first:.1}"),
            "z > 3 everywhere",
            worst_first > DEFAULT_Z_THRESHOLD,
        );
        add(
            r,
            format!("{} RUM, n = 3, theta_A = 1.5 theta_H: U_HH - U_AH > 0", noise.name()),
            format!("min z = {worst_weaker:.1}"),
            "z > 3 everywhere",
            worst_weaker > DEFAULT_Z_THRESHOLD,
        );
    }
    r.table = Some(table);
    Ok(())
}

fn conditions() -> Result<Report> {
    let mut r = report("conditions");
    let mut worst_first = f64::INFINITY;
    let mut worst_weaker = f64::INFINITY;
    let mut worst_mono = f64::INFINITY;
    for n in 3..=6 {
        let pool = CandidateDistribution::uniform(0.0, 1.0, n)?.expected_pool()?;
        for &phi in LEMMA_PHIS {
            let th = phi - 1.0;
            let t = exact_utility_table(th, th, &Family::Mallows, &pool)?;
            worst_first = worst_first.min(t.ah - t.aa);
            let t = exact_utility_table(1.5 * th, th, &Family::Mallows, &pool)?;
            worst_weaker = worst_weaker.min(t.hh - t.ah);
            let a = exact_utility_table(th, th, &Family::Mallows, &pool)?.first_a;
            let b = exact_utility_table(1.5 * th, th, &Family::Mallows, &pool)?.first_a;
            worst_mono = worst_mono.min(b - a);
        }
    }
    add(
        &mut r,
        "Mallows, n in 3..6, phi in {1.1, 2, 5}: U_AH - U_AA > 0 (first-position preference)",
        format!("min margin {worst_first:.3e}"),
        "> 0",
        worst_first > 0.0,
    );
    add(
        &mut r,
        "Mallows: U_HH - U_AH > 0 when the algorithm is more accurate (weaker-competition preference)",
        format!("min margin {worst_weaker:.3e}"),
        "> 0",
        worst_weaker > 0.0,
    );
    add(
        &mut r,
        "Mallows: expected first pick increases with accuracy",
        format!("min increase {worst_mono:.3e}"),
        "> 0",
        worst_mono > 0.0,
    );
    conditions_rum(&mut r)?;
    Ok(r)
}

pub const WELL_ORDERED_SAMPLES: usize = 10_000;

fn appendix_c() -> Result<Report> {
    let mut r = report("appendix-c");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_APPENDIX_C);
    for noise in [Noise::Gaussian, Noise::Laplacian] {
        let mut fails = 0;
        let mut example = None;
        for _ in 0..WELL_ORDERED_SAMPLES {
            let (a, b, c, d) = loop {
                let mut v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                if v[0] < v[1] {
                    v.swap(0, 1);
                }
                if v[2] < v[3] {
                    v.swap(2, 3);
                }
                if v[0] > v[1] && v[2] > v[3] {
                    break (v[0], v[1], v[2], v[3]);
                }
            };
            if !well_ordered_check(&noise, a, b, c, d)? {
                fails += 1;
                example.get_or_insert((a, b, c, d));
            }
        }
        add(
            &mut r,
            format!("{} noise is well-ordered: f(a-c) f(b-d) > f(a-d) f(b-c) for a > b, c > d", noise.name()),
            match example {
                None => format!("{WELL_ORDERED_SAMPLES} of {WELL_ORDERED_SAMPLES} random quadruples pass"),
                Some((a, b, c, d)) => format!(
                    "{fails} of {WELL_ORDERED_SAMPLES} fail with equality, e.g. (a, b, c, d) = ({a:.3}, {b:.3}, {c:.3}, {d:.3})"
                ),
            },
            "strict inequality on every quadruple",
            fails == 0,
        );
    }
    for noise in [Noise::Gaussian, Noise::Laplacian] {
        let mut worst = f64::INFINITY;
        for (xi, xj) in [(1.0, 0.0), (0.3, 0.2), (2.0, -1.0)] {
            for theta in [0.5, 1.0, 2.0] {
                let mut prev = None;
                let steps = ((xi + 3.0 - (xj - 2.0)) / 0.01f64).round() as usize;
                for s in 0..=steps {
                    let a = xj - 2.0 + 0.01 * s as f64;
                    let p = conditional_order_probability(&noise, xi, xj, theta, a)?;
                    if let Some(q) = prev {
                        worst = worst.min(p - q);
                    }
                    prev = Some(p);
                }
            }
        }
        add(
            &mut r,
            format!("{}: Pr[X_i > X_j | both <= a] is nondecreasing in a", noise.name()),
            format!("min finite difference {worst:.3e}"),
            ">= -1e-9",
            worst >= -1e-9,
        );
    }
    let mut exact_half = true;
    for (xi, xj) in [(1.0, 0.0), (0.3, 0.2), (2.0, -1.0)] {
        for theta in [0.5, 1.0, 2.0] {
            for k in 0..50 {
                let a = xj - 0.1 * k as f64;
                exact_half &= conditional_order_probability(&Noise::Laplacian, xi, xj, theta, a)? == 0.5;
            }
        }
    }
    add(
        &mut r,
        "Laplace: for a <= x_j the conditional order probability is exactly 1/2",
        if exact_half { "exactly 0.5 everywhere" } else { "deviation found" },
        "exact",
        exact_half,
    );
    Ok(r)
}

pub const PL_THETAS: &[f64] = &[0.5, 1.0, 2.0];

/// U_AH and U_AA by summing over all pairs of permutations.
pub fn enumerated_ah_aa(
    pmf_a: &dyn Fn(&Permutation) -> f64,
    pmf_h: &dyn Fn(&Permutation) -> f64,
    pool: &CandidatePool,
) -> (f64, f64) {
    let perms = all_permutations(pool.len());
    let x = pool.values();
    let wa: Vec<f64> = perms.iter().map(pmf_a).collect();
    let wh: Vec<f64> = perms.iter().map(pmf_h).collect();
    let mut aa = 0.0;
    let mut ah = 0.0;
    for (s, &ps) in perms.iter().zip(&wa) {
        aa += ps * x[s.order()[1]];
        let taken = CandidateSet::singleton(s.top());
        for (p, &pp) in perms.iter().zip(&wh) {
            ah += ps * pp * x[p.top_excluding(taken).expect("survivor")];
        }
    }
    (ah, aa)
}

fn plackett_luce() -> Result<Report> {
    let mut r = report("plackett-luce");
    let mut worst = 0.0f64;
    let mut worst_fast = 0.0f64;
    for n in 2..=5 {
        for pool in random_pools(derive_seed(SEED_PLACKETT_LUCE, n as u64, 0), 3, n) {
            for &theta in PL_THETAS {
                let f = |p: &Permutation| pl_pmf(theta, &pool, p);
                let (ah, aa) = enumerated_ah_aa(&f, &f, &pool);
                worst = worst.max((ah - aa).abs());
                let t = exact_utility_table(theta, theta, &Family::PlackettLuce, &pool)?;
                worst_fast = worst_fast.max((t.ah - ah).abs().max((t.aa - aa).abs()));
            }
        }
    }
    add(
        &mut r,
        "Plackett-Luce, n in 2..5, theta in {0.5, 1, 2}: U_AH = U_AA by full enumeration",
        format!("max |U_AH - U_AA| = {worst:.2e}"),
        "< 1e-12",
        worst < 1e-12,
    );
    add(
        &mut r,
        "closed-form utility table agrees with full enumeration",
        format!("max abs difference {worst_fast:.2e}"),
        "< 1e-12",
        worst_fast < 1e-12,
    );
    Ok(r)
}

pub const SEQUENTIAL_PHIS: &[f64] = &[1.1, 1.5, 2.0, 3.0, 5.0];

fn sequential() -> Result<Report> {
    let mut r = report("sequential");
    let mut all_h = true;
    let mut strict = f64::NEG_INFINITY;
    let mut ties = 0.0f64;
    for n in [4usize, 6] {
        let index = PermutationIndex::new(n)?;
        let values = CandidateDistribution::uniform(0.0, 1.0, n)?.expected_pool()?.values().to_vec();
        for &ph in SEQUENTIAL_PHIS {
            for &pa in SEQUENTIAL_PHIS.iter().filter(|&&pa| pa <= ph) {
                let (seq, _, margins) = SequentialGame::new(&index, pa, ph, &values)?.greedy_with_margins(n - 1)?;
                all_h &= seq.choices().iter().all(|&s| s == Strategy::H);
                for m in margins {
                    if pa < ph {
                        strict = strict.max(m);
                    } else {
                        ties = ties.max(m.abs());
                    }
                }
            }
        }
    }
    add(
        &mut r,
        "phi_H >= phi_A: the sequential optimum is all-H (n in {4, 6}, k = n - 1)",
        if all_h { "all-H everywhere" } else { "an A was chosen" },
        "every grid point",
        all_h,
    );
    add(
        &mut r,
        "phi_H > phi_A: every firm strictly prefers H, so all-H is the unique optimum",
        format!("max u_A - u_H = {strict:.3e}"),
        "< 0",
        strict < 0.0,
    );
    add(
        &mut r,
        "phi_H = phi_A: every firm is indifferent",
        format!("max |u_A - u_H| = {ties:.2e}"),
        "<= 1e-12",
        ties <= 1e-12,
    );
    let mut agree = true;
    let mut checked = 0;
    for n in [3usize, 4, 5] {
        let src = CandidateDistribution::uniform(0.0, 1.0, n)?;
        let pool = src.expected_pool()?;
        for &ph in SEQUENTIAL_PHIS {
            for &pa in SEQUENTIAL_PHIS {
                let d = check_dominance(&exact_utility_table(pa - 1.0, ph - 1.0, &Family::Mallows, &pool)?);
                if d.is_boundary() {
                    continue;
                }
                let k = kfirm_braess_check(2, pa, ph, &src)?;
                let h_dom = (0..2).all(|m| k.payoff[1][m] > k.payoff[0][m]);
                agree &= k.a_dominant == d.a_strictly_dominant() && h_dom == d.h_strictly_dominant();
                checked += 1;
            }
        }
    }
    add(
        &mut r,
        "two firms under random hiring order: dominance from the k-firm engine matches the two-firm margins",
        format!("{checked} strict instances, {}", if agree { "all agree" } else { "disagreement" }),
        "all agree",
        agree,
    );
    Ok(r)
}

pub const ENGINE_INSTANCES: usize = 20;
pub const ENGINE_SAMPLES: u64 = 1_000_000;

/// Renders a small Monte Carlo sweep inside a pool of `threads` workers.
pub fn sweep_csv_with_threads(threads: usize) -> Result<String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        let grid = [0.5, 1.0, 2.0];
        let src = CandidateDistribution::uniform(0.0, 1.0, 4)?;
        let cells = sweep_plane(
            &grid,
            &grid,
            &Family::Mallows,
            &src,
            Engine::MonteCarlo { samples: 20_000, seed: SEED_ENGINES },
        );
        let mut t = sweep_table();
        for c in &cells {
            push_sweep_row(&mut t, c.theta_h, c.theta_a, &c.result);
        }
        let mut csv = t.to_csv()?;
        let est = mc_utility_table(
            1.0,
            0.5,
            &Family::Rum(Noise::Gaussian),
            &CandidateDistribution::unit_variance_uniform(5)?,
            McConfig::new(50_000, SEED_ENGINES)?,
        )?;
        for v in est.entries().iter().chain(&est.stderr) {
            csv.push_str(&crate::output::fmt_float(*v));
            csv.push('\n');
        }
        Ok(csv)
    })
}

fn engines() -> Result<Report> {
    let mut r = report("engines");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED_ENGINES);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for i in 0..ENGINE_INSTANCES {
        let n = rng.random_range(2..=5usize);
        let pa: f64 = rng.random_range(1.2..4.0);
        let ph: f64 = rng.random_range(1.2..4.0);
        let pool = random_pools(rng.random(), 1, n).pop().expect("one pool");
        let exact = exact_utility_table(pa - 1.0, ph - 1.0, &Family::Mallows, &pool)?;
        let mc = mc_utility_table(
            pa - 1.0,
            ph - 1.0,
            &Family::Mallows,
            &CandidateDistribution::Fixed(pool),
            McConfig::new(ENGINE_SAMPLES, derive_seed(SEED_ENGINES, i as u64, 0))?,
        )?;
        for (k, ((e, m), s)) in exact.entries().iter().zip(mc.entries()).zip(mc.stderr).enumerate() {
            let dev = if s > 0.0 {
                (e - m).abs() / s
            } else if (e - m).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            if dev > worst {
                worst = dev;
                worst_at = format!("instance {i} (n = {n}, phi_A = {pa:.3}, phi_H = {ph:.3}) entry {k}");
            }
        }
    }
    add(
        &mut r,
        format!("Monte Carlo tables (N = 10^6) agree with exact tables on {ENGINE_INSTANCES} random Mallows instances"),
        format!("max |MC - exact| / stderr = {worst:.2} at {worst_at}"),
        "<= 4",
        worst <= 4.0,
    );
    let one = sweep_csv_with_threads(1)?;
    let four = sweep_csv_with_threads(4)?;
    add(
        &mut r,
        "same seed gives byte-identical CSV with 1 and 4 worker threads",
        format!("{} bytes, {}", one.len(), if one == four { "identical" } else { "different" }),
        "identical",
        one == four,
    );
    Ok(r)
}
