use std::collections::HashMap;

use monoculture::estimate::{mc_utility_estimate, McConfig};
use monoculture::exact::{exact_utility_table, UtilityTable};
use monoculture::models::{pl_pmf, DiscreteNoise, Family, MallowsModel, Noise};
use monoculture::types::{all_permutations, CandidateDistribution, CandidatePool, CandidateSet, Permutation};

type Law = Vec<(Vec<usize>, f64)>;

fn pool(v: &[f64]) -> CandidatePool {
    CandidatePool::new(v.to_vec()).unwrap()
}

/// Ranking law by brute force over the whole permutation list.
fn law_from_pmf(n: usize, pmf: impl Fn(&Permutation) -> f64) -> Law {
    all_permutations(n).iter().map(|p| (p.order().to_vec(), pmf(p))).collect()
}

/// Mallows weights φ^{-inversions}, normalized by their own sum.
fn mallows_law(phi: f64, n: usize) -> Law {
    let raw = law_from_pmf(n, |p| phi.powi(-(p.inversions() as i32)));
    let z: f64 = raw.iter().map(|(_, w)| w).sum();
    raw.into_iter().map(|(o, w)| (o, w / z)).collect()
}

/// Sorts noisy scores for every joint atom draw.
fn discrete_law(noise: &DiscreteNoise, theta: f64, x: &[f64]) -> Law {
    let atoms = noise.atoms();
    let n = x.len();
    let mut law: HashMap<Vec<usize>, f64> = HashMap::new();
    for code in 0..atoms.len().pow(n as u32) {
        let mut c = code;
        let mut p = 1.0;
        let mut keys = Vec::with_capacity(n);
        for (i, xi) in x.iter().enumerate() {
            let (v, w) = atoms[c % atoms.len()];
            c /= atoms.len();
            p *= w;
            keys.push((xi + v / theta, i));
        }
        keys.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        assert!(keys.windows(2).all(|k| k[0].0 != k[1].0), "tie in oracle");
        *law.entry(keys.iter().map(|k| k.1).collect()).or_insert(0.0) += p;
    }
    law.into_iter().collect()
}

fn first_free(order: &[usize], taken: usize) -> usize {
    *order.iter().find(|&&c| c != taken).unwrap()
}

/// All six table entries by summing over pairs of rankings.
fn pair_table(a: &Law, h: &Law, x: &[f64]) -> [f64; 6] {
    let first = |l: &Law| l.iter().map(|(o, p)| p * x[o[0]]).sum::<f64>();
    let second = |lf: &Law, ls: &Law| {
        let mut s = 0.0;
        for (of, pf) in lf {
            for (os, ps) in ls {
                s += pf * ps * x[first_free(os, of[0])];
            }
        }
        s
    };
    let aa = a.iter().map(|(o, p)| p * x[o[1]]).sum::<f64>();
    [first(a), first(h), aa, second(a, h), second(h, a), second(h, h)]
}

fn assert_close(t: &UtilityTable, want: [f64; 6], tol: f64) {
    for (k, (g, w)) in t.entries().iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "entry {k}: {g} vs {w}");
    }
}

#[test]
fn mallows_table_matches_pair_enumeration() {
    for values in [&[1.0, 0.5, 0.0][..], &[1.0, 0.9, 0.3, 0.0], &[2.0, 1.5, 1.2, 0.4, 0.1]] {
        let p = pool(values);
        for (ta, th) in [(1.0, 0.5), (0.3, 2.0), (1.5, 1.5)] {
            let t = exact_utility_table(ta, th, &Family::Mallows, &p).unwrap();
            let want = pair_table(&mallows_law(ta + 1.0, p.len()), &mallows_law(th + 1.0, p.len()), values);
            assert_close(&t, want, 1e-12);
        }
    }
}

#[test]
fn plackett_luce_table_matches_pair_enumeration() {
    let p = pool(&[1.0, 0.7, 0.2, -0.4]);
    for (ta, th) in [(2.0, 1.0), (0.5, 3.0)] {
        let t = exact_utility_table(ta, th, &Family::PlackettLuce, &p).unwrap();
        let want =
            pair_table(&law_from_pmf(4, |q| pl_pmf(ta, &p, q)), &law_from_pmf(4, |q| pl_pmf(th, &p, q)), p.values());
        assert_close(&t, want, 1e-12);
    }
}

#[test]
fn discrete_table_matches_pair_enumeration() {
    let cases = [
        (DiscreteNoise::three_point(0.1).unwrap(), [1.75, 0.5, 0.0], 1.0, 1.0),
        (DiscreteNoise::four_point(0.05).unwrap(), [3.0, 2.0, 0.0], 1.1, 0.9),
    ];
    for (noise, values, ta, th) in cases {
        let fam = Family::Rum(Noise::Discrete(noise.clone()));
        let t = exact_utility_table(ta, th, &fam, &pool(&values)).unwrap();
        let want = pair_table(&discrete_law(&noise, ta, &values), &discrete_law(&noise, th, &values), &values);
        assert_close(&t, want, 1e-13);
    }
}

#[test]
fn mallows_subset_first_choice_differs_from_projection_for_gapped_survivors() {
    let m = MallowsModel::new(2.0, 3).unwrap();
    let p = m.top_choice_pmf(CandidateSet::singleton(1));
    assert!((p[0] - 16.0 / 21.0).abs() < 1e-14, "{p:?}");
    assert!((p[2] - 5.0 / 21.0).abs() < 1e-14, "{p:?}");
}

fn within(mc: f64, se: f64, exact: f64, k: f64) -> bool {
    (mc - exact).abs() <= k * se.max(1e-12)
}

#[test]
fn monte_carlo_agrees_with_exact_tables() {
    let values = [1.0, 0.6, 0.35, 0.0];
    let src = CandidateDistribution::Fixed(pool(&values));
    let cfg = McConfig::new(200_000, 7).unwrap();
    for (fam, ta, th) in [(Family::Mallows, 1.2, 0.6), (Family::PlackettLuce, 3.0, 1.5)] {
        let exact = exact_utility_table(ta, th, &fam, &pool(&values)).unwrap();
        let est = mc_utility_estimate(ta, th, &fam, &src, cfg).unwrap();
        for k in 0..6 {
            assert!(
                within(est.table.entries()[k], est.table.stderr[k], exact.entries()[k], 5.0),
                "{fam} entry {k}: {} +/- {} vs {}",
                est.table.entries()[k],
                est.table.stderr[k],
                exact.entries()[k]
            );
        }
    }
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let values = [1.0, 0.4, 0.0];
    let src = CandidateDistribution::Fixed(pool(&values));
    let cfg = McConfig::new(400_000, 11).unwrap();
    for noise in [Noise::Gaussian, Noise::Laplacian, Noise::Gumbel] {
        let fam = Family::Rum(noise);
        let exact = exact_utility_table(1.5, 0.8, &fam, &pool(&values)).unwrap();
        let est = mc_utility_estimate(1.5, 0.8, &fam, &src, cfg).unwrap();
        for k in 0..6 {
            assert!(within(est.table.entries()[k], est.table.stderr[k], exact.entries()[k], 5.0), "{fam} entry {k}");
        }
    }
}

#[test]
fn paired_differences_beat_independent_errors() {
    let src = CandidateDistribution::uniform(0.0, 1.0, 5).unwrap();
    let cfg = McConfig::new(100_000, 3).unwrap();
    let est = mc_utility_estimate(1.0, 0.5, &Family::Rum(Noise::Gaussian), &src, cfg).unwrap();
    let unpaired = (est.table.stderr[3].powi(2) + est.table.stderr[2].powi(2)).sqrt();
    assert!(est.ah_minus_aa.stderr < unpaired, "{} vs {unpaired}", est.ah_minus_aa.stderr);
    let d = est.table.ah - est.table.aa;
    assert!((est.ah_minus_aa.mean - d).abs() < 1e-12);
}

#[test]
fn monte_carlo_is_reproducible_across_thread_counts() {
    let src = CandidateDistribution::uniform(0.0, 1.0, 6).unwrap();
    let cfg = McConfig::new(50_000, 99).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_utility_estimate(0.8, 0.4, &Family::Rum(Noise::Laplacian), &src, cfg).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.table.entries().map(f64::to_bits), four.table.entries().map(f64::to_bits));
    assert_eq!(one.dom1.mean.to_bits(), four.dom1.mean.to_bits());
}
