//! Text formats accepted on the command line and in config files.
//!
//! - grid: `lo:hi:step×lo:hi:step` (θ_H axis first; `x` also separates)
//! - pool: `v1,v2,…` strictly decreasing
//! - dist: `uniform:lo:hi:n`, `centered:halfwidth:n`, `unit:n`, `fixed:v1,v2,…`
//! - noise: `gaussian`, `laplacian`, `gumbel`, `three-point:δ`, `four-point:δ`,
//!   `discrete:v@p,v@p,…`
//! - config file: `key = value` lines, `#` comments

use crate::error::{Error, Result};
use crate::models::{DiscreteNoise, Family, Noise};
use crate::types::{CandidateDistribution, CandidatePool};

/// Largest number of points a single axis may expand to.
pub const MAX_AXIS_POINTS: usize = 100_000;

fn num(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::parse(format!("{what}: {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(format!("{what}: {s:?} is not finite")));
    }
    Ok(v)
}

fn count(s: &str, what: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::parse(format!("{what}: {s:?} is not a count")))
}

/// An inclusive arithmetic range `lo, lo+step, …, ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let axis = match parts.as_slice() {
            [v] => {
                let v = num(v, "axis")?;
                Axis { lo: v, hi: v, step: 1.0 }
            }
            [lo, hi, step] => Axis { lo: num(lo, "axis lo")?, hi: num(hi, "axis hi")?, step: num(step, "axis step")? },
            _ => return Err(Error::parse(format!("axis {s:?} must be lo:hi:step or a single value"))),
        };
        if !(axis.lo > 0.0) {
            return Err(Error::parse(format!("axis {s:?} must be positive")));
        }
        if !(axis.step > 0.0) || axis.hi < axis.lo {
            return Err(Error::parse(format!("axis {s:?} needs step > 0 and lo <= hi")));
        }
        if (axis.hi - axis.lo) / axis.step >= MAX_AXIS_POINTS as f64 {
            return Err(Error::parse(format!("axis {s:?} has too many points")));
        }
        Ok(axis)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// A rectangular (θ_H, θ_A) lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub theta_h: Axis,
    pub theta_a: Axis,
}

pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(['×', 'x', 'X']).collect();
    match parts.as_slice() {
        [h, a] => Ok(Grid { theta_h: Axis::parse(h)?, theta_a: Axis::parse(a)? }),
        _ => Err(Error::parse(format!("grid {s:?} must look like lo:hi:step×lo:hi:step"))),
    }
}

pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| num(v, "value")).collect()
}

pub fn parse_pool(s: &str) -> Result<CandidatePool> {
    CandidatePool::new(parse_values(s)?)
}

pub fn parse_dist(s: &str) -> Result<CandidateDistribution> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| Error::parse(format!("dist {s:?} needs kind:params")))?;
    let args: Vec<&str> = rest.split(':').collect();
    match (kind.trim(), args.as_slice()) {
        ("uniform", [lo, hi, n]) => CandidateDistribution::uniform(num(lo, "lo")?, num(hi, "hi")?, count(n, "n")?),
        ("centered", [w, n]) => CandidateDistribution::centered(num(w, "halfwidth")?, count(n, "n")?),
        ("unit", [n]) => CandidateDistribution::unit_variance_uniform(count(n, "n")?),
        ("fixed", [values]) => Ok(CandidateDistribution::Fixed(parse_pool(values)?)),
        _ => Err(Error::parse(format!("unknown dist {s:?}"))),
    }
}

pub fn parse_noise(s: &str) -> Result<Noise> {
    let s = s.trim();
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (s, None),
    };
    match (kind, rest) {
        ("gaussian" | "normal", None) => Ok(Noise::Gaussian),
        ("laplacian" | "laplace", None) => Ok(Noise::Laplacian),
        ("gumbel", None) => Ok(Noise::Gumbel),
        ("three-point", Some(d)) => Ok(Noise::Discrete(DiscreteNoise::three_point(num(d, "delta")?)?)),
        ("four-point", Some(d)) => Ok(Noise::Discrete(DiscreteNoise::four_point(num(d, "delta")?)?)),
        ("discrete", Some(atoms)) => {
            let atoms = atoms
                .split(',')
                .map(|a| {
                    let (v, p) =
                        a.split_once('@').ok_or_else(|| Error::parse(format!("atom {a:?} must be value@prob")))?;
                    Ok((num(v, "atom value")?, num(p, "atom probability")?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Noise::Discrete(DiscreteNoise::new(atoms)?))
        }
        _ => Err(Error::parse(format!("unknown noise {s:?}"))),
    }
}

/// `mallows`, `pl` / `plackett-luce`, or `rum` (which needs a noise kind).
pub fn parse_family(s: &str, noise: Option<&Noise>) -> Result<Family> {
    match s.trim() {
        "mallows" => Ok(Family::Mallows),
        "pl" | "plackett-luce" => Ok(Family::PlackettLuce),
        "rum" => Ok(Family::Rum(noise.cloned().unwrap_or(Noise::Gaussian))),
        other => Err(Error::parse(format!("unknown family {other:?}"))),
    }
}

/// Parses `key = value` lines; later duplicates are rejected.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::parse(format!("line {}: expected key = value", ln + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::parse(format!("line {}: bad key {k:?}", ln + 1)));
        }
        let k = k.replace('_', "-");
        if out.iter().any(|(existing, _)| *existing == k) {
            return Err(Error::parse(format!("line {}: duplicate key {k:?}", ln + 1)));
        }
        out.push((k, v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Exact,
    MonteCarlo,
}

/// Everything a command needs, after merging the config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Family,
    pub theta_h: Option<f64>,
    pub theta_a: Option<f64>,
    pub grid: Option<Grid>,
    pub source: Option<CandidateDistribution>,
    pub engine: EngineKind,
    pub samples: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub plot: Option<String>,
    pub firms: Option<usize>,
    pub z_threshold: f64,
}

pub const KNOWN_KEYS: &[&str] = &[
    "family", "noise", "theta-h", "theta-a", "phi-h", "phi-a", "grid", "pool", "dist", "engine", "samples", "seed",
    "threads", "out", "plot", "firms", "z",
];

impl RunConfig {
    /// Builds from merged pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut get = std::collections::BTreeMap::new();
        for (k, v) in pairs {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::parse(format!("unknown setting {k:?}")));
            }
            get.insert(k.as_str(), v.as_str());
        }
        let noise = get.get("noise").map(|s| parse_noise(s)).transpose()?;
        let family = match get.get("family") {
            Some(f) => parse_family(f, noise.as_ref())?,
            None => match &noise {
                Some(n) => Family::Rum(n.clone()),
                None => Family::Mallows,
            },
        };
        if noise.is_some() && !matches!(family, Family::Rum(_)) {
            return Err(Error::parse("noise only applies to the rum family"));
        }
        let accuracy = |theta_key: &str, phi_key: &str| -> Result<Option<f64>> {
            match (get.get(theta_key), get.get(phi_key)) {
                (Some(_), Some(_)) => Err(Error::parse(format!("give {theta_key} or {phi_key}, not both"))),
                (Some(t), None) => Ok(Some(num(t, theta_key)?)),
                (None, Some(p)) => {
                    if family != Family::Mallows {
                        return Err(Error::parse(format!("{phi_key} only applies to mallows")));
                    }
                    Ok(Some(num(p, phi_key)? - 1.0))
                }
                (None, None) => Ok(None),
            }
        };
        let theta_h = accuracy("theta-h", "phi-h")?;
        let theta_a = accuracy("theta-a", "phi-a")?;
        for t in [theta_h, theta_a].into_iter().flatten() {
            if !(t > 0.0) {
                return Err(Error::parse(format!("accuracy must be positive, got {t}")));
            }
        }
        let grid = get.get("grid").map(|g| parse_grid(g)).transpose()?;
        let source = match (get.get("pool"), get.get("dist")) {
            (Some(_), Some(_)) => return Err(Error::parse("give pool or dist, not both")),
            (Some(p), None) => Some(CandidateDistribution::Fixed(parse_pool(p)?)),
            (None, Some(d)) => Some(parse_dist(d)?),
            (None, None) => None,
        };
        let engine = match get.get("engine").copied().unwrap_or("exact") {
            "exact" => EngineKind::Exact,
            "mc" => EngineKind::MonteCarlo,
            other => return Err(Error::parse(format!("engine must be exact or mc, got {other:?}"))),
        };
        let samples = match get.get("samples") {
            Some(s) => s.trim().parse().map_err(|_| Error::parse(format!("samples: {s:?}")))?,
            None => crate::estimate::DEFAULT_CELL_SAMPLES,
        };
        if samples == 0 {
            return Err(Error::parse("samples must be positive"));
        }
        let seed = match get.get("seed") {
            Some(s) => s.trim().parse().map_err(|_| Error::parse(format!("seed: {s:?}")))?,
            None => 1,
        };
        let threads = get.get("threads").map(|t| count(t, "threads")).transpose()?;
        if threads == Some(0) {
            return Err(Error::parse("threads must be positive"));
        }
        let firms = get.get("firms").map(|t| count(t, "firms")).transpose()?;
        let z_threshold =
            get.get("z").map(|z| num(z, "z")).transpose()?.unwrap_or(crate::estimate::DEFAULT_Z_THRESHOLD);
        let cfg = RunConfig {
            family,
            theta_h,
            theta_a,
            grid,
            source,
            engine,
            samples,
            seed,
            threads,
            out: get.get("out").map(|s| s.to_string()),
            plot: get.get("plot").map(|s| s.to_string()),
            firms,
            z_threshold,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects combinations that could only fail later.
    pub fn validate(&self) -> Result<()> {
        if let (EngineKind::Exact, Family::Rum(noise), Some(src)) = (self.engine, &self.family, &self.source) {
            if noise.is_continuous() && src.len() > crate::exact::MAX_QUADRATURE_N {
                return Err(Error::parse(format!(
                    "exact engine handles continuous-noise RUMs only up to n = {}; use --engine mc",
                    crate::exact::MAX_QUADRATURE_N
                )));
            }
            if noise.is_continuous() && !src.is_fixed() {
                return Err(Error::parse("exact engine needs a fixed pool for RUMs; use --engine mc"));
            }
        }
        if let (EngineKind::Exact, Family::PlackettLuce, Some(src)) = (self.engine, &self.family, &self.source) {
            if !src.is_fixed() {
                return Err(Error::parse("exact engine needs a fixed pool for Plackett-Luce; use --engine mc"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let g = parse_grid("1:2:0.5×0.5:1:0.25").unwrap();
        assert_eq!(g.theta_h.points(), vec![1.0, 1.5, 2.0]);
        assert_eq!(g.theta_a.points().len(), 3);
        assert!(parse_grid("1:2:0.5x3").is_ok());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("0:2:1x1").is_err());
        assert!(parse_grid("2:1:1x1").is_err());
    }

    #[test]
    fn pool_and_dist() {
        assert_eq!(parse_pool("1.75, 0.5, 0").unwrap().values(), &[1.75, 0.5, 0.0]);
        assert!(parse_pool("0,1").is_err());
        assert!(matches!(parse_dist("uniform:0:1:4").unwrap(), CandidateDistribution::Uniform { n: 4, .. }));
        assert!(matches!(parse_dist("fixed:3,2,0").unwrap(), CandidateDistribution::Fixed(_)));
        assert!(parse_dist("uniform:1:0:4").is_err());
        assert!(parse_dist("normal:0:1").is_err());
    }

    #[test]
    fn noise_forms() {
        assert_eq!(parse_noise("laplace").unwrap(), Noise::Laplacian);
        assert!(matches!(parse_noise("three-point:0.1").unwrap(), Noise::Discrete(_)));
        assert!(matches!(parse_noise("discrete:-1@0.5,1@0.5").unwrap(), Noise::Discrete(_)));
        assert!(parse_noise("discrete:-1@0.5").is_err());
        assert!(parse_noise("cauchy").is_err());
    }

    #[test]
    fn config_file() {
        let text = "# settings\nfamily = mallows\nphi_h = 2 # comment\n\nseed=7\n";
        let pairs = parse_config(text).unwrap();
        assert_eq!(pairs.len(), 3);
        let cfg = RunConfig::from_pairs(&pairs).unwrap();
        assert_eq!(cfg.theta_h, Some(1.0));
        assert_eq!(cfg.seed, 7);
        assert!(parse_config("a = 1\na = 2").is_err());
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn later_pairs_override() {
        let pairs = vec![("seed".to_string(), "1".to_string()), ("seed".to_string(), "9".to_string())];
        assert_eq!(RunConfig::from_pairs(&pairs).unwrap().seed, 9);
    }

    #[test]
    fn exact_continuous_rum_is_refused_early() {
        let pairs: Vec<(String, String)> =
            [("family", "rum"), ("noise", "gaussian"), ("pool", "4,3,2,1"), ("engine", "exact")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
        assert!(RunConfig::from_pairs(&pairs).is_err());
    }
}
