use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::atom_key;
use super::{Atom, Expr};

/// Randomized sampling parameters for numeric comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub points: usize,
    pub seed: u64,
    /// Relative tolerance, scaled by `max(1, |lhs|, |rhs|)`.
    pub tol: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { points: 20, seed: 0x5eed, tol: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualityMethod {
    Canonical,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equal,
    NotEqual,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equality {
    pub verdict: Verdict,
    pub method: EqualityMethod,
    /// Fraction of sample points that agreed (1 for canonical decisions).
    pub confidence: f64,
}

impl Equality {
    pub fn is_equal(&self) -> bool {
        self.verdict == Verdict::Equal
    }
}

/// Result of a numeric identity probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    /// `None` when too few points could be evaluated.
    pub holds: Option<bool>,
    pub confidence: f64,
    pub valid_points: usize,
    pub max_relative_diff: f64,
}

pub fn equal(a: &Expr, b: &Expr) -> Equality {
    equal_with(a, b, &SamplingConfig::default())
}

/// Canonical comparison when both sides are in the canonical class,
/// otherwise randomized sampling.
pub fn equal_with(a: &Expr, b: &Expr, cfg: &SamplingConfig) -> Equality {
    if a.is_canonical_class() && b.is_canonical_class() {
        let verdict = if a == b { Verdict::Equal } else { Verdict::NotEqual };
        return Equality { verdict, method: EqualityMethod::Canonical, confidence: 1.0 };
    }
    if a == b {
        return Equality { verdict: Verdict::Equal, method: EqualityMethod::Canonical, confidence: 1.0 };
    }
    let p = probe(a, b, cfg);
    let verdict = match p.holds {
        _ if p.valid_points < cfg.points => Verdict::Inconclusive,
        Some(true) => Verdict::Equal,
        Some(false) => Verdict::NotEqual,
        None => Verdict::Inconclusive,
    };
    Equality { verdict, method: EqualityMethod::Numeric, confidence: p.confidence }
}

fn sample_value(name: &str, rng: &mut ChaCha8Rng) -> f64 {
    match name {
        "t" => rng.random_range(0.1..1.1),
        "a2" => {
            const CHOICES: [f64; 6] = [-1.5, -1.0, -0.5, 0.5, 1.0, 1.5];
            CHOICES[rng.random_range(0..CHOICES.len())]
        }
        _ => rng.random_range(-2.0..2.0),
    }
}

/// Relative-difference test at `cfg.points` random points. Formal function
/// symbols cannot be sampled and make the probe inconclusive.
pub fn probe(a: &Expr, b: &Expr, cfg: &SamplingConfig) -> ProbeOutcome {
    let mut names = BTreeSet::new();
    let mut formal = false;
    for e in [a, b] {
        e.for_each_atom(&mut |at| match at {
            Atom::Func(_) => formal = true,
            Atom::Recip(_) => {}
            _ => {
                if let Some(k) = atom_key(at) {
                    names.insert(k);
                }
            }
        });
    }
    let inconclusive = ProbeOutcome { holds: None, confidence: 0.0, valid_points: 0, max_relative_diff: f64::NAN };
    if formal {
        return inconclusive;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut valid, mut passed) = (0usize, 0usize);
    let mut worst = 0.0f64;
    for _ in 0..cfg.points {
        let point: HashMap<String, f64> = names.iter().map(|n| (n.clone(), sample_value(n, &mut rng))).collect();
        let (Ok(x), Ok(y)) = (a.eval(&point), b.eval(&point)) else { continue };
        valid += 1;
        let rel = (x - y).abs() / 1f64.max(x.abs()).max(y.abs());
        worst = worst.max(rel);
        if rel <= cfg.tol {
            passed += 1;
        }
    }
    if valid * 2 < cfg.points || valid == 0 {
        return ProbeOutcome { valid_points: valid, ..inconclusive };
    }
    ProbeOutcome {
        holds: Some(passed == valid),
        confidence: passed as f64 / cfg.points as f64,
        valid_points: valid,
        max_relative_diff: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_reflexive() {
        let e = Expr::exp(-(&Expr::param("a2") * &Expr::var("t")));
        let r = equal(&e, &e);
        assert!(r.is_equal());
        assert_eq!(r.method, EqualityMethod::Canonical);
    }

    #[test]
    fn numeric_fallback_for_reciprocals() {
        let x = Expr::var("x");
        let s = &x.pow(2) + &Expr::int(3);
        let lhs = &s.recip() * &s;
        let r = equal(&lhs, &Expr::one());
        assert!(r.is_equal());
        assert_eq!(r.method, EqualityMethod::Numeric);
        assert_eq!(r.confidence, 1.0);
        let bad = equal(&s.recip(), &Expr::one());
        assert_eq!(bad.verdict, Verdict::NotEqual);
    }

    #[test]
    fn probe_distinguishes() {
        let a1 = Expr::param("a1");
        let a2 = Expr::param("a2");
        let x = Expr::var("x");
        let l = &(&a2 * &x) + &a1;
        let p = probe(&l.pow(2), &(&a2.pow(2) * &x.pow(2)), &SamplingConfig::default());
        assert_eq!(p.holds, Some(false));
        let q = probe(&l.pow(2), &l.pow(2), &SamplingConfig::default());
        assert_eq!(q.holds, Some(true));
        assert_eq!(q.confidence, 1.0);
    }

    #[test]
    fn probe_is_seeded() {
        let x = Expr::var("x");
        let s = (&x + &Expr::int(5)).recip();
        let c = SamplingConfig::default();
        assert_eq!(probe(&s, &x, &c), probe(&s, &x, &c));
    }
}
