//! Solution-generating operators, seed chains, claimed closed forms and
//! exact residual checks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::expr::linear::{collect, solve_linear};
use crate::expr::{equal, parse, rat, sym, Atom, Expr, ParseError, SymbolTable, Verdict};
use crate::fpe::{evaluate_on, fpe_delta, reduce_modulo, FormalRule, FpeError, FpeParams};

#[derive(Debug, thiserror::Error)]
pub enum SolutionError {
    #[error("unknown operator `{0}` (expected F1..F5)")]
    UnknownOperator(String),
    #[error("unknown claim id `{0}`")]
    UnknownClaim(String),
    #[error("chain link {step} ({op}) is not a solution; residual {residual}")]
    RefutedLink { step: usize, op: OperatorId, residual: String },
    #[error("seed is not a verified solution; residual {0}")]
    UnverifiedSeed(String),
    #[error("branch conditions need a numeric a2")]
    SymbolicA2,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Fpe(#[from] FpeError),
}

/// Symbols allowed in solution expressions: `x`, `t`, the drift parameters,
/// the free constants `a`, `b`, `c`, `lambda`, and a formal solution `alpha`.
pub fn solution_table() -> SymbolTable {
    SymbolTable::new()
        .with_vars(&["x", "t"])
        .with_params(&["a", "b", "c", "lambda"])
        .with_func("alpha", &["x", "t"])
}

pub fn parse_solution(text: &str) -> Result<Expr, ParseError> {
    parse(text, &solution_table())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OperatorId {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl OperatorId {
    pub const ALL: [OperatorId; 5] = [OperatorId::F1, OperatorId::F2, OperatorId::F3, OperatorId::F4, OperatorId::F5];

    /// The point generator whose bracket with `Valpha` has this operator as image.
    pub fn generator(self) -> &'static str {
        match self {
            OperatorId::F1 => "V5",
            OperatorId::F2 => "V3",
            OperatorId::F3 => "V6",
            OperatorId::F4 => "V1",
            OperatorId::F5 => "V4",
        }
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for OperatorId {
    type Err = SolutionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(OperatorId::F1),
            "F2" => Ok(OperatorId::F2),
            "F3" => Ok(OperatorId::F3),
            "F4" => Ok(OperatorId::F4),
            "F5" => Ok(OperatorId::F5),
            _ => Err(SolutionError::UnknownOperator(s.to_string())),
        }
    }
}

/// Image of the solution `α` under operator `op`.
pub fn transform(op: OperatorId, alpha: &Expr, p: &FpeParams) -> Expr {
    let a2 = &p.a2;
    let l = p.drift();
    let at = Expr::var("t");
    let ax = alpha.diff_var("x");
    let dt = alpha.diff_var("t");
    let e = |k: i64| Expr::exp(&(a2 * &at) * &Expr::int(k));
    match op {
        OperatorId::F1 => &e(-2) * &(&(&dt - &(&l * &ax)) + &(&l.pow(2) * alpha).scale(&rat(2, 1))),
        OperatorId::F2 => &(&e(-1) * &a2.recip()) * &(&ax.scale(&rat(1, 2)) - &(&l * alpha)),
        OperatorId::F3 => &e(2) * &(&(&dt + &(&l * &ax)) + &(a2 * alpha)),
        OperatorId::F4 => &ax * &e(1),
        OperatorId::F5 => dt,
    }
}

/// `Δ` evaluated on `u = f`; formal `alpha` is reduced modulo its FPE rule.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactResidual {
    pub residual: Expr,
    /// `Equal` when the residual vanishes; `Inconclusive` when it escapes the
    /// canonical class and sampling cannot decide.
    pub verdict: Verdict,
}

impl ExactResidual {
    pub fn vanishes(&self) -> bool {
        self.verdict == Verdict::Equal
    }
}

pub fn exact_residual(f: &Expr, p: &FpeParams) -> Result<ExactResidual, SolutionError> {
    let delta = &fpe_delta(p).equations[0].expr;
    let mut r = evaluate_on(delta, "u", &p.bind(f));
    for g in r.funcs() {
        if g.name.as_ref() == "alpha" {
            r = reduce_modulo(&r, &FormalRule::fpe("alpha", p))?;
            break;
        }
    }
    let verdict = equal(&r, &Expr::zero()).verdict;
    Ok(ExactResidual { residual: r, verdict })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    SymbolicallyVerified,
    NumericallyVerified,
    Refuted,
    Unchecked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: String,
    pub ops: Vec<OperatorId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionRecord {
    pub id: String,
    pub expression: Expr,
    pub provenance: Provenance,
    pub status: Status,
    pub anchor: String,
}

impl SolutionRecord {
    pub fn unchecked(id: &str, expression: Expr, anchor: &str) -> Self {
        SolutionRecord {
            id: id.into(),
            expression,
            provenance: Provenance { seed: id.into(), ops: Vec::new() },
            status: Status::Unchecked,
            anchor: anchor.into(),
        }
    }

    /// Sets the status from the exact residual: verified when it vanishes,
    /// refuted when it canonically does not, unchanged otherwise.
    pub fn check_exact(&mut self, p: &FpeParams) -> Result<ExactResidual, SolutionError> {
        let r = exact_residual(&self.expression, p)?;
        match r.verdict {
            Verdict::Equal => self.status = Status::SymbolicallyVerified,
            Verdict::NotEqual => self.status = Status::Refuted,
            Verdict::Inconclusive => {}
        }
        Ok(r)
    }
}

/// Applies `ops` in order to a verified seed; every image is residual-checked.
pub fn chain(seed: &SolutionRecord, ops: &[OperatorId], p: &FpeParams) -> Result<Vec<SolutionRecord>, SolutionError> {
    let mut cur = seed.clone();
    let r = cur.check_exact(p)?;
    if !r.vanishes() {
        return Err(SolutionError::UnverifiedSeed(r.residual.to_string()));
    }
    let mut out = Vec::new();
    for (step, op) in ops.iter().enumerate() {
        let image = transform(*op, &cur.expression, p);
        let mut prov = cur.provenance.clone();
        prov.ops.push(*op);
        let id = format!("{}.{}", cur.id, op);
        let mut rec = SolutionRecord { id, expression: image, provenance: prov, status: Status::Unchecked, anchor: seed.anchor.clone() };
        let r = rec.check_exact(p)?;
        if !r.vanishes() {
            return Err(SolutionError::RefutedLink { step, op: *op, residual: r.residual.to_string() });
        }
        out.push(rec.clone());
        cur = rec;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Claim registry

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// A closed form stated by the source.
    Printed,
    /// A form re-derived here.
    Derived,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub id: &'static str,
    pub anchor: &'static str,
    pub expression: &'static str,
    pub origin: Origin,
    /// Required value of `a2`, if the claim only holds for one.
    pub a2: Option<i64>,
    /// Default values for the free constants.
    pub constants: &'static [(&'static str, i64)],
    /// Parameter pairs `(a1, a2)` at which the claim is adjudicated.
    pub checkpoints: &'static [(i64, i64)],
}

pub const CLAIMS: &[Claim] = &[
    Claim {
        id: "g1",
        anchor: "seed-chain-g1",
        expression: "(-a2+2*(a2*x+a1)^2)*exp(-3*a2*t)",
        origin: Origin::Printed,
        a2: None,
        constants: &[],
        checkpoints: &[(1, 1)],
    },
    Claim {
        id: "g2",
        anchor: "seed-chain-g2",
        expression: "-(x+a1/a2)*exp(-2*a2*t)",
        origin: Origin::Printed,
        a2: None,
        constants: &[],
        checkpoints: &[(1, 1)],
    },
    Claim {
        id: "g3",
        anchor: "seed-chain-g3",
        expression: "-a2*exp(-a2*t)",
        origin: Origin::Printed,
        a2: None,
        constants: &[],
        checkpoints: &[(1, 1)],
    },
    Claim {
        id: "g4",
        anchor: "g4-from-g1",
        expression: "(3*a2^2-12*a2*(a2*x+a1)^2+4*(a2*x+a1)^4)*exp(-5*a2*t)",
        origin: Origin::Printed,
        a2: None,
        constants: &[],
        checkpoints: &[(1, 1)],
    },
    Claim {
        id: "y1-final-solution",
        anchor: "y1-final-solution",
        expression: "(2*a2*a*x*exp(-a2*t)+b*exp(t))*exp(a2*x^2+2*a1*x)",
        origin: Origin::Printed,
        a2: None,
        constants: &[("a", 1), ("b", 0)],
        checkpoints: &[(0, 1), (1, 2)],
    },
    Claim {
        id: "y1-corrected",
        anchor: "y1-final-solution",
        expression: "(2*a*(a2*x+a1)*exp(a2*t)+b)*exp(a2*x^2+2*a1*x)",
        origin: Origin::Derived,
        a2: None,
        constants: &[("a", 1), ("b", 1)],
        checkpoints: &[(0, 1), (1, 2)],
    },
    Claim {
        id: "y2-a2-2-solution",
        anchor: "y2-a2-2-solution",
        expression: "lambda*(2*x+a1)*exp((2*x+a1)^2/2+4*t)",
        origin: Origin::Printed,
        a2: Some(2),
        constants: &[("lambda", 1)],
        checkpoints: &[(1, 2)],
    },
    Claim {
        id: "y2-corrected",
        anchor: "y2-a2-2-solution",
        expression: "lambda*(a2*x+a1)*exp((a2*x+a1)^2/a2+a2*t)",
        origin: Origin::Derived,
        a2: None,
        constants: &[("lambda", 1)],
        checkpoints: &[(1, 2)],
    },
];

pub fn claim(id: &str) -> Result<&'static Claim, SolutionError> {
    CLAIMS.iter().find(|c| c.id == id).ok_or_else(|| SolutionError::UnknownClaim(id.to_string()))
}

impl Claim {
    /// The expression with `a2` fixed when the claim requires it.
    pub fn expression(&self) -> Result<Expr, SolutionError> {
        let e = parse_solution(self.expression)?;
        Ok(match self.a2 {
            Some(v) => e.substitute(&crate::expr::Bindings::new().param("a2", Expr::int(v))),
            None => e,
        })
    }

    /// The expression with the free constants at their defaults.
    pub fn instantiated(&self) -> Result<Expr, SolutionError> {
        let mut b = crate::expr::Bindings::new();
        for (k, v) in self.constants {
            b = b.param(k, Expr::int(*v));
        }
        Ok(self.expression()?.substitute(&b))
    }

    pub fn record(&self) -> Result<SolutionRecord, SolutionError> {
        Ok(SolutionRecord::unchecked(self.id, self.expression()?, self.anchor))
    }
}

/// The claimed closed forms of one potential-symmetry branch, as unchecked
/// records, plus the `Y1` ansatz with formal `q1(t)`, `q2(t)`.
pub fn potential_candidates(branch: &str) -> Result<Vec<SolutionRecord>, SolutionError> {
    let ids: &[&str] = match branch {
        "Y1" => &["y1-final-solution"],
        "Y2" => &["y2-a2-2-solution"],
        other => return Err(SolutionError::UnknownClaim(other.to_string())),
    };
    let mut out: Vec<SolutionRecord> = ids.iter().map(|id| claim(id)?.record()).collect::<Result<_, _>>()?;
    if branch == "Y1" {
        out.push(SolutionRecord::unchecked("y1-ansatz", y1_ansatz(), "y1-surface-condition-solutions"));
    }
    Ok(out)
}

fn ansatz_table() -> SymbolTable {
    SymbolTable::new().with_vars(&["x", "t"]).with_func("q1", &["t"]).with_func("q2", &["t"])
}

/// `u = [2a₂x q₁(t) + q₂(t)] exp(a₂x² + 2a₁x)`.
pub fn y1_ansatz() -> Expr {
    parse("(2*a2*x*q1(t)+q2(t))*exp(a2*x^2+2*a1*x)", &ansatz_table()).expect("valid ansatz")
}

/// The printed pair of `q₁`, `q₂` constraints, by power of `x`.
pub const Y1_PRINTED_CONSTRAINTS: [(i32, &str); 2] = [(1, "2*a2*(a2*q1(t)+q1_t(t))"), (0, "q2_t(t)-q2(t)")];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintComparison {
    pub power_of_x: i32,
    pub derived: String,
    pub printed: Option<String>,
    /// True when the derived constraint is a parameter multiple of the printed one.
    pub agrees: bool,
}

/// Substitutes the `Y1` ansatz into `Δ`, strips the exponential factor and
/// collects by powers of `x`.
pub fn derive_y1_constraints(p: &FpeParams) -> Result<BTreeMap<i32, Expr>, SolutionError> {
    let r = exact_residual(&y1_ansatz(), p)?.residual;
    let stripped = &r * &Expr::exp(-p.bind(&parse("a2*x^2+2*a1*x", &ansatz_table())?));
    let x = Atom::Var(sym("x"));
    let groups = collect(&stripped, |a| *a == x, false);
    Ok(groups.into_iter().map(|(k, v)| (k.power_of(&x), v)).collect())
}

fn proportional(a: &Expr, b: &Expr) -> bool {
    let k = sym("k__");
    let e = a - &(&Expr::param(&k) * b);
    match solve_linear(&[e], &[k.clone()]) {
        Ok(s) => !s.value(&k).is_zero(),
        Err(_) => false,
    }
}

/// Derived constraints side by side with the printed pair.
pub fn compare_y1_constraints(p: &FpeParams) -> Result<Vec<ConstraintComparison>, SolutionError> {
    let derived = derive_y1_constraints(p)?;
    let table = ansatz_table();
    let mut printed = BTreeMap::new();
    for (k, s) in Y1_PRINTED_CONSTRAINTS {
        printed.insert(k, p.bind(&parse(s, &table)?));
    }
    let mut powers: Vec<i32> = derived.keys().chain(printed.keys()).copied().collect();
    powers.sort_unstable_by(|a, b| b.cmp(a));
    powers.dedup();
    Ok(powers
        .into_iter()
        .map(|k| {
            let d = derived.get(&k).cloned().unwrap_or_else(Expr::zero);
            let pr = printed.get(&k);
            let agrees = match pr {
                Some(pr) => proportional(&d, pr),
                None => d.is_zero(),
            };
            ConstraintComparison { power_of_x: k, derived: d.to_string(), printed: pr.map(|e| e.to_string()), agrees }
        })
        .collect())
}

/// `q₁`, `q₂` closed forms are substituted into the ansatz.
pub fn y1_from_q(q1: &Expr, q2: &Expr) -> Expr {
    let b = crate::expr::Bindings::new().func("q1", q1.clone()).func("q2", q2.clone());
    y1_ansatz().substitute(&b)
}

// ---------------------------------------------------------------------------
// Fixed-a2 branch conditions for the second potential symmetry

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCondition {
    pub index: usize,
    pub residual: String,
    pub holds: bool,
}

/// Substitutes `f(z)`, `g(z)` into the four `z`-ODE conditions at numeric
/// `a2` and reports which vanish identically.
pub fn branch_conditions_check(f: &Expr, g: &Expr, p: &FpeParams) -> Result<Vec<BranchCondition>, SolutionError> {
    if p.a2.as_constant().is_none() {
        return Err(SolutionError::SymbolicA2);
    }
    let a2 = &p.a2;
    let a1 = &p.a1;
    let z = Expr::var("z");
    let (f, g) = (p.bind(f), p.bind(g));
    let (f1, f2) = (f.diff_var("z"), f.diff_var("z").diff_var("z"));
    let (g1, g2) = (g.diff_var("z"), g.diff_var("z").diff_var("z"));
    let one = Expr::one();
    let n = |k: i64| Expr::int(k);
    let c1 = &(&(&(&one - a2) * &z) * &f1) + &(a2 * &f);
    let c2 = &(&(&(&(&n(-8) * a2) * a1) * &f) + &(&(&n(2) * a2) * &g))
        + &(&(&(&(&n(4) * &z) * a1) * &(a2 - &one)) * &f1)
        + &(&(&z * &(&one - a2)) * &g1);
    let c3 = &(&(&n(2) * &f) - &(&(&n(2) * &z) * &f1)) + &(&z.pow(2) * &f2);
    let c4 = &(&(&(&(&n(24) * a1) * &f) - &(&n(6) * &g)) - &(&(&(&n(16) * a1) * &z) * &f1))
        + &(&(&(&n(4) * &z) * &g1) + &(&(&(&(&n(4) * a1) * &z.pow(2)) * &f2) - &(&z.pow(2) * &g2)));
    Ok([c1, c2, c3, c4]
        .into_iter()
        .enumerate()
        .map(|(i, c)| BranchCondition { index: i + 1, residual: c.to_string(), holds: c.is_zero() })
        .collect())
}

/// Symbols for `f(z)`, `g(z)` closed forms.
pub fn branch_table() -> SymbolTable {
    SymbolTable::new().with_vars(&["z"]).with_params(&["c"])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> FpeParams {
        FpeParams::symbolic()
    }

    #[test]
    fn seed_images_match_printed() {
        let seed = parse_solution("exp(-a2*t)").unwrap();
        for (op, id) in [(OperatorId::F1, "g1"), (OperatorId::F2, "g2"), (OperatorId::F5, "g3")] {
            assert_eq!(transform(op, &seed, &sp()), claim(id).unwrap().expression().unwrap(), "{id}");
        }
    }

    #[test]
    fn g4_is_f1_of_g1_not_f2() {
        let g1 = claim("g1").unwrap().expression().unwrap();
        let g4 = claim("g4").unwrap().expression().unwrap();
        assert_eq!(transform(OperatorId::F1, &g1, &sp()), g4);
        assert_ne!(transform(OperatorId::F2, &g1, &sp()), g4);
    }

    #[test]
    fn operators_preserve_solutions_formally() {
        let alpha = parse_solution("alpha(x,t)").unwrap();
        for op in OperatorId::ALL {
            let r = exact_residual(&transform(op, &alpha, &sp()), &sp()).unwrap();
            assert!(r.residual.is_zero(), "{op}: {}", r.residual);
        }
    }

    #[test]
    fn chain_records_provenance() {
        let seed = SolutionRecord::unchecked("seed", parse_solution("exp(-a2*t)").unwrap(), "seed");
        let out = chain(&seed, &[OperatorId::F1, OperatorId::F1], &sp()).unwrap();
        assert_eq!(out[1].provenance.ops, vec![OperatorId::F1, OperatorId::F1]);
        assert!(out.iter().all(|r| r.status == Status::SymbolicallyVerified));
        let zero = SolutionRecord::unchecked("zero", Expr::zero(), "seed");
        assert!(chain(&zero, &[OperatorId::F3], &sp()).unwrap()[0].expression.is_zero());
        let one = SolutionRecord::unchecked("one", Expr::one(), "seed");
        assert!(matches!(chain(&one, &[OperatorId::F1], &sp()), Err(SolutionError::UnverifiedSeed(_))));
    }

    #[test]
    fn trivial_residuals() {
        assert!(exact_residual(&Expr::zero(), &sp()).unwrap().vanishes());
        assert_eq!(exact_residual(&Expr::one(), &sp()).unwrap().residual, Expr::param("a2"));
    }

    #[test]
    fn claim_verdicts() {
        let check = |id: &str| {
            let c = claim(id).unwrap();
            let p = match c.a2 {
                Some(v) => FpeParams::numeric(rat(0, 1), rat(v, 1)).map(|mut p| {
                    p.a1 = Expr::param("a1");
                    p
                }).unwrap(),
                None => sp(),
            };
            c.record().unwrap().check_exact(&p).unwrap().vanishes()
        };
        assert!(!check("y1-final-solution"));
        assert!(check("y1-corrected"));
        assert!(!check("y2-a2-2-solution"));
        assert!(check("y2-corrected"));
    }

    #[test]
    fn y1_constraints_differ_from_printed() {
        let cmp = compare_y1_constraints(&sp()).unwrap();
        let x1 = cmp.iter().find(|c| c.power_of_x == 1).unwrap();
        let x0 = cmp.iter().find(|c| c.power_of_x == 0).unwrap();
        assert!(!x1.agrees && !x0.agrees, "{cmp:?}");
        // q1 = a e^{a2 t}, q2 = 2 a a1 e^{a2 t} + b solve the derived pair.
        let table = solution_table();
        let q1 = parse("a*exp(a2*t)", &table).unwrap();
        let q2 = parse("2*a*a1*exp(a2*t)+b", &table).unwrap();
        let u = y1_from_q(&q1, &q2);
        assert!(exact_residual(&u, &sp()).unwrap().vanishes());
        assert_eq!(u, claim("y1-corrected").unwrap().expression().unwrap());
    }

    #[test]
    fn branch_conditions() {
        let p2 = FpeParams { a1: Expr::param("a1"), a2: Expr::int(2) };
        let t = branch_table();
        let f = parse("c*z^2", &t).unwrap();
        let g = parse("4*a1*c*z^2", &t).unwrap();
        assert!(branch_conditions_check(&f, &g, &p2).unwrap().iter().all(|c| c.holds));
        let r = branch_conditions_check(&f, &Expr::zero(), &p2).unwrap();
        assert!(!r[1].holds);
        assert!(branch_conditions_check(&Expr::zero(), &Expr::zero(), &p2).unwrap().iter().all(|c| c.holds));
        assert!(matches!(branch_conditions_check(&f, &g, &sp()), Err(SolutionError::SymbolicA2)));
    }
}
