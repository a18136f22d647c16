//! The Fokker–Planck family `u_t = −a₂u − (a₂x+a₁)u_x + ½u_xx`, its potential
//! system, and on-shell reduction.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::expr::{rat, sym, Atom, Bindings, Coord, DerivIndex, Expr, FuncSym, Jet, Rational, Symbol};
use crate::jet::{total_derivative, total_derivative_index, JetContext, JetError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FpeError {
    #[error("a2 must be nonzero")]
    ZeroA2,
    #[error("leading coordinate {lead} does not occur linearly with an invertible coefficient in {equation}")]
    LeadingNotLinear { lead: String, equation: String },
    #[error("leading coordinate {0} used by more than one equation")]
    DuplicateLeading(String),
    #[error("on-shell elimination did not terminate within {0} rounds")]
    NonTerminating(usize),
    #[error("rule for `{0}` is not solvable for its leading derivative")]
    RuleNotSolvable(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Drift parameters. Either may stay symbolic; a numeric `a2` must be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct FpeParams {
    pub a1: Expr,
    pub a2: Expr,
}

impl Default for FpeParams {
    fn default() -> Self {
        FpeParams::symbolic()
    }
}

impl FpeParams {
    pub fn symbolic() -> Self {
        FpeParams { a1: Expr::param("a1"), a2: Expr::param("a2") }
    }

    pub fn numeric(a1: Rational, a2: Rational) -> Result<Self, FpeError> {
        if a2.is_zero() {
            return Err(FpeError::ZeroA2);
        }
        Ok(FpeParams { a1: Expr::constant(a1), a2: Expr::constant(a2) })
    }

    pub fn ints(a1: i64, a2: i64) -> Result<Self, FpeError> {
        FpeParams::numeric(rat(a1, 1), rat(a2, 1))
    }

    /// Bindings replacing the symbols `a1`, `a2` by the numeric values (if any).
    pub fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        if self.a1.as_constant().is_some() {
            b = b.param("a1", self.a1.clone());
        }
        if self.a2.as_constant().is_some() {
            b = b.param("a2", self.a2.clone());
        }
        b
    }

    /// Instantiates an expression written with symbolic `a1`, `a2`.
    pub fn bind(&self, e: &Expr) -> Expr {
        e.substitute(&self.bindings())
    }

    pub fn is_numeric(&self) -> bool {
        self.a1.as_constant().is_some() && self.a2.as_constant().is_some()
    }

    /// `(a1, a2)` as floats when both are numeric.
    pub fn values(&self) -> Option<(f64, f64)> {
        use num_traits::ToPrimitive;
        Some((self.a1.as_constant()?.to_f64()?, self.a2.as_constant()?.to_f64()?))
    }

    /// The drift `a₂x + a₁`.
    pub fn drift(&self) -> Expr {
        &(&self.a2 * &Expr::var("x")) + &self.a1
    }
}

/// One equation `expr = 0` solved for its leading jet coordinate: `lead = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub expr: Expr,
    pub lead: Jet,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeSystem {
    pub name: String,
    pub equations: Vec<Equation>,
    pub ctx: JetContext,
}

impl PdeSystem {
    pub fn new(name: &str, ctx: JetContext, equations: Vec<(Expr, Jet)>) -> Result<Self, FpeError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (expr, lead) in equations {
            if !seen.insert(lead.clone()) {
                return Err(FpeError::DuplicateLeading(lead.to_string()));
            }
            let c = Coord::Jet(lead.clone());
            let coef = expr.diff(&c);
            let invertible = coef.is_single_term()
                && coef.diff(&c).is_zero()
                && !coef.any_atom(|a| !matches!(a, Atom::Param(_)))
                && !coef.has_exp();
            if !invertible {
                return Err(FpeError::LeadingNotLinear { lead: lead.to_string(), equation: expr.to_string() });
            }
            let rest = &expr - &(&coef * &Expr::jet_of(&lead));
            let rhs = -(&rest * &coef.recip());
            out.push(Equation { expr, lead, rhs });
        }
        Ok(PdeSystem { name: name.to_string(), equations: out, ctx })
    }

    pub fn leads(&self) -> Vec<&Jet> {
        self.equations.iter().map(|e| &e.lead).collect()
    }

    /// The equation expressions.
    pub fn exprs(&self) -> Vec<Expr> {
        self.equations.iter().map(|e| e.expr.clone()).collect()
    }
}

/// `Δ = u_t + a₂u + (a₂x+a₁)u_x − ½u_xx`, leading coordinate `u_t`.
pub fn fpe_delta(p: &FpeParams) -> PdeSystem {
    let u = |idx: &[&str]| Expr::jet("u", DerivIndex::new(idx));
    let delta = &(&(&u(&["t"]) + &(&p.a2 * &u(&[]))) + &(&p.drift() * &u(&["x"]))) - &u(&["x", "x"]).scale(&rat(1, 2));
    PdeSystem::new("fpe", JetContext::scalar(4), vec![(delta, Jet::new("u", DerivIndex::new(["t"])))])
        .expect("u_t has unit coefficient")
}

/// Potential system: `v_t + (a₂x+a₁)u − ½u_x = 0`, `v_x − u = 0`.
pub fn auxiliary_system(p: &FpeParams) -> PdeSystem {
    let u = Expr::jet("u", DerivIndex::empty());
    let ux = Expr::jet("u", DerivIndex::new(["x"]));
    let vt = Jet::new("v", DerivIndex::new(["t"]));
    let vx = Jet::new("v", DerivIndex::new(["x"]));
    let d1 = &(&Expr::jet_of(&vt) + &(&p.drift() * &u)) - &ux.scale(&rat(1, 2));
    let d2 = &Expr::jet_of(&vx) - &u;
    PdeSystem::new("auxiliary", JetContext::potential(4), vec![(d1, vt), (d2, vx)]).expect("unit coefficients")
}

/// The system `u_x^2 = 0`, whose gradient vanishes on `u_x = 0`.
pub fn degenerate_example() -> (Vec<Expr>, JetContext) {
    (vec![Expr::jet("u", DerivIndex::new(["x"])).pow(2)], JetContext::scalar(2))
}

/// Gradient of each equation with respect to the second-order jet coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    /// Coordinate names in gradient order.
    pub coordinates: Vec<String>,
    /// One row per equation.
    pub rows: Vec<Vec<Expr>>,
    /// True when the rational-constant columns alone already have rank `m`.
    pub full_rank: bool,
}

fn second_order_coords(ctx: &JetContext) -> Vec<Coord> {
    let mut coords: Vec<Coord> = ctx.independent.iter().map(|v| Coord::var(v)).collect();
    for d in &ctx.dependent {
        coords.push(Coord::dep(d));
        for order in 1..=2 {
            for idx in DerivIndex::all_of_order(&ctx.indep_symbols(), order) {
                coords.push(Coord::Jet(Jet::new(d, idx)));
            }
        }
    }
    coords
}

/// Maximal-rank check: the Jacobian has rank `m` everywhere if the columns
/// whose entries are all rational constants already have rank `m`.
pub fn jacobian_rank_check(equations: &[Expr], ctx: &JetContext) -> JacobianReport {
    let coords = second_order_coords(ctx);
    let rows: Vec<Vec<Expr>> = equations.iter().map(|e| coords.iter().map(|c| e.diff(c)).collect()).collect();
    let m = rows.len();
    let mut constant_cols: Vec<Vec<Rational>> = Vec::new();
    for j in 0..coords.len() {
        let col: Option<Vec<Rational>> = rows.iter().map(|r| r[j].as_constant()).collect();
        if let Some(col) = col {
            constant_cols.push(col);
        }
    }
    let full_rank = m > 0 && rational_rank(&constant_cols, m) == m;
    JacobianReport { coordinates: coords.iter().map(|c| c.to_string()).collect(), rows, full_rank }
}

/// Rank of the `m × k` matrix given column-wise.
fn rational_rank(cols: &[Vec<Rational>], m: usize) -> usize {
    let mut a: Vec<Vec<Rational>> = (0..m).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    let ncols = cols.len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..m).find(|&r| !a[r][col].is_zero()) else { continue };
        a.swap(rank, piv);
        for r in 0..m {
            if r != rank && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[rank][col];
                for c in col..ncols {
                    let delta = &f * &a[rank][c];
                    a[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == m {
            break;
        }
    }
    rank
}

const MAX_ROUNDS: usize = 64;

/// Replaces every leading coordinate and its differential consequences by
/// the solved right-hand sides, preferring leading coordinates that involve
/// `t`, until no reducible jet remains.
pub fn on_shell_reduce(e: &Expr, sys: &PdeSystem) -> Result<Expr, FpeError> {
    let mut eqs: Vec<&Equation> = sys.equations.iter().collect();
    eqs.sort_by_key(|q| std::cmp::Reverse(q.lead.index.count("t")));
    let mut cur = e.clone();
    for _ in 0..MAX_ROUNDS {
        let mut b = Bindings::new();
        let mut any = false;
        for j in cur.jets() {
            let Some(q) = eqs.iter().find(|q| q.lead.dep == j.dep && j.index.contains(&q.lead.index)) else {
                continue;
            };
            let rest = j.index.minus(&q.lead.index).expect("contained");
            let order = q.rhs.jet_order().unwrap_or(0) + rest.order() + 1;
            let ctx = sys.ctx.with_max_order(order.max(sys.ctx.max_order));
            let image = total_derivative_index(&q.rhs, &rest, &ctx)?;
            b.insert_atom(Atom::Jet(j), image);
            any = true;
        }
        if !any {
            return Ok(cur);
        }
        cur = cur.substitute(&b);
    }
    Err(FpeError::NonTerminating(MAX_ROUNDS))
}

/// Substitutes a closed form `f(x, t)` for dependent variable `dep`, mapping
/// each jet `dep_J` to `∂_J f`.
pub fn evaluate_on(e: &Expr, dep: &str, f: &Expr) -> Expr {
    let mut b = Bindings::new();
    for j in e.jets() {
        if j.dep.as_ref() == dep {
            b.insert_atom(Atom::Jet(j.clone()), f.diff_index(&j.index, Coord::var));
        }
    }
    e.substitute(&b)
}

/// Conserved form `D_t T + D_x X = Δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConservedForm {
    pub density: Expr,
    pub flux: Expr,
}

/// `T = u`, `X = (a₂x+a₁)u − ½u_x`; the identity `D_t T + D_x X = Δ` is asserted.
///
/// The potential system takes `v_x = T`, `v_t = −X`. The flux with the
/// opposite sign, `−(a₂x+a₁)u + ½u_x`, does not close the identity; see
/// [`flipped_flux_defect`].
pub fn conserved_form(p: &FpeParams) -> ConservedForm {
    let u = Expr::jet("u", DerivIndex::empty());
    let ux = Expr::jet("u", DerivIndex::new(["x"]));
    let density = u.clone();
    let flux = &(&p.drift() * &u) - &ux.scale(&rat(1, 2));
    let cf = ConservedForm { density, flux };
    assert!(conserved_form_defect(&cf, p).is_zero(), "conserved form audit failed");
    cf
}

/// `D_t T + D_x X − Δ`.
pub fn conserved_form_defect(cf: &ConservedForm, p: &FpeParams) -> Expr {
    let ctx = JetContext::scalar(3);
    let dt = total_derivative(&cf.density, "t", &ctx).expect("low order");
    let dx = total_derivative(&cf.flux, "x", &ctx).expect("low order");
    &(&dt + &dx) - &fpe_delta(p).equations[0].expr
}

/// Defect of the conserved-form identity when the flux is taken as
/// `−(a₂x+a₁)u + ½u_x`, i.e. with the sign of `v_t` in the potential system.
pub fn flipped_flux_defect(p: &FpeParams) -> Expr {
    let cf = conserved_form(p);
    let flipped = ConservedForm { density: cf.density, flux: -cf.flux };
    conserved_form_defect(&flipped, p)
}

/// A formal function of `(x, t)` constrained by an evolution equation
/// `f_t = rhs`, where `rhs` involves only `f` and its `x`-derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalRule {
    pub name: Symbol,
    pub args: Vec<Coord>,
    pub rhs: Expr,
}

impl FormalRule {
    pub fn func(name: &str) -> FuncSym {
        FuncSym::new(name, vec![Coord::var("x"), Coord::var("t")])
    }

    /// Builds the rule from `equation = 0`, solved for `name_t`.
    pub fn from_equation(name: &str, equation: &Expr) -> Result<Self, FpeError> {
        let f = FormalRule::func(name);
        let lead = Atom::Func(f.with_index(DerivIndex::new(["t"])));
        let lead_e = Expr::atom(lead.clone());
        let coef = crate::expr::linear::collect(equation, |a| *a == lead, false)
            .get(&lead_e.terms()[0].0)
            .cloned()
            .unwrap_or_else(Expr::zero);
        let c = coef.as_constant().filter(|c| !c.is_zero()).ok_or_else(|| FpeError::RuleNotSolvable(name.into()))?;
        let rest = equation.drop_terms(|a| *a == lead);
        if rest.any_atom(|a| matches!(a, Atom::Func(g) if g.name.as_ref() == name && g.index.count("t") > 0)) {
            return Err(FpeError::RuleNotSolvable(name.into()));
        }
        let rhs = rest.scale(&(-c.recip()));
        Ok(FormalRule { name: sym(name), args: f.args, rhs })
    }

    /// `α_t = −a₂α − (a₂x+a₁)α_x + ½α_xx`.
    pub fn fpe(name: &str, p: &FpeParams) -> Self {
        let f = FormalRule::func(name);
        let a = |idx: &[&str]| Expr::func(f.with_index(DerivIndex::new(idx)));
        let eq = &(&(&a(&["t"]) + &(&p.a2 * &a(&[]))) + &(&p.drift() * &a(&["x"]))) - &a(&["x", "x"]).scale(&rat(1, 2));
        FormalRule::from_equation(name, &eq).expect("solvable")
    }

    /// `β_t = −(a₂x+a₁)β_x + ½β_xx`.
    pub fn potential(name: &str, p: &FpeParams) -> Self {
        let f = FormalRule::func(name);
        let b = |idx: &[&str]| Expr::func(f.with_index(DerivIndex::new(idx)));
        let eq = &(&b(&["t"]) + &(&p.drift() * &b(&["x"]))) - &b(&["x", "x"]).scale(&rat(1, 2));
        FormalRule::from_equation(name, &eq).expect("solvable")
    }
}

/// Eliminates every `t`-derivative of the rule's function, including mixed
/// ones, by formal differentiation of the rule.
pub fn reduce_modulo(e: &Expr, rule: &FormalRule) -> Result<Expr, FpeError> {
    let mut cur = e.clone();
    for _ in 0..MAX_ROUNDS {
        let mut b = Bindings::new();
        for f in cur.funcs() {
            if f.name != rule.name || f.index.count("t") == 0 {
                continue;
            }
            let rest = f.index.minus(&DerivIndex::new(["t"])).expect("has t");
            let image = rule.rhs.diff_index(&rest, Coord::var);
            b.insert_atom(Atom::Func(f), image);
        }
        if b.is_empty() {
            return Ok(cur);
        }
        cur = cur.substitute(&b);
    }
    Err(FpeError::NonTerminating(MAX_ROUNDS))
}

/// Serializable summary of a system for reports.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SystemSummary {
    pub name: String,
    pub equations: Vec<String>,
    pub leads: Vec<String>,
}

impl From<&PdeSystem> for SystemSummary {
    fn from(s: &PdeSystem) -> Self {
        SystemSummary {
            name: s.name.clone(),
            equations: s.equations.iter().map(|e| e.expr.to_string()).collect(),
            leads: s.equations.iter().map(|e| e.lead.to_string()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, SymbolTable};
    use crate::jet::total_derivative;

    fn table() -> SymbolTable {
        SymbolTable::fpe().with_deps(&["v"]).with_func("alpha", &["x", "t"]).with_func("beta", &["x", "t"])
    }

    fn p(s: &str) -> Expr {
        parse(s, &table()).unwrap()
    }

    #[test]
    fn delta_form() {
        let sys = fpe_delta(&FpeParams::symbolic());
        assert_eq!(sys.equations[0].expr, p("u_t + a2*u + (a2*x+a1)*u_x - 1/2*u_xx"));
        assert_eq!(sys.equations[0].rhs, p("-a2*u - (a2*x+a1)*u_x + 1/2*u_xx"));
    }

    #[test]
    fn simple_solutions() {
        let delta = &fpe_delta(&FpeParams::symbolic()).equations[0].expr;
        assert!(evaluate_on(delta, "u", &p("exp(-a2*t)")).is_zero());
        assert_eq!(evaluate_on(delta, "u", &Expr::one()), p("a2"));
    }

    #[test]
    fn numeric_parameters() {
        assert_eq!(FpeParams::ints(1, 0), Err(FpeError::ZeroA2));
        let q = FpeParams::ints(1, 2).unwrap();
        assert_eq!(q.bind(&p("a2*x + a1")), p("2*x + 1"));
        assert_eq!(q.values(), Some((1.0, 2.0)));
    }

    #[test]
    fn jacobian_of_fpe() {
        let sys = fpe_delta(&FpeParams::symbolic());
        let r = jacobian_rank_check(&sys.exprs(), &sys.ctx);
        assert_eq!(r.coordinates, ["x", "t", "u", "u_x", "u_t", "u_xx", "u_xt", "u_tt"]);
        let expected = ["a2*u_x", "0", "a2", "a1 + a2*x", "1", "-1/2", "0", "0"];
        for (e, s) in r.rows[0].iter().zip(expected) {
            assert_eq!(e, &p(s));
        }
        assert!(r.full_rank);
        let (deg, ctx) = degenerate_example();
        assert!(!jacobian_rank_check(&deg, &ctx).full_rank);
        let aux = auxiliary_system(&FpeParams::symbolic());
        assert!(jacobian_rank_check(&aux.exprs(), &aux.ctx).full_rank);
    }

    #[test]
    fn on_shell() {
        let sys = fpe_delta(&FpeParams::symbolic());
        assert_eq!(on_shell_reduce(&p("u_t"), &sys).unwrap(), sys.equations[0].rhs);
        assert_eq!(on_shell_reduce(&p("u_x"), &sys).unwrap(), p("u_x"));
        let r = on_shell_reduce(&p("u_tt + u_xt"), &sys).unwrap();
        assert!(r.jets().iter().all(|j| j.index.count("t") == 0));
        assert_eq!(on_shell_reduce(&r, &sys).unwrap(), r);
        let aux = auxiliary_system(&FpeParams::symbolic());
        assert_eq!(on_shell_reduce(&p("v_t + v_x"), &aux).unwrap(), p("-(a2*x+a1)*u + 1/2*u_x + u"));
    }

    #[test]
    fn potential_system_consequence() {
        let params = FpeParams::symbolic();
        let aux = auxiliary_system(&params);
        let ctx = JetContext::potential(3);
        let d1 = total_derivative(&aux.equations[0].expr, "x", &ctx).unwrap();
        let d2 = total_derivative(&aux.equations[1].expr, "t", &ctx).unwrap();
        let consequence = on_shell_reduce(&(&d1 - &d2), &aux).unwrap();
        assert_eq!(consequence, fpe_delta(&params).equations[0].expr);
        assert!(evaluate_on(&aux.equations[1].expr, "u", &p("v_x")).is_zero());
    }

    #[test]
    fn conserved() {
        let params = FpeParams::symbolic();
        let cf = conserved_form(&params);
        assert_eq!(cf.density, p("u"));
        assert_eq!(evaluate_on(&cf.flux, "u", &p("exp(-a2*t)")), p("(a2*x+a1)*exp(-a2*t)"));
        assert!(evaluate_on(&cf.density, "u", &Expr::zero()).is_zero());
        // v_t = -X in the potential system
        let aux = auxiliary_system(&params);
        assert_eq!(aux.equations[0].rhs, -cf.flux.clone());
        assert_eq!(flipped_flux_defect(&params), p("-2*a2*u - 2*(a2*x+a1)*u_x + u_xx"));
    }

    #[test]
    fn formal_reduction() {
        let params = FpeParams::symbolic();
        let rule = FormalRule::fpe("alpha", &params);
        assert_eq!(reduce_modulo(&p("alpha_t(x,t)"), &rule).unwrap(), p("-a2*alpha(x,t) - (a2*x+a1)*alpha_x(x,t) + 1/2*alpha_xx(x,t)"));
        assert_eq!(reduce_modulo(&p("alpha_x(x,t)"), &rule).unwrap(), p("alpha_x(x,t)"));
        let tt = reduce_modulo(&p("alpha_xtt(x,t)"), &rule).unwrap();
        assert!(tt.funcs().iter().all(|f| f.index.count("t") == 0));
        let beta = FormalRule::potential("beta", &params);
        assert_eq!(beta.rhs, p("-(a2*x+a1)*beta_x(x,t) + 1/2*beta_xx(x,t)"));
        assert!(FormalRule::from_equation("alpha", &p("alpha_x(x,t)")).is_err());
    }

    #[test]
    fn leading_must_be_invertible() {
        let e = p("x*u_t + u");
        let r = PdeSystem::new("bad", JetContext::scalar(2), vec![(e, Jet::new("u", DerivIndex::new(["t"])))]);
        assert!(matches!(r, Err(FpeError::LeadingNotLinear { .. })));
    }
}
