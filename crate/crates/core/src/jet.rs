//! Jet-space bookkeeping: total derivatives, vector fields, prolongation and brackets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{sym, Bindings, Coord, DerivIndex, Expr, Jet, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("jet order {order} reaches the context maximum {max}")]
    OrderOverflow { order: usize, max: usize },
    #[error("expression of jet order {order} exceeds prolongation order {max}")]
    OrderMismatch { order: usize, max: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("coefficient of {coord} depends on derivative coordinates")]
    NotBaseField { coord: String },
}

/// Independent and dependent variables with a maximum jet order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JetContext {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    pub max_order: usize,
}

impl JetContext {
    pub fn new(independent: &[&str], dependent: &[&str], max_order: usize) -> Result<Self, JetError> {
        let mut seen = BTreeSet::new();
        for n in independent.iter().chain(dependent) {
            if !seen.insert(*n) {
                return Err(JetError::DuplicateName(n.to_string()));
            }
        }
        Ok(JetContext {
            independent: independent.iter().map(|s| s.to_string()).collect(),
            dependent: dependent.iter().map(|s| s.to_string()).collect(),
            max_order,
        })
    }

    /// `(x, t; u)`.
    pub fn scalar(max_order: usize) -> Self {
        JetContext::new(&["x", "t"], &["u"], max_order).expect("distinct names")
    }

    /// `(x, t; u, v)`.
    pub fn potential(max_order: usize) -> Self {
        JetContext::new(&["x", "t"], &["u", "v"], max_order).expect("distinct names")
    }

    pub fn with_max_order(&self, max_order: usize) -> Self {
        JetContext { max_order, ..self.clone() }
    }

    pub fn indep_symbols(&self) -> Vec<Symbol> {
        self.independent.iter().map(|s| sym(s)).collect()
    }

    /// Base coordinates: independent variables followed by dependent variables.
    pub fn base_coords(&self) -> Vec<Coord> {
        self.independent
            .iter()
            .map(|v| Coord::var(v))
            .chain(self.dependent.iter().map(|d| Coord::dep(d)))
            .collect()
    }

    /// Every jet coordinate of order `1..=order`.
    pub fn jets_of_order(&self, order: usize) -> Vec<Jet> {
        let vars = self.indep_symbols();
        let mut out = Vec::new();
        for d in &self.dependent {
            for idx in DerivIndex::all_of_order(&vars, order) {
                out.push(Jet::new(d, idx));
            }
        }
        out
    }

    fn check_indep(&self, iv: &str) -> Result<(), JetError> {
        if self.independent.iter().any(|v| v == iv) {
            Ok(())
        } else {
            Err(JetError::UnknownVariable(iv.to_string()))
        }
    }
}

/// Total derivative `D_iv e = ∂e/∂iv + Σ u_{J,iv} ∂e/∂u_J`.
pub fn total_derivative(e: &Expr, iv: &str, ctx: &JetContext) -> Result<Expr, JetError> {
    ctx.check_indep(iv)?;
    if let Some(order) = e.jet_order() {
        if order >= ctx.max_order {
            return Err(JetError::OrderOverflow { order, max: ctx.max_order });
        }
    }
    let mut out = e.diff_var(iv);
    for j in e.jets() {
        let d = e.diff(&Coord::Jet(j.clone()));
        if !d.is_zero() {
            out = &out + &(&Expr::jet_of(&j.extend(iv)) * &d);
        }
    }
    Ok(out)
}

/// Repeated total derivative along a multi-index.
pub fn total_derivative_index(e: &Expr, index: &DerivIndex, ctx: &JetContext) -> Result<Expr, JetError> {
    let mut cur = e.clone();
    for v in index.vars() {
        cur = total_derivative(&cur, v, ctx)?;
    }
    Ok(cur)
}

/// An infinitesimal generator `Σ ξ^i ∂_{x_i} + Σ η^α ∂_{u^α}` on the base space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub indep: Vec<(Symbol, Expr)>,
    pub dep: Vec<(Symbol, Expr)>,
}

impl VectorField {
    /// The zero field over the coordinates of `ctx`.
    pub fn zero(ctx: &JetContext) -> Self {
        VectorField {
            indep: ctx.independent.iter().map(|v| (sym(v), Expr::zero())).collect(),
            dep: ctx.dependent.iter().map(|d| (sym(d), Expr::zero())).collect(),
        }
    }

    pub fn with(mut self, coord: &str, coefficient: Expr) -> Self {
        if let Some(slot) = self.indep.iter_mut().chain(self.dep.iter_mut()).find(|(n, _)| n.as_ref() == coord) {
            slot.1 = coefficient;
        } else {
            panic!("coordinate `{coord}` not in vector field");
        }
        self
    }

    /// Coefficient of `∂coord` (zero if absent).
    pub fn coefficient(&self, coord: &str) -> Expr {
        self.indep
            .iter()
            .chain(self.dep.iter())
            .find(|(n, _)| n.as_ref() == coord)
            .map(|(_, e)| e.clone())
            .unwrap_or_else(Expr::zero)
    }

    pub fn components(&self) -> impl Iterator<Item = &(Symbol, Expr)> {
        self.indep.iter().chain(self.dep.iter())
    }

    pub fn is_zero(&self) -> bool {
        self.components().all(|(_, e)| e.is_zero())
    }

    fn map<F: Fn(&Expr) -> Expr>(&self, f: F) -> Self {
        VectorField {
            indep: self.indep.iter().map(|(n, e)| (n.clone(), f(e))).collect(),
            dep: self.dep.iter().map(|(n, e)| (n.clone(), f(e))).collect(),
        }
    }

    fn zip<F: Fn(&Expr, &Expr) -> Expr>(&self, other: &Self, f: F) -> Self {
        VectorField {
            indep: self.indep.iter().map(|(n, e)| (n.clone(), f(e, &other.coefficient(n)))).collect(),
            dep: self.dep.iter().map(|(n, e)| (n.clone(), f(e, &other.coefficient(n)))).collect(),
        }
    }

    pub fn scale(&self, c: &Expr) -> Self {
        self.map(|e| e * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn substitute(&self, b: &Bindings) -> Self {
        self.map(|e| e.substitute(b))
    }

    /// Same field with the `∂coord` component removed.
    pub fn without(&self, coord: &str) -> Self {
        VectorField {
            indep: self.indep.iter().filter(|(n, _)| n.as_ref() != coord).cloned().collect(),
            dep: self.dep.iter().filter(|(n, _)| n.as_ref() != coord).cloned().collect(),
        }
    }

    /// Directional derivative of a base-space function.
    pub fn apply_base(&self, e: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (n, c) in &self.indep {
            if !c.is_zero() {
                out = &out + &(c * &e.diff_var(n));
            }
        }
        for (n, c) in &self.dep {
            if !c.is_zero() {
                out = &out + &(c * &e.diff(&Coord::dep(n)));
            }
        }
        out
    }

    /// Errors if any coefficient involves a jet coordinate of order ≥ 1.
    pub fn validate(&self) -> Result<(), JetError> {
        for (n, e) in self.components() {
            if e.jets().iter().any(|j| j.order() > 0) {
                return Err(JetError::NotBaseField { coord: n.to_string() });
            }
        }
        Ok(())
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, e) in self.components() {
            if e.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})*d_{}", e, n)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Characteristic `Q^α = η^α − Σ ξ^i u^α_i`, one per dependent variable.
pub fn characteristic(v: &VectorField) -> Vec<(Symbol, Expr)> {
    v.dep
        .iter()
        .map(|(d, eta)| {
            let mut q = eta.clone();
            for (x, xi) in &v.indep {
                q = &q - &(xi * &Expr::jet(d, DerivIndex::new([x.as_ref()])));
            }
            (d.clone(), q)
        })
        .collect()
}

/// The prolongation of a vector field to jet coordinates up to `order`.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    pub base: VectorField,
    pub order: usize,
    coefficients: BTreeMap<Jet, Expr>,
}

impl ProlongedField {
    /// Coefficient of `∂/∂u_J` (order 0 gives the base η).
    pub fn coefficient(&self, j: &Jet) -> Option<&Expr> {
        self.coefficients.get(j)
    }

    pub fn coefficients(&self) -> &BTreeMap<Jet, Expr> {
        &self.coefficients
    }
}

/// `η_J = D_J Q + Σ ξ^i u_{J,i}` for every multi-index of order ≤ `n`.
pub fn prolong(v: &VectorField, n: usize, ctx: &JetContext) -> Result<ProlongedField, JetError> {
    v.validate()?;
    let inner = ctx.with_max_order(ctx.max_order.max(n + 1));
    let mut coefficients = BTreeMap::new();
    for (d, q) in characteristic(v) {
        let eta = v.coefficient(&d);
        coefficients.insert(Jet::base(&d), eta);
        // D_J Q keyed by J, built from J minus its last variable.
        let mut dq: BTreeMap<DerivIndex, Expr> = BTreeMap::new();
        dq.insert(DerivIndex::empty(), q);
        for order in 1..=n {
            for idx in DerivIndex::all_of_order(&ctx.indep_symbols(), order) {
                let last = idx.vars().last().expect("order ≥ 1").clone();
                let parent = idx.minus(&DerivIndex::new([last.as_ref()])).expect("contained");
                let d_q = total_derivative(&dq[&parent], &last, &inner)?;
                let mut c = d_q.clone();
                for (x, xi) in &v.indep {
                    if !xi.is_zero() {
                        c = &c + &(xi * &Expr::jet(&d, idx.with(x)));
                    }
                }
                dq.insert(idx.clone(), d_q);
                coefficients.insert(Jet::new(&d, idx), c);
            }
        }
    }
    Ok(ProlongedField { base: v.clone(), order: n, coefficients })
}

/// `pr V (e) = Σ ξ^i ∂e/∂x_i + Σ η_J ∂e/∂u_J`.
pub fn apply(p: &ProlongedField, e: &Expr) -> Result<Expr, JetError> {
    if let Some(order) = e.jet_order() {
        if order > p.order {
            return Err(JetError::OrderMismatch { order, max: p.order });
        }
    }
    let mut out = Expr::zero();
    for (x, xi) in &p.base.indep {
        if !xi.is_zero() {
            out = &out + &(xi * &e.diff_var(x));
        }
    }
    for j in e.jets() {
        let c = &p.coefficients[&j];
        if !c.is_zero() {
            out = &out + &(c * &e.diff(&Coord::Jet(j)));
        }
    }
    Ok(out)
}

/// `[V, W]` with components `V(W^c) − W(V^c)`.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> VectorField {
    let comp = |n: &Symbol| &v.apply_base(&w.coefficient(n)) - &w.apply_base(&v.coefficient(n));
    VectorField {
        indep: v.indep.iter().map(|(n, _)| (n.clone(), comp(n))).collect(),
        dep: v.dep.iter().map(|(n, _)| (n.clone(), comp(n))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, SymbolTable};

    fn ctx() -> JetContext {
        JetContext::scalar(3)
    }

    fn table() -> SymbolTable {
        SymbolTable::fpe()
            .with_func("alpha", &["x", "t"])
            .with_func("xi", &["x", "t", "u"])
            .with_func("tau", &["x", "t", "u"])
            .with_func("eta", &["x", "t", "u"])
    }

    fn p(s: &str) -> Expr {
        parse(s, &table()).unwrap()
    }

    fn field(xi: &str, tau: &str, eta: &str) -> VectorField {
        VectorField::zero(&ctx()).with("x", p(xi)).with("t", p(tau)).with("u", p(eta))
    }

    #[test]
    fn total_derivatives() {
        let c = ctx();
        assert_eq!(total_derivative(&p("u"), "x", &c).unwrap(), p("u_x"));
        assert_eq!(total_derivative(&p("x*u_x"), "x", &c).unwrap(), p("u_x + x*u_xx"));
        assert_eq!(total_derivative(&p("alpha(x,t)"), "t", &c).unwrap(), p("alpha_t(x,t)"));
        assert!(matches!(total_derivative(&p("u_xxx"), "x", &c), Err(JetError::OrderOverflow { .. })));
        assert!(matches!(total_derivative(&p("u"), "y", &c), Err(JetError::UnknownVariable(_))));
    }

    #[test]
    fn chain_rule_through_dependent_argument() {
        let d = total_derivative(&p("xi(x,t,u)"), "x", &ctx()).unwrap();
        assert_eq!(d, p("xi_x(x,t,u) + u_x*xi_u(x,t,u)"));
    }

    #[test]
    fn characteristics() {
        let q = characteristic(&field("0", "0", "u"));
        assert_eq!(q[0].1, p("u"));
        let q = characteristic(&field("exp(a2*t)", "0", "0"));
        assert_eq!(q[0].1, p("-exp(a2*t)*u_x"));
        let q = characteristic(&field("0", "1", "0"));
        assert_eq!(q[0].1, p("-u_t"));
    }

    /// Second-order prolongation through the classical recursive formulas,
    /// η^{J,i} = D_i η^J − Σ_k u_{J,k} D_i ξ^k, independent of the characteristic.
    fn classical(v: &VectorField) -> BTreeMap<Jet, Expr> {
        let c = JetContext::scalar(4);
        let d = |e: &Expr, i: &str| total_derivative(e, i, &c).unwrap();
        let xi = v.coefficient("x");
        let tau = v.coefficient("t");
        let eta = v.coefficient("u");
        let u = |s: &str| Expr::jet("u", DerivIndex::new(s.chars().map(|c| c.to_string())));
        let ex = &(&d(&eta, "x") - &(&u("x") * &d(&xi, "x"))) - &(&u("t") * &d(&tau, "x"));
        let et = &(&d(&eta, "t") - &(&u("x") * &d(&xi, "t"))) - &(&u("t") * &d(&tau, "t"));
        let exx = &(&d(&ex, "x") - &(&u("xx") * &d(&xi, "x"))) - &(&u("xt") * &d(&tau, "x"));
        let ext = &(&d(&ex, "t") - &(&u("xx") * &d(&xi, "t"))) - &(&u("xt") * &d(&tau, "t"));
        let ett = &(&d(&et, "t") - &(&u("xt") * &d(&xi, "t"))) - &(&u("tt") * &d(&tau, "t"));
        let mut m = BTreeMap::new();
        for (k, e) in [("x", ex), ("t", et), ("xx", exx), ("xt", ext), ("tt", ett)] {
            m.insert(Jet::new("u", DerivIndex::new(k.chars().map(|c| c.to_string()))), e);
        }
        m
    }

    #[test]
    fn prolongation_matches_classical_formulas() {
        let fields = [
            field("xi(x,t,u)", "tau(x,t,u)", "eta(x,t,u)"),
            field("exp(a2*t)", "0", "0"),
            field("1/(2*a2)*exp(-a2*t)", "0", "(a2*x+a1)*u/a2*exp(-a2*t)"),
            field("x*u", "t^2", "u^2*x"),
        ];
        for v in &fields {
            let pr = prolong(v, 2, &ctx()).unwrap();
            for (j, e) in classical(v) {
                assert_eq!(pr.coefficient(&j).unwrap(), &e, "coefficient of {j} for {v}");
            }
        }
    }

    #[test]
    fn translation_prolongs_trivially() {
        let pr = prolong(&field("0", "1", "0"), 2, &ctx()).unwrap();
        assert!(pr.coefficients().values().all(|e| e.is_zero()));
        assert!(apply(&pr, &p("x^2")).unwrap().is_zero());
    }

    #[test]
    fn scaling_prolongs_to_identity_on_jets() {
        let pr = prolong(&field("0", "0", "u"), 2, &ctx()).unwrap();
        for j in ["x", "xx", "xt"] {
            let jet = Jet::new("u", DerivIndex::new(j.chars().map(|c| c.to_string())));
            assert_eq!(pr.coefficient(&jet).unwrap(), &Expr::jet_of(&jet));
        }
        assert!(matches!(apply(&pr, &p("u_xxx")), Err(JetError::OrderMismatch { .. })));
    }

    #[test]
    fn brackets() {
        let v = field("x", "t^2", "u*x");
        assert!(lie_bracket(&v, &v).is_zero());
        let a = field("1", "0", "0");
        let b = field("x", "0", "0");
        assert_eq!(lie_bracket(&a, &b), field("1", "0", "0"));
        let va = field("0", "0", "alpha(x,t)");
        let v1 = field("exp(a2*t)", "0", "0");
        assert_eq!(lie_bracket(&v1, &va), field("0", "0", "exp(a2*t)*alpha_x(x,t)"));
    }

    #[test]
    fn non_base_fields_are_rejected() {
        let v = VectorField::zero(&ctx()).with("u", p("u_x"));
        assert!(prolong(&v, 2, &ctx()).is_err());
    }
}
