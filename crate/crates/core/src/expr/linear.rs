//! Coefficient collection and linear solving over the parameter ring.

use std::collections::{BTreeMap, BTreeSet};

use super::{Atom, Bindings, Coord, Expr, Monomial, Symbol, TermAcc};

/// Groups the terms of `e` by the part of each monomial made of atoms
/// selected by `is_key` (plus the exponential factor when `exp_in_key`).
/// Returns key monomial → coefficient expression.
pub fn collect<F: Fn(&Atom) -> bool>(e: &Expr, is_key: F, exp_in_key: bool) -> BTreeMap<Monomial, Expr> {
    let mut groups: BTreeMap<Monomial, TermAcc> = BTreeMap::new();
    for (m, c) in e.terms() {
        let (key, rest) = m.split(&is_key, exp_in_key);
        groups.entry(key).or_default().add_term(rest, c.clone());
    }
    groups
        .into_iter()
        .map(|(k, acc)| (k, acc.finish()))
        .filter(|(_, v)| !v.is_zero())
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinearError {
    #[error("inconsistent linear system: residual equation {0} = 0")]
    Inconsistent(Expr),
    #[error("no invertible pivot among remaining equations ({} left)", .0.len())]
    NoPivot(Vec<Expr>),
}

/// Solution of a linear system: determined unknowns and the ones left free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolution {
    pub values: BTreeMap<Symbol, Expr>,
    pub free: Vec<Symbol>,
}

impl LinearSolution {
    /// Value of `name`, with free unknowns set to zero.
    pub fn value(&self, name: &str) -> Expr {
        self.values.get(name).cloned().unwrap_or_else(Expr::zero)
    }
}

/// Solves `eqs = 0` for the parameter unknowns `unknowns`, which must appear
/// linearly. Every non-parameter atom and every exponential is treated as
/// an independent function, so each equation splits into one linear
/// equation per distinct monomial in those atoms; the remaining parameters
/// form the coefficient ring. Pivots are restricted to single-term
/// coefficients, which are always exactly invertible.
pub fn solve_linear(eqs: &[Expr], unknowns: &[Symbol]) -> Result<LinearSolution, LinearError> {
    let unknown_set: BTreeSet<Symbol> = unknowns.iter().cloned().collect();
    let mut rows: Vec<Expr> = Vec::new();
    for e in eqs {
        rows.extend(collect(e, |a| !matches!(a, Atom::Param(_)), true).into_values());
    }
    let is_unknown = |a: &Atom| matches!(a, Atom::Param(p) if unknown_set.contains(p));
    let mut values: Vec<(Symbol, Expr)> = Vec::new();
    loop {
        rows.retain(|r| !r.is_zero());
        let mut pivot = None;
        'search: for (ri, r) in rows.iter().enumerate() {
            for u in unknowns {
                let coef = r.diff(&Coord::Param(u.clone()));
                if coef.is_single_term() && !coef.any_atom(is_unknown) {
                    pivot = Some((ri, u.clone(), coef));
                    break 'search;
                }
            }
        }
        let Some((ri, u, coef)) = pivot else { break };
        let row = rows.swap_remove(ri);
        let u_expr = Expr::param(&u);
        let rest = &row - &(&coef * &u_expr);
        let value = -(&rest * &coef.recip());
        let b = Bindings::new().param(&u, value.clone());
        for r in rows.iter_mut() {
            *r = r.substitute(&b);
        }
        for (_, v) in values.iter_mut() {
            *v = v.substitute(&b);
        }
        values.push((u, value));
    }
    if let Some(r) = rows.iter().find(|r| !r.any_atom(is_unknown)) {
        return Err(LinearError::Inconsistent(r.clone()));
    }
    if !rows.is_empty() {
        return Err(LinearError::NoPivot(rows));
    }
    let values: BTreeMap<Symbol, Expr> = values.into_iter().collect();
    let free = unknowns.iter().filter(|u| !values.contains_key(*u)).cloned().collect();
    Ok(LinearSolution { values, free })
}

/// Coefficient of `key` in `e` when collected by non-parameter atoms.
pub fn coefficient_of(e: &Expr, key: &Monomial) -> Expr {
    collect(e, |a| !matches!(a, Atom::Param(_)), true).remove(key).unwrap_or_else(Expr::zero)
}

#[cfg(test)]
mod tests {
    use super::super::sym;
    use super::*;

    #[test]
    fn collect_by_powers_of_x() {
        let x = Expr::var("x");
        let a2 = Expr::param("a2");
        let e = &(&a2 * &x.pow(2)) + &(&x.pow(2) + &Expr::int(3));
        let groups = collect(&e, |a| matches!(a, Atom::Var(_)), false);
        assert_eq!(groups.len(), 2);
        let x2 = Monomial::from_atom(Atom::Var(sym("x")), 2);
        assert_eq!(groups[&x2], &a2 + &Expr::one());
    }

    #[test]
    fn solves_with_parameter_coefficients() {
        // c1*a2*x + c2*exp(t) - 2*a2^2*x + exp(t) = 0  => c1 = 2*a2, c2 = -1
        let x = Expr::var("x");
        let a2 = Expr::param("a2");
        let et = Expr::exp(Expr::var("t"));
        let c1 = Expr::param("c1");
        let c2 = Expr::param("c2");
        let e = &(&(&c1 * &a2) * &x) + &(&(&c2 * &et) - &(&(&a2.pow(2) * &x).scale(&super::super::int(2)) - &et));
        let s = solve_linear(&[e], &[sym("c1"), sym("c2"), sym("c3")]).unwrap();
        assert_eq!(s.value("c1"), a2.scale(&super::super::int(2)));
        assert_eq!(s.value("c2"), -Expr::one());
        assert_eq!(s.free, vec![sym("c3")]);
    }

    #[test]
    fn detects_inconsistency() {
        let x = Expr::var("x");
        let c1 = Expr::param("c1");
        let e = &(&c1 * &x) + &x.pow(2);
        assert!(matches!(solve_linear(&[e], &[sym("c1")]), Err(LinearError::Inconsistent(_))));
    }
}
