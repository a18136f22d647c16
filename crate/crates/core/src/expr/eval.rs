use std::collections::HashMap;

use num_traits::ToPrimitive;

use super::{Atom, Expr, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("formal function `{0}` must be substituted before evaluation")]
    FormalFunction(String),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Name under which an atom is looked up in an evaluation point.
pub(crate) fn atom_key(a: &Atom) -> Option<String> {
    match a {
        Atom::Param(_) | Atom::Var(_) | Atom::Jet(_) => Some(a.to_string()),
        _ => None,
    }
}

impl Expr {
    /// Floating-point evaluation; every parameter, variable and jet must be bound.
    pub fn eval(&self, point: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let v = self.eval_raw(point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_raw(&self, point: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for (m, c) in self.terms() {
            let mut prod = rational_to_f64(c);
            for (a, k) in m.factors() {
                let base = match a {
                    Atom::Func(f) => return Err(EvalError::FormalFunction(f.name.to_string())),
                    Atom::Recip(s) => 1.0 / s.eval_raw(point)?,
                    _ => {
                        let key = atom_key(a).expect("plain atom");
                        *point.get(&key).ok_or(EvalError::Unbound(key))?
                    }
                };
                prod *= base.powi(*k);
            }
            if let Some(arg) = m.exp_arg() {
                prod *= arg.eval_raw(point)?.exp();
            }
            sum += prod;
        }
        Ok(sum)
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Index(usize),
    Recip(CompiledExpr),
}

#[derive(Clone, Debug)]
struct CompiledTerm {
    coef: f64,
    factors: Vec<(Slot, i32)>,
    exp: Option<CompiledExpr>,
}

/// An expression lowered to slot-indexed form for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    terms: Vec<CompiledTerm>,
}

impl CompiledExpr {
    /// `slots` names the symbols in the order their values will be passed to [`CompiledExpr::eval`].
    pub fn new(e: &Expr, slots: &[&str]) -> Result<Self, EvalError> {
        let mut terms = Vec::with_capacity(e.len());
        for (m, c) in e.terms() {
            let mut factors = Vec::new();
            for (a, k) in m.factors() {
                let slot = match a {
                    Atom::Func(f) => return Err(EvalError::FormalFunction(f.name.to_string())),
                    Atom::Recip(s) => Slot::Recip(CompiledExpr::new(s, slots)?),
                    _ => {
                        let key = atom_key(a).expect("plain atom");
                        let idx = slots.iter().position(|s| *s == key).ok_or(EvalError::Unbound(key))?;
                        Slot::Index(idx)
                    }
                };
                factors.push((slot, *k));
            }
            let exp = match m.exp_arg() {
                Some(arg) => Some(CompiledExpr::new(arg, slots)?),
                None => None,
            };
            terms.push(CompiledTerm { coef: rational_to_f64(c), factors, exp });
        }
        Ok(CompiledExpr { terms })
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        for t in &self.terms {
            let mut prod = t.coef;
            for (s, k) in &t.factors {
                let base = match s {
                    Slot::Index(i) => values[*i],
                    Slot::Recip(c) => 1.0 / c.eval(values),
                };
                prod *= base.powi(*k);
            }
            if let Some(arg) = &t.exp {
                prod *= arg.eval(values).exp();
            }
            sum += prod;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn exp_at_origin() {
        let e = Expr::exp(-(&Expr::param("a2") * &Expr::var("t")));
        assert_eq!(e.eval(&point(&[("a2", 1.0), ("t", 0.0)])).unwrap(), 1.0);
        let d = e.diff_var("t");
        assert_eq!(d.eval(&point(&[("a2", 2.0), ("t", 0.0)])).unwrap(), -2.0);
    }

    #[test]
    fn unbound_and_formal_are_errors() {
        let e = Expr::var("x");
        assert_eq!(e.eval(&HashMap::new()), Err(EvalError::Unbound("x".into())));
        let f = Expr::func(super::super::FuncSym::new("alpha", vec![super::super::Coord::var("x")]));
        assert!(matches!(f.eval(&point(&[("x", 1.0)])), Err(EvalError::FormalFunction(_))));
    }

    #[test]
    fn overflow_is_reported() {
        let e = Expr::exp(Expr::var("x").pow(2));
        assert_eq!(e.eval(&point(&[("x", 100.0)])), Err(EvalError::NonFinite));
    }

    #[test]
    fn compiled_matches_interpreted() {
        let x = Expr::var("x");
        let t = Expr::var("t");
        let e = &(&x.pow(3) * &Expr::exp(-(&t * &Expr::int(2)))) + &(&x + &Expr::one()).recip();
        let c = CompiledExpr::new(&e, &["x", "t"]).unwrap();
        let p = point(&[("x", 0.7), ("t", 0.3)]);
        assert!((c.eval(&[0.7, 0.3]) - e.eval(&p).unwrap()).abs() < 1e-14);
    }
}
