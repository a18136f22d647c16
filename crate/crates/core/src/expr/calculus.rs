use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{int, Atom, Coord, DerivIndex, Expr, FuncSym, Monomial, Rational, Symbol, TermAcc};

impl Expr {
    /// Partial derivative. Distinct jet coordinates are independent symbols;
    /// formal functions differentiate by extending their multi-index when the
    /// coordinate is one of their arguments.
    pub fn diff(&self, c: &Coord) -> Expr {
        let mut acc = TermAcc::default();
        for (m, coef) in self.terms() {
            for (i, (a, k)) in m.factors().iter().enumerate() {
                let da = diff_atom(a, c);
                if da.is_zero() {
                    continue;
                }
                let scale = coef * int(*k as i64);
                let rest = m.lowered(i);
                if let Some(one) = da.as_constant() {
                    acc.add_term(rest, scale * one);
                } else {
                    acc.add_expr(&da.mul_monomial(&rest), &scale);
                }
            }
            if let Some(arg) = m.exp_arg() {
                let darg = arg.diff(c);
                if !darg.is_zero() {
                    acc.add_expr(&darg.mul_monomial(m), coef);
                }
            }
        }
        acc.finish()
    }

    pub fn diff_var(&self, name: &str) -> Expr {
        self.diff(&Coord::var(name))
    }

    /// Repeated partial derivative along every variable of a multi-index,
    /// resolving each name through `resolve`.
    pub fn diff_index<F: Fn(&str) -> Coord>(&self, index: &DerivIndex, resolve: F) -> Expr {
        index.vars().iter().fold(self.clone(), |e, v| e.diff(&resolve(v)))
    }

    /// Simultaneous substitution followed by canonicalization.
    pub fn substitute(&self, b: &Bindings) -> Expr {
        if b.is_empty() {
            return self.clone();
        }
        let mut cache: HashMap<Atom, Expr> = HashMap::new();
        self.substitute_inner(b, &mut cache)
    }

    fn substitute_inner(&self, b: &Bindings, cache: &mut HashMap<Atom, Expr>) -> Expr {
        let mut acc = TermAcc::default();
        for (m, coef) in self.terms() {
            let mut untouched: Vec<(Atom, i32)> = Vec::new();
            let mut product = Expr::one();
            for (a, k) in m.factors() {
                let image = match cache.get(a) {
                    Some(e) => Some(e.clone()),
                    None => {
                        let img = b.image(a, cache);
                        if let Some(e) = &img {
                            cache.insert(a.clone(), e.clone());
                        }
                        img
                    }
                };
                match image {
                    Some(e) => product = &product * &e.pow(*k),
                    None => untouched.push((a.clone(), *k)),
                }
            }
            let exp = m.exp_arg().map(|arg| arg.substitute_inner(b, cache));
            let rest = Monomial::from_parts(untouched, exp);
            acc.add_expr(&product.mul_monomial(&rest), coef);
        }
        acc.finish()
    }

    /// Applies bindings repeatedly until no bound key remains, failing after
    /// `max_depth` rounds.
    pub fn rewrite(&self, b: &Bindings, max_depth: usize) -> Result<Expr, CyclicSubstitution> {
        let mut cur = self.clone();
        for _ in 0..max_depth {
            if !b.mentions(&cur) {
                return Ok(cur);
            }
            cur = cur.substitute(b);
        }
        if b.mentions(&cur) {
            Err(CyclicSubstitution { depth: max_depth })
        } else {
            Ok(cur)
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("substitution did not terminate after {depth} rounds (cyclic binding)")]
pub struct CyclicSubstitution {
    pub depth: usize,
}

fn diff_atom(a: &Atom, c: &Coord) -> Expr {
    match (a, c) {
        (Atom::Param(p), Coord::Param(q)) if p == q => Expr::one(),
        (Atom::Var(v), Coord::Var(w)) if v == w => Expr::one(),
        (Atom::Jet(j), Coord::Jet(k)) if j == k => Expr::one(),
        (Atom::Func(f), _) => match c.base_name() {
            Some(name) if f.args.iter().any(|arg| arg == c) => {
                Expr::func(f.with_index(f.index.with(name)))
            }
            _ => Expr::zero(),
        },
        (Atom::Recip(s), _) => {
            let ds = s.diff(c);
            if ds.is_zero() {
                return Expr::zero();
            }
            let r2 = Expr::from_term(Monomial::from_atom(a.clone(), 2), Rational::one());
            -(&ds * &r2)
        }
        _ => Expr::zero(),
    }
}

/// A formal function replaced by a closed form in its argument coordinates.
/// Derivatives of the formal symbol map to derivatives of the body.
#[derive(Clone, Debug)]
pub struct FuncBinding {
    pub body: Expr,
}

/// Substitution table: exact atoms, or formal function names (all derivatives).
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    atoms: HashMap<Atom, Expr>,
    funcs: HashMap<Symbol, FuncBinding>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.funcs.is_empty()
    }

    pub fn atom(mut self, a: Atom, value: Expr) -> Self {
        self.atoms.insert(a, value);
        self
    }

    pub fn insert_atom(&mut self, a: Atom, value: Expr) {
        self.atoms.insert(a, value);
    }

    pub fn param(self, name: &str, value: Expr) -> Self {
        self.atom(Atom::Param(super::sym(name)), value)
    }

    pub fn var(self, name: &str, value: Expr) -> Self {
        self.atom(Atom::Var(super::sym(name)), value)
    }

    pub fn coord(self, c: &Coord, value: Expr) -> Self {
        let a = match c {
            Coord::Param(p) => Atom::Param(p.clone()),
            Coord::Var(v) => Atom::Var(v.clone()),
            Coord::Jet(j) => Atom::Jet(j.clone()),
        };
        self.atom(a, value)
    }

    /// Binds formal function `name`; `body` is written in the function's argument coordinates.
    pub fn func(mut self, name: &str, body: Expr) -> Self {
        self.funcs.insert(super::sym(name), FuncBinding { body });
        self
    }

    pub fn insert_func(&mut self, name: &str, body: Expr) {
        self.funcs.insert(super::sym(name), FuncBinding { body });
    }

    fn image(&self, a: &Atom, cache: &mut HashMap<Atom, Expr>) -> Option<Expr> {
        if let Some(e) = self.atoms.get(a) {
            return Some(e.clone());
        }
        match a {
            Atom::Func(f) => {
                let fb = self.funcs.get(&f.name)?;
                Some(func_image(f, &fb.body))
            }
            Atom::Recip(s) => {
                let inner = s.substitute_inner(self, cache);
                if &inner == s {
                    return None;
                }
                if inner.is_zero() {
                    // Leave the atom in place rather than dividing by zero.
                    return None;
                }
                Some(inner.recip())
            }
            _ => None,
        }
    }

    /// True if any key of this table occurs in `e`.
    pub fn mentions(&self, e: &Expr) -> bool {
        e.any_atom(|a| {
            self.atoms.contains_key(a)
                || matches!(a, Atom::Func(f) if self.funcs.contains_key(&f.name))
        })
    }
}

fn func_image(f: &FuncSym, body: &Expr) -> Expr {
    f.index.vars().iter().fold(body.clone(), |e, v| match f.arg_coord(v) {
        Some(c) => e.diff(c),
        None => Expr::zero(),
    })
}

impl Zero for Expr {
    fn zero() -> Self {
        Expr::zero()
    }
    fn is_zero(&self) -> bool {
        Expr::is_zero(self)
    }
}

impl One for Expr {
    fn one() -> Self {
        Expr::one()
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    #[test]
    fn exp_chain_rule() {
        let a2 = Expr::param("a2");
        let t = Expr::var("t");
        let e = Expr::exp(-(&a2 * &t));
        assert_eq!(e.diff_var("t"), -(&a2 * &e));
    }

    #[test]
    fn jet_coordinates_are_independent() {
        let ux = Expr::jet("u", DerivIndex::new(["x"]));
        assert_eq!(ux.diff(&Coord::Jet(Jet::new("u", DerivIndex::new(["x"])))), Expr::one());
        assert!(ux.diff(&Coord::dep("u")).is_zero());
    }

    #[test]
    fn formal_functions_extend_index() {
        let alpha = Expr::func(FuncSym::new("alpha", vec![Coord::var("x"), Coord::var("t")]));
        let axx = alpha.diff_var("x").diff_var("x");
        let expected = Expr::func(
            FuncSym::new("alpha", vec![Coord::var("x"), Coord::var("t")]).with_index(DerivIndex::new(["x", "x"])),
        );
        assert_eq!(axx, expected);
        assert!(alpha.diff(&Coord::dep("u")).is_zero());
    }

    #[test]
    fn substitute_zero() {
        let x = Expr::var("x");
        let b = Bindings::new().var("x", Expr::zero());
        assert!(x.pow(2).substitute(&b).is_zero());
    }

    #[test]
    fn substitute_formal_function_with_derivatives() {
        let f = FuncSym::new("q1", vec![Coord::var("t")]);
        let q1t = Expr::func(f.with_index(DerivIndex::new(["t"])));
        let a2 = Expr::param("a2");
        let body = &Expr::param("a") * &Expr::exp(-(&a2 * &Expr::var("t")));
        let b = Bindings::new().func("q1", body.clone());
        assert_eq!(Expr::func(f).substitute(&b), body);
        assert_eq!(q1t.substitute(&b), body.diff_var("t"));
    }

    #[test]
    fn recip_derivative() {
        let s = &Expr::var("x") + &Expr::one();
        let r = s.recip();
        let d = r.diff_var("x");
        assert_eq!(d, -(r.pow(2)));
    }

    #[test]
    fn rewrite_detects_cycles() {
        let x = Expr::var("x");
        let b = Bindings::new().var("x", &x + &Expr::one());
        assert!(x.rewrite(&b, 8).is_err());
        let b2 = Bindings::new().var("x", Expr::var("t"));
        assert_eq!(x.rewrite(&b2, 8).unwrap(), Expr::var("t"));
    }
}
