//! Exact symbolic expressions.
//!
//! Every [`Expr`] is kept in a canonical sum-of-terms form: each term is a
//! rational coefficient times a [`Monomial`], which is a product of atoms
//! raised to (possibly negative) integer powers, optionally times a single
//! exponential of another canonical expression. Terms are sorted, like terms
//! are merged and zero coefficients are dropped, so two expressions from the
//! polynomial-times-exponential class are equal as functions exactly when
//! they are structurally equal.
//!
//! Reciprocals of multi-term sums are carried as opaque [`Atom::Recip`]
//! atoms. Expressions containing them fall outside the canonical class and
//! are compared numerically by [`equal`].

mod calculus;
mod equal;
mod eval;
pub mod linear;
mod parse;
mod print;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use calculus::{Bindings, CyclicSubstitution, FuncBinding};
pub use equal::{equal, equal_with, probe, Equality, EqualityMethod, ProbeOutcome, SamplingConfig, Verdict};
pub use eval::{CompiledExpr, EvalError};
pub use parse::{parse, ParseError, SymbolTable};

pub type Symbol = Arc<str>;
pub type Rational = BigRational;

pub fn sym(name: &str) -> Symbol {
    Arc::from(name)
}

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Sort rank of a coordinate name: x, t, u, v first, everything else after.
pub(crate) fn coord_rank(name: &str) -> u8 {
    match name {
        "x" => 0,
        "t" => 1,
        "z" => 2,
        "u" => 3,
        "v" => 4,
        _ => 5,
    }
}

fn cmp_coord_names(a: &str, b: &str) -> Ordering {
    coord_rank(a).cmp(&coord_rank(b)).then_with(|| a.cmp(b))
}

/// Unordered multi-index of differentiation variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DerivIndex(Vec<Symbol>);

impl DerivIndex {
    pub fn empty() -> Self {
        DerivIndex(Vec::new())
    }

    pub fn new<I, S>(vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v: Vec<Symbol> = vars.into_iter().map(|s| sym(s.as_ref())).collect();
        v.sort_by(|a, b| cmp_coord_names(a, b));
        DerivIndex(v)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> &[Symbol] {
        &self.0
    }

    pub fn count(&self, var: &str) -> usize {
        self.0.iter().filter(|v| v.as_ref() == var).count()
    }

    pub fn with(&self, var: &str) -> Self {
        let mut v = self.0.clone();
        let pos = v
            .iter()
            .position(|s| cmp_coord_names(s, var) == Ordering::Greater)
            .unwrap_or(v.len());
        v.insert(pos, sym(var));
        DerivIndex(v)
    }

    /// Multiset containment: every variable of `other` occurs in `self` at least as often.
    pub fn contains(&self, other: &DerivIndex) -> bool {
        self.minus(other).is_some()
    }

    /// Multiset difference `self \ other`, if `other` is contained in `self`.
    pub fn minus(&self, other: &DerivIndex) -> Option<DerivIndex> {
        let mut rest = self.0.clone();
        for v in &other.0 {
            let pos = rest.iter().position(|s| s == v)?;
            rest.remove(pos);
        }
        Some(DerivIndex(rest))
    }

    /// All multi-indices over `vars` of exactly the given order.
    pub fn all_of_order(vars: &[Symbol], order: usize) -> Vec<DerivIndex> {
        fn rec(vars: &[Symbol], start: usize, left: usize, cur: &mut Vec<Symbol>, out: &mut Vec<DerivIndex>) {
            if left == 0 {
                out.push(DerivIndex::new(cur.iter()));
                return;
            }
            for i in start..vars.len() {
                cur.push(vars[i].clone());
                rec(vars, i, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(vars, 0, order, &mut Vec::new(), &mut out);
        out.sort();
        out.dedup();
        out
    }
}

impl Ord for DerivIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| {
            for (a, b) in self.0.iter().zip(&other.0) {
                let c = cmp_coord_names(a, b);
                if c != Ordering::Equal {
                    return c;
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for DerivIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A jet coordinate: a dependent variable together with a derivative multi-index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Jet {
    pub dep: Symbol,
    pub index: DerivIndex,
}

impl Jet {
    pub fn new(dep: &str, index: DerivIndex) -> Self {
        Jet { dep: sym(dep), index }
    }

    pub fn base(dep: &str) -> Self {
        Jet::new(dep, DerivIndex::empty())
    }

    pub fn order(&self) -> usize {
        self.index.order()
    }

    pub fn extend(&self, var: &str) -> Jet {
        Jet { dep: self.dep.clone(), index: self.index.with(var) }
    }
}

/// Something an expression can be differentiated with respect to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Param(Symbol),
    Var(Symbol),
    Jet(Jet),
}

impl Coord {
    pub fn var(name: &str) -> Self {
        Coord::Var(sym(name))
    }

    pub fn dep(name: &str) -> Self {
        Coord::Jet(Jet::base(name))
    }

    pub fn param(name: &str) -> Self {
        Coord::Param(sym(name))
    }

    /// Name of a base coordinate (independent variable or order-0 dependent variable).
    pub fn base_name(&self) -> Option<&Symbol> {
        match self {
            Coord::Var(v) => Some(v),
            Coord::Jet(j) if j.index.is_empty() => Some(&j.dep),
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Coord::Param(p) => Expr::atom(Atom::Param(p.clone())),
            Coord::Var(v) => Expr::atom(Atom::Var(v.clone())),
            Coord::Jet(j) => Expr::atom(Atom::Jet(j.clone())),
        }
    }
}

/// A formal function symbol such as `alpha(x,t)` or `xi_u(x,t,u)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncSym {
    pub name: Symbol,
    pub args: Vec<Coord>,
    pub index: DerivIndex,
}

impl FuncSym {
    pub fn new(name: &str, args: Vec<Coord>) -> Self {
        FuncSym { name: sym(name), args, index: DerivIndex::empty() }
    }

    pub fn with_index(&self, index: DerivIndex) -> Self {
        FuncSym { name: self.name.clone(), args: self.args.clone(), index }
    }

    pub fn has_arg(&self, name: &str) -> bool {
        self.args.iter().any(|a| a.base_name().map(|n| n.as_ref() == name).unwrap_or(false))
    }

    pub fn arg_coord(&self, name: &str) -> Option<&Coord> {
        self.args.iter().find(|a| a.base_name().map(|n| n.as_ref() == name).unwrap_or(false))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Param(Symbol),
    Var(Symbol),
    Jet(Jet),
    Func(FuncSym),
    /// `1 / s` for a multi-term sum `s` normalized to leading coefficient one.
    Recip(Expr),
}

impl Atom {
    pub fn as_coord(&self) -> Option<Coord> {
        match self {
            Atom::Param(p) => Some(Coord::Param(p.clone())),
            Atom::Var(v) => Some(Coord::Var(v.clone())),
            Atom::Jet(j) => Some(Coord::Jet(j.clone())),
            _ => None,
        }
    }
}

/// Product of atom powers times an optional exponential factor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    factors: Vec<(Atom, i32)>,
    exp: Option<Expr>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn from_atom(a: Atom, k: i32) -> Self {
        if k == 0 {
            return Monomial::one();
        }
        Monomial { factors: vec![(a, k)], exp: None }
    }

    pub fn exponential(arg: Expr) -> Self {
        if arg.is_zero() {
            return Monomial::one();
        }
        Monomial { factors: Vec::new(), exp: Some(arg) }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty() && self.exp.is_none()
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.factors
    }

    pub fn exp_arg(&self) -> Option<&Expr> {
        self.exp.as_ref()
    }

    pub fn power_of(&self, a: &Atom) -> i32 {
        self.factors.iter().find(|(b, _)| b == a).map(|(_, k)| *k).unwrap_or(0)
    }

    pub(crate) fn from_parts(mut factors: Vec<(Atom, i32)>, exp: Option<Expr>) -> Self {
        factors.retain(|(_, k)| *k != 0);
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Atom, i32)> = Vec::with_capacity(factors.len());
        for (a, k) in factors {
            match merged.last_mut() {
                Some((b, kb)) if *b == a => *kb += k,
                _ => merged.push((a, k)),
            }
        }
        merged.retain(|(_, k)| *k != 0);
        let exp = exp.filter(|e| !e.is_zero());
        Monomial { factors: merged, exp }
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Atom, i32)> = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.factors, &other.factors);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let k = a[i].1 + b[j].1;
                    if k != 0 {
                        out.push((a[i].0.clone(), k));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        let exp = match (&self.exp, &other.exp) {
            (None, None) => None,
            (Some(p), None) | (None, Some(p)) => Some(p.clone()),
            (Some(p), Some(q)) => {
                let s = p + q;
                if s.is_zero() {
                    None
                } else {
                    Some(s)
                }
            }
        };
        Monomial { factors: out, exp }
    }

    /// Removes one power of the factor at position `i`.
    pub(crate) fn lowered(&self, i: usize) -> Monomial {
        let mut m = self.clone();
        m.factors[i].1 -= 1;
        if m.factors[i].1 == 0 {
            m.factors.remove(i);
        }
        m
    }

    /// Splits into the part whose atoms satisfy `key` and the rest.
    pub fn split<F: Fn(&Atom) -> bool>(&self, key: F, exp_in_key: bool) -> (Monomial, Monomial) {
        let (k, r): (Vec<_>, Vec<_>) = self.factors.iter().cloned().partition(|(a, _)| key(a));
        let (ke, re) = if exp_in_key { (self.exp.clone(), None) } else { (None, self.exp.clone()) };
        (Monomial { factors: k, exp: ke }, Monomial { factors: r, exp: re })
    }

    pub fn to_expr(&self) -> Expr {
        Expr::from_term(self.clone(), Rational::one())
    }
}

type Term = (Monomial, Rational);

/// Immutable canonical expression. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr {
    terms: Arc<Vec<Term>>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

/// Accumulates terms and produces a canonical expression.
#[derive(Default)]
pub(crate) struct TermAcc(BTreeMap<Monomial, Rational>);

impl TermAcc {
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(&m) {
            Some(v) => *v += c,
            None => {
                self.0.insert(m, c);
            }
        }
    }

    pub fn add_expr(&mut self, e: &Expr, scale: &Rational) {
        for (m, c) in e.terms.iter() {
            self.add_term(m.clone(), c * scale);
        }
    }

    pub fn finish(self) -> Expr {
        let terms: Vec<Term> = self.0.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Expr { terms: Arc::new(terms) }
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr { terms: Arc::new(Vec::new()) }
    }

    pub fn one() -> Self {
        Expr::constant(Rational::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Expr::constant(rat(n, d))
    }

    pub fn constant(c: Rational) -> Self {
        Expr::from_term(Monomial::one(), c)
    }

    pub fn from_term(m: Monomial, c: Rational) -> Self {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr { terms: Arc::new(vec![(m, c)]) }
    }

    pub fn atom(a: Atom) -> Self {
        Expr::from_term(Monomial::from_atom(a, 1), Rational::one())
    }

    pub fn param(name: &str) -> Self {
        Expr::atom(Atom::Param(sym(name)))
    }

    pub fn var(name: &str) -> Self {
        Expr::atom(Atom::Var(sym(name)))
    }

    pub fn jet(dep: &str, index: DerivIndex) -> Self {
        Expr::atom(Atom::Jet(Jet::new(dep, index)))
    }

    pub fn jet_of(j: &Jet) -> Self {
        Expr::atom(Atom::Jet(j.clone()))
    }

    pub fn func(f: FuncSym) -> Self {
        Expr::atom(Atom::Func(f))
    }

    pub fn exp(arg: Expr) -> Self {
        Expr::from_term(Monomial::exponential(arg), Rational::one())
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if this expression is a rational constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn is_single_term(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        let terms = self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect();
        Expr { terms: Arc::new(terms) }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Expr {
        let mut acc = TermAcc::default();
        for (n, c) in self.terms.iter() {
            acc.add_term(n.mul(m), c.clone());
        }
        acc.finish()
    }

    pub fn pow(&self, k: i32) -> Expr {
        match k.cmp(&0) {
            Ordering::Equal => Expr::one(),
            Ordering::Greater => {
                let mut base = self.clone();
                let mut result = Expr::one();
                let mut n = k as u32;
                while n > 0 {
                    if n & 1 == 1 {
                        result = &result * &base;
                    }
                    n >>= 1;
                    if n > 0 {
                        base = &base * &base;
                    }
                }
                result
            }
            Ordering::Less => self.recip().pow(-k),
        }
    }

    /// Multiplicative inverse. Single terms invert exactly; sums become a
    /// [`Atom::Recip`] atom. Panics on zero.
    pub fn recip(&self) -> Expr {
        assert!(!self.is_zero(), "reciprocal of zero expression");
        if let [(m, c)] = self.terms.as_slice() {
            let mut out = Expr::constant(c.recip());
            for (a, k) in &m.factors {
                let f = match a {
                    Atom::Recip(s) => s.pow(*k),
                    _ => Expr::from_term(Monomial::from_atom(a.clone(), -k), Rational::one()),
                };
                out = &out * &f;
            }
            if let Some(arg) = &m.exp {
                out = out.mul_monomial(&Monomial::exponential(-arg));
            }
            return out;
        }
        let lead = self.terms[0].1.clone();
        let normalized = self.scale(&lead.recip());
        Expr::from_term(Monomial::from_atom(Atom::Recip(normalized), 1), lead.recip())
    }

    /// Visits every atom, including those inside exponentials and reciprocals.
    pub fn for_each_atom<F: FnMut(&Atom)>(&self, f: &mut F) {
        for (m, _) in self.terms.iter() {
            for (a, _) in &m.factors {
                f(a);
                if let Atom::Recip(s) = a {
                    s.for_each_atom(f);
                }
            }
            if let Some(arg) = &m.exp {
                arg.for_each_atom(f);
            }
        }
    }

    pub fn any_atom<F: Fn(&Atom) -> bool>(&self, pred: F) -> bool {
        let mut found = false;
        self.for_each_atom(&mut |a| {
            if !found && pred(a) {
                found = true;
            }
        });
        found
    }

    /// True when the expression lies in the canonical polynomial-times-exponential class.
    pub fn is_canonical_class(&self) -> bool {
        !self.any_atom(|a| matches!(a, Atom::Recip(_)))
    }

    pub fn has_funcs(&self) -> bool {
        self.any_atom(|a| matches!(a, Atom::Func(_)))
    }

    pub fn has_exp(&self) -> bool {
        fn rec(e: &Expr) -> bool {
            e.terms.iter().any(|(m, _)| {
                m.exp.is_some() || m.factors.iter().any(|(a, _)| matches!(a, Atom::Recip(s) if rec(s)))
            })
        }
        rec(self)
    }

    /// Highest jet order appearing (order 0 for bare dependent variables,
    /// including those appearing as formal-function arguments).
    pub fn jet_order(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        self.for_each_atom(&mut |a| {
            let o = match a {
                Atom::Jet(j) => Some(j.order()),
                Atom::Func(f) if f.args.iter().any(|c| matches!(c, Coord::Jet(_))) => Some(0),
                _ => None,
            };
            if let Some(o) = o {
                best = Some(best.map_or(o, |b| b.max(o)));
            }
        });
        best
    }

    /// Jet coordinates appearing anywhere, including bare dependent
    /// variables used as formal-function arguments.
    pub fn jets(&self) -> Vec<Jet> {
        let mut out = std::collections::BTreeSet::new();
        self.for_each_atom(&mut |a| match a {
            Atom::Jet(j) => {
                out.insert(j.clone());
            }
            Atom::Func(f) => {
                for c in &f.args {
                    if let Coord::Jet(j) = c {
                        out.insert(j.clone());
                    }
                }
            }
            _ => {}
        });
        out.into_iter().collect()
    }

    pub fn params(&self) -> Vec<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Param(p) = a {
                out.insert(p.clone());
            }
        });
        out.into_iter().collect()
    }

    pub fn funcs(&self) -> Vec<FuncSym> {
        let mut out = std::collections::BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Func(f) = a {
                out.insert(f.clone());
            }
        });
        out.into_iter().collect()
    }

    /// Drops every term whose monomial has a positive power of an atom
    /// matching `pred` (substitution of zero for those atoms).
    pub fn drop_terms<F: Fn(&Atom) -> bool>(&self, pred: F) -> Expr {
        let terms: Vec<Term> = self
            .terms
            .iter()
            .filter(|(m, _)| !m.factors.iter().any(|(a, k)| *k > 0 && pred(a)))
            .cloned()
            .collect();
        Expr { terms: Arc::new(terms) }
    }

    /// Leading rational coefficient (of the first term in canonical order).
    pub fn leading_coefficient(&self) -> Option<&Rational> {
        self.terms.first().map(|(_, c)| c)
    }

    /// Scales so that the leading coefficient is one.
    pub fn normalized(&self) -> Expr {
        match self.leading_coefficient() {
            Some(c) => self.scale(&c.recip()),
            None => Expr::zero(),
        }
    }

    /// Expression scaled so that the leading coefficient is positive.
    pub fn sign_normalized(&self) -> Expr {
        match self.leading_coefficient() {
            Some(c) if c.is_negative() => -self,
            _ => self.clone(),
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(q: Rational) -> Self {
        Expr::constant(q)
    }
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b) = (&self.terms, &rhs.terms);
        let mut out: Vec<Term> = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr { terms: Arc::new(out) }
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl<'a> Neg for &'a Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect();
        Expr { terms: Arc::new(terms) }
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        let mut acc = TermAcc::default();
        for (m1, c1) in self.terms.iter() {
            for (m2, c2) in rhs.terms.iter() {
                acc.add_term(m1.mul(m2), c1 * c2);
            }
        }
        acc.finish()
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr { (&self).$f(&rhs) }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $f(self, rhs: &Expr) -> Expr { (&self).$f(rhs) }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $f(self, rhs: Expr) -> Expr { self.$f(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut acc = TermAcc::default();
        let one = Rational::one();
        for e in iter {
            acc.add_expr(&e, &one);
        }
        acc.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn like_terms_merge_and_cancel() {
        let e = &(&x() + &x()) - &x().scale(&int(2));
        assert!(e.is_zero());
    }

    #[test]
    fn exponentials_merge() {
        let t = Expr::var("t");
        let a2 = Expr::param("a2");
        let p = Expr::exp(&a2 * &t);
        let q = Expr::exp(-(&a2 * &t));
        assert_eq!(&p * &q, Expr::one());
        let sq = &p * &p;
        assert_eq!(sq, Expr::exp((&a2 * &t).scale(&int(2))));
    }

    #[test]
    fn parameter_monomials_invert() {
        let a2 = Expr::param("a2");
        let half_inv = (&a2 * &Expr::int(2)).recip();
        assert_eq!(&half_inv * &a2, Expr::ratio(1, 2));
    }

    #[test]
    fn sums_invert_to_recip_atoms() {
        let s = &x() + &Expr::one();
        let r = s.recip();
        assert!(!r.is_canonical_class());
        // (2x+2)^-1 = 1/2 * (x+1)^-1
        let r2 = (&s * &Expr::int(2)).recip();
        assert_eq!(r2, r.scale(&rat(1, 2)));
    }

    #[test]
    fn binomial_square_expands() {
        let a1 = Expr::param("a1");
        let a2 = Expr::param("a2");
        let l = &(&a2 * &x()) + &a1;
        let lhs = l.pow(2);
        let rhs = &(&(&a2.pow(2) * &x().pow(2)) + &(&a1 * &a2 * &x()).scale(&int(2))) + &a1.pow(2);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn deriv_index_is_unordered() {
        assert_eq!(DerivIndex::new(["t", "x"]), DerivIndex::new(["x", "t"]));
        let idx = DerivIndex::new(["x", "x", "t"]);
        assert_eq!(idx.order(), 3);
        assert!(idx.contains(&DerivIndex::new(["x", "t"])));
        assert!(!idx.contains(&DerivIndex::new(["t", "t"])));
        assert_eq!(idx.minus(&DerivIndex::new(["x"])), Some(DerivIndex::new(["x", "t"])));
    }

    #[test]
    fn all_multi_indices() {
        let vars = vec![sym("x"), sym("t")];
        assert_eq!(DerivIndex::all_of_order(&vars, 2).len(), 3);
        assert_eq!(DerivIndex::all_of_order(&vars, 3).len(), 4);
    }
}
