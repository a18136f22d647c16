//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := ('-'|'+') unary | power
//! power  := base ('^' integer)?
//! base   := number | ident | ident '(' args ')' | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Jet coordinates are spelled `u`, `u_x`, `u_xt`, ...; formal functions are
//! written with their declared argument list, derivatives as `alpha_x(x,t)`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::One;

use super::{sym, Coord, DerivIndex, Expr, FuncSym, Jet, Rational, Symbol};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared symbol `{name}` at {pos}")]
    Undeclared { pos: usize, name: String },
    #[error("non-integer exponent at {pos}")]
    NonIntegerExponent { pos: usize },
    #[error("division by zero at {pos}")]
    DivisionByZero { pos: usize },
}

/// Declared symbols: parameters, independent variables, dependent variables
/// and formal functions with their argument lists. `a1` and `a2` are always
/// parameters.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    params: BTreeSet<Symbol>,
    vars: BTreeSet<Symbol>,
    deps: BTreeSet<Symbol>,
    funcs: BTreeMap<Symbol, Vec<Coord>>,
}

impl Default for SymbolTable {
    fn default() -> Self {
        SymbolTable::new()
    }
}

impl SymbolTable {
    pub fn new() -> Self {
        let mut params = BTreeSet::new();
        params.insert(sym("a1"));
        params.insert(sym("a2"));
        SymbolTable { params, vars: BTreeSet::new(), deps: BTreeSet::new(), funcs: BTreeMap::new() }
    }

    /// `x`, `t` and `u`.
    pub fn fpe() -> Self {
        SymbolTable::new().with_vars(&["x", "t"]).with_deps(&["u"])
    }

    pub fn with_params(mut self, names: &[&str]) -> Self {
        self.params.extend(names.iter().map(|n| sym(n)));
        self
    }

    pub fn with_vars(mut self, names: &[&str]) -> Self {
        self.vars.extend(names.iter().map(|n| sym(n)));
        self
    }

    pub fn with_deps(mut self, names: &[&str]) -> Self {
        self.deps.extend(names.iter().map(|n| sym(n)));
        self
    }

    /// Declares a formal function; arguments must already be declared
    /// variables or dependent variables.
    pub fn with_func(mut self, name: &str, args: &[&str]) -> Self {
        let coords = args
            .iter()
            .map(|a| if self.deps.contains(*a) { Coord::dep(a) } else { Coord::var(a) })
            .collect();
        self.funcs.insert(sym(name), coords);
        self
    }

    pub fn func_args(&self, name: &str) -> Option<&[Coord]> {
        self.funcs.get(name).map(|v| v.as_slice())
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.contains(name)
    }

    pub fn params(&self) -> impl Iterator<Item = &Symbol> {
        self.params.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
            }
            let n: BigInt = text[start..i].parse().expect("digits");
            out.push((Tok::Num(n), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{}`", c) });
        }
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    table: &'a SymbolTable,
}

/// Parses `text` into a canonical expression using the declarations in `table`.
pub fn parse(text: &str, table: &SymbolTable) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, table };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(ParseError::Syntax { pos: p.at(), msg: format!("unexpected token {:?}", t) }),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn at(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::Syntax { pos: self.at(), msg: format!("expected `{}`", c) })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Op('-') => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Op('/') => {
                    let pos = self.at();
                    self.bump();
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(ParseError::DivisionByZero { pos });
                    }
                    acc = &acc * &d.recip();
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let pos = self.at();
        let k = self.exponent()?;
        if k < 0 && base.is_zero() {
            return Err(ParseError::DivisionByZero { pos });
        }
        Ok(base.pow(k))
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let pos = self.at();
        let value: Expr = match self.peek() {
            Tok::Op('-') => {
                self.bump();
                -self.exponent_atom()?
            }
            Tok::Op('+') => {
                self.bump();
                self.exponent_atom()?
            }
            _ => self.exponent_atom()?,
        };
        let q: Rational = value.as_constant().ok_or(ParseError::NonIntegerExponent { pos })?;
        if !q.denom().is_one() {
            return Err(ParseError::NonIntegerExponent { pos });
        }
        i32::try_from(q.numer().clone()).map_err(|_| ParseError::Syntax { pos, msg: "exponent too large".into() })
    }

    fn exponent_atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.at();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::constant(Rational::from_integer(n)))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(_) => Err(ParseError::NonIntegerExponent { pos }),
            t => Err(ParseError::Syntax { pos, msg: format!("bad exponent {:?}", t) }),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let pos = self.at();
        match self.bump() {
            Tok::Num(n) => Ok(Expr::constant(Rational::from_integer(n))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    self.bump();
                    if name == "exp" {
                        let arg = self.expr()?;
                        self.expect(')')?;
                        return Ok(Expr::exp(arg));
                    }
                    self.function(&name, pos)
                } else {
                    self.symbol(&name, pos)
                }
            }
            t => Err(ParseError::Syntax { pos, msg: format!("unexpected token {:?}", t) }),
        }
    }

    fn function(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let (base, index) = match name.split_once('_') {
            Some((b, idx)) => (b, Some(idx)),
            None => (name, None),
        };
        let declared = self
            .table
            .func_args(base)
            .ok_or_else(|| ParseError::Undeclared { pos, name: base.to_string() })?
            .to_vec();
        let mut args = Vec::new();
        loop {
            let apos = self.at();
            match self.bump() {
                Tok::Ident(a) => args.push(a),
                _ => return Err(ParseError::Syntax { pos: apos, msg: "expected argument name".into() }),
            }
            match self.bump() {
                Tok::Op(',') => continue,
                Tok::Op(')') => break,
                _ => return Err(ParseError::Syntax { pos: self.at(), msg: "expected `,` or `)`".into() }),
            }
        }
        let names: Vec<String> = declared.iter().map(|c| c.to_string()).collect();
        if names != args {
            return Err(ParseError::Syntax {
                pos,
                msg: format!("`{}` takes arguments ({})", base, names.join(",")),
            });
        }
        let f = FuncSym::new(base, declared);
        let index = match index {
            None => DerivIndex::empty(),
            Some(letters) => {
                let mut vars = Vec::new();
                for ch in letters.chars() {
                    let s = ch.to_string();
                    if !f.has_arg(&s) {
                        return Err(ParseError::Syntax {
                            pos,
                            msg: format!("`{}` is not an argument of `{}`", s, base),
                        });
                    }
                    vars.push(s);
                }
                DerivIndex::new(vars)
            }
        };
        Ok(Expr::func(f.with_index(index)))
    }

    fn symbol(&self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let t = self.table;
        if t.params.contains(name) {
            return Ok(Expr::param(name));
        }
        if t.vars.contains(name) {
            return Ok(Expr::var(name));
        }
        if t.deps.contains(name) {
            return Ok(Expr::jet(name, DerivIndex::empty()));
        }
        if let Some((dep, letters)) = name.split_once('_') {
            if t.deps.contains(dep) && !letters.is_empty() {
                let mut vars = Vec::new();
                for ch in letters.chars() {
                    let s = ch.to_string();
                    if !t.vars.contains(s.as_str()) {
                        return Err(ParseError::Undeclared { pos, name: s });
                    }
                    vars.push(s);
                }
                return Ok(Expr::atom(super::Atom::Jet(Jet::new(dep, DerivIndex::new(vars)))));
            }
        }
        Err(ParseError::Undeclared { pos, name: name.to_string() })
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn fpe() -> SymbolTable {
        SymbolTable::fpe()
    }

    #[test]
    fn linear_drift() {
        let e = parse("a2*x + a1", &fpe()).unwrap();
        assert_eq!(e, &(&Expr::param("a2") * &Expr::var("x")) + &Expr::param("a1"));
    }

    #[test]
    fn exponential_argument() {
        let e = parse("exp(-a2*t)", &fpe()).unwrap();
        assert_eq!(e, Expr::exp(-(&Expr::param("a2") * &Expr::var("t"))));
    }

    #[test]
    fn fpe_operator_terms() {
        let e = parse("u_xx - 2*(a2*x+a1)*u_x", &fpe()).unwrap();
        let uxx = Expr::jet("u", DerivIndex::new(["x", "x"]));
        let ux = Expr::jet("u", DerivIndex::new(["x"]));
        let l = parse("a2*x+a1", &fpe()).unwrap();
        assert_eq!(e, &uxx - &(&l * &ux).scale(&super::super::int(2)));
        assert_eq!(parse("u_tx", &fpe()).unwrap(), parse("u_xt", &fpe()).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(parse("x + y", &fpe()), Err(ParseError::Undeclared { pos: 4, .. })));
        assert!(matches!(parse("x^a2", &fpe()), Err(ParseError::NonIntegerExponent { .. })));
        assert!(matches!(parse("x^(1/2)", &fpe()), Err(ParseError::NonIntegerExponent { .. })));
        assert!(matches!(parse("x +* 2", &fpe()), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse("x/0", &fpe()), Err(ParseError::DivisionByZero { .. })));
        assert!(matches!(parse("(x", &fpe()), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn formal_functions() {
        let t = fpe().with_func("alpha", &["x", "t"]);
        let e = parse("alpha_xx(x,t)", &t).unwrap();
        let a = parse("alpha(x,t)", &t).unwrap();
        assert_eq!(a.diff_var("x").diff_var("x"), e);
        assert!(parse("alpha(t,x)", &t).is_err());
        assert!(parse("beta(x,t)", &t).is_err());
    }

    #[test]
    fn rational_coefficients() {
        let e = parse("1/(2*a2)*exp(-a2*t)", &fpe()).unwrap();
        let printed = e.to_string();
        assert_eq!(parse(&printed, &fpe()).unwrap(), e);
        assert_eq!(parse("x^(4/2)", &fpe()).unwrap(), parse("x*x", &fpe()).unwrap());
    }
}
