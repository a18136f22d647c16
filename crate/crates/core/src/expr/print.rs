use std::fmt;

use num_traits::One;

use super::{Atom, Coord, Expr, Jet, Monomial, Rational};

fn write_index(f: &mut fmt::Formatter<'_>, vars: &[super::Symbol]) -> fmt::Result {
    for v in vars {
        write!(f, "{}", v)?;
    }
    Ok(())
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dep)?;
        if !self.index.is_empty() {
            write!(f, "_")?;
            write_index(f, self.index.vars())?;
        }
        Ok(())
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Param(p) | Coord::Var(p) => write!(f, "{}", p),
            Coord::Jet(j) => write!(f, "{}", j),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Param(p) | Atom::Var(p) => write!(f, "{}", p),
            Atom::Jet(j) => write!(f, "{}", j),
            Atom::Func(func) => {
                write!(f, "{}", func.name)?;
                if !func.index.is_empty() {
                    write!(f, "_")?;
                    write_index(f, func.index.vars())?;
                }
                write!(f, "(")?;
                for (i, a) in func.args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
            Atom::Recip(s) => write!(f, "({})^-1", s),
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.denom().is_one() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, k) in self.factors() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            match a {
                Atom::Recip(s) => write!(f, "({})^-{}", s, k)?,
                _ if *k == 1 => write!(f, "{}", a)?,
                _ => write!(f, "{}^{}", a, k)?,
            }
        }
        if let Some(arg) = self.exp_arg() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "exp({})", arg)?;
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

struct TermDisplay<'a>(&'a Monomial, &'a Rational);

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, c) = (self.0, self.1);
        if m.is_one() {
            return write_rational(f, c);
        }
        if c.is_one() {
            write!(f, "{}", m)
        } else if (-c).is_one() {
            write!(f, "-{}", m)
        } else {
            write_rational(f, c)?;
            write!(f, "*{}", m)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms().iter().enumerate() {
            let s = TermDisplay(m, c).to_string();
            if i == 0 {
                write!(f, "{}", s)?;
            } else if let Some(rest) = s.strip_prefix('-') {
                write!(f, " - {}", rest)?;
            } else {
                write!(f, " + {}", s)?;
            }
        }
        Ok(())
    }
}
