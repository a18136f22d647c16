//! Finite-difference residual oracle for closed-form solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::{probe, CompiledExpr, EvalError, Expr, ProbeOutcome, SamplingConfig};
use crate::solutions::{SolutionRecord, Status};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("parameters must be numeric with a2 != 0")]
    Params,
    #[error("cannot evaluate expression: {0}")]
    Eval(#[from] EvalError),
    #[error("expression overflows on the grid at x={x}, t={t}; clip the domain")]
    Overflow { x: f64, t: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub t0: f64,
    pub t1: f64,
    /// Spacing on the coarsest level, both axes.
    pub h: f64,
    /// Number of levels; level `k` uses spacing `h / 2^k`.
    pub levels: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { x0: -2.0, x1: 2.0, t0: 0.1, t1: 1.1, h: 0.02, levels: 3 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), NumericError> {
        let ok = |v: f64| v.is_finite();
        if ![self.x0, self.x1, self.t0, self.t1, self.h].into_iter().all(ok) {
            return Err(NumericError::Grid("non-finite bound".into()));
        }
        if self.h <= 0.0 {
            return Err(NumericError::Grid("h must be positive".into()));
        }
        if self.x1 <= self.x0 || self.t1 <= self.t0 {
            return Err(NumericError::Grid("degenerate interval".into()));
        }
        if self.levels < 2 {
            return Err(NumericError::Grid("need at least 2 refinement levels".into()));
        }
        if 2.0 * self.h >= (self.x1 - self.x0).min(self.t1 - self.t0) {
            return Err(NumericError::Grid("too coarse for interior nodes".into()));
        }
        Ok(())
    }

    /// The same domain with spacing halved.
    pub fn refined(&self) -> GridSpec {
        GridSpec { h: self.h / 2.0, ..self.clone() }
    }

    /// Parses `x0,x1,t0,t1,h,L`.
    pub fn parse(s: &str) -> Result<GridSpec, NumericError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(NumericError::Grid(format!("expected x0,x1,t0,t1,h,L, got `{s}`")));
        }
        let f = |i: usize| parts[i].parse::<f64>().map_err(|e| NumericError::Grid(format!("{}: {e}", parts[i])));
        let levels = parts[5].parse::<usize>().map_err(|e| NumericError::Grid(format!("{}: {e}", parts[5])))?;
        let g = GridSpec { x0: f(0)?, x1: f(1)?, t0: f(2)?, t1: f(3)?, h: f(4)?, levels };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Bound on the extrapolated normalized max-norm residual.
    pub tau: f64,
    pub min_order: f64,
    /// Refutation requires residuals of at least `refute_factor * tau`.
    pub refute_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau: 1e-6, min_order: 1.5, refute_factor: 1e3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericVerdict {
    Verified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelNorms {
    pub h: f64,
    pub max_norm: f64,
    pub rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub levels: Vec<LevelNorms>,
    /// `log2` ratios of successive max norms.
    pub orders: Vec<f64>,
    /// Normalized max norm of the second-order Richardson extrapolant of the
    /// residual on the two finest levels.
    pub extrapolated: f64,
    pub verdict: NumericVerdict,
    pub thresholds: Thresholds,
    pub grid: GridSpec,
}

impl ResidualReport {
    pub fn final_order(&self) -> Option<f64> {
        self.orders.last().copied()
    }
}

struct Level {
    norms: LevelNorms,
    /// Unnormalized residual at interior nodes, indexed `[j][i]` from the grid origin.
    residual: Vec<Vec<f64>>,
    scale: f64,
}

fn level(u: &CompiledExpr, a1: f64, a2: f64, g: &GridSpec, h: f64) -> Result<Level, NumericError> {
    let nx = ((g.x1 - g.x0) / h).round() as usize;
    let nt = ((g.t1 - g.t0) / h).round() as usize;
    let at = |i: usize, j: usize| u.eval(&[g.x0 + i as f64 * h, g.t0 + j as f64 * h, a1, a2]);
    // Rows are evaluated in parallel and reduced in index order.
    let rows: Vec<Vec<f64>> = (0..=nt).into_par_iter().map(|j| (0..=nx).map(|i| at(i, j)).collect()).collect();
    let mut scale = 1.0f64;
    for (j, row) in rows.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(NumericError::Overflow { x: g.x0 + i as f64 * h, t: g.t0 + j as f64 * h });
            }
            scale = scale.max(v.abs());
        }
    }
    let residual: Vec<Vec<f64>> = (0..=nt)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![0.0; nx + 1];
            if j == 0 || j == nt {
                return row;
            }
            for i in 1..nx {
                let x = g.x0 + i as f64 * h;
                let c = rows[j][i];
                let ut = (rows[j + 1][i] - rows[j - 1][i]) / (2.0 * h);
                let ux = (rows[j][i + 1] - rows[j][i - 1]) / (2.0 * h);
                let uxx = (rows[j][i + 1] - 2.0 * c + rows[j][i - 1]) / (h * h);
                row[i] = ut + a2 * c + (a2 * x + a1) * ux - 0.5 * uxx;
            }
            row
        })
        .collect();
    let mut max_norm = 0.0f64;
    let mut sq = 0.0f64;
    for row in &residual[1..nt] {
        for r in &row[1..nx] {
            max_norm = max_norm.max(r.abs() / scale);
            sq += (r / scale).powi(2);
        }
    }
    let rms = (sq / ((nx - 1) * (nt - 1)) as f64).sqrt();
    Ok(Level { norms: LevelNorms { h, max_norm, rms }, residual, scale })
}

/// Pointwise Richardson extrapolation `(4r_h − r_2h)/3` on the interior
/// nodes shared by two successive levels, as a normalized max norm.
fn extrapolate(coarse: &Level, fine: &Level) -> f64 {
    let scale = coarse.scale.max(fine.scale);
    let (nt, nx) = (coarse.residual.len() - 1, coarse.residual[0].len() - 1);
    let mut m = 0.0f64;
    for j in 1..nt {
        for i in 1..nx {
            let r = (4.0 * fine.residual[2 * j][2 * i] - coarse.residual[j][i]) / 3.0;
            m = m.max(r.abs() / scale);
        }
    }
    m
}

/// Central-difference residual of `u_t + a₂u + (a₂x+a₁)u_x − ½u_xx` for
/// `u = e(x, t)`, normalized by `max(1, ‖u‖∞)`, on each refinement level.
pub fn fd_residual(e: &Expr, a1: f64, a2: f64, grid: &GridSpec, th: &Thresholds) -> Result<ResidualReport, NumericError> {
    grid.validate()?;
    if a2 == 0.0 || !a1.is_finite() || !a2.is_finite() {
        return Err(NumericError::Params);
    }
    let u = CompiledExpr::new(e, &["x", "t", "a1", "a2"])?;
    let mut raw = Vec::new();
    for k in 0..grid.levels {
        raw.push(level(&u, a1, a2, grid, grid.h / f64::powi(2.0, k as i32))?);
    }
    let n = raw.len();
    let extrapolated = extrapolate(&raw[n - 2], &raw[n - 1]);
    let levels: Vec<LevelNorms> = raw.into_iter().map(|l| l.norms).collect();
    let orders: Vec<f64> = levels.windows(2).map(|w| (w[0].max_norm / w[1].max_norm).log2()).collect();
    let all_small = levels.iter().all(|l| l.max_norm <= th.tau);
    let final_order = orders.last().copied().unwrap_or(f64::NAN);
    let floor = th.refute_factor * th.tau;
    let min_norm = levels.iter().fold(f64::INFINITY, |m, l| m.min(l.max_norm));
    let verdict = if all_small || (final_order >= th.min_order && extrapolated <= th.tau) {
        NumericVerdict::Verified
    } else if min_norm >= floor && extrapolated >= floor && final_order < 1.0 {
        NumericVerdict::Refuted
    } else {
        NumericVerdict::Inconclusive
    };
    Ok(ResidualReport { levels, orders, extrapolated, verdict, thresholds: th.clone(), grid: grid.clone() })
}

/// Updates the record's status from a numeric report. Symbolic verdicts are
/// kept; an inconclusive report leaves the status unchanged.
pub fn adjudicate(
    s: &mut SolutionRecord,
    a1: f64,
    a2: f64,
    grid: &GridSpec,
    th: &Thresholds,
) -> Result<ResidualReport, NumericError> {
    let report = fd_residual(&s.expression, a1, a2, grid, th)?;
    match (report.verdict, s.status) {
        (_, Status::SymbolicallyVerified) => {}
        (NumericVerdict::Verified, _) => s.status = Status::NumericallyVerified,
        (NumericVerdict::Refuted, _) => s.status = Status::Refuted,
        (NumericVerdict::Inconclusive, _) => {}
    }
    Ok(report)
}

/// Randomized relative-difference test of `lhs = rhs`.
pub fn identity_probe(lhs: &Expr, rhs: &Expr, cfg: &SamplingConfig) -> ProbeOutcome {
    probe(lhs, rhs, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{claim, parse_solution};

    #[test]
    fn zero_and_one() {
        let g = GridSpec::default();
        let th = Thresholds::default();
        let r = fd_residual(&Expr::zero(), 1.0, 1.0, &g, &th).unwrap();
        assert!(r.levels.iter().all(|l| l.max_norm == 0.0));
        assert_eq!(r.verdict, NumericVerdict::Verified);
        let r = fd_residual(&Expr::one(), 0.0, 1.0, &g, &th).unwrap();
        assert!((r.levels[0].max_norm - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, NumericVerdict::Refuted);
    }

    #[test]
    fn g1_converges_at_second_order() {
        let g1 = claim("g1").unwrap().expression().unwrap();
        let r = fd_residual(&g1, 1.0, 1.0, &GridSpec::default(), &Thresholds::default()).unwrap();
        assert_eq!(r.verdict, NumericVerdict::Verified, "{r:?}");
        let o = r.final_order().unwrap();
        assert!((1.7..=2.3).contains(&o), "{o}");
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec { levels: 1, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec { h: 0.0, ..GridSpec::default() }.validate().is_err());
        assert!(GridSpec::parse("-2,2,0.1,1.1,0.02,3").is_ok());
        assert!(GridSpec::parse("1,2").is_err());
    }

    #[test]
    fn probe_identity() {
        let e = parse_solution("exp(-a2*t)").unwrap();
        let p = identity_probe(&e, &e, &SamplingConfig::default());
        assert_eq!((p.holds, p.confidence), (Some(true), 1.0));
    }
}
