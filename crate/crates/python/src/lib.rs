//! Python bindings: expressions, solution operators and the report commands.
//! Reports are returned as structured (JSON) strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fpsym::expr::{equal, parse, Coord, Expr as CoreExpr};
use fpsym::fpe::FpeParams;
use fpsym::numeric::{fd_residual, GridSpec, Thresholds};
use fpsym::report::{
    cmd_check, cmd_determining, cmd_generate, cmd_table, cmd_verify, CheckInput, ConfigOverrides, Report, RunConfig,
    SystemId, VerifyTarget,
};
use fpsym::solutions::{exact_residual, solution_table, transform, OperatorId, CLAIMS};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An expression over x, t, a1, a2 (and alpha(x,t) for formal solutions).
#[pyclass(name = "Expr", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExpr(CoreExpr);

#[pymethods]
impl PyExpr {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse(text, &solution_table()).map(PyExpr).map_err(err)
    }

    /// Partial derivative with respect to a variable (`x`, `t`) or parameter.
    fn diff(&self, name: &str) -> PyExpr {
        let c = if matches!(name, "x" | "t") { Coord::var(name) } else { Coord::param(name) };
        PyExpr(self.0.diff(&c))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Canonical or sampled equality.
    fn equals(&self, other: &PyExpr) -> bool {
        equal(&self.0, &other.0).is_equal()
    }

    /// FPE residual of `u = self` with symbolic parameters.
    fn residual(&self) -> PyResult<PyExpr> {
        exact_residual(&self.0, &FpeParams::symbolic()).map(|r| PyExpr(r.residual)).map_err(err)
    }

    /// Image under one of the operators `F1`..`F5`.
    fn transform(&self, op: &str) -> PyResult<PyExpr> {
        let op: OperatorId = op.parse().map_err(err)?;
        Ok(PyExpr(transform(op, &self.0, &FpeParams::symbolic())))
    }

    fn __add__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(&self.0 + &o.0)
    }

    fn __sub__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(&self.0 - &o.0)
    }

    fn __mul__(&self, o: &PyExpr) -> PyExpr {
        PyExpr(&self.0 * &o.0)
    }

    fn __eq__(&self, o: &PyExpr) -> bool {
        self.0 == o.0
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.0)
    }
}

fn config(a1: Option<String>, a2: Option<String>, seed: Option<u64>, strict: bool) -> PyResult<RunConfig> {
    ConfigOverrides { a1, a2, seed, strict: Some(strict), ..Default::default() }.resolve().map_err(err)
}

fn json(r: Report) -> String {
    r.to_structured()
}

#[pyfunction]
#[pyo3(signature = (target="all", a1=None, a2=None))]
fn verify(target: &str, a1: Option<String>, a2: Option<String>) -> PyResult<String> {
    let t: VerifyTarget = target.parse().map_err(err)?;
    Ok(json(cmd_verify(t, &config(a1, a2, None, false)?)))
}

#[pyfunction]
#[pyo3(signature = (a1=None, a2=None))]
fn table(a1: Option<String>, a2: Option<String>) -> PyResult<String> {
    Ok(json(cmd_table(&config(a1, a2, None, false)?)))
}

#[pyfunction]
#[pyo3(signature = (seed, ops, a1=None, a2=None))]
fn generate(seed: &str, ops: Vec<String>, a1: Option<String>, a2: Option<String>) -> PyResult<String> {
    cmd_generate(seed, &ops, &config(a1, a2, None, false)?).map(json).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (claim, a1=None, a2=None, seed=None))]
fn check_claim(claim: &str, a1: Option<String>, a2: Option<String>, seed: Option<u64>) -> PyResult<String> {
    cmd_check(&CheckInput::Claim(claim.into()), &config(a1, a2, seed, false)?).map(json).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (expr, a1=None, a2=None, seed=None))]
fn check_expr(expr: &str, a1: Option<String>, a2: Option<String>, seed: Option<u64>) -> PyResult<String> {
    cmd_check(&CheckInput::Expr(expr.into()), &config(a1, a2, seed, false)?).map(json).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (system, strict=false))]
fn determining(system: &str, strict: bool) -> PyResult<String> {
    let s: SystemId = system.parse().map_err(err)?;
    Ok(json(cmd_determining(s, &config(None, None, None, strict)?)))
}

/// Finite-difference residual report (JSON) on the default grid.
#[pyfunction]
#[pyo3(signature = (expr, a1, a2, grid=None))]
fn residual_report(expr: &PyExpr, a1: f64, a2: f64, grid: Option<&str>) -> PyResult<String> {
    let g = match grid {
        Some(s) => GridSpec::parse(s).map_err(err)?,
        None => GridSpec::default(),
    };
    let r = fd_residual(&expr.0, a1, a2, &g, &Thresholds::default()).map_err(err)?;
    serde_json::to_string(&r).map_err(err)
}

/// Ids of the registered claims.
#[pyfunction]
fn claims() -> Vec<&'static str> {
    CLAIMS.iter().map(|c| c.id).collect()
}

#[pymodule]
fn fpsym_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(check_claim, m)?)?;
    m.add_function(wrap_pyfunction!(check_expr, m)?)?;
    m.add_function(wrap_pyfunction!(determining, m)?)?;
    m.add_function(wrap_pyfunction!(residual_report, m)?)?;
    m.add_function(wrap_pyfunction!(claims, m)?)?;
    Ok(())
}
