//! Run configuration, structured reports and the command implementations
//! behind the `fpsym` binary.

use std::path::Path;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::{
    commutator_table, diff_tables, golden_table, load_point_generators, load_potential_generators, potentiality_filter,
    printed_projections, printed_w5, project_potential_symmetries, GeneratorRecord,
};
use crate::determining::{
    check_membership, derive_determining, parse_constraints, verify_generator, Ansatz, MembershipReport,
    DEFAULT_CLOSURE_ORDER, POTENTIAL_DRIFT_VARIANTS, POTENTIAL_PHI_TV_CORRECTED, REFERENCE_POINT_SYSTEM,
    REFERENCE_POTENTIAL_SYSTEM,
};
use crate::expr::{equal_with, parse, Bindings, Expr, Rational, SamplingConfig, Verdict};
use crate::fpe::{auxiliary_system, fpe_delta, jacobian_rank_check, FormalRule, FpeParams};
use crate::numeric::{fd_residual, GridSpec, NumericVerdict, Thresholds};
use crate::solutions::{
    branch_conditions_check, branch_table, chain, claim, compare_y1_constraints, exact_residual, parse_solution, Claim,
    OperatorId, SolutionRecord,
};

pub const SCHEMA: &str = "fpsym.report/v1";
/// Environment variable naming a TOML file with default settings.
pub const CONFIG_ENV: &str = "FPSYM_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("a2 must be nonzero")]
    ZeroA2,
    #[error("invalid parameter value `{0}` (expected a rational such as 1, -3/2, or `sym`)")]
    BadParam(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid {what}: {value}")]
    Invalid { what: &'static str, value: String },
    #[error("cannot read config {path}: {msg}")]
    File { path: String, msg: String },
}

/// A drift parameter: a rational value or the symbol itself.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Symbolic,
    Value(Rational),
}

impl FromStr for ParamValue {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("sym") || s.is_empty() {
            return Ok(ParamValue::Symbolic);
        }
        let bad = || ConfigError::BadParam(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim().parse::<i64>().map_err(|_| bad())?, d.trim().parse::<i64>().map_err(|_| bad())?),
            None => (s.parse::<i64>().map_err(|_| bad())?, 1),
        };
        if d == 0 {
            return Err(bad());
        }
        Ok(ParamValue::Value(crate::expr::rat(n, d)))
    }
}

impl ParamValue {
    fn expr(&self, name: &str) -> Expr {
        match self {
            ParamValue::Symbolic => Expr::param(name),
            ParamValue::Value(v) => Expr::constant(v.clone()),
        }
    }

    fn describe(&self) -> String {
        match self {
            ParamValue::Symbolic => "sym".into(),
            ParamValue::Value(v) => v.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Text,
    Structured,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Format::Text),
            "structured" | "json" => Ok(Format::Structured),
            _ => Err(ConfigError::Invalid { what: "format", value: s.into() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub a1: ParamValue,
    pub a2: ParamValue,
    pub grid: GridSpec,
    pub thresholds: Thresholds,
    pub seed: u64,
    pub format: Format,
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            a1: ParamValue::Symbolic,
            a2: ParamValue::Symbolic,
            grid: GridSpec::default(),
            thresholds: Thresholds::default(),
            seed: SamplingConfig::default().seed,
            format: Format::Text,
            strict: false,
        }
    }
}

/// Optional settings as read from a TOML file or the command line.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub a1: Option<String>,
    pub a2: Option<String>,
    pub grid: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub strict: Option<bool>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::File { path: "<toml>".into(), msg: e.to_string() })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::File { path: path.display().to_string(), msg: e.to_string() })?;
        toml::from_str(&text).map_err(|e| ConfigError::File { path: path.display().to_string(), msg: e.to_string() })
    }

    /// Later values win.
    pub fn merge(self, over: ConfigOverrides) -> ConfigOverrides {
        ConfigOverrides {
            a1: over.a1.or(self.a1),
            a2: over.a2.or(self.a2),
            grid: over.grid.or(self.grid),
            tol: over.tol.or(self.tol),
            seed: over.seed.or(self.seed),
            format: over.format.or(self.format),
            strict: over.strict.or(self.strict),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(s) = &self.a1 {
            cfg.a1 = s.parse()?;
        }
        if let Some(s) = &self.a2 {
            cfg.a2 = s.parse()?;
        }
        if matches!(&cfg.a2, ParamValue::Value(v) if v.is_zero()) {
            return Err(ConfigError::ZeroA2);
        }
        if let Some(g) = &self.grid {
            cfg.grid = GridSpec::parse(g).map_err(|e| ConfigError::Grid(e.to_string()))?;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError::Invalid { what: "tolerance", value: t.to_string() });
            }
            cfg.thresholds.tau = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse()?;
        }
        if let Some(s) = self.strict {
            cfg.strict = s;
        }
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn params(&self) -> FpeParams {
        FpeParams { a1: self.a1.expr("a1"), a2: self.a2.expr("a2") }
    }

    fn numeric_pair(&self) -> Option<(f64, f64)> {
        use num_traits::ToPrimitive;
        match (&self.a1, &self.a2) {
            (ParamValue::Value(a), ParamValue::Value(b)) => Some((a.to_f64()?, b.to_f64()?)),
            _ => None,
        }
    }

    fn sampling(&self) -> SamplingConfig {
        SamplingConfig { seed: self.seed, ..SamplingConfig::default() }
    }

    fn echo(&self) -> Value {
        json!({
            "a1": self.a1.describe(),
            "a2": self.a2.describe(),
            "grid": self.grid,
            "thresholds": self.thresholds,
            "seed": self.seed,
            "strict": self.strict,
        })
    }
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
    /// Informational; never affects the exit code.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub id: String,
    pub anchor: String,
    pub outcome: Outcome,
    pub summary: String,
    pub detail: Value,
}

impl ReportItem {
    fn new(id: impl Into<String>, anchor: &str, outcome: Outcome, summary: impl Into<String>, detail: Value) -> Self {
        ReportItem { id: id.into(), anchor: anchor.into(), outcome, summary: summary.into(), detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub inputs: Value,
    pub items: Vec<ReportItem>,
    pub version: String,
    /// Wall-clock milliseconds; the only field that varies between identical runs.
    pub timing_ms: f64,
}

impl Report {
    fn new(command: &str, inputs: Value, items: Vec<ReportItem>) -> Self {
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            inputs,
            items,
            version: env!("CARGO_PKG_VERSION").into(),
            timing_ms: 0.0,
        }
    }

    /// 0 when nothing failed, 1 on any failure, 3 when only inconclusive items remain.
    pub fn exit_code(&self) -> i32 {
        if self.items.iter().any(|i| i.outcome == Outcome::Fail) {
            1
        } else if self.items.iter().any(|i| i.outcome == Outcome::Inconclusive) {
            3
        } else {
            0
        }
    }

    pub fn to_structured(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_structured(s: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} ({} {})\n", self.command, SCHEMA, self.version);
        for it in &self.items {
            let tag = match it.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Inconclusive => "INCONCLUSIVE",
                Outcome::Info => "INFO",
            };
            out.push_str(&format!("[{tag}] {} <{}>: {}\n", it.id, it.anchor, it.summary));
        }
        let count = |o: Outcome| self.items.iter().filter(|i| i.outcome == o).count();
        out.push_str(&format!(
            "{} pass, {} fail, {} inconclusive, {} info; exit {}\n",
            count(Outcome::Pass),
            count(Outcome::Fail),
            count(Outcome::Inconclusive),
            count(Outcome::Info),
            self.exit_code()
        ));
        out
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Text => self.to_text(),
            Format::Structured => self.to_structured(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

// ---------------------------------------------------------------------------
// verify

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyTarget {
    Point,
    Potential,
    All,
}

impl FromStr for VerifyTarget {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "point" => Ok(VerifyTarget::Point),
            "potential" => Ok(VerifyTarget::Potential),
            "all" => Ok(VerifyTarget::All),
            _ => Err(CommandError::Usage(format!("unknown target `{s}` (point|potential|all)"))),
        }
    }
}

fn generator_items(gens: &[GeneratorRecord]) -> Vec<ReportItem> {
    gens.iter()
        .map(|g| {
            let outcome = if g.report.pass { Outcome::Pass } else { Outcome::Fail };
            ReportItem::new(
                g.id.clone(),
                g.anchor,
                outcome,
                format!("{} residual(s) vanish ({:?})", g.report.residuals.len(), g.report.method),
                json!({ "field": g.field.to_string(), "target": g.target, "verification": g.report }),
            )
        })
        .collect()
}

pub fn cmd_verify(target: VerifyTarget, cfg: &RunConfig) -> Report {
    let p = cfg.params();
    let mut items = Vec::new();
    if matches!(target, VerifyTarget::Point | VerifyTarget::All) {
        match load_point_generators(&p) {
            Ok(g) => items.extend(generator_items(&g)),
            Err(e) => items.push(ReportItem::new("point-catalog", "point-symmetry-generators", Outcome::Fail, e.to_string(), Value::Null)),
        }
    }
    if matches!(target, VerifyTarget::Potential | VerifyTarget::All) {
        match load_potential_generators(&p) {
            Ok(gens) => {
                items.extend(generator_items(&gens));
                let filtered: Vec<GeneratorRecord> = gens.iter().filter(|g| potentiality_filter(g)).cloned().collect();
                let ids: Vec<&str> = filtered.iter().map(|g| g.id.as_str()).collect();
                let outcome = if ids == ["W3", "W5"] { Outcome::Pass } else { Outcome::Fail };
                items.push(ReportItem::new(
                    "potentiality-filter",
                    "only-w3-w5-depend-on-v",
                    outcome,
                    format!("generators depending on v: {ids:?}"),
                    json!({ "selected": ids }),
                ));
                let projected = project_potential_symmetries(&filtered);
                match printed_projections(&p) {
                    Ok(printed) => {
                        for (id, want) in printed {
                            let got = projected.iter().find(|g| g.id == id);
                            let ok = got.is_some_and(|g| g.field == want);
                            items.push(ReportItem::new(
                                id.clone(),
                                "potential-symmetries",
                                if ok { Outcome::Pass } else { Outcome::Fail },
                                if ok { "projection equals printed field".to_string() } else { "projection differs".to_string() },
                                json!({ "printed": want.to_string(), "projected": got.map(|g| g.field.to_string()) }),
                            ));
                        }
                    }
                    Err(e) => items.push(ReportItem::new("projections", "potential-symmetries", Outcome::Fail, e.to_string(), Value::Null)),
                }
            }
            Err(e) => items.push(ReportItem::new("potential-catalog", "potential-system-generators", Outcome::Fail, e.to_string(), Value::Null)),
        }
        if let Ok(w5) = printed_w5(&p) {
            if let Ok((r, _)) = verify_generator(&w5, &auxiliary_system(&p), 2, &[]) {
                items.push(ReportItem::new(
                    "W5-as-printed",
                    "potential-system-generators",
                    Outcome::Info,
                    if r.pass {
                        "printed dv coefficient verifies".to_string()
                    } else {
                        "printed dv coefficient does not verify; catalog uses -(2(a2x+a1)^2-a2)v e^(-2a2t)".to_string()
                    },
                    json!({ "verification": r }),
                ));
            }
        }
    }
    Report::new("verify", json!({ "target": target, "config": cfg.echo() }), items)
}

// ---------------------------------------------------------------------------
// table

pub fn cmd_table(cfg: &RunConfig) -> Report {
    let p = cfg.params();
    let inputs = json!({ "config": cfg.echo() });
    let gens = match load_point_generators(&p) {
        Ok(g) => g,
        Err(e) => {
            let it = ReportItem::new("point-catalog", "point-symmetry-generators", Outcome::Fail, e.to_string(), Value::Null);
            return Report::new("table", inputs, vec![it]);
        }
    };
    let table = match commutator_table(&gens) {
        Ok(t) => t,
        Err(e) => {
            let it = ReportItem::new("commutator-table", "commutator-table", Outcome::Fail, e.to_string(), Value::Null);
            return Report::new("table", inputs, vec![it]);
        }
    };
    let golden = match golden_table(&p) {
        Ok(g) => g,
        Err(e) => {
            let it = ReportItem::new("golden-table", "commutator-table", Outcome::Fail, e.to_string(), Value::Null);
            return Report::new("table", inputs, vec![it]);
        }
    };
    let rule = FormalRule::fpe("alpha", &p);
    let diffs = diff_tables(&table, &golden, Some(&rule));
    let mut items = Vec::new();
    for (l, r) in golden.entries.keys() {
        let d = diffs.iter().find(|d| &d.left == l && &d.right == r);
        let found = table.get(l, r).map(|e| e.render()).unwrap_or_default();
        items.push(ReportItem::new(
            format!("[{l},{r}]"),
            "commutator-table",
            if d.is_none() { Outcome::Pass } else { Outcome::Fail },
            found.clone(),
            json!({ "computed": found, "diff": d }),
        ));
    }
    items.push(ReportItem::new(
        "table-export",
        "commutator-table",
        Outcome::Info,
        format!("{} entries, {} diffs", table.len(), diffs.len()),
        json!({ "grid": table.grid(), "table": table.export() }),
    ));
    Report::new("table", inputs, items)
}

// ---------------------------------------------------------------------------
// generate

pub fn cmd_generate(seed: &str, ops: &[String], cfg: &RunConfig) -> Result<Report, CommandError> {
    let p = cfg.params();
    let expr = parse_solution(seed).map_err(|e| CommandError::Usage(format!("seed: {e}")))?;
    let ops: Vec<OperatorId> =
        ops.iter().map(|o| o.parse::<OperatorId>()).collect::<Result<_, _>>().map_err(|e| CommandError::Usage(e.to_string()))?;
    let inputs = json!({ "seed": seed, "ops": ops, "config": cfg.echo() });
    let rec = SolutionRecord::unchecked("seed", expr, "solution-chain");
    let items = match chain(&rec, &ops, &p) {
        Ok(out) => out
            .iter()
            .map(|r| {
                ReportItem::new(
                    r.id.clone(),
                    "solution-chain",
                    Outcome::Pass,
                    r.expression.to_string(),
                    json!({ "expression": r.expression.to_string(), "status": r.status, "provenance": r.provenance }),
                )
            })
            .collect(),
        Err(e) => vec![ReportItem::new("chain", "solution-chain", Outcome::Fail, e.to_string(), Value::Null)],
    };
    Ok(Report::new("generate", inputs, items))
}

// ---------------------------------------------------------------------------
// check

pub enum CheckInput {
    Expr(String),
    Claim(String),
}

fn bind_constants(e: &Expr, constants: &[(&str, i64)]) -> Expr {
    let mut b = Bindings::new();
    for name in ["a", "b", "c", "lambda"] {
        let v = constants.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).unwrap_or(1);
        b = b.param(name, Expr::int(v));
    }
    e.substitute(&b)
}

fn numeric_item(id: &str, anchor: &str, e: &Expr, a1: f64, a2: f64, cfg: &RunConfig) -> ReportItem {
    let run = |g: &GridSpec| fd_residual(e, a1, a2, g, &cfg.thresholds);
    let (base, fine) = match (run(&cfg.grid), run(&cfg.grid.refined())) {
        (Ok(b), Ok(f)) => (b, f),
        (Err(err), _) | (_, Err(err)) => {
            return ReportItem::new(format!("{id}@({a1},{a2})"), anchor, Outcome::Inconclusive, err.to_string(), Value::Null)
        }
    };
    let stable = base.verdict == fine.verdict;
    let outcome = match (stable, base.verdict) {
        (true, NumericVerdict::Verified) => Outcome::Pass,
        (true, NumericVerdict::Refuted) => Outcome::Fail,
        _ => Outcome::Inconclusive,
    };
    let summary = format!(
        "finite differences: {:?} (refined: {:?}), orders {:?}, extrapolated {:.3e}",
        base.verdict,
        fine.verdict,
        base.orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>(),
        base.extrapolated
    );
    ReportItem::new(
        format!("{id}@({a1},{a2})"),
        anchor,
        outcome,
        summary,
        json!({ "a1": a1, "a2": a2, "stable": stable, "base": base, "refined": fine }),
    )
}

/// A grid that cannot decide does not override a definitive symbolic verdict.
fn demote_if_decided(mut it: ReportItem, decided: bool) -> ReportItem {
    if decided && it.outcome == Outcome::Inconclusive {
        it.outcome = Outcome::Info;
    }
    it
}

fn symbolic_item(id: &str, anchor: &str, e: &Expr, p: &FpeParams, sampling: &SamplingConfig) -> ReportItem {
    match exact_residual(e, p) {
        Ok(mut r) => {
            r.verdict = equal_with(&r.residual, &Expr::zero(), sampling).verdict;
            let outcome = match r.verdict {
                Verdict::Equal => Outcome::Pass,
                Verdict::NotEqual => Outcome::Fail,
                Verdict::Inconclusive => Outcome::Inconclusive,
            };
            let summary = match r.verdict {
                Verdict::Equal => "symbolically verified: residual is 0".to_string(),
                Verdict::NotEqual => format!("refuted: residual {}", r.residual),
                Verdict::Inconclusive => "symbolic residual outside the canonical class".to_string(),
            };
            ReportItem::new(format!("{id}:symbolic"), anchor, outcome, summary, json!({ "residual": r.residual.to_string() }))
        }
        Err(err) => ReportItem::new(format!("{id}:symbolic"), anchor, Outcome::Inconclusive, err.to_string(), Value::Null),
    }
}

fn claim_items(c: &Claim, cfg: &RunConfig) -> Result<Vec<ReportItem>, CommandError> {
    let mut items = Vec::new();
    let e = c.expression().map_err(|e| CommandError::Usage(e.to_string()))?;
    let mut p = cfg.params();
    if let Some(v) = c.a2 {
        p.a2 = Expr::int(v);
    }
    let symbolic = symbolic_item(c.id, c.anchor, &e, &p, &cfg.sampling());
    let decided = symbolic.outcome != Outcome::Inconclusive;
    items.push(symbolic);
    let points: Vec<(f64, f64)> = match cfg.numeric_pair() {
        Some(pair) => vec![pair],
        None => c.checkpoints.iter().map(|&(a, b)| (a as f64, b as f64)).collect(),
    };
    let inst = bind_constants(&e, c.constants);
    for (a1, a2) in points {
        if c.a2.is_some_and(|v| v as f64 != a2) {
            continue;
        }
        items.push(demote_if_decided(numeric_item(c.id, c.anchor, &inst, a1, a2, cfg), decided));
    }
    if c.id == "y1-final-solution" {
        for cmp in compare_y1_constraints(&cfg.params()).map_err(|e| CommandError::Usage(e.to_string()))? {
            items.push(ReportItem::new(
                format!("y1-ode-constraint:x^{}", cmp.power_of_x),
                "y1-ode-constraints",
                if cmp.agrees { Outcome::Pass } else { Outcome::Fail },
                format!("derived {} = 0; printed {}", cmp.derived, cmp.printed.clone().unwrap_or_else(|| "-".into())),
                serde_json::to_value(&cmp).unwrap_or(Value::Null),
            ));
        }
    }
    if c.id == "y2-a2-2-solution" {
        let p2 = FpeParams { a1: cfg.params().a1, a2: Expr::int(2) };
        let t = branch_table();
        let f = parse("c*z^2", &t).expect("valid");
        for (label, g) in [("g=4*a1*c*z^2", "4*a1*c*z^2"), ("g=0", "0")] {
            let g = parse(g, &t).expect("valid");
            if let Ok(conds) = branch_conditions_check(&f, &g, &p2) {
                let held: Vec<usize> = conds.iter().filter(|c| c.holds).map(|c| c.index).collect();
                items.push(ReportItem::new(
                    format!("branch-conditions:{label}"),
                    "fixed-a2-branch-conditions",
                    Outcome::Info,
                    format!("f=c*z^2, {label}: conditions holding {held:?} of [1, 2, 3, 4]"),
                    serde_json::to_value(&conds).unwrap_or(Value::Null),
                ));
            }
        }
    }
    Ok(items)
}

pub fn cmd_check(input: &CheckInput, cfg: &RunConfig) -> Result<Report, CommandError> {
    let (inputs, items) = match input {
        CheckInput::Claim(id) => {
            let c = claim(id).map_err(|e| CommandError::Usage(e.to_string()))?;
            (json!({ "claim": id, "expression": c.expression, "config": cfg.echo() }), claim_items(c, cfg)?)
        }
        CheckInput::Expr(s) => {
            let e = parse_solution(s).map_err(|e| CommandError::Usage(format!("expression: {e}")))?;
            let p = cfg.params();
            let mut items = vec![symbolic_item("expr", "user-expression", &e, &p, &cfg.sampling())];
            let (a1, a2) = cfg.numeric_pair().unwrap_or((1.0, 1.0));
            if !e.has_funcs() {
                let decided = items[0].outcome != Outcome::Inconclusive;
                let it = numeric_item("expr", "user-expression", &bind_constants(&e, &[]), a1, a2, cfg);
                items.push(demote_if_decided(it, decided));
            }
            (json!({ "expression": s, "config": cfg.echo() }), items)
        }
    };
    Ok(Report::new("check", inputs, items))
}

// ---------------------------------------------------------------------------
// determining

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemId {
    Fpe,
    Auxiliary,
}

impl FromStr for SystemId {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fpe" => Ok(SystemId::Fpe),
            "auxiliary" | "potential" => Ok(SystemId::Auxiliary),
            _ => Err(CommandError::Usage(format!("unknown system `{s}` (fpe|auxiliary)"))),
        }
    }
}

fn membership_items(r: &MembershipReport, anchor: &str, strict: bool, items: &mut Vec<ReportItem>) {
    let miss = if strict { Outcome::Fail } else { Outcome::Info };
    for (side, list) in [("printed-in-derived", &r.claimed_in_derived), ("derived-in-printed", &r.derived_in_claimed)] {
        for m in list {
            let (outcome, word) = match m.contained {
                Some(true) => (Outcome::Pass, "contained"),
                Some(false) => (miss, "NOT contained"),
                None => (Outcome::Inconclusive, "undecided"),
            };
            items.push(ReportItem::new(
                format!("{side}: {}", m.constraint),
                anchor,
                outcome,
                word,
                json!({ "contained": m.contained, "closure_order": r.closure_order }),
            ));
        }
    }
}

pub fn cmd_determining(system: SystemId, cfg: &RunConfig) -> Report {
    // The printed systems are written for symbolic parameters.
    let p = FpeParams::symbolic();
    let (sys, ansatz, printed, anchor) = match system {
        SystemId::Fpe => (fpe_delta(&p), Ansatz::point(), REFERENCE_POINT_SYSTEM, "point-determining-system"),
        SystemId::Auxiliary => (auxiliary_system(&p), Ansatz::potential(), REFERENCE_POTENTIAL_SYSTEM, "potential-determining-system"),
    };
    let inputs = json!({ "system": system, "config": cfg.echo() });
    let mut items = Vec::new();
    let jac = jacobian_rank_check(&sys.exprs(), &sys.ctx);
    items.push(ReportItem::new(
        "maximal-rank",
        "jacobian-nonvanishing",
        if jac.full_rank { Outcome::Pass } else { Outcome::Fail },
        format!(
            "gradient over {:?}: {}",
            jac.coordinates,
            jac.rows.iter().map(|r| format!("({})", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))).collect::<Vec<_>>().join("; ")
        ),
        json!({
            "coordinates": jac.coordinates,
            "rows": jac.rows.iter().map(|r| r.iter().map(|e| e.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "full_rank": jac.full_rank,
        }),
    ));
    let derived = match derive_determining(&sys, &ansatz, 2) {
        Ok(d) => d,
        Err(e) => {
            items.push(ReportItem::new("derive", anchor, Outcome::Fail, e.to_string(), Value::Null));
            return Report::new("determining", inputs, items);
        }
    };
    for c in &derived.constraints {
        items.push(ReportItem::new(format!("derived: {c}"), anchor, Outcome::Info, "derived constraint", Value::Null));
    }
    let claimed = match parse_constraints(printed, &ansatz) {
        Ok(c) => c,
        Err(e) => {
            items.push(ReportItem::new("printed", anchor, Outcome::Fail, e.to_string(), Value::Null));
            return Report::new("determining", inputs, items);
        }
    };
    let r = check_membership(&claimed, &derived.constraints, &ansatz.ctx, DEFAULT_CLOSURE_ORDER);
    membership_items(&r, anchor, cfg.strict, &mut items);
    if system == SystemId::Auxiliary {
        if let Ok(fixed) = parse_constraints(&[POTENTIAL_PHI_TV_CORRECTED], &ansatz) {
            let rf = check_membership(&fixed, &derived.constraints, &ansatz.ctx, DEFAULT_CLOSURE_ORDER);
            let ok = rf.claimed_in_derived[0].contained == Some(true);
            items.push(ReportItem::new(
                "phi_tv-corrected",
                anchor,
                Outcome::Info,
                format!("{POTENTIAL_PHI_TV_CORRECTED}: {}", if ok { "contained" } else { "not contained" }),
                json!({ "contained": rf.claimed_in_derived[0].contained }),
            ));
        }
        let variants: Vec<&str> = POTENTIAL_DRIFT_VARIANTS.iter().map(|v| v.1).collect();
        if let Ok(vs) = parse_constraints(&variants, &ansatz) {
            let rv = check_membership(&vs, &derived.constraints, &ansatz.ctx, 2);
            for ((label, _), m) in POTENTIAL_DRIFT_VARIANTS.iter().zip(&rv.claimed_in_derived) {
                items.push(ReportItem::new(
                    format!("drift-sign:{label}"),
                    "potential-evolution-constraint",
                    Outcome::Info,
                    format!("evolution constraint with drift {label}: contained = {:?}", m.contained),
                    json!({ "contained": m.contained }),
                ));
            }
        }
    }
    Report::new("determining", inputs, items)
}
