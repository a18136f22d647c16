//! Named generators, the potentiality filter, and the commutator table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::determining::{verify_generator, DeterminingError, VerificationReport};
use crate::expr::linear::{solve_linear, LinearError};
use crate::expr::{equal, parse, sym, Coord, Expr, ParseError, SymbolTable};
use crate::fpe::{auxiliary_system, fpe_delta, reduce_modulo, FormalRule, FpeParams, PdeSystem};
use crate::jet::{lie_bracket, JetContext, VectorField};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("generator {id} fails verification; residuals: {residuals:?}")]
    Verification { id: String, residuals: Vec<String> },
    #[error("bracket [{left},{right}] is not in the span of the basis: {source}")]
    NotInSpan { left: String, right: String, source: LinearError },
    #[error("unknown generator {0}")]
    Unknown(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Determining(#[from] DeterminingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Fpe,
    Auxiliary,
}

impl Target {
    pub fn system(self, p: &FpeParams) -> PdeSystem {
        match self {
            Target::Fpe => fpe_delta(p),
            Target::Auxiliary => auxiliary_system(p),
        }
    }
}

/// A generator together with the report that admitted it to the catalog.
#[derive(Clone, Debug)]
pub struct GeneratorRecord {
    pub id: String,
    pub field: VectorField,
    pub target: Target,
    pub anchor: &'static str,
    /// Defining rule of the formal function carried by `Valpha` / `Wbeta`.
    pub rule: Option<FormalRule>,
    pub report: VerificationReport,
}

/// Symbols used in catalog and table strings.
pub fn symbol_table() -> SymbolTable {
    SymbolTable::fpe().with_deps(&["v"]).with_func("alpha", &["x", "t"]).with_func("beta", &["x", "t"])
}

fn field_from(ctx: &JetContext, p: &FpeParams, parts: &[(&str, &str)]) -> Result<VectorField, ParseError> {
    let table = symbol_table();
    let mut v = VectorField::zero(ctx);
    for (coord, text) in parts {
        v = v.with(coord, p.bind(&parse(text, &table)?));
    }
    Ok(v)
}

const POINT: &[(&str, &[(&str, &str)])] = &[
    ("V1", &[("x", "exp(a2*t)")]),
    ("V2", &[("u", "u")]),
    ("V3", &[("x", "1/(2*a2)*exp(-a2*t)"), ("u", "(a2*x+a1)*u/a2*exp(-a2*t)")]),
    ("V4", &[("t", "1")]),
    (
        "V5",
        &[("t", "exp(-2*a2*t)"), ("x", "-(a2*x+a1)*exp(-2*a2*t)"), ("u", "-2*(a2*x+a1)^2*exp(-2*a2*t)*u")],
    ),
    ("V6", &[("t", "exp(2*a2*t)"), ("x", "(a2*x+a1)*exp(2*a2*t)"), ("u", "-a2*u*exp(2*a2*t)")]),
];

const W3: &[(&str, &str)] = &[
    ("x", "1/(2*a2)*exp(-a2*t)"),
    ("u", "((x+a1/a2)*u+v)*exp(-a2*t)"),
    ("v", "(a1/a2*v+x*v)*exp(-a2*t)"),
];

const W5_BASE: [(&str, &str); 3] = [
    ("x", "-(a2*x+a1)*exp(-2*a2*t)"),
    ("t", "exp(-2*a2*t)"),
    ("u", "-2*(((a2*x+a1)^2-a2)*u+2*a2*(a2*x+a1)*v)*exp(-2*a2*t)"),
];

/// The `∂v` coefficient of `W5` as printed; it does not yield a symmetry.
pub const W5_PRINTED_V: &str = "-2*((a2*x+a1)^2-a2)*v*exp(-2*a2*t)";
/// The `∂v` coefficient for which `W5` is a symmetry of the potential system.
pub const W5_CORRECTED_V: &str = "-(2*(a2*x+a1)^2-a2)*v*exp(-2*a2*t)";

const W6: &[(&str, &str)] = &[("t", "exp(2*a2*t)"), ("x", "(a2*x+a1)*exp(2*a2*t)"), ("u", "-a2*u*exp(2*a2*t)")];

fn potential_parts(w5_v: &'static str) -> Vec<(&'static str, Vec<(&'static str, &'static str)>)> {
    let mut w5 = W5_BASE.to_vec();
    w5.push(("v", w5_v));
    vec![
        ("W1", vec![("x", "exp(a2*t)")]),
        ("W2", vec![("u", "u"), ("v", "v")]),
        ("W3", W3.to_vec()),
        ("W4", vec![("t", "1")]),
        ("W5", w5),
        ("W6", W6.to_vec()),
    ]
}

fn admit(
    id: &str,
    field: VectorField,
    target: Target,
    anchor: &'static str,
    rule: Option<FormalRule>,
    p: &FpeParams,
) -> Result<GeneratorRecord, CatalogError> {
    let rules: Vec<FormalRule> = rule.iter().cloned().collect();
    let (report, _) = verify_generator(&field, &target.system(p), 2, &rules)?;
    if !report.pass {
        return Err(CatalogError::Verification { id: id.into(), residuals: report.residuals });
    }
    Ok(GeneratorRecord { id: id.into(), field, target, anchor, rule, report })
}

/// `V1…V6` and `Valpha`, each verified against the FPE.
pub fn load_point_generators(p: &FpeParams) -> Result<Vec<GeneratorRecord>, CatalogError> {
    let ctx = JetContext::scalar(4);
    let mut out = Vec::new();
    for (id, parts) in POINT {
        out.push(admit(id, field_from(&ctx, p, parts)?, Target::Fpe, "point-symmetry-generators", None, p)?);
    }
    let va = field_from(&ctx, p, &[("u", "alpha(x,t)")])?;
    out.push(admit("Valpha", va, Target::Fpe, "point-symmetry-generators", Some(FormalRule::fpe("alpha", p)), p)?);
    Ok(out)
}

/// `W1…W6` and `Wbeta`, each verified against the potential system. `W5`
/// carries [`W5_CORRECTED_V`] as its `∂v` coefficient.
pub fn load_potential_generators(p: &FpeParams) -> Result<Vec<GeneratorRecord>, CatalogError> {
    let ctx = JetContext::potential(4);
    let mut out = Vec::new();
    for (id, parts) in potential_parts(W5_CORRECTED_V) {
        out.push(admit(id, field_from(&ctx, p, &parts)?, Target::Auxiliary, "potential-system-generators", None, p)?);
    }
    let wb = field_from(&ctx, p, &[("u", "beta_x(x,t)"), ("v", "beta(x,t)")])?;
    let rule = FormalRule::potential("beta", p);
    out.push(admit("Wbeta", wb, Target::Auxiliary, "potential-system-generators", Some(rule), p)?);
    Ok(out)
}

/// `W5` exactly as printed, without load-time verification.
pub fn printed_w5(p: &FpeParams) -> Result<VectorField, CatalogError> {
    let parts = potential_parts(W5_PRINTED_V).remove(4).1;
    Ok(field_from(&JetContext::potential(4), p, &parts)?)
}

/// True iff `ξ`, `τ` or `η` depends on the potential `v`.
pub fn potentiality_filter(g: &GeneratorRecord) -> bool {
    let v = Coord::dep("v");
    ["x", "t", "u"].iter().any(|c| !g.field.coefficient(c).diff(&v).is_zero())
}

/// Drops the `∂v` component of each generator passing the filter, renaming
/// `W3 → Y1`, `W5 → Y2`.
pub fn project_potential_symmetries(filtered: &[GeneratorRecord]) -> Vec<GeneratorRecord> {
    filtered
        .iter()
        .map(|g| {
            let id = match g.id.as_str() {
                "W3" => "Y1".to_string(),
                "W5" => "Y2".to_string(),
                other => format!("{other}-projected"),
            };
            GeneratorRecord { id, field: g.field.without("v"), anchor: "potential-symmetries", ..g.clone() }
        })
        .collect()
}

/// The printed `Y1`, `Y2`.
pub fn printed_projections(p: &FpeParams) -> Result<Vec<(String, VectorField)>, CatalogError> {
    let ctx = JetContext::potential(4);
    let y1 = field_from(&ctx, p, &W3[..2])?.without("v");
    let y2 = field_from(&ctx, p, &W5_BASE)?.without("v");
    Ok(vec![("Y1".into(), y1), ("Y2".into(), y2)])
}

// ---------------------------------------------------------------------------
// Commutator table

#[derive(Clone, Debug, PartialEq)]
pub enum TableEntry {
    /// Coefficients over the basis `V1…V6`; absent ids have coefficient 0.
    Combination(BTreeMap<String, Expr>),
    /// `V_image`, i.e. `image ∂u`, for brackets with `Valpha`.
    Image(Expr),
}

impl TableEntry {
    fn negate(&self) -> TableEntry {
        match self {
            TableEntry::Combination(m) => TableEntry::Combination(m.iter().map(|(k, v)| (k.clone(), -v)).collect()),
            TableEntry::Image(e) => TableEntry::Image(-e),
        }
    }

    pub fn render(&self) -> String {
        match self {
            TableEntry::Combination(m) if m.is_empty() => "0".into(),
            TableEntry::Combination(m) => {
                m.iter().map(|(k, c)| format!("({c})*{k}")).collect::<Vec<_>>().join(" + ")
            }
            TableEntry::Image(e) => format!("V[{e}]"),
        }
    }
}

/// Brackets `[left, right]` for `left` before `right` in catalog order.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorTable {
    pub order: Vec<String>,
    pub entries: BTreeMap<(String, String), TableEntry>,
}

impl CommutatorTable {
    /// `[a, b]`, using antisymmetry for pairs stored the other way round.
    pub fn get(&self, a: &str, b: &str) -> Option<TableEntry> {
        if a == b {
            return Some(TableEntry::Combination(BTreeMap::new()));
        }
        if let Some(e) = self.entries.get(&(a.to_string(), b.to_string())) {
            return Some(e.clone());
        }
        self.entries.get(&(b.to_string(), a.to_string())).map(|e| e.negate())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Text grid with one row per generator.
    pub fn grid(&self) -> String {
        let mut out = String::new();
        for a in &self.order {
            for b in &self.order {
                if let Some(e) = self.entries.get(&(a.clone(), b.clone())) {
                    out.push_str(&format!("[{a},{b}] = {}\n", e.render()));
                }
            }
        }
        out
    }

    pub fn export(&self) -> TableExport {
        let rows = self
            .order
            .iter()
            .flat_map(|a| self.order.iter().map(move |b| (a, b)))
            .filter_map(|(a, b)| {
                let e = self.entries.get(&(a.clone(), b.clone()))?;
                let (combination, image) = match e {
                    TableEntry::Combination(m) => (m.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(), None),
                    TableEntry::Image(img) => (BTreeMap::new(), Some(img.to_string())),
                };
                Some(TableRow { left: a.clone(), right: b.clone(), combination, image })
            })
            .collect();
        TableExport { order: self.order.clone(), rows }
    }

    pub fn import(export: &TableExport) -> Result<Self, CatalogError> {
        let table = symbol_table();
        let mut entries = BTreeMap::new();
        for r in &export.rows {
            let entry = match &r.image {
                Some(img) => TableEntry::Image(parse(img, &table)?),
                None => TableEntry::Combination(
                    r.combination.iter().map(|(k, v)| Ok((k.clone(), parse(v, &table)?))).collect::<Result<_, ParseError>>()?,
                ),
            };
            entries.insert((r.left.clone(), r.right.clone()), entry);
        }
        Ok(CommutatorTable { order: export.order.clone(), entries })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub left: String,
    pub right: String,
    pub combination: BTreeMap<String, String>,
    pub image: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableExport {
    pub order: Vec<String>,
    pub rows: Vec<TableRow>,
}

/// Expresses `w` as `Σ cᵢ Vᵢ` with `cᵢ` in the parameter ring.
pub fn express_in_basis(w: &VectorField, basis: &[GeneratorRecord]) -> Result<BTreeMap<String, Expr>, LinearError> {
    let unknowns: Vec<_> = (0..basis.len()).map(|i| sym(&format!("c{}", i + 1))).collect();
    let mut combo = VectorField::zero(&JetContext::scalar(4));
    for (g, c) in basis.iter().zip(&unknowns) {
        combo = combo.add(&g.field.scale(&Expr::param(c)));
    }
    let diff = w.sub(&combo);
    let eqs: Vec<Expr> = diff.components().map(|(_, e)| e.clone()).collect();
    let sol = solve_linear(&eqs, &unknowns)?;
    Ok(basis
        .iter()
        .zip(&unknowns)
        .map(|(g, c)| (g.id.clone(), sol.value(c)))
        .filter(|(_, v)| !v.is_zero())
        .collect())
}

/// All brackets among the point generators. Brackets of two `V`s are solved
/// in the basis `V1…V6`; brackets with `Valpha` are reported by their `∂u` image.
pub fn commutator_table(gens: &[GeneratorRecord]) -> Result<CommutatorTable, CatalogError> {
    let basis: Vec<GeneratorRecord> = gens.iter().filter(|g| g.rule.is_none()).cloned().collect();
    let mut entries = BTreeMap::new();
    for (i, a) in gens.iter().enumerate() {
        for b in &gens[i + 1..] {
            let w = lie_bracket(&a.field, &b.field);
            let entry = if a.rule.is_some() || b.rule.is_some() {
                TableEntry::Image(w.coefficient("u"))
            } else {
                let combo = express_in_basis(&w, &basis).map_err(|source| CatalogError::NotInSpan {
                    left: a.id.clone(),
                    right: b.id.clone(),
                    source,
                })?;
                TableEntry::Combination(combo)
            };
            entries.insert((a.id.clone(), b.id.clone()), entry);
        }
    }
    Ok(CommutatorTable { order: gens.iter().map(|g| g.id.clone()).collect(), entries })
}

/// Golden table entries as `(left, right, kind, value)`: kind `"c"` lists
/// `coef*id` terms separated by `;`, kind `"img"` gives the `∂u` image.
pub const GOLDEN_TABLE: &[(&str, &str, &str, &str)] = &[
    ("V1", "V2", "c", ""),
    ("V1", "V3", "c", "1*V2"),
    ("V1", "V4", "c", "-a2*V1"),
    ("V1", "V5", "c", "-4*a2^2*V3"),
    ("V1", "V6", "c", ""),
    ("V1", "Valpha", "img", "alpha_x(x,t)*exp(a2*t)"),
    ("V2", "V3", "c", ""),
    ("V2", "V4", "c", ""),
    ("V2", "V5", "c", ""),
    ("V2", "V6", "c", ""),
    ("V2", "Valpha", "img", "-alpha(x,t)"),
    ("V3", "V4", "c", "a2*V3"),
    ("V3", "V5", "c", ""),
    ("V3", "V6", "c", "1*V1"),
    ("V3", "Valpha", "img", "exp(-a2*t)/a2*(1/2*alpha_x(x,t)-(a2*x+a1)*alpha(x,t))"),
    ("V4", "V5", "c", "-2*a2*V5"),
    ("V4", "V6", "c", "2*a2*V6"),
    ("V4", "Valpha", "img", "alpha_t(x,t)"),
    ("V5", "V6", "c", "4*a2*V4; -2*a2^2*V2"),
    (
        "V5",
        "Valpha",
        "img",
        "exp(-2*a2*t)*(alpha_t(x,t)-(a2*x+a1)*alpha_x(x,t)+2*(a2*x+a1)^2*alpha(x,t))",
    ),
    ("V6", "Valpha", "img", "exp(2*a2*t)*(alpha_t(x,t)+(a2*x+a1)*alpha_x(x,t)+a2*alpha(x,t))"),
];

/// Builds a table from `(left, right, kind, value)` rows.
pub fn table_from_rows(rows: &[(&str, &str, &str, &str)], p: &FpeParams) -> Result<CommutatorTable, CatalogError> {
    let table = symbol_table();
    let mut entries = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (l, r, kind, value) in rows {
        for id in [l, r] {
            if !order.iter().any(|o| o == id) {
                order.push(id.to_string());
            }
        }
        let entry = if *kind == "img" {
            TableEntry::Image(p.bind(&parse(value, &table)?))
        } else {
            let mut m = BTreeMap::new();
            for term in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let (coef, id) = term.rsplit_once('*').ok_or_else(|| CatalogError::Unknown(term.to_string()))?;
                m.insert(id.trim().to_string(), p.bind(&parse(coef, &table)?));
            }
            TableEntry::Combination(m)
        };
        entries.insert((l.to_string(), r.to_string()), entry);
    }
    Ok(CommutatorTable { order, entries })
}

pub fn golden_table(p: &FpeParams) -> Result<CommutatorTable, CatalogError> {
    table_from_rows(GOLDEN_TABLE, p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDiff {
    pub left: String,
    pub right: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

fn entries_equal(a: &TableEntry, b: &TableEntry, rule: Option<&FormalRule>) -> bool {
    match (a, b) {
        (TableEntry::Combination(x), TableEntry::Combination(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            keys.into_iter().all(|k| {
                let zero = Expr::zero();
                equal(x.get(k).unwrap_or(&zero), y.get(k).unwrap_or(&zero)).is_equal()
            })
        }
        (TableEntry::Image(x), TableEntry::Image(y)) => {
            if equal(x, y).is_equal() {
                return true;
            }
            // Images agreeing modulo the formal function's evolution rule.
            match rule {
                Some(r) => match (reduce_modulo(x, r), reduce_modulo(y, r)) {
                    (Ok(rx), Ok(ry)) => equal(&rx, &ry).is_equal(),
                    _ => false,
                },
                None => false,
            }
        }
        _ => false,
    }
}

/// Entry-by-entry comparison; an entry missing on either side is a diff.
pub fn diff_tables(computed: &CommutatorTable, golden: &CommutatorTable, rule: Option<&FormalRule>) -> Vec<TableDiff> {
    let mut diffs = Vec::new();
    for ((l, r), g) in &golden.entries {
        match computed.get(l, r) {
            Some(c) if entries_equal(&c, g, rule) => {}
            c => diffs.push(TableDiff {
                left: l.clone(),
                right: r.clone(),
                expected: Some(g.render()),
                found: c.map(|c| c.render()),
            }),
        }
    }
    for (l, r) in computed.entries.keys() {
        if golden.get(l, r).is_none() {
            diffs.push(TableDiff { left: l.clone(), right: r.clone(), expected: None, found: computed.get(l, r).map(|e| e.render()) });
        }
    }
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s, &symbol_table()).unwrap()
    }

    #[test]
    fn point_generators_load() {
        let gens = load_point_generators(&FpeParams::symbolic()).unwrap();
        assert_eq!(gens.len(), 7);
        assert!(gens.iter().all(|g| g.report.pass));
        assert_eq!(gens[4].field.coefficient("u"), p("-2*(a2*x+a1)^2*exp(-2*a2*t)*u"));
        assert_eq!(gens[3].field.coefficient("t"), Expr::one());
        assert!(gens[3].field.coefficient("x").is_zero() && gens[3].field.coefficient("u").is_zero());
    }

    #[test]
    fn potential_generators_load() {
        let gens = load_potential_generators(&FpeParams::symbolic()).unwrap();
        assert_eq!(gens.len(), 7);
        assert_eq!(gens[2].field.coefficient("u"), p("((x+a1/a2)*u+v)*exp(-a2*t)"));
        assert!(gens[5].field.coefficient("v").is_zero());
    }

    #[test]
    fn printed_w5_is_not_a_symmetry() {
        let sp = FpeParams::symbolic();
        let w5 = printed_w5(&sp).unwrap();
        let (report, _) = verify_generator(&w5, &auxiliary_system(&sp), 2, &[]).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn filter_and_projection() {
        let sp = FpeParams::symbolic();
        let gens = load_potential_generators(&sp).unwrap();
        let ids: Vec<&str> = gens.iter().filter(|g| potentiality_filter(g)).map(|g| g.id.as_str()).collect();
        assert_eq!(ids, ["W3", "W5"]);
        let filtered: Vec<_> = gens.iter().filter(|g| potentiality_filter(g)).cloned().collect();
        let ys = project_potential_symmetries(&filtered);
        for ((id, want), got) in printed_projections(&sp).unwrap().iter().zip(&ys) {
            assert_eq!(id, &got.id);
            assert_eq!(want, &got.field);
        }
    }

    #[test]
    fn table_matches_golden() {
        let sp = FpeParams::symbolic();
        let gens = load_point_generators(&sp).unwrap();
        let t = commutator_table(&gens).unwrap();
        assert_eq!(t.len(), 21);
        let rule = FormalRule::fpe("alpha", &sp);
        let diffs = diff_tables(&t, &golden_table(&sp).unwrap(), Some(&rule));
        assert!(diffs.is_empty(), "{diffs:?}");
    }

    #[test]
    fn corrupted_golden_entry_is_reported() {
        let sp = FpeParams::symbolic();
        let gens = load_point_generators(&sp).unwrap();
        let t = commutator_table(&gens).unwrap();
        let mut rows = GOLDEN_TABLE.to_vec();
        rows[3] = ("V1", "V5", "c", "4*a2^2*V3");
        let diffs = diff_tables(&t, &table_from_rows(&rows, &sp).unwrap(), None);
        assert_eq!(diffs.len(), 1);
        assert_eq!((diffs[0].left.as_str(), diffs[0].right.as_str()), ("V1", "V5"));
    }

    #[test]
    fn export_round_trip() {
        let sp = FpeParams::symbolic();
        let t = commutator_table(&load_point_generators(&sp).unwrap()).unwrap();
        let json = serde_json::to_string(&t.export()).unwrap();
        let back = CommutatorTable::import(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn numeric_parameters() {
        let np = FpeParams::ints(1, 2).unwrap();
        let gens = load_point_generators(&np).unwrap();
        let t = commutator_table(&gens).unwrap();
        let rule = FormalRule::fpe("alpha", &np);
        assert!(diff_tables(&t, &golden_table(&np).unwrap(), Some(&rule)).is_empty());
    }
}
