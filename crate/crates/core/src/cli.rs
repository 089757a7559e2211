//! The `zinb` command line.
//!
//! Exit codes: 0 when the requested check succeeds, 1 when the mathematics
//! says no (an invalid algebra, a failed identity, a nonzero obstruction
//! class), 2 for usage, I/O and parse errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::algebra::{AlgebraError, AlgebraMorphism, Bimodule, ZinbielAlgebra};
use crate::cohomology::{
    differential, differential_matrix, push_forward_left_matrix, push_forward_right_matrix, AlgebraComplex,
    Cochain, CochainComplex, MorphismComplex, TripleCochain,
};
use crate::deformation::{
    conjugate, extend_from_cocycle, extend_one_order, infinitesimal_difference_is_coboundary, normalize_leading_term,
    obstruction, rigidity_check, trivialize, verify_obstruction_identity, DeformationError, Extension,
    ExtensionOutcome, FormalIsomorphism, Infinitesimal, ProbeConfig, TruncatedDeformation, Verdict,
};
use crate::field::{Field, FieldElement};
use crate::format::{deformation_from_spec, DeformationSpec, ModelError, ProblemFile};
use crate::matrix::{Matrix, Vector};

#[derive(Debug, Parser)]
#[command(name = "zinb", version, about = "Exact deformation theory of Zinbiel algebra morphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Report,
    Machine,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file (TOML).
    file: PathBuf,
    /// Read every literal in this field instead of the declared one ("Q" or "Fp:<p>").
    #[arg(long)]
    field: Option<Field>,
    #[arg(long, value_enum, default_value = "report")]
    output: OutputMode,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check every algebra, morphism and deformation in the file.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Cohomology dimensions of an algebra or morphism, or the status of a cochain.
    Cohomology {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        algebra: Option<String>,
        #[arg(long)]
        morphism: Option<String>,
        /// Test this cochain for being a cocycle and a coboundary.
        #[arg(long)]
        cochain: Option<String>,
        /// Only this degree (2 or 3).
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Check a deformation order by order.
    CheckDeformation {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deformation: Option<String>,
        /// Check only up to this order.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Obstruction to extending a deformation by one order.
    Obstruction {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deformation: Option<String>,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Extend a deformation order by order.
    Extend {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deformation: Option<String>,
        #[arg(long)]
        target_order: usize,
        /// Write the problem file with the extended deformation added.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Name for the extended deformation, by default `<name>_ext`.
        #[arg(long)]
        name: Option<String>,
    },
    /// Conjugate away the leading term of a deformation.
    Normalize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        deformation: Option<String>,
        /// Keep normalizing until the deformation is trivial.
        #[arg(long)]
        repeat: bool,
        #[arg(long)]
        save: Option<PathBuf>,
        /// Name for the normalized deformation, by default `<name>_norm`.
        #[arg(long)]
        name: Option<String>,
    },
    /// Decide rigidity from H²(f,f), optionally probing random deformations.
    Rigidity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        morphism: Option<String>,
        /// Order of the probe deformations.
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the complex, push-forward, obstruction and equivalence identities.
    VerifyIdentities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        morphism: Option<String>,
        #[arg(long)]
        deformation: Option<String>,
        /// Also conjugate the deformation by this isomorphism.
        #[arg(long)]
        isomorphism: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Cohomology { .. } => "cohomology",
            Command::CheckDeformation { .. } => "check-deformation",
            Command::Obstruction { .. } => "obstruction",
            Command::Extend { .. } => "extend",
            Command::Normalize { .. } => "normalize",
            Command::Rigidity { .. } => "rigidity",
            Command::VerifyIdentities { .. } => "verify-identities",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Validate { common }
            | Command::Cohomology { common, .. }
            | Command::CheckDeformation { common, .. }
            | Command::Obstruction { common, .. }
            | Command::Extend { common, .. }
            | Command::Normalize { common, .. }
            | Command::Rigidity { common, .. }
            | Command::VerifyIdentities { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Failed,
}

/// Human lines and machine fields, filled side by side from the same values.
struct Report {
    status: Status,
    lines: Vec<String>,
    data: Map<String, Value>,
}

impl Report {
    fn new() -> Self {
        Report {
            status: Status::Ok,
            lines: Vec::new(),
            data: Map::new(),
        }
    }

    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn put(&mut self, key: &str, value: Value) {
        self.data.insert(key.to_string(), value);
    }

    fn fail(&mut self) {
        self.status = Status::Failed;
    }
}

enum CliError {
    Usage(String),
    Math(String),
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Missing { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<DeformationError> for CliError {
    fn from(e: DeformationError) -> Self {
        match e {
            DeformationError::Cohomology(_) | DeformationError::OrderTooLow { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<crate::cohomology::CohomologyError> for CliError {
    fn from(e: crate::cohomology::CohomologyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CmdResult = Result<(), CliError>;

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let command = cli.command.name();
    let mode = cli.command.common().output;
    let mut report = Report::new();
    let result = load(cli.command.common()).and_then(|file| dispatch(&cli.command, &file, &mut report));
    let (status, code, message) = match result {
        Ok(()) if report.status == Status::Ok => ("ok", 0, None),
        Ok(()) => ("failed", 1, None),
        Err(CliError::Math(m)) => ("failed", 1, Some(m)),
        Err(CliError::Usage(m)) => ("error", 2, Some(m)),
    };
    match mode {
        OutputMode::Report => {
            for l in &report.lines {
                let _ = writeln!(out, "{l}");
            }
            if let Some(m) = &message {
                let _ = if code == 2 {
                    writeln!(err, "error: {m}")
                } else {
                    writeln!(out, "error: {m}")
                };
            }
        }
        OutputMode::Machine => {
            let mut doc = Map::new();
            doc.insert("command".into(), json!(command));
            doc.insert("status".into(), json!(status));
            doc.insert("exit_code".into(), json!(code));
            if let Some(m) = &message {
                doc.insert("message".into(), json!(m));
            }
            doc.extend(report.data);
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&Value::Object(doc)).expect("json"));
        }
    }
    code
}

fn load(common: &Common) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(&common.file)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", common.file.display())))?;
    ProblemFile::parse_with_field(&text, common.field)
        .map_err(|e| CliError::Usage(format!("{}: {e}", common.file.display())))
}

fn dispatch(command: &Command, file: &ProblemFile, r: &mut Report) -> CmdResult {
    r.put("field", json!(file.field.to_string()));
    match command {
        Command::Validate { .. } => validate(file, r),
        Command::Cohomology {
            algebra,
            morphism,
            cochain,
            degree,
            ..
        } => cohomology(file, algebra.as_deref(), morphism.as_deref(), cochain.as_deref(), *degree, r),
        Command::CheckDeformation { deformation, order, .. } => check(file, deformation.as_deref(), *order, r),
        Command::Obstruction { deformation, order, .. } => obstruct(file, deformation.as_deref(), *order, r),
        Command::Extend {
            deformation,
            target_order,
            save,
            name,
            ..
        } => extend(file, deformation.as_deref(), *target_order, save.as_deref(), name.as_deref(), r),
        Command::Normalize {
            deformation,
            repeat,
            save,
            name,
            ..
        } => normalize(file, deformation.as_deref(), *repeat, save.as_deref(), name.as_deref(), r),
        Command::Rigidity {
            morphism,
            order,
            samples,
            seed,
            ..
        } => rigidity(file, morphism.as_deref(), *order, *samples, *seed, r),
        Command::VerifyIdentities {
            morphism,
            deformation,
            isomorphism,
            ..
        } => verify(file, morphism.as_deref(), deformation.as_deref(), isomorphism.as_deref(), r),
    }
}

fn scalar(x: &FieldElement) -> Value {
    Value::String(x.to_string())
}

fn vector_json(v: &[FieldElement]) -> Value {
    Value::Array(v.iter().map(scalar).collect())
}

/// Nonzero values of a cochain as `{"input": [...], "output": b, "value": "c"}`.
pub fn cochain_json(c: &Cochain) -> Value {
    let mut entries = Vec::new();
    let d = c.source_dim();
    let total = if c.arity() == 0 || d == 0 { 0 } else { d.pow(c.arity() as u32) };
    for flat in 0..total {
        let mut t = vec![0; c.arity()];
        let mut rest = flat;
        for slot in t.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        for (b, x) in c.value(&t).iter().enumerate() {
            if !x.is_zero() {
                entries.push(json!({
                    "input": t.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "output": b + 1,
                    "value": scalar(x),
                }));
            }
        }
    }
    json!({ "arity": c.arity(), "entries": entries })
}

pub fn triple_json(t: &TripleCochain) -> Value {
    json!({
        "degree": t.degree(),
        "source": cochain_json(&t.xi),
        "target": cochain_json(&t.pi),
        "map": cochain_json(&t.phi),
    })
}

fn triple_text(t: &TripleCochain) -> String {
    if t.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (name, c) in [("R", &t.xi), ("S", &t.pi), ("f", &t.phi)] {
        if !c.is_zero() {
            parts.push(format!("{name}: {c}"));
        }
    }
    parts.join("; ")
}

fn covector_text(v: &Vector) -> String {
    let nonzero: Vec<String> = v
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| format!("{}:{x}", i + 1))
        .collect();
    format!("[{}]", nonzero.join(", "))
}

fn deformation_json(theta: &TruncatedDeformation) -> Value {
    Value::Array(theta.terms()[1..].iter().map(triple_json).collect())
}

fn iso_json(iso: &FormalIsomorphism) -> Value {
    Value::Array(iso.terms()[1..].iter().map(triple_json).collect())
}

fn report_terms(r: &mut Report, what: &str, terms: &[TripleCochain]) {
    for (k, t) in terms.iter().enumerate().skip(1) {
        r.line(format!("  {what}_{k} = {}", triple_text(t)));
    }
}

fn tuple_text(indices: &[usize]) -> String {
    let e: Vec<String> = indices.iter().map(|i| format!("e{}", i + 1)).collect();
    format!("({})", e.join(","))
}

fn algebra_failure(e: &AlgebraError) -> (String, Value) {
    use crate::cohomology::BasisCombination;
    match e {
        AlgebraError::NotZinbiel { violations } => {
            let v = &violations[0];
            (
                format!(
                    "Zinbiel identity fails on {} of the basis triples, first at {}: residual {}",
                    violations.len(),
                    tuple_text(&v.indices),
                    BasisCombination(&v.residual)
                ),
                json!({
                    "identity": "zinbiel",
                    "failures": violations.len(),
                    "indices": v.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "residual": vector_json(&v.residual),
                }),
            )
        }
        AlgebraError::NotMorphism { violations } => {
            let v = &violations[0];
            (
                format!(
                    "products are not preserved on {} basis pairs, first at {}: residual {}",
                    violations.len(),
                    tuple_text(&v.indices),
                    BasisCombination(&v.residual)
                ),
                json!({
                    "identity": "morphism",
                    "failures": violations.len(),
                    "indices": v.indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "residual": vector_json(&v.residual),
                }),
            )
        }
        other => (other.to_string(), json!({ "identity": "shape", "message": other.to_string() })),
    }
}

fn deformation_failure(e: &DeformationError) -> Value {
    match e {
        DeformationError::Violation(v) => json!({
            "label": v.label(),
            "order": v.order,
            "identity": v.equation.to_string(),
            "residual": cochain_json(&v.residual),
        }),
        other => json!({ "message": other.to_string() }),
    }
}

fn validate(file: &ProblemFile, r: &mut Report) -> CmdResult {
    let mut algebras = Vec::new();
    for spec in &file.algebras {
        let triples = spec.dim.pow(3);
        match spec.build(file.field) {
            Ok(_) => {
                r.line(format!(
                    "algebra {} (dim {}): Zinbiel identity verified on {triples} triples",
                    spec.name, spec.dim
                ));
                algebras.push(json!({"name": spec.name, "dim": spec.dim, "valid": true, "triples": triples}));
            }
            Err(e) => {
                r.fail();
                let (text, data) = algebra_failure(&e);
                r.line(format!("algebra {} (dim {}): {text}", spec.name, spec.dim));
                algebras.push(json!({"name": spec.name, "dim": spec.dim, "valid": false, "triples": triples, "violation": data}));
            }
        }
    }
    r.put("algebras", Value::Array(algebras));

    let mut morphisms = Vec::new();
    for spec in &file.morphisms {
        let (Ok(a), Ok(b)) = (file.algebra(&spec.source), file.algebra(&spec.target)) else {
            r.fail();
            r.line(format!("morphism {}: source or target is not a Zinbiel algebra", spec.name));
            morphisms.push(json!({"name": spec.name, "valid": false, "violation": {"identity": "algebra"}}));
            continue;
        };
        let pairs = a.dim() * a.dim();
        match AlgebraMorphism::new(a, b, spec.matrix.clone()) {
            Ok(_) => {
                r.line(format!(
                    "morphism {}: {} -> {} respects products on {pairs} pairs",
                    spec.name, spec.source, spec.target
                ));
                morphisms.push(json!({"name": spec.name, "valid": true, "pairs": pairs}));
            }
            Err(e) => {
                r.fail();
                let (text, data) = algebra_failure(&e);
                r.line(format!("morphism {}: {text}", spec.name));
                morphisms.push(json!({"name": spec.name, "valid": false, "pairs": pairs, "violation": data}));
            }
        }
    }
    r.put("morphisms", Value::Array(morphisms));

    let mut deformations = Vec::new();
    for spec in &file.deformations {
        match file.deformation(&spec.name) {
            Ok(theta) => {
                r.line(format!(
                    "deformation {} of {}: valid up to order {}",
                    spec.name,
                    spec.morphism,
                    theta.order()
                ));
                deformations.push(json!({"name": spec.name, "order": theta.order(), "valid": true}));
            }
            Err(ModelError::Deformation { source, .. }) => {
                r.fail();
                r.line(format!("deformation {}: {source}", spec.name));
                deformations.push(json!({"name": spec.name, "order": spec.order(), "valid": false, "violation": deformation_failure(&source)}));
            }
            Err(e) => {
                r.fail();
                r.line(format!("deformation {}: {e}", spec.name));
                deformations.push(json!({"name": spec.name, "order": spec.order(), "valid": false, "violation": {"message": e.to_string()}}));
            }
        }
    }
    r.put("deformations", Value::Array(deformations));

    let mut isomorphisms = Vec::new();
    for spec in &file.isomorphisms {
        let ok = file.isomorphism(&spec.name).is_ok();
        if !ok {
            r.fail();
        }
        r.line(format!(
            "isomorphism {} of order {}: {}",
            spec.name,
            spec.terms.len(),
            if ok { "well formed" } else { "malformed" }
        ));
        isomorphisms.push(json!({"name": spec.name, "order": spec.terms.len(), "valid": ok}));
    }
    r.put("isomorphisms", Value::Array(isomorphisms));
    Ok(())
}

/// The only entry of a list, for when a selector is omitted.
fn pick<'a>(given: Option<&'a str>, names: Vec<&'a str>, kind: &str) -> Result<&'a str, CliError> {
    if let Some(name) = given {
        return Ok(name);
    }
    match names.as_slice() {
        [only] => Ok(only),
        [] => Err(CliError::Usage(format!("the file declares no {kind}"))),
        _ => Err(CliError::Usage(format!(
            "the file declares several of kind {kind}; choose one with --{kind}"
        ))),
    }
}

fn pick_morphism<'a>(file: &'a ProblemFile, given: Option<&'a str>) -> Result<&'a str, CliError> {
    pick(given, file.morphisms.iter().map(|m| m.name.as_str()).collect(), "morphism")
}

fn pick_deformation<'a>(file: &'a ProblemFile, given: Option<&'a str>) -> Result<&'a DeformationSpec, CliError> {
    let name = pick(given, file.deformations.iter().map(|d| d.name.as_str()).collect(), "deformation")?;
    Ok(file.deformation_spec(name)?)
}

fn degrees(degree: Option<usize>) -> Result<Vec<usize>, CliError> {
    match degree {
        None => Ok(vec![2, 3]),
        Some(n @ (2 | 3)) => Ok(vec![n]),
        Some(n) => Err(CliError::Usage(format!("--degree must be 2 or 3, got {n}"))),
    }
}

fn cohomology_dims<C: CochainComplex>(c: &C, degree: Option<usize>, label: &str, r: &mut Report) -> CmdResult {
    let mut dims = Map::new();
    for n in degrees(degree)? {
        let h = c.cohomology_dim(n)?;
        r.line(format!("dim H{}({label}) = {h}", superscript(n)));
        dims.insert(n.to_string(), json!(h));
    }
    let spaces: Vec<usize> = (1..=4).map(|n| c.space_dim(n)).collect();
    let ranks = (1..=3).map(|i| c.differential_rank(i)).collect::<Result<Vec<_>, _>>()?;
    r.line(format!("  dim C^1..C^4 = {spaces:?}, rank d^1..d^3 = {ranks:?}"));
    r.put("cohomology", Value::Object(dims));
    r.put("cochain_dims", json!(spaces));
    r.put("differential_ranks", json!(ranks));
    Ok(())
}

fn superscript(n: usize) -> &'static str {
    match n {
        1 => "¹",
        2 => "²",
        3 => "³",
        4 => "⁴",
        _ => "^?",
    }
}

fn cohomology(
    file: &ProblemFile,
    algebra: Option<&str>,
    morphism: Option<&str>,
    cochain: Option<&str>,
    degree: Option<usize>,
    r: &mut Report,
) -> CmdResult {
    if let Some(name) = cochain {
        let spec = file.cochain_spec(name)?;
        let source = file.algebra(&spec.source)?;
        let module = if spec.source == spec.target {
            Bimodule::regular(source)
        } else {
            let chosen = match morphism {
                Some(m) => file.morphism_spec(m)?,
                None => file
                    .morphisms
                    .iter()
                    .find(|m| m.source == spec.source && m.target == spec.target)
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "no morphism {} -> {} makes {} a bimodule",
                            spec.source, spec.target, spec.target
                        ))
                    })?,
            };
            if chosen.source != spec.source || chosen.target != spec.target {
                return Err(CliError::Usage(format!(
                    "morphism {} does not go from {} to {}",
                    chosen.name, spec.source, spec.target
                )));
            }
            Bimodule::via_morphism(&file.morphism(&chosen.name)?)
        };
        let complex = AlgebraComplex::new(module);
        let label = format!("{},{}", spec.source, spec.target);
        if !(1..=3).contains(&spec.cochain.arity()) {
            return Err(CliError::Usage(format!(
                "cochain {name} has arity {}, expected 1, 2 or 3",
                spec.cochain.arity()
            )));
        }
        let check = complex.is_cocycle(&spec.cochain)?;
        let mut data = Map::new();
        data.insert("name".into(), json!(name));
        data.insert("cocycle".into(), json!(check.holds()));
        data.insert("differential".into(), cochain_json(&check.residual));
        if check.holds() {
            r.line(format!("cochain {name} in C{}({label}) is a cocycle", superscript(spec.cochain.arity())));
        } else {
            r.line(format!("cochain {name} is not a cocycle: d({name}) = {}", check.residual));
        }
        if spec.cochain.arity() >= 2 {
            match complex.coboundary_preimage(&spec.cochain)? {
                Some(p) => {
                    r.line(format!("  it is the coboundary of {p}"));
                    data.insert("coboundary".into(), json!(true));
                    data.insert("preimage".into(), cochain_json(&p));
                }
                None => {
                    r.line("  it is not a coboundary");
                    data.insert("coboundary".into(), json!(false));
                }
            }
        }
        r.put("cochain", Value::Object(data));
        return Ok(());
    }
    if let Some(name) = algebra {
        let complex = AlgebraComplex::regular(file.algebra(name)?);
        r.put("algebra", json!(name));
        return cohomology_dims(&complex, degree, &format!("{name},{name}"), r);
    }
    let name = pick_morphism(file, morphism)?;
    let complex = file.complex(name)?;
    r.put("morphism", json!(name));
    cohomology_dims(complex.as_ref(), degree, &format!("{name},{name}"), r)
}

fn load_deformation(file: &ProblemFile, spec: &DeformationSpec, order: Option<usize>) -> Result<(Arc<MorphismComplex>, DeformationSpec), CliError> {
    let complex = file.complex(&spec.morphism)?;
    let mut spec = spec.clone();
    if let Some(n) = order {
        if n > spec.order() {
            return Err(CliError::Usage(format!(
                "deformation {} has order {}, cannot check order {n}",
                spec.name,
                spec.order()
            )));
        }
        spec.terms.truncate(n);
    }
    Ok((complex, spec))
}

/// A valid deformation or a failed report naming the first violated identity.
fn checked(
    file: &ProblemFile,
    spec: &DeformationSpec,
    order: Option<usize>,
    r: &mut Report,
) -> Result<Option<TruncatedDeformation>, CliError> {
    let (complex, spec) = load_deformation(file, spec, order)?;
    r.put("deformation", json!(spec.name));
    r.put("order", json!(spec.order()));
    match deformation_from_spec(&complex, &spec) {
        Ok(theta) => Ok(Some(theta)),
        Err(e @ DeformationError::Violation(_)) => {
            r.fail();
            r.line(format!("deformation {}: {e}", spec.name));
            r.put("violation", deformation_failure(&e));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn check(file: &ProblemFile, deformation: Option<&str>, order: Option<usize>, r: &mut Report) -> CmdResult {
    let spec = pick_deformation(file, deformation)?;
    let Some(theta) = checked(file, spec, order, r)? else {
        return Ok(());
    };
    r.line(format!(
        "deformation {} of {}: all identities hold up to order {}",
        spec.name,
        spec.morphism,
        theta.order()
    ));
    match theta.infinitesimal()? {
        Infinitesimal::Trivial => {
            r.line("  every term vanishes");
            r.put("leading_order", Value::Null);
        }
        Infinitesimal::Leading { order, term, check } => {
            r.line(format!(
                "  leading term at order {order} is {}a 2-cocycle: {}",
                if check.holds() { "" } else { "NOT " },
                triple_text(&term)
            ));
            if !check.holds() {
                r.fail();
            }
            r.put("leading_order", json!(order));
            r.put("leading_term", triple_json(&term));
            r.put("leading_is_cocycle", json!(check.holds()));
        }
    }
    Ok(())
}

fn obstruct(file: &ProblemFile, deformation: Option<&str>, order: Option<usize>, r: &mut Report) -> CmdResult {
    let spec = pick_deformation(file, deformation)?;
    let Some(theta) = checked(file, spec, order, r)? else {
        return Ok(());
    };
    if theta.order() == 0 {
        return Err(DeformationError::OrderTooLow { needed: 1, actual: 0 }.into());
    }
    let complex = theta.complex();
    let ob = obstruction(&theta);
    let n = theta.order();
    r.line(format!("obstruction to order {}: {}", n + 1, triple_text(&ob.cochain)));
    r.put("obstruction", triple_json(&ob.cochain));
    let cocycle = complex.is_cocycle(&ob.cochain)?.holds();
    r.line(format!("  d³_f(Ob) = 0: {}", yes(cocycle)));
    r.put("obstruction_is_cocycle", json!(cocycle));
    if !cocycle {
        r.fail();
    }
    match complex.coboundary_preimage(&ob.cochain)? {
        Some(next) => {
            r.line(format!("  class vanishes: Ob = d²_f θ_{} with θ_{} = {}", n + 1, n + 1, triple_text(&next)));
            r.put("class_vanishes", json!(true));
            r.put("next_term", triple_json(&next));
        }
        None => {
            r.fail();
            let w = complex.non_coboundary_witness(&ob.cochain)?.unwrap_or_default();
            r.line(format!("  class is nonzero; separating covector {}", covector_text(&w)));
            r.put("class_vanishes", json!(false));
            r.put("witness", vector_json(&w));
        }
    }
    Ok(())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "NO"
    }
}

fn save_file(path: &Path, file: &ProblemFile, r: &mut Report) -> CmdResult {
    fs::write(path, file.serialize()).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    r.line(format!("wrote {}", path.display()));
    r.put("saved", json!(path.display().to_string()));
    Ok(())
}

fn extend(
    file: &ProblemFile,
    deformation: Option<&str>,
    target: usize,
    save: Option<&Path>,
    name: Option<&str>,
    r: &mut Report,
) -> CmdResult {
    let spec = pick_deformation(file, deformation)?;
    let Some(theta) = checked(file, spec, None, r)? else {
        return Ok(());
    };
    if theta.order() == 0 {
        return Err(DeformationError::OrderTooLow { needed: 1, actual: 0 }.into());
    }
    if target < theta.order() {
        return Err(CliError::Usage(format!(
            "target order {target} is below the order {} of {}",
            theta.order(),
            spec.name
        )));
    }
    r.put("target_order", json!(target));
    let outcome = if theta.order() == 1 {
        extend_from_cocycle(theta.complex(), theta.term(1).clone(), target)?
    } else {
        let mut current = theta.clone();
        loop {
            if current.order() >= target {
                break ExtensionOutcome::Complete(current);
            }
            match extend_one_order(&current)? {
                Extension::Extended { deformation, .. } => current = deformation,
                Extension::Obstructed { obstruction, witness } => {
                    break ExtensionOutcome::Obstructed {
                        at_order: current.order() + 1,
                        partial: current,
                        obstruction,
                        witness,
                    }
                }
            }
        }
    };
    match outcome {
        ExtensionOutcome::Complete(done) => {
            r.line(format!("extended {} from order {} to order {target}", spec.name, theta.order()));
            report_terms(r, "θ", done.terms());
            r.put("extended", deformation_json(&done));
            if let Some(path) = save {
                let new_name = name.map_or_else(|| format!("{}_ext", spec.name), str::to_string);
                let mut out = file.clone();
                out.put_deformation(&new_name, &spec.morphism, &done);
                save_file(path, &out, r)?;
            }
        }
        ExtensionOutcome::Obstructed {
            at_order,
            partial,
            obstruction,
            witness,
        } => {
            r.fail();
            r.line(format!(
                "cannot extend {} to order {at_order}: obstruction class is nonzero",
                spec.name
            ));
            r.line(format!("  obstruction {}", triple_text(&obstruction.cochain)));
            r.line(format!("  separating covector {}", covector_text(&witness)));
            r.put("obstructed_at", json!(at_order));
            r.put("partial", deformation_json(&partial));
            r.put("obstruction", triple_json(&obstruction.cochain));
            r.put("witness", vector_json(&witness));
        }
    }
    Ok(())
}

fn normalize(
    file: &ProblemFile,
    deformation: Option<&str>,
    repeat: bool,
    save: Option<&Path>,
    name: Option<&str>,
    r: &mut Report,
) -> CmdResult {
    let spec = pick_deformation(file, deformation)?;
    let Some(theta) = checked(file, spec, None, r)? else {
        return Ok(());
    };
    let result = if repeat {
        trivialize(&theta).map(|t| (t.composite, t.deformation, t.steps.len()))
    } else {
        normalize_leading_term(&theta).map(|n| (n.iso, n.deformation, usize::from(n.order.is_some())))
    };
    let (iso, normalized, steps) = match result {
        Ok(x) => x,
        Err(DeformationError::NotCoboundary { order, witness }) => {
            r.fail();
            r.line(format!(
                "{}: the term at order {order} is not a 2-coboundary, so it cannot be conjugated away",
                spec.name
            ));
            r.line(format!("  separating covector {}", covector_text(&witness)));
            r.put("stuck_at", json!(order));
            r.put("witness", vector_json(&witness));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    r.line(format!(
        "{} normalized in {steps} step(s); leading order now {}",
        spec.name,
        normalized.leading_order().map_or("none (trivial)".to_string(), |l| l.to_string())
    ));
    r.line("  isomorphism:");
    report_terms(r, "φ", iso.terms());
    r.line("  normalized deformation:");
    report_terms(r, "θ̄", normalized.terms());
    r.put("steps", json!(steps));
    r.put("leading_order", json!(normalized.leading_order()));
    r.put("isomorphism", iso_json(&iso));
    r.put("normalized", deformation_json(&normalized));
    if let Some(path) = save {
        let new_name = name.map_or_else(|| format!("{}_norm", spec.name), str::to_string);
        let mut out = file.clone();
        out.put_deformation(&new_name, &spec.morphism, &normalized);
        out.put_isomorphism(&format!("{new_name}_iso"), &spec.morphism, &iso);
        save_file(path, &out, r)?;
    }
    Ok(())
}

fn rigidity(
    file: &ProblemFile,
    morphism: Option<&str>,
    order: usize,
    samples: usize,
    seed: u64,
    r: &mut Report,
) -> CmdResult {
    let name = pick_morphism(file, morphism)?;
    let complex = file.complex(name)?;
    let probe = (samples > 0).then_some(ProbeConfig { order, samples, seed });
    let report = rigidity_check(&complex, probe)?;
    let verdict = match report.verdict {
        Verdict::Rigid => "rigid",
        Verdict::Inconclusive => "inconclusive",
    };
    r.line(format!("dim H²(f,f) = {}, {verdict}", report.h2));
    r.put("morphism", json!(name));
    r.put("h2", json!(report.h2));
    r.put("verdict", json!(verdict));
    if probe.is_some() {
        let ok = report.probes.iter().filter(|p| p.trivialized()).count();
        r.line(format!(
            "  {ok} of {samples} random order-{order} deformations trivialized (seed {seed})"
        ));
        r.put(
            "probes",
            json!({
                "order": order,
                "samples": samples,
                "seed": seed,
                "trivialized": ok,
                "stuck_at": report.probes.iter().filter_map(|p| p.stuck_at).collect::<Vec<_>>(),
            }),
        );
        if report.verdict == Verdict::Rigid && ok < samples {
            r.fail();
        }
    }
    Ok(())
}

fn record(r: &mut Report, checks: &mut Vec<Value>, name: &str, holds: bool) {
    r.line(format!("{name}: {}", if holds { "ok" } else { "FAILED" }));
    if !holds {
        r.fail();
    }
    checks.push(json!({"identity": name, "holds": holds}));
}

fn squares_vanish(ms: &[&Matrix]) -> Result<bool, CliError> {
    for w in ms.windows(2) {
        let p = w[1].mul(w[0]).map_err(|e| CliError::Usage(e.to_string()))?;
        if !p.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn product_is_cocycle(alg: &Arc<ZinbielAlgebra>) -> Result<bool, CliError> {
    Ok(differential(&Bimodule::regular(alg.clone()), &Cochain::product(alg))?.is_zero())
}

fn verify(
    file: &ProblemFile,
    morphism: Option<&str>,
    deformation: Option<&str>,
    isomorphism: Option<&str>,
    r: &mut Report,
) -> CmdResult {
    let def_spec = match (deformation, morphism) {
        (Some(d), _) => Some(file.deformation_spec(d)?),
        (None, None) if isomorphism.is_some() || file.deformations.len() == 1 => Some(pick_deformation(file, None)?),
        _ => None,
    };
    let name = match def_spec {
        Some(d) => d.morphism.as_str(),
        None => pick_morphism(file, morphism)?,
    };
    let complex = file.complex(name)?;
    let f = complex.morphism();
    r.put("morphism", json!(name));
    let mut checks = Vec::new();

    let ds = (1..=3).map(|i| complex.differential_matrix(i)).collect::<Result<Vec<_>, _>>()?;
    record(r, &mut checks, "d_f∘d_f = 0", squares_vanish(&ds)?);
    for (label, module) in [
        ("d∘d = 0 on C*(R,R)", complex.source_module()),
        ("d∘d = 0 on C*(S,S)", complex.target_module()),
        ("d∘d = 0 on C*(R,S)", complex.cross_module()),
    ] {
        let ms = (1..=3).map(|i| differential_matrix(module, i)).collect::<Result<Vec<_>, _>>()?;
        record(r, &mut checks, label, squares_vanish(&ms.iter().collect::<Vec<_>>())?);
    }
    let mut commutes = true;
    for i in 1..=3 {
        let cross = differential_matrix(complex.cross_module(), i)?;
        let lhs = push_forward_left_matrix(f, i + 1).mul(&differential_matrix(complex.source_module(), i)?);
        let rhs = cross.mul(&push_forward_left_matrix(f, i));
        commutes &= lhs.is_ok() && lhs == rhs;
        let lhs = push_forward_right_matrix(f, i + 1).mul(&differential_matrix(complex.target_module(), i)?);
        let rhs = cross.mul(&push_forward_right_matrix(f, i));
        commutes &= lhs.is_ok() && lhs == rhs;
    }
    record(r, &mut checks, "push-forwards commute with d", commutes);
    record(r, &mut checks, "d²(m_R) = 0", product_is_cocycle(complex.source())?);
    record(r, &mut checks, "d²(m_S) = 0", product_is_cocycle(complex.target())?);

    if let Some(spec) = def_spec {
        r.put("deformation", json!(spec.name));
        let Some(theta) = checked(file, spec, None, r)? else {
            r.put("checks", Value::Array(checks));
            return Ok(());
        };
        record(r, &mut checks, &format!("{} satisfies its defining identities", spec.name), true);
        if let Infinitesimal::Leading { check, .. } = theta.infinitesimal()? {
            record(r, &mut checks, "leading term is a 2-cocycle", check.holds());
        }
        if theta.order() >= 1 {
            let ob = obstruction(&theta).cochain;
            record(r, &mut checks, "d³_f(Ob) = 0", complex.is_cocycle(&ob)?.holds());
            let id = verify_obstruction_identity(&theta)?;
            record(r, &mut checks, "f∘Ob_R − Ob_S∘f = d²(Ob_f)", id.holds());
        }
        if let Some(iso_name) = isomorphism {
            let iso = file.isomorphism(iso_name)?;
            let spec_iso = file.isomorphism_spec(iso_name)?;
            if spec_iso.morphism != spec.morphism {
                return Err(CliError::Usage(format!(
                    "isomorphism {iso_name} belongs to {}, not {}",
                    spec_iso.morphism, spec.morphism
                )));
            }
            let bar = conjugate(&theta, &iso)?;
            record(r, &mut checks, "conjugate is a deformation", true);
            if theta.order() >= 1 {
                let cert = infinitesimal_difference_is_coboundary(&theta, &bar, &iso)?;
                record(r, &mut checks, "θ₁ − θ̄₁ = d¹_f(φ₁)", cert.holds());
            }
            r.put("conjugate", deformation_json(&bar));
        }
    }
    r.put("checks", Value::Array(checks));
    Ok(())
}
