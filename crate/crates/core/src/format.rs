//! The TOML problem-file format.
//!
//! ```toml
//! field = "Q"                       # or "Fp:7"
//!
//! [[algebra]]
//! name = "R"
//! dim = 2
//! products = [[1, 1, 2, 1]]         # e1·e1 = 1·e2, as [i, j, k, coefficient]
//!
//! [[morphism]]
//! name = "f"
//! source = "R"
//! target = "R"
//! matrix = [[1, 1, 1], [2, 2, 1]]   # [row, column, coefficient], rows index the target
//!
//! [[cochain]]
//! name = "phi"
//! source = "R"
//! target = "R"                      # defaults to the source
//! arity = 2
//! entries = [[1, 1, 2, "1/2"]]      # phi(e1, e1) = 1/2·e2, as [i1, …, in, b, coefficient]
//!
//! [[deformation]]
//! name = "theta"
//! morphism = "f"
//! order = 1
//! [[deformation.term]]
//! order = 1
//! source = [[1, 1, 1, 1]]           # m_{R,1}, 2-cochain entries
//! target = []                       # m_{S,1}
//! map = [[1, 1, 1]]                 # f_1, 1-cochain entries [i, b, coefficient]
//!
//! [[isomorphism]]
//! name = "phi_t"
//! morphism = "f"
//! order = 1
//! [[isomorphism.term]]
//! order = 1
//! source = [[1, 2, 1]]              # φ_{R,1}
//! target = []                       # φ_{S,1}
//! ```
//!
//! Basis indices are 1-based. Coefficients are integers or strings holding an
//! integer or a fraction `"a/b"`. Missing terms of a deformation or formal
//! isomorphism are zero; the constant terms come from the morphism and the
//! identity and are never written.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::algebra::{AlgebraError, AlgebraMorphism, ZinbielAlgebra};
use crate::cohomology::{cochain_space_dim, Cochain, MorphismComplex, TripleCochain};
use crate::deformation::{check_deformation, DeformationError, FormalIsomorphism, TruncatedDeformation};
use crate::field::{Field, FieldElement, FieldError};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Text(String),
}

impl Scalar {
    fn from_element(x: &FieldElement) -> Self {
        let text = x.to_string();
        match text.parse::<i64>() {
            Ok(n) => Scalar::Int(n),
            Err(_) => Scalar::Text(text),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(n) => write!(f, "{n}"),
            Scalar::Text(s) => write!(f, "\"{s}\""),
        }
    }
}

type Entry = Spanned<Vec<Scalar>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    field: Spanned<String>,
    #[serde(default, rename = "algebra", skip_serializing_if = "Vec::is_empty")]
    algebras: Vec<RawAlgebra>,
    #[serde(default, rename = "morphism", skip_serializing_if = "Vec::is_empty")]
    morphisms: Vec<RawMorphism>,
    #[serde(default, rename = "cochain", skip_serializing_if = "Vec::is_empty")]
    cochains: Vec<RawCochain>,
    #[serde(default, rename = "deformation", skip_serializing_if = "Vec::is_empty")]
    deformations: Vec<RawDeformation>,
    #[serde(default, rename = "isomorphism", skip_serializing_if = "Vec::is_empty")]
    isomorphisms: Vec<RawIsomorphism>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    name: Spanned<String>,
    dim: usize,
    #[serde(default)]
    products: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMorphism {
    name: Spanned<String>,
    source: Spanned<String>,
    target: Spanned<String>,
    #[serde(default)]
    matrix: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCochain {
    name: Spanned<String>,
    source: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<Spanned<String>>,
    arity: usize,
    #[serde(default)]
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeformation {
    name: Spanned<String>,
    morphism: Spanned<String>,
    order: usize,
    #[serde(default, rename = "term", skip_serializing_if = "Vec::is_empty")]
    terms: Vec<RawTerm>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    order: Spanned<usize>,
    #[serde(default)]
    source: Vec<Entry>,
    #[serde(default)]
    target: Vec<Entry>,
    #[serde(default)]
    map: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIsomorphism {
    name: Spanned<String>,
    morphism: Spanned<String>,
    order: usize,
    #[serde(default, rename = "term", skip_serializing_if = "Vec::is_empty")]
    terms: Vec<RawIsoTerm>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIsoTerm {
    order: Spanned<usize>,
    #[serde(default)]
    source: Vec<Entry>,
    #[serde(default)]
    target: Vec<Entry>,
}

/// Line and column, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    fn of(text: &str, offset: usize) -> Self {
        let before = &text[..offset.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Location { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("syntax error at {location}: {message}")]
    Syntax { location: Location, message: String },
    #[error("syntax error: {0}")]
    SyntaxUnlocated(String),
    #[error("{location}: {context}: {message}")]
    Semantic {
        location: Location,
        context: String,
        message: String,
    },
}

/// Failure to turn a parsed specification into a validated object.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no {kind} named `{name}`")]
    Missing { kind: &'static str, name: String },
    #[error("{kind} `{name}`: {source}")]
    Algebra {
        kind: &'static str,
        name: String,
        source: AlgebraError,
    },
    #[error("deformation `{name}`: {source}")]
    Deformation { name: String, source: DeformationError },
}

/// An algebra as written, not yet checked against the Zinbiel identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraSpec {
    pub name: String,
    pub dim: usize,
    /// `γ_{ij}^k` at `(i·dim + j)·dim + k`.
    pub structure_constants: Vec<FieldElement>,
}

impl AlgebraSpec {
    pub fn from_algebra(name: &str, algebra: &ZinbielAlgebra) -> Self {
        AlgebraSpec {
            name: name.to_string(),
            dim: algebra.dim(),
            structure_constants: algebra.structure_constants().to_vec(),
        }
    }

    pub fn build(&self, field: Field) -> Result<ZinbielAlgebra, AlgebraError> {
        ZinbielAlgebra::new(field, self.dim, self.structure_constants.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphismSpec {
    pub name: String,
    pub source: String,
    pub target: String,
    /// `dim target × dim source`.
    pub matrix: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CochainSpec {
    pub name: String,
    pub source: String,
    pub target: String,
    pub cochain: Cochain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeformationSpec {
    pub name: String,
    pub morphism: String,
    /// `θ₁, …, θ_N`.
    pub terms: Vec<TripleCochain>,
}

impl DeformationSpec {
    pub fn order(&self) -> usize {
        self.terms.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsomorphismSpec {
    pub name: String,
    pub morphism: String,
    /// `(φ_{R,i}; φ_{S,i})` for `i = 1..=order`.
    pub terms: Vec<TripleCochain>,
}

/// Everything a problem file declares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemFile {
    pub field: Field,
    pub algebras: Vec<AlgebraSpec>,
    pub morphisms: Vec<MorphismSpec>,
    pub cochains: Vec<CochainSpec>,
    pub deformations: Vec<DeformationSpec>,
    pub isomorphisms: Vec<IsomorphismSpec>,
}

struct Parser<'a> {
    text: &'a str,
    field: Field,
}

impl Parser<'_> {
    fn error<T>(&self, span: std::ops::Range<usize>, context: impl Into<String>, message: impl Into<String>) -> Result<T, FormatError> {
        Err(FormatError::Semantic {
            location: Location::of(self.text, span.start),
            context: context.into(),
            message: message.into(),
        })
    }

    fn scalar(&self, entry: &Entry, context: &str, s: &Scalar) -> Result<FieldElement, FormatError> {
        let parsed = match s {
            Scalar::Int(n) => Ok(self.field.from_i64(*n)),
            Scalar::Text(t) => self.field.parse_scalar(t),
        };
        parsed.or_else(|e: FieldError| self.error(entry.span(), context, e.to_string()))
    }

    /// Splits `[i₁, …, iₙ, c]` into 0-based indices checked against `bounds`
    /// and the coefficient.
    fn indexed(
        &self,
        entry: &Entry,
        context: &str,
        bounds: &[usize],
    ) -> Result<(Vec<usize>, FieldElement), FormatError> {
        let items = entry.get_ref();
        let shown = format!(
            "{context} entry [{}]",
            items.iter().map(Scalar::to_string).collect::<Vec<_>>().join(", ")
        );
        if items.len() != bounds.len() + 1 {
            return self.error(
                entry.span(),
                shown,
                format!("expected {} indices and a coefficient", bounds.len()),
            );
        }
        let mut idx = Vec::with_capacity(bounds.len());
        for (s, &bound) in items.iter().zip(bounds) {
            match s {
                Scalar::Int(n) if *n >= 1 && (*n as usize) <= bound => idx.push(*n as usize - 1),
                Scalar::Int(n) => {
                    return self.error(entry.span(), shown, format!("index {n} is outside 1..={bound}"));
                }
                Scalar::Text(_) => return self.error(entry.span(), shown, "indices must be integers"),
            }
        }
        let c = self.scalar(entry, &shown, &items[bounds.len()])?;
        Ok((idx, c))
    }

    /// Dense coefficients of a cochain from sparse entries.
    fn cochain(&self, entries: &[Entry], context: &str, arity: usize, d: usize, m: usize) -> Result<Cochain, FormatError> {
        let mut coeffs = vec![self.field.zero(); cochain_space_dim(arity, d, m)];
        let mut bounds = vec![d; arity];
        bounds.push(m);
        let mut seen = HashSet::new();
        for e in entries {
            let (idx, c) = self.indexed(e, context, &bounds)?;
            if !seen.insert(idx.clone()) {
                return self.error(e.span(), context, "duplicate entry");
            }
            let at = idx.iter().fold(0, |acc, &i| acc * d + i);
            // the last index is the output, whose stride is 1
            let at = (at - idx[arity]) / d * m + idx[arity];
            coeffs[at] = c;
        }
        Ok(Cochain::from_coeffs(self.field, arity, d, m, coeffs).expect("sized above"))
    }
}

fn check_unique<'a>(
    parser: &Parser,
    kind: &str,
    names: impl Iterator<Item = &'a Spanned<String>>,
) -> Result<(), FormatError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.get_ref().clone()) {
            return parser.error(n.span(), format!("{kind} `{}`", n.get_ref()), "name is declared twice");
        }
    }
    Ok(())
}

impl ProblemFile {
    pub fn empty(field: Field) -> Self {
        ProblemFile {
            field,
            algebras: vec![],
            morphisms: vec![],
            cochains: vec![],
            deformations: vec![],
            isomorphisms: vec![],
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Self::parse_with_field(text, None)
    }

    /// Parses `text`, reading every literal in `field_override` when given
    /// instead of the declared field.
    pub fn parse_with_field(text: &str, field_override: Option<Field>) -> Result<Self, FormatError> {
        let raw: RawFile = toml::from_str(text).map_err(|e| match e.span() {
            Some(span) => FormatError::Syntax {
                location: Location::of(text, span.start),
                message: e.message().trim().to_string(),
            },
            None => FormatError::SyntaxUnlocated(e.message().trim().to_string()),
        })?;
        let declared = match raw.field.get_ref().parse::<Field>() {
            Ok(f) => f,
            Err(e) => {
                return Err(FormatError::Semantic {
                    location: Location::of(text, raw.field.span().start),
                    context: "field".into(),
                    message: e.to_string(),
                })
            }
        };
        let p = Parser {
            text,
            field: field_override.unwrap_or(declared),
        };
        check_unique(&p, "algebra", raw.algebras.iter().map(|a| &a.name))?;
        check_unique(&p, "morphism", raw.morphisms.iter().map(|a| &a.name))?;
        check_unique(&p, "cochain", raw.cochains.iter().map(|a| &a.name))?;
        check_unique(&p, "deformation", raw.deformations.iter().map(|a| &a.name))?;
        check_unique(&p, "isomorphism", raw.isomorphisms.iter().map(|a| &a.name))?;

        let mut out = ProblemFile::empty(p.field);
        for a in &raw.algebras {
            let context = format!("algebra `{}` products", a.name.get_ref());
            let c = p.cochain(&a.products, &context, 2, a.dim, a.dim)?;
            out.algebras.push(AlgebraSpec {
                name: a.name.get_ref().clone(),
                dim: a.dim,
                structure_constants: c.into_coeffs(),
            });
        }
        let dim_of = |name: &Spanned<String>, context: &str| -> Result<usize, FormatError> {
            match out.algebras.iter().find(|a| &a.name == name.get_ref()) {
                Some(a) => Ok(a.dim),
                None => p.error(name.span(), context, format!("no algebra named `{}`", name.get_ref())),
            }
        };
        let mut morphisms = Vec::new();
        for m in &raw.morphisms {
            let context = format!("morphism `{}`", m.name.get_ref());
            let (d, s) = (dim_of(&m.source, &context)?, dim_of(&m.target, &context)?);
            let mut matrix = Matrix::zeros(p.field, s, d);
            let mut seen = HashSet::new();
            for e in &m.matrix {
                let (idx, c) = p.indexed(e, &format!("{context} matrix"), &[s, d])?;
                if !seen.insert(idx.clone()) {
                    return p.error(e.span(), context, "duplicate entry");
                }
                matrix.set(idx[0], idx[1], c);
            }
            morphisms.push(MorphismSpec {
                name: m.name.get_ref().clone(),
                source: m.source.get_ref().clone(),
                target: m.target.get_ref().clone(),
                matrix,
            });
        }
        for c in &raw.cochains {
            let context = format!("cochain `{}`", c.name.get_ref());
            let target = c.target.as_ref().unwrap_or(&c.source);
            let (d, m) = (dim_of(&c.source, &context)?, dim_of(target, &context)?);
            if c.arity == 0 || c.arity > 4 {
                return p.error(c.name.span(), context, format!("arity {} is outside 1..=4", c.arity));
            }
            let cochain = p.cochain(&c.entries, &context, c.arity, d, m)?;
            out.cochains.push(CochainSpec {
                name: c.name.get_ref().clone(),
                source: c.source.get_ref().clone(),
                target: target.get_ref().clone(),
                cochain,
            });
        }
        let morphism_dims = |name: &Spanned<String>, context: &str| -> Result<(usize, usize), FormatError> {
            match morphisms.iter().find(|m| &m.name == name.get_ref()) {
                Some(m) => Ok((m.matrix.cols(), m.matrix.rows())),
                None => p.error(name.span(), context, format!("no morphism named `{}`", name.get_ref())),
            }
        };
        for def in &raw.deformations {
            let context = format!("deformation `{}`", def.name.get_ref());
            let (d, s) = morphism_dims(&def.morphism, &context)?;
            let mut terms: Vec<Option<TripleCochain>> = vec![None; def.order];
            for t in &def.terms {
                let k = *t.order.get_ref();
                let here = format!("{context} term {k}");
                if k == 0 || k > def.order {
                    return p.error(t.order.span(), here, format!("order must lie in 1..={}", def.order));
                }
                if terms[k - 1].is_some() {
                    return p.error(t.order.span(), here, "order is given twice");
                }
                let xi = p.cochain(&t.source, &format!("{here} source"), 2, d, d)?;
                let pi = p.cochain(&t.target, &format!("{here} target"), 2, s, s)?;
                let phi = p.cochain(&t.map, &format!("{here} map"), 1, d, s)?;
                terms[k - 1] = Some(TripleCochain::new(xi, pi, phi).expect("shapes agree"));
            }
            out.deformations.push(DeformationSpec {
                name: def.name.get_ref().clone(),
                morphism: def.morphism.get_ref().clone(),
                terms: terms
                    .into_iter()
                    .map(|t| t.unwrap_or_else(|| TripleCochain::zero(p.field, 2, d, s)))
                    .collect(),
            });
        }
        for iso in &raw.isomorphisms {
            let context = format!("isomorphism `{}`", iso.name.get_ref());
            let (d, s) = morphism_dims(&iso.morphism, &context)?;
            let mut terms: Vec<Option<TripleCochain>> = vec![None; iso.order];
            for t in &iso.terms {
                let k = *t.order.get_ref();
                let here = format!("{context} term {k}");
                if k == 0 || k > iso.order {
                    return p.error(t.order.span(), here, format!("order must lie in 1..={}", iso.order));
                }
                if terms[k - 1].is_some() {
                    return p.error(t.order.span(), here, "order is given twice");
                }
                let xi = p.cochain(&t.source, &format!("{here} source"), 1, d, d)?;
                let pi = p.cochain(&t.target, &format!("{here} target"), 1, s, s)?;
                terms[k - 1] = Some(TripleCochain::pair(xi, pi).expect("shapes agree"));
            }
            out.isomorphisms.push(IsomorphismSpec {
                name: iso.name.get_ref().clone(),
                morphism: iso.morphism.get_ref().clone(),
                terms: terms
                    .into_iter()
                    .map(|t| t.unwrap_or_else(|| TripleCochain::zero(p.field, 1, d, s)))
                    .collect(),
            });
        }
        out.morphisms = morphisms;
        Ok(out)
    }

    pub fn serialize(&self) -> String {
        let spanned = |s: &str| Spanned::new(0..0, s.to_string());
        let raw = RawFile {
            field: spanned(&self.field.to_string()),
            algebras: self
                .algebras
                .iter()
                .map(|a| RawAlgebra {
                    name: spanned(&a.name),
                    dim: a.dim,
                    products: sparse(&Cochain::from_coeffs(self.field, 2, a.dim, a.dim, a.structure_constants.clone()).expect("algebra spec is sized")),
                })
                .collect(),
            morphisms: self
                .morphisms
                .iter()
                .map(|m| RawMorphism {
                    name: spanned(&m.name),
                    source: spanned(&m.source),
                    target: spanned(&m.target),
                    matrix: sparse_matrix(&m.matrix),
                })
                .collect(),
            cochains: self
                .cochains
                .iter()
                .map(|c| RawCochain {
                    name: spanned(&c.name),
                    source: spanned(&c.source),
                    target: (c.target != c.source).then(|| spanned(&c.target)),
                    arity: c.cochain.arity(),
                    entries: sparse(&c.cochain),
                })
                .collect(),
            deformations: self
                .deformations
                .iter()
                .map(|d| RawDeformation {
                    name: spanned(&d.name),
                    morphism: spanned(&d.morphism),
                    order: d.terms.len(),
                    terms: d
                        .terms
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| !t.is_zero())
                        .map(|(k, t)| RawTerm {
                            order: Spanned::new(0..0, k + 1),
                            source: sparse(&t.xi),
                            target: sparse(&t.pi),
                            map: sparse(&t.phi),
                        })
                        .collect(),
                })
                .collect(),
            isomorphisms: self
                .isomorphisms
                .iter()
                .map(|d| RawIsomorphism {
                    name: spanned(&d.name),
                    morphism: spanned(&d.morphism),
                    order: d.terms.len(),
                    terms: d
                        .terms
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| !t.is_zero())
                        .map(|(k, t)| RawIsoTerm {
                            order: Spanned::new(0..0, k + 1),
                            source: sparse(&t.xi),
                            target: sparse(&t.pi),
                        })
                        .collect(),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("problem files always serialize")
    }

    fn find<'a, T>(items: &'a [T], name: &str, kind: &'static str, key: impl Fn(&T) -> &str) -> Result<&'a T, ModelError> {
        items.iter().find(|x| key(x) == name).ok_or_else(|| ModelError::Missing {
            kind,
            name: name.to_string(),
        })
    }

    pub fn algebra_spec(&self, name: &str) -> Result<&AlgebraSpec, ModelError> {
        Self::find(&self.algebras, name, "algebra", |a| &a.name)
    }

    pub fn morphism_spec(&self, name: &str) -> Result<&MorphismSpec, ModelError> {
        Self::find(&self.morphisms, name, "morphism", |m| &m.name)
    }

    pub fn cochain_spec(&self, name: &str) -> Result<&CochainSpec, ModelError> {
        Self::find(&self.cochains, name, "cochain", |c| &c.name)
    }

    pub fn deformation_spec(&self, name: &str) -> Result<&DeformationSpec, ModelError> {
        Self::find(&self.deformations, name, "deformation", |d| &d.name)
    }

    pub fn isomorphism_spec(&self, name: &str) -> Result<&IsomorphismSpec, ModelError> {
        Self::find(&self.isomorphisms, name, "isomorphism", |d| &d.name)
    }

    /// The named algebra, validated.
    pub fn algebra(&self, name: &str) -> Result<Arc<ZinbielAlgebra>, ModelError> {
        let spec = self.algebra_spec(name)?;
        spec.build(self.field).map(Arc::new).map_err(|source| ModelError::Algebra {
            kind: "algebra",
            name: name.to_string(),
            source,
        })
    }

    /// The named morphism with validated source and target.
    pub fn morphism(&self, name: &str) -> Result<AlgebraMorphism, ModelError> {
        let spec = self.morphism_spec(name)?;
        let (r, s) = (self.algebra(&spec.source)?, self.algebra(&spec.target)?);
        AlgebraMorphism::new(r, s, spec.matrix.clone()).map_err(|source| ModelError::Algebra {
            kind: "morphism",
            name: name.to_string(),
            source,
        })
    }

    /// The complex of the morphism a deformation or isomorphism refers to.
    pub fn complex(&self, morphism: &str) -> Result<Arc<MorphismComplex>, ModelError> {
        Ok(Arc::new(MorphismComplex::new(self.morphism(morphism)?)))
    }

    /// The named deformation, checked up to its order.
    pub fn deformation(&self, name: &str) -> Result<TruncatedDeformation, ModelError> {
        let spec = self.deformation_spec(name)?;
        let complex = self.complex(&spec.morphism)?;
        deformation_from_spec(&complex, spec).map_err(|source| ModelError::Deformation {
            name: name.to_string(),
            source,
        })
    }

    pub fn isomorphism(&self, name: &str) -> Result<FormalIsomorphism, ModelError> {
        let spec = self.isomorphism_spec(name)?;
        let m = self.morphism_spec(&spec.morphism)?;
        let mut terms = FormalIsomorphism::identity(self.field, m.matrix.cols(), m.matrix.rows())
            .terms()
            .to_vec();
        terms.extend(spec.terms.iter().cloned());
        FormalIsomorphism::new(terms).map_err(|source| ModelError::Deformation {
            name: name.to_string(),
            source,
        })
    }

    /// Adds or replaces a deformation with the given name.
    pub fn put_deformation(&mut self, name: &str, morphism: &str, theta: &TruncatedDeformation) {
        let spec = DeformationSpec {
            name: name.to_string(),
            morphism: morphism.to_string(),
            terms: theta.terms()[1..].to_vec(),
        };
        match self.deformations.iter_mut().find(|d| d.name == name) {
            Some(slot) => *slot = spec,
            None => self.deformations.push(spec),
        }
    }

    /// Adds or replaces a formal isomorphism with the given name.
    pub fn put_isomorphism(&mut self, name: &str, morphism: &str, iso: &FormalIsomorphism) {
        let spec = IsomorphismSpec {
            name: name.to_string(),
            morphism: morphism.to_string(),
            terms: iso.terms()[1..].to_vec(),
        };
        match self.isomorphisms.iter_mut().find(|d| d.name == name) {
            Some(slot) => *slot = spec,
            None => self.isomorphisms.push(spec),
        }
    }
}

/// `θ₀` from the morphism followed by the terms of `spec`, checked.
pub fn deformation_from_spec(
    complex: &Arc<MorphismComplex>,
    spec: &DeformationSpec,
) -> Result<TruncatedDeformation, DeformationError> {
    let mut terms = vec![complex.base_point()];
    terms.extend(spec.terms.iter().cloned());
    check_deformation(complex, terms)
}

fn entry(items: Vec<Scalar>) -> Entry {
    Spanned::new(0..0, items)
}

fn index(i: usize) -> Scalar {
    Scalar::Int(i as i64 + 1)
}

fn sparse(c: &Cochain) -> Vec<Entry> {
    let (d, m, n) = (c.source_dim(), c.target_dim(), c.arity());
    let mut out = Vec::new();
    let total = if n == 0 { 0 } else { d.pow(n as u32) };
    for flat in 0..total {
        let mut t = vec![0; n];
        let mut rest = flat;
        for slot in t.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        for (b, x) in c.value(&t).iter().enumerate() {
            if !x.is_zero() {
                let mut items: Vec<Scalar> = t.iter().map(|&i| index(i)).collect();
                items.push(index(b));
                items.push(Scalar::from_element(x));
                out.push(entry(items));
            }
        }
    }
    let _ = m;
    out
}

fn sparse_matrix(m: &Matrix) -> Vec<Entry> {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let x = m.get(r, c);
            if !x.is_zero() {
                out.push(entry(vec![index(r), index(c), Scalar::from_element(x)]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE_ZERO: &str = r#"
field = "Q"

[[algebra]]
name = "R"
dim = 2
products = [[1, 1, 2, 1]]
"#;

    #[test]
    fn empty_file() {
        let p = ProblemFile::parse("field = \"Fp:5\"\n").unwrap();
        assert_eq!(p, ProblemFile::empty(Field::Prime(5)));
    }

    #[test]
    fn square_zero_algebra() {
        let p = ProblemFile::parse(SQUARE_ZERO).unwrap();
        let r = p.algebra("R").unwrap();
        assert_eq!(r.basis_product(0, 0), &[Field::Rationals.zero(), Field::Rationals.one()]);
        assert_eq!(ProblemFile::parse(&p.serialize()).unwrap(), p);
    }

    #[test]
    fn index_out_of_range() {
        let text = SQUARE_ZERO.replace("[[1, 1, 2, 1]]", "[[1, 1, 3, 1]]");
        let err = ProblemFile::parse(&text).unwrap_err();
        let FormatError::Semantic { location, context, message } = err else {
            panic!("expected a semantic error, got {err:?}")
        };
        assert_eq!(location.line, 7);
        assert!(context.contains("[1, 1, 3, 1]"), "{context}");
        assert!(message.contains("outside 1..=2"), "{message}");
    }

    #[test]
    fn unknown_keys_are_located() {
        let err = ProblemFile::parse("field = \"Q\"\ncolour = 1\n").unwrap_err();
        let FormatError::Syntax { location, message } = err else {
            panic!("expected a syntax error, got {err:?}")
        };
        assert_eq!(location.line, 2);
        assert!(message.contains("colour"), "{message}");
    }

    #[test]
    fn bad_prime_and_bad_literal() {
        assert!(matches!(
            ProblemFile::parse("field = \"Fp:6\"\n"),
            Err(FormatError::Semantic { .. })
        ));
        let text = SQUARE_ZERO.replace("[[1, 1, 2, 1]]", "[[1, 1, 2, \"1/0\"]]");
        assert!(matches!(ProblemFile::parse(&text), Err(FormatError::Semantic { .. })));
    }

    #[test]
    fn unresolved_names() {
        let text = format!("{SQUARE_ZERO}\n[[morphism]]\nname = \"f\"\nsource = \"R\"\ntarget = \"T\"\n");
        let err = ProblemFile::parse(&text).unwrap_err();
        assert!(err.to_string().contains("no algebra named `T`"), "{err}");
    }

    #[test]
    fn full_round_trip() {
        let text = r#"
field = "Q"

[[algebra]]
name = "R"
dim = 2
products = [[1, 1, 2, 1]]

[[morphism]]
name = "f"
source = "R"
target = "R"
matrix = [[1, 1, 1], [2, 2, 1]]

[[cochain]]
name = "phi"
source = "R"
arity = 3
entries = [[1, 2, 1, 2, "-3/4"]]

[[deformation]]
name = "theta"
morphism = "f"
order = 2

[[deformation.term]]
order = 2
source = [[1, 1, 2, 1]]
map = [[2, 1, "1/2"]]

[[isomorphism]]
name = "phi_t"
morphism = "f"
order = 1

[[isomorphism.term]]
order = 1
source = [[1, 2, 5]]
"#;
        let p = ProblemFile::parse(text).unwrap();
        assert_eq!(p.deformations[0].order(), 2);
        assert!(p.deformations[0].terms[0].is_zero());
        let c = &p.cochains[0].cochain;
        assert_eq!(c.value(&[0, 1, 0])[1], Field::Rationals.parse_scalar("-3/4").unwrap());
        let phi = &p.deformations[0].terms[1].phi;
        assert_eq!(phi.value(&[1])[0], Field::Rationals.parse_scalar("1/2").unwrap());
        let again = ProblemFile::parse(&p.serialize()).unwrap();
        assert_eq!(again, p);
        assert!(p.isomorphism("phi_t").is_ok());
    }

    #[test]
    fn field_override_reduces_literals() {
        let p = ProblemFile::parse_with_field(SQUARE_ZERO, Some(Field::Prime(7))).unwrap();
        assert_eq!(p.field, Field::Prime(7));
        assert!(p.algebra("R").is_ok());
    }
}
