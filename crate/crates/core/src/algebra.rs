//! Basis-presented Zinbiel algebras, bimodules and morphisms.
//!
//! Everything here is validated on construction: a [`ZinbielAlgebra`] satisfies
//! `(x·y)·z = x·(y·z) + x·(z·y)` on all basis triples, a [`Bimodule`] satisfies
//! the same identity whenever exactly one argument comes from the module, and an
//! [`AlgebraMorphism`] respects products on all basis pairs.

use std::sync::Arc;

use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::matrix::{Matrix, Vector};

/// A basis triple `(i, j, k)` on which the Zinbiel identity fails, with
/// `(e_i·e_j)·e_k − e_i·(e_j·e_k) − e_i·(e_k·e_j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleViolation {
    pub indices: [usize; 3],
    pub residual: Vector,
}

/// A basis pair on which `f(e_i·e_j) − f(e_i)·f(e_j)` is nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairViolation {
    pub indices: [usize; 2],
    pub residual: Vector,
}

/// Which slot of the identity carries the module element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModuleSlot {
    First,
    Second,
    Third,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BimoduleViolation {
    pub slot: ModuleSlot,
    /// Basis indices in identity order; the module index sits at `slot`.
    pub indices: [usize; 3],
    pub residual: Vector,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{what}: expected {expected} entries, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(Field, Field),
    #[error("Zinbiel identity fails on {} basis triple(s)", violations.len())]
    NotZinbiel { violations: Vec<TripleViolation> },
    #[error("bimodule identity fails on {} basis triple(s)", violations.len())]
    NotBimodule { violations: Vec<BimoduleViolation> },
    #[error("map does not respect products on {} basis pair(s)", violations.len())]
    NotMorphism { violations: Vec<PairViolation> },
}

fn check_field(expected: Field, values: &[FieldElement]) -> Result<(), AlgebraError> {
    match values.iter().find(|x| x.field() != expected) {
        Some(x) => Err(AlgebraError::FieldMismatch(expected, x.field())),
        None => Ok(()),
    }
}

/// `Σ x_i y_j table(i, j)` for a bilinear map given on basis pairs.
pub(crate) fn bilinear<'a>(
    field: Field,
    out_dim: usize,
    table: impl Fn(usize, usize) -> &'a [FieldElement],
    x: &[FieldElement],
    y: &[FieldElement],
) -> Vector {
    let mut out = vec![field.zero(); out_dim];
    for (i, xi) in x.iter().enumerate() {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if yj.is_zero() {
                continue;
            }
            let c = xi * yj;
            for (slot, t) in out.iter_mut().zip(table(i, j)) {
                if !t.is_zero() {
                    *slot += &(&c * t);
                }
            }
        }
    }
    out
}

pub(crate) fn add_into(acc: &mut [FieldElement], v: &[FieldElement]) {
    for (a, b) in acc.iter_mut().zip(v) {
        if !b.is_zero() {
            *a += b;
        }
    }
}

pub(crate) fn sub_into(acc: &mut [FieldElement], v: &[FieldElement]) {
    for (a, b) in acc.iter_mut().zip(v) {
        if !b.is_zero() {
            *a -= b;
        }
    }
}

pub(crate) fn basis_vector(field: Field, dim: usize, i: usize) -> Vector {
    let mut v = vec![field.zero(); dim];
    v[i] = field.one();
    v
}

/// A finite-dimensional Zinbiel algebra given by structure constants
/// `e_i·e_j = Σ_k γ[i][j][k] e_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZinbielAlgebra {
    field: Field,
    dim: usize,
    gamma: Vec<FieldElement>,
}

/// Evaluates the Zinbiel identity on every basis triple of a candidate
/// structure tensor and lists the nonzero residuals.
pub fn zinbiel_residuals(
    field: Field,
    dim: usize,
    gamma: &[FieldElement],
) -> Result<Vec<TripleViolation>, AlgebraError> {
    let expected = dim * dim * dim;
    if gamma.len() != expected {
        return Err(AlgebraError::Shape {
            what: "structure constants",
            expected,
            actual: gamma.len(),
        });
    }
    check_field(field, gamma)?;
    let table = |i: usize, j: usize| &gamma[(i * dim + j) * dim..(i * dim + j + 1) * dim];
    let mul = |x: &[FieldElement], y: &[FieldElement]| bilinear(field, dim, table, x, y);
    let e = |i| basis_vector(field, dim, i);
    let mut out = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let mut residual = mul(table(i, j), &e(k));
                sub_into(&mut residual, &mul(&e(i), table(j, k)));
                sub_into(&mut residual, &mul(&e(i), table(k, j)));
                if residual.iter().any(|x| !x.is_zero()) {
                    out.push(TripleViolation {
                        indices: [i, j, k],
                        residual,
                    });
                }
            }
        }
    }
    Ok(out)
}

impl ZinbielAlgebra {
    /// Validates `gamma` (flattened `[i][j][k]`, length `dim³`) and builds the algebra.
    pub fn new(field: Field, dim: usize, gamma: Vec<FieldElement>) -> Result<Self, AlgebraError> {
        let violations = zinbiel_residuals(field, dim, &gamma)?;
        if !violations.is_empty() {
            return Err(AlgebraError::NotZinbiel { violations });
        }
        Ok(ZinbielAlgebra { field, dim, gamma })
    }

    /// The algebra with all products zero.
    pub fn abelian(field: Field, dim: usize) -> Self {
        ZinbielAlgebra {
            field,
            dim,
            gamma: vec![field.zero(); dim * dim * dim],
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constants(&self) -> &[FieldElement] {
        &self.gamma
    }

    /// Coordinates of `e_i·e_j`.
    pub fn basis_product(&self, i: usize, j: usize) -> &[FieldElement] {
        let d = self.dim;
        &self.gamma[(i * d + j) * d..(i * d + j + 1) * d]
    }

    pub fn mul(&self, x: &[FieldElement], y: &[FieldElement]) -> Vector {
        bilinear(self.field, self.dim, |i, j| self.basis_product(i, j), x, y)
    }

    pub fn is_abelian(&self) -> bool {
        self.gamma.iter().all(FieldElement::is_zero)
    }

    /// Number of basis triples the identity was checked on.
    pub fn triple_count(&self) -> usize {
        self.dim.pow(3)
    }
}

/// An `R`-bimodule `A` with actions `λ: R⊗A → A` and `ρ: A⊗R → A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bimodule {
    base: Arc<ZinbielAlgebra>,
    dim: usize,
    /// `e_i·a_a = Σ_b left[(i·m + a)·m + b] a_b`
    left: Vec<FieldElement>,
    /// `a_a·e_i = Σ_b right[(a·d + i)·m + b] a_b`
    right: Vec<FieldElement>,
}

impl Bimodule {
    pub fn new(
        base: Arc<ZinbielAlgebra>,
        dim: usize,
        left: Vec<FieldElement>,
        right: Vec<FieldElement>,
    ) -> Result<Self, AlgebraError> {
        let d = base.dim();
        let expected = d * dim * dim;
        for (what, t) in [("left action", &left), ("right action", &right)] {
            if t.len() != expected {
                return Err(AlgebraError::Shape {
                    what,
                    expected,
                    actual: t.len(),
                });
            }
            check_field(base.field(), t)?;
        }
        let module = Bimodule {
            base,
            dim,
            left,
            right,
        };
        let violations = module.residuals();
        if violations.is_empty() {
            Ok(module)
        } else {
            Err(AlgebraError::NotBimodule { violations })
        }
    }

    /// `R` acting on itself by multiplication.
    pub fn regular(base: Arc<ZinbielAlgebra>) -> Self {
        let d = base.dim();
        // ρ and γ share the index layout (a, i, b)
        let gamma = base.structure_constants().to_vec();
        let right = gamma.clone();
        Bimodule {
            base,
            dim: d,
            left: gamma,
            right,
        }
    }

    /// `S` as an `R`-bimodule through `g: R → S`: `r·s = g(r)·s`, `s·r = s·g(r)`.
    pub fn via_morphism(g: &AlgebraMorphism) -> Self {
        let r = g.source();
        let s = g.target();
        let (d, m) = (r.dim(), s.dim());
        let field = r.field();
        let mut left = vec![field.zero(); d * m * m];
        let mut right = vec![field.zero(); d * m * m];
        for i in 0..d {
            let gi = g.image(i);
            for a in 0..m {
                let ea = basis_vector(field, m, a);
                let l = s.mul(&gi, &ea);
                let rr = s.mul(&ea, &gi);
                left[(i * m + a) * m..(i * m + a + 1) * m].clone_from_slice(&l);
                right[(a * d + i) * m..(a * d + i + 1) * m].clone_from_slice(&rr);
            }
        }
        Bimodule {
            base: Arc::clone(r),
            dim: m,
            left,
            right,
        }
    }

    pub fn base(&self) -> &Arc<ZinbielAlgebra> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.base.field()
    }

    pub fn left_basis(&self, i: usize, a: usize) -> &[FieldElement] {
        let m = self.dim;
        &self.left[(i * m + a) * m..(i * m + a + 1) * m]
    }

    pub fn right_basis(&self, a: usize, i: usize) -> &[FieldElement] {
        let (m, d) = (self.dim, self.base.dim());
        &self.right[(a * d + i) * m..(a * d + i + 1) * m]
    }

    /// `r·a` for `r ∈ R`, `a ∈ A`.
    pub fn act_left(&self, r: &[FieldElement], a: &[FieldElement]) -> Vector {
        bilinear(self.field(), self.dim, |i, b| self.left_basis(i, b), r, a)
    }

    /// `a·r` for `a ∈ A`, `r ∈ R`.
    pub fn act_right(&self, a: &[FieldElement], r: &[FieldElement]) -> Vector {
        bilinear(self.field(), self.dim, |b, i| self.right_basis(b, i), a, r)
    }

    /// Residuals of the three mixed identities on every basis triple.
    pub fn residuals(&self) -> Vec<BimoduleViolation> {
        let field = self.field();
        let (d, m) = (self.base.dim(), self.dim);
        let er = |i| basis_vector(field, d, i);
        let ea = |a| basis_vector(field, m, a);
        let rmul = |x: &[FieldElement], y: &[FieldElement]| self.base.mul(x, y);
        let mut out = Vec::new();
        let mut push = |slot, indices, residual: Vector| {
            if residual.iter().any(|x| !x.is_zero()) {
                out.push(BimoduleViolation {
                    slot,
                    indices,
                    residual,
                });
            }
        };
        for a in 0..m {
            for i in 0..d {
                for j in 0..d {
                    // (a·r)·r' = a·(r·r') + a·(r'·r)
                    let mut res = self.act_right(&self.act_right(&ea(a), &er(i)), &er(j));
                    sub_into(&mut res, &self.act_right(&ea(a), &rmul(&er(i), &er(j))));
                    sub_into(&mut res, &self.act_right(&ea(a), &rmul(&er(j), &er(i))));
                    push(ModuleSlot::First, [a, i, j], res);

                    // (r·a)·r' = r·(a·r') + r·(r'·a)
                    let mut res = self.act_right(&self.act_left(&er(i), &ea(a)), &er(j));
                    sub_into(&mut res, &self.act_left(&er(i), &self.act_right(&ea(a), &er(j))));
                    sub_into(&mut res, &self.act_left(&er(i), &self.act_left(&er(j), &ea(a))));
                    push(ModuleSlot::Second, [i, a, j], res);

                    // (r·r')·a = r·(r'·a) + r·(a·r')
                    let mut res = self.act_left(&rmul(&er(i), &er(j)), &ea(a));
                    sub_into(&mut res, &self.act_left(&er(i), &self.act_left(&er(j), &ea(a))));
                    sub_into(&mut res, &self.act_left(&er(i), &self.act_right(&ea(a), &er(j))));
                    push(ModuleSlot::Third, [i, j, a], res);
                }
            }
        }
        out
    }
}

/// A product-preserving linear map `f: R → S`, stored as a `dim S × dim R` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraMorphism {
    source: Arc<ZinbielAlgebra>,
    target: Arc<ZinbielAlgebra>,
    matrix: Matrix,
}

/// Lists basis pairs where `f(e_i·e_j) ≠ f(e_i)·f(e_j)`.
pub fn morphism_residuals(
    source: &ZinbielAlgebra,
    target: &ZinbielAlgebra,
    matrix: &Matrix,
) -> Result<Vec<PairViolation>, AlgebraError> {
    if source.field() != target.field() {
        return Err(AlgebraError::FieldMismatch(source.field(), target.field()));
    }
    if matrix.field() != source.field() {
        return Err(AlgebraError::FieldMismatch(source.field(), matrix.field()));
    }
    let (d, m) = (source.dim(), target.dim());
    if matrix.rows() != m || matrix.cols() != d {
        return Err(AlgebraError::Shape {
            what: "morphism matrix",
            expected: m * d,
            actual: matrix.rows() * matrix.cols(),
        });
    }
    let image = |i: usize| -> Vector { (0..m).map(|k| matrix.get(k, i).clone()).collect() };
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let mut residual = matrix.apply(source.basis_product(i, j)).expect("shape checked");
            sub_into(&mut residual, &target.mul(&image(i), &image(j)));
            if residual.iter().any(|x| !x.is_zero()) {
                out.push(PairViolation {
                    indices: [i, j],
                    residual,
                });
            }
        }
    }
    Ok(out)
}

impl AlgebraMorphism {
    pub fn new(
        source: Arc<ZinbielAlgebra>,
        target: Arc<ZinbielAlgebra>,
        matrix: Matrix,
    ) -> Result<Self, AlgebraError> {
        let violations = morphism_residuals(&source, &target, &matrix)?;
        if !violations.is_empty() {
            return Err(AlgebraError::NotMorphism { violations });
        }
        Ok(AlgebraMorphism {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(algebra: Arc<ZinbielAlgebra>) -> Self {
        let matrix = Matrix::identity(algebra.field(), algebra.dim());
        AlgebraMorphism {
            source: Arc::clone(&algebra),
            target: algebra,
            matrix,
        }
    }

    pub fn zero(source: Arc<ZinbielAlgebra>, target: Arc<ZinbielAlgebra>) -> Result<Self, AlgebraError> {
        if source.field() != target.field() {
            return Err(AlgebraError::FieldMismatch(source.field(), target.field()));
        }
        let matrix = Matrix::zeros(source.field(), target.dim(), source.dim());
        Ok(AlgebraMorphism {
            source,
            target,
            matrix,
        })
    }

    pub fn source(&self) -> &Arc<ZinbielAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ZinbielAlgebra> {
        &self.target
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn field(&self) -> Field {
        self.source.field()
    }

    /// `f(e_i)` as a coordinate vector in `S`.
    pub fn image(&self, i: usize) -> Vector {
        (0..self.target.dim()).map(|k| self.matrix.get(k, i).clone()).collect()
    }

    pub fn apply(&self, x: &[FieldElement]) -> Vector {
        self.matrix.apply(x).expect("argument lives in the source")
    }
}
