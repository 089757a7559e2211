//! Truncated deformations `Θ_t = θ₀ + θ₁t + … + θ_N t^N` of a morphism
//! `f: R → S`, with `θ₀ = (m_R; m_S; f)` and every `θᵢ = (m_{R,i}; m_{S,i}; fᵢ)`
//! a degree-2 element of `C²(f, f)`.

mod isomorphism;
mod obstruction;
mod rigidity;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{add_into, basis_vector, sub_into};
use crate::cohomology::{CocycleCheck, Cochain, CohomologyError, MorphismComplex, TripleCochain};
use crate::matrix::Vector;

pub use isomorphism::{conjugate, infinitesimal_difference_is_coboundary, DifferenceCertificate, FormalIsomorphism};
pub use obstruction::{
    extend_from_cocycle, extend_one_order, obstruction, verify_obstruction_identity, Extension, ExtensionOutcome,
    ObstructionClass, ObstructionIdentity,
};
pub use rigidity::{
    normalize_leading_term, rigidity_check, trivialize, Normalization, ProbeConfig, ProbeOutcome, RigidityReport,
    Trivialization, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeformationError {
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error("a deformation needs at least the constant term")]
    Empty,
    #[error("term {order} has degree {degree}, expected 2")]
    TermDegree { order: usize, degree: usize },
    #[error("constant term differs from (m_R; m_S; f)")]
    BaseMismatch,
    #[error("{0}")]
    Violation(DeformationViolation),
    #[error("formal isomorphism must start with the identity pair")]
    NonIdentityConstant,
    #[error("term {order} of the formal isomorphism has degree {degree}, expected 1")]
    IsomorphismDegree { order: usize, degree: usize },
    #[error("infinitesimal is not a 2-cocycle")]
    NotCocycle { residual: Box<TripleCochain> },
    #[error("leading term at order {order} is not a coboundary")]
    NotCoboundary { order: usize, witness: Vector },
    #[error("conjugation left a nonzero term at order {order}")]
    NormalizationFailed { order: usize },
    #[error("operation needs a deformation of order at least {needed}, got {actual}")]
    OrderTooLow { needed: usize, actual: usize },
}

/// Which of the defining identities is violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    /// Zinbiel identity for `M_{R,t}`.
    SourceProduct,
    /// Zinbiel identity for `M_{S,t}`.
    TargetProduct,
    /// `F_t ∘ M_{R,t} = M_{S,t}(F_t, F_t)`.
    Morphism,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equation::SourceProduct => "Zinbiel identity for R",
            Equation::TargetProduct => "Zinbiel identity for S",
            Equation::Morphism => "morphism identity",
        })
    }
}

/// The coefficient of `tⁿ` in one of the defining identities, where it fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeformationViolation {
    pub order: usize,
    pub equation: Equation,
    pub residual: Cochain,
}

impl DeformationViolation {
    /// Short label such as `R[t^2]` or `f[t^1]`.
    pub fn label(&self) -> String {
        let name = match self.equation {
            Equation::SourceProduct => "R",
            Equation::TargetProduct => "S",
            Equation::Morphism => "f",
        };
        format!("{name}[t^{}]", self.order)
    }
}

impl fmt::Display for DeformationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} fails at order {} ({}): {}",
            self.equation,
            self.order,
            self.label(),
            self.residual
        )
    }
}

/// `a(b(x,y), z) − a(x, b(y,z) + b(z,y))` on basis triples.
pub(crate) fn associator(a: &Cochain, b: &Cochain) -> Cochain {
    let field = a.field();
    let d = a.source_dim();
    let mut out = Cochain::zero(field, 3, d, a.target_dim());
    let e: Vec<Vector> = (0..d).map(|i| basis_vector(field, d, i)).collect();
    for x in 0..d {
        for y in 0..d {
            let xy = b.value(&[x, y]);
            for z in 0..d {
                let mut sym = b.value(&[y, z]).to_vec();
                add_into(&mut sym, b.value(&[z, y]));
                let mut r = a.eval(&[xy, &e[z]]);
                sub_into(&mut r, &a.eval(&[&e[x], &sym]));
                out.value_mut(&[x, y, z]).clone_from_slice(&r);
            }
        }
    }
    out
}

/// `Σ_{l=0}^{n} assoc(m_l, m_{n−l})`, the `tⁿ` coefficient of the Zinbiel identity.
fn product_residual(terms: &[&Cochain], n: usize) -> Cochain {
    let mut r = associator(terms[0], terms[n]);
    for l in 1..=n {
        r.add_assign(&associator(terms[l], terms[n - l]));
    }
    r
}

/// `Σᵢ fᵢ m_{R,n−i} − Σ_{i+j+k=n} m_{S,i}(f_j, f_k)`, the `tⁿ` coefficient of the
/// morphism identity.
fn morphism_residual(terms: &[TripleCochain], n: usize) -> Cochain {
    let t = &terms[0];
    let mut r = Cochain::zero(t.field(), 2, t.source_dim(), t.target_dim());
    for i in 0..=n {
        r.add_assign(&terms[n - i].xi.then(&terms[i].phi));
    }
    for i in 0..=n {
        for j in 0..=n - i {
            let k = n - i - j;
            r.sub_assign(&terms[i].pi.precompose(&[&terms[j].phi, &terms[k].phi]));
        }
    }
    r
}

fn first_violation(terms: &[TripleCochain], n: usize) -> Option<DeformationViolation> {
    let xis: Vec<&Cochain> = terms.iter().map(|t| &t.xi).collect();
    let pis: Vec<&Cochain> = terms.iter().map(|t| &t.pi).collect();
    let found = |equation, residual: Cochain| {
        (!residual.is_zero()).then_some(DeformationViolation {
            order: n,
            equation,
            residual,
        })
    };
    found(Equation::SourceProduct, product_residual(&xis, n))
        .or_else(|| found(Equation::TargetProduct, product_residual(&pis, n)))
        .or_else(|| found(Equation::Morphism, morphism_residual(terms, n)))
}

/// A validated deformation of order `N`.
#[derive(Debug, Clone)]
pub struct TruncatedDeformation {
    complex: Arc<MorphismComplex>,
    terms: Vec<TripleCochain>,
}

impl PartialEq for TruncatedDeformation {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

/// Either no higher term is nonzero or the first one that is.
#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Infinitesimal {
    Trivial,
    Leading {
        order: usize,
        term: TripleCochain,
        check: CocycleCheck<TripleCochain>,
    },
}

/// Validates `terms` as a deformation of order `terms.len() − 1`, checking every
/// coefficient identity on all basis tuples in increasing order.
pub fn check_deformation(
    complex: &Arc<MorphismComplex>,
    terms: Vec<TripleCochain>,
) -> Result<TruncatedDeformation, DeformationError> {
    if terms.is_empty() {
        return Err(DeformationError::Empty);
    }
    for (order, t) in terms.iter().enumerate() {
        if t.degree() != 2 {
            return Err(DeformationError::TermDegree {
                order,
                degree: t.degree(),
            });
        }
        if t.field() != complex.morphism().field() {
            return Err(CohomologyError::FieldMismatch(complex.morphism().field(), t.field()).into());
        }
        if t.source_dim() != complex.source_dim() || t.target_dim() != complex.target_dim() {
            return Err(CohomologyError::SpaceMismatch {
                expected: (complex.source_dim(), complex.target_dim()),
                actual: (t.source_dim(), t.target_dim()),
            }
            .into());
        }
    }
    if terms[0] != complex.base_point() {
        return Err(DeformationError::BaseMismatch);
    }
    for n in 0..terms.len() {
        if let Some(v) = first_violation(&terms, n) {
            return Err(DeformationError::Violation(v));
        }
    }
    Ok(TruncatedDeformation {
        complex: Arc::clone(complex),
        terms,
    })
}

impl TruncatedDeformation {
    /// `θ₀` alone, padded with zeros to order `order`.
    pub fn trivial(complex: &Arc<MorphismComplex>, order: usize) -> Self {
        let mut terms = vec![complex.base_point()];
        terms.extend((0..order).map(|_| complex.zero(2)));
        TruncatedDeformation {
            complex: Arc::clone(complex),
            terms,
        }
    }

    pub fn complex(&self) -> &Arc<MorphismComplex> {
        &self.complex
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[TripleCochain] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &TripleCochain {
        &self.terms[i]
    }

    pub fn into_terms(self) -> Vec<TripleCochain> {
        self.terms
    }

    /// Whether `θᵢ = 0` for every `i ≥ 1`.
    pub fn is_trivial(&self) -> bool {
        self.terms[1..].iter().all(TripleCochain::is_zero)
    }

    /// Index of the first nonzero `θᵢ`, `i ≥ 1`.
    pub fn leading_order(&self) -> Option<usize> {
        (1..self.terms.len()).find(|&i| !self.terms[i].is_zero())
    }

    /// The first nonzero higher term together with its cocycle test.
    pub fn infinitesimal(&self) -> Result<Infinitesimal, DeformationError> {
        match self.leading_order() {
            None => Ok(Infinitesimal::Trivial),
            Some(order) => {
                let term = self.terms[order].clone();
                let check = self.complex.is_cocycle(&term)?;
                Ok(Infinitesimal::Leading { order, term, check })
            }
        }
    }

    /// Drops the terms above `order`.
    pub fn truncate(&self, order: usize) -> TruncatedDeformation {
        TruncatedDeformation {
            complex: Arc::clone(&self.complex),
            terms: self.terms[..=order.min(self.order())].to_vec(),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::algebra::{AlgebraMorphism, ZinbielAlgebra};
    use crate::field::Field;

    pub(crate) const Q: Field = Field::Rationals;

    pub(crate) fn abelian(field: Field, dim: usize) -> Arc<ZinbielAlgebra> {
        Arc::new(ZinbielAlgebra::abelian(field, dim))
    }

    pub(crate) fn square_zero_line(field: Field) -> Arc<ZinbielAlgebra> {
        let mut g = vec![field.zero(); 8];
        g[1] = field.one();
        Arc::new(ZinbielAlgebra::new(field, 2, g).unwrap())
    }

    /// `μ(e₁, e₁) = e₁` on a line.
    pub(crate) fn mu(field: Field) -> Cochain {
        Cochain::from_coeffs(field, 2, 1, 1, vec![field.one()]).unwrap()
    }

    pub(crate) fn complex(f: AlgebraMorphism) -> Arc<MorphismComplex> {
        Arc::new(MorphismComplex::new(f))
    }

    pub(crate) fn zero_on_line() -> Arc<MorphismComplex> {
        let line = abelian(Q, 1);
        complex(AlgebraMorphism::zero(line.clone(), line).unwrap())
    }

    #[test]
    fn trivial_deformation_is_valid() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        let t = TruncatedDeformation::trivial(&c, 3);
        let checked = check_deformation(&c, t.terms().to_vec()).unwrap();
        assert_eq!(checked.order(), 3);
        assert_eq!(checked.infinitesimal().unwrap(), Infinitesimal::Trivial);
    }

    #[test]
    fn base_mismatch_is_rejected() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        assert_eq!(
            check_deformation(&c, vec![c.zero(2)]).unwrap_err(),
            DeformationError::BaseMismatch
        );
        assert_eq!(check_deformation(&c, vec![]).unwrap_err(), DeformationError::Empty);
    }

    #[test]
    fn squared_product_fails_at_order_two() {
        let line = abelian(Q, 1);
        let c = complex(AlgebraMorphism::identity(line));
        let theta1 = TripleCochain::new(mu(Q), mu(Q), Cochain::zero(Q, 1, 1, 1)).unwrap();
        // order one alone is fine: μ is a cocycle and d¹(0) cancels f₁
        assert!(c.is_cocycle(&theta1).unwrap().holds());
        check_deformation(&c, vec![c.base_point(), theta1.clone()]).unwrap();
        let err = check_deformation(&c, vec![c.base_point(), theta1, c.zero(2)]).unwrap_err();
        let DeformationError::Violation(v) = err else {
            panic!("expected a violation")
        };
        assert_eq!((v.order, v.equation), (2, Equation::SourceProduct));
        assert_eq!(v.residual.value(&[0, 0, 0]), &[Q.from_i64(-1)]);
        assert_eq!(v.label(), "R[t^2]");
    }

    #[test]
    fn order_one_matches_cocycle_condition() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        // every basis 2-cochain: valid at order one exactly when a cocycle
        let n = crate::cohomology::CochainComplex::space_dim(c.as_ref(), 2);
        for k in 0..n {
            let mut v = vec![Q.zero(); n];
            v[k] = Q.one();
            let theta1 = c.unflatten(2, &v).unwrap();
            let cocycle = c.is_cocycle(&theta1).unwrap().holds();
            let valid = check_deformation(&c, vec![c.base_point(), theta1]).is_ok();
            assert_eq!(cocycle, valid, "basis element {k}");
        }
    }

    #[test]
    fn leading_term_is_reported() {
        let c = zero_on_line();
        let theta = TruncatedDeformation::trivial(&c, 2);
        assert_eq!(theta.leading_order(), None);
        assert!(theta.is_trivial());
        assert_eq!(theta.truncate(1).order(), 1);
    }
}
