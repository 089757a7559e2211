//! Cochains, the complex `C*(R, A)` in degrees 1 through 4, the deformation
//! complex `C*(f, f)` of a morphism, and the cohomology groups `H²`, `H³`.
//!
//! Differentials are available along two routes: [`differential`] evaluates
//! the defining formulas cochain by cochain, while [`differential_matrix`]
//! scatters structure constants into a matrix. Cocycle tests use the former,
//! ranks and preimages the latter.

mod assembly;
mod cochain;
mod differential;

use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::algebra::{AlgebraMorphism, Bimodule, ZinbielAlgebra};
use crate::field::Field;
use crate::matrix::Matrix;

pub use assembly::{differential_matrix, push_forward_left_matrix, push_forward_right_matrix};
pub use cochain::{
    cochain_space_dim, push_forward_left, push_forward_right, BasisCombination, Cochain, TripleCochain,
};
pub use differential::differential;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohomologyError {
    #[error("no differential is defined on arity {0} (expected 1, 2 or 3)")]
    ArityOutOfRange(usize),
    #[error("degree {0} is outside the supported range")]
    DegreeOutOfRange(usize),
    #[error("expected {expected} coefficients, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("cochain maps dim {} -> dim {}, expected dim {} -> dim {}", actual.0, actual.1, expected.0, expected.1)]
    SpaceMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("triple components have arities ({xi}, {pi}, {phi})")]
    ArityMismatch { xi: usize, pi: usize, phi: usize },
    #[error("triple components do not match the dimensions of R and S")]
    TripleShape,
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(Field, Field),
}

/// Anything that can be tested for being exactly zero.
pub trait Residual {
    fn vanishes(&self) -> bool;
}

impl Residual for Cochain {
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

impl Residual for TripleCochain {
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
}

/// `d(x)`, kept so a failing cocycle test shows where it fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleCheck<T> {
    pub residual: T,
}

impl<T: Residual> CocycleCheck<T> {
    pub fn holds(&self) -> bool {
        self.residual.vanishes()
    }
}

#[derive(Debug, Default)]
struct MatrixCache {
    matrices: [OnceLock<Matrix>; 3],
    ranks: [OnceLock<usize>; 3],
}

/// A cochain complex living in degrees 1 through 4.
pub trait CochainComplex {
    fn field(&self) -> Field;

    /// `dim Cⁿ` for `1 ≤ n ≤ 4`.
    fn space_dim(&self, n: usize) -> usize;

    /// Matrix of `dⁱ: Cⁱ → Cⁱ⁺¹`, `i ∈ {1, 2, 3}`.
    fn differential_matrix(&self, i: usize) -> Result<&Matrix, CohomologyError>;

    fn differential_rank(&self, i: usize) -> Result<usize, CohomologyError>;

    /// `dim Hⁿ = dim ker dⁿ − rank dⁿ⁻¹`, defined for `n ∈ {2, 3}`.
    fn cohomology_dim(&self, n: usize) -> Result<usize, CohomologyError> {
        if n != 2 && n != 3 {
            return Err(CohomologyError::DegreeOutOfRange(n));
        }
        let kernel = self.space_dim(n) - self.differential_rank(n)?;
        Ok(kernel - self.differential_rank(n - 1)?)
    }
}

fn cached_matrix(
    cache: &MatrixCache,
    i: usize,
    build: impl FnOnce() -> Result<Matrix, CohomologyError>,
) -> Result<&Matrix, CohomologyError> {
    if !(1..=3).contains(&i) {
        return Err(CohomologyError::ArityOutOfRange(i));
    }
    if let Some(m) = cache.matrices[i - 1].get() {
        return Ok(m);
    }
    let m = build()?;
    Ok(cache.matrices[i - 1].get_or_init(|| m))
}

fn cached_rank<C: CochainComplex + ?Sized>(complex: &C, cache: &MatrixCache, i: usize) -> Result<usize, CohomologyError> {
    let m = complex.differential_matrix(i)?;
    Ok(*cache.ranks[i - 1].get_or_init(|| m.rank()))
}

/// `C*(R, A)` for an `R`-bimodule `A`.
#[derive(Debug)]
pub struct AlgebraComplex {
    module: Bimodule,
    cache: MatrixCache,
}

impl AlgebraComplex {
    pub fn new(module: Bimodule) -> Self {
        AlgebraComplex {
            module,
            cache: MatrixCache::default(),
        }
    }

    /// `C*(R, R)` with the regular bimodule.
    pub fn regular(algebra: Arc<ZinbielAlgebra>) -> Self {
        Self::new(Bimodule::regular(algebra))
    }

    pub fn module(&self) -> &Bimodule {
        &self.module
    }

    pub fn algebra(&self) -> &Arc<ZinbielAlgebra> {
        self.module.base()
    }

    pub fn zero(&self, arity: usize) -> Cochain {
        Cochain::zero(self.field(), arity, self.algebra().dim(), self.module.dim())
    }

    pub fn differential(&self, phi: &Cochain) -> Result<Cochain, CohomologyError> {
        differential(&self.module, phi)
    }

    pub fn is_cocycle(&self, x: &Cochain) -> Result<CocycleCheck<Cochain>, CohomologyError> {
        Ok(CocycleCheck {
            residual: self.differential(x)?,
        })
    }

    /// Some `y` with `dy = x`, chosen deterministically, or `None`.
    pub fn coboundary_preimage(&self, x: &Cochain) -> Result<Option<Cochain>, CohomologyError> {
        let n = x.arity();
        if !(2..=4).contains(&n) {
            return Err(CohomologyError::DegreeOutOfRange(n));
        }
        let m = self.differential_matrix(n - 1)?;
        let (d, a) = (self.algebra().dim(), self.module.dim());
        if x.source_dim() != d || x.target_dim() != a {
            return Err(CohomologyError::SpaceMismatch {
                expected: (d, a),
                actual: (x.source_dim(), x.target_dim()),
            });
        }
        let sol = m.solve(x.coeffs()).expect("dimensions checked");
        sol.map(|v| Cochain::from_coeffs(self.field(), n - 1, d, a, v)).transpose()
    }
}

impl CochainComplex for AlgebraComplex {
    fn field(&self) -> Field {
        self.module.field()
    }

    fn space_dim(&self, n: usize) -> usize {
        cochain_space_dim(n, self.algebra().dim(), self.module.dim())
    }

    fn differential_matrix(&self, i: usize) -> Result<&Matrix, CohomologyError> {
        cached_matrix(&self.cache, i, || differential_matrix(&self.module, i))
    }

    fn differential_rank(&self, i: usize) -> Result<usize, CohomologyError> {
        cached_rank(self, &self.cache, i)
    }
}

/// The deformation complex `C*(f, f)` of a morphism `f: R → S`, with
/// `d_f(ξ; π; φ) = (dξ; dπ; fξ − πf − dφ)`.
#[derive(Debug)]
pub struct MorphismComplex {
    morphism: AlgebraMorphism,
    source_module: Bimodule,
    target_module: Bimodule,
    cross_module: Bimodule,
    cache: MatrixCache,
}

impl MorphismComplex {
    pub fn new(morphism: AlgebraMorphism) -> Self {
        MorphismComplex {
            source_module: Bimodule::regular(Arc::clone(morphism.source())),
            target_module: Bimodule::regular(Arc::clone(morphism.target())),
            cross_module: Bimodule::via_morphism(&morphism),
            morphism,
            cache: MatrixCache::default(),
        }
    }

    pub fn morphism(&self) -> &AlgebraMorphism {
        &self.morphism
    }

    pub fn source(&self) -> &Arc<ZinbielAlgebra> {
        self.morphism.source()
    }

    pub fn target(&self) -> &Arc<ZinbielAlgebra> {
        self.morphism.target()
    }

    /// `R` as a bimodule over itself.
    pub fn source_module(&self) -> &Bimodule {
        &self.source_module
    }

    /// `S` as a bimodule over itself.
    pub fn target_module(&self) -> &Bimodule {
        &self.target_module
    }

    /// `S` as an `R`-bimodule through `f`.
    pub fn cross_module(&self) -> &Bimodule {
        &self.cross_module
    }

    pub fn source_dim(&self) -> usize {
        self.source().dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target().dim()
    }

    pub fn zero(&self, degree: usize) -> TripleCochain {
        TripleCochain::zero(self.field(), degree, self.source_dim(), self.target_dim())
    }

    /// `θ₀ = (m_R; m_S; f)`.
    pub fn base_point(&self) -> TripleCochain {
        TripleCochain::new(
            Cochain::product(self.source()),
            Cochain::product(self.target()),
            Cochain::from_morphism(&self.morphism),
        )
        .expect("base point is well formed")
    }

    pub fn unflatten(&self, degree: usize, v: &[crate::field::FieldElement]) -> Result<TripleCochain, CohomologyError> {
        TripleCochain::unflatten(self.field(), degree, self.source_dim(), self.target_dim(), v)
    }

    fn check_triple(&self, theta: &TripleCochain) -> Result<(), CohomologyError> {
        if theta.field() != self.field() {
            return Err(CohomologyError::FieldMismatch(self.field(), theta.field()));
        }
        if theta.source_dim() != self.source_dim() || theta.target_dim() != self.target_dim() {
            return Err(CohomologyError::SpaceMismatch {
                expected: (self.source_dim(), self.target_dim()),
                actual: (theta.source_dim(), theta.target_dim()),
            });
        }
        Ok(())
    }

    /// `dⁱ_f θ` evaluated from the formula, for `θ` of degree 1, 2 or 3.
    pub fn differential(&self, theta: &TripleCochain) -> Result<TripleCochain, CohomologyError> {
        self.check_triple(theta)?;
        let i = theta.degree();
        if !(1..=3).contains(&i) {
            return Err(CohomologyError::DegreeOutOfRange(i));
        }
        let xi = differential(&self.source_module, &theta.xi)?;
        let pi = differential(&self.target_module, &theta.pi)?;
        let mut phi = push_forward_left(&self.morphism, &theta.xi);
        phi.sub_assign(&push_forward_right(&self.morphism, &theta.pi));
        if i > 1 {
            phi.sub_assign(&differential(&self.cross_module, &theta.phi)?);
        }
        TripleCochain::new(xi, pi, phi)
    }

    pub fn is_cocycle(&self, theta: &TripleCochain) -> Result<CocycleCheck<TripleCochain>, CohomologyError> {
        Ok(CocycleCheck {
            residual: self.differential(theta)?,
        })
    }

    /// Some `η` with `d_f η = θ`, chosen deterministically, or `None`.
    pub fn coboundary_preimage(&self, theta: &TripleCochain) -> Result<Option<TripleCochain>, CohomologyError> {
        self.check_triple(theta)?;
        let n = theta.degree();
        if !(2..=4).contains(&n) {
            return Err(CohomologyError::DegreeOutOfRange(n));
        }
        let m = self.differential_matrix(n - 1)?;
        let sol = m.solve(&theta.flatten()).expect("dimensions checked");
        sol.map(|v| self.unflatten(n - 1, &v)).transpose()
    }

    /// A covector vanishing on the image of `d_f` but not on `θ`, when one exists.
    pub fn non_coboundary_witness(
        &self,
        theta: &TripleCochain,
    ) -> Result<Option<Vec<crate::field::FieldElement>>, CohomologyError> {
        self.check_triple(theta)?;
        let n = theta.degree();
        if !(2..=4).contains(&n) {
            return Err(CohomologyError::DegreeOutOfRange(n));
        }
        let m = self.differential_matrix(n - 1)?;
        Ok(m.inconsistency_witness(&theta.flatten()).expect("dimensions checked"))
    }

    fn assemble(&self, i: usize) -> Result<Matrix, CohomologyError> {
        let (d, s) = (self.source_dim(), self.target_dim());
        let rows = self.space_dim(i + 1);
        let cols = self.space_dim(i);
        let mut mat = Matrix::zeros(self.field(), rows, cols);
        let (rr, rs) = (cochain_space_dim(i + 1, d, d), cochain_space_dim(i + 1, s, s));
        let (cr, cs) = (cochain_space_dim(i, d, d), cochain_space_dim(i, s, s));
        assembly::place(&mut mat, &differential_matrix(&self.source_module, i)?, 0, 0, false);
        assembly::place(&mut mat, &differential_matrix(&self.target_module, i)?, rr, cr, false);
        assembly::place(&mut mat, &push_forward_left_matrix(&self.morphism, i), rr + rs, 0, false);
        assembly::place(&mut mat, &push_forward_right_matrix(&self.morphism, i), rr + rs, cr, true);
        if i > 1 {
            let cross = differential_matrix(&self.cross_module, i - 1)?;
            assembly::place(&mut mat, &cross, rr + rs, cr + cs, true);
        }
        Ok(mat)
    }
}

impl CochainComplex for MorphismComplex {
    fn field(&self) -> Field {
        self.morphism.field()
    }

    fn space_dim(&self, n: usize) -> usize {
        let (d, s) = (self.source_dim(), self.target_dim());
        cochain_space_dim(n, d, d) + cochain_space_dim(n, s, s) + cochain_space_dim(n - 1, d, s)
    }

    fn differential_matrix(&self, i: usize) -> Result<&Matrix, CohomologyError> {
        cached_matrix(&self.cache, i, || self.assemble(i))
    }

    fn differential_rank(&self, i: usize) -> Result<usize, CohomologyError> {
        cached_rank(self, &self.cache, i)
    }
}
