use std::fmt;

use crate::algebra::{AlgebraMorphism, ZinbielAlgebra};
use crate::field::{Field, FieldElement};
use crate::matrix::{Matrix, Vector};

use super::CohomologyError;

/// Number of coefficients of an `n`-cochain `R^{⊗n} → A`; the degree-0
/// space is the zero space.
pub fn cochain_space_dim(arity: usize, source_dim: usize, target_dim: usize) -> usize {
    if arity == 0 {
        0
    } else {
        source_dim.pow(arity as u32) * target_dim
    }
}

/// Row-major index of a basis tuple.
pub(crate) fn tuple_index(tuple: &[usize], dim: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * dim + i)
}

/// All tuples in `[0, dim)^n`, last index fastest.
pub(crate) fn tuples(dim: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if n == 0 { 0 } else { dim.pow(n as u32) };
    (0..total).map(move |mut flat| {
        let mut t = vec![0; n];
        for slot in t.iter_mut().rev() {
            *slot = flat % dim;
            flat /= dim;
        }
        t
    })
}

/// A multilinear map `φ: R^{⊗n} → A` stored densely.
///
/// `coeffs[tuple_index(i₁..iₙ)·m + b]` is the `b`-th coordinate of
/// `φ(e_{i₁}, …, e_{iₙ})`, so the output index runs fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cochain {
    field: Field,
    arity: usize,
    source_dim: usize,
    target_dim: usize,
    coeffs: Vec<FieldElement>,
}

impl Cochain {
    pub fn zero(field: Field, arity: usize, source_dim: usize, target_dim: usize) -> Self {
        Cochain {
            field,
            arity,
            source_dim,
            target_dim,
            coeffs: vec![field.zero(); cochain_space_dim(arity, source_dim, target_dim)],
        }
    }

    pub fn from_coeffs(
        field: Field,
        arity: usize,
        source_dim: usize,
        target_dim: usize,
        coeffs: Vec<FieldElement>,
    ) -> Result<Self, CohomologyError> {
        let expected = cochain_space_dim(arity, source_dim, target_dim);
        if coeffs.len() != expected {
            return Err(CohomologyError::Shape {
                expected,
                actual: coeffs.len(),
            });
        }
        if let Some(x) = coeffs.iter().find(|x| x.field() != field) {
            return Err(CohomologyError::FieldMismatch(field, x.field()));
        }
        Ok(Cochain {
            field,
            arity,
            source_dim,
            target_dim,
            coeffs,
        })
    }

    /// The identity map as a 1-cochain.
    pub fn identity(field: Field, dim: usize) -> Self {
        let mut c = Cochain::zero(field, 1, dim, dim);
        for i in 0..dim {
            c.coeffs[i * dim + i] = field.one();
        }
        c
    }

    /// The product `m` of an algebra as a 2-cochain.
    pub fn product(algebra: &ZinbielAlgebra) -> Self {
        let d = algebra.dim();
        Cochain {
            field: algebra.field(),
            arity: 2,
            source_dim: d,
            target_dim: d,
            coeffs: algebra.structure_constants().to_vec(),
        }
    }

    /// A linear map, given as a `target × source` matrix, as a 1-cochain.
    pub fn from_matrix(matrix: &Matrix) -> Self {
        let (m, d) = (matrix.rows(), matrix.cols());
        let mut c = Cochain::zero(matrix.field(), 1, d, m);
        for i in 0..d {
            for b in 0..m {
                c.coeffs[i * m + b] = matrix.get(b, i).clone();
            }
        }
        c
    }

    /// Matrix of a 1-cochain, columns are images of basis vectors.
    pub fn to_matrix(&self) -> Matrix {
        assert_eq!(self.arity, 1, "only 1-cochains are linear maps");
        let mut out = Matrix::zeros(self.field, self.target_dim, self.source_dim);
        for i in 0..self.source_dim {
            for b in 0..self.target_dim {
                out.set(b, i, self.coeffs[i * self.target_dim + b].clone());
            }
        }
        out
    }

    /// The linear map underlying a morphism as a 1-cochain in `C¹(R, S)`.
    pub fn from_morphism(f: &AlgebraMorphism) -> Self {
        Self::from_matrix(f.matrix())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Flattened coefficients.
    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<FieldElement> {
        self.coeffs
    }

    /// `φ(e_{i₁}, …, e_{iₙ})`.
    pub fn value(&self, tuple: &[usize]) -> &[FieldElement] {
        debug_assert_eq!(tuple.len(), self.arity);
        let m = self.target_dim;
        let at = tuple_index(tuple, self.source_dim) * m;
        &self.coeffs[at..at + m]
    }

    pub fn value_mut(&mut self, tuple: &[usize]) -> &mut [FieldElement] {
        let m = self.target_dim;
        let at = tuple_index(tuple, self.source_dim) * m;
        &mut self.coeffs[at..at + m]
    }

    /// Multilinear evaluation on arbitrary coordinate vectors.
    pub fn eval(&self, args: &[&[FieldElement]]) -> Vector {
        assert_eq!(args.len(), self.arity, "wrong number of arguments");
        let mut out = vec![self.field.zero(); self.target_dim];
        if self.arity == 0 {
            return out;
        }
        let supports: Vec<Vec<(usize, &FieldElement)>> = args
            .iter()
            .map(|a| a.iter().enumerate().filter(|(_, x)| !x.is_zero()).collect())
            .collect();
        let mut tuple = vec![0usize; self.arity];
        self.accumulate(&supports, 0, &self.field.one(), &mut tuple, &mut out);
        out
    }

    fn accumulate(
        &self,
        supports: &[Vec<(usize, &FieldElement)>],
        slot: usize,
        weight: &FieldElement,
        tuple: &mut Vec<usize>,
        out: &mut [FieldElement],
    ) {
        if slot == supports.len() {
            for (o, v) in out.iter_mut().zip(self.value(tuple)) {
                if !v.is_zero() {
                    *o += &(weight * v);
                }
            }
            return;
        }
        for &(i, x) in &supports[slot] {
            tuple[slot] = i;
            self.accumulate(supports, slot + 1, &(weight * x), tuple, out);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(FieldElement::is_zero)
    }

    fn assert_same_space(&self, other: &Cochain) {
        assert!(
            self.arity == other.arity
                && self.source_dim == other.source_dim
                && self.target_dim == other.target_dim,
            "cochains live in different spaces"
        );
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        self.assert_same_space(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Cochain { coeffs, ..self.clone() }
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        self.assert_same_space(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Cochain { coeffs, ..self.clone() }
    }

    pub fn scale(&self, c: &FieldElement) -> Cochain {
        let coeffs = self.coeffs.iter().map(|a| a * c).collect();
        Cochain { coeffs, ..self.clone() }
    }

    pub fn neg(&self) -> Cochain {
        let coeffs = self.coeffs.iter().map(|a| -a).collect();
        Cochain { coeffs, ..self.clone() }
    }

    pub fn add_assign(&mut self, other: &Cochain) {
        self.assert_same_space(other);
        crate::algebra::add_into(&mut self.coeffs, &other.coeffs);
    }

    pub fn sub_assign(&mut self, other: &Cochain) {
        self.assert_same_space(other);
        crate::algebra::sub_into(&mut self.coeffs, &other.coeffs);
    }

    /// `h ∘ φ` for a linear map `h` given as a 1-cochain.
    pub fn then(&self, h: &Cochain) -> Cochain {
        assert_eq!(h.arity, 1);
        assert_eq!(h.source_dim, self.target_dim);
        let mut out = Cochain::zero(self.field, self.arity, self.source_dim, h.target_dim);
        for t in tuples(self.source_dim, self.arity) {
            let v = h.eval(&[self.value(&t)]);
            out.value_mut(&t).clone_from_slice(&v);
        }
        out
    }

    /// `φ(g₁(x₁), …, gₙ(xₙ))` for linear maps `gₖ` given as 1-cochains.
    pub fn precompose(&self, maps: &[&Cochain]) -> Cochain {
        assert_eq!(maps.len(), self.arity);
        let new_source = maps.first().map_or(self.source_dim, |g| g.source_dim);
        for g in maps {
            assert_eq!(g.arity, 1);
            assert_eq!(g.target_dim, self.source_dim);
            assert_eq!(g.source_dim, new_source);
        }
        let mut out = Cochain::zero(self.field, self.arity, new_source, self.target_dim);
        for t in tuples(new_source, self.arity) {
            let args: Vec<&[FieldElement]> = maps.iter().zip(&t).map(|(g, &i)| g.value(&[i])).collect();
            let v = self.eval(&args);
            out.value_mut(&t).clone_from_slice(&v);
        }
        out
    }

    /// `φ(g(x₁), …, g(xₙ))`.
    pub fn precompose_all(&self, g: &Cochain) -> Cochain {
        let maps = vec![g; self.arity];
        self.precompose(&maps)
    }
}

/// `(fξ)(x₁, …, xᵢ) = f(ξ(x₁, …, xᵢ))`, a cochain in `Cⁱ(R, S)`.
pub fn push_forward_left(f: &AlgebraMorphism, xi: &Cochain) -> Cochain {
    assert_eq!(xi.source_dim(), f.source().dim());
    assert_eq!(xi.target_dim(), f.source().dim());
    xi.then(&Cochain::from_morphism(f))
}

/// `(πf)(x₁, …, xᵢ) = π(f(x₁), …, f(xᵢ))`, a cochain in `Cⁱ(R, S)`.
pub fn push_forward_right(f: &AlgebraMorphism, pi: &Cochain) -> Cochain {
    assert_eq!(pi.source_dim(), f.target().dim());
    assert_eq!(pi.target_dim(), f.target().dim());
    pi.precompose_all(&Cochain::from_morphism(f))
}

/// An element `(ξ; π; φ)` of `Cⁿ(f, f) = Cⁿ(R,R) × Cⁿ(S,S) × Cⁿ⁻¹(R,S)`.
///
/// In degree 1 the `φ` slot is an arity-0 cochain, which has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleCochain {
    degree: usize,
    pub xi: Cochain,
    pub pi: Cochain,
    pub phi: Cochain,
}

impl TripleCochain {
    pub fn new(xi: Cochain, pi: Cochain, phi: Cochain) -> Result<Self, CohomologyError> {
        let degree = xi.arity();
        let (dr, ds) = (xi.source_dim(), pi.source_dim());
        if !(1..=4).contains(&degree) {
            return Err(CohomologyError::DegreeOutOfRange(degree));
        }
        if pi.arity() != degree || phi.arity() + 1 != degree {
            return Err(CohomologyError::ArityMismatch {
                xi: xi.arity(),
                pi: pi.arity(),
                phi: phi.arity(),
            });
        }
        let shapes_ok = xi.target_dim() == dr
            && pi.target_dim() == ds
            && (degree == 1 || (phi.source_dim() == dr && phi.target_dim() == ds));
        if !shapes_ok {
            return Err(CohomologyError::TripleShape);
        }
        for c in [&pi, &phi] {
            if c.field() != xi.field() {
                return Err(CohomologyError::FieldMismatch(xi.field(), c.field()));
            }
        }
        let phi = if degree == 1 {
            Cochain::zero(xi.field(), 0, dr, ds)
        } else {
            phi
        };
        Ok(TripleCochain { degree, xi, pi, phi })
    }

    /// A degree-1 element `(ξ, π)`.
    pub fn pair(xi: Cochain, pi: Cochain) -> Result<Self, CohomologyError> {
        let phi = Cochain::zero(xi.field(), 0, xi.source_dim(), pi.source_dim());
        Self::new(xi, pi, phi)
    }

    pub fn zero(field: Field, degree: usize, source_dim: usize, target_dim: usize) -> Self {
        TripleCochain {
            degree,
            xi: Cochain::zero(field, degree, source_dim, source_dim),
            pi: Cochain::zero(field, degree, target_dim, target_dim),
            phi: Cochain::zero(field, degree - 1, source_dim, target_dim),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn field(&self) -> Field {
        self.xi.field()
    }

    pub fn source_dim(&self) -> usize {
        self.xi.source_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.pi.source_dim()
    }

    /// Concatenation `[ξ | π | φ]` of the flattened components.
    pub fn flatten(&self) -> Vector {
        let mut v = self.xi.coeffs().to_vec();
        v.extend_from_slice(self.pi.coeffs());
        v.extend_from_slice(self.phi.coeffs());
        v
    }

    /// Inverse of [`TripleCochain::flatten`].
    pub fn unflatten(
        field: Field,
        degree: usize,
        source_dim: usize,
        target_dim: usize,
        v: &[FieldElement],
    ) -> Result<Self, CohomologyError> {
        let a = cochain_space_dim(degree, source_dim, source_dim);
        let b = cochain_space_dim(degree, target_dim, target_dim);
        let c = cochain_space_dim(degree - 1, source_dim, target_dim);
        if v.len() != a + b + c {
            return Err(CohomologyError::Shape {
                expected: a + b + c,
                actual: v.len(),
            });
        }
        Ok(TripleCochain {
            degree,
            xi: Cochain::from_coeffs(field, degree, source_dim, source_dim, v[..a].to_vec())?,
            pi: Cochain::from_coeffs(field, degree, target_dim, target_dim, v[a..a + b].to_vec())?,
            phi: Cochain::from_coeffs(field, degree - 1, source_dim, target_dim, v[a + b..].to_vec())?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.xi.is_zero() && self.pi.is_zero() && self.phi.is_zero()
    }

    pub fn add(&self, other: &TripleCochain) -> TripleCochain {
        TripleCochain {
            degree: self.degree,
            xi: self.xi.add(&other.xi),
            pi: self.pi.add(&other.pi),
            phi: self.phi.add(&other.phi),
        }
    }

    pub fn sub(&self, other: &TripleCochain) -> TripleCochain {
        TripleCochain {
            degree: self.degree,
            xi: self.xi.sub(&other.xi),
            pi: self.pi.sub(&other.pi),
            phi: self.phi.sub(&other.phi),
        }
    }

    pub fn scale(&self, c: &FieldElement) -> TripleCochain {
        TripleCochain {
            degree: self.degree,
            xi: self.xi.scale(c),
            pi: self.pi.scale(c),
            phi: self.phi.scale(c),
        }
    }
}

/// Writes a vector as a combination of `e1, e2, …` (1-based).
pub struct BasisCombination<'a>(pub &'a [FieldElement]);

impl fmt::Display for BasisCombination<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let negative = c.is_negative_rational();
            let magnitude = if negative { -c } else { c.clone() };
            let sign = match (first, negative) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            if magnitude.is_one() {
                write!(f, "{sign}e{}", i + 1)?;
            } else {
                write!(f, "{sign}{magnitude}*e{}", i + 1)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Display for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for t in tuples(self.source_dim, self.arity) {
            let v = self.value(&t);
            if v.iter().all(FieldElement::is_zero) {
                continue;
            }
            let args: Vec<String> = t.iter().map(|i| format!("e{}", i + 1)).collect();
            if any {
                write!(f, ", ")?;
            }
            write!(f, "({}) -> {}", args.join(","), BasisCombination(v))?;
            any = true;
        }
        if !any {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    const Q: Field = Field::Rationals;

    #[test]
    fn tuple_order_is_row_major() {
        let all: Vec<_> = tuples(2, 2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(tuple_index(&[1, 0], 2), 2);
        assert_eq!(tuples(3, 0).count(), 0);
    }

    #[test]
    fn eval_is_multilinear() {
        // φ(e_i, e_j) = (i + 2j) e1 on a 2-dim space
        let mut phi = Cochain::zero(Q, 2, 2, 1);
        for t in tuples(2, 2) {
            phi.value_mut(&t)[0] = Q.from_i64((t[0] + 2 * t[1]) as i64);
        }
        let x = [Q.from_i64(1), Q.from_i64(2)];
        let y = [Q.from_i64(3), Q.from_i64(-1)];
        // Σ x_i y_j (i + 2j)
        let mut expect = 0i64;
        for i in 0..2 {
            for j in 0..2 {
                let xi = [1, 2][i];
                let yj = [3, -1][j];
                expect += xi * yj * (i as i64 + 2 * j as i64);
            }
        }
        assert_eq!(phi.eval(&[&x, &y]), vec![Q.from_i64(expect)]);
    }

    fn square_zero_line() -> Arc<ZinbielAlgebra> {
        let mut g = vec![Q.zero(); 8];
        g[1] = Q.one();
        Arc::new(ZinbielAlgebra::new(Q, 2, g).unwrap())
    }

    #[test]
    fn push_forwards_along_identity() {
        let r = square_zero_line();
        let f = AlgebraMorphism::identity(r.clone());
        let m = Cochain::product(&r);
        assert_eq!(push_forward_left(&f, &m), m);
        assert_eq!(push_forward_right(&f, &m), m);
    }

    #[test]
    fn push_forwards_along_zero() {
        let r = square_zero_line();
        let f = AlgebraMorphism::zero(r.clone(), r.clone()).unwrap();
        let m = Cochain::product(&r);
        assert!(push_forward_left(&f, &m).is_zero());
        assert!(push_forward_right(&f, &m).is_zero());
    }

    #[test]
    fn from_morphism_transposes_the_matrix() {
        let a = Arc::new(ZinbielAlgebra::abelian(Q, 2));
        let b = Arc::new(ZinbielAlgebra::abelian(Q, 1));
        let f = AlgebraMorphism::new(a, b, Matrix::from_i64(Q, &[&[3, 4]])).unwrap();
        let c = Cochain::from_morphism(&f);
        assert_eq!(c.value(&[0]), &[Q.from_i64(3)]);
        assert_eq!(c.value(&[1]), &[Q.from_i64(4)]);
    }

    #[test]
    fn triple_degree_one_has_empty_phi() {
        let t = TripleCochain::pair(Cochain::identity(Q, 2), Cochain::identity(Q, 1)).unwrap();
        assert_eq!(t.phi.coeffs().len(), 0);
        assert_eq!(t.flatten().len(), 4 + 1);
        let back = TripleCochain::unflatten(Q, 1, 2, 1, &t.flatten()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn triple_rejects_bad_arity() {
        let err = TripleCochain::new(
            Cochain::zero(Q, 2, 1, 1),
            Cochain::zero(Q, 2, 1, 1),
            Cochain::zero(Q, 2, 1, 1),
        );
        assert!(matches!(err, Err(CohomologyError::ArityMismatch { .. })));
    }

    #[test]
    fn combination_display() {
        let v = [Q.from_i64(-1), Q.zero(), Q.parse_scalar("2/3").unwrap()];
        assert_eq!(BasisCombination(&v).to_string(), "-e1 + 2/3*e3");
        assert_eq!(BasisCombination(&[Q.zero()]).to_string(), "0");
    }
}
