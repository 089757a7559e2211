//! Matrices of the differentials and push-forwards, assembled entry by entry
//! from structure constants.
//!
//! This is a second, independent route to the same maps as
//! [`super::differential`]: no cochain is ever evaluated here. Rows and
//! columns follow the cochain flattening, tuple row-major with the output
//! index fastest.

use crate::algebra::{AlgebraMorphism, Bimodule};
use crate::field::FieldElement;
use crate::matrix::Matrix;

use super::cochain::{cochain_space_dim, tuple_index, tuples};
use super::CohomologyError;

struct Layout {
    d: usize,
    m: usize,
}

impl Layout {
    fn at(&self, tuple: &[usize], b: usize) -> usize {
        tuple_index(tuple, self.d) * self.m + b
    }
}

/// Matrix of `dⁱ: Cⁱ(R, A) → Cⁱ⁺¹(R, A)`.
pub fn differential_matrix(module: &Bimodule, i: usize) -> Result<Matrix, CohomologyError> {
    if !(1..=3).contains(&i) {
        return Err(CohomologyError::ArityOutOfRange(i));
    }
    let base = module.base();
    let field = base.field();
    let (d, m) = (base.dim(), module.dim());
    let lay = Layout { d, m };
    let gamma = |x: usize, y: usize, j: usize| &base.basis_product(x, y)[j];
    // γ_{xy}^j + γ_{yx}^j
    let sym = |x: usize, y: usize, j: usize| gamma(x, y, j) + gamma(y, x, j);
    let lam = |x: usize, c: usize, b: usize| &module.left_basis(x, c)[b];
    let rho = |c: usize, x: usize, b: usize| &module.right_basis(c, x)[b];

    let mut mat = Matrix::zeros(field, cochain_space_dim(i + 1, d, m), cochain_space_dim(i, d, m));
    let neg = |v: &FieldElement| -v;
    for t in tuples(d, i + 1) {
        for b in 0..m {
            let row = lay.at(&t, b);
            match i {
                1 => {
                    let (x, y) = (t[0], t[1]);
                    for c in 0..m {
                        mat.add_to(row, lay.at(&[y], c), lam(x, c, b));
                        mat.add_to(row, lay.at(&[x], c), rho(c, y, b));
                    }
                    for j in 0..d {
                        mat.add_to(row, lay.at(&[j], b), &neg(gamma(x, y, j)));
                    }
                }
                2 => {
                    let (x, y, z) = (t[0], t[1], t[2]);
                    for c in 0..m {
                        mat.add_to(row, lay.at(&[y, z], c), lam(x, c, b));
                        mat.add_to(row, lay.at(&[z, y], c), lam(x, c, b));
                        mat.add_to(row, lay.at(&[x, y], c), &neg(rho(c, z, b)));
                    }
                    for j in 0..d {
                        mat.add_to(row, lay.at(&[j, z], b), &neg(gamma(x, y, j)));
                        mat.add_to(row, lay.at(&[x, j], b), &sym(y, z, j));
                    }
                }
                _ => {
                    let (x, y, z, w) = (t[0], t[1], t[2], t[3]);
                    for c in 0..m {
                        let l = lam(x, c, b);
                        mat.add_to(row, lay.at(&[y, z, w], c), l);
                        mat.add_to(row, lay.at(&[z, w, y], c), &neg(l));
                        mat.add_to(row, lay.at(&[z, y, w], c), l);
                        mat.add_to(row, lay.at(&[w, z, y], c), &neg(l));
                        mat.add_to(row, lay.at(&[x, y, z], c), rho(c, w, b));
                    }
                    for j in 0..d {
                        mat.add_to(row, lay.at(&[j, z, w], b), &neg(gamma(x, y, j)));
                        mat.add_to(row, lay.at(&[x, j, w], b), &sym(y, z, j));
                        mat.add_to(row, lay.at(&[x, y, j], b), &neg(&sym(z, w, j)));
                    }
                }
            }
        }
    }
    Ok(mat)
}

/// Matrix of `ξ ↦ fξ`, `Cⁱ(R, R) → Cⁱ(R, S)`.
pub fn push_forward_left_matrix(f: &AlgebraMorphism, i: usize) -> Matrix {
    let (d, s) = (f.source().dim(), f.target().dim());
    let src = Layout { d, m: d };
    let dst = Layout { d, m: s };
    let mut mat = Matrix::zeros(f.field(), cochain_space_dim(i, d, s), cochain_space_dim(i, d, d));
    for t in tuples(d, i) {
        for b in 0..s {
            for c in 0..d {
                mat.add_to(dst.at(&t, b), src.at(&t, c), f.matrix().get(b, c));
            }
        }
    }
    mat
}

/// Matrix of `π ↦ πf`, `Cⁱ(S, S) → Cⁱ(R, S)`.
pub fn push_forward_right_matrix(f: &AlgebraMorphism, i: usize) -> Matrix {
    let (d, s) = (f.source().dim(), f.target().dim());
    let field = f.field();
    let src = Layout { d: s, m: s };
    let dst = Layout { d, m: s };
    let mut mat = Matrix::zeros(field, cochain_space_dim(i, d, s), cochain_space_dim(i, s, s));
    for xs in tuples(d, i) {
        for js in tuples(s, i) {
            // Π_k F[j_k][x_k]
            let mut weight = field.one();
            for (&j, &x) in js.iter().zip(&xs) {
                weight = &weight * f.matrix().get(j, x);
                if weight.is_zero() {
                    break;
                }
            }
            if weight.is_zero() {
                continue;
            }
            for b in 0..s {
                mat.add_to(dst.at(&xs, b), src.at(&js, b), &weight);
            }
        }
    }
    mat
}

/// Copies `block` into `target` at offset `(r0, c0)`, negated when `negate`.
pub(crate) fn place(target: &mut Matrix, block: &Matrix, r0: usize, c0: usize, negate: bool) {
    for r in 0..block.rows() {
        for c in 0..block.cols() {
            let v = block.get(r, c);
            if !v.is_zero() {
                target.set(r0 + r, c0 + c, if negate { -v } else { v.clone() });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::algebra::ZinbielAlgebra;
    use crate::cohomology::cochain::Cochain;
    use crate::cohomology::differential::differential;
    use crate::field::Field;

    const Q: Field = Field::Rationals;

    fn square_zero_line() -> Arc<ZinbielAlgebra> {
        let mut g = vec![Q.zero(); 8];
        g[1] = Q.one();
        Arc::new(ZinbielAlgebra::new(Q, 2, g).unwrap())
    }

    #[test]
    fn abelian_line_d1_is_zero() {
        let module = Bimodule::regular(Arc::new(ZinbielAlgebra::abelian(Q, 1)));
        let m = differential_matrix(&module, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 1));
        assert!(m.is_zero());
    }

    #[test]
    fn d1_matrix_sends_identity_to_product() {
        let r = square_zero_line();
        let module = Bimodule::regular(r.clone());
        let m = differential_matrix(&module, 1).unwrap();
        assert_eq!((m.rows(), m.cols()), (8, 4));
        let image = m.apply(Cochain::identity(Q, 2).coeffs()).unwrap();
        assert_eq!(image, Cochain::product(&r).coeffs());
        assert_eq!(image, differential(&module, &Cochain::identity(Q, 2)).unwrap().coeffs());
    }

    #[test]
    fn consecutive_matrices_compose_to_zero() {
        let module = Bimodule::regular(square_zero_line());
        for i in 1..=2 {
            let a = differential_matrix(&module, i).unwrap();
            let b = differential_matrix(&module, i + 1).unwrap();
            assert!(b.mul(&a).unwrap().is_zero(), "d{} d{} != 0", i + 1, i);
        }
    }

    #[test]
    fn push_forward_matrices_match_cochain_maps() {
        let r = square_zero_line();
        let f = AlgebraMorphism::identity(r.clone());
        let m = Cochain::product(&r);
        let l = push_forward_left_matrix(&f, 2).apply(m.coeffs()).unwrap();
        let p = push_forward_right_matrix(&f, 2).apply(m.coeffs()).unwrap();
        assert_eq!(l, m.coeffs());
        assert_eq!(p, m.coeffs());
    }
}
