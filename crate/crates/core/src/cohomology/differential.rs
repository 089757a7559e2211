//! The differentials `d¹, d², d³` of `C*(R, A)`, evaluated straight from their
//! defining formulas on basis tuples.

use crate::algebra::{add_into, basis_vector, sub_into, Bimodule};
use crate::field::FieldElement;
use crate::matrix::Vector;

use super::cochain::{tuples, Cochain};
use super::CohomologyError;

fn check_operand(module: &Bimodule, phi: &Cochain) -> Result<(), CohomologyError> {
    let base = module.base();
    if phi.field() != base.field() {
        return Err(CohomologyError::FieldMismatch(base.field(), phi.field()));
    }
    if phi.source_dim() != base.dim() || phi.target_dim() != module.dim() {
        return Err(CohomologyError::SpaceMismatch {
            expected: (base.dim(), module.dim()),
            actual: (phi.source_dim(), phi.target_dim()),
        });
    }
    Ok(())
}

fn sum(a: &[FieldElement], b: &[FieldElement]) -> Vector {
    let mut v = a.to_vec();
    add_into(&mut v, b);
    v
}

/// `dⁱφ` for `φ ∈ Cⁱ(R, A)`, `i ∈ {1, 2, 3}`:
///
/// ```text
/// (d¹φ)(x,y)     = x·φ(y) − φ(x·y) + φ(x)·y
/// (d²φ)(x,y,z)   = x·(φ(y,z) + φ(z,y)) − φ(x·y,z) + φ(x, y·z + z·y) − φ(x,y)·z
/// (d³φ)(x,y,z,w) = x·{φ(y,z,w) − φ(z,w,y) + φ(z,y,w) − φ(w,z,y)} − φ(x·y,z,w)
///                  + φ(x, y·z + z·y, w) − φ(x, y, z·w + w·z) + φ(x,y,z)·w
/// ```
pub fn differential(module: &Bimodule, phi: &Cochain) -> Result<Cochain, CohomologyError> {
    check_operand(module, phi)?;
    let arity = phi.arity();
    if !(1..=3).contains(&arity) {
        return Err(CohomologyError::ArityOutOfRange(arity));
    }
    let base = module.base();
    let field = base.field();
    let d = base.dim();
    let e = |i: usize| basis_vector(field, d, i);
    let prod = |x: &[FieldElement], y: &[FieldElement]| base.mul(x, y);
    let sym = |x: &[FieldElement], y: &[FieldElement]| sum(&prod(x, y), &prod(y, x));
    let left = |r: &[FieldElement], a: &[FieldElement]| module.act_left(r, a);
    let right = |a: &[FieldElement], r: &[FieldElement]| module.act_right(a, r);

    let mut out = Cochain::zero(field, arity + 1, d, module.dim());
    for t in tuples(d, arity + 1) {
        let v: Vec<Vector> = t.iter().map(|&i| e(i)).collect();
        let value = match arity {
            1 => {
                let (x, y) = (&v[0], &v[1]);
                let mut r = left(x, &phi.eval(&[y]));
                sub_into(&mut r, &phi.eval(&[&prod(x, y)]));
                add_into(&mut r, &right(&phi.eval(&[x]), y));
                r
            }
            2 => {
                let (x, y, z) = (&v[0], &v[1], &v[2]);
                let inner = sum(&phi.eval(&[y, z]), &phi.eval(&[z, y]));
                let mut r = left(x, &inner);
                sub_into(&mut r, &phi.eval(&[&prod(x, y), z]));
                add_into(&mut r, &phi.eval(&[x, &sym(y, z)]));
                sub_into(&mut r, &right(&phi.eval(&[x, y]), z));
                r
            }
            _ => {
                let (x, y, z, w) = (&v[0], &v[1], &v[2], &v[3]);
                let mut inner = phi.eval(&[y, z, w]);
                sub_into(&mut inner, &phi.eval(&[z, w, y]));
                add_into(&mut inner, &phi.eval(&[z, y, w]));
                sub_into(&mut inner, &phi.eval(&[w, z, y]));
                let mut r = left(x, &inner);
                sub_into(&mut r, &phi.eval(&[&prod(x, y), z, w]));
                add_into(&mut r, &phi.eval(&[x, &sym(y, z), w]));
                sub_into(&mut r, &phi.eval(&[x, y, &sym(z, w)]));
                add_into(&mut r, &right(&phi.eval(&[x, y, z]), w));
                r
            }
        };
        out.value_mut(&t).clone_from_slice(&value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::algebra::ZinbielAlgebra;
    use crate::field::Field;

    const Q: Field = Field::Rationals;

    fn square_zero_line() -> Arc<ZinbielAlgebra> {
        let mut g = vec![Q.zero(); 8];
        g[1] = Q.one();
        Arc::new(ZinbielAlgebra::new(Q, 2, g).unwrap())
    }

    #[test]
    fn d1_of_identity_is_the_product() {
        let r = square_zero_line();
        let module = Bimodule::regular(r.clone());
        let d1 = differential(&module, &Cochain::identity(Q, 2)).unwrap();
        assert_eq!(d1, Cochain::product(&r));
    }

    #[test]
    fn zero_maps_to_zero() {
        let module = Bimodule::regular(square_zero_line());
        for n in 1..=3 {
            assert!(differential(&module, &Cochain::zero(Q, n, 2, 2)).unwrap().is_zero());
        }
    }

    #[test]
    fn abelian_differentials_vanish() {
        let module = Bimodule::regular(Arc::new(ZinbielAlgebra::abelian(Q, 2)));
        for n in 1..=3 {
            let mut phi = Cochain::zero(Q, n, 2, 2);
            for (k, c) in tuples(2, n).enumerate() {
                phi.value_mut(&c)[k % 2] = Q.from_i64(k as i64 + 1);
            }
            assert!(differential(&module, &phi).unwrap().is_zero());
        }
    }

    #[test]
    fn product_is_a_cocycle() {
        let r = square_zero_line();
        let module = Bimodule::regular(r.clone());
        assert!(differential(&module, &Cochain::product(&r)).unwrap().is_zero());
    }

    #[test]
    fn arity_out_of_range() {
        let module = Bimodule::regular(square_zero_line());
        assert_eq!(
            differential(&module, &Cochain::zero(Q, 4, 2, 2)),
            Err(CohomologyError::ArityOutOfRange(4))
        );
    }
}
