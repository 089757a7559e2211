//! Formal isomorphisms `Φ_t = Σ (φ_{R,i}; φ_{S,i}) tⁱ` with identity constant
//! term, their truncated inverses, and the conjugation action on deformations.

use crate::cohomology::{Cochain, TripleCochain};
use crate::field::Field;

use super::{check_deformation, DeformationError, TruncatedDeformation};

/// A truncated formal isomorphism; terms past `order` are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormalIsomorphism {
    terms: Vec<TripleCochain>,
}

impl FormalIsomorphism {
    /// Builds from degree-1 pairs `(φ_{R,i}; φ_{S,i})`, `i = 0..=order`.
    pub fn new(terms: Vec<TripleCochain>) -> Result<Self, DeformationError> {
        let Some(first) = terms.first() else {
            return Err(DeformationError::NonIdentityConstant);
        };
        let (field, d, s) = (first.field(), first.source_dim(), first.target_dim());
        for (order, t) in terms.iter().enumerate() {
            if t.degree() != 1 {
                return Err(DeformationError::IsomorphismDegree {
                    order,
                    degree: t.degree(),
                });
            }
            if t.field() != field || t.source_dim() != d || t.target_dim() != s {
                return Err(crate::cohomology::CohomologyError::TripleShape.into());
            }
        }
        if first.xi != Cochain::identity(field, d) || first.pi != Cochain::identity(field, s) {
            return Err(DeformationError::NonIdentityConstant);
        }
        Ok(FormalIsomorphism { terms })
    }

    fn identity_pair(field: Field, d: usize, s: usize) -> TripleCochain {
        TripleCochain::pair(Cochain::identity(field, d), Cochain::identity(field, s)).expect("identity pair")
    }

    pub fn identity(field: Field, source_dim: usize, target_dim: usize) -> Self {
        FormalIsomorphism {
            terms: vec![Self::identity_pair(field, source_dim, target_dim)],
        }
    }

    /// `Id + φ t^l`.
    pub fn monomial(l: usize, phi: TripleCochain) -> Result<Self, DeformationError> {
        if phi.degree() != 1 {
            return Err(DeformationError::IsomorphismDegree {
                order: l,
                degree: phi.degree(),
            });
        }
        if l == 0 {
            return Err(DeformationError::NonIdentityConstant);
        }
        let (field, d, s) = (phi.field(), phi.source_dim(), phi.target_dim());
        let mut terms = vec![Self::identity_pair(field, d, s)];
        terms.extend((1..l).map(|_| TripleCochain::zero(field, 1, d, s)));
        terms.push(phi);
        Ok(FormalIsomorphism { terms })
    }

    pub fn field(&self) -> Field {
        self.terms[0].field()
    }

    pub fn source_dim(&self) -> usize {
        self.terms[0].source_dim()
    }

    pub fn target_dim(&self) -> usize {
        self.terms[0].target_dim()
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[TripleCochain] {
        &self.terms
    }

    /// `(φ_{R,i}; φ_{S,i})`, zero beyond the stored order.
    pub fn term(&self, i: usize) -> TripleCochain {
        self.terms
            .get(i)
            .cloned()
            .unwrap_or_else(|| TripleCochain::zero(self.field(), 1, self.source_dim(), self.target_dim()))
    }

    fn padded(&self, order: usize) -> Vec<TripleCochain> {
        (0..=order).map(|i| self.term(i)).collect()
    }

    /// `self ∘ other` modulo `t^{order+1}`, componentwise on `R` and `S`.
    pub fn compose_truncated(&self, other: &FormalIsomorphism, order: usize) -> FormalIsomorphism {
        let a = self.padded(order);
        let b = other.padded(order);
        let terms = (0..=order)
            .map(|n| {
                let mut xi = b[n].xi.then(&a[0].xi);
                let mut pi = b[n].pi.then(&a[0].pi);
                for i in 1..=n {
                    xi.add_assign(&b[n - i].xi.then(&a[i].xi));
                    pi.add_assign(&b[n - i].pi.then(&a[i].pi));
                }
                TripleCochain::pair(xi, pi).expect("pair")
            })
            .collect();
        FormalIsomorphism { terms }
    }

    /// `Ψ` with `Φ Ψ = Id` modulo `t^{order+1}`: `ψ₀ = Id`, `ψₙ = −Σ_{i=1}^{n} φᵢ ψ_{n−i}`.
    pub fn invert_truncated(&self, order: usize) -> FormalIsomorphism {
        let phi = self.padded(order);
        let mut psi: Vec<TripleCochain> = vec![phi[0].clone()];
        for n in 1..=order {
            let mut xi = Cochain::zero(self.field(), 1, self.source_dim(), self.source_dim());
            let mut pi = Cochain::zero(self.field(), 1, self.target_dim(), self.target_dim());
            for i in 1..=n {
                xi.sub_assign(&psi[n - i].xi.then(&phi[i].xi));
                pi.sub_assign(&psi[n - i].pi.then(&phi[i].pi));
            }
            psi.push(TripleCochain::pair(xi, pi).expect("pair"));
        }
        FormalIsomorphism { terms: psi }
    }

    /// Whether all terms past the constant one vanish.
    pub fn is_identity(&self) -> bool {
        self.terms[1..].iter().all(TripleCochain::is_zero)
    }
}

/// `Σ_{a+b+c+e=n} φ_a ∘ m_b(ψ_c ·, ψ_e ·)` for every `n ≤ order`.
fn conjugate_products(m: &[&Cochain], phi: &[&Cochain], psi: &[&Cochain], order: usize) -> Vec<Cochain> {
    // g[k] = Σ_{b+c+e=k} m_b(ψ_c, ψ_e)
    let g: Vec<Cochain> = (0..=order)
        .map(|k| {
            let mut acc = Cochain::zero(m[0].field(), 2, m[0].source_dim(), m[0].target_dim());
            for b in 0..=k {
                for c in 0..=k - b {
                    acc.add_assign(&m[b].precompose(&[psi[c], psi[k - b - c]]));
                }
            }
            acc
        })
        .collect();
    (0..=order)
        .map(|n| {
            let mut acc = g[n].then(phi[0]);
            for a in 1..=n {
                acc.add_assign(&g[n - a].then(phi[a]));
            }
            acc
        })
        .collect()
}

fn component(v: &[TripleCochain], which: fn(&TripleCochain) -> &Cochain) -> Vec<&Cochain> {
    v.iter().map(which).collect()
}

/// `Φ Θ Φ⁻¹` truncated at the order of `theta`; `Φ` is zero-padded as needed
/// and the result is validated afresh.
pub fn conjugate(
    theta: &TruncatedDeformation,
    iso: &FormalIsomorphism,
) -> Result<TruncatedDeformation, DeformationError> {
    let complex = theta.complex();
    if iso.field() != complex.morphism().field()
        || iso.source_dim() != complex.source_dim()
        || iso.target_dim() != complex.target_dim()
    {
        return Err(crate::cohomology::CohomologyError::TripleShape.into());
    }
    let n = theta.order();
    let phi = iso.padded(n);
    let psi = iso.invert_truncated(n).terms;
    let terms = theta.terms();

    let (m_r, m_s, f) = (
        component(terms, |t| &t.xi),
        component(terms, |t| &t.pi),
        component(terms, |t| &t.phi),
    );
    let (phi_r, phi_s) = (component(&phi, |t| &t.xi), component(&phi, |t| &t.pi));
    let (psi_r, psi_s) = (component(&psi, |t| &t.xi), component(&psi, |t| &t.pi));

    let new_r = conjugate_products(&m_r, &phi_r, &psi_r, n);
    let new_s = conjugate_products(&m_s, &phi_s, &psi_s, n);
    // F̄_n = Σ_{a+b+c=n} φ_{S,a} f_b ψ_{R,c}
    #[allow(clippy::needless_range_loop)]
    let new_f: Vec<Cochain> = (0..=n)
        .map(|k| {
            let mut acc = Cochain::zero(complex.morphism().field(), 1, complex.source_dim(), complex.target_dim());
            for a in 0..=k {
                for b in 0..=k - a {
                    let c = k - a - b;
                    acc.add_assign(&psi_r[c].then(f[b]).then(phi_s[a]));
                }
            }
            acc
        })
        .collect();

    let out = new_r
        .into_iter()
        .zip(new_s)
        .zip(new_f)
        .map(|((xi, pi), phi)| TripleCochain::new(xi, pi, phi))
        .collect::<Result<Vec<_>, _>>()?;
    check_deformation(complex, out)
}

/// Both sides of `θ₁ − θ̄₁ = d¹_f(φ_{R,1}; φ_{S,1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceCertificate {
    pub difference: TripleCochain,
    pub coboundary: TripleCochain,
}

impl DifferenceCertificate {
    pub fn holds(&self) -> bool {
        self.difference == self.coboundary
    }
}

/// Compares the change of infinitesimal under `iso` with the coboundary of
/// its linear term; `theta_bar` is expected to be `conjugate(theta, iso)`.
pub fn infinitesimal_difference_is_coboundary(
    theta: &TruncatedDeformation,
    theta_bar: &TruncatedDeformation,
    iso: &FormalIsomorphism,
) -> Result<DifferenceCertificate, DeformationError> {
    for t in [theta, theta_bar] {
        if t.order() < 1 {
            return Err(DeformationError::OrderTooLow {
                needed: 1,
                actual: t.order(),
            });
        }
    }
    let difference = theta.term(1).sub(theta_bar.term(1));
    let coboundary = theta.complex().differential(&iso.term(1))?;
    Ok(DifferenceCertificate { difference, coboundary })
}

#[cfg(test)]
mod tests {
    use super::super::tests::*;
    use super::*;
    use crate::algebra::AlgebraMorphism;
    use crate::field::Field;

    fn random_pair(field: Field, d: usize, s: usize, seed: i64) -> TripleCochain {
        let mut k = seed;
        let mut next = || {
            k = (k * 37 + 11) % 13;
            field.from_i64(k - 6)
        };
        let xi = Cochain::from_coeffs(field, 1, d, d, (0..d * d).map(|_| next()).collect()).unwrap();
        let pi = Cochain::from_coeffs(field, 1, s, s, (0..s * s).map(|_| next()).collect()).unwrap();
        TripleCochain::pair(xi, pi).unwrap()
    }

    #[test]
    fn identity_inverse_and_order_zero() {
        let id = FormalIsomorphism::identity(Q, 2, 1);
        assert_eq!(id.invert_truncated(3).terms().len(), 4);
        assert!(id.invert_truncated(3).is_identity());
        let phi = FormalIsomorphism::monomial(1, random_pair(Q, 2, 1, 3)).unwrap();
        let inv0 = phi.invert_truncated(0);
        assert_eq!(inv0, FormalIsomorphism::identity(Q, 2, 1));
    }

    #[test]
    fn geometric_series_inverse() {
        let p = random_pair(Q, 2, 2, 5);
        let phi = FormalIsomorphism::monomial(1, p.clone()).unwrap();
        let psi = phi.invert_truncated(4);
        // ψ_n = (−φ)^n
        let mut power = TripleCochain::pair(Cochain::identity(Q, 2), Cochain::identity(Q, 2)).unwrap();
        for n in 1..=4 {
            let xi = power.xi.then(&p.xi).scale(&Q.from_i64(-1));
            let pi = power.pi.then(&p.pi).scale(&Q.from_i64(-1));
            power = TripleCochain::pair(xi, pi).unwrap();
            assert_eq!(psi.term(n), power, "order {n}");
        }
        assert!(phi.compose_truncated(&psi, 4).is_identity());
        assert!(psi.compose_truncated(&phi, 4).is_identity());
    }

    #[test]
    fn non_identity_constant_is_rejected() {
        let p = random_pair(Q, 1, 1, 2);
        assert_eq!(
            FormalIsomorphism::new(vec![p]).unwrap_err(),
            DeformationError::NonIdentityConstant
        );
    }

    #[test]
    fn conjugation_by_identity_is_a_no_op() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        let theta = TruncatedDeformation::trivial(&c, 2);
        let out = conjugate(&theta, &FormalIsomorphism::identity(Q, 2, 2)).unwrap();
        assert_eq!(out, theta);
    }

    #[test]
    fn linear_term_of_conjugated_morphism() {
        let line = abelian(Q, 1);
        let c = complex(AlgebraMorphism::identity(line));
        let f1 = Cochain::from_coeffs(Q, 1, 1, 1, vec![Q.from_i64(2)]).unwrap();
        let theta1 = TripleCochain::new(mu(Q), mu(Q), f1.clone()).unwrap();
        let theta = check_deformation(&c, vec![c.base_point(), theta1]).unwrap();
        let p = TripleCochain::pair(
            Cochain::from_coeffs(Q, 1, 1, 1, vec![Q.from_i64(3)]).unwrap(),
            Cochain::from_coeffs(Q, 1, 1, 1, vec![Q.from_i64(7)]).unwrap(),
        )
        .unwrap();
        let iso = FormalIsomorphism::monomial(1, p).unwrap();
        let bar = conjugate(&theta, &iso).unwrap();
        // abelian, f = Id: f̄₁ = f₁ + φ_S − φ_R = 2 + 7 − 3
        assert_eq!(bar.term(1).phi.coeffs(), &[Q.from_i64(6)]);
        let cert = infinitesimal_difference_is_coboundary(&theta, &bar, &iso).unwrap();
        assert!(cert.holds());
    }

    #[test]
    fn conjugation_round_trip() {
        let c = complex(AlgebraMorphism::identity(square_zero_line(Q)));
        let theta = TruncatedDeformation::trivial(&c, 3);
        let iso = FormalIsomorphism::new(vec![
            FormalIsomorphism::identity(Q, 2, 2).term(0),
            random_pair(Q, 2, 2, 1),
            random_pair(Q, 2, 2, 4),
        ])
        .unwrap();
        let bar = conjugate(&theta, &iso).unwrap();
        assert!(!bar.is_trivial());
        let back = conjugate(&bar, &iso.invert_truncated(3)).unwrap();
        assert_eq!(back, theta);
        let cert = infinitesimal_difference_is_coboundary(&theta, &bar, &iso).unwrap();
        assert!(cert.holds());
    }
}
