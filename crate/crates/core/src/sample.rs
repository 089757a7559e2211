//! Seeded random algebras, morphisms, cochains and deformations.
//!
//! Everything here is driven by a caller-supplied RNG, so a seed reproduces
//! an instance exactly. Randomly generated structures are always passed
//! through the validators; searches that fail fall back to a known-valid
//! construction rather than returning something unchecked.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraMorphism, ZinbielAlgebra};
use crate::cohomology::{cochain_space_dim, Cochain, CochainComplex, CohomologyError, MorphismComplex, TripleCochain};
use crate::deformation::{
    check_deformation, conjugate, extend_one_order, DeformationError, Extension, FormalIsomorphism,
    TruncatedDeformation,
};
use crate::field::{Field, FieldElement};
use crate::matrix::Matrix;

/// The fields exercised by the property suites.
pub fn standard_fields() -> [Field; 4] {
    [
        Field::Rationals,
        Field::Prime(5),
        Field::Prime(7),
        Field::Prime(101),
    ]
}

/// Uniform over `𝔽_p`; small integers and simple fractions over `ℚ`.
pub fn random_scalar<R: Rng>(rng: &mut R, field: Field) -> FieldElement {
    match field {
        Field::Prime(p) => field.from_i64(rng.random_range(0..p) as i64),
        Field::Rationals => {
            let n = field.from_i64(rng.random_range(-3..=3));
            if rng.random_bool(0.2) {
                n.div(&field.from_i64(rng.random_range(2..=3)))
            } else {
                n
            }
        }
    }
}

fn random_nonzero<R: Rng>(rng: &mut R, field: Field) -> FieldElement {
    loop {
        let x = random_scalar(rng, field);
        if !x.is_zero() {
            return x;
        }
    }
}

/// A random cochain whose coefficients are nonzero with probability `density`.
pub fn random_cochain<R: Rng>(
    rng: &mut R,
    field: Field,
    arity: usize,
    source_dim: usize,
    target_dim: usize,
    density: f64,
) -> Cochain {
    let n = cochain_space_dim(arity, source_dim, target_dim);
    let coeffs = (0..n)
        .map(|_| {
            if rng.random_bool(density) {
                random_nonzero(rng, field)
            } else {
                field.zero()
            }
        })
        .collect();
    Cochain::from_coeffs(field, arity, source_dim, target_dim, coeffs).expect("sized above")
}

/// A random element of `Cⁿ(f, f)`.
pub fn random_triple<R: Rng>(rng: &mut R, complex: &MorphismComplex, degree: usize, density: f64) -> TripleCochain {
    let field = complex.morphism().field();
    let (d, s) = (complex.source_dim(), complex.target_dim());
    TripleCochain::new(
        random_cochain(rng, field, degree, d, d, density),
        random_cochain(rng, field, degree, s, s, density),
        random_cochain(rng, field, degree - 1, d, s, density),
    )
    .expect("shapes agree")
}

/// A random formal isomorphism with `order` nonconstant terms.
pub fn random_isomorphism<R: Rng>(rng: &mut R, complex: &MorphismComplex, order: usize) -> FormalIsomorphism {
    let mut terms = FormalIsomorphism::identity(complex.morphism().field(), complex.source_dim(), complex.target_dim())
        .terms()
        .to_vec();
    terms.extend((0..order).map(|_| random_triple(rng, complex, 1, 0.5)));
    FormalIsomorphism::new(terms).expect("identity constant term")
}

/// A basis of the 2-cocycles `ker d²_f`.
pub fn cocycle_basis(complex: &MorphismComplex) -> Result<Vec<TripleCochain>, CohomologyError> {
    let kernel = complex.differential_matrix(2)?.rank_nullspace().nullspace;
    kernel.iter().map(|v| complex.unflatten(2, v)).collect()
}

/// A random combination of `basis`, or zero in degree 2 when it is empty.
pub fn random_combination<R: Rng>(rng: &mut R, complex: &MorphismComplex, basis: &[TripleCochain]) -> TripleCochain {
    let field = complex.morphism().field();
    basis.iter().fold(complex.zero(2), |acc, b| acc.add(&b.scale(&random_scalar(rng, field))))
}

/// A random valid order-`order` deformation.
///
/// Starts from a random cocycle, extends one order at a time adding a random
/// cocycle to each new term, and finally conjugates by a random formal
/// isomorphism. When every attempt runs into an obstruction, the conjugate of
/// the trivial deformation is used instead.
pub fn random_deformation<R: Rng>(
    rng: &mut R,
    complex: &Arc<MorphismComplex>,
    cocycles: &[TripleCochain],
    order: usize,
) -> Result<TruncatedDeformation, DeformationError> {
    let mut found = None;
    'attempt: for _ in 0..6 {
        let theta1 = random_combination(rng, complex, cocycles);
        let mut theta = check_deformation(complex, vec![complex.base_point(), theta1])?.truncate(order);
        while theta.order() < order {
            match extend_one_order(&theta)? {
                Extension::Extended { deformation, .. } => {
                    let mut terms = deformation.into_terms();
                    let last = terms.len() - 1;
                    terms[last] = terms[last].add(&random_combination(rng, complex, cocycles));
                    theta = check_deformation(complex, terms)?;
                }
                Extension::Obstructed { .. } => continue 'attempt,
            }
        }
        found = Some(theta);
        break;
    }
    let theta = found.unwrap_or_else(|| TruncatedDeformation::trivial(complex, order));
    let iso = random_isomorphism(rng, complex, order);
    conjugate(&theta, &iso)
}

/// `e_a · e_b = a/(a+b) e_{a+b}` for `a + b ≤ dim`, the augmentation ideal of
/// the divided-power style algebra truncated at degree `dim`.
pub fn truncated_polynomial(field: Field, dim: usize) -> Option<ZinbielAlgebra> {
    let mut gamma = vec![field.zero(); dim * dim * dim];
    for a in 1..=dim {
        for b in 1..=dim - a {
            let denom = field.from_i64((a + b) as i64);
            if denom.is_zero() {
                return None;
            }
            let c = field.from_i64(a as i64).div(&denom);
            gamma[((a - 1) * dim + (b - 1)) * dim + (a + b - 1)] = c;
        }
    }
    ZinbielAlgebra::new(field, dim, gamma).ok()
}

/// Products of the first `u` basis vectors land in the span of the others;
/// everything else vanishes. Always Zinbiel.
pub fn two_step<R: Rng>(rng: &mut R, field: Field, dim: usize, u: usize) -> ZinbielAlgebra {
    let mut gamma = vec![field.zero(); dim * dim * dim];
    for i in 0..u {
        for j in 0..u {
            for k in u..dim {
                if rng.random_bool(0.5) {
                    gamma[(i * dim + j) * dim + k] = random_scalar(rng, field);
                }
            }
        }
    }
    ZinbielAlgebra::new(field, dim, gamma).expect("two-step nilpotent products are Zinbiel")
}

/// Sparse random structure constants, kept only if they satisfy the identity.
pub fn search_algebra<R: Rng>(rng: &mut R, field: Field, dim: usize, attempts: usize) -> Option<ZinbielAlgebra> {
    if dim == 0 {
        return Some(ZinbielAlgebra::abelian(field, 0));
    }
    for _ in 0..attempts {
        let mut gamma = vec![field.zero(); dim * dim * dim];
        for _ in 0..rng.random_range(1..=3) {
            let at = rng.random_range(0..gamma.len());
            gamma[at] = random_nonzero(rng, field);
        }
        if let Ok(a) = ZinbielAlgebra::new(field, dim, gamma) {
            if !a.is_abelian() {
                return Some(a);
            }
        }
    }
    None
}

/// A random invertible matrix.
pub fn random_invertible<R: Rng>(rng: &mut R, field: Field, n: usize) -> Matrix {
    loop {
        let rows = (0..n).map(|_| (0..n).map(|_| random_scalar(rng, field)).collect()).collect();
        let m = Matrix::from_rows(field, n, rows).expect("square");
        if m.rank() == n {
            return m;
        }
    }
}

/// The algebra with product `g m(g⁻¹x, g⁻¹y)` and the isomorphism `g` onto it.
pub fn transport(algebra: &Arc<ZinbielAlgebra>, g: &Matrix) -> AlgebraMorphism {
    let ginv = g.inverse().expect("transport needs an invertible matrix");
    let m = Cochain::product(algebra)
        .precompose_all(&Cochain::from_matrix(&ginv))
        .then(&Cochain::from_matrix(g));
    let image = ZinbielAlgebra::new(algebra.field(), algebra.dim(), m.into_coeffs())
        .expect("isomorphic copy of a Zinbiel algebra");
    AlgebraMorphism::new(Arc::clone(algebra), Arc::new(image), g.clone()).expect("g is an isomorphism")
}

/// `A ⊕ B` with componentwise product.
pub fn direct_sum(a: &ZinbielAlgebra, b: &ZinbielAlgebra) -> ZinbielAlgebra {
    let field = a.field();
    let (da, db) = (a.dim(), b.dim());
    let n = da + db;
    let mut gamma = vec![field.zero(); n * n * n];
    for (alg, off) in [(a, 0), (b, da)] {
        let d = alg.dim();
        for i in 0..d {
            for j in 0..d {
                for (k, c) in alg.basis_product(i, j).iter().enumerate() {
                    gamma[((i + off) * n + j + off) * n + k + off] = c.clone();
                }
            }
        }
    }
    ZinbielAlgebra::new(field, n, gamma).expect("direct sums of Zinbiel algebras are Zinbiel")
}

/// A random valid algebra of the given dimension.
pub fn random_algebra<R: Rng>(rng: &mut R, field: Field, dim: usize) -> (String, ZinbielAlgebra) {
    let kind = rng.random_range(0..5);
    let fallback = |what: &str| (format!("abelian{dim} (no {what})"), ZinbielAlgebra::abelian(field, dim));
    match kind {
        0 => (format!("abelian{dim}"), ZinbielAlgebra::abelian(field, dim)),
        1 => match truncated_polynomial(field, dim) {
            Some(a) => (format!("trunc{dim}"), a),
            None => fallback("truncation"),
        },
        2 if dim >= 2 => {
            let u = rng.random_range(1..dim);
            (format!("two-step{dim}/{u}"), two_step(rng, field, dim, u))
        }
        3 => match search_algebra(rng, field, dim, 40) {
            Some(a) => (format!("search{dim}"), a),
            None => fallback("search hit"),
        },
        _ => match truncated_polynomial(field, dim) {
            Some(a) if dim > 0 => {
                let g = random_invertible(rng, field, dim);
                let f = transport(&Arc::new(a), &g);
                (format!("trunc{dim}^g"), (**f.target()).clone())
            }
            _ => (format!("abelian{dim}"), ZinbielAlgebra::abelian(field, dim)),
        },
    }
}

/// A random morphism, tagged with how it was built.
#[derive(Debug, Clone)]
pub struct Instance {
    pub label: String,
    pub morphism: AlgebraMorphism,
}

fn random_matrix<R: Rng>(rng: &mut R, field: Field, rows: usize, cols: usize, density: f64) -> Matrix {
    let entries = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random_bool(density) {
                        random_nonzero(rng, field)
                    } else {
                        field.zero()
                    }
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(field, cols, entries).expect("sized above")
}

/// A random valid morphism `R → S` with the given dimensions.
pub fn random_morphism<R: Rng>(rng: &mut R, field: Field, source_dim: usize, target_dim: usize) -> Instance {
    let (rl, r) = random_algebra(rng, field, source_dim);
    let r = Arc::new(r);
    let choice = rng.random_range(0..4);
    if choice == 0 && source_dim == target_dim {
        if rng.random_bool(0.5) || source_dim == 0 {
            return Instance {
                label: format!("id({rl})"),
                morphism: AlgebraMorphism::identity(r),
            };
        }
        let g = random_invertible(rng, field, source_dim);
        return Instance {
            label: format!("iso({rl})"),
            morphism: transport(&r, &g),
        };
    }
    let (sl, s) = random_algebra(rng, field, target_dim);
    let s = Arc::new(s);
    if choice <= 1 {
        return Instance {
            label: format!("zero({rl} -> {sl})"),
            morphism: AlgebraMorphism::zero(r, s).expect("same field"),
        };
    }
    for _ in 0..60 {
        let m = random_matrix(rng, field, target_dim, source_dim, 0.5);
        if let Ok(f) = AlgebraMorphism::new(Arc::clone(&r), Arc::clone(&s), m) {
            if !f.matrix().is_zero() || source_dim == 0 || target_dim == 0 {
                return Instance {
                    label: format!("search({rl} -> {sl})"),
                    morphism: f,
                };
            }
        }
    }
    Instance {
        label: format!("zero({rl} -> {sl}, search failed)"),
        morphism: AlgebraMorphism::zero(r, s).expect("same field"),
    }
}

fn square_zero_line(field: Field) -> ZinbielAlgebra {
    let mut gamma = vec![field.zero(); 8];
    gamma[1] = field.one();
    ZinbielAlgebra::new(field, 2, gamma).expect("e1·e1 = e2 is Zinbiel")
}

/// Hand-picked morphisms over `field`.
pub fn curated_instances(field: Field) -> Vec<Instance> {
    let line = Arc::new(ZinbielAlgebra::abelian(field, 1));
    let empty = Arc::new(ZinbielAlgebra::abelian(field, 0));
    let sq = Arc::new(square_zero_line(field));
    let mut out = vec![
        Instance {
            label: "id(abelian0)".into(),
            morphism: AlgebraMorphism::identity(Arc::clone(&empty)),
        },
        Instance {
            label: "id(abelian1)".into(),
            morphism: AlgebraMorphism::identity(Arc::clone(&line)),
        },
        Instance {
            label: "zero(abelian1 -> abelian1)".into(),
            morphism: AlgebraMorphism::zero(Arc::clone(&line), Arc::clone(&line)).expect("same field"),
        },
        Instance {
            label: "id(e1e1=e2)".into(),
            morphism: AlgebraMorphism::identity(Arc::clone(&sq)),
        },
        Instance {
            label: "zero(abelian0 -> e1e1=e2)".into(),
            morphism: AlgebraMorphism::zero(empty, Arc::clone(&sq)).expect("same field"),
        },
    ];
    if let (Some(t3), Some(t2)) = (truncated_polynomial(field, 3), truncated_polynomial(field, 2)) {
        let (t3, t2) = (Arc::new(t3), Arc::new(t2));
        let quotient = Matrix::from_i64(field, &[&[1, 0, 0], &[0, 1, 0]]);
        out.push(Instance {
            label: "quotient(trunc3 -> trunc2)".into(),
            morphism: AlgebraMorphism::new(Arc::clone(&t3), t2, quotient).expect("quotient by e3"),
        });
        out.push(Instance {
            label: "id(trunc3)".into(),
            morphism: AlgebraMorphism::identity(t3),
        });
    }
    let sum = Arc::new(direct_sum(&sq, &line));
    let projection = Matrix::from_i64(field, &[&[1, 0, 0], &[0, 1, 0]]);
    out.push(Instance {
        label: "projection(e1e1=e2 + abelian1 -> e1e1=e2)".into(),
        morphism: AlgebraMorphism::new(Arc::clone(&sum), Arc::clone(&sq), projection).expect("projection"),
    });
    let inclusion = Matrix::from_i64(field, &[&[1, 0], &[0, 1], &[0, 0]]);
    out.push(Instance {
        label: "inclusion(e1e1=e2 -> e1e1=e2 + abelian1)".into(),
        morphism: AlgebraMorphism::new(sq, sum, inclusion).expect("inclusion"),
    });
    out
}

/// `count` seeded instances cycling through [`standard_fields`] and source and
/// target dimensions `0..=3`, preceded by the curated ones for each field.
pub fn instance_suite(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Instance> = standard_fields().into_iter().flat_map(curated_instances).collect();
    let dims: Vec<(usize, usize)> = (0..=3).flat_map(|a| (0..=3).map(move |b| (a, b))).collect();
    let mut k = 0;
    while out.len() < count {
        let field = standard_fields()[k % 4];
        let &(d, s) = dims.choose(&mut rng).expect("nonempty");
        let mut inst = random_morphism(&mut rng, field, d, s);
        inst.label = format!("{} over {field}", inst.label);
        out.push(inst);
        k += 1;
    }
    out
}
