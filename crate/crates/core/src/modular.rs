//! Exact linear algebra over ℚ through reduction modulo word-sized primes.
//!
//! Candidate answers are assembled with the Chinese remainder theorem and
//! rational reconstruction, then checked exactly over ℚ before they are
//! returned. An unlucky prime can only cost time, never correctness:
//!
//! - `rank_p(A) ≤ rank_ℚ(A)` for an integer matrix, so a prime rank is a
//!   certified lower bound;
//! - `n − r` independent vectors verified to lie in the kernel certify
//!   `rank_ℚ(A) ≤ r`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An integer matrix stored by rows.
pub(crate) struct IntMatrix {
    rows: Vec<Vec<BigInt>>,
    cols: usize,
}

impl IntMatrix {
    /// Clears denominators row by row; returns the matrix and the row scale factors.
    pub(crate) fn from_rational_rows(rows: &[Vec<&BigRational>], cols: usize) -> (Self, Vec<BigInt>) {
        let mut scales = Vec::with_capacity(rows.len());
        let ints = rows
            .iter()
            .map(|row| {
                let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                debug_assert_eq!(row.len(), cols);
                let ints = row.iter().map(|x| x.numer() * (&l / x.denom())).collect();
                scales.push(l);
                ints
            })
            .collect();
        (IntMatrix { rows: ints, cols }, scales)
    }

    /// Removes and returns the last column.
    pub(crate) fn split_last_column(&mut self) -> Vec<BigInt> {
        self.cols -= 1;
        self.rows.iter_mut().map(|r| r.pop().expect("nonempty row")).collect()
    }

    fn reduce_mod(&self, p: u64, extra: &[Vec<BigInt>]) -> Vec<Vec<u64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut out: Vec<u64> = row.iter().map(|x| residue(x, p)).collect();
                out.extend(extra.iter().map(|col| residue(&col[r], p)));
                out
            })
            .collect()
    }

    /// Whether `A · v = target` exactly, for a rational `v` and integer `target`
    /// given up to the common factor of `v`'s denominators.
    fn maps_to(&self, v: &[BigRational], target: Option<&[BigInt]>) -> bool {
        let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let w: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
        self.rows.iter().enumerate().all(|(r, row)| {
            let mut acc = BigInt::zero();
            for (a, x) in row.iter().zip(&w) {
                if !a.is_zero() && !x.is_zero() {
                    acc += a * x;
                }
            }
            match target {
                None => acc.is_zero(),
                Some(b) => acc == &b[r] * &l,
            }
        })
    }
}

fn residue(x: &BigInt, p: u64) -> u64 {
    match x.to_i64() {
        Some(s) => s.rem_euclid(p as i64) as u64,
        None => x.mod_floor(&BigInt::from(p)).to_u64().expect("reduced below p"),
    }
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for `n < 2³²`.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2, 3, 5, 7, 11, 13] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2, 7, 61] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes below `2³²`, largest first, so products of residues fit in a `u64`.
fn primes() -> impl Iterator<Item = u64> {
    (1u64 << 31..1u64 << 32).rev().filter(|&n| is_prime(n))
}

/// Reduced row echelon form mod `p`, pivots restricted to the first `ncols` columns.
fn rref_mod(mut rows: Vec<Vec<u64>>, ncols: usize, p: u64) -> (Vec<Vec<u64>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..ncols {
        if next == rows.len() {
            break;
        }
        let Some(found) = (next..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(next, found);
        let inv = pow_mod(rows[next][col], p - 2, p);
        for x in rows[next][col..].iter_mut() {
            if *x != 0 {
                *x = *x * inv % p;
            }
        }
        let support: Vec<usize> = (col..rows[next].len()).filter(|&c| rows[next][c] != 0).collect();
        let pivot_row = std::mem::take(&mut rows[next]);
        for row in rows.iter_mut() {
            if row.is_empty() || row[col] == 0 {
                continue;
            }
            let factor = p - row[col];
            for &c in &support {
                row[c] = (row[c] + factor * pivot_row[c] % p) % p;
            }
        }
        rows[next] = pivot_row;
        pivots.push(col);
        next += 1;
    }
    (rows, pivots)
}

/// `u mod m` as a fraction `a/b` with `|a|, b ≤ √(m/2)`, if one exists.
fn rational_reconstruct(u: &BigInt, m: &BigInt) -> Option<BigRational> {
    if u.is_zero() {
        return Some(BigRational::zero());
    }
    let bound = (m / 2u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), u.clone());
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound || !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

/// Residues combined across primes.
struct Crt {
    modulus: BigInt,
    values: Vec<BigInt>,
}

impl Crt {
    fn new(residues: Vec<u64>, p: u64) -> Self {
        Crt {
            modulus: BigInt::from(p),
            values: residues.into_iter().map(BigInt::from).collect(),
        }
    }

    fn absorb(&mut self, residues: &[u64], p: u64) {
        let m_inv = pow_mod(residue(&self.modulus, p), p - 2, p);
        for (x, &r) in self.values.iter_mut().zip(residues) {
            let delta = mul_mod((r + p - residue(x, p)) % p, m_inv, p);
            if delta != 0 {
                *x += &self.modulus * delta;
            }
        }
        self.modulus *= p;
    }

    fn reconstruct(&self) -> Option<Vec<BigRational>> {
        self.values
            .iter()
            .map(|x| rational_reconstruct(x, &self.modulus))
            .collect()
    }
}

/// How a prime's pivot set compares with the best seen so far. Pivot sets
/// modulo `p` are independent over ℚ, so more pivots or a lexicographically
/// earlier set of the same size is closer to the true one.
fn improves(candidate: &[usize], best: &[usize]) -> std::cmp::Ordering {
    candidate
        .len()
        .cmp(&best.len())
        .then_with(|| best.cmp(candidate))
}

/// Rank and a kernel basis, one vector per non-pivot column.
pub(crate) struct Kernel {
    pub pivots: Vec<usize>,
    pub basis: Vec<Vec<BigRational>>,
}

fn kernel_from(pivots: &[usize], cols: usize, entries: &[BigRational]) -> Vec<Vec<BigRational>> {
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .enumerate()
        .map(|(k, &f)| {
            let mut v = vec![BigRational::zero(); cols];
            v[f] = BigRational::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -&entries[i * free.len() + k];
            }
            v
        })
        .collect()
}

fn free_entries(rows: &[Vec<u64>], pivots: &[usize], cols: usize) -> Vec<u64> {
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    pivots
        .iter()
        .enumerate()
        .flat_map(|(i, _)| free.iter().map(move |&f| rows[i][f]))
        .collect()
}

pub(crate) fn kernel(a: &IntMatrix) -> Kernel {
    let cols = a.cols;
    let mut best: Option<(Vec<usize>, Crt)> = None;
    let mut previous: Option<Vec<BigRational>> = None;
    for p in primes() {
        let (rows, pivots) = rref_mod(a.reduce_mod(p, &[]), cols, p);
        let residues = free_entries(&rows, &pivots, cols);
        match &mut best {
            Some((bp, crt)) => match improves(&pivots, bp) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Greater => {
                    best = Some((pivots, Crt::new(residues, p)));
                    previous = None;
                    continue;
                }
                std::cmp::Ordering::Equal => crt.absorb(&residues, p),
            },
            None => best = Some((pivots, Crt::new(residues, p))),
        }
        let (pivots, crt) = best.as_ref().expect("set above");
        let Some(entries) = crt.reconstruct() else {
            continue;
        };
        if previous.as_ref() == Some(&entries) {
            let basis = kernel_from(pivots, cols, &entries);
            if basis.iter().all(|v| a.maps_to(v, None)) {
                return Kernel {
                    pivots: pivots.clone(),
                    basis,
                };
            }
        }
        previous = Some(entries);
    }
    unreachable!("the supply of primes is exhausted")
}

/// Some `x` with `A x = b` and zeros off the pivot columns, or `None`.
pub(crate) fn solve(a: &IntMatrix, b: &[BigInt]) -> Option<Vec<BigRational>> {
    let cols = a.cols;
    let extra = [b.to_vec()];
    let mut certified_rank: Option<usize> = None;
    let mut best: Option<(Vec<usize>, Crt)> = None;
    let mut previous: Option<Vec<BigRational>> = None;
    for p in primes() {
        let (rows, pivots) = rref_mod(a.reduce_mod(p, &extra), cols, p);
        let consistent = rows[pivots.len()..].iter().all(|row| row[cols] == 0);
        if !consistent {
            // rank_ℚ[A|b] ≥ rank_p[A|b] > rank_p A; decisive once rank_p A is the true rank
            let rank = *certified_rank.get_or_insert_with(|| kernel(a).pivots.len());
            if rank == pivots.len() {
                return None;
            }
            continue;
        }
        let residues: Vec<u64> = (0..pivots.len()).map(|i| rows[i][cols]).collect();
        match &mut best {
            Some((bp, crt)) => match improves(&pivots, bp) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Greater => {
                    best = Some((pivots, Crt::new(residues, p)));
                    previous = None;
                    continue;
                }
                std::cmp::Ordering::Equal => crt.absorb(&residues, p),
            },
            None => best = Some((pivots, Crt::new(residues, p))),
        }
        let (pivots, crt) = best.as_ref().expect("set above");
        let Some(values) = crt.reconstruct() else {
            continue;
        };
        if previous.as_ref() == Some(&values) {
            let mut x = vec![BigRational::zero(); cols];
            for (&c, v) in pivots.iter().zip(&values) {
                x[c] = v.clone();
            }
            if a.maps_to(&x, Some(b)) {
                return Some(x);
            }
        }
        previous = Some(values);
    }
    unreachable!("the supply of primes is exhausted")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn primes_are_prime() {
        let ps: Vec<u64> = primes().take(3).collect();
        assert_eq!(ps[0], 4294967291);
        for p in ps {
            assert!((2..70000u64).all(|d| p % d != 0));
        }
        assert!(!is_prime(4294967297));
    }

    #[test]
    fn reconstruction_recovers_small_fractions() {
        let m = BigInt::from(4294967291u64) * BigInt::from(4294967279u64);
        for (n, d) in [(3, 7), (-5, 12), (0, 1), (123456, 654321)] {
            let x = q(n, d);
            let u = (x.numer() * x.denom().modinv(&m).unwrap()).mod_floor(&m);
            assert_eq!(rational_reconstruct(&u, &m), Some(x));
        }
    }

    #[test]
    fn kernel_and_solve_on_a_small_system() {
        let rows = [vec![q(1, 2), q(1, 3), q(1, 1)], vec![q(1, 1), q(2, 3), q(2, 1)]];
        let refs: Vec<Vec<&BigRational>> = rows.iter().map(|r| r.iter().collect()).collect();
        let (a, scales) = IntMatrix::from_rational_rows(&refs, 3);
        let k = kernel(&a);
        assert_eq!(k.pivots, vec![0]);
        assert_eq!(k.basis.len(), 2);
        assert_eq!(k.basis[0], vec![q(-2, 3), q(1, 1), q(0, 1)]);
        let b: Vec<BigInt> = [1, 2].iter().zip(&scales).map(|(x, s)| BigInt::from(*x) * s).collect();
        assert_eq!(solve(&a, &b), Some(vec![q(2, 1), q(0, 1), q(0, 1)]));
        let bad: Vec<BigInt> = [1, 3].iter().zip(&scales).map(|(x, s)| BigInt::from(*x) * s).collect();
        assert_eq!(solve(&a, &bad), None);
    }
}
