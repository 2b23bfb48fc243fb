//! Exact linear algebra over ℚ. Ranks and determinants go through fraction-free
//! (Bareiss) elimination on integer rows.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Q;

pub type Matrix = Vec<Vec<Q>>;

/// Clears denominators: returns an integer vector proportional to `v`.
pub fn integer_row(v: &[Q]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    v.iter().map(|x| x.numer() * (&l / x.denom())).collect()
}

fn primitive(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in v.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Fraction-free elimination in place; returns the rank.
fn bareiss(a: &mut [Vec<BigInt>], cols: usize) -> (usize, bool) {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    let mut swaps = false;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        if p != r {
            a.swap(p, r);
            swaps = !swaps;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let t = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = t / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    (r, swaps)
}

pub fn rank(m: &[Vec<Q>]) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| integer_row(r)).collect();
    bareiss(&mut a, cols).0
}

/// Rank of a family of vectors (treated as rows).
pub fn rank_of(vectors: &[Vec<Q>]) -> usize {
    rank(vectors)
}

pub fn determinant(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    if n == 0 {
        return Q::one();
    }
    assert!(m.iter().all(|r| r.len() == n), "determinant of a non-square matrix");
    let mut scale = BigInt::one();
    let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for row in m {
        let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        a.push(row.iter().map(|x| x.numer() * (&l / x.denom())).collect());
        scale *= l;
    }
    let (r, swaps) = bareiss(&mut a, n);
    if r < n {
        return Q::zero();
    }
    let d = a[n - 1][n - 1].clone();
    let d = if swaps { -d } else { d };
    Q::new(d, scale)
}

pub fn transpose(m: &[Vec<Q>]) -> Matrix {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn mat_mul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Matrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(Q::zero(), |acc, t| acc + &row[t] * &b[t][j]))
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| crate::rational::dot(row, v)).collect()
}

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

/// Reduced row echelon form over ℚ; returns (rref, pivot columns).
pub fn rref(m: &[Vec<Q>]) -> (Matrix, Vec<usize>) {
    let mut a: Matrix = m.to_vec();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(p, r);
        let inv = Q::one() / &a[r][c];
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in c..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Unique solution of a square system, or `None` when singular.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = a.len();
    let aug: Matrix = a.iter().zip(b).map(|(r, x)| r.iter().cloned().chain(std::iter::once(x.clone())).collect()).collect();
    let (red, piv) = rref(&aug);
    if piv.len() != n || piv.iter().any(|&c| c >= n) {
        return None;
    }
    Some(red.into_iter().map(|r| r[n].clone()).collect())
}

pub fn inverse(a: &[Vec<Q>]) -> Option<Matrix> {
    let n = a.len();
    let id = identity(n);
    let aug: Matrix = a.iter().zip(&id).map(|(r, e)| r.iter().chain(e).cloned().collect()).collect();
    let (red, piv) = rref(&aug);
    if piv.len() < n || piv[n - 1] >= n {
        return None;
    }
    Some(red.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of the right kernel {x : A x = 0}.
pub fn nullspace(a: &[Vec<Q>], cols: usize) -> Matrix {
    let (red, piv) = rref(a);
    let free: Vec<usize> = (0..cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); cols];
            x[f] = Q::one();
            for (r, &p) in piv.iter().enumerate() {
                x[p] = -red[r][f].clone();
            }
            x
        })
        .collect()
}

/// Incrementally maintained span of integer-scaled vectors, fraction-free.
#[derive(Clone, Debug, Default)]
pub struct EchelonBasis {
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[Q]) -> Vec<BigInt> {
        let mut w = integer_row(v);
        for (c, row) in &self.rows {
            if !w[*c].is_zero() {
                let f = w[*c].clone();
                let p = &row[*c];
                for (x, y) in w.iter_mut().zip(row) {
                    *x = &*x * p - &f * y;
                }
                primitive(&mut w);
            }
        }
        w
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` if it is independent of the current span; returns whether it was.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        let mut w = self.reduce(v);
        let Some(c) = w.iter().position(|x| !x.is_zero()) else { return false };
        primitive(&mut w);
        if w[c].is_negative() {
            for x in w.iter_mut() {
                *x = -&*x;
            }
        }
        self.rows.push((c, w));
        true
    }
}

/// Indices of a maximal independent subfamily, chosen greedily in order.
pub fn independent_subset(vectors: &[Vec<Q>]) -> Vec<usize> {
    let mut basis = EchelonBasis::new();
    vectors.iter().enumerate().filter(|(_, v)| basis.insert(v)).map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    #[test]
    fn determinant_small() {
        assert_eq!(determinant(&m(&[&[1, 2], &[3, 4]])), qi(-2));
        assert_eq!(determinant(&m(&[&[0, 1], &[1, 0]])), qi(-1));
        assert_eq!(determinant(&m(&[&[1, 2], &[2, 4]])), qi(0));
        let h = vec![vec![q(1, 2), q(1, 3)], vec![q(1, 3), q(1, 4)]];
        assert_eq!(determinant(&h), q(1, 8) - q(1, 9));
    }

    #[test]
    fn rank_rectangular() {
        assert_eq!(rank(&m(&[&[1, 2, 3], &[2, 4, 6], &[0, 0, 1]])), 2);
        assert_eq!(rank(&m(&[&[0, 0], &[0, 0]])), 0);
        assert_eq!(rank(&m(&[&[0, 1, 0, 0], &[0, 0, 0, 1], &[0, 1, 0, 1]])), 2);
    }

    // Cofactor expansion as an independent determinant oracle.
    fn det_oracle(a: &Matrix) -> Q {
        if a.len() == 1 {
            return a[0][0].clone();
        }
        let mut acc = Q::zero();
        for j in 0..a.len() {
            let minor: Matrix = a[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect()).collect();
            let t = &a[0][j] * det_oracle(&minor);
            if j % 2 == 0 {
                acc += t
            } else {
                acc -= t
            }
        }
        acc
    }

    #[test]
    fn random_against_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            for _ in 0..20 {
                let a: Matrix = (0..n).map(|_| random_vector(&mut rng, n, 3, 3)).collect();
                let d = determinant(&a);
                assert_eq!(d, det_oracle(&a));
                assert_eq!(rank(&a) == n, !d.is_zero());
                let (_, piv) = rref(&a);
                assert_eq!(piv.len(), rank(&a));
                if let Some(inv) = inverse(&a) {
                    assert_eq!(mat_mul(&a, &inv), identity(n));
                    let b = random_vector(&mut rng, n, 5, 2);
                    let x = solve(&a, &b).unwrap();
                    assert_eq!(mat_vec(&a, &x), b);
                }
            }
        }
    }

    #[test]
    fn echelon_basis_tracks_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let base: Matrix = (0..3).map(|_| random_vector(&mut rng, 5, 4, 3)).collect();
            let mut fam = base.clone();
            fam.push(base[0].iter().zip(&base[1]).map(|(a, b)| a * qi(2) - b).collect());
            let idx = independent_subset(&fam);
            assert_eq!(idx.len(), rank(&fam));
            let mut eb = EchelonBasis::new();
            for v in &fam {
                eb.insert(v);
            }
            assert!(eb.contains(&fam[3]));
        }
    }

    #[test]
    fn kernel() {
        let a = m(&[&[1, 1, 0], &[0, 0, 1]]);
        let k = nullspace(&a, 3);
        assert_eq!(k.len(), 1);
        assert!(mat_vec(&a, &k[0]).iter().all(Zero::is_zero));
    }
}
