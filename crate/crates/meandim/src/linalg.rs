//! Exact linear algebra, generic over the scalar.
//!
//! Rank and solving work over any field-like scalar (`Scalar`); determinants
//! by Laplace expansion only need a commutative ring (`Ring`), which lets the
//! same code run on multivariate polynomials for symbolic certificates.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

/// Commutative ring scalar: enough for division-free determinants.
pub trait Ring:
    Clone
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
{
}

/// Field scalar: rank and solving eliminate with exact division.
pub trait Scalar: Ring + Div<Output = Self> {}

impl<T> Scalar for T where T: Ring + Div<Output = T> {}

/// A dense matrix as rows. No shape type; callers keep shapes honest.
pub type Matrix<T> = Vec<Vec<T>>;

/// Row-reduce in place; returns the rank. Exact Gaussian elimination.
pub fn row_reduce<T: Scalar>(rows: &mut Matrix<T>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone() / p.clone();
                for c in col..ncols {
                    let delta = factor.clone() * rows[rank][c].clone();
                    rows[r][c] = rows[r][c].clone() - delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Exact rank of a matrix given as rows.
pub fn rank<T: Scalar>(rows: &Matrix<T>) -> usize {
    let mut m = rows.clone();
    row_reduce(&mut m)
}

/// Rank of a list of vectors (treated as rows).
pub fn rank_of_vectors<T: Scalar>(vectors: &[Vec<T>]) -> usize {
    rank(&vectors.to_vec())
}

/// Determinant by elimination (field scalar).
pub fn det<T: Scalar>(rows: &Matrix<T>) -> T {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n), "det needs a square matrix");
    let mut m = rows.clone();
    let mut result = T::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return T::zero();
        };
        if pivot != col {
            m.swap(col, pivot);
            result = -result;
        }
        let p = m[col][col].clone();
        result = result * p.clone();
        for r in col + 1..n {
            if !m[r][col].is_zero() {
                let factor = m[r][col].clone() / p.clone();
                for c in col..n {
                    let delta = factor.clone() * m[col][c].clone();
                    m[r][c] = m[r][c].clone() - delta;
                }
            }
        }
    }
    result
}

/// Division-free determinant by Laplace expansion with memoized minors.
/// Intended for small symbolic matrices (n <= 8).
pub fn det_laplace<T: Ring>(rows: &Matrix<T>) -> T {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n), "det needs a square matrix");
    if n == 0 {
        return T::one();
    }
    // minor over the last `popcount(mask)` rows and the column set `mask`
    fn minor<T: Ring>(rows: &Matrix<T>, mask: u32, memo: &mut HashMap<u32, T>) -> T {
        if mask == 0 {
            return T::one();
        }
        if let Some(v) = memo.get(&mask) {
            return v.clone();
        }
        let n = rows.len();
        let k = mask.count_ones() as usize;
        let row = n - k;
        let mut acc = T::zero();
        let mut sign_pos = true;
        for col in 0..n {
            let bit = 1u32 << col;
            if mask & bit == 0 {
                continue;
            }
            if !rows[row][col].is_zero() {
                let sub = minor(rows, mask & !bit, memo);
                let term = rows[row][col].clone() * sub;
                acc = if sign_pos { acc + term } else { acc - term };
            }
            sign_pos = !sign_pos;
        }
        memo.insert(mask, acc.clone());
        acc
    }
    let mut memo = HashMap::new();
    minor(rows, (1u32 << n) - 1, &mut memo)
}

/// Solve `A x = b` exactly. Returns `None` when inconsistent; when the system
/// is underdetermined, free variables are set to zero.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let nrows = a.len();
    assert_eq!(nrows, b.len());
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let mut aug: Matrix<T> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    row_reduce(&mut aug);
    let mut x = vec![T::zero(); ncols];
    for row in &aug {
        let Some(lead) = row[..ncols].iter().position(|v| !v.is_zero()) else {
            if !row[ncols].is_zero() {
                return None; // 0 = nonzero
            }
            continue;
        };
        x[lead] = row[ncols].clone() / row[lead].clone();
    }
    // verify (guards against the underdetermined case producing a non-solution)
    for (row, bi) in a.iter().zip(b) {
        let mut acc = T::zero();
        for (aij, xj) in row.iter().zip(&x) {
            acc = acc + aij.clone() * xj.clone();
        }
        if acc != bi.clone() {
            return None;
        }
    }
    Some(x)
}

/// Sparse multivariate polynomial over `i128` coefficients, for symbolic
/// determinant certificates. Monomials are sorted `(variable, exponent)`
/// lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    /// monomial -> coefficient; zero coefficients never stored
    pub terms: std::collections::BTreeMap<Vec<(u32, u32)>, num_bigint::BigInt>,
}

impl Poly {
    pub fn constant(c: i64) -> Self {
        let mut terms = std::collections::BTreeMap::new();
        if c != 0 {
            terms.insert(Vec::new(), num_bigint::BigInt::from(c));
        }
        Poly { terms }
    }

    pub fn var(v: u32) -> Self {
        let mut terms = std::collections::BTreeMap::new();
        terms.insert(vec![(v, 1)], num_bigint::BigInt::from(1));
        Poly { terms }
    }

    pub fn is_identically_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl Zero for Poly {
    fn zero() -> Self {
        Poly { terms: std::collections::BTreeMap::new() }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Poly {
    fn one() -> Self {
        Poly::constant(1)
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            let entry = self.terms.entry(m).or_default();
            *entry += c;
            if entry.is_zero() {
                // re-fetch key is awkward; clean pass below
            }
        }
        self.terms.retain(|_, c| !c.is_zero());
        self
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out: std::collections::BTreeMap<Vec<(u32, u32)>, num_bigint::BigInt> =
            std::collections::BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                // merge sorted exponent lists
                let mut m = Vec::with_capacity(m1.len() + m2.len());
                let (mut i, mut j) = (0, 0);
                while i < m1.len() && j < m2.len() {
                    match m1[i].0.cmp(&m2[j].0) {
                        std::cmp::Ordering::Less => {
                            m.push(m1[i]);
                            i += 1;
                        }
                        std::cmp::Ordering::Greater => {
                            m.push(m2[j]);
                            j += 1;
                        }
                        std::cmp::Ordering::Equal => {
                            m.push((m1[i].0, m1[i].1 + m2[j].1));
                            i += 1;
                            j += 1;
                        }
                    }
                }
                m.extend_from_slice(&m1[i..]);
                m.extend_from_slice(&m2[j..]);
                let entry = out.entry(m).or_default();
                *entry += c1 * c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Poly { terms: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_int, Rat};
    use proptest::prelude::*;

    fn rmat(rows: &[&[i64]]) -> Matrix<Rat> {
        rows.iter().map(|r| r.iter().map(|&v| rat_int(v)).collect()).collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&rmat(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]])), 3);
        assert_eq!(rank(&rmat(&[&[0, 0], &[0, 0]])), 0);
        // [[1,2],[2,4],[3,6]] -> 1, elimination by hand
        assert_eq!(rank(&rmat(&[&[1, 2], &[2, 4], &[3, 6]])), 1);
    }

    #[test]
    fn det_matches_laplace() {
        let m = rmat(&[&[2, 1, 0], &[1, -1, 3], &[0, 4, 1]]);
        assert_eq!(det(&m), det_laplace(&m));
        assert_eq!(det(&m), rat_int(-27));
    }

    #[test]
    fn solve_simple() {
        let a = rmat(&[&[1, 1], &[1, -1]]);
        let x = solve(&a, &[rat_int(3), rat_int(1)]).unwrap();
        assert_eq!(x, vec![rat_int(2), rat_int(1)]);
        // inconsistent
        let a = rmat(&[&[1, 1], &[2, 2]]);
        assert!(solve(&a, &[rat_int(1), rat_int(3)]).is_none());
    }

    #[test]
    fn poly_symbolic_det() {
        // det [[x, y], [y, x]] = x^2 - y^2
        let (x, y) = (Poly::var(0), Poly::var(1));
        let m = vec![vec![x.clone(), y.clone()], vec![y, x]];
        let d = det_laplace(&m);
        assert_eq!(d.terms.len(), 2);
        assert!(!d.is_identically_zero());
    }

    proptest! {
        // rank via elimination agrees with a determinant-based rank oracle on
        // small square matrices
        #[test]
        fn rank_agrees_with_minor_oracle(entries in proptest::collection::vec(-4i64..5, 16)) {
            let n = 4;
            let m: Matrix<Rat> = (0..n)
                .map(|i| (0..n).map(|j| rat_int(entries[i * n + j])).collect())
                .collect();
            // oracle: largest k with a nonzero k x k minor
            let mut oracle = 0;
            for k in 1..=n {
                let mut found = false;
                let rows_sets = subsets(n, k);
                'outer: for rs in &rows_sets {
                    for cs in &rows_sets {
                        let sub: Matrix<Rat> = rs
                            .iter()
                            .map(|&i| cs.iter().map(|&j| m[i][j].clone()).collect())
                            .collect();
                        if !det(&sub).is_zero() {
                            found = true;
                            break 'outer;
                        }
                    }
                }
                if found { oracle = k; }
            }
            prop_assert_eq!(rank(&m), oracle);
        }
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }
}
