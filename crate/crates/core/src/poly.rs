//! Ring-generic dense polynomial and truncated power series helpers, shared
//! by the exact (`Z[ζ_p]`) and the p-adic routes.

use std::ops::{Add, Mul, Neg, Sub};

use crate::cyclo::{Cyc, CycScalar};

/// Commutative ring elements that know how to produce constants of their own
/// ring (a p-adic element carries its precision context).
pub trait RingElem: Clone + Sized
where
    for<'a> &'a Self:
        Add<&'a Self, Output = Self> + Sub<&'a Self, Output = Self> + Mul<&'a Self, Output = Self> + Neg<Output = Self>,
{
    fn int_like(&self, c: i64) -> Self;

    fn zero_like(&self) -> Self {
        self.int_like(0)
    }

    fn one_like(&self) -> Self {
        self.int_like(1)
    }
}

impl<T: CycScalar> RingElem for Cyc<T> {
    fn int_like(&self, c: i64) -> Self {
        Cyc::from_int(self.level(), T::from_i64(c).expect("constant fits"))
    }
}

/// Product of two coefficient lists, truncated to `len` terms.
pub fn mul_trunc<R: RingElem>(a: &[R], b: &[R], len: usize) -> Vec<R>
where
    for<'a> &'a R: Add<&'a R, Output = R> + Sub<&'a R, Output = R> + Mul<&'a R, Output = R> + Neg<Output = R>,
{
    let zero = a.first().or(b.first()).expect("non-empty operands").zero_like();
    let mut out = vec![zero; len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

/// Inverse of a series with constant term 1, truncated to `len` terms.
pub fn inverse_trunc<R: RingElem>(a: &[R], len: usize) -> Vec<R>
where
    for<'a> &'a R: Add<&'a R, Output = R> + Sub<&'a R, Output = R> + Mul<&'a R, Output = R> + Neg<Output = R>,
{
    let one = a[0].one_like();
    let mut out: Vec<R> = Vec::with_capacity(len);
    for m in 0..len {
        if m == 0 {
            out.push(one.clone());
            continue;
        }
        let mut acc = one.zero_like();
        for i in 1..=m.min(a.len() - 1) {
            acc = &acc + &(&a[i] * &out[m - i]);
        }
        out.push(-&acc);
    }
    out
}

/// Characteristic polynomial `det(X·I - A)` by the division-free
/// Samuelson–Berkowitz recursion. Returns coefficients from the leading `1`
/// down to the constant term.
pub fn berkowitz<R: RingElem>(a: &[Vec<R>]) -> Vec<R>
where
    for<'b> &'b R: Add<&'b R, Output = R> + Sub<&'b R, Output = R> + Mul<&'b R, Output = R> + Neg<Output = R>,
{
    let n = a.len();
    assert!(n > 0 && a.iter().all(|row| row.len() == n), "square matrix expected");
    let one = a[0][0].one_like();
    let zero = one.zero_like();
    let mut poly = vec![one.clone(), -&a[0][0]];
    for r in 1..n {
        // first column of the Toeplitz factor: 1, -a_rr, -R C, -R A C, ...
        let row: Vec<R> = a[r][..r].to_vec();
        let mut col: Vec<R> = (0..r).map(|i| a[i][r].clone()).collect();
        let mut toeplitz = vec![one.clone(), -&a[r][r]];
        for _ in 0..r {
            let dot = row.iter().zip(&col).fold(zero.clone(), |acc, (x, y)| &acc + &(x * y));
            toeplitz.push(-&dot);
            col = (0..r).map(|i| (0..r).fold(zero.clone(), |acc, j| &acc + &(&a[i][j] * &col[j]))).collect();
        }
        // (r+2) x (r+1) lower-triangular Toeplitz times previous polynomial
        let next = (0..r + 2)
            .map(|i| {
                (0..=i.min(r)).fold(zero.clone(), |acc, j| {
                    if i - j < toeplitz.len() {
                        &acc + &(&toeplitz[i - j] * &poly[j])
                    } else {
                        acc
                    }
                })
            })
            .collect();
        poly = next;
    }
    poly
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CycInt;
    use num_bigint::BigInt;

    fn ints(p: u32, xs: &[i64]) -> Vec<CycInt> {
        xs.iter().map(|&x| CycInt::from_int(p, BigInt::from(x))).collect()
    }

    /// Determinant by permutation expansion; independent of the recursion.
    fn det_leibniz(m: &[Vec<i64>]) -> i64 {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = m.len();
        perms(n)
            .into_iter()
            .map(|perm| {
                let inversions =
                    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
                let sign = if inversions % 2 == 0 { 1 } else { -1 };
                sign * (0..n).map(|i| m[i][perm[i]]).product::<i64>()
            })
            .sum()
    }

    #[test]
    fn berkowitz_matches_leibniz_on_shifted_matrices() {
        let a = [vec![2i64, -1, 0, 3], vec![1, 0, 4, -2], vec![0, 5, -3, 1], vec![2, 2, 1, 1]];
        let p = 5;
        let m: Vec<Vec<CycInt>> = a.iter().map(|r| ints(p, r)).collect();
        let cp = berkowitz(&m);
        // evaluate det(x I - A) at several integers both ways
        for x in -3i64..=3 {
            let shifted: Vec<Vec<i64>> =
                (0..4).map(|i| (0..4).map(|j| if i == j { x - a[i][j] } else { -a[i][j] }).collect()).collect();
            let val = cp.iter().fold(BigInt::from(0), |acc, c| acc * x + c.as_integer().unwrap());
            assert_eq!(val, BigInt::from(det_leibniz(&shifted)));
        }
    }

    #[test]
    fn series_inverse() {
        let a = ints(3, &[1, -1, 3]);
        let inv = inverse_trunc(&a, 5);
        let back = mul_trunc(&a, &inv, 5);
        assert_eq!(back, ints(3, &[1, 0, 0, 0, 0]));
        // 1/(1 - T + 3T^2) = 1 + T - 2T^2 - 5T^3 + ...
        assert_eq!(inv[..4].to_vec(), ints(3, &[1, 1, -2, -5]));
    }
}
