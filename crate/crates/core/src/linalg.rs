//! Dense complex LU factorization and the small helpers built on it.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::scalar::{Cx, Real};

pub type CMat<T> = DMatrix<Cx<T>>;

/// LU factorization with partial pivoting, `P A = L U` stored in place.
#[derive(Clone, Debug)]
pub struct Lu<T: Real> {
    lu: CMat<T>,
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Real> Lu<T> {
    pub fn new(a: &CMat<T>) -> Self {
        assert!(a.is_square(), "LU of non-square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != Cx::zero() {
                    for jj in k + 1..n {
                        let t = lu[(k, jj)];
                        lu[(i, jj)] -= f * t;
                    }
                }
            }
        }
        Lu { lu, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &CMat<T>) -> Option<CMat<T>> {
        if self.singular {
            return None;
        }
        let n = self.lu.nrows();
        let m = b.ncols();
        let mut x = CMat::<T>::zeros(n, m);
        for col in 0..m {
            for i in 0..n {
                x[(i, col)] = b[(self.perm[i], col)];
            }
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.lu[(i, i)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<CMat<T>> {
        let n = self.lu.nrows();
        self.solve(&CMat::<T>::identity(n, n))
    }
}

pub fn norm1<T: Real>(a: &CMat<T>) -> T {
    let mut best = T::zero();
    for c in 0..a.ncols() {
        let mut s = T::zero();
        for r in 0..a.nrows() {
            s += a[(r, c)].norm();
        }
        if s > best {
            best = s;
        }
    }
    best
}

/// Inverse together with the reciprocal 1-norm condition number.
/// Returns `None` for an exactly singular matrix.
pub fn inverse_with_rcond<T: Real>(a: &CMat<T>) -> Option<(CMat<T>, T)> {
    let n = a.nrows();
    if n == 0 {
        return Some((CMat::<T>::zeros(0, 0), T::one()));
    }
    let inv = Lu::new(a).inverse()?;
    let an = norm1(a);
    let inn = norm1(&inv);
    if !(an.is_finite() && inn.is_finite()) || an == T::zero() {
        return None;
    }
    Some((inv, T::one() / (an * inn)))
}

/// Reciprocal condition of `a` after row then column equilibration, given
/// its inverse. Insensitive to badly scaled but well-posed block structure.
pub fn equilibrated_rcond<T: Real>(a: &CMat<T>, inv: &CMat<T>) -> T {
    let n = a.nrows();
    if n == 0 {
        return T::one();
    }
    let row: Vec<T> = (0..n)
        .map(|r| {
            let m = (0..n).map(|c| a[(r, c)].norm()).fold(T::zero(), T::max);
            if m > T::zero() {
                T::one() / m
            } else {
                T::one()
            }
        })
        .collect();
    let col: Vec<T> = (0..n)
        .map(|c| {
            let m = (0..n).map(|r| a[(r, c)].norm() * row[r]).fold(T::zero(), T::max);
            if m > T::zero() {
                T::one() / m
            } else {
                T::one()
            }
        })
        .collect();
    let a_s = CMat::<T>::from_fn(n, n, |r, c| a[(r, c)] * (row[r] * col[c]));
    let inv_s = CMat::<T>::from_fn(n, n, |r, c| inv[(r, c)] / (col[r] * row[c]));
    let p = norm1(&a_s) * norm1(&inv_s);
    if p.is_finite() && p > T::zero() {
        T::one() / p
    } else {
        T::zero()
    }
}

pub fn identity<T: Real>(n: usize) -> CMat<T> {
    CMat::<T>::identity(n, n)
}

pub fn scale<T: Real>(a: &CMat<T>, s: Cx<T>) -> CMat<T> {
    a.map(|x| x * s)
}

/// `a - s*I`
pub fn shift<T: Real>(a: &CMat<T>, s: Cx<T>) -> CMat<T> {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= s;
    }
    m
}

pub fn block_diag<T: Real>(blocks: &[&CMat<T>]) -> CMat<T> {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = CMat::<T>::zeros(r, c);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        m.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    m
}

pub fn max_abs<T: Real>(a: &CMat<T>) -> T {
    a.iter().fold(T::zero(), |m, x| if x.norm() > m { x.norm() } else { m })
}

/// Largest entrywise difference relative to the larger operand magnitude.
pub fn rel_diff<T: Real>(a: &CMat<T>, b: &CMat<T>) -> T {
    let scale = max_abs(a).max(max_abs(b)).max(T::min_positive_value());
    max_abs(&(a - b)) / scale
}

pub fn one<T: Real>() -> Cx<T> {
    Cx::one()
}
