//! Eigenvalues of dense complex matrices.
//!
//! Balancing, Householder reduction to upper Hessenberg form, then single-shift
//! complex QR iteration with Wilkinson shifts and deflation. Eigenvectors are
//! recovered on demand by inverse iteration.

use num_traits::{One, Zero};

use crate::linalg::{CMat, Lu};
use crate::scalar::{cx, Cx, Real};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("QR iteration did not converge after {iterations} sweeps (active block ending at {row})")]
pub struct NoConvergence {
    pub iterations: usize,
    pub row: usize,
}

/// All eigenvalues of `a`, unsorted.
pub fn eigenvalues<T: Real>(a: &CMat<T>) -> Result<Vec<Cx<T>>, NoConvergence> {
    assert!(a.is_square());
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(&mut h)
}

/// Eigenvalues sorted by imaginary part, then real part.
pub fn sorted_eigenvalues<T: Real>(a: &CMat<T>) -> Result<Vec<Cx<T>>, NoConvergence> {
    let mut ev = eigenvalues(a)?;
    sort_by_im_re(&mut ev);
    Ok(ev)
}

pub fn sort_by_im_re<T: Real>(v: &mut [Cx<T>]) {
    v.sort_by(|x, y| {
        x.im.partial_cmp(&y.im)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.re.partial_cmp(&y.re).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Diagonal similarity scaling by powers of two so row and column norms are
/// comparable. Eigenvalues are unchanged.
fn balance<T: Real>(a: &mut CMat<T>) {
    let n = a.nrows();
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for k in 0..n {
                if k != i {
                    c += a[(k, i)].l1_norm();
                    r += a[(i, k)].l1_norm();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let s = c + r;
            let mut f = T::one();
            let mut g = r / radix;
            let mut cc = c;
            while cc < g {
                f *= radix;
                cc *= sqrdx;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= sqrdx;
            }
            if (cc + r / f) / f < T::lit(0.95) * s {
                done = false;
                let gi = T::one() / f;
                for k in 0..n {
                    a[(i, k)] *= gi;
                }
                for k in 0..n {
                    a[(k, i)] *= f;
                }
            }
        }
    }
}

fn hessenberg<T: Real>(h: &mut CMat<T>) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let mut alpha2 = T::zero();
        for i in k + 1..n {
            alpha2 += h[(i, k)].norm_sqr();
        }
        let xnorm = alpha2.sqrt();
        if xnorm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() == T::zero() { Cx::one() } else { x0 / x0.norm() };
        // v = x + phase*|x| e1, reflector I - 2 v v^H / (v^H v)
        let mut v: Vec<Cx<T>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * xnorm;
        let vnorm2: T = v.iter().fold(T::zero(), |s, x| s + x.norm_sqr());
        if vnorm2 == T::zero() {
            continue;
        }
        let beta = T::lit(2.0) / vnorm2;
        // left: H[k+1.., :] -= beta v (v^H H)
        for c in 0..n {
            let mut dot = Cx::zero();
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + idx, c)];
            }
            let f = dot * beta;
            for (idx, vi) in v.iter().enumerate() {
                h[(k + 1 + idx, c)] -= *vi * f;
            }
        }
        // right: H[:, k+1..] -= beta (H v) v^H
        for r in 0..n {
            let mut dot = Cx::zero();
            for (idx, vi) in v.iter().enumerate() {
                dot += h[(r, k + 1 + idx)] * *vi;
            }
            let f = dot * beta;
            for (idx, vi) in v.iter().enumerate() {
                h[(r, k + 1 + idx)] -= f * vi.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Cx::zero();
        }
    }
}

/// Givens rotation `[c s; -conj(s) c]` mapping `(a, b)` to `(r, 0)`.
fn givens<T: Real>(a: Cx<T>, b: Cx<T>) -> (T, Cx<T>) {
    let bn = b.norm();
    if bn == T::zero() {
        return (T::one(), Cx::zero());
    }
    let an = a.norm();
    if an == T::zero() {
        return (T::zero(), b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn wilkinson<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Cx<T> {
    let half = T::lit(0.5);
    let m = (a + d) * half;
    let diff = (a - d) * half;
    let disc = (diff * diff + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg_qr<T: Real>(h: &mut CMat<T>) -> Result<Vec<Cx<T>>, NoConvergence> {
    let n = h.nrows();
    let eps = T::epsilon();
    let mut ev = vec![Cx::zero(); n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(1);
    loop {
        if hi == 0 {
            ev[0] = h[(0, 0)];
            break;
        }
        // deflation search
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].l1_norm();
            let mut diag = h[(l, l)].l1_norm() + h[(l - 1, l - 1)].l1_norm();
            if diag == T::zero() {
                diag = T::one();
            }
            if sub <= eps * diag {
                h[(l, l - 1)] = Cx::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            ev[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(NoConvergence { iterations: total, row: hi });
        }
        let mu = if iter.is_multiple_of(11) {
            // exceptional shift
            h[(hi, hi)] + cx(h[(hi, hi - 1)].l1_norm() * T::lit(0.75), T::zero())
        } else {
            wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        let mut x = h[(l, l)] - mu;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            if k > l {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let cc = cx(c, T::zero());
            let c0 = if k > l { k - 1 } else { l };
            for col in c0..=hi {
                let a = h[(k, col)];
                let b = h[(k + 1, col)];
                h[(k, col)] = cc * a + s * b;
                h[(k + 1, col)] = -s.conj() * a + cc * b;
            }
            let r1 = (k + 2).min(hi);
            for row in l..=r1 {
                let a = h[(row, k)];
                let b = h[(row, k + 1)];
                h[(row, k)] = a * cc + b * s.conj();
                h[(row, k + 1)] = -a * s + b * cc;
            }
            if k > l {
                h[(k + 1, k - 1)] = Cx::zero();
            }
        }
    }
    Ok(ev)
}

/// Right eigenvector for an (approximate) eigenvalue by inverse iteration,
/// normalized to unit 2-norm.
pub fn right_eigenvector<T: Real>(a: &CMat<T>, lambda: Cx<T>) -> Vec<Cx<T>> {
    inverse_iteration(a, lambda)
}

/// Left eigenvector `u` with `u^H A = lambda u^H`, returned as `u` (not `u^H`).
pub fn left_eigenvector<T: Real>(a: &CMat<T>, lambda: Cx<T>) -> Vec<Cx<T>> {
    let ah = a.transpose().map(|x| x.conj());
    inverse_iteration(&ah, lambda.conj())
}

fn inverse_iteration<T: Real>(a: &CMat<T>, lambda: Cx<T>) -> Vec<Cx<T>> {
    let n = a.nrows();
    let scale = crate::linalg::norm1(a).max(T::one());
    let delta = scale * T::epsilon() * T::lit(64.0);
    let mut m = crate::linalg::shift(a, lambda + cx(delta, delta * T::lit(0.5)));
    let mut lu = Lu::new(&m);
    if lu.is_singular() {
        m = crate::linalg::shift(a, lambda + cx(delta * T::lit(1e3), T::zero()));
        lu = Lu::new(&m);
    }
    let mut v = CMat::<T>::from_fn(n, 1, |i, _| {
        cx(T::one() + T::lit(0.1) * T::from_usize(i % 7).unwrap(), T::lit(0.05) * T::from_usize(i % 3).unwrap())
    });
    for _ in 0..4 {
        let next = match lu.solve(&v) {
            Some(x) => x,
            None => break,
        };
        let nrm = next.iter().fold(T::zero(), |s, x| s + x.norm_sqr()).sqrt();
        if !(nrm.is_finite()) || nrm == T::zero() {
            break;
        }
        v = next.map(|x| x / cx(nrm, T::zero()));
    }
    v.iter().copied().collect()
}
