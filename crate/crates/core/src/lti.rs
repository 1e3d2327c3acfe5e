//! Complex-coefficient state-space systems `G(s) = C (sI - A)^-1 B + D`.
//!
//! Every transfer quantity in the crate (machine impedances and admittances,
//! frame laws, network admittance, closed loops) is an [`LtiSystem`].
//! Interconnections never minimize the realization: states that become
//! unreachable or unobservable are kept, and [`LtiSystem::poles`] reports the
//! eigenvalues of the full state matrix.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::eig;
use crate::error::{Error, Result};
use crate::linalg::{block_diag, equilibrated_rcond, identity, inverse_with_rcond, shift, CMat, Lu};
use crate::scalar::{cx, j, Cx, Real};

/// Reciprocal-condition threshold below which a static loop or feedthrough
/// matrix is treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LtiSystem<T: Real> {
    a: CMat<T>,
    b: CMat<T>,
    c: CMat<T>,
    d: CMat<T>,
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn rcond_threshold<T: Real>() -> T {
    T::lit(RCOND_THRESHOLD)
}

impl<T: Real> LtiSystem<T> {
    pub fn new(a: CMat<T>, b: CMat<T>, c: CMat<T>, d: CMat<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(Error::DimMismatch(format!(
                "A is {n}x{n}, B is {}x{}, C is {}x{}",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimMismatch(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(LtiSystem { a, b, c, d })
    }

    /// Memoryless gain `G(s) = D`.
    pub fn make_static(d: CMat<T>) -> Self {
        let (p, m) = d.shape();
        LtiSystem { a: CMat::zeros(0, 0), b: CMat::zeros(0, m), c: CMat::zeros(p, 0), d }
    }

    pub fn zero(outputs: usize, inputs: usize) -> Self {
        Self::make_static(CMat::zeros(outputs, inputs))
    }

    pub fn identity(n: usize) -> Self {
        Self::make_static(identity(n))
    }

    pub fn a(&self) -> &CMat<T> {
        &self.a
    }
    pub fn b(&self) -> &CMat<T> {
        &self.b
    }
    pub fn c(&self) -> &CMat<T> {
        &self.c
    }
    pub fn d(&self) -> &CMat<T> {
        &self.d
    }
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|x| x.is_zero())
    }

    pub fn evaluate(&self, s: Cx<T>) -> Result<CMat<T>> {
        if self.state_dim() == 0 {
            return Ok(self.d.clone());
        }
        let m = shift(&self.a, s).map(|x| -x);
        let lu = Lu::new(&m);
        let singular = || Error::SingularAtS { re: to_f64(s.re), im: to_f64(s.im) };
        let x = lu.solve(&self.b).ok_or_else(singular)?;
        let out = &self.c * x + &self.d;
        if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(singular());
        }
        Ok(out)
    }

    /// Cascade `self * inner`: the signal passes through `inner` first.
    pub fn series(&self, inner: &LtiSystem<T>) -> Result<Self> {
        if self.input_dim() != inner.output_dim() {
            return Err(Error::DimMismatch(format!(
                "series: outer takes {} inputs, inner gives {} outputs",
                self.input_dim(),
                inner.output_dim()
            )));
        }
        let (n1, n2) = (inner.state_dim(), self.state_dim());
        let mut a = CMat::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&inner.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&self.b * &inner.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&self.a);
        let mut b = CMat::zeros(n1 + n2, inner.input_dim());
        b.view_mut((0, 0), (n1, inner.input_dim())).copy_from(&inner.b);
        b.view_mut((n1, 0), (n2, inner.input_dim())).copy_from(&(&self.b * &inner.d));
        let mut c = CMat::zeros(self.output_dim(), n1 + n2);
        c.view_mut((0, 0), (self.output_dim(), n1)).copy_from(&(&self.d * &inner.c));
        c.view_mut((0, n1), (self.output_dim(), n2)).copy_from(&self.c);
        let d = &self.d * &inner.d;
        Self::new(a, b, c, d)
    }

    pub fn add(&self, other: &LtiSystem<T>) -> Result<Self> {
        if self.input_dim() != other.input_dim() || self.output_dim() != other.output_dim() {
            return Err(Error::DimMismatch(format!(
                "add: {}x{} vs {}x{}",
                self.output_dim(),
                self.input_dim(),
                other.output_dim(),
                other.input_dim()
            )));
        }
        let a = block_diag(&[&self.a, &other.a]);
        let mut b = CMat::zeros(a.nrows(), self.input_dim());
        b.view_mut((0, 0), self.b.shape()).copy_from(&self.b);
        b.view_mut((self.state_dim(), 0), other.b.shape()).copy_from(&other.b);
        let mut c = CMat::zeros(self.output_dim(), a.nrows());
        c.view_mut((0, 0), self.c.shape()).copy_from(&self.c);
        c.view_mut((0, self.state_dim()), other.c.shape()).copy_from(&other.c);
        Self::new(a, b, c, &self.d + &other.d)
    }

    pub fn negate(&self) -> Self {
        LtiSystem { a: self.a.clone(), b: self.b.clone(), c: self.c.map(|x| -x), d: self.d.map(|x| -x) }
    }

    /// `left * G(s) * right` for static matrices.
    pub fn sandwich(&self, left: &CMat<T>, right: &CMat<T>) -> Result<Self> {
        if left.ncols() != self.output_dim() || right.nrows() != self.input_dim() {
            return Err(Error::DimMismatch("sandwich: static factors do not conform".into()));
        }
        Self::new(self.a.clone(), &self.b * right, left * &self.c, left * &self.d * right)
    }

    /// Proper inverse, realized as `(A - B D^-1 C, B D^-1, -D^-1 C, D^-1)`.
    pub fn inverse(&self) -> Result<Self> {
        if self.input_dim() != self.output_dim() {
            return Err(Error::DimMismatch("inverse of non-square system".into()));
        }
        let (dinv, rcond) = inverse_with_rcond(&self.d).ok_or(Error::SingularD { rcond: 0.0 })?;
        if rcond < rcond_threshold() {
            return Err(Error::SingularD { rcond: to_f64(rcond) });
        }
        let bd = &self.b * &dinv;
        let a = &self.a - &bd * &self.c;
        let c = (&dinv * &self.c).map(|x| -x);
        Self::new(a, bd, c, dinv)
    }

    /// Closed loop from the external input to the output of `self` with
    /// `u_g = r + sign * y_h` and `u_h = y_g`, i.e. `G (I - sign H G)^-1`.
    pub fn feedback(&self, h: &LtiSystem<T>, sign: i8) -> Result<Self> {
        if h.input_dim() != self.output_dim() || h.output_dim() != self.input_dim() {
            return Err(Error::DimMismatch("feedback: loop dimensions do not conform".into()));
        }
        let sg = T::from_i8(sign).ok_or_else(|| Error::InvalidParameter("feedback sign".into()))?;
        let (p, m) = (self.output_dim(), self.input_dim());
        let plant = self.append(h);
        // u = [u_g; u_h] = F y + G r, y = [y_g; y_h]
        let mut f = CMat::zeros(m + p, p + m);
        for i in 0..m {
            f[(i, p + i)] = cx(sg, T::zero());
        }
        for i in 0..p {
            f[(m + i, i)] = Cx::one();
        }
        let mut g = CMat::zeros(m + p, m);
        for i in 0..m {
            g[(i, i)] = Cx::one();
        }
        let mut hsel = CMat::zeros(p, p + m);
        for i in 0..p {
            hsel[(i, i)] = Cx::one();
        }
        connect(&plant, &f, &g, &hsel, &CMat::zeros(p, m))
    }

    /// Block-diagonal stacking: inputs and outputs concatenated.
    pub fn append(&self, other: &LtiSystem<T>) -> Self {
        LtiSystem {
            a: block_diag(&[&self.a, &other.a]),
            b: block_diag(&[&self.b, &other.b]),
            c: block_diag(&[&self.c, &other.c]),
            d: block_diag(&[&self.d, &other.d]),
        }
    }

    pub fn append_all(systems: &[LtiSystem<T>]) -> Self {
        let refs = |f: fn(&LtiSystem<T>) -> &CMat<T>| -> Vec<&CMat<T>> { systems.iter().map(f).collect() };
        LtiSystem {
            a: block_diag(&refs(|s| &s.a)),
            b: block_diag(&refs(|s| &s.b)),
            c: block_diag(&refs(|s| &s.c)),
            d: block_diag(&refs(|s| &s.d)),
        }
    }

    /// Sub-system with the chosen outputs and inputs (same state).
    pub fn select(&self, outputs: &[usize], inputs: &[usize]) -> Result<Self> {
        if outputs.iter().any(|&o| o >= self.output_dim()) || inputs.iter().any(|&i| i >= self.input_dim()) {
            return Err(Error::DimMismatch("select: index out of range".into()));
        }
        let b = CMat::from_fn(self.state_dim(), inputs.len(), |r, k| self.b[(r, inputs[k])]);
        let c = CMat::from_fn(outputs.len(), self.state_dim(), |k, col| self.c[(outputs[k], col)]);
        let d = CMat::from_fn(outputs.len(), inputs.len(), |r, k| self.d[(outputs[r], inputs[k])]);
        Self::new(self.a.clone(), b, c, d)
    }

    /// Output derivative `s G(s)` of a strictly proper system, realized on
    /// the same state as `(A, B, C A, C B)`.
    pub fn derivative_output(&self) -> Result<Self> {
        if !self.is_strictly_proper() {
            return Err(Error::InvalidParameter("output derivative of a system with feedthrough is improper".into()));
        }
        Self::new(self.a.clone(), self.b.clone(), &self.c * &self.a, &self.c * &self.b)
    }

    /// Outputs of `self` followed by outputs of `other`, both driven by the
    /// same input. States are concatenated.
    pub fn stack_outputs(&self, other: &LtiSystem<T>) -> Result<Self> {
        if self.input_dim() != other.input_dim() {
            return Err(Error::DimMismatch("stack_outputs: input dims differ".into()));
        }
        let a = block_diag(&[&self.a, &other.a]);
        let mut b = CMat::zeros(a.nrows(), self.input_dim());
        b.view_mut((0, 0), self.b.shape()).copy_from(&self.b);
        b.view_mut((self.state_dim(), 0), other.b.shape()).copy_from(&other.b);
        let c = block_diag(&[&self.c, &other.c]);
        let mut d = CMat::zeros(self.output_dim() + other.output_dim(), self.input_dim());
        d.view_mut((0, 0), self.d.shape()).copy_from(&self.d);
        d.view_mut((self.output_dim(), 0), other.d.shape()).copy_from(&other.d);
        Self::new(a, b, c, d)
    }

    /// Eigenvalues of `A`, sorted by imaginary part then real part.
    pub fn poles(&self) -> Result<Vec<Cx<T>>> {
        eig::sorted_eigenvalues(&self.a).map_err(|e| Error::EigFailure(e.to_string()))
    }

    /// Real dq pairs to complex `(+, -)` pairs: `G_pm = T G_dq T^-1` per
    /// 2-block with `T = [[1, j], [1, -j]]`.
    pub fn real_to_pm(&self) -> Result<Self> {
        let (tl, tr) = (pm_transform(self.output_dim())?, pm_transform_inv(self.input_dim())?);
        self.sandwich(&tl, &tr)
    }

    pub fn pm_to_real(&self) -> Result<Self> {
        let (tl, tr) = (pm_transform_inv(self.output_dim())?, pm_transform(self.input_dim())?);
        self.sandwich(&tl, &tr)
    }

    /// Similarity-transform the state: `x = P z`.
    pub fn with_state_map(&self, p: &CMat<T>, p_inv: &CMat<T>) -> Result<Self> {
        Self::new(p_inv * &self.a * p, p_inv * &self.b, &self.c * p, self.d.clone())
    }
}

fn pm_transform<T: Real>(n: usize) -> Result<CMat<T>> {
    if !n.is_multiple_of(2) {
        return Err(Error::DimMismatch(format!("dq/pm transform needs even dimension, got {n}")));
    }
    let mut t = CMat::zeros(n, n);
    for k in 0..n / 2 {
        let (r, c) = (2 * k, 2 * k);
        t[(r, c)] = Cx::one();
        t[(r, c + 1)] = j();
        t[(r + 1, c)] = Cx::one();
        t[(r + 1, c + 1)] = -j::<T>();
    }
    Ok(t)
}

fn pm_transform_inv<T: Real>(n: usize) -> Result<CMat<T>> {
    if !n.is_multiple_of(2) {
        return Err(Error::DimMismatch(format!("dq/pm transform needs even dimension, got {n}")));
    }
    let half = cx(T::lit(0.5), T::zero());
    let mut t = CMat::zeros(n, n);
    for k in 0..n / 2 {
        let (r, c) = (2 * k, 2 * k);
        t[(r, c)] = half;
        t[(r, c + 1)] = half;
        t[(r + 1, c)] = -j::<T>() * half;
        t[(r + 1, c + 1)] = j::<T>() * half;
    }
    Ok(t)
}

/// Static `2n x 2n` dq -> pm coordinate matrix.
pub fn dq_to_pm_matrix<T: Real>(n_pairs: usize) -> CMat<T> {
    pm_transform(2 * n_pairs).expect("even")
}

/// General static interconnection of a (block) plant.
///
/// With plant outputs `y` and inputs `u`, external input `w` and external
/// output `z`: `u = F y + G w`, `z = H y + J w`. Fails with
/// [`Error::IllPosedLoop`] when `I - D F` is (numerically) singular.
pub fn connect<T: Real>(
    plant: &LtiSystem<T>,
    f: &CMat<T>,
    g: &CMat<T>,
    h: &CMat<T>,
    jw: &CMat<T>,
) -> Result<LtiSystem<T>> {
    let (p, m) = (plant.output_dim(), plant.input_dim());
    if f.shape() != (m, p) || g.nrows() != m || h.ncols() != p || jw.shape() != (h.nrows(), g.ncols()) {
        return Err(Error::DimMismatch("connect: interconnection matrices do not conform".into()));
    }
    let loop_m = identity::<T>(p) - &plant.d * f;
    let (minv, _) = inverse_with_rcond(&loop_m).ok_or(Error::IllPosedLoop { rcond: 0.0 })?;
    let rcond = equilibrated_rcond(&loop_m, &minv);
    if rcond < rcond_threshold() {
        return Err(Error::IllPosedLoop { rcond: to_f64(rcond) });
    }
    let mc = &minv * &plant.c;
    let mdg = &minv * &plant.d * g;
    let bf = &plant.b * f;
    let a = &plant.a + &bf * &mc;
    let b = &bf * &mdg + &plant.b * g;
    let c = h * &mc;
    let d = h * &mdg + jw;
    LtiSystem::new(a, b, c, d)
}

/// Dense complex matrix from row-major slice.
pub fn cmat<T: Real>(rows: usize, cols: usize, data: &[Cx<T>]) -> CMat<T> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Diagonal complex matrix.
pub fn cdiag<T: Real>(entries: &[Cx<T>]) -> CMat<T> {
    let n = entries.len();
    let mut m = CMat::zeros(n, n);
    for (i, e) in entries.iter().enumerate() {
        m[(i, i)] = *e;
    }
    m
}
