//! Local-to-global frame alignment in two steps: the frame-dynamics
//! embedding from a machine's swing frame to its steady frame, then a
//! constant rotation from the steady frame to the global frame.
//!
//! Signals are in `(+, -)` coordinates. A frame at angle `phi` relative to an
//! outer frame sees `u_frame = e^{-j phi} u_outer`. The swing frame sits at
//! angle `epsilon` relative to the steady frame, so to first order
//! `du' = du + U0 epsilon` with `U0 = (j u0+, -j u0-)^T`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::lti::{connect, LtiSystem};
use crate::scalar::{j, Cx, Real};

/// Constant angle of a local steady frame relative to the global steady
/// frame, kept in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameAngle<T: Real> {
    xi: T,
}

impl<T: Real> FrameAngle<T> {
    pub fn new(xi: T) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::InvalidParameter("frame angle must be finite".into()));
        }
        let two_pi = T::PI() + T::PI();
        let mut x = xi % two_pi;
        if x <= -T::PI() {
            x += two_pi;
        } else if x > T::PI() {
            x -= two_pi;
        }
        Ok(FrameAngle { xi: x })
    }

    pub fn xi(&self) -> T {
        self.xi
    }
}

/// Operating-point voltage and current of one machine in its steady frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyStatePhasors<T: Real> {
    /// `v_d0 + j v_q0`
    pub v0p: Cx<T>,
    /// `i_d0 + j i_q0`
    pub i0p: Cx<T>,
}

impl<T: Real> SteadyStatePhasors<T> {
    pub fn new(v0p: Cx<T>, i0p: Cx<T>) -> Self {
        SteadyStatePhasors { v0p, i0p }
    }

    pub fn zero() -> Self {
        Self::new(Cx::zero(), Cx::zero())
    }

    pub fn v_col(&self) -> CMat<T> {
        pm_col(self.v0p)
    }

    pub fn i_col(&self) -> CMat<T> {
        pm_col(self.i0p)
    }
}

fn pm_col<T: Real>(u0p: Cx<T>) -> CMat<T> {
    CMat::from_column_slice(2, 1, &[j::<T>() * u0p, -j::<T>() * u0p.conj()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    CurrentGoverned,
    VoltageGoverned,
}

/// Which frame the law's input signal is measured in.
///
/// A machine's own controller sees swing-frame quantities. A law written
/// against steady-frame quantities is the same physics expressed after the
/// loop through `U0 epsilon` has been closed; `K' = K (I + U0 K)^-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawReference {
    Swing,
    Steady,
}

/// `epsilon = K(s) du` with `K` a 1x2 strictly proper system.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePerturbationLaw<T: Real> {
    pub kind: LawKind,
    pub reference: LawReference,
    k: LtiSystem<T>,
}

impl<T: Real> FramePerturbationLaw<T> {
    pub fn new(kind: LawKind, reference: LawReference, k: LtiSystem<T>) -> Result<Self> {
        if k.output_dim() != 1 || k.input_dim() != 2 {
            return Err(Error::DimMismatch(format!("frame law must be 1x2, got {}x{}", k.output_dim(), k.input_dim())));
        }
        if !k.is_strictly_proper() {
            return Err(Error::InvalidParameter("frame law must be strictly proper".into()));
        }
        Ok(FramePerturbationLaw { kind, reference, k })
    }

    pub fn k(&self) -> &LtiSystem<T> {
        &self.k
    }

    /// Outputs `[epsilon; d epsilon/dt]` on the law's own state. The second
    /// output is the frame speed deviation.
    pub fn with_speed(&self) -> Result<LtiSystem<T>> {
        let k = &self.k;
        let ca = k.c() * k.a();
        let cb = k.c() * k.b();
        let c = CMat::from_fn(2, k.state_dim(), |r, col| if r == 0 { k.c()[(0, col)] } else { ca[(0, col)] });
        let d = CMat::from_fn(2, 2, |r, col| if r == 0 { Cx::zero() } else { cb[(0, col)] });
        LtiSystem::new(k.a().clone(), k.b().clone(), c, d)
    }
}

/// `s E + G(s)`: a 2x2 port model whose polynomial part is at most first
/// order. Machine impedances built from winding inductances and shunt
/// capacitor admittances have this form.
///
/// `G` may carry a third input, the frame speed deviation `d omega`, whose
/// coefficient is the speed voltage of the model; it only takes effect when
/// the model is embedded.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyLti<T: Real> {
    e: CMat<T>,
    g: LtiSystem<T>,
}

impl<T: Real> PolyLti<T> {
    pub fn new(e: CMat<T>, g: LtiSystem<T>) -> Result<Self> {
        if g.output_dim() != 2 || !(g.input_dim() == 2 || g.input_dim() == 3) || e.shape() != (2, 2) {
            return Err(Error::DimMismatch("impedance must be 2x2 (plus optional speed input)".into()));
        }
        Ok(PolyLti { e, g })
    }

    pub fn e(&self) -> &CMat<T> {
        &self.e
    }

    pub fn g(&self) -> &LtiSystem<T> {
        &self.g
    }

    pub fn is_proper(&self) -> bool {
        self.e.iter().all(|x| x.is_zero())
    }

    pub fn has_speed_input(&self) -> bool {
        self.g.input_dim() == 3
    }

    /// Port response `s E + G(s)` with the speed input (if any) held at zero.
    pub fn evaluate(&self, s: Cx<T>) -> Result<CMat<T>> {
        let g = self.g.evaluate(s)?;
        Ok(g.columns(0, 2).into_owned() + &self.e * s)
    }

    /// Poles of the rational part. The polynomial part adds none.
    pub fn poles(&self) -> Result<Vec<Cx<T>>> {
        self.g.poles()
    }

    pub fn to_lti(&self) -> Result<LtiSystem<T>> {
        if !self.is_proper() {
            return Err(Error::InvalidParameter("impedance is improper".into()));
        }
        self.port_part()
    }

    fn port_part(&self) -> Result<LtiSystem<T>> {
        self.g.select(&[0, 1], &[0, 1])
    }

    /// Drop the speed input (zero frame speed deviation).
    pub fn without_speed_input(&self) -> Result<Self> {
        Self::new(self.e.clone(), self.port_part()?)
    }

    pub fn rotated(&self, angle: FrameAngle<T>) -> Result<Self> {
        let (r, ri) = rotation(angle);
        let g = self.port_part()?.sandwich(&r, &ri)?;
        Self::new(&r * &self.e * &ri, g)
    }
}

impl<T: Real> From<LtiSystem<T>> for PolyLti<T> {
    fn from(g: LtiSystem<T>) -> Self {
        PolyLti { e: CMat::zeros(2, 2), g }
    }
}

/// A signal as a linear combination `F y + G w` of plant outputs `y` and
/// external inputs `w`.
#[derive(Clone)]
struct Signal<T: Real> {
    f: CMat<T>,
    g: CMat<T>,
}

impl<T: Real> Signal<T> {
    fn zeros(rows: usize, ny: usize, nw: usize) -> Self {
        Signal { f: CMat::zeros(rows, ny), g: CMat::zeros(rows, nw) }
    }
}

/// Shared embedding interconnection. The plant is `[model ; law]` with
/// outputs `[x (2); epsilon; d omega]`. `inner_input` is the signal fed to
/// the model's port (before the `-U0 eps` correction is applied by callers),
/// `out` the external output.
struct Embedding<T: Real> {
    plant: LtiSystem<T>,
    model_inputs: usize,
    ny: usize,
}

impl<T: Real> Embedding<T> {
    fn new(model: &LtiSystem<T>, law: &FramePerturbationLaw<T>) -> Result<Self> {
        let ext = law.with_speed()?;
        Ok(Embedding { plant: model.append(&ext), model_inputs: model.input_dim(), ny: 4 })
    }

    fn build(&self, model_in: &Signal<T>, law_in: &Signal<T>, out: &Signal<T>) -> Result<LtiSystem<T>> {
        let m = self.model_inputs + 2;
        let mut f = CMat::zeros(m, self.ny);
        let mut g = CMat::zeros(m, 2);
        f.rows_mut(0, 2).copy_from(&model_in.f);
        g.rows_mut(0, 2).copy_from(&model_in.g);
        if self.model_inputs == 3 {
            f[(2, 3)] = Cx::one();
        }
        f.rows_mut(self.model_inputs, 2).copy_from(&law_in.f);
        g.rows_mut(self.model_inputs, 2).copy_from(&law_in.g);
        connect(&self.plant, &f, &g, &out.f, &out.g)
    }
}

/// Frame-dynamics embedding of an impedance, `Z' = (Z + V0 K)(I + I0 K)^-1`
/// for a swing-referenced current-governed law, realized as the
/// interconnection in which a port current perturbation drives the frame
/// swing. The speed voltage of the model, when present, is included.
///
/// Voltage-governed laws need a proper impedance.
pub fn embed_impedance<T: Real>(
    z: &PolyLti<T>,
    law: &FramePerturbationLaw<T>,
    ph: &SteadyStatePhasors<T>,
) -> Result<PolyLti<T>> {
    let (v0, i0) = (ph.v_col(), ph.i_col());
    let emb = Embedding::new(&z.g, law)?;
    let ei0 = &z.e * &i0;
    // di = w - I0 eps
    let mut di = Signal::zeros(2, 4, 2);
    // dv' = y + V0 eps - E I0 domega
    let mut dv_steady = Signal::zeros(2, 4, 2);
    for r in 0..2 {
        di.g[(r, r)] = Cx::one();
        di.f[(r, 2)] = -i0[(r, 0)];
        dv_steady.f[(r, r)] = Cx::one();
        dv_steady.f[(r, 2)] = v0[(r, 0)];
        dv_steady.f[(r, 3)] = -ei0[(r, 0)];
    }
    let law_in = match (law.kind, law.reference) {
        (LawKind::CurrentGoverned, LawReference::Swing) => di.clone(),
        (LawKind::CurrentGoverned, LawReference::Steady) => {
            let mut s = Signal::zeros(2, 4, 2);
            s.g = identity2();
            s
        }
        (LawKind::VoltageGoverned, reference) => {
            if !z.is_proper() {
                return Err(Error::InvalidParameter("voltage-governed embedding of an improper impedance".into()));
            }
            let mut s = Signal::zeros(2, 4, 2);
            s.f[(0, 0)] = Cx::one();
            s.f[(1, 1)] = Cx::one();
            if reference == LawReference::Steady {
                s = dv_steady.clone();
            }
            s
        }
    };
    let g = emb.build(&di, &law_in, &dv_steady)?;
    PolyLti::new(z.e.clone(), g)
}

fn identity2<T: Real>() -> CMat<T> {
    crate::linalg::identity(2)
}

/// Frame-dynamics embedding of an admittance. For a swing-referenced law this
/// is `Y' = (Y + I0 K)(I + V0 K)^-1`; for a steady-referenced voltage law it
/// is `Y' = Y (I - V0 K') + I0 K'`. A third model input is driven by the
/// frame speed deviation.
pub fn embed_admittance<T: Real>(
    y: &LtiSystem<T>,
    law: &FramePerturbationLaw<T>,
    ph: &SteadyStatePhasors<T>,
) -> Result<LtiSystem<T>> {
    if y.output_dim() != 2 || !(y.input_dim() == 2 || y.input_dim() == 3) {
        return Err(Error::DimMismatch("admittance must be 2x2 (plus optional speed input)".into()));
    }
    let (v0, i0) = (ph.v_col(), ph.i_col());
    let emb = Embedding::new(y, law)?;
    // dv = w - V0 eps
    let mut dv = Signal::zeros(2, 4, 2);
    // di' = y + I0 eps
    let mut di_steady = Signal::zeros(2, 4, 2);
    let mut di = Signal::zeros(2, 4, 2);
    for r in 0..2 {
        dv.g[(r, r)] = Cx::one();
        dv.f[(r, 2)] = -v0[(r, 0)];
        di_steady.f[(r, r)] = Cx::one();
        di_steady.f[(r, 2)] = i0[(r, 0)];
        di.f[(r, r)] = Cx::one();
    }
    let law_in = match (law.kind, law.reference) {
        (LawKind::VoltageGoverned, LawReference::Swing) => dv.clone(),
        (LawKind::VoltageGoverned, LawReference::Steady) => {
            let mut s = Signal::zeros(2, 4, 2);
            s.g = identity2();
            s
        }
        (LawKind::CurrentGoverned, LawReference::Swing) => di,
        (LawKind::CurrentGoverned, LawReference::Steady) => di_steady.clone(),
    };
    emb.build(&dv, &law_in, &di_steady)
}

fn rotation<T: Real>(angle: FrameAngle<T>) -> (CMat<T>, CMat<T>) {
    let e = Cx::from_polar(T::one(), angle.xi());
    let r = crate::lti::cdiag(&[e, e.conj()]);
    let ri = crate::lti::cdiag(&[e.conj(), e]);
    (r, ri)
}

/// Constant rotation from a local steady frame to the global steady frame:
/// `diag(e^{j xi}, e^{-j xi}) G diag(e^{-j xi}, e^{j xi})`.
pub fn rotate_to_global<T: Real>(g: &LtiSystem<T>, angle: FrameAngle<T>) -> Result<LtiSystem<T>> {
    if g.input_dim() != 2 || g.output_dim() != 2 {
        return Err(Error::DimMismatch("rotation applies to 2x2 port models".into()));
    }
    let (r, ri) = rotation(angle);
    g.sandwich(&r, &ri)
}

/// Phasor of a steady frame at `angle` seen from the outer frame.
pub fn to_frame<T: Real>(u_outer: Cx<T>, angle: FrameAngle<T>) -> Cx<T> {
    u_outer * Cx::from_polar(T::one(), -angle.xi())
}
