//! Machine models: synchronous generator, grid-following converter,
//! infinite bus and passive loads.
//!
//! Port currents flow into the machine (motor convention). Each machine
//! provides a swing-frame model, a frame-perturbation law and an
//! initialization from terminal phasors in the global steady frame.
//! Swing-frame admittances may carry a third input, the frame speed
//! deviation, which the embedding drives from the law.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{
    embed_admittance, embed_impedance, FrameAngle, FramePerturbationLaw, LawKind, LawReference, PolyLti,
    SteadyStatePhasors,
};
use crate::linalg::{identity, CMat};
use crate::lti::{cdiag, cmat, LtiSystem};

type Lti = LtiSystem<f64>;

const J: C64 = C64::new(0.0, 1.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be non-negative, got {x}")))
    }
}

/// `diag(1/(R + (s + j w0) L), 1/(R + (s - j w0) L))`, the admittance of a
/// series RL element in a frame rotating at `w0`.
pub fn rl_admittance(r: f64, l: f64, w0: f64) -> Lti {
    let a = cdiag(&[C64::new(-r / l, -w0), C64::new(-r / l, w0)]);
    Lti::new(a, identity(2), identity::<f64>(2) * c(1.0 / l), CMat::zeros(2, 2)).expect("2x2")
}

/// Real dq realization with a `(+, -)` port: outputs and the first two
/// inputs are mapped through `T = [[1, j], [1, -j]]`, extra inputs pass.
fn dq_to_pm_ports(a: CMat<f64>, b: CMat<f64>, c_: CMat<f64>) -> Result<Lti> {
    let t = cmat(2, 2, &[c(1.0), J, c(1.0), -J]);
    let ti = cmat(2, 2, &[c(0.5), c(0.5), -J * 0.5, J * 0.5]);
    let m = b.ncols();
    let mut tin = identity::<f64>(m);
    tin.view_mut((0, 0), (2, 2)).copy_from(&ti);
    let d = CMat::zeros(2, m);
    Lti::new(a, b * tin, t * c_, d)
}

// ---------------------------------------------------------------------------
// Synchronous generator

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgParams {
    pub r: f64,
    pub l: f64,
    pub j: f64,
    pub d: f64,
    pub w0: f64,
}

impl SgParams {
    pub fn validate(&self) -> Result<()> {
        non_negative("sg.r", self.r)?;
        positive("sg.l", self.l)?;
        positive("sg.j", self.j)?;
        non_negative("sg.d", self.d)?;
        positive("sg.w0", self.w0)
    }
}

/// Steady state in the machine's own frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgOperating {
    pub psi_f: f64,
    pub i_d0: f64,
    pub i_q0: f64,
    pub v_d0: f64,
    pub v_q0: f64,
    pub tm: f64,
}

impl SgOperating {
    pub fn phasors(&self) -> SteadyStatePhasors<f64> {
        SteadyStatePhasors::new(C64::new(self.v_d0, self.v_q0), C64::new(self.i_d0, self.i_q0))
    }

    /// `(psi_d0, psi_q0)`
    pub fn flux(&self, p: &SgParams) -> (f64, f64) {
        (p.l * self.i_d0, p.l * self.i_q0 - self.psi_f)
    }

    /// Residuals of the stator and torque steady-state equations.
    pub fn residual(&self, p: &SgParams) -> [f64; 3] {
        let (pd, pq) = self.flux(p);
        [
            self.v_d0 - p.r * self.i_d0 + p.w0 * pq,
            self.v_q0 - p.r * self.i_q0 - p.w0 * pd,
            self.psi_f * self.i_d0 - self.tm - p.d * p.w0,
        ]
    }
}

/// Solve the steady state from terminal phasors (global frame, current into
/// the machine). The internal emf `v0 - (R + j w0 L) i0 = w0 psi_f e^{j xi}`
/// fixes both the field flux and the frame angle.
pub fn sg_init(p: &SgParams, v0: C64, i0: C64) -> Result<(SgOperating, FrameAngle<f64>)> {
    p.validate()?;
    let e = v0 - C64::new(p.r, p.w0 * p.l) * i0;
    if !(e.norm() > 1e-12 * (1.0 + v0.norm())) {
        return Err(Error::NoEquilibrium("synchronous generator internal emf is zero".into()));
    }
    let xi = FrameAngle::new(e.arg())?;
    let rot = C64::from_polar(1.0, -xi.xi());
    let (v, i) = (v0 * rot, i0 * rot);
    let psi_f = e.norm() / p.w0;
    let op = SgOperating { psi_f, i_d0: i.re, i_q0: i.im, v_d0: v.re, v_q0: v.im, tm: psi_f * i.re - p.d * p.w0 };
    let res = op.residual(p);
    if res.iter().any(|r| !(r.abs() < 1e-10 * (1.0 + v0.norm() + i0.norm()))) {
        return Err(Error::NoEquilibrium(format!("steady-state residual {res:?}")));
    }
    Ok((op, xi))
}

/// `diag(Z_L(s + j w0), Z_L(s - j w0))` with `Z_L(s) = s L + R`. This
/// impedance is improper, so it is returned as `s E + D`.
pub fn sg_swing_impedance(p: &SgParams) -> PolyLti<f64> {
    let d = cdiag(&[C64::new(p.r, p.w0 * p.l), C64::new(p.r, -p.w0 * p.l)]);
    PolyLti::new(identity::<f64>(2) * c(p.l), Lti::make_static(d)).expect("2x2")
}

/// Speed-voltage column `(j psi0+, -j psi0-)`: the swing-frame voltage
/// response to a rotor speed deviation at fixed flux.
pub fn sg_speed_emf(p: &SgParams, op: &SgOperating) -> [C64; 2] {
    let (pd, pq) = op.flux(p);
    let w = J * C64::new(pd, pq);
    [w, w.conj()]
}

/// Swing-frame impedance including the speed-voltage input.
pub fn sg_swing_impedance_exact(p: &SgParams, op: &SgOperating) -> PolyLti<f64> {
    let psi = sg_speed_emf(p, op);
    let d = cmat(2, 3, &[C64::new(p.r, p.w0 * p.l), c(0.0), psi[0], c(0.0), C64::new(p.r, -p.w0 * p.l), psi[1]]);
    PolyLti::new(identity::<f64>(2) * c(p.l), Lti::make_static(d)).expect("2x3")
}

/// Swing-frame admittance, flux states `(psi+, psi-)`.
pub fn sg_swing_admittance(p: &SgParams) -> Lti {
    rl_admittance(p.r, p.l, p.w0)
}

/// Swing-frame admittance with the speed deviation as third input.
pub fn sg_swing_admittance_ext(p: &SgParams, op: &SgOperating) -> Lti {
    let base = sg_swing_admittance(p);
    let psi = sg_speed_emf(p, op);
    let mut b = CMat::zeros(2, 3);
    b.view_mut((0, 0), (2, 2)).copy_from(base.b());
    b[(0, 2)] = -psi[0];
    b[(1, 2)] = -psi[1];
    Lti::new(base.a().clone(), b, base.c().clone(), CMat::zeros(2, 3)).expect("2x3")
}

/// `K_i = psi_f / (2 s (J s + D)) [1, 1]` on states `(d omega, eps)`.
pub fn sg_frame_law(p: &SgParams, op: &SgOperating) -> Result<FramePerturbationLaw<f64>> {
    if op.psi_f == 0.0 {
        return Err(Error::ZeroFieldFlux);
    }
    let g = op.psi_f / (2.0 * p.j);
    let k = Lti::new(
        cmat(2, 2, &[c(-p.d / p.j), c(0.0), c(1.0), c(0.0)]),
        cmat(2, 2, &[c(g), c(g), c(0.0), c(0.0)]),
        cmat(1, 2, &[c(0.0), c(1.0)]),
        CMat::zeros(1, 2),
    )?;
    FramePerturbationLaw::new(LawKind::CurrentGoverned, LawReference::Swing, k)
}

/// Steady-frame impedance (flux part plus frame part), improper.
pub fn sg_steady_impedance(p: &SgParams, op: &SgOperating) -> Result<PolyLti<f64>> {
    embed_impedance(&sg_swing_impedance_exact(p, op), &sg_frame_law(p, op)?, &op.phasors())
}

/// The transformation law applied to the flux-only swing model, without the
/// speed voltage.
pub fn sg_steady_impedance_flux_only(p: &SgParams, op: &SgOperating) -> Result<PolyLti<f64>> {
    embed_impedance(&sg_swing_impedance(p), &sg_frame_law(p, op)?, &op.phasors())
}

/// Steady-frame admittance, 4 states `(psi+, psi-, d omega, eps)`.
pub fn sg_steady_admittance(p: &SgParams, op: &SgOperating) -> Result<Lti> {
    embed_admittance(&sg_swing_admittance_ext(p, op), &sg_frame_law(p, op)?, &op.phasors())
}

/// `M(s) = (2 / psi_f^2) (J s^2 + D s - i_q0 psi_f)`
pub fn sg_m(p: &SgParams, op: &SgOperating, s: C64) -> C64 {
    (s * s * p.j + s * p.d - op.i_q0 * op.psi_f) * (2.0 / (op.psi_f * op.psi_f))
}

/// Roots of `J s^2 + D s - i_q0 psi_f`, larger real part first.
pub fn sg_m_roots(p: &SgParams, op: &SgOperating) -> [C64; 2] {
    let disc = c(p.d * p.d + 4.0 * p.j * op.i_q0 * op.psi_f).sqrt();
    let r1 = (c(-p.d) + disc) / (2.0 * p.j);
    let r2 = (c(-p.d) - disc) / (2.0 * p.j);
    if r1.re >= r2.re {
        [r1, r2]
    } else {
        [r2, r1]
    }
}

/// Closed form of the steady-frame impedance:
/// `diag(Z_L(s1), Z_L(s-1)) + (1/M(s)) [[s1, s1], [s-1, s-1]]`.
pub fn sg_steady_impedance_closed_form(p: &SgParams, op: &SgOperating, s: C64) -> CMat<f64> {
    let s1 = s + J * p.w0;
    let sm = s - J * p.w0;
    let m = sg_m(p, op, s);
    cmat(2, 2, &[s1 * p.l + p.r + s1 / m, s1 / m, sm / m, sm * p.l + p.r + sm / m])
}

// ---------------------------------------------------------------------------
// Grid-following converter

/// Averaged grid-following converter with current vector control, PLL and
/// dc-link voltage control. Gains act on per-unit quantities; the PLL error
/// is `v_q / v_d0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GflParams {
    pub lf: f64,
    pub rf: f64,
    pub cdc: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    pub kp_i: f64,
    pub ki_i: f64,
    pub kp_dc: f64,
    pub ki_dc: f64,
    pub vdc_ref: f64,
    pub w0: f64,
    /// Voltage feedforward and cross-coupling decoupling in the current loop.
    pub feedforward: bool,
}

/// Damping ratio used by [`GflParams::from_bandwidths`].
pub const PI_DAMPING: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// PI gains placing a double-integrator-like loop `g s^2 + kp s + ki` at
/// natural frequency `2 pi f_b`: `kp = 2 zeta wb g`, `ki = wb^2 g`.
pub fn pi_gains(f_b: f64, plant_gain: f64) -> (f64, f64) {
    let wb = 2.0 * std::f64::consts::PI * f_b;
    (2.0 * PI_DAMPING * wb * plant_gain, wb * wb * plant_gain)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GflBandwidths {
    pub pll_hz: f64,
    pub dc_hz: f64,
    pub current_hz: f64,
}

impl GflParams {
    /// Gains from loop bandwidths. Plant normalizations: PLL 1 (error is
    /// already divided by `v_d0`), dc link `Cdc vdc_ref` (unit ac voltage),
    /// current loop `Lf`.
    pub fn from_bandwidths(lf: f64, rf: f64, cdc: f64, vdc_ref: f64, w0: f64, bw: GflBandwidths) -> Self {
        let (kp_pll, ki_pll) = pi_gains(bw.pll_hz, 1.0);
        let (kp_dc, ki_dc) = pi_gains(bw.dc_hz, cdc * vdc_ref);
        let (kp_i, ki_i) = pi_gains(bw.current_hz, lf);
        GflParams { lf, rf, cdc, kp_pll, ki_pll, kp_i, ki_i, kp_dc, ki_dc, vdc_ref, w0, feedforward: true }
    }

    pub fn validate(&self) -> Result<()> {
        positive("gfl.lf", self.lf)?;
        non_negative("gfl.rf", self.rf)?;
        positive("gfl.cdc", self.cdc)?;
        positive("gfl.vdc_ref", self.vdc_ref)?;
        positive("gfl.w0", self.w0)?;
        for (n, g) in [
            ("kp_pll", self.kp_pll),
            ("ki_pll", self.ki_pll),
            ("kp_i", self.kp_i),
            ("ki_i", self.ki_i),
            ("kp_dc", self.kp_dc),
            ("ki_dc", self.ki_dc),
        ] {
            non_negative(n, g)?;
        }
        Ok(())
    }

    fn ff(&self) -> f64 {
        if self.feedforward {
            1.0
        } else {
            0.0
        }
    }
}

/// Steady state in the PLL frame. Currents are the converter output
/// (generation convention); `p_in` and `iq_ref` are the setpoints that make
/// this point an equilibrium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GflOperating {
    pub v_d0: f64,
    pub i_d0: f64,
    pub i_q0: f64,
    pub vdc0: f64,
    pub p_in: f64,
    pub iq_ref: f64,
}

impl GflOperating {
    /// Phasors in motor convention for the embedding.
    pub fn phasors(&self) -> SteadyStatePhasors<f64> {
        SteadyStatePhasors::new(c(self.v_d0), -C64::new(self.i_d0, self.i_q0))
    }

    pub fn i0(&self) -> C64 {
        C64::new(self.i_d0, self.i_q0)
    }

    /// Converter voltage at equilibrium.
    pub fn vc0(&self, p: &GflParams) -> C64 {
        c(self.v_d0) + C64::new(p.rf, p.w0 * p.lf) * self.i0()
    }

    /// Current-controller integrator at equilibrium.
    pub fn xc0(&self, p: &GflParams) -> C64 {
        self.vc0(p) - p.ff() * (c(self.v_d0) + J * p.w0 * p.lf * self.i0())
    }

    pub fn power_residual(&self, p: &GflParams) -> f64 {
        self.p_in - (self.vc0(p) * self.i0().conj()).re
    }
}

/// Operating point from terminal phasors (global frame, current into the
/// converter). The PLL aligns `d` with the terminal voltage.
pub fn gfl_init(p: &GflParams, v0: C64, i0: C64) -> Result<(GflOperating, FrameAngle<f64>)> {
    p.validate()?;
    if !(v0.norm() > 1e-9) {
        return Err(Error::NoEquilibrium("converter terminal voltage is zero".into()));
    }
    let xi = FrameAngle::new(v0.arg())?;
    let i = -i0 * C64::from_polar(1.0, -xi.xi());
    let v_d0 = v0.norm();
    let mut op = GflOperating { v_d0, i_d0: i.re, i_q0: i.im, vdc0: p.vdc_ref, p_in: 0.0, iq_ref: i.im };
    op.p_in = (op.vc0(p) * i.conj()).re;
    let res = op.power_residual(p);
    if !(res.abs() < 1e-10) {
        return Err(Error::NoEquilibrium(format!("dc power balance residual {res:e}")));
    }
    Ok((op, xi))
}

/// Swing-frame admittance with the PLL frequency deviation as third input.
/// States `(i_d, i_q, x_cd, x_cq, v_dc, x_dc)`, real dq coordinates.
pub fn gfl_swing_admittance_ext(p: &GflParams, op: &GflOperating) -> Result<Lti> {
    p.validate()?;
    let (lf, rf, w0, f) = (p.lf, p.rf, p.w0, p.ff());
    let (id0, iq0) = (op.i_d0, op.i_q0);
    let vc0 = op.vc0(p);
    let (kpi, kii, kpd, kid) = (p.kp_i, p.ki_i, p.kp_dc, p.ki_dc);
    const ID: usize = 0;
    const IQ: usize = 1;
    const XD: usize = 2;
    const XQ: usize = 3;
    const VDC: usize = 4;
    const XDC: usize = 5;
    let mut a = [[0.0; 6]; 6];
    let mut b = [[0.0; 3]; 6];
    // converter voltage perturbation, rows d and q over [x; u]
    let mut dvcd = [0.0; 9];
    let mut dvcq = [0.0; 9];
    dvcd[ID] = -kpi;
    dvcd[IQ] = -f * w0 * lf;
    dvcd[XD] = 1.0;
    dvcd[VDC] = kpi * kpd;
    dvcd[XDC] = kpi;
    dvcd[6] = f;
    dvcd[8] = -f * lf * iq0;
    dvcq[ID] = f * w0 * lf;
    dvcq[IQ] = -kpi;
    dvcq[XQ] = 1.0;
    dvcq[7] = f;
    dvcq[8] = f * lf * id0;
    let mut row = |r: usize, coeffs: &[f64; 9]| {
        for k in 0..6 {
            a[r][k] += coeffs[k];
        }
        for k in 0..3 {
            b[r][k] += coeffs[6 + k];
        }
    };
    // Lf id' = vcd - vd - Rf id + w Lf iq
    let mut fd = dvcd.map(|x| x / lf);
    fd[ID] -= rf / lf;
    fd[IQ] += w0;
    fd[6] -= 1.0 / lf;
    fd[8] += iq0;
    row(ID, &fd);
    // Lf iq' = vcq - vq - Rf iq - w Lf id
    let mut fq = dvcq.map(|x| x / lf);
    fq[IQ] -= rf / lf;
    fq[ID] -= w0;
    fq[7] -= 1.0 / lf;
    fq[8] -= id0;
    row(IQ, &fq);
    // x_cd' = ki (id* - id), x_cq' = ki (iq* - iq)
    let mut xd = [0.0; 9];
    xd[ID] = -kii;
    xd[VDC] = kii * kpd;
    xd[XDC] = kii;
    row(XD, &xd);
    let mut xq = [0.0; 9];
    xq[IQ] = -kii;
    row(XQ, &xq);
    // Cdc vdc vdc' = Pin - (vcd id + vcq iq)
    let scale = -1.0 / (p.cdc * op.vdc0);
    let mut dp = [0.0; 9];
    for k in 0..9 {
        dp[k] = (dvcd[k] * id0 + dvcq[k] * iq0) * scale;
    }
    dp[ID] += vc0.re * scale;
    dp[IQ] += vc0.im * scale;
    row(VDC, &dp);
    let mut xdc = [0.0; 9];
    xdc[VDC] = kid;
    row(XDC, &xdc);

    let am = CMat::from_fn(6, 6, |r, k| c(a[r][k]));
    let bm = CMat::from_fn(6, 3, |r, k| c(b[r][k]));
    // port current flows into the converter
    let cm = CMat::from_fn(2, 6, |r, k| if r == k { c(-1.0) } else { c(0.0) });
    dq_to_pm_ports(am, bm, cm)
}

pub fn gfl_swing_admittance(p: &GflParams, op: &GflOperating) -> Result<Lti> {
    gfl_swing_admittance_ext(p, op)?.select(&[0, 1], &[0, 1])
}

fn pll_input_row(gain: f64) -> [C64; 2] {
    // v_q = (v+ - v-) / (2j)
    let h = gain / (2.0 * J);
    [h, -h]
}

/// PLL law as seen by the controller: swing-frame `v_q` drives the angle.
/// `K(s) = (kp s + ki) / (2j v_d0 s^2) [1, -1]`, states `(eps, x_pll)`.
pub fn pll_swing_law(p: &GflParams, op: &GflOperating) -> Result<FramePerturbationLaw<f64>> {
    if op.v_d0 == 0.0 {
        return Err(Error::ZeroVoltage);
    }
    let kp = pll_input_row(p.kp_pll / op.v_d0);
    let ki = pll_input_row(p.ki_pll / op.v_d0);
    let k = Lti::new(
        cmat(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]),
        cmat(2, 2, &[kp[0], kp[1], ki[0], ki[1]]),
        cmat(1, 2, &[c(1.0), c(0.0)]),
        CMat::zeros(1, 2),
    )?;
    FramePerturbationLaw::new(LawKind::VoltageGoverned, LawReference::Swing, k)
}

/// `K_v = 1 / (2j H_PLL) [1, -1]` with `H_PLL = v_d0 + v_d0 s^2 / (kp s + ki)`,
/// i.e. `(kp s + ki) / (2j v_d0 (s^2 + kp s + ki)) [1, -1]`. This law takes
/// steady-frame voltage.
pub fn pll_frame_law(p: &GflParams, op: &GflOperating) -> Result<FramePerturbationLaw<f64>> {
    if op.v_d0 == 0.0 {
        return Err(Error::ZeroVoltage);
    }
    let kp = pll_input_row(p.kp_pll / op.v_d0);
    let ki = pll_input_row(p.ki_pll / op.v_d0);
    let k = Lti::new(
        cmat(2, 2, &[c(-p.kp_pll), c(1.0), c(-p.ki_pll), c(0.0)]),
        cmat(2, 2, &[kp[0], kp[1], ki[0], ki[1]]),
        cmat(1, 2, &[c(1.0), c(0.0)]),
        CMat::zeros(1, 2),
    )?;
    FramePerturbationLaw::new(LawKind::VoltageGoverned, LawReference::Steady, k)
}

/// Steady-frame admittance, 8 states.
pub fn gfl_steady_admittance(p: &GflParams, op: &GflOperating) -> Result<Lti> {
    embed_admittance(&gfl_swing_admittance_ext(p, op)?, &pll_frame_law(p, op)?, &op.phasors())
}

// ---------------------------------------------------------------------------
// Infinite bus and loads

/// Constant emf behind a series RL impedance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfiniteBusParams {
    pub r: f64,
    pub l: f64,
    pub w0: f64,
}

/// Source emf (global frame) that makes `(v0, i0)` an equilibrium.
pub fn infinite_bus_init(p: &InfiniteBusParams, v0: C64, i0: C64) -> Result<C64> {
    non_negative("infinite_bus.r", p.r)?;
    positive("infinite_bus.l", p.l)?;
    Ok(v0 - C64::new(p.r, p.w0 * p.l) * i0)
}

pub fn infinite_bus_admittance(p: &InfiniteBusParams) -> Lti {
    rl_admittance(p.r, p.l, p.w0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKind {
    ShuntR,
    ShuntRc,
    ShuntRl,
}

/// `x` is the capacitance (RC) or inductance (RL); unused for R.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadParams {
    pub kind: LoadKind,
    pub r: f64,
    pub x: f64,
    pub w0: f64,
}

/// Shunt load admittance. The RC load is improper and carries its
/// capacitance in the polynomial part.
pub fn load_admittance(p: &LoadParams) -> Result<PolyLti<f64>> {
    positive("load.r", p.r)?;
    match p.kind {
        LoadKind::ShuntR => Ok(PolyLti::from(Lti::make_static(identity::<f64>(2) * c(1.0 / p.r)))),
        LoadKind::ShuntRc => {
            non_negative("load.x", p.x)?;
            let d = cdiag(&[C64::new(1.0 / p.r, p.w0 * p.x), C64::new(1.0 / p.r, -p.w0 * p.x)]);
            PolyLti::new(identity::<f64>(2) * c(p.x), Lti::make_static(d))
        }
        LoadKind::ShuntRl => {
            positive("load.x", p.x)?;
            Ok(PolyLti::from(rl_admittance(p.r, p.x, p.w0)))
        }
    }
}
