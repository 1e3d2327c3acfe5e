//! Nonlinear time-domain simulation of the whole grid in the global frame
//! rotating at `w0`, with finite-difference linearization and admittance
//! measurement by small-signal injection.
//!
//! Space vectors are `u = u_d + j u_q`; the state vector stores them as
//! `(d, q)` pairs. Machine currents follow the motor convention.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GridConfig;
use crate::error::{Error, Result};
use crate::frames::{embed_admittance, SteadyStatePhasors};
use crate::machines::{
    gfl_swing_admittance_ext, pll_swing_law, sg_frame_law, sg_swing_admittance_ext, GflParams, InfiniteBusParams,
    SgParams,
};
use crate::sysmodel::{build_default_model, Formulation, FrequencySample};
use crate::system::{machine_params, network_from_config, MachineInstance, MachineModel, MachineParamsKind, System};
use crate::Lti;

const J: C64 = C64::new(0.0, 1.0);
/// Largest state magnitude (pu) before a run is declared blown up.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Finite-difference step for [`linearize`].
pub const FD_STEP: f64 = 1e-7;

fn get(x: &[f64], k: usize) -> C64 {
    C64::new(x[k], x[k + 1])
}

fn put(dx: &mut [f64], k: usize, v: C64) {
    dx[k] = v.re;
    dx[k + 1] = v.im;
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    /// States `psi_d, psi_q` (rotor frame), `omega`, `theta`.
    Sg { p: SgParams, psi_f: f64, tm: f64 },
    /// States `i_d, i_q, x_cd, x_cq, v_dc, x_dc, x_pll, theta` in the PLL frame;
    /// `i` is the output current.
    Gfl { p: GflParams, vn: f64, p_in: f64, iq_ref: f64 },
    /// State `i` (global frame).
    Inf { p: InfiniteBusParams, emf: C64 },
}

#[derive(Clone, Debug, PartialEq)]
struct Machine {
    bus: usize,
    kind: Kind,
    at: usize,
}

impl Machine {
    fn n_states(&self) -> usize {
        match self.kind {
            Kind::Sg { .. } => 4,
            Kind::Gfl { .. } => 8,
            Kind::Inf { .. } => 2,
        }
    }

    /// Frame angle relative to the global frame.
    fn theta(&self, x: &[f64]) -> f64 {
        match self.kind {
            Kind::Sg { .. } => x[self.at + 3],
            Kind::Gfl { .. } => x[self.at + 7],
            Kind::Inf { .. } => 0.0,
        }
    }

    fn current(&self, x: &[f64]) -> C64 {
        let a = self.at;
        match &self.kind {
            Kind::Sg { p, psi_f, .. } => C64::from_polar(1.0, x[a + 3]) * (get(x, a) + J * *psi_f) / p.l,
            Kind::Gfl { .. } => -C64::from_polar(1.0, x[a + 7]) * get(x, a),
            Kind::Inf { .. } => get(x, a),
        }
    }

    /// Writes the state derivative for terminal voltage `v` (global frame).
    fn deriv(&self, x: &[f64], v: C64, w0: f64, dx: &mut [f64]) {
        let a = self.at;
        match &self.kind {
            Kind::Sg { p, psi_f, tm } => {
                let th = x[a + 3];
                let w = x[a + 2];
                let psi = get(x, a);
                let i = (psi + J * *psi_f) / p.l;
                let vr = C64::from_polar(1.0, -th) * v;
                put(dx, a, vr - i * p.r - J * w * psi);
                dx[a + 2] = (psi_f * i.re - tm - p.d * w) / p.j;
                dx[a + 3] = w - w0;
            }
            Kind::Gfl { p, vn, p_in, iq_ref } => {
                let th = x[a + 7];
                let i = get(x, a);
                let xc = get(x, a + 2);
                let (vdc, xdc, xpll) = (x[a + 4], x[a + 5], x[a + 6]);
                let vl = C64::from_polar(1.0, -th) * v;
                let e = vl.im / vn;
                let w = w0 + p.kp_pll * e + xpll;
                let ff = if p.feedforward { 1.0 } else { 0.0 };
                let iref = C64::new(p.kp_dc * (vdc - p.vdc_ref) + xdc, *iq_ref);
                let err = iref - i;
                let vc = (vl + J * w * p.lf * i) * ff + err * p.kp_i + xc;
                put(dx, a, (vc - vl - i * p.rf - J * w * p.lf * i) / p.lf);
                put(dx, a + 2, err * p.ki_i);
                dx[a + 4] = (p_in - (vc * i.conj()).re) / (p.cdc * vdc);
                dx[a + 5] = p.ki_dc * (vdc - p.vdc_ref);
                dx[a + 6] = p.ki_pll * e;
                dx[a + 7] = w - w0;
            }
            Kind::Inf { p, emf } => {
                let i = get(x, a);
                put(dx, a, (v - emf - i * p.r - J * w0 * p.l * i) / p.l);
            }
        }
    }

    /// Frame speed (rad/s) given the terminal voltage.
    fn frame_speed(&self, x: &[f64], v: C64, w0: f64) -> f64 {
        let a = self.at;
        match &self.kind {
            Kind::Sg { .. } => x[a + 2],
            Kind::Gfl { p, vn, .. } => {
                let vl = C64::from_polar(1.0, -x[a + 7]) * v;
                w0 + p.kp_pll * vl.im / vn + x[a + 6]
            }
            Kind::Inf { .. } => w0,
        }
    }

    fn set_params(&mut self, new: MachineParamsKind) -> Result<()> {
        match (&mut self.kind, new) {
            (Kind::Sg { p, .. }, MachineParamsKind::Sg(q)) => *p = q,
            (Kind::Gfl { p, .. }, MachineParamsKind::Gfl(q)) => *p = q,
            (Kind::Inf { p, .. }, MachineParamsKind::InfiniteBus(q)) => *p = q,
            _ => return Err(Error::EventPathInvalid("machine kind cannot change during a run".into())),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Bus {
    g: f64,
    c: f64,
    at: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Element {
    from: usize,
    to: Option<usize>,
    r: f64,
    l: f64,
    at: usize,
}

/// Which side of bus `k` a series voltage injection drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionSide {
    /// Branches and RL loads see `v_k + v_hat`; the response is the current
    /// into the network at bus `k`.
    Network,
    /// The machine sees `v_k - v_hat`; the response is its output current.
    Machine,
}

impl InjectionSide {
    pub fn for_formulation(f: Formulation) -> Self {
        match f {
            Formulation::Primal => InjectionSide::Network,
            Formulation::Dual => InjectionSide::Machine,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Series {
    bus: usize,
    side: InjectionSide,
    dir: C64,
    amp: f64,
    w: f64,
}

impl Series {
    fn value(&self, t: f64) -> C64 {
        self.dir * (self.amp * (self.w * t).cos())
    }
}

/// The full nonlinear grid model.
#[derive(Clone, Debug, PartialEq)]
pub struct EmtModel {
    w0: f64,
    buses: Vec<Bus>,
    elements: Vec<Element>,
    machines: Vec<Machine>,
    n: usize,
    series: Option<Series>,
    x0: Vec<f64>,
    config: GridConfig,
}

impl EmtModel {
    /// Model and equilibrium state of a solved system.
    pub fn new(sys: &System) -> Result<EmtModel> {
        let w0 = sys.w0();
        let net = &sys.net;
        let (g, c) = net.shunt_totals();
        let mut n = 0;
        let mut buses = Vec::with_capacity(net.n_buses);
        for k in 0..net.n_buses {
            if !(g[k] > 0.0 || c[k] > 0.0) {
                return Err(Error::MissingShunt(k + 1));
            }
            let at = (c[k] > 0.0).then(|| {
                n += 2;
                n - 2
            });
            buses.push(Bus { g: g[k], c: c[k], at });
        }
        let mut elements = Vec::new();
        for b in &net.branches {
            elements.push(Element { from: b.from - 1, to: Some(b.to - 1), r: b.r, l: b.l, at: n });
            n += 2;
        }
        for l in &net.rl_loads {
            elements.push(Element { from: l.bus - 1, to: None, r: l.r, l: l.l, at: n });
            n += 2;
        }
        let mut machines = Vec::new();
        for m in &sys.machines {
            let kind = match &m.model {
                MachineModel::Sg { params, op } => Kind::Sg { p: *params, psi_f: op.psi_f, tm: op.tm },
                MachineModel::Gfl { params, op } => {
                    Kind::Gfl { p: *params, vn: op.v_d0, p_in: op.p_in, iq_ref: op.iq_ref }
                }
                MachineModel::InfiniteBus { params, emf } => Kind::Inf { p: *params, emf: *emf },
            };
            let mach = Machine { bus: m.bus - 1, kind, at: n };
            n += mach.n_states();
            machines.push(mach);
        }
        let mut model =
            EmtModel { w0, buses, elements, machines, n, series: None, x0: vec![], config: sys.config.clone() };
        model.x0 = model.equilibrium(sys);
        Ok(model)
    }

    pub fn from_config(cfg: &GridConfig) -> Result<EmtModel> {
        EmtModel::new(&System::build(cfg)?)
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.x0
    }

    fn equilibrium(&self, sys: &System) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        let v = &sys.op.v;
        for (k, b) in self.buses.iter().enumerate() {
            if let Some(at) = b.at {
                put(&mut x, at, v[k]);
            }
        }
        for e in &self.elements {
            let dv = v[e.from] - e.to.map_or(C64::new(0.0, 0.0), |t| v[t]);
            put(&mut x, e.at, dv / C64::new(e.r, self.w0 * e.l));
        }
        for (m, inst) in self.machines.iter().zip(&sys.machines) {
            let a = m.at;
            match (&m.kind, &inst.model) {
                (Kind::Sg { p, .. }, MachineModel::Sg { op, .. }) => {
                    let (pd, pq) = op.flux(p);
                    put(&mut x, a, C64::new(pd, pq));
                    x[a + 2] = self.w0;
                    x[a + 3] = inst.angle.xi();
                }
                (Kind::Gfl { p, .. }, MachineModel::Gfl { op, .. }) => {
                    put(&mut x, a, op.i0());
                    put(&mut x, a + 2, op.xc0(p));
                    x[a + 4] = op.vdc0;
                    x[a + 5] = op.i_d0;
                    x[a + 6] = 0.0;
                    x[a + 7] = inst.angle.xi();
                }
                (Kind::Inf { .. }, _) => {
                    let k = m.bus;
                    put(&mut x, a, -sys.op.i_inj[k]);
                }
                _ => unreachable!("machine list built from the same system"),
            }
        }
        x
    }

    /// Bus voltages (global frame) for a state.
    pub fn bus_voltages(&self, x: &[f64]) -> Vec<C64> {
        let mut inj = vec![C64::new(0.0, 0.0); self.buses.len()];
        for e in &self.elements {
            let i = get(x, e.at);
            inj[e.from] += i;
            if let Some(t) = e.to {
                inj[t] -= i;
            }
        }
        for m in &self.machines {
            inj[m.bus] += m.current(x);
        }
        self.buses
            .iter()
            .zip(&inj)
            .map(|(b, i)| match b.at {
                Some(at) => get(x, at),
                None => -i / b.g,
            })
            .collect()
    }

    /// Current leaving bus `k` into the network (branches and RL loads).
    fn network_current(&self, x: &[f64], k: usize) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for e in &self.elements {
            if e.from == k {
                s += get(x, e.at);
            }
            if e.to == Some(k) {
                s -= get(x, e.at);
            }
        }
        s
    }

    pub fn rhs(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let v = self.bus_voltages(x);
        let vhat = |k: usize, side: InjectionSide| -> C64 {
            match self.series {
                Some(s) if s.bus == k && s.side == side => s.value(t),
                _ => C64::new(0.0, 0.0),
            }
        };
        let mut net_i = vec![C64::new(0.0, 0.0); self.buses.len()];
        for e in &self.elements {
            let i = get(x, e.at);
            let va = v[e.from] + vhat(e.from, InjectionSide::Network);
            let vb = e.to.map_or(C64::new(0.0, 0.0), |t| v[t] + vhat(t, InjectionSide::Network));
            put(dx, e.at, (va - vb - i * e.r - J * self.w0 * e.l * i) / e.l);
            net_i[e.from] += i;
            if let Some(t) = e.to {
                net_i[t] -= i;
            }
        }
        for m in &self.machines {
            let vt = v[m.bus] - vhat(m.bus, InjectionSide::Machine);
            m.deriv(x, vt, self.w0, dx);
            net_i[m.bus] += m.current(x);
        }
        for (k, b) in self.buses.iter().enumerate() {
            if let Some(at) = b.at {
                let dv = (-net_i[k] - v[k] * b.g) / b.c - J * self.w0 * v[k];
                put(dx, at, dv);
            }
        }
    }

    /// Apply a parameter change from a modified configuration. The network
    /// topology and machine kinds must not change.
    pub fn apply_config(&mut self, cfg: &GridConfig) -> Result<()> {
        let net = network_from_config(cfg);
        let (g, c) = net.shunt_totals();
        if net.n_buses != self.buses.len() || net.branches.len() + net.rl_loads.len() != self.elements.len() {
            return Err(Error::EventPathInvalid("network topology cannot change during a run".into()));
        }
        for (k, b) in self.buses.iter_mut().enumerate() {
            if (b.c > 0.0) != (c[k] > 0.0) {
                return Err(Error::EventPathInvalid(format!("bus {} capacitance cannot appear or vanish", k + 1)));
            }
            b.g = g[k];
            b.c = c[k];
        }
        let rl: Vec<(f64, f64)> =
            net.branches.iter().map(|b| (b.r, b.l)).chain(net.rl_loads.iter().map(|l| (l.r, l.l))).collect();
        for (e, (r, l)) in self.elements.iter_mut().zip(rl) {
            e.r = r;
            e.l = l;
        }
        let mut cfgs: Vec<_> = cfg.machines.iter().collect();
        cfgs.sort_by_key(|m| m.bus());
        if cfgs.len() != self.machines.len() {
            return Err(Error::EventPathInvalid("machines cannot be added or removed during a run".into()));
        }
        for (m, mc) in self.machines.iter_mut().zip(cfgs) {
            m.set_params(machine_params(mc, self.w0))?;
        }
        self.config = cfg.clone();
        Ok(())
    }

    fn machine_index(&self, bus: usize) -> Option<usize> {
        self.machines.iter().position(|m| m.bus + 1 == bus)
    }

    /// Value of a named probe. See [`SimScenario`] for the names.
    pub fn probe(&self, name: &str, x: &[f64]) -> Result<f64> {
        let bad = || Error::EventPathInvalid(format!("unknown probe {name:?}"));
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let v = || self.bus_voltages(x);
        if let Some((a, b)) = name.strip_prefix("th").and_then(|r| r.split_once('-')) {
            let (a, b) = (num(a)?, num(b)?);
            let ma = self.machine_index(a).ok_or_else(bad)?;
            let mb = self.machine_index(b).ok_or_else(bad)?;
            return Ok(self.machines[ma].theta(x) - self.machines[mb].theta(x));
        }
        if let Some(r) = name.strip_prefix("vdc") {
            let m = &self.machines[self.machine_index(num(r)?).ok_or_else(bad)?];
            return match m.kind {
                Kind::Gfl { .. } => Ok(x[m.at + 4]),
                _ => Err(bad()),
            };
        }
        if let Some(r) = name.strip_prefix("th") {
            let m = &self.machines[self.machine_index(num(r)?).ok_or_else(bad)?];
            return Ok(m.theta(x));
        }
        if let Some(r) = name.strip_prefix('w') {
            let m = &self.machines[self.machine_index(num(r)?).ok_or_else(bad)?];
            let vb = v()[m.bus];
            return Ok(m.frame_speed(x, vb, self.w0) / self.w0);
        }
        let (head, comp) = name.split_once('.').ok_or_else(bad)?;
        let z = if let Some(r) = head.strip_prefix('v') {
            let k = num(r)?;
            *v().get(k.wrapping_sub(1)).ok_or_else(bad)?
        } else if let Some(r) = head.strip_prefix('i') {
            let m = &self.machines[self.machine_index(num(r)?).ok_or_else(bad)?];
            m.current(x)
        } else {
            return Err(bad());
        };
        match comp {
            "d" => Ok(z.re),
            "q" => Ok(z.im),
            "abs" => Ok(z.norm()),
            _ => Err(bad()),
        }
    }

    /// Add `delta` to the state behind a probe-like target: `v{k}.d`,
    /// `v{k}.q` (capacitive buses), `w{k}` (pu speed of a generator or PLL
    /// integrator), `th{k}` (rad), `vdc{k}`.
    pub fn kick(&self, x: &mut [f64], target: &str, delta: f64) -> Result<()> {
        let bad = || Error::EventPathInvalid(format!("cannot kick {target:?}"));
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let machine =
            |r: &str| -> Result<&Machine> { Ok(&self.machines[self.machine_index(num(r)?).ok_or_else(bad)?]) };
        if let Some(r) = target.strip_prefix("vdc") {
            let m = machine(r)?;
            return match m.kind {
                Kind::Gfl { .. } => {
                    x[m.at + 4] += delta;
                    Ok(())
                }
                _ => Err(bad()),
            };
        }
        if let Some(r) = target.strip_prefix("th") {
            let m = machine(r)?;
            match m.kind {
                Kind::Sg { .. } => x[m.at + 3] += delta,
                Kind::Gfl { .. } => x[m.at + 7] += delta,
                Kind::Inf { .. } => return Err(bad()),
            }
            return Ok(());
        }
        if let Some(r) = target.strip_prefix('w') {
            let m = machine(r)?;
            match m.kind {
                Kind::Sg { .. } => x[m.at + 2] += delta * self.w0,
                Kind::Gfl { .. } => x[m.at + 6] += delta * self.w0,
                Kind::Inf { .. } => return Err(bad()),
            }
            return Ok(());
        }
        if let Some((head, comp)) = target.split_once('.') {
            if let Some(r) = head.strip_prefix('v') {
                let k = num(r)?;
                let at = self.buses.get(k.wrapping_sub(1)).and_then(|b| b.at).ok_or_else(bad)?;
                match comp {
                    "d" => x[at] += delta,
                    "q" => x[at + 1] += delta,
                    _ => return Err(bad()),
                }
                return Ok(());
            }
        }
        Err(bad())
    }
}

fn check_state(x: &[f64], t: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_LIMIT) {
        return Err(Error::StateBlowup { time: t });
    }
    Ok(())
}

/// Classic fourth-order Runge-Kutta with reusable buffers.
struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    fn step(&mut self, f: &impl Fn(f64, &[f64], &mut [f64]), t: f64, x: &mut [f64], h: f64) {
        let n = x.len();
        let [k1, k2, k3, k4] = &mut self.k;
        f(t, x, k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        f(t + 0.5 * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        f(t + 0.5 * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = x[i] + h * k3[i];
        }
        f(t + h, &self.tmp, k4);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
}

/// A timed action: set a configuration parameter (`path`, `value`) or kick a
/// state (`kick`, `delta`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEvent {
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kick: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Simulation run description.
///
/// Probe names: `v{k}.d`, `v{k}.q`, `v{k}.abs` (bus voltage), `i{k}.d`,
/// `i{k}.q`, `i{k}.abs` (machine current at bus `k`, into the machine),
/// `w{k}` (rotor or PLL speed, pu), `vdc{k}`, `th{k}` (frame angle, rad),
/// `th{a}-{b}` (angle difference).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScenario {
    pub t_end: f64,
    /// Integration step; the configuration's solver step when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Output sampling interval, rounded to a whole number of steps.
    #[serde(default = "default_output_dt")]
    pub output_dt: f64,
    #[serde(default)]
    pub events: Vec<SimEvent>,
    #[serde(default)]
    pub probes: Vec<String>,
}

fn default_output_dt() -> f64 {
    1e-3
}

impl SimScenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut v: serde_json::Value = serde_json::from_str(s)
            .map_err(|e| Error::SchemaError { pointer: String::new(), message: e.to_string() })?;
        crate::config::strip_comments(&mut v);
        serde_path_to_error::deserialize(v).map_err(|e| Error::SchemaError {
            pointer: format!("/{}", e.path().to_string().replace('.', "/").replace(['[', ']'], "")),
            message: e.into_inner().to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    /// `time` followed by the probe names.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn default_probes(m: &EmtModel) -> Vec<String> {
    let mut p: Vec<String> = (1..=m.buses.len()).map(|k| format!("v{k}.abs")).collect();
    for mach in &m.machines {
        if !matches!(mach.kind, Kind::Inf { .. }) {
            p.push(format!("w{}", mach.bus + 1));
        }
    }
    p
}

/// Fixed-step simulation from the equilibrium of `cfg`. Events are applied
/// at the first step boundary at or after their time.
pub fn simulate(cfg: &GridConfig, sc: &SimScenario) -> Result<TimeSeries> {
    let dt = sc.dt.unwrap_or(cfg.solver.dt);
    if !(dt > 0.0) || !(sc.t_end > 0.0) || !(sc.output_dt > 0.0) {
        return Err(Error::InvalidParameter("t_end, dt and output_dt must be positive".into()));
    }
    if sc.events.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::InvalidParameter("events must be time-ordered".into()));
    }
    let mut model = EmtModel::from_config(cfg)?;
    let probes = if sc.probes.is_empty() { default_probes(&model) } else { sc.probes.clone() };
    let mut x = model.x0.clone();
    for p in &probes {
        model.probe(p, &x)?;
    }
    // validate events up front so a bad path fails before any work
    let mut cfg_now = cfg.clone();
    let mut actions = Vec::new();
    for (i, ev) in sc.events.iter().enumerate() {
        let step = (ev.time / dt - 1e-9).ceil().max(0.0) as usize;
        match (&ev.path, ev.value, &ev.kick, ev.delta) {
            (Some(p), Some(v), None, None) => {
                cfg_now = cfg_now.with_parameter(p, v)?;
                model.clone().apply_config(&cfg_now)?;
                actions.push((step, Some(cfg_now.clone()), None));
            }
            (None, None, Some(k), Some(d)) => {
                model.kick(&mut x.clone(), k, d)?;
                actions.push((step, None, Some((k.clone(), d))));
            }
            _ => {
                return Err(Error::EventPathInvalid(format!(
                    "/events/{i}: needs either path and value or kick and delta"
                )))
            }
        }
    }
    let n_steps = (sc.t_end / dt).round() as usize;
    let every = ((sc.output_dt / dt).round() as usize).max(1);
    let mut rk = Rk4::new(model.n);
    let mut columns = vec!["time".to_string()];
    columns.extend(probes.iter().cloned());
    let mut rows = Vec::with_capacity(n_steps / every + 2);
    let mut next = 0;
    for step in 0..=n_steps {
        while next < actions.len() && actions[next].0 <= step {
            let (_, c, k) = &actions[next];
            if let Some(c) = c {
                model.apply_config(c)?;
            }
            if let Some((target, d)) = k {
                model.kick(&mut x, target, *d)?;
            }
            next += 1;
        }
        let t = step as f64 * dt;
        if step % every == 0 || step == n_steps {
            let mut row = Vec::with_capacity(probes.len() + 1);
            row.push(t);
            for p in &probes {
                row.push(model.probe(p, &x)?);
            }
            rows.push(row);
        }
        if step == n_steps {
            break;
        }
        let m = &model;
        rk.step(&|t, x, dx| m.rhs(t, x, dx), t, &mut x, dt);
        check_state(&x, t + dt)?;
    }
    Ok(TimeSeries { columns, rows })
}

/// Central finite-difference Jacobian of the right-hand side at the
/// equilibrium. Fails with `NoEquilibrium` when the equilibrium residual is
/// not small.
pub fn linearize(cfg: &GridConfig) -> Result<DMatrix<f64>> {
    linearize_model(&EmtModel::from_config(cfg)?)
}

pub fn linearize_model(m: &EmtModel) -> Result<DMatrix<f64>> {
    let n = m.n;
    let mut f0 = vec![0.0; n];
    m.rhs(0.0, &m.x0, &mut f0);
    let res = f0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(res < 1e-6) {
        return Err(Error::NoEquilibrium(format!("right-hand side residual {res:e} at the initial state")));
    }
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut xp = m.x0.clone();
            let mut xm = m.x0.clone();
            xp[k] += FD_STEP;
            xm[k] -= FD_STEP;
            let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
            m.rhs(0.0, &xp, &mut fp);
            m.rhs(0.0, &xm, &mut fm);
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
}

/// Eigenvalues of a real Jacobian, sorted by imaginary then real part.
pub fn jacobian_eigenvalues(jac: &DMatrix<f64>) -> Vec<C64> {
    let mut ev: Vec<C64> = jac.complex_eigenvalues().iter().copied().collect();
    crate::eig::sort_by_im_re(&mut ev);
    ev
}

/// Growth rate `sigma` of an oscillation from the peaks of `|y - y_ref|`
/// (least-squares fit of `ln|peak|` against time). `None` with fewer than
/// three peaks.
pub fn fit_decay_rate(t: &[f64], y: &[f64], y_ref: f64) -> Option<f64> {
    let d: Vec<f64> = y.iter().map(|v| (v - y_ref).abs()).collect();
    let mut pts = Vec::new();
    for i in 1..d.len().saturating_sub(1) {
        if d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > 0.0 {
            pts.push((t[i], d[i].ln()));
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mt, my) = (st / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mt) * (p.1 - my), a.1 + (p.0 - mt).powi(2)));
    (den > 0.0).then(|| num / den)
}

// ---------------------------------------------------------------------------
// Admittance measurement

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureFrame {
    Steady,
    Swing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureTarget {
    /// Closed-loop bus admittance (series injection at the bus), global frame.
    Bus,
    /// The machine at the bus alone behind an ideal voltage source, in its
    /// own steady or swing frame.
    Machine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub bus: usize,
    pub target: MeasureTarget,
    pub frame: MeasureFrame,
    pub amplitude: f64,
    pub freqs_hz: Vec<f64>,
    pub settle_cycles: f64,
    pub measure_cycles: f64,
    /// Lower bounds on the settle and measurement windows (s); the cycle
    /// counts are raised to meet them.
    pub min_settle_s: f64,
    pub min_measure_s: f64,
    /// Largest step; each frequency uses the largest step that fits a whole
    /// number of steps per period.
    pub dt: f64,
    /// Undo the one-step lag of the sampled current.
    pub compensate_delay: bool,
}

impl InjectionSpec {
    pub fn new(bus: usize, target: MeasureTarget, frame: MeasureFrame, freqs_hz: Vec<f64>) -> Self {
        InjectionSpec {
            bus,
            target,
            frame,
            amplitude: 1e-3,
            freqs_hz,
            settle_cycles: 10.0,
            measure_cycles: 10.0,
            min_settle_s: 2.0,
            min_measure_s: 0.5,
            dt: 20e-6,
            compensate_delay: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude <= 1e-2) {
            return Err(Error::InvalidParameter("injection amplitude must be in (0, 1e-2] pu".into()));
        }
        for (name, c) in [("settle_cycles", self.settle_cycles), ("measure_cycles", self.measure_cycles)] {
            if !(c >= 0.0 && c.fract() == 0.0) || (name == "measure_cycles" && c < 1.0) {
                return Err(Error::LeakageDetected(format!("{name} = {c} is not a whole number of cycles")));
            }
        }
        if let Some(f) = self.freqs_hz.iter().find(|f| !(f.abs() > 0.0) || !f.is_finite()) {
            return Err(Error::LeakageDetected(format!("frequency {f} Hz has no finite period")));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        Ok(())
    }
}

/// Window plan for one frequency: step, steps per period, settle and
/// measurement periods.
fn plan(spec: &InjectionSpec, f: f64) -> (f64, usize, usize, usize) {
    let period = 1.0 / f.abs();
    let per = (period / spec.dt).ceil() as usize;
    let h = period / per as f64;
    let settle = (spec.settle_cycles as usize).max((spec.min_settle_s * f.abs()).ceil() as usize);
    let meas = (spec.measure_cycles as usize).max((spec.min_measure_s * f.abs()).ceil() as usize);
    (h, per, settle, meas)
}

/// Single-bin DFT accumulator.
struct Bin {
    w: f64,
    acc: [C64; 2],
    n: usize,
}

impl Bin {
    fn add(&mut self, t: f64, y: C64) {
        let e = C64::from_polar(1.0, -self.w * t);
        self.acc[0] += e * y.re;
        self.acc[1] += e * y.im;
        self.n += 1;
    }

    /// Complex amplitudes of the d and q responses.
    fn phasors(&self) -> [C64; 2] {
        let s = 2.0 / self.n as f64;
        [self.acc[0] * s, self.acc[1] * s]
    }
}

fn dq_to_pm(y: [[C64; 2]; 2]) -> [C64; 4] {
    // Y_pm = T Y_dq T^-1 with T = [[1, j], [1, -j]]
    let t = crate::lti::cmat(2, 2, &[C64::new(1.0, 0.0), J, C64::new(1.0, 0.0), -J]);
    let ti = crate::lti::cmat(2, 2, &[C64::new(0.5, 0.0), C64::new(0.5, 0.0), -J * 0.5, J * 0.5]);
    let m = crate::lti::cmat(2, 2, &[y[0][0], y[0][1], y[1][0], y[1][1]]);
    let r = t * m * ti;
    [r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]]
}

/// Response of one injection run: complex amplitudes of the measured d and
/// q currents when `cos(w t)` drives channel `dir`.
trait Rig: Sync {
    #[allow(clippy::too_many_arguments)]
    fn run(
        &self,
        w: f64,
        dir: C64,
        amp: f64,
        h: f64,
        settle_steps: usize,
        meas_steps: usize,
        delay: bool,
    ) -> Result<[C64; 2]>;
}

struct BusRig {
    model: EmtModel,
    bus: usize,
    side: InjectionSide,
}

impl Rig for BusRig {
    fn run(&self, w: f64, dir: C64, amp: f64, h: f64, settle: usize, meas: usize, delay: bool) -> Result<[C64; 2]> {
        let mut m = self.model.clone();
        m.series = Some(Series { bus: self.bus, side: self.side, dir, amp, w });
        let k = self.bus;
        let out = |m: &EmtModel, x: &[f64]| match self.side {
            InjectionSide::Network => m.network_current(x, k),
            InjectionSide::Machine => {
                -m.machines.iter().find(|mm| mm.bus == k).map_or(C64::new(0.0, 0.0), |mm| mm.current(x))
            }
        };
        integrate(&m.x0.clone(), m.n, |t, x, dx| m.rhs(t, x, dx), |x| out(&m, x), w, h, settle, meas, delay)
    }
}

struct MachineRig {
    m: Machine,
    w0: f64,
    x0: Vec<f64>,
    v0_local: C64,
    frame: MeasureFrame,
    xi: f64,
}

impl MachineRig {
    fn angle(&self, x: &[f64]) -> f64 {
        match self.frame {
            MeasureFrame::Steady => self.xi,
            MeasureFrame::Swing => match self.m.kind {
                Kind::Inf { .. } => self.xi,
                _ => self.m.theta(x),
            },
        }
    }
}

impl Rig for MachineRig {
    fn run(&self, w: f64, dir: C64, amp: f64, h: f64, settle: usize, meas: usize, delay: bool) -> Result<[C64; 2]> {
        let f = |t: f64, x: &[f64], dx: &mut [f64]| {
            let v = C64::from_polar(1.0, self.angle(x)) * (self.v0_local + dir * (amp * (w * t).cos()));
            self.m.deriv(x, v, self.w0, dx);
        };
        let out = |x: &[f64]| C64::from_polar(1.0, -self.angle(x)) * self.m.current(x);
        integrate(&self.x0, self.x0.len(), f, out, w, h, settle, meas, delay)
    }
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    x0: &[f64],
    n: usize,
    f: impl Fn(f64, &[f64], &mut [f64]),
    out: impl Fn(&[f64]) -> C64,
    w: f64,
    h: f64,
    settle: usize,
    meas: usize,
    delay: bool,
) -> Result<[C64; 2]> {
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(n);
    let mut bin = Bin { w, acc: [C64::new(0.0, 0.0); 2], n: 0 };
    let mut prev = out(&x);
    for step in 0..settle + meas {
        let t = step as f64 * h;
        if step >= settle {
            // sampled current lags the injected voltage by one step
            let y = if delay { prev } else { out(&x) };
            bin.add(t, y);
        }
        prev = out(&x);
        rk.step(&f, t, &mut x, h);
        check_state(&x, t + h)?;
    }
    Ok(bin.phasors())
}

fn measure_with(rig: &dyn Rig, spec: &InjectionSpec) -> Result<Vec<FrequencySample>> {
    spec.freqs_hz
        .par_iter()
        .map(|&f| {
            let (h, per, settle, meas) = plan(spec, f);
            let w = 2.0 * std::f64::consts::PI * f.abs();
            let delay = !spec.compensate_delay;
            let mut y = [[C64::new(0.0, 0.0); 2]; 2];
            for (col, dir) in [C64::new(1.0, 0.0), J].into_iter().enumerate() {
                let r = rig.run(w, dir, spec.amplitude, h, settle * per, meas * per, delay)?;
                for row in 0..2 {
                    y[row][col] = r[row] / spec.amplitude;
                }
            }
            if f < 0.0 {
                for row in y.iter_mut() {
                    for v in row.iter_mut() {
                        *v = v.conj();
                    }
                }
            }
            Ok(FrequencySample { freq_hz: f, y: dq_to_pm(y) })
        })
        .collect()
}

fn unstable(eigs: &[C64]) -> Option<C64> {
    eigs.iter().copied().filter(|e| e.re > 1e-6 * e.norm().max(1.0)).max_by(|a, b| a.re.total_cmp(&b.re))
}

/// Measure an admittance by injecting `d` then `q` voltage perturbations
/// and demodulating the current with a single-bin DFT over whole periods.
pub fn measure_admittance(cfg: &GridConfig, spec: &InjectionSpec) -> Result<Vec<FrequencySample>> {
    spec.validate()?;
    let sys = System::build(cfg)?;
    if spec.bus == 0 || spec.bus > sys.n_buses() {
        return Err(Error::InvalidParameter(format!("bus {} out of range", spec.bus)));
    }
    match spec.target {
        MeasureTarget::Bus => {
            if spec.frame != MeasureFrame::Steady {
                return Err(Error::InvalidParameter("bus measurements are taken in the global steady frame".into()));
            }
            let model = build_default_model(&sys)?;
            if let Some(e) = unstable(&model.eigenvalues()?) {
                return Err(Error::UnstableAtOperatingPoint { re: e.re, im: e.im });
            }
            let rig = BusRig {
                model: EmtModel::new(&sys)?,
                bus: spec.bus - 1,
                side: InjectionSide::for_formulation(model.formulation),
            };
            measure_with(&rig, spec)
        }
        MeasureTarget::Machine => {
            let inst = sys
                .machine_at(spec.bus)
                .ok_or_else(|| Error::InvalidParameter(format!("no machine at bus {}", spec.bus)))?;
            let analytic = machine_measurement_model(inst, spec.frame)?;
            if let Some(e) = unstable(&analytic.poles()?) {
                return Err(Error::UnstableAtOperatingPoint { re: e.re, im: e.im });
            }
            let emt = EmtModel::new(&sys)?;
            let idx = emt.machine_index(spec.bus).expect("machine present");
            let mut m = emt.machines[idx].clone();
            let n = m.n_states();
            let x0 = emt.x0[m.at..m.at + n].to_vec();
            m.at = 0;
            let xi = inst.angle.xi();
            let v0_local = C64::from_polar(1.0, -xi) * sys.op.v[spec.bus - 1];
            let rig = MachineRig { m, w0: sys.w0(), x0, v0_local, frame: spec.frame, xi };
            measure_with(&rig, spec)
        }
    }
}

/// The linear model a machine-level measurement should reproduce: the
/// steady-frame admittance, or in the swing frame the swing model with its
/// own frame law closed and no frame-rotation terms.
pub fn machine_measurement_model(inst: &MachineInstance, frame: MeasureFrame) -> Result<Lti> {
    match frame {
        MeasureFrame::Steady => inst.local_admittance(),
        MeasureFrame::Swing => {
            let zero = SteadyStatePhasors::zero();
            match &inst.model {
                MachineModel::Sg { params, op } => {
                    embed_admittance(&sg_swing_admittance_ext(params, op), &sg_frame_law(params, op)?, &zero)
                }
                MachineModel::Gfl { params, op } => {
                    embed_admittance(&gfl_swing_admittance_ext(params, op)?, &pll_swing_law(params, op)?, &zero)
                }
                MachineModel::InfiniteBus { .. } => inst.local_admittance(),
            }
        }
    }
}

/// Analytic samples of a 2x2 system at the given frequencies.
pub fn analytic_samples(y: &Lti, freqs_hz: &[f64]) -> Result<Vec<FrequencySample>> {
    crate::sysmodel::sample_block(y, 1, freqs_hz)
}

/// Largest magnitude ratio error and phase error (degrees) over the four
/// entries, ignoring entries below `floor` in magnitude.
pub fn sample_error(a: &FrequencySample, b: &FrequencySample, floor: f64) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for (x, y) in a.y.iter().zip(&b.y) {
        if y.norm() < floor {
            continue;
        }
        let r = x / y;
        worst.0 = worst.0.max((r.norm() - 1.0).abs());
        worst.1 = worst.1.max(r.arg().to_degrees().abs());
    }
    worst
}
