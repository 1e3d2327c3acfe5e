//! Network description, dynamic nodal admittance and AC power flow.
//!
//! Buses are numbered from 1; bus 1 is the slack and anchors the global
//! frame. Bus voltages and currents are `(+, -)` pairs in the global frame,
//! laid out as `[v1+, v1-, v2+, v2-, ...]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::lti::LtiSystem;

type Lti = LtiSystem<f64>;

/// Series RL branch between two buses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub l: f64,
}

/// Parallel conductance and capacitance to ground. `r = None` means open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shunt {
    pub bus: usize,
    pub r: Option<f64>,
    pub c: f64,
}

/// Series RL path to ground (an inductive load). Dynamic like a branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlLoad {
    pub bus: usize,
    pub r: f64,
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub n_buses: usize,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub shunts: Vec<Shunt>,
    #[serde(default)]
    pub rl_loads: Vec<RlLoad>,
    pub w0: f64,
}

impl NetworkGraph {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_buses;
        if n == 0 {
            return Err(Error::InvalidParameter("network has no buses".into()));
        }
        if !(self.w0 > 0.0) {
            return Err(Error::InvalidParameter("w0 must be positive".into()));
        }
        let bus_ok = |k: usize| (1..=n).contains(&k);
        let mut seen = std::collections::BTreeSet::new();
        for (idx, b) in self.branches.iter().enumerate() {
            if !bus_ok(b.from) || !bus_ok(b.to) || b.from == b.to {
                return Err(Error::InvalidParameter(format!("branch {idx} joins buses {} and {}", b.from, b.to)));
            }
            if !(b.l > 0.0) || !(b.r >= 0.0) {
                return Err(Error::InvalidParameter(format!("branch {idx} needs L > 0 and R >= 0")));
            }
            let key = (b.from.min(b.to), b.from.max(b.to));
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!(
                    "parallel branches between buses {} and {}",
                    key.0, key.1
                )));
            }
        }
        for s in &self.shunts {
            if !bus_ok(s.bus) {
                return Err(Error::InvalidParameter(format!("shunt at unknown bus {}", s.bus)));
            }
            if s.r.is_some_and(|r| !(r > 0.0)) || !(s.c >= 0.0) {
                return Err(Error::InvalidParameter(format!("shunt at bus {} needs R > 0, C >= 0", s.bus)));
            }
        }
        for l in &self.rl_loads {
            if !bus_ok(l.bus) || !(l.l > 0.0) || !(l.r >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid RL load at bus {}", l.bus)));
            }
        }
        // connectivity from bus 1
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut stack = vec![1usize];
        while let Some(k) = stack.pop() {
            for b in &self.branches {
                let other = if b.from == k {
                    b.to
                } else if b.to == k {
                    b.from
                } else {
                    continue;
                };
                if !reached[other - 1] {
                    reached[other - 1] = true;
                    stack.push(other);
                }
            }
        }
        if let Some(k) = reached.iter().position(|r| !r) {
            return Err(Error::DisconnectedGraph(k + 1));
        }
        Ok(())
    }

    /// Total shunt conductance and capacitance per bus (index 0 is bus 1).
    pub fn shunt_totals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut g = vec![0.0; self.n_buses];
        let mut c = vec![0.0; self.n_buses];
        for s in &self.shunts {
            if let Some(r) = s.r {
                g[s.bus - 1] += 1.0 / r;
            }
            c[s.bus - 1] += s.c;
        }
        (g, c)
    }

    /// Conventional phasor Y-bus (the `+` component of `Y_b(0)`).
    pub fn static_ybus(&self) -> DMatrix<C64> {
        let n = self.n_buses;
        let mut y = DMatrix::zeros(n, n);
        for b in &self.branches {
            let yb = C64::new(1.0, 0.0) / C64::new(b.r, self.w0 * b.l);
            let (k, l) = (b.from - 1, b.to - 1);
            y[(k, k)] += yb;
            y[(l, l)] += yb;
            y[(k, l)] -= yb;
            y[(l, k)] -= yb;
        }
        for ld in &self.rl_loads {
            y[(ld.bus - 1, ld.bus - 1)] += C64::new(1.0, 0.0) / C64::new(ld.r, self.w0 * ld.l);
        }
        let (g, c) = self.shunt_totals();
        for k in 0..n {
            y[(k, k)] += C64::new(g[k], self.w0 * c[k]);
        }
        y
    }
}

/// `Y_b(s) = Y_rl(s) + G + (s I + j w0 S) C` where `Y_rl` collects branches and
/// RL loads (strictly proper, 2 states each), `G`, `C` are diagonal shunt
/// conductance and capacitance and `S = diag(1, -1)` per bus.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalAdmittance {
    pub rl_part: Lti,
    pub shunt_g: Vec<f64>,
    pub shunt_c: Vec<f64>,
    pub w0: f64,
}

impl NodalAdmittance {
    pub fn n_buses(&self) -> usize {
        self.shunt_g.len()
    }

    /// Per-bus shunt admittance `(g + (s + j w0) c, g + (s - j w0) c)`.
    pub fn shunt_at(&self, bus_index: usize, s: C64) -> [C64; 2] {
        let (g, c) = (self.shunt_g[bus_index], self.shunt_c[bus_index]);
        [C64::new(g, 0.0) + (s + C64::new(0.0, self.w0)) * c, C64::new(g, 0.0) + (s - C64::new(0.0, self.w0)) * c]
    }

    pub fn evaluate(&self, s: C64) -> Result<CMat<f64>> {
        let mut y = self.rl_part.evaluate(s)?;
        for k in 0..self.n_buses() {
            let sh = self.shunt_at(k, s);
            y[(2 * k, 2 * k)] += sh[0];
            y[(2 * k + 1, 2 * k + 1)] += sh[1];
        }
        Ok(y)
    }

    pub fn poles(&self) -> Result<Vec<C64>> {
        self.rl_part.poles()
    }
}

/// Series RL elements (branches and loads to ground) as a strictly proper
/// `2N x 2N` admittance. Each element's `(+, -)` current is a state.
pub fn rl_network(net: &NetworkGraph) -> Lti {
    let n2 = 2 * net.n_buses;
    // (from, Option<to>, r, l)
    let mut elems: Vec<(usize, Option<usize>, f64, f64)> =
        net.branches.iter().map(|b| (b.from - 1, Some(b.to - 1), b.r, b.l)).collect();
    elems.extend(net.rl_loads.iter().map(|l| (l.bus - 1, None, l.r, l.l)));
    let ns = 2 * elems.len();
    let mut a = CMat::zeros(ns, ns);
    let mut b = CMat::zeros(ns, n2);
    let mut c = CMat::zeros(n2, ns);
    for (e, &(k, l, r, ind)) in elems.iter().enumerate() {
        for (h, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            let x = 2 * e + h;
            a[(x, x)] = C64::new(-r / ind, -sign * net.w0);
            b[(x, 2 * k + h)] = C64::new(1.0 / ind, 0.0);
            c[(2 * k + h, x)] = C64::new(1.0, 0.0);
            if let Some(l) = l {
                b[(x, 2 * l + h)] = C64::new(-1.0 / ind, 0.0);
                c[(2 * l + h, x)] = C64::new(-1.0, 0.0);
            }
        }
    }
    Lti::new(a, b, c, CMat::zeros(n2, n2)).expect("consistent dimensions")
}

pub fn build_nodal_admittance(net: &NetworkGraph) -> Result<NodalAdmittance> {
    net.validate()?;
    let (g, c) = net.shunt_totals();
    Ok(NodalAdmittance { rl_part: rl_network(net), shunt_g: g, shunt_c: c, w0: net.w0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum BusRole {
    Slack { v: f64, theta: f64 },
    Pv { p: f64, v: f64 },
    Pq { p: f64, q: f64 },
}

/// Power setpoints are generation-positive injections into the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub bus: usize,
    #[serde(flatten)]
    pub role: BusRole,
}

/// Solved bus phasors and net injections (generation positive,
/// `S = V conj(I)`), global frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v: Vec<C64>,
    pub i_inj: Vec<C64>,
    pub w0: f64,
    pub iterations: usize,
    pub mismatch: f64,
}

impl OperatingPoint {
    pub fn power(&self, bus_index: usize) -> C64 {
        self.v[bus_index] * self.i_inj[bus_index].conj()
    }
}

pub const PF_MAX_ITER: usize = 50;
pub const PF_TOL: f64 = 1e-10;

/// Newton-Raphson in polar coordinates from a flat start. Converged when the
/// power mismatch infinity-norm is below `tol`, or below the roundoff level of
/// the network equations for very stiff networks.
pub fn power_flow(net: &NetworkGraph, specs: &[BusSpec]) -> Result<OperatingPoint> {
    power_flow_with(net, specs, PF_TOL, PF_MAX_ITER)
}

pub fn power_flow_with(net: &NetworkGraph, specs: &[BusSpec], tol: f64, max_iter: usize) -> Result<OperatingPoint> {
    net.validate()?;
    let n = net.n_buses;
    let mut role: Vec<BusRole> = vec![BusRole::Pq { p: 0.0, q: 0.0 }; n];
    let mut given = vec![false; n];
    for s in specs {
        if !(1..=n).contains(&s.bus) || given[s.bus - 1] {
            return Err(Error::InvalidParameter(format!("bus spec for bus {} is invalid or repeated", s.bus)));
        }
        given[s.bus - 1] = true;
        role[s.bus - 1] = s.role;
    }
    let slacks: Vec<usize> = (0..n).filter(|&k| matches!(role[k], BusRole::Slack { .. })).collect();
    if slacks != [0] {
        return Err(Error::InvalidParameter("exactly one slack bus is required and it must be bus 1".into()));
    }
    let dead = role.iter().all(|r| match *r {
        BusRole::Slack { v, .. } => v == 0.0,
        BusRole::Pv { .. } => false,
        BusRole::Pq { p, q } => p == 0.0 && q == 0.0,
    });
    if dead {
        // de-energized network: the zero solution is exact
        let zero = vec![C64::new(0.0, 0.0); n];
        return Ok(OperatingPoint { v: zero.clone(), i_inj: zero, w0: net.w0, iterations: 0, mismatch: 0.0 });
    }
    let y = net.static_ybus();
    let ynorm = (0..n).map(|r| (0..n).map(|c| y[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    for k in 0..n {
        match role[k] {
            BusRole::Slack { v, theta } => {
                vm[k] = v;
                va[k] = theta;
            }
            BusRole::Pv { v, .. } => vm[k] = v,
            BusRole::Pq { .. } => {}
        }
    }
    // flat start relative to the slack angle
    for k in 1..n {
        va[k] = va[0];
    }
    // unknown ordering: angles of non-slack, then magnitudes of PQ
    let ang: Vec<usize> = (1..n).collect();
    let mag: Vec<usize> = (1..n).filter(|&k| matches!(role[k], BusRole::Pq { .. })).collect();
    let m = ang.len() + mag.len();
    let mut trace = Vec::new();
    let phasors = |vm: &[f64], va: &[f64]| -> Vec<C64> { (0..n).map(|k| C64::from_polar(vm[k], va[k])).collect() };
    for it in 0..=max_iter {
        let v = phasors(&vm, &va);
        let yv = &y * DVector::from_vec(v.clone());
        let s: Vec<C64> = (0..n).map(|k| v[k] * yv[k].conj()).collect();
        let mut f = DVector::zeros(m);
        for (r, &k) in ang.iter().enumerate() {
            let p = match role[k] {
                BusRole::Pv { p, .. } | BusRole::Pq { p, .. } => p,
                BusRole::Slack { .. } => unreachable!(),
            };
            f[r] = s[k].re - p;
        }
        for (r, &k) in mag.iter().enumerate() {
            if let BusRole::Pq { q, .. } = role[k] {
                f[ang.len() + r] = s[k].im - q;
            }
        }
        let norm = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !norm.is_finite() {
            return Err(Error::PowerFlowDiverged { iterations: it, trace });
        }
        trace.push(norm);
        // mismatch cannot be resolved below the roundoff of Y V
        let floor = 16.0 * f64::EPSILON * ynorm * vm.iter().fold(0.0f64, |a, x| a.max(x * x));
        if norm < tol.max(floor) {
            let i_inj: Vec<C64> = yv.iter().copied().collect();
            return Ok(OperatingPoint { v, i_inj, w0: net.w0, iterations: it, mismatch: norm });
        }
        if it == max_iter {
            break;
        }
        // dS_k/dtheta_j and dS_k/d|V|_j
        let mut jac = DMatrix::<f64>::zeros(m, m);
        let dva: Vec<Vec<C64>> = ang
            .iter()
            .map(|&j| {
                (0..n)
                    .map(|k| {
                        let mut d = C64::new(0.0, 0.0);
                        if k == j {
                            d += C64::new(0.0, 1.0) * v[k] * yv[k].conj();
                        }
                        d += v[k] * (y[(k, j)] * C64::new(0.0, 1.0) * v[j]).conj();
                        d
                    })
                    .collect()
            })
            .collect();
        let dvm: Vec<Vec<C64>> = mag
            .iter()
            .map(|&j| {
                let u = v[j] / vm[j];
                (0..n)
                    .map(|k| {
                        let mut d = C64::new(0.0, 0.0);
                        if k == j {
                            d += u * yv[k].conj();
                        }
                        d += v[k] * (y[(k, j)] * u).conj();
                        d
                    })
                    .collect()
            })
            .collect();
        for (col, dcol) in dva.iter().chain(dvm.iter()).enumerate() {
            for (r, &k) in ang.iter().enumerate() {
                jac[(r, col)] = dcol[k].re;
            }
            for (r, &k) in mag.iter().enumerate() {
                jac[(ang.len() + r, col)] = dcol[k].im;
            }
        }
        let lu = jac.clone().lu();
        let dx = match lu.solve(&f) {
            Some(dx) if dx.iter().all(|x| x.is_finite()) => dx,
            _ => return Err(Error::IllConditionedJacobian(it)),
        };
        let jn = jac.abs().row_sum().max();
        let inv_n = lu.try_inverse().map(|i| i.abs().row_sum().max()).unwrap_or(f64::INFINITY);
        if m > 0 && 1.0 / (jn * inv_n) < 1e-14 {
            return Err(Error::IllConditionedJacobian(it));
        }
        for (r, &k) in ang.iter().enumerate() {
            va[k] -= dx[r];
        }
        for (r, &k) in mag.iter().enumerate() {
            vm[k] -= dx[ang.len() + r];
        }
    }
    Err(Error::PowerFlowDiverged { iterations: max_iter, trace })
}
