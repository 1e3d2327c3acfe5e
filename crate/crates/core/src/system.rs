//! A solved grid: network, operating point and initialized machines.

use num_complex::Complex64 as C64;

use crate::config::{GridConfig, MachineConfig};
use crate::error::{Error, Result};
use crate::frames::{rotate_to_global, FrameAngle};
use crate::machines::{
    gfl_init, gfl_steady_admittance, infinite_bus_admittance, infinite_bus_init, sg_init, sg_steady_admittance,
    GflOperating, GflParams, InfiniteBusParams, LoadKind, SgOperating, SgParams,
};
use crate::network::{power_flow_with, Branch, NetworkGraph, OperatingPoint, RlLoad, Shunt};
use crate::Lti;

#[derive(Clone, Debug, PartialEq)]
pub enum MachineModel {
    Sg { params: SgParams, op: SgOperating },
    Gfl { params: GflParams, op: GflOperating },
    InfiniteBus { params: InfiniteBusParams, emf: C64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineInstance {
    /// 1-based bus number.
    pub bus: usize,
    pub model: MachineModel,
    /// Steady-frame angle relative to the global frame.
    pub angle: FrameAngle<f64>,
}

impl MachineInstance {
    pub fn kind(&self) -> &'static str {
        match self.model {
            MachineModel::Sg { .. } => "sg",
            MachineModel::Gfl { .. } => "gfl",
            MachineModel::InfiniteBus { .. } => "infinite_bus",
        }
    }

    /// Admittance in the machine's own steady frame (motor convention).
    pub fn local_admittance(&self) -> Result<Lti> {
        match &self.model {
            MachineModel::Sg { params, op } => sg_steady_admittance(params, op),
            MachineModel::Gfl { params, op } => gfl_steady_admittance(params, op),
            MachineModel::InfiniteBus { params, .. } => Ok(infinite_bus_admittance(params)),
        }
    }

    /// Admittance in the global frame.
    pub fn global_admittance(&self) -> Result<Lti> {
        rotate_to_global(&self.local_admittance()?, self.angle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct System {
    pub config: GridConfig,
    pub net: NetworkGraph,
    pub op: OperatingPoint,
    /// Sorted by bus.
    pub machines: Vec<MachineInstance>,
}

/// Network elements in SI-free per-unit form: branch and load reactances
/// become inductances, susceptances capacitances.
pub fn network_from_config(cfg: &GridConfig) -> NetworkGraph {
    let w0 = cfg.w0();
    let n = &cfg.network;
    let branches = n.branches.iter().map(|b| Branch { from: b.from, to: b.to, r: b.r, l: b.x / w0 }).collect();
    let mut shunts: Vec<Shunt> = n.shunts.iter().map(|s| Shunt { bus: s.bus, r: s.r, c: s.b / w0 }).collect();
    let mut rl_loads = Vec::new();
    for l in &n.loads {
        match l.kind {
            LoadKind::ShuntR => shunts.push(Shunt { bus: l.bus, r: Some(l.r), c: 0.0 }),
            LoadKind::ShuntRc => shunts.push(Shunt { bus: l.bus, r: Some(l.r), c: 1.0 / (l.x * w0) }),
            LoadKind::ShuntRl => rl_loads.push(RlLoad { bus: l.bus, r: l.r, l: l.x / w0 }),
        }
    }
    NetworkGraph { n_buses: n.n_buses, branches, shunts, rl_loads, w0 }
}

pub fn machine_params(m: &MachineConfig, w0: f64) -> MachineParamsKind {
    match *m {
        MachineConfig::Sg(s) => {
            MachineParamsKind::Sg(SgParams { r: s.r, l: s.x / w0, j: 2.0 * s.h / (w0 * w0), d: s.d / (w0 * w0), w0 })
        }
        MachineConfig::Gfl(g) => {
            let lf = g.xf / w0;
            let mut p = match (g.gains, g.bandwidth) {
                (Some(k), _) => GflParams {
                    lf,
                    rf: g.rf,
                    cdc: g.cdc,
                    kp_pll: k.kp_pll,
                    ki_pll: k.ki_pll,
                    kp_i: k.kp_i,
                    ki_i: k.ki_i,
                    kp_dc: k.kp_dc,
                    ki_dc: k.ki_dc,
                    vdc_ref: g.vdc_ref,
                    w0,
                    feedforward: true,
                },
                (None, Some(bw)) => GflParams::from_bandwidths(lf, g.rf, g.cdc, g.vdc_ref, w0, bw),
                (None, None) => unreachable!("validated"),
            };
            p.feedforward = g.feedforward;
            MachineParamsKind::Gfl(p)
        }
        MachineConfig::InfiniteBus(b) => MachineParamsKind::InfiniteBus(InfiniteBusParams { r: b.r, l: b.x / w0, w0 }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MachineParamsKind {
    Sg(SgParams),
    Gfl(GflParams),
    InfiniteBus(InfiniteBusParams),
}

impl System {
    pub fn build(cfg: &GridConfig) -> Result<System> {
        cfg.validate()?;
        let net = network_from_config(cfg);
        net.validate()?;
        let op = power_flow_with(&net, &cfg.buses, cfg.solver.pf_tol, cfg.solver.pf_max_iter)?;
        let w0 = cfg.w0();
        let mut machines = Vec::with_capacity(cfg.machines.len());
        let mut has_machine = vec![false; net.n_buses];
        for m in &cfg.machines {
            let k = m.bus() - 1;
            has_machine[k] = true;
            let v0 = op.v[k];
            // generation-positive injection is the machine's output current
            let i0 = -op.i_inj[k];
            let (model, angle) = match machine_params(m, w0) {
                MachineParamsKind::Sg(params) => {
                    let (o, a) = sg_init(&params, v0, i0)?;
                    (MachineModel::Sg { params, op: o }, a)
                }
                MachineParamsKind::Gfl(params) => {
                    let (o, a) = gfl_init(&params, v0, i0)?;
                    (MachineModel::Gfl { params, op: o }, a)
                }
                MachineParamsKind::InfiniteBus(params) => {
                    let emf = infinite_bus_init(&params, v0, i0)?;
                    (MachineModel::InfiniteBus { params, emf }, FrameAngle::new(0.0)?)
                }
            };
            machines.push(MachineInstance { bus: k + 1, model, angle });
        }
        for (k, has) in has_machine.iter().enumerate() {
            let s = op.power(k);
            if !has && s.norm() > 1e-8 {
                return Err(Error::NoEquilibrium(format!(
                    "bus {} injects {:.6} + {:.6}j pu but has no machine",
                    k + 1,
                    s.re,
                    s.im
                )));
            }
        }
        machines.sort_by_key(|m| m.bus);
        Ok(System { config: cfg.clone(), net, op, machines })
    }

    pub fn n_buses(&self) -> usize {
        self.net.n_buses
    }

    pub fn machine_at(&self, bus: usize) -> Option<&MachineInstance> {
        self.machines.iter().find(|m| m.bus == bus)
    }

    pub fn w0(&self) -> f64 {
        self.net.w0
    }
}
