//! Grid description files.
//!
//! All electrical quantities are per unit on the system base. Reactances
//! are given at the nominal frequency and converted on load:
//! `L = x / w0` for inductive elements, `C = b / w0` for shunt susceptance,
//! `C = 1 / (x w0)` for the capacitive reactance of an RC load,
//! `J = 2 H / w0^2` and `D = d / w0^2` for generators (`H` in seconds, `d` in
//! pu power per pu speed). Keys whose name starts with `_` are comments.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::machines::{GflBandwidths, LoadKind};
use crate::network::{BusRole, BusSpec};

pub const MACHINE_KINDS: [&str; 3] = ["sg", "gfl", "infinite_bus"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub base: Base,
    pub network: NetworkConfig,
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub machines: Vec<MachineConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Base {
    #[serde(default = "default_s_base")]
    pub s_base_va: f64,
    #[serde(default = "default_v_base")]
    pub v_base_v: f64,
    #[serde(default = "default_f0")]
    pub f0_hz: f64,
}

fn default_s_base() -> f64 {
    100e6
}
fn default_v_base() -> f64 {
    230e3
}
fn default_f0() -> f64 {
    60.0
}

impl Default for Base {
    fn default() -> Self {
        Base { s_base_va: default_s_base(), v_base_v: default_v_base(), f0_hz: default_f0() }
    }
}

impl Base {
    pub fn w0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f0_hz
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_buses: usize,
    #[serde(default)]
    pub branches: Vec<BranchConfig>,
    #[serde(default)]
    pub shunts: Vec<ShuntConfig>,
    #[serde(default)]
    pub loads: Vec<LoadConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
}

/// Parallel resistance `r` (absent means open) and susceptance `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntConfig {
    pub bus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default)]
    pub b: f64,
}

/// `kind = shunt_r` uses `r`; `shunt_rc` is `r` in parallel with a capacitor
/// of reactance `x`; `shunt_rl` is `r` in series with reactance `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub bus: usize,
    pub kind: LoadKind,
    pub r: f64,
    #[serde(default)]
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MachineConfig {
    Sg(SgConfig),
    Gfl(GflConfig),
    InfiniteBus(InfiniteBusConfig),
}

impl MachineConfig {
    pub fn bus(&self) -> usize {
        match self {
            MachineConfig::Sg(m) => m.bus,
            MachineConfig::Gfl(m) => m.bus,
            MachineConfig::InfiniteBus(m) => m.bus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgConfig {
    pub bus: usize,
    pub r: f64,
    pub x: f64,
    pub h: f64,
    #[serde(default)]
    pub d: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflGains {
    pub kp_pll: f64,
    pub ki_pll: f64,
    pub kp_i: f64,
    pub ki_i: f64,
    pub kp_dc: f64,
    pub ki_dc: f64,
}

/// Grid-following converter. `cdc` is the dc-link energy constant in
/// seconds (`Cdc vdc dvdc/dt = P` in pu). Gains come from `gains` when given,
/// otherwise from `bandwidth`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflConfig {
    pub bus: usize,
    pub rf: f64,
    pub xf: f64,
    pub cdc: f64,
    #[serde(default = "one")]
    pub vdc_ref: f64,
    #[serde(default = "yes")]
    pub feedforward: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<GflBandwidths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GflGains>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

/// Constant emf behind `r + j x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfiniteBusConfig {
    pub bus: usize,
    pub r: f64,
    pub x: f64,
}

/// Mode-group frequency bands (Hz, on `|Im(lambda)| / 2 pi`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bands {
    pub swing_max_hz: f64,
    pub pll_max_hz: f64,
    pub flux_max_hz: f64,
}

impl Default for Bands {
    fn default() -> Self {
        Bands { swing_max_hz: 15.0, pll_max_hz: 45.0, flux_max_hz: 75.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_pf_tol")]
    pub pf_tol: f64,
    #[serde(default = "default_pf_iter")]
    pub pf_max_iter: usize,
    /// Distance (rad/s, relative to `1 + |lambda|`) within which a value is
    /// accepted as an eigenvalue.
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub bands: Bands,
}

fn default_pf_tol() -> f64 {
    crate::network::PF_TOL
}
fn default_pf_iter() -> usize {
    crate::network::PF_MAX_ITER
}
fn default_eig_tol() -> f64 {
    1e-3
}
fn default_dt() -> f64 {
    20e-6
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            pf_tol: default_pf_tol(),
            pf_max_iter: default_pf_iter(),
            eig_tol: default_eig_tol(),
            dt: default_dt(),
            bands: Bands::default(),
        }
    }
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::SchemaError { pointer: pointer.into(), message: message.into() }
}

/// Remove comment keys (leading `_`) at every level.
pub fn strip_comments(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.starts_with('_'));
            map.values_mut().for_each(strip_comments);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_comments),
        _ => {}
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Unknown => {}
        }
    }
    out
}

fn check<T: serde::de::DeserializeOwned>(v: Value) -> std::result::Result<(), (String, String)> {
    serde_path_to_error::deserialize::<_, T>(v)
        .map(|_| ())
        .map_err(|e| (pointer_of(e.path()), e.into_inner().to_string()))
}

impl GridConfig {
    pub fn from_value(mut v: Value) -> Result<Self> {
        strip_comments(&mut v);
        if let Some(list) = v.get("machines").and_then(Value::as_array) {
            for (i, m) in list.iter().enumerate() {
                if let Some(kind) = m.get("kind").and_then(Value::as_str) {
                    if !MACHINE_KINDS.contains(&kind) {
                        return Err(Error::UnknownMachineKind {
                            pointer: format!("/machines/{i}/kind"),
                            kind: kind.to_string(),
                        });
                    }
                }
            }
        }
        // The tagged machine enum hides field paths; check each entry against
        // its concrete type first.
        if let Some(list) = v.get("machines").and_then(Value::as_array) {
            for (i, m) in list.iter().enumerate() {
                let mut body = m.clone();
                if let Some(obj) = body.as_object_mut() {
                    obj.remove("kind");
                }
                let base = format!("/machines/{i}");
                let r = match m.get("kind").and_then(Value::as_str) {
                    Some("sg") => check::<SgConfig>(body),
                    Some("gfl") => check::<GflConfig>(body),
                    Some("infinite_bus") => check::<InfiniteBusConfig>(body),
                    _ => Ok(()),
                };
                r.map_err(|(p, msg)| schema(format!("{base}{p}"), msg))?;
            }
        }
        let cfg: GridConfig = serde_path_to_error::deserialize(v).map_err(|e| {
            let pointer = pointer_of(e.path());
            schema(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| schema("", format!("invalid JSON: {e}")))?;
        Self::from_value(v)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn w0(&self) -> f64 {
        self.base.w0()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.network.n_buses;
        if n == 0 {
            return Err(schema("/network/n_buses", "at least one bus is required"));
        }
        if !(self.base.f0_hz > 0.0) {
            return Err(schema("/base/f0_hz", "must be positive"));
        }
        let bus_ok = |k: usize| (1..=n).contains(&k);
        for (i, b) in self.network.branches.iter().enumerate() {
            if !bus_ok(b.from) {
                return Err(schema(format!("/network/branches/{i}/from"), format!("bus {} does not exist", b.from)));
            }
            if !bus_ok(b.to) {
                return Err(schema(format!("/network/branches/{i}/to"), format!("bus {} does not exist", b.to)));
            }
        }
        for (i, s) in self.network.shunts.iter().enumerate() {
            if !bus_ok(s.bus) {
                return Err(schema(format!("/network/shunts/{i}/bus"), format!("bus {} does not exist", s.bus)));
            }
        }
        for (i, l) in self.network.loads.iter().enumerate() {
            if !bus_ok(l.bus) {
                return Err(schema(format!("/network/loads/{i}/bus"), format!("bus {} does not exist", l.bus)));
            }
            if !(l.r > 0.0) {
                return Err(schema(format!("/network/loads/{i}/r"), "must be positive"));
            }
            if l.kind != LoadKind::ShuntR && !(l.x > 0.0) {
                return Err(schema(format!("/network/loads/{i}/x"), "must be positive"));
            }
        }
        for (i, b) in self.buses.iter().enumerate() {
            if !bus_ok(b.bus) {
                return Err(schema(format!("/buses/{i}/bus"), format!("bus {} does not exist", b.bus)));
            }
        }
        let slacks: Vec<usize> =
            self.buses.iter().filter(|b| matches!(b.role, BusRole::Slack { .. })).map(|b| b.bus).collect();
        if slacks != [1] {
            return Err(schema("/buses", "exactly one slack bus is required and it must be bus 1"));
        }
        let mut seen = vec![false; n];
        for (i, m) in self.machines.iter().enumerate() {
            let k = m.bus();
            if !bus_ok(k) {
                return Err(schema(format!("/machines/{i}/bus"), format!("bus {k} does not exist")));
            }
            if seen[k - 1] {
                return Err(Error::DuplicateMachineAtBus(k));
            }
            seen[k - 1] = true;
            if let MachineConfig::Gfl(g) = m {
                if g.gains.is_none() && g.bandwidth.is_none() {
                    return Err(schema(format!("/machines/{i}"), "converter needs either gains or bandwidth"));
                }
            }
        }
        Ok(())
    }

    /// Copy with the numeric field(s) at the given JSON pointer(s) set to
    /// `value`. Several pointers may be separated by commas.
    pub fn with_parameter(&self, path: &str, value: f64) -> Result<GridConfig> {
        let mut v = self.to_value();
        for p in path.split(',').map(str::trim) {
            let slot = v.pointer_mut(p).ok_or_else(|| Error::EventPathInvalid(p.to_string()))?;
            if !slot.is_number() {
                return Err(Error::EventPathInvalid(p.to_string()));
            }
            *slot = serde_json::json!(value);
        }
        GridConfig::from_value(v).map_err(|e| match e {
            Error::SchemaError { pointer, .. } => Error::EventPathInvalid(pointer),
            other => other,
        })
    }

    pub fn parameter(&self, path: &str) -> Result<f64> {
        let v = self.to_value();
        let p = path.split(',').next().unwrap_or("").trim();
        v.pointer(p).and_then(Value::as_f64).ok_or_else(|| Error::EventPathInvalid(p.to_string()))
    }
}
