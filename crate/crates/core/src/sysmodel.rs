//! Whole-system closed loop of machines and network, pole maps, bus spectra,
//! participation and parameter sweeps.
//!
//! The closed loop is realized once with inputs `[i_hat; v_hat]` and outputs
//! `[dv; di]`, so the impedance `Z_hat` (i_hat to dv) and admittance `Y_hat`
//! (v_hat to di) share one state matrix.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Bands, GridConfig};
use crate::eig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::lti::{cdiag, connect};
use crate::network::rl_network;
use crate::system::System;
use crate::Lti;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Machines grouped with bus shunts as impedances, network as admittance.
    Primal,
    /// Machines as admittances, network with shunts as impedance.
    Dual,
}

/// Per-bus machine blocks and their block-diagonal stack. Buses without a
/// machine carry `None` and a zero (open-circuit admittance) block.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineMatrix {
    pub blocks: Vec<Option<Lti>>,
    pub block_diagonal: Lti,
}

/// `models` are `(bus, 2x2 global-frame system)` with 1-based bus numbers.
pub fn assemble_machines(models: &[(usize, Lti)], n_buses: usize) -> Result<MachineMatrix> {
    let mut blocks: Vec<Option<Lti>> = vec![None; n_buses];
    for (bus, m) in models {
        if *bus == 0 || *bus > n_buses {
            return Err(Error::InvalidParameter(format!("bus {bus} out of range 1..={n_buses}")));
        }
        if m.input_dim() != 2 || m.output_dim() != 2 {
            return Err(Error::DimMismatch(format!("machine block at bus {bus} is not 2x2")));
        }
        if blocks[bus - 1].is_some() {
            return Err(Error::DuplicateMachineAtBus(*bus));
        }
        blocks[bus - 1] = Some(m.clone());
    }
    let stacked: Vec<Lti> = blocks.iter().map(|b| b.clone().unwrap_or_else(|| Lti::zero(2, 2))).collect();
    Ok(MachineMatrix { blocks, block_diagonal: Lti::append_all(&stacked) })
}

/// `diag(1/(g + (s + j w0) c), 1/(g + (s - j w0) c))`.
pub fn shunt_impedance(bus: usize, g: f64, c: f64, w0: f64) -> Result<Lti> {
    if c > 0.0 {
        let a = cdiag(&[C64::new(-g / c, -w0), C64::new(-g / c, w0)]);
        let id = cdiag(&[C64::new(1.0, 0.0); 2]);
        Lti::new(a, id.clone(), id * C64::new(1.0 / c, 0.0), CMat::zeros(2, 2))
    } else if g > 0.0 {
        Ok(Lti::make_static(cdiag(&[C64::new(1.0 / g, 0.0); 2])))
    } else {
        Err(Error::MissingShunt(bus))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WholeSystemModel {
    pub formulation: Formulation,
    pub n_buses: usize,
    /// Inputs `[i_hat; v_hat]`, outputs `[dv; di]`, each `2N`.
    pub loop_sys: Lti,
}

impl WholeSystemModel {
    pub fn a(&self) -> &CMat<f64> {
        self.loop_sys.a()
    }

    fn idx(&self, second: bool) -> Vec<usize> {
        let n2 = 2 * self.n_buses;
        let off = if second { n2 } else { 0 };
        (off..off + n2).collect()
    }

    pub fn zhat(&self) -> Lti {
        self.loop_sys.select(&self.idx(false), &self.idx(false)).expect("in range")
    }

    pub fn yhat(&self) -> Lti {
        self.loop_sys.select(&self.idx(true), &self.idx(true)).expect("in range")
    }

    /// Row/column block of bus `k` (1-based).
    pub fn node_index(&self, bus: usize) -> Option<[usize; 2]> {
        (1..=self.n_buses).contains(&bus).then(|| [2 * (bus - 1), 2 * (bus - 1) + 1])
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        self.loop_sys.poles()
    }
}

/// Zero `F` with identity `G` and `H` for a `2N + 2N` loop.
fn loop_matrices(n2: usize) -> (CMat<f64>, CMat<f64>, CMat<f64>) {
    let id = crate::linalg::identity::<f64>(2 * n2);
    (CMat::zeros(2 * n2, 2 * n2), id.clone(), id)
}

/// `Z_hat = Z_m (I + Y_b Z_m)^-1`, `Y_hat = (I + Y_b Z_m)^-1 Y_b` with
/// `dv = Z_m (i_hat - di)` and `di = Y_b (dv + v_hat)`.
pub fn close_loop(zm: &Lti, yb: &Lti) -> Result<WholeSystemModel> {
    let n2 = zm.output_dim();
    if zm.input_dim() != n2 || yb.input_dim() != n2 || yb.output_dim() != n2 || !n2.is_multiple_of(2) {
        return Err(Error::DimMismatch("close_loop: Z_m and Y_b must be square 2N x 2N".into()));
    }
    let plant = zm.append(yb);
    let (mut f, g, h) = loop_matrices(n2);
    let one = C64::new(1.0, 0.0);
    for i in 0..n2 {
        f[(i, n2 + i)] = -one; // e1 = i_hat - di
        f[(n2 + i, i)] = one; // e2 = dv + v_hat
    }
    let loop_sys = connect(&plant, &f, &g, &h, &CMat::zeros(2 * n2, 2 * n2))?;
    Ok(WholeSystemModel { formulation: Formulation::Primal, n_buses: n2 / 2, loop_sys })
}

/// `Y_hat = Y_m (I + Z_b Y_m)^-1`, `Z_hat = (I + Z_b Y_m)^-1 Z_b` with
/// `di = Y_m (v_hat - dv)` and `dv = Z_b (di + i_hat)`.
pub fn close_loop_dual(ym: &Lti, zb: &Lti) -> Result<WholeSystemModel> {
    let n2 = ym.output_dim();
    if ym.input_dim() != n2 || zb.input_dim() != n2 || zb.output_dim() != n2 || !n2.is_multiple_of(2) {
        return Err(Error::DimMismatch("close_loop_dual: Y_m and Z_b must be square 2N x 2N".into()));
    }
    // plant outputs [di; dv], inputs [e1; e2]
    let plant = ym.append(zb);
    let (mut f, _, _) = loop_matrices(n2);
    let one = C64::new(1.0, 0.0);
    for i in 0..n2 {
        f[(i, n2 + i)] = -one; // e1 = v_hat - dv
        f[(n2 + i, i)] = one; // e2 = di + i_hat
    }
    let mut g = CMat::zeros(2 * n2, 2 * n2);
    let mut h = CMat::zeros(2 * n2, 2 * n2);
    for i in 0..n2 {
        g[(i, n2 + i)] = one; // v_hat feeds e1
        g[(n2 + i, i)] = one; // i_hat feeds e2
        h[(i, n2 + i)] = one; // dv first
        h[(n2 + i, i)] = one;
    }
    let loop_sys = connect(&plant, &f, &g, &h, &CMat::zeros(2 * n2, 2 * n2))?;
    Ok(WholeSystemModel { formulation: Formulation::Dual, n_buses: n2 / 2, loop_sys })
}

/// Dual when some bus has no machine, primal otherwise.
pub fn default_formulation(sys: &System) -> Formulation {
    if sys.machines.len() == sys.n_buses() {
        Formulation::Primal
    } else {
        Formulation::Dual
    }
}

/// Global-frame machine admittances.
pub fn machine_matrix(sys: &System) -> Result<MachineMatrix> {
    let models = sys.machines.iter().map(|m| Ok((m.bus, m.global_admittance()?))).collect::<Result<Vec<_>>>()?;
    assemble_machines(&models, sys.n_buses())
}

fn shunt_impedances(sys: &System) -> Result<Vec<Lti>> {
    let (g, c) = sys.net.shunt_totals();
    (0..sys.n_buses()).map(|k| shunt_impedance(k + 1, g[k], c[k], sys.w0())).collect()
}

pub fn build_model(sys: &System, formulation: Formulation) -> Result<WholeSystemModel> {
    let ym = machine_matrix(sys)?;
    let zsh = shunt_impedances(sys)?;
    let y_rl = rl_network(&sys.net);
    match formulation {
        Formulation::Primal => {
            let zm: Vec<Lti> = ym
                .blocks
                .iter()
                .zip(&zsh)
                .map(|(y, z)| match y {
                    Some(y) => z.feedback(y, -1),
                    None => Ok(z.clone()),
                })
                .collect::<Result<_>>()?;
            close_loop(&Lti::append_all(&zm), &y_rl)
        }
        Formulation::Dual => {
            let zb = Lti::append_all(&zsh).feedback(&y_rl, -1)?;
            close_loop_dual(&ym.block_diagonal, &zb)
        }
    }
}

pub fn build_default_model(sys: &System) -> Result<WholeSystemModel> {
    build_model(sys, default_formulation(sys))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoleGroup {
    Swing,
    Pll,
    Flux,
    Current,
}

impl PoleGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            PoleGroup::Swing => "swing",
            PoleGroup::Pll => "pll",
            PoleGroup::Flux => "flux",
            PoleGroup::Current => "current",
        }
    }

    pub fn classify(freq_hz: f64, bands: &Bands) -> PoleGroup {
        let f = freq_hz.abs();
        if f < bands.swing_max_hz {
            PoleGroup::Swing
        } else if f < bands.pll_max_hz {
            PoleGroup::Pll
        } else if f <= bands.flux_max_hz {
            PoleGroup::Flux
        } else {
            PoleGroup::Current
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub value: C64,
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub group: Option<PoleGroup>,
}

impl PoleRecord {
    pub fn new(value: C64, bands: Option<&Bands>) -> Self {
        let frequency_hz = value.im / (2.0 * std::f64::consts::PI);
        let mag = value.norm();
        let damping_ratio = if mag == 0.0 { 0.0 } else { -value.re / mag };
        PoleRecord { value, frequency_hz, damping_ratio, group: bands.map(|b| PoleGroup::classify(frequency_hz, b)) }
    }
}

/// Closed-loop eigenvalues sorted by imaginary then real part.
pub fn system_poles(m: &WholeSystemModel, bands: &Bands) -> Result<Vec<PoleRecord>> {
    Ok(m.eigenvalues()?.into_iter().map(|v| PoleRecord::new(v, Some(bands))).collect())
}

/// `|a - b| / max(|b|, floor)`.
pub fn relative_error(a: C64, b: C64, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}

/// Pair two eigenvalue lists by repeatedly taking the closest remaining pair.
/// Returns `(a, b)` pairs; unmatched entries are dropped.
pub fn match_poles(a: &[C64], b: &[C64]) -> Vec<(C64, C64)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (k, y) in b.iter().enumerate() {
            cand.push(((x - y).norm(), i, k));
        }
    }
    cand.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let (mut ua, mut ub) = (vec![false; a.len()], vec![false; b.len()]);
    let mut out = Vec::new();
    for (_, i, k) in cand {
        if !ua[i] && !ub[k] {
            ua[i] = true;
            ub[k] = true;
            out.push((a[i], b[k]));
        }
    }
    out.sort_by(|p, q| p.1.im.total_cmp(&q.1.im).then(p.1.re.total_cmp(&q.1.re)));
    out
}

/// Largest matched relative error (floor 1 rad/s) between two pole sets of
/// equal size; infinity when sizes differ.
pub fn pole_set_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    match_poles(a, b).iter().map(|(x, y)| relative_error(*x, *y, 1.0)).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySample {
    pub freq_hz: f64,
    /// `[Y++, Y+-, Y-+, Y--]`
    pub y: [C64; 4],
}

impl FrequencySample {
    pub fn from_block(freq_hz: f64, m: &CMat<f64>) -> Self {
        FrequencySample { freq_hz, y: [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]] }
    }
}

/// Frequency grid `n` points from `fmin` to `fmax` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

const NUDGE_HZ: f64 = 1e-6;

/// Diagonal block of a `2N x 2N` system at `s = j 2 pi f`, nudging `f` off a
/// pole when necessary.
pub fn sample_block(sys: &Lti, bus: usize, freqs_hz: &[f64]) -> Result<Vec<FrequencySample>> {
    let n_buses = sys.output_dim() / 2;
    if bus == 0 || bus > n_buses {
        return Err(Error::InvalidParameter(format!("bus {bus} out of range 1..={n_buses}")));
    }
    let k = 2 * (bus - 1);
    let rows = [k, k + 1];
    let sub = sys.select(&rows, &rows)?;
    freqs_hz
        .iter()
        .map(|&f| {
            let mut last = None;
            for attempt in 0..4 {
                let fa = f + attempt as f64 * NUDGE_HZ;
                match sub.evaluate(C64::new(0.0, 2.0 * std::f64::consts::PI * fa)) {
                    Ok(m) => return Ok(FrequencySample::from_block(f, &m)),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect()
}

/// Samples of the bus's diagonal block of `Y_hat`.
pub fn bus_spectrum(m: &WholeSystemModel, bus: usize, freqs_hz: &[f64]) -> Result<Vec<FrequencySample>> {
    sample_block(&m.yhat(), bus, freqs_hz)
}

/// Modal data of a state matrix: eigenvalue with right and left
/// eigenvectors (`u^H A = lambda u^H`).
#[derive(Clone, Debug)]
pub struct Mode {
    pub value: C64,
    pub right: Vec<C64>,
    pub left: Vec<C64>,
}

impl Mode {
    pub fn of(a: &CMat<f64>, value: C64) -> Mode {
        Mode { value, right: eig::right_eigenvector(a, value), left: eig::left_eigenvector(a, value) }
    }

    /// Residue matrix `(C w)(u^H B) / (u^H w)` of `sys` at this mode.
    pub fn residue(&self, sys: &Lti) -> CMat<f64> {
        let n = self.right.len();
        let w = CMat::from_column_slice(n, 1, &self.right);
        let uh = CMat::from_fn(1, n, |_, k| self.left[k].conj());
        let den = (&uh * &w)[(0, 0)];
        (sys.c() * &w) * (&uh * sys.b()) / den
    }
}

/// Nearest eigenvalue of `a` to `pole`, or `NotAMode` when farther than
/// `tol * max(1, |pole|)`.
pub fn nearest_mode(eigs: &[C64], pole: C64, tol: f64) -> Result<C64> {
    let (best, dist) = eigs
        .iter()
        .map(|e| (*e, (e - pole).norm()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(Error::NotAMode { value: (pole.re, pole.im), distance: f64::INFINITY, tol })?;
    if dist > tol * pole.norm().max(1.0) {
        return Err(Error::NotAMode { value: (pole.re, pole.im), distance: dist, tol });
    }
    Ok(best)
}

/// Least damped eigenvalue whose frequency is within `tol_hz` of `f_hz`.
pub fn mode_near_frequency(eigs: &[C64], f_hz: f64, tol_hz: f64) -> Result<C64> {
    let w = 2.0 * std::f64::consts::PI * f_hz;
    let hit = eigs
        .iter()
        .filter(|e| (e.im / (2.0 * std::f64::consts::PI) - f_hz).abs() <= tol_hz)
        .max_by(|x, y| x.re.total_cmp(&y.re).then(y.im.total_cmp(&x.im)));
    match hit {
        Some(e) => Ok(*e),
        None => {
            let d = eigs.iter().map(|e| (e.im - w).abs()).fold(f64::INFINITY, f64::min);
            Err(Error::NotAMode { value: (0.0, w), distance: d, tol: 2.0 * std::f64::consts::PI * tol_hz })
        }
    }
}

/// Per-bus participation in the mode nearest to `pole`: summed magnitudes
/// of the two diagonal residues of `Y_hat` at the bus, scaled so the largest
/// is 1.
pub fn participation(m: &WholeSystemModel, pole: C64, tol: f64) -> Result<Vec<(usize, f64)>> {
    let eigs = m.eigenvalues()?;
    let lambda = nearest_mode(&eigs, pole, tol)?;
    let res = Mode::of(m.a(), lambda).residue(&m.yhat());
    let mut out: Vec<(usize, f64)> =
        (0..m.n_buses).map(|k| (k + 1, res[(2 * k, 2 * k)].norm() + res[(2 * k + 1, 2 * k + 1)].norm())).collect();
    let max = out.iter().map(|p| p.1).fold(0.0, f64::max);
    if max > 0.0 {
        out.iter_mut().for_each(|p| p.1 /= max);
    }
    Ok(out)
}

/// Which eigenvalues appear in which entry of a system.
#[derive(Clone, Debug)]
pub struct EntryPoles {
    pub eigenvalues: Vec<C64>,
    /// `residues[i]` is the residue matrix at `eigenvalues[i]`.
    pub residues: Vec<CMat<f64>>,
    pub threshold: f64,
}

impl EntryPoles {
    pub fn compute(sys: &Lti, threshold: f64) -> Result<EntryPoles> {
        let eigenvalues = sys.poles()?;
        let residues = eigenvalues.iter().map(|l| Mode::of(sys.a(), *l).residue(sys)).collect();
        Ok(EntryPoles { eigenvalues, residues, threshold })
    }

    /// Indices of eigenvalues with residue above threshold in entry `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> Vec<usize> {
        (0..self.eigenvalues.len()).filter(|&i| self.residues[i][(r, c)].norm() > self.threshold).collect()
    }

    /// Eigenvalue indices that show up in at least one entry.
    pub fn union(&self) -> Vec<usize> {
        (0..self.eigenvalues.len()).filter(|&i| self.residues[i].iter().any(|x| x.norm() > self.threshold)).collect()
    }

    /// `D + sum_i R_i / (s - lambda_i)`.
    pub fn partial_fractions(&self, d: &CMat<f64>, s: C64) -> CMat<f64> {
        let mut out = d.clone();
        for (l, r) in self.eigenvalues.iter().zip(&self.residues) {
            out += r / (s - l);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: f64,
    pub poles: Result<Vec<PoleRecord>>,
}

/// Rebuild the system at each value of the parameter(s) at `path` and
/// collect closed-loop poles. Failures are recorded per point.
pub fn parameter_sweep(
    cfg: &GridConfig,
    path: &str,
    values: &[f64],
    formulation: Option<Formulation>,
) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|&value| {
            let poles = (|| {
                let c = cfg.with_parameter(path, value)?;
                let sys = System::build(&c)?;
                let f = formulation.unwrap_or_else(|| default_formulation(&sys));
                system_poles(&build_model(&sys, f)?, &c.solver.bands)
            })();
            SweepPoint { value, poles }
        })
        .collect()
}

/// Pole trajectories across sweep points by greedy nearest-neighbour pairing
/// with each trajectory's last known position. `out[t][p]` is trajectory
/// `t` at point `p`.
pub fn track_poles(points: &[SweepPoint]) -> Vec<Vec<Option<C64>>> {
    let mut traj: Vec<Vec<Option<C64>>> = Vec::new();
    let mut last: Vec<C64> = Vec::new();
    for (p, pt) in points.iter().enumerate() {
        for t in traj.iter_mut() {
            t.push(None);
        }
        let Ok(poles) = &pt.poles else { continue };
        let vals: Vec<C64> = poles.iter().map(|r| r.value).collect();
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (t, l) in last.iter().enumerate() {
            for (k, v) in vals.iter().enumerate() {
                cand.push(((l - v).norm(), t, k));
            }
        }
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut used_t = vec![false; last.len()];
        let mut used_k = vec![false; vals.len()];
        for (_, t, k) in cand {
            if !used_t[t] && !used_k[k] {
                used_t[t] = true;
                used_k[k] = true;
                traj[t][p] = Some(vals[k]);
                last[t] = vals[k];
            }
        }
        for (k, v) in vals.iter().enumerate() {
            if !used_k[k] {
                let mut t = vec![None; p + 1];
                t[p] = Some(*v);
                traj.push(t);
                last.push(*v);
            }
        }
    }
    traj
}
