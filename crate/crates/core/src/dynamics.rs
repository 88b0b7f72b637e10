//! Driven evolution of the coupled circuit.
//!
//! Drives are physical real fields `Re[ε_α s(t) e^{−iωt}]` coupling through
//! the charge operators, with no rotating-wave approximation. The integration
//! runs in the interaction picture of the static dressed Hamiltonian, so the
//! returned states `c_k` relate to lab amplitudes by `e^{−i2πE_k t} c_k`.
//! That frame is also the gate frame: extracted gates are expressed in the
//! rotating frame of the dressed eigenfrequencies.
//!
//! Units: GHz and ns, `dψ/dt = −i 2π H ψ`. Coherence times are in µs.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{frame_operators, BlockChannel, GateFrame, M2, M4};
use crate::pulse::{apply_reflection_channel, PulseEnvelope, ReflectionModel};
use crate::spectrum::DressedSystem;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Upper bound on the step in units of 1/f_max.
pub const STEP_RULE: f64 = 0.05;
/// Default step factor.
pub const DEFAULT_STEP_FACTOR: f64 = 0.05;

/// Diagonal-dominant placeholder for the port-to-qubit crosstalk.
pub fn default_crosstalk() -> M2 {
    Matrix2::new(
        C64::new(1.0, 0.0),
        C64::from_polar(0.3, 0.5),
        C64::from_polar(0.2, -0.3),
        C64::new(1.0, 0.0),
    )
}

fn condition_number(m: &M2) -> f64 {
    let svd = m.svd(false, false);
    let s = svd.singular_values;
    let (hi, lo) = (s[0].max(s[1]), s[0].min(s[1]));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    /// Carrier frequency (GHz).
    pub frequency: f64,
    /// Port amplitudes (C, C′) in GHz.
    pub port_amps: [C64; 2],
    /// Maps port amplitudes to local amplitudes (ε_A, ε_B).
    pub crosstalk: M2,
    pub envelope: PulseEnvelope<f64>,
    /// Applied to the envelope before it reaches the circuit.
    pub reflection: Option<ReflectionModel<f64>>,
    /// Start time of the envelope (ns).
    pub start: f64,
}

impl DriveConfig {
    pub fn new(frequency: f64, port_amps: [C64; 2], envelope: PulseEnvelope<f64>) -> Self {
        Self {
            frequency,
            port_amps,
            crosstalk: default_crosstalk(),
            envelope,
            reflection: None,
            start: 0.0,
        }
    }

    /// (ε_A, ε_B).
    pub fn local_amps(&self) -> [C64; 2] {
        let [c, cp] = self.port_amps;
        [
            self.crosstalk[(0, 0)] * c + self.crosstalk[(0, 1)] * cp,
            self.crosstalk[(1, 0)] * c + self.crosstalk[(1, 1)] * cp,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let k = condition_number(&self.crosstalk);
        if !(k < 1e6) {
            return Err(Error::Param(format!("crosstalk condition number {k:.3e} >= 1e6")));
        }
        if !self.frequency.is_finite() || self.frequency < 0.0 {
            return Err(Error::Param("drive frequency must be finite and >= 0".into()));
        }
        if let Some(r) = &self.reflection {
            r.validate()?;
        }
        Ok(())
    }

    fn effective_envelope(&self) -> PulseEnvelope<f64> {
        match &self.reflection {
            Some(r) => apply_reflection_channel(&self.envelope, r),
            None => self.envelope.clone(),
        }
    }

    /// End of the (reflected) envelope.
    pub fn end(&self) -> f64 {
        self.start + self.effective_envelope().duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoherenceSpec {
    pub t1_a: Option<f64>,
    pub t1_b: Option<f64>,
    pub t2e_a: Option<f64>,
    pub t2e_b: Option<f64>,
    pub t2star_a: Option<f64>,
    pub t2star_b: Option<f64>,
    /// Relaxation 2 → 1 of either qubit.
    pub level2_t1: Option<f64>,
    /// Coherence of |2⟩ relative to the lower levels.
    pub level2_t2: Option<f64>,
}

impl CoherenceSpec {
    /// Measured device values (µs).
    pub fn table1() -> Self {
        Self {
            t1_a: Some(56.0),
            t1_b: Some(25.0),
            t2e_a: Some(23.0),
            t2e_b: Some(14.75),
            t2star_a: Some(17.5),
            t2star_b: Some(4.0),
            level2_t1: None,
            level2_t2: None,
        }
    }

    pub fn with_level2(mut self, t1: f64, t2: f64) -> Self {
        self.level2_t1 = Some(t1);
        self.level2_t2 = Some(t2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("t1_a", self.t1_a),
            ("t1_b", self.t1_b),
            ("t2e_a", self.t2e_a),
            ("t2e_b", self.t2e_b),
            ("t2star_a", self.t2star_a),
            ("t2star_b", self.t2star_b),
            ("level2_t1", self.level2_t1),
            ("level2_t2", self.level2_t2),
        ];
        for (name, v) in all {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(Error::Param(format!("{name} must be positive, got {x}")));
                }
            }
        }
        for (name, t1, t2) in [
            ("a", self.t1_a, self.t2e_a),
            ("b", self.t1_b, self.t2e_b),
            ("level2", self.level2_t1, self.level2_t2),
        ] {
            if let (Some(t1), Some(t2)) = (t1, t2) {
                if t2 > 2.0 * t1 * (1.0 + 1e-12) {
                    return Err(Error::Param(format!(
                        "qubit {name}: T2 = {t2} exceeds 2 T1 = {}; pure dephasing would be negative",
                        2.0 * t1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Integrator resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Step as a fraction of the fastest period 1/f_max; must not exceed [`STEP_RULE`].
    pub factor: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { factor: DEFAULT_STEP_FACTOR }
    }
}

impl StepControl {
    pub fn new(factor: f64) -> Self {
        Self { factor }
    }

    /// Step bound for the given system and drives.
    pub fn max_step(&self, sys: &DressedSystem<f64>, drives: &[DriveConfig]) -> Result<f64> {
        if !(self.factor > 0.0 && self.factor <= STEP_RULE) {
            return Err(Error::Resolution(format!(
                "step factor {} outside (0, {STEP_RULE}]",
                self.factor
            )));
        }
        let fd = drives.iter().map(|d| d.frequency).fold(0.0, f64::max);
        let fmax = sys.dynamics_energies().iter().fold(0.0f64, |a, &b| a.max(b.abs())) + fd;
        let mut h = if fmax > 0.0 { self.factor / fmax } else { f64::INFINITY };
        for d in drives {
            h = h.min(d.envelope.dt / 4.0);
        }
        if !h.is_finite() {
            h = 0.25;
        }
        Ok(h)
    }
}

struct PreparedDrive {
    eps: [C64; 2],
    omega: f64,
    env: PulseEnvelope<f64>,
    start: f64,
    end: f64,
}

/// Static operators of a dressed system in flat row-major storage.
pub struct Engine {
    dim: usize,
    energies: Vec<f64>,
    /// Im n_A and Im n_B (the charge operators are purely imaginary).
    ra: Vec<f64>,
    rb: Vec<f64>,
    drives: Vec<PreparedDrive>,
}

impl Engine {
    pub fn new(sys: &DressedSystem<f64>, drives: &[DriveConfig]) -> Result<Self> {
        let dim = sys.dim;
        let mut ra = vec![0.0; dim * dim];
        let mut rb = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let a = sys.n_a_op[(r, c)];
                let b = sys.n_b_op[(r, c)];
                if a.re.abs() > 1e-12 || b.re.abs() > 1e-12 {
                    return Err(Error::Param("charge operators must be purely imaginary".into()));
                }
                ra[r * dim + c] = a.im;
                rb[r * dim + c] = b.im;
            }
        }
        let mut prepared = Vec::with_capacity(drives.len());
        for d in drives {
            d.validate()?;
            let env = d.effective_envelope();
            let end = d.start + env.duration();
            prepared.push(PreparedDrive {
                eps: d.local_amps(),
                omega: TWO_PI * d.frequency,
                env,
                start: d.start,
                end,
            });
        }
        Ok(Self { dim, energies: sys.dynamics_energies(), ra, rb, drives: prepared })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Local field amplitudes (a_A, a_B) at time t.
    #[inline]
    fn field(&self, t: f64) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for d in &self.drives {
            if t < d.start || t > d.end {
                continue;
            }
            let s = d.env.value_at(t - d.start);
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            let carrier = C64::from_polar(1.0, -d.omega * t) * s;
            a += (d.eps[0] * carrier).re;
            b += (d.eps[1] * carrier).re;
        }
        (a, b)
    }

    fn phases(&self, t: f64, out: &mut [C64]) {
        for (o, &e) in out.iter_mut().zip(&self.energies) {
            *o = C64::from_polar(1.0, TWO_PI * e * t);
        }
    }

    fn half_step_factors(&self, h: f64) -> Vec<C64> {
        self.energies.iter().map(|&e| C64::from_polar(1.0, TWO_PI * e * h / 2.0)).collect()
    }

    fn build_r(&self, a: f64, b: f64, r: &mut [f64]) {
        for ((o, &x), &y) in r.iter_mut().zip(&self.ra).zip(&self.rb) {
            *o = a * x + b * y;
        }
    }
}

struct Work {
    r: Vec<f64>,
    yre: Vec<f64>,
    yim: Vec<f64>,
}

impl Work {
    fn new(dim: usize) -> Self {
        Self { r: vec![0.0; dim * dim], yre: vec![0.0; dim], yim: vec![0.0; dim] }
    }
}

/// dψ/dt for every column of `psi` (column-major, `dim` per column).
fn deriv_pure(eng: &Engine, t: f64, ph: &[C64], psi: &[C64], out: &mut [C64], w: &mut Work) {
    let dim = eng.dim;
    let (a, b) = eng.field(t);
    if a == 0.0 && b == 0.0 {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        return;
    }
    eng.build_r(a, b, &mut w.r);
    for (col, dst) in psi.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
        for k in 0..dim {
            let y = ph[k].conj() * col[k];
            w.yre[k] = y.re;
            w.yim[k] = y.im;
        }
        for rr in 0..dim {
            let row = &w.r[rr * dim..(rr + 1) * dim];
            let mut sr = 0.0;
            let mut si = 0.0;
            for k in 0..dim {
                sr += row[k] * w.yre[k];
                si += row[k] * w.yim[k];
            }
            dst[rr] = ph[rr] * C64::new(TWO_PI * sr, TWO_PI * si);
        }
    }
}

/// Integrate `psi` (several columns) from t0 to t1 with steps no larger than `h_max`.
/// `observe` is called after every step.
fn evolve_pure<F: FnMut(f64, &[C64])>(
    eng: &Engine,
    psi: &mut [C64],
    t0: f64,
    t1: f64,
    h_max: f64,
    mut observe: F,
) {
    if t1 <= t0 {
        return;
    }
    let n = ((t1 - t0) / h_max).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let dim = eng.dim;
    let len = psi.len();
    let mut k1 = vec![C64::new(0.0, 0.0); len];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut w = Work::new(dim);
    let half = eng.half_step_factors(h);
    let mut ph0 = vec![C64::new(0.0, 0.0); dim];
    let mut ph1 = ph0.clone();
    let mut ph2 = ph0.clone();
    eng.phases(t0, &mut ph0);
    for s in 0..n {
        let t = t0 + s as f64 * h;
        if s % 64 == 0 {
            eng.phases(t, &mut ph0);
        }
        for k in 0..dim {
            ph1[k] = ph0[k] * half[k];
            ph2[k] = ph1[k] * half[k];
        }
        deriv_pure(eng, t, &ph0, psi, &mut k1, &mut w);
        for i in 0..len {
            tmp[i] = psi[i] + k1[i] * (h / 2.0);
        }
        deriv_pure(eng, t + h / 2.0, &ph1, &tmp, &mut k2, &mut w);
        for i in 0..len {
            tmp[i] = psi[i] + k2[i] * (h / 2.0);
        }
        deriv_pure(eng, t + h / 2.0, &ph1, &tmp, &mut k3, &mut w);
        for i in 0..len {
            tmp[i] = psi[i] + k3[i] * h;
        }
        deriv_pure(eng, t + h, &ph2, &tmp, &mut k4, &mut w);
        for i in 0..len {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        std::mem::swap(&mut ph0, &mut ph2);
        observe(t + h, psi);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum States {
    Pure(Vec<Vec<C64>>),
    Mixed(Vec<DMatrix<C64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    /// Interaction-picture states at each time.
    pub states: States,
    /// Populations of |00⟩, |01⟩, |10⟩, |11⟩.
    pub populations: Vec<[f64; 4]>,
    /// Population outside the computational block.
    pub leakage: Vec<f64>,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Param("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid[0] < 0.0 {
        return Err(Error::Param("time grid must be non-negative and ascending".into()));
    }
    Ok(())
}

/// Unitary evolution of one state over `t_grid` (starting at t = 0).
pub fn propagate_schrodinger(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    initial: &[C64],
    t_grid: &[f64],
    ctl: StepControl,
) -> Result<PropagationResult> {
    check_grid(t_grid)?;
    if initial.len() != sys.dim {
        return Err(Error::Param(format!("initial state has length {}, expected {}", initial.len(), sys.dim)));
    }
    let eng = Engine::new(sys, drives)?;
    let h = ctl.max_step(sys, drives)?;
    let comp = sys.computational();
    let mut psi = initial.to_vec();
    let mut t = 0.0;
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut pops = Vec::with_capacity(t_grid.len());
    let mut leak = Vec::with_capacity(t_grid.len());
    for &tg in t_grid {
        evolve_pure(&eng, &mut psi, t, tg, h, |_, _| {});
        t = tg;
        let p = comp.map(|k| psi[k].norm_sqr());
        let total: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        times.push(tg);
        pops.push(p);
        leak.push(total - p.iter().sum::<f64>());
        states.push(psi.clone());
    }
    Ok(PropagationResult { times, states: States::Pure(states), populations: pops, leakage: leak })
}

/// Dressed basis vector for bare label (i, j).
pub fn basis_state(sys: &DressedSystem<f64>, i: usize, j: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); sys.dim];
    v[sys.idx(i, j)] = C64::new(1.0, 0.0);
    v
}

/// Convert an interaction-picture state to lab amplitudes at time t.
pub fn to_lab(sys: &DressedSystem<f64>, state: &[C64], t: f64) -> Vec<C64> {
    sys.dynamics_energies()
        .iter()
        .zip(state)
        .map(|(&e, &c)| C64::from_polar(1.0, -TWO_PI * e * t) * c)
        .collect()
}

/// Largest population of dressed state `watch` over [0, t_end], sampled at
/// every integrator step, for the given initial state.
pub fn max_population(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    initial: &[C64],
    watch: usize,
    t_end: f64,
    ctl: StepControl,
) -> Result<f64> {
    if initial.len() != sys.dim || watch >= sys.dim {
        return Err(Error::Param("state or index out of range".into()));
    }
    let eng = Engine::new(sys, drives)?;
    let h = ctl.max_step(sys, drives)?;
    let mut psi = initial.to_vec();
    let mut peak = psi[watch].norm_sqr();
    evolve_pure(&eng, &mut psi, 0.0, t_end, h, |_, s| peak = peak.max(s[watch].norm_sqr()));
    Ok(peak)
}

/// Computational block of the propagator over [0, t_end] in the dressed
/// rotating frame, without virtual-Z correction.
pub fn simulate_block(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    t_end: f64,
    ctl: StepControl,
) -> Result<M4> {
    simulate_block_observed(sys, drives, t_end, ctl, |_, _| {})
}

/// As [`simulate_block`], calling `observe(t, columns)` after every step.
/// Columns are stored consecutively, one per computational input.
pub fn simulate_block_observed<F: FnMut(f64, &[C64])>(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    t_end: f64,
    ctl: StepControl,
    observe: F,
) -> Result<M4> {
    let eng = Engine::new(sys, drives)?;
    let h = ctl.max_step(sys, drives)?;
    let comp = sys.computational();
    let dim = sys.dim;
    let mut psi = vec![C64::new(0.0, 0.0); 4 * dim];
    for (c, &k) in comp.iter().enumerate() {
        psi[c * dim + k] = C64::new(1.0, 0.0);
    }
    evolve_pure(&eng, &mut psi, 0.0, t_end, h, observe);
    Ok(M4::from_fn(|r, c| psi[c * dim + comp[r]]))
}

/// Frame-corrected computational block and average leakage.
pub fn extract_gate(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    gate_time: f64,
    frame: GateFrame,
    ctl: StepControl,
) -> Result<(M4, f64)> {
    if gate_time == 0.0 {
        return Ok((M4::identity(), 0.0));
    }
    let u = simulate_block(sys, drives, gate_time, ctl)?;
    let (pre, post) = frame_operators(frame);
    let g = post * u * pre;
    Ok((g, crate::gates::leakage_from_block(&u)))
}

/// Excited population of B (j = 1, any A level) versus detuning and time.
pub fn chevron_scan(
    sys: &DressedSystem<f64>,
    template: &[DriveConfig],
    detunings: &[f64],
    times: &[f64],
    control_state: usize,
    ctl: StepControl,
) -> Result<Vec<Vec<f64>>> {
    check_grid(times)?;
    if control_state > 1 {
        return Err(Error::Param("control_state must be 0 or 1".into()));
    }
    let targets: Vec<usize> = (0..sys.levels).map(|i| sys.idx(i, 1)).collect();
    let init = basis_state(sys, control_state, 0);
    detunings
        .par_iter()
        .map(|&d| {
            let drives: Vec<DriveConfig> = template
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    t.frequency += d;
                    t
                })
                .collect();
            let r = propagate_schrodinger(sys, &drives, &init, times, ctl)?;
            let States::Pure(states) = r.states else { unreachable!() };
            Ok(states
                .iter()
                .map(|s| targets.iter().map(|&k| s[k].norm_sqr()).sum())
                .collect())
        })
        .collect()
}

/// Reduced Bloch vector of B on its {0, 1} levels.
pub fn bloch_of_b(sys: &DressedSystem<f64>, state: &[C64]) -> [f64; 3] {
    let mut r00 = 0.0;
    let mut r11 = 0.0;
    let mut r01 = C64::new(0.0, 0.0);
    for i in 0..sys.levels {
        let a0 = state[sys.idx(i, 0)];
        let a1 = state[sys.idx(i, 1)];
        r00 += a0.norm_sqr();
        r11 += a1.norm_sqr();
        r01 += a0 * a1.conj();
    }
    [2.0 * r01.re, -2.0 * r01.im, r00 - r11]
}

/// Bloch trajectory of B for A prepared in `control_state` and B in |0⟩.
pub fn bloch_trajectory(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    t_grid: &[f64],
    control_state: usize,
    ctl: StepControl,
) -> Result<Vec<[f64; 3]>> {
    let init = basis_state(sys, control_state, 0);
    let r = propagate_schrodinger(sys, drives, &init, t_grid, ctl)?;
    let States::Pure(states) = r.states else { unreachable!() };
    Ok(states.iter().map(|s| bloch_of_b(sys, s)).collect())
}

/// Jump operator `Σ_j c_j |a_j⟩⟨b_j|` in the dressed basis.
struct Jump {
    terms: Vec<(usize, usize, f64, f64)>, // (a, b, amplitude, E_a − E_b)
}

struct Dissipator {
    /// Elementwise decay of ρ_kl from the anticommutator and diagonal jumps.
    decay: Vec<f64>,
    jumps: Vec<Jump>,
}

fn us_to_rate(t_us: f64) -> f64 {
    1.0 / (t_us * 1000.0)
}

fn build_dissipator(sys: &DressedSystem<f64>, coh: &CoherenceSpec) -> Result<Dissipator> {
    coh.validate()?;
    let dim = sys.dim;
    let l = sys.levels;
    let e = sys.dynamics_energies();
    let mut jumps = Vec::new();
    let mut decay = vec![0.0; dim * dim];
    let mut diag_loss = vec![0.0; dim];
    // diagonal operators Σ z_k |k⟩⟨k| contribute −(Σ rate (z_k − z_l)²/2) ρ_kl
    let add_diag = |z: &dyn Fn(usize, usize) -> f64, rate: f64, decay: &mut [f64]| {
        let zs: Vec<f64> = (0..dim).map(|k| z(sys.labels[k].0, sys.labels[k].1)).collect();
        for r in 0..dim {
            for c in 0..dim {
                let d = zs[r] - zs[c];
                decay[r * dim + c] += rate * d * d / 2.0;
            }
        }
    };
    let mut relax = |lower: usize, upper: usize, on_a: bool, rate: f64, loss: &mut [f64]| {
        let amp = rate.sqrt();
        let mut terms = Vec::with_capacity(l);
        for j in 0..l {
            let (a, b) = if on_a { (sys.idx(lower, j), sys.idx(upper, j)) } else { (sys.idx(j, lower), sys.idx(j, upper)) };
            terms.push((a, b, amp, e[a] - e[b]));
            loss[b] += rate;
        }
        jumps.push(Jump { terms });
    };

    for (on_a, t1, t2) in [(true, coh.t1_a, coh.t2e_a), (false, coh.t1_b, coh.t2e_b)] {
        if let Some(t1) = t1 {
            relax(0, 1, on_a, us_to_rate(t1), &mut diag_loss);
        }
        if let Some(t2) = t2 {
            let g1 = t1.map(us_to_rate).unwrap_or(0.0);
            let gphi = us_to_rate(t2) - g1 / 2.0;
            if gphi < -1e-15 {
                return Err(Error::Param("negative pure-dephasing rate".into()));
            }
            // L = sqrt(γφ/2) σz on the {0, 1} levels of one qubit
            let z = move |i: usize, j: usize| {
                let s = if on_a { i } else { j };
                match s {
                    0 => 1.0,
                    1 => -1.0,
                    _ => 0.0,
                }
            };
            add_diag(&z, gphi.max(0.0) / 2.0, &mut decay);
        }
    }
    if let Some(t1) = coh.level2_t1 {
        for on_a in [true, false] {
            relax(1, 2, on_a, us_to_rate(t1), &mut diag_loss);
        }
    }
    if let Some(t2) = coh.level2_t2 {
        let g1 = coh.level2_t1.map(us_to_rate).unwrap_or(0.0);
        let gphi = us_to_rate(t2) - g1 / 2.0;
        if gphi < -1e-15 {
            return Err(Error::Param("negative |2> pure-dephasing rate".into()));
        }
        for on_a in [true, false] {
            // L = sqrt(2 γφ2) |2⟩⟨2|
            let z = move |i: usize, j: usize| if (if on_a { i } else { j }) == 2 { 1.0 } else { 0.0 };
            add_diag(&z, 2.0 * gphi.max(0.0), &mut decay);
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            decay[r * dim + c] += (diag_loss[r] + diag_loss[c]) / 2.0;
        }
    }
    Ok(Dissipator { decay, jumps })
}

struct MixedWork {
    r: Vec<f64>,
    a: Vec<C64>,
    b: Vec<C64>,
}

/// dρ/dt in the interaction picture (row-major ρ).
fn deriv_mixed(
    eng: &Engine,
    dis: &Dissipator,
    t: f64,
    ph: &[C64],
    rho: &[C64],
    out: &mut [C64],
    w: &mut MixedWork,
) {
    let dim = eng.dim;
    let (fa, fb) = eng.field(t);
    if fa == 0.0 && fb == 0.0 {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    } else {
        // −i2π[H, ρ] with H = D (iR) D†  →  2π (K ρ − ρ K), K = D R D†
        eng.build_r(fa, fb, &mut w.r);
        // a = D† ρ D ; then out = 2π D (R a − a R) D†
        for r in 0..dim {
            for c in 0..dim {
                w.a[r * dim + c] = ph[r].conj() * rho[r * dim + c] * ph[c];
            }
        }
        for r in 0..dim {
            let row = &w.r[r * dim..(r + 1) * dim];
            for c in 0..dim {
                w.b[r * dim + c] = C64::new(0.0, 0.0);
            }
            for k in 0..dim {
                let x = row[k];
                if x == 0.0 {
                    continue;
                }
                let src = &w.a[k * dim..(k + 1) * dim];
                let dst = &mut w.b[r * dim..(r + 1) * dim];
                for c in 0..dim {
                    dst[c] += src[c] * x;
                }
            }
        }
        for r in 0..dim {
            let arow = &w.a[r * dim..(r + 1) * dim];
            for c in 0..dim {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..dim {
                    s += arow[k] * w.r[k * dim + c];
                }
                let v = w.b[r * dim + c] - s;
                out[r * dim + c] = ph[r] * v * ph[c].conj() * TWO_PI;
            }
        }
    }
    for i in 0..dim * dim {
        out[i] -= rho[i] * dis.decay[i];
    }
    for j in &dis.jumps {
        for &(a1, b1, c1, f1) in &j.terms {
            let p1 = C64::from_polar(c1, TWO_PI * f1 * t);
            for &(a2, b2, c2, f2) in &j.terms {
                let p2 = C64::from_polar(c2, -TWO_PI * f2 * t);
                out[a1 * dim + a2] += p1 * p2 * rho[b1 * dim + b2];
            }
        }
    }
}

fn evolve_mixed(eng: &Engine, dis: &Dissipator, rho: &mut [C64], t0: f64, t1: f64, h_max: f64) {
    if t1 <= t0 {
        return;
    }
    let n = ((t1 - t0) / h_max).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let dim = eng.dim;
    let len = rho.len();
    let z = C64::new(0.0, 0.0);
    let mut k1 = vec![z; len];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut w = MixedWork { r: vec![0.0; dim * dim], a: vec![z; len], b: vec![z; len] };
    let half = eng.half_step_factors(h);
    let mut ph0 = vec![z; dim];
    let mut ph1 = ph0.clone();
    let mut ph2 = ph0.clone();
    eng.phases(t0, &mut ph0);
    for s in 0..n {
        let t = t0 + s as f64 * h;
        if s % 64 == 0 {
            eng.phases(t, &mut ph0);
        }
        for k in 0..dim {
            ph1[k] = ph0[k] * half[k];
            ph2[k] = ph1[k] * half[k];
        }
        deriv_mixed(eng, dis, t, &ph0, rho, &mut k1, &mut w);
        for i in 0..len {
            tmp[i] = rho[i] + k1[i] * (h / 2.0);
        }
        deriv_mixed(eng, dis, t + h / 2.0, &ph1, &tmp, &mut k2, &mut w);
        for i in 0..len {
            tmp[i] = rho[i] + k2[i] * (h / 2.0);
        }
        deriv_mixed(eng, dis, t + h / 2.0, &ph1, &tmp, &mut k3, &mut w);
        for i in 0..len {
            tmp[i] = rho[i] + k3[i] * h;
        }
        deriv_mixed(eng, dis, t + h, &ph2, &tmp, &mut k4, &mut w);
        for i in 0..len {
            rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        std::mem::swap(&mut ph0, &mut ph2);
    }
}

fn to_flat(m: &DMatrix<C64>) -> Vec<C64> {
    let d = m.nrows();
    (0..d * d).map(|i| m[(i / d, i % d)]).collect()
}

fn from_flat(v: &[C64], d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |r, c| v[r * d + c])
}

/// Open-system evolution of a density matrix over `t_grid` (starting at t = 0).
pub fn propagate_lindblad(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    initial: &DMatrix<C64>,
    coherence: &CoherenceSpec,
    t_grid: &[f64],
    ctl: StepControl,
) -> Result<PropagationResult> {
    check_grid(t_grid)?;
    if initial.nrows() != sys.dim || initial.ncols() != sys.dim {
        return Err(Error::Param("initial density matrix has the wrong shape".into()));
    }
    let eng = Engine::new(sys, drives)?;
    let dis = build_dissipator(sys, coherence)?;
    let h = ctl.max_step(sys, drives)?;
    let comp = sys.computational();
    let mut rho = to_flat(initial);
    let d = sys.dim;
    let mut t = 0.0;
    let mut states = Vec::with_capacity(t_grid.len());
    let mut pops = Vec::with_capacity(t_grid.len());
    let mut leak = Vec::with_capacity(t_grid.len());
    for &tg in t_grid {
        evolve_mixed(&eng, &dis, &mut rho, t, tg, h);
        t = tg;
        let p = comp.map(|k| rho[k * d + k].re);
        let tr: f64 = (0..d).map(|k| rho[k * d + k].re).sum();
        pops.push(p);
        leak.push(tr - p.iter().sum::<f64>());
        states.push(from_flat(&rho, d));
    }
    Ok(PropagationResult {
        times: t_grid.to_vec(),
        states: States::Mixed(states),
        populations: pops,
        leakage: leak,
    })
}

/// Channel of a driven open-system gate on the computational block, from the
/// ten Hermitian-independent matrix units, with the virtual-Z frame applied.
pub fn lindblad_block_channel(
    sys: &DressedSystem<f64>,
    drives: &[DriveConfig],
    t_end: f64,
    coherence: &CoherenceSpec,
    frame: GateFrame,
    ctl: StepControl,
) -> Result<BlockChannel> {
    let eng = Engine::new(sys, drives)?;
    let dis = build_dissipator(sys, coherence)?;
    let h = ctl.max_step(sys, drives)?;
    let comp = sys.computational();
    let d = sys.dim;
    let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i..4).map(move |j| (i, j))).collect();
    let outs: Vec<M4> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut rho = vec![C64::new(0.0, 0.0); d * d];
            rho[comp[i] * d + comp[j]] = C64::new(1.0, 0.0);
            evolve_mixed(&eng, &dis, &mut rho, 0.0, t_end, h);
            M4::from_fn(|r, c| rho[comp[r] * d + comp[c]])
        })
        .collect();
    let mut out = [[M4::zeros(); 4]; 4];
    for (&(i, j), m) in pairs.iter().zip(outs) {
        out[j][i] = m.adjoint();
        out[i][j] = m;
    }
    let (pre, post) = frame_operators(frame);
    Ok(BlockChannel { out }.framed(&pre, &post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{make_envelope, Shape};
    use crate::spectrum::{build_coupled_system, CoupledParams};

    fn system() -> DressedSystem<f64> {
        build_coupled_system(&CoupledParams::table1()).unwrap()
    }

    #[test]
    fn idle_is_identity() {
        let sys = system();
        let (g, leak) = extract_gate(&sys, &[], 20.0, GateFrame::default(), StepControl::default()).unwrap();
        assert!(crate::gates::max_abs(&(g - M4::identity())) < 1e-12);
        assert!(leak < 1e-12);
    }

    #[test]
    fn step_rule_enforced() {
        let sys = system();
        assert!(matches!(StepControl::new(0.1).max_step(&sys, &[]), Err(Error::Resolution(_))));
    }

    #[test]
    fn rejects_singular_crosstalk() {
        let sys = system();
        let env = make_envelope(Shape::Square { duration: 4.0 }, 1.0).unwrap();
        let mut d = DriveConfig::new(1.0, [C64::new(0.1, 0.0), C64::new(0.0, 0.0)], env);
        d.crosstalk = Matrix2::new(C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0));
        assert!(extract_gate(&sys, &[d], 4.0, GateFrame::default(), StepControl::default()).is_err());
    }

    #[test]
    fn coherence_validation() {
        let mut c = CoherenceSpec::table1();
        assert!(c.validate().is_ok());
        c.t2e_a = Some(200.0);
        assert!(c.validate().is_err());
    }
}
