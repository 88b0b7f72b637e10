use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::darkening::{darkening_root, on_element};
use super::sweep::{find_crossing, Crossing};
use crate::dynamics::{default_crosstalk, lindblad_block_channel, simulate_block, CoherenceSpec, DriveConfig, StepControl};
use crate::error::{Error, Result};
use crate::gates::{self, cx_pi, frame_operators, wrap, GateFrame, M2, M4};
use crate::pulse::{make_envelope, predistort, PulseEnvelope, ReflectionModel, Shape, DEFAULT_RESIDUAL_TOL};
use crate::spectrum::DressedSystem;

pub const CALIBRATION_SCHEMA_VERSION: u32 = 1;
/// Shortest gate the tune-up accepts for the reference device (ns).
pub const MIN_GATE_TIME: f64 = 30.0;

/// The seven tune-up parameters plus gate time and the Stark-shift estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CXCalibration {
    /// Port ratio C′/C.
    pub eta: C64,
    /// Port amplitude C before the CR angle is applied (GHz).
    pub common_amp: C64,
    /// Drive frequency offset from the ON-state target transition (GHz).
    pub cr_detuning: f64,
    /// Extra drive phase (rad).
    pub cr_angle: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    pub gate_time: f64,
    /// θ_A per unit power-weighted time, 2πΔ_s ∫s² dt = θ_A (GHz).
    pub stark_shift: f64,
}

impl CXCalibration {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_time > 0.0) {
            return Err(Error::Param("gate_time must be > 0".into()));
        }
        let vals = [
            self.eta.re,
            self.eta.im,
            self.common_amp.re,
            self.common_amp.im,
            self.cr_detuning,
            self.cr_angle,
            self.theta_a,
            self.theta_b,
            self.stark_shift,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Param("calibration parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn frame(&self) -> GateFrame {
        GateFrame { theta_a: self.theta_a, theta_b: self.theta_b }
    }

    /// (C, C′).
    pub fn port_amps(&self) -> [C64; 2] {
        let c = self.common_amp * C64::from_polar(1.0, self.cr_angle);
        [c, c * self.eta]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepWindows {
    /// Relative window for |η| and |C|.
    pub amplitude_rel: f64,
    /// Detuning window (GHz).
    pub detuning: f64,
    /// Window for phases and angles (rad).
    pub angle: f64,
}

impl Default for SweepWindows {
    fn default() -> Self {
        Self { amplitude_rel: 0.05, detuning: 1e-3, angle: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub amplitude_rel: f64,
    pub detuning: f64,
    pub angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { amplitude_rel: 1e-4, detuning: 2e-6, angle: 2e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub crosstalk: M2,
    /// Ramp duration of the rounded-square envelope (ns).
    pub ramp: f64,
    pub dt: f64,
    /// Channel between the generator and the device.
    pub reflection: Option<ReflectionModel<f64>>,
    /// Predistort the envelope against `reflection`.
    pub predistort: bool,
    pub step: StepControl,
    pub max_iterations: usize,
    /// Repetitions for the first passes and for the later passes.
    pub repetitions: (usize, usize),
    pub windows: SweepWindows,
    pub tolerances: Tolerances,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            crosstalk: default_crosstalk(),
            ramp: 6.0,
            dt: 1.0,
            reflection: None,
            predistort: false,
            step: StepControl::default(),
            max_iterations: 12,
            repetitions: (1, 3),
            windows: SweepWindows::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Rounded-square envelope filling the gate time, predistorted if requested.
pub fn cx_envelope(gate_time: f64, s: &CalibrationSettings) -> Result<PulseEnvelope<f64>> {
    let flat = gate_time - 2.0 * s.ramp;
    if flat < 0.0 {
        return Err(Error::Param(format!("gate_time {gate_time} shorter than two ramps of {}", s.ramp)));
    }
    let env = make_envelope(Shape::RoundedSquare { flat, ramp: s.ramp }, s.dt)?;
    match (&s.reflection, s.predistort) {
        (Some(r), true) => predistort(&env, r, DEFAULT_RESIDUAL_TOL),
        _ => Ok(env),
    }
}

/// ON-state target transition frequency E₁₁ − E₁₀.
pub fn cr_frequency(sys: &DressedSystem<f64>) -> f64 {
    let e = sys.dynamics_energies();
    e[sys.idx(1, 1)] - e[sys.idx(1, 0)]
}

pub fn cx_drive(sys: &DressedSystem<f64>, cal: &CXCalibration, s: &CalibrationSettings) -> Result<DriveConfig> {
    let env = cx_envelope(cal.gate_time, s)?;
    let mut d = DriveConfig::new(cr_frequency(sys) + cal.cr_detuning, cal.port_amps(), env);
    d.crosstalk = s.crosstalk;
    d.reflection = s.reflection.clone();
    Ok(d)
}

/// Computational block in the dressed frame, without frame correction.
pub fn raw_gate(sys: &DressedSystem<f64>, cal: &CXCalibration, s: &CalibrationSettings) -> Result<M4> {
    let d = cx_drive(sys, cal, s)?;
    let t = d.end().max(cal.gate_time);
    simulate_block(sys, &[d], t, s.step)
}

fn apply_frame(u: &M4, theta_a: f64, theta_b: f64) -> M4 {
    let (pre, post) = frame_operators(GateFrame { theta_a, theta_b });
    post * u * pre
}

/// Frame-corrected gate and its leakage.
pub fn framed_gate(sys: &DressedSystem<f64>, cal: &CXCalibration, s: &CalibrationSettings) -> Result<(M4, f64)> {
    let u = raw_gate(sys, cal, s)?;
    Ok((apply_frame(&u, cal.theta_a, cal.theta_b), gates::leakage_from_block(&u)))
}

/// (θ_A, θ_B) read off a block of the CR_exp form.
pub fn frame_from_block(u: &M4) -> (f64, f64) {
    let u00 = u[(0, 0)];
    let theta_b = (u[(1, 1)] / u00).arg();
    let off = (u[(2, 3)] + u[(3, 2)]) * 0.5;
    let theta_a = (C64::new(0.0, 1.0) * off / u00).arg();
    (theta_a, theta_b)
}

fn power_integral(gate_time: f64, s: &CalibrationSettings) -> Result<f64> {
    Ok(cx_envelope(gate_time, s)?.power_integral())
}

/// Flat-top extension used to pick the 2π branch of the Stark phase (ns).
const STARK_STRETCH: f64 = 2.0;

/// Δ_s from the wrapped θ_A, on the branch nearest `reference` (GHz).
fn stark_branch(theta_a: f64, reference: f64, gate_time: f64, s: &CalibrationSettings) -> Result<f64> {
    let p = power_integral(gate_time, s)?;
    let raw = theta_a / (TAU * p);
    let k = ((reference - raw) * p).round();
    Ok(raw + k / p)
}

/// Starting point: matrix-element darkening, π-pulse amplitude on the ON
/// transition aligned with X, and frame phases from one simulation.
pub fn coarse_calibration(sys: &DressedSystem<f64>, gate_time: f64, s: &CalibrationSettings) -> Result<CXCalibration> {
    if gate_time < MIN_GATE_TIME {
        return Err(Error::Param(format!("gate_time {gate_time} ns below {MIN_GATE_TIME} ns")));
    }
    let eta = darkening_root(sys, &s.crosstalk)?;
    let k_on = on_element(sys, &s.crosstalk, eta);
    if k_on.norm() == 0.0 {
        return Err(Error::Singular("ON-state transition is dark".into()));
    }
    let area = cx_envelope(gate_time, s)?.area().re;
    let common_amp = C64::from_polar(1.0 / (2.0 * k_on.norm() * area), -k_on.arg());
    let mut cal = CXCalibration {
        eta,
        common_amp,
        cr_detuning: 0.0,
        cr_angle: 0.0,
        theta_a: 0.0,
        theta_b: 0.0,
        gate_time,
        stark_shift: 0.0,
    };
    let u = raw_gate(sys, &cal, s)?;
    let (ta, tb) = frame_from_block(&u);
    cal.theta_a = ta;
    cal.theta_b = tb;
    // θ_A is only known mod 2π; the phase picked up over a short stretch of
    // the flat top fixes the branch.
    let mut longer = cal;
    longer.gate_time = gate_time + STARK_STRETCH;
    let (tl, _) = frame_from_block(&raw_gate(sys, &longer, s)?);
    let local = wrap(tl - ta) / (TAU * STARK_STRETCH);
    cal.stark_shift = stark_branch(ta, local, gate_time, s)?;
    Ok(cal)
}

/// Tune-up experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Syndrome {
    /// A off, B from |0⟩, X analysis: rotation of B about X.
    A,
    /// A off, B from |0⟩, Y analysis: rotation of B about Y.
    B,
    /// A on, B from |0⟩, X analysis: over/under-rotation.
    C,
    /// A on, B from |0⟩, echoed unit, Y analysis: axis tilt (detuning).
    D,
    /// A on, B on the equator, echoed unit, X analysis: axis angle.
    E,
    /// A off, B on the equator, X analysis: phase of B.
    F,
    /// A on the equator, B from |0⟩, X analysis on A: phase of A.
    G,
}

impl Syndrome {
    pub const ALL: [Syndrome; 7] =
        [Syndrome::A, Syndrome::B, Syndrome::C, Syndrome::D, Syndrome::E, Syndrome::F, Syndrome::G];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    EtaMagnitude,
    EtaPhase,
    Amplitude,
    Detuning,
    Angle,
    ThetaB,
    ThetaA,
}

impl Parameter {
    pub const ALL: [Parameter; 7] = [
        Parameter::EtaMagnitude,
        Parameter::EtaPhase,
        Parameter::Amplitude,
        Parameter::Detuning,
        Parameter::Angle,
        Parameter::ThetaB,
        Parameter::ThetaA,
    ];
}

pub fn param_value(c: &CXCalibration, p: Parameter) -> f64 {
    match p {
        Parameter::EtaMagnitude => c.eta.norm(),
        Parameter::EtaPhase => c.eta.arg(),
        Parameter::Amplitude => c.common_amp.norm(),
        Parameter::Detuning => c.cr_detuning,
        Parameter::Angle => c.cr_angle,
        Parameter::ThetaB => c.theta_b,
        Parameter::ThetaA => c.theta_a,
    }
}

pub fn set_param(c: &mut CXCalibration, p: Parameter, v: f64) {
    match p {
        Parameter::EtaMagnitude => c.eta = C64::from_polar(v, c.eta.arg()),
        Parameter::EtaPhase => c.eta = C64::from_polar(c.eta.norm(), v),
        Parameter::Amplitude => c.common_amp = C64::from_polar(v, c.common_amp.arg()),
        Parameter::Detuning => c.cr_detuning = v,
        Parameter::Angle => c.cr_angle = v,
        Parameter::ThetaB => c.theta_b = v,
        Parameter::ThetaA => c.theta_a = v,
    }
}

fn state00() -> nalgebra::Vector4<C64> {
    nalgebra::Vector4::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
}

/// Repetition count actually used: the θ_A experiment needs an even count.
pub fn effective_repetitions(kind: Syndrome, n: usize) -> usize {
    if kind == Syndrome::G && n % 2 == 1 {
        n + 1
    } else {
        n.max(1)
    }
}

/// Signal of one experiment on a frame-corrected gate: the difference of
/// ground-state probabilities of the analyzed qubit between the two analysis
/// pulses ±π/2. Zero at the correct parameter value.
pub fn syndrome_signal(kind: Syndrome, g: &M4, n: usize) -> f64 {
    let n = effective_repetitions(kind, n);
    let id = M2::identity();
    let xpi = gates::rx(PI);
    let y90 = gates::ry(FRAC_PI_2);
    let (prep_a, prep_b) = match kind {
        Syndrome::A | Syndrome::B => (id, id),
        Syndrome::C | Syndrome::D => (xpi, id),
        Syndrome::E => (xpi, y90),
        Syndrome::F => (id, y90),
        Syndrome::G => (y90, id),
    };
    let unit = match kind {
        Syndrome::D | Syndrome::E => g * gates::on_b(&xpi),
        _ => *g,
    };
    let mut seq = M4::identity();
    for _ in 0..n {
        seq = unit * seq;
    }
    let psi = seq * gates::kron(&prep_a, &prep_b) * state00();
    let analyze = |plus: bool| {
        let sgn = if plus { 1.0 } else { -1.0 };
        let (op, on_a) = match kind {
            Syndrome::B | Syndrome::D => (gates::ry(sgn * FRAC_PI_2), false),
            Syndrome::G => (gates::rx(sgn * FRAC_PI_2), true),
            _ => (gates::rx(sgn * FRAC_PI_2), false),
        };
        let m = if on_a { gates::on_a(&op) } else { gates::on_b(&op) };
        let out = m * psi;
        if on_a {
            out[0].norm_sqr() + out[1].norm_sqr()
        } else {
            out[0].norm_sqr() + out[2].norm_sqr()
        }
    };
    analyze(true) - analyze(false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyndromeEntry {
    pub parameter: Parameter,
    pub current: f64,
    pub crossing: f64,
    pub slope: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SyndromeReport {
    pub entries: Vec<SyndromeEntry>,
}

impl SyndromeReport {
    pub fn get(&self, p: Parameter) -> Option<&SyndromeEntry> {
        self.entries.iter().find(|e| e.parameter == p)
    }
}

struct Tuner<'a> {
    sys: &'a DressedSystem<f64>,
    s: &'a CalibrationSettings,
}

impl Tuner<'_> {
    fn gate(&self, cal: &CXCalibration) -> Result<M4> {
        Ok(apply_frame(&raw_gate(self.sys, cal, self.s)?, cal.theta_a, cal.theta_b))
    }

    fn signal(&self, kind: Syndrome, cal: &CXCalibration, n: usize) -> Result<f64> {
        Ok(syndrome_signal(kind, &self.gate(cal)?, n))
    }

    fn eta_step(&self, cal: &mut CXCalibration, n: usize, apply: bool, rep: &mut SyndromeReport) -> Result<()> {
        let w_mag = self.s.windows.amplitude_rel * cal.eta.norm();
        let w_arg = self.s.windows.angle;
        let sig = |c: &CXCalibration| -> Result<[f64; 2]> {
            let g = self.gate(c)?;
            Ok([syndrome_signal(Syndrome::A, &g, n), syndrome_signal(Syndrome::B, &g, n)])
        };
        let (m0, a0) = (cal.eta.norm(), cal.eta.arg());
        let s0 = sig(cal)?;
        let mut c1 = *cal;
        c1.eta = C64::from_polar(m0 + w_mag, a0);
        let s1 = sig(&c1)?;
        let mut c2 = *cal;
        c2.eta = C64::from_polar(m0, a0 + w_arg);
        let s2 = sig(&c2)?;
        let j = nalgebra::Matrix2::new(
            (s1[0] - s0[0]) / w_mag,
            (s2[0] - s0[0]) / w_arg,
            (s1[1] - s0[1]) / w_mag,
            (s2[1] - s0[1]) / w_arg,
        );
        let step = j
            .try_inverse()
            .map(|ji| -(ji * nalgebra::Vector2::new(s0[0], s0[1])))
            .ok_or_else(|| Error::Calibration(format!("syndromes (a)/(b) insensitive to η: {j:?}")))?;
        let limit = 2f64.powi(super::sweep::MAX_WIDEN as i32);
        if step[0].abs() > limit * w_mag || step[1].abs() > limit * w_arg {
            return Err(Error::Calibration(format!(
                "η crossing outside the widened window: step {:?}, signals {s0:?}, {s1:?}, {s2:?}",
                step
            )));
        }
        let (m1, a1) = (m0 + step[0], a0 + step[1]);
        rep.entries.push(SyndromeEntry { parameter: Parameter::EtaMagnitude, current: m0, crossing: m1, slope: j[(0, 0)], repetitions: n });
        rep.entries.push(SyndromeEntry { parameter: Parameter::EtaPhase, current: a0, crossing: a1, slope: j[(1, 1)], repetitions: n });
        if apply {
            cal.eta = C64::from_polar(m1, a1);
        }
        Ok(())
    }

    fn scalar_step(
        &self,
        cal: &mut CXCalibration,
        param: Parameter,
        n: usize,
        apply: bool,
        rep: &mut SyndromeReport,
    ) -> Result<()> {
        let (kind, window) = match param {
            Parameter::Amplitude => (Syndrome::C, self.s.windows.amplitude_rel * cal.common_amp.norm()),
            Parameter::Detuning => (Syndrome::D, self.s.windows.detuning),
            Parameter::Angle => (Syndrome::E, self.s.windows.angle),
            Parameter::ThetaB => (Syndrome::F, self.s.windows.angle),
            Parameter::ThetaA => (Syndrome::G, self.s.windows.angle),
            _ => unreachable!("η is swept jointly"),
        };
        let current = param_value(cal, param);
        let crossing: Crossing = if matches!(param, Parameter::ThetaA | Parameter::ThetaB) {
            // frame phases only change the software frame: reuse one propagator
            let u = raw_gate(self.sys, cal, self.s)?;
            find_crossing(current, window, None, |v| {
                let mut c = *cal;
                set_param(&mut c, param, v);
                Ok(syndrome_signal(kind, &apply_frame(&u, c.theta_a, c.theta_b), n))
            })?
        } else {
            find_crossing(current, window, None, |v| {
                let mut c = *cal;
                set_param(&mut c, param, v);
                self.signal(kind, &c, n)
            })?
        };
        rep.entries.push(SyndromeEntry {
            parameter: param,
            current,
            crossing: crossing.estimate,
            slope: crossing.slope,
            repetitions: effective_repetitions(kind, n),
        });
        if apply {
            set_param(cal, param, crossing.estimate);
        }
        Ok(())
    }

    fn window(&self, cal: &CXCalibration, p: Parameter) -> f64 {
        let w = &self.s.windows;
        match p {
            Parameter::EtaMagnitude => w.amplitude_rel * cal.eta.norm(),
            Parameter::Amplitude => w.amplitude_rel * cal.common_amp.norm(),
            Parameter::Detuning => w.detuning,
            _ => w.angle,
        }
    }

    fn signals_from_raw(u: &M4, cal: &CXCalibration, n: usize) -> [f64; 7] {
        let g = apply_frame(u, cal.theta_a, cal.theta_b);
        Syndrome::ALL.map(|k| syndrome_signal(k, &g, n))
    }

    /// Joint update: all seven signals against all seven parameters, with the
    /// response matrix from forward differences at 1% of each window.
    fn newton_pass(&self, cal: &mut CXCalibration, n: usize) -> Result<SyndromeReport> {
        let u0 = raw_gate(self.sys, cal, self.s)?;
        let s0 = Self::signals_from_raw(&u0, cal, n);
        let mut jac = nalgebra::SMatrix::<f64, 7, 7>::zeros();
        for (j, &p) in Parameter::ALL.iter().enumerate() {
            let h = 0.01 * self.window(cal, p);
            let mut c = *cal;
            set_param(&mut c, p, param_value(cal, p) + h);
            let sj = if matches!(p, Parameter::ThetaA | Parameter::ThetaB) {
                Self::signals_from_raw(&u0, &c, n)
            } else {
                Self::signals_from_raw(&raw_gate(self.sys, &c, self.s)?, &c, n)
            };
            for i in 0..7 {
                jac[(i, j)] = (sj[i] - s0[i]) / h;
            }
        }
        let rhs = nalgebra::SVector::<f64, 7>::from_row_slice(&s0);
        let delta = jac
            .lu()
            .solve(&(-rhs))
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Calibration(format!("syndrome response matrix singular: {jac:?}")))?;
        // keep the step inside the widened sweep windows
        let limit = 2f64.powi(super::sweep::MAX_WIDEN as i32);
        let scale = Parameter::ALL
            .iter()
            .enumerate()
            .map(|(j, &p)| (limit * self.window(cal, p) / delta[j].abs()).min(1.0))
            .fold(1.0f64, f64::min);
        let mut rep = SyndromeReport::default();
        let before = *cal;
        for (j, &p) in Parameter::ALL.iter().enumerate() {
            let current = param_value(&before, p);
            let target = current + delta[j];
            rep.entries.push(SyndromeEntry {
                parameter: p,
                current,
                crossing: target,
                slope: jac[(j, j)],
                repetitions: effective_repetitions(Syndrome::ALL[j], n),
            });
        }
        for (j, &p) in Parameter::ALL.iter().enumerate() {
            set_param(cal, p, param_value(&before, p) + scale * delta[j]);
        }
        cal.theta_a = wrap(cal.theta_a);
        cal.theta_b = wrap(cal.theta_b);
        cal.stark_shift = stark_branch(cal.theta_a, cal.stark_shift, cal.gate_time, self.s)?;
        Ok(rep)
    }

    fn pass(&self, cal: &mut CXCalibration, n: usize, apply: bool) -> Result<SyndromeReport> {
        let mut rep = SyndromeReport::default();
        self.eta_step(cal, n, apply, &mut rep)?;
        for p in [Parameter::Amplitude, Parameter::Detuning, Parameter::Angle, Parameter::ThetaB, Parameter::ThetaA] {
            self.scalar_step(cal, p, n, apply, &mut rep)?;
        }
        if apply {
            cal.theta_a = wrap(cal.theta_a);
            cal.theta_b = wrap(cal.theta_b);
            cal.stark_shift = stark_branch(cal.theta_a, cal.stark_shift, cal.gate_time, self.s)?;
        }
        Ok(rep)
    }
}

/// Run the seven experiments around the current calibration and report each
/// crossing without changing anything.
pub fn syndrome_experiments(
    sys: &DressedSystem<f64>,
    cal: &CXCalibration,
    n: usize,
    s: &CalibrationSettings,
) -> Result<SyndromeReport> {
    if n == 0 {
        return Err(Error::Param("repetitions must be >= 1".into()));
    }
    cal.validate()?;
    let mut c = *cal;
    Tuner { sys, s }.pass(&mut c, n, false)
}

/// Whether every crossing in the report lies within tolerance of its current value.
pub fn within_tolerance(rep: &SyndromeReport, cal: &CXCalibration, tol: &Tolerances) -> bool {
    rep.entries.iter().all(|e| {
        let d = (e.crossing - e.current).abs();
        match e.parameter {
            Parameter::EtaMagnitude => d <= tol.amplitude_rel * cal.eta.norm(),
            Parameter::Amplitude => d <= tol.amplitude_rel * cal.common_amp.norm(),
            Parameter::Detuning => d <= tol.detuning,
            _ => d <= tol.angle,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub calibration: CXCalibration,
    /// Report of the last pass.
    pub report: SyndromeReport,
    /// Calibration after each pass.
    pub history: Vec<CXCalibration>,
    pub converged: bool,
    /// 1 − average gate fidelity of the coherent gate against CX_π.
    pub coherent_infidelity: f64,
    pub leakage: f64,
    pub off_block_norm: f64,
    /// 1 − average fidelity of the open-system gate, when coherence was given.
    pub total_error: Option<f64>,
}

/// Iterated tune-up: coarse start, then joint Newton passes over the seven
/// syndromes until every crossing moves less than its tolerance.
pub fn calibrate_cx(
    sys: &DressedSystem<f64>,
    gate_time: f64,
    coherence: Option<&CoherenceSpec>,
    s: &CalibrationSettings,
) -> Result<CalibrationOutcome> {
    if let Some(c) = coherence {
        c.validate()?;
    }
    let mut cal = coarse_calibration(sys, gate_time, s)?;
    refine_cx(sys, &mut cal, coherence, s)
}

/// Continue the tune-up from an existing calibration.
pub fn refine_cx(
    sys: &DressedSystem<f64>,
    start: &mut CXCalibration,
    coherence: Option<&CoherenceSpec>,
    s: &CalibrationSettings,
) -> Result<CalibrationOutcome> {
    start.validate()?;
    let tuner = Tuner { sys, s };
    let mut history = Vec::new();
    let mut converged = false;
    let mut report = SyndromeReport::default();
    let warmup = 2.min(s.max_iterations);
    for it in 0..s.max_iterations {
        let n = if it < warmup { s.repetitions.0 } else { s.repetitions.1 };
        let before = *start;
        report = tuner.newton_pass(start, n)?;
        history.push(*start);
        if it >= warmup && within_tolerance(&report, &before, &s.tolerances) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Calibration(format!(
            "no convergence after {} passes; last report {:?}",
            s.max_iterations, report
        )));
    }
    let cal = *start;
    let u = raw_gate(sys, &cal, s)?;
    let g = apply_frame(&u, cal.theta_a, cal.theta_b);
    let target = cx_pi();
    let total_error = match coherence {
        Some(coh) => Some(open_system_error(sys, &cal, coh, s)?),
        None => None,
    };
    Ok(CalibrationOutcome {
        calibration: cal,
        report,
        history,
        converged,
        coherent_infidelity: 1.0 - gates::average_gate_fidelity(&g, &target),
        leakage: gates::leakage_from_block(&u),
        off_block_norm: gates::off_block_norm(&g),
        total_error,
    })
}

/// Open-system CX_π channel of a calibration.
pub fn open_system_channel(
    sys: &DressedSystem<f64>,
    cal: &CXCalibration,
    coherence: &CoherenceSpec,
    s: &CalibrationSettings,
) -> Result<gates::BlockChannel> {
    let d = cx_drive(sys, cal, s)?;
    let t = d.end().max(cal.gate_time);
    lindblad_block_channel(sys, &[d], t, coherence, cal.frame(), s.step)
}

/// 1 − average fidelity of the open-system gate against CX_π.
pub fn open_system_error(
    sys: &DressedSystem<f64>,
    cal: &CXCalibration,
    coherence: &CoherenceSpec,
    s: &CalibrationSettings,
) -> Result<f64> {
    Ok(1.0 - open_system_channel(sys, cal, coherence, s)?.average_fidelity(&cx_pi()))
}

/// Versioned calibration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDocument {
    pub schema_version: u32,
    pub calibration: CXCalibration,
    pub converged: bool,
    pub passes: usize,
    pub coherent_infidelity: f64,
    pub leakage: f64,
    pub total_error: Option<f64>,
}

impl CalibrationDocument {
    pub fn from_outcome(o: &CalibrationOutcome) -> Self {
        Self {
            schema_version: CALIBRATION_SCHEMA_VERSION,
            calibration: o.calibration,
            converged: o.converged,
            passes: o.history.len(),
            coherent_infidelity: o.coherent_infidelity,
            leakage: o.leakage,
            total_error: o.total_error,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("calibration document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Param(format!("calibration JSON: {e}")))?;
        if doc.schema_version != CALIBRATION_SCHEMA_VERSION {
            return Err(Error::Param(format!(
                "calibration schema_version {} unsupported (expected {CALIBRATION_SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        doc.calibration.validate()?;
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_gate_has_null_syndromes() {
        for k in Syndrome::ALL {
            for n in [1, 2, 3, 4] {
                assert!(syndrome_signal(k, &cx_pi(), n).abs() < 1e-12, "{k:?} n={n}");
            }
        }
    }

    #[test]
    fn syndromes_respond_to_their_errors() {
        let d = 0.02;
        // over-rotation of the ON block
        let mut g = cx_pi();
        let r = gates::rx(PI + d);
        for i in 0..2 {
            for j in 0..2 {
                g[(2 + i, 2 + j)] = r[(i, j)];
            }
        }
        assert!(syndrome_signal(Syndrome::C, &g, 1).abs() > 0.01);
        assert!(syndrome_signal(Syndrome::A, &g, 1).abs() < 1e-12);
        // OFF-state phase
        let g = gates::z_b(d) * cx_pi();
        assert!(syndrome_signal(Syndrome::F, &g, 1).abs() > 0.01);
        // control phase
        let g = gates::z_a(d) * cx_pi();
        assert!(syndrome_signal(Syndrome::G, &g, 2).abs() > 0.01);
        assert!(syndrome_signal(Syndrome::C, &g, 1).abs() < 1e-12);
    }

    #[test]
    fn frame_readback() {
        let u = gates::cr_exp(0.4, -0.7);
        let (a, b) = frame_from_block(&u);
        assert!((a - 0.4).abs() < 1e-12 && (b + 0.7).abs() < 1e-12);
    }
}
