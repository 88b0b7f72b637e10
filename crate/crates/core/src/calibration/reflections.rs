use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::M2;
use crate::pulse::{apply_reflection_channel, predistort, Echo, PulseEnvelope, ReflectionModel, DEFAULT_RESIDUAL_TOL};

/// Fastest π pulse the characterization accepts (ns).
pub const MIN_PI_LEN: f64 = 8.0;
/// Search range for each echo quadrature.
const AMP_BOUND: f64 = 0.6;

/// Delay-sweep sequence families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionSequence {
    /// X_π, τ, X_−π: echoes of X pulses only matter through their quadrature part.
    Quadrature,
    /// X_π, τ, Y_π with the sign alternating between repetitions.
    InPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSettings {
    pub dt: f64,
    /// Largest gap τ scanned (ns).
    pub max_gap: f64,
    /// Pulse pairs per sequence in the amplitude fits.
    pub repetitions: usize,
    /// Trace changes below this fraction of the largest one are ignored.
    pub edge_fraction: f64,
    /// Absolute floor on the derivative for an echo to be detected.
    pub detection_floor: f64,
    /// Alternating quadrature/in-phase amplitude refinements.
    pub fit_rounds: usize,
    pub max_echoes: usize,
}

impl Default for ReflectionSettings {
    fn default() -> Self {
        Self {
            dt: 1.0,
            max_gap: 48.0,
            repetitions: 3,
            edge_fraction: 1e-3,
            detection_floor: 1e-4,
            fit_rounds: 3,
            max_echoes: 4,
        }
    }
}

/// Envelope of `n` pulse pairs separated by the gap `tau` (square π pulses of
/// length `pi_len`, unit amplitude).
pub fn delay_sequence(kind: ReflectionSequence, pi_len: f64, tau: f64, n: usize, dt: f64) -> PulseEnvelope<f64> {
    let np = (pi_len / dt).round() as usize;
    let ng = (tau / dt).round().max(0.0) as usize;
    let mut s = Vec::with_capacity(n * 2 * (np + ng));
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (first, second) = match kind {
            ReflectionSequence::Quadrature => (C64::new(1.0, 0.0), C64::new(-1.0, 0.0)),
            ReflectionSequence::InPhase => (C64::new(sign, 0.0), C64::new(0.0, sign)),
        };
        s.extend(std::iter::repeat(first).take(np));
        s.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(ng));
        s.extend(std::iter::repeat(second).take(np));
        s.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(ng));
    }
    PulseEnvelope::from_samples(s, dt)
}

/// Exact two-level evolution from |0⟩ under a piecewise-constant resonant
/// drive; `rate` is the rotation angle per ns at unit amplitude. Returns P(|1⟩).
pub fn two_level_excitation(env: &PulseEnvelope<f64>, rate: f64) -> f64 {
    let mut psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    for &s in &env.samples {
        let u = sample_rotation(s, rate * env.dt);
        psi = [u[(0, 0)] * psi[0] + u[(0, 1)] * psi[1], u[(1, 0)] * psi[0] + u[(1, 1)] * psi[1]];
    }
    psi[1].norm_sqr()
}

/// exp(−i θ/2 (Re s σx + Im s σy)) with θ = |s|·scale.
pub fn sample_rotation(s: C64, scale: f64) -> M2 {
    let a = s.norm();
    if a == 0.0 {
        return M2::identity();
    }
    let half = 0.5 * a * scale;
    let (c, sn) = (half.cos(), half.sin());
    let n = s / a;
    let i = C64::new(0.0, 1.0);
    M2::new(C64::new(c, 0.0), -i * sn * n.conj(), -i * sn * n, C64::new(c, 0.0))
}

/// P(|1⟩) after the sequence, predistorted with `estimate` if given, passes
/// through the hidden channel.
#[allow(clippy::too_many_arguments)]
pub fn sequence_response(
    kind: ReflectionSequence,
    hidden: &ReflectionModel<f64>,
    estimate: Option<&ReflectionModel<f64>>,
    pi_len: f64,
    tau: f64,
    n: usize,
    dt: f64,
) -> Result<f64> {
    let seq = delay_sequence(kind, pi_len, tau, n, dt);
    let sent = match estimate {
        Some(m) if !m.is_empty() => predistort(&seq, m, DEFAULT_RESIDUAL_TOL)?,
        _ => seq,
    };
    let arrived = apply_reflection_channel(&sent, hidden);
    Ok(two_level_excitation(&arrived, PI / pi_len))
}

fn trace(
    kind: ReflectionSequence,
    hidden: &ReflectionModel<f64>,
    estimate: Option<&ReflectionModel<f64>>,
    pi_len: f64,
    gaps: &[f64],
    n: usize,
    dt: f64,
) -> Result<Vec<f64>> {
    gaps.iter().map(|&t| sequence_response(kind, hidden, estimate, pi_len, t, n, dt)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionEstimate {
    pub model: ReflectionModel<f64>,
    /// Gap values of the delay sweeps (ns).
    pub gaps: Vec<f64>,
    /// Single-pair delay sweeps against the hidden channel.
    pub quadrature_trace: Vec<f64>,
    pub in_phase_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Minimum of `f` on [lo, hi]: grid scan, then golden section around the best point.
fn scan_min<F: FnMut(f64) -> Result<f64>>(lo: f64, hi: f64, points: usize, tol: f64, mut f: F) -> Result<f64> {
    let h = (hi - lo) / (points - 1) as f64;
    let mut best = (f64::INFINITY, lo);
    for k in 0..points {
        let x = lo + k as f64 * h;
        let v = f(x)?;
        if v < best.0 {
            best = (v, x);
        }
    }
    golden_min((best.1 - h).max(lo), (best.1 + h).min(hi), tol, f)
}

/// Golden-section minimum of `f` on [lo, hi].
fn golden_min<F: FnMut(f64) -> Result<f64>>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

struct Cluster {
    delay: f64,
    width: f64,
    peak: f64,
}

/// Delays from the gap intervals over which any trace changes. The echo of
/// the first pulse overlaps the second for τ ∈ (d − 2·pi_len, d), so each
/// cluster of nonzero forward differences is centered on d − pi_len and ends at d.
fn delays_from_traces(gaps: &[f64], traces: &[&[f64]], pi_len: f64, s: &ReflectionSettings) -> Vec<Cluster> {
    let n = gaps.len();
    if n < 2 {
        return Vec::new();
    }
    let h = gaps[1] - gaps[0];
    let d: Vec<f64> = (0..n - 1)
        .map(|i| traces.iter().map(|t| (t[i + 1] - t[i]).abs() / h).fold(0.0, f64::max))
        .collect();
    let top = d.iter().cloned().fold(0.0, f64::max);
    if top < s.detection_floor {
        return Vec::new();
    }
    let active: Vec<bool> = d.iter().map(|&v| v > s.edge_fraction * top).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < active.len() {
        if !active[i] {
            i += 1;
            continue;
        }
        let lo = i;
        while i < active.len() && active[i] {
            i += 1;
        }
        let (first, last) = (gaps[lo] + 0.5 * h, gaps[i - 1] + 0.5 * h);
        let delay = if lo == 0 { last + 0.5 * h } else { 0.5 * (first + last) + pi_len };
        let peak = d[lo..i].iter().cloned().fold(0.0, f64::max);
        out.push(Cluster { delay, width: last - first + h, peak });
    }
    out
}

/// Blind estimate of the reflection channel from simulated delay sweeps.
///
/// The echo of the first pulse of a pair changes the outcome while it
/// overlaps the second pulse, which sits `pi_len + τ` later; the support of
/// the forward differences of the single-pair traces therefore brackets each
/// delay. Amplitudes are then fitted
/// by minimizing the residual response of predistorted repeated sequences,
/// quadrature part first, alternating with the in-phase part.
pub fn characterize_reflections(
    hidden: &ReflectionModel<f64>,
    pi_len: f64,
    s: &ReflectionSettings,
) -> Result<ReflectionEstimate> {
    if pi_len < MIN_PI_LEN {
        return Err(Error::Param(format!("pi_len {pi_len} ns below {MIN_PI_LEN} ns")));
    }
    hidden.validate()?;
    let dt = s.dt;
    let steps = (s.max_gap / dt).round() as usize;
    let gaps: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let q = trace(ReflectionSequence::Quadrature, hidden, None, pi_len, &gaps, 1, dt)?;
    let ip = trace(ReflectionSequence::InPhase, hidden, None, pi_len, &gaps, 1, dt)?;

    let mut warnings = Vec::new();
    let mut echoes: Vec<Echo<f64>> = Vec::new();
    let n = s.repetitions;
    // peel one echo at a time off the response left after predistortion
    for _ in 0..s.max_echoes {
        let m = ReflectionModel { echoes: echoes.clone() };
        let (rq, rip) = if echoes.is_empty() {
            (q.clone(), ip.clone())
        } else {
            (
                trace(ReflectionSequence::Quadrature, hidden, Some(&m), pi_len, &gaps, 1, dt)?,
                trace(ReflectionSequence::InPhase, hidden, Some(&m), pi_len, &gaps, 1, dt)?,
            )
        };
        let clusters = delays_from_traces(&gaps, &[&rq, &rip], pi_len, s);
        let fresh = clusters
            .iter()
            .filter(|c| {
                let d = (c.delay / dt).round() * dt;
                d > 0.0 && echoes.iter().all(|e| (e.delay - d).abs() > 1.5 * dt)
            })
            .max_by(|a, b| a.peak.total_cmp(&b.peak));
        let Some(c) = fresh else { break };
        if c.width > 2.0 * pi_len + dt {
            warnings.push(format!(
                "response near {:.0} ns spans {:.0} ns: echoes closer than the π pulse may not be resolved",
                c.delay, c.width
            ));
        }
        echoes.push(Echo { delay: (c.delay / dt).round() * dt, amp: C64::new(0.0, 0.0) });
        echoes.sort_by(|a, b| a.delay.total_cmp(&b.delay));
        fit_amplitudes(hidden, &mut echoes, pi_len, &gaps, n, dt, s.fit_rounds)?;
    }
    if echoes.is_empty() {
        if let Some(e) = hidden.echoes.first() {
            if e.delay <= pi_len {
                warnings.push(format!("no echo resolved; echoes within {pi_len} ns of the pulse are not detectable"));
            }
        }
    }
    Ok(ReflectionEstimate {
        model: ReflectionModel { echoes },
        gaps,
        quadrature_trace: q,
        in_phase_trace: ip,
        warnings,
    })
}

/// Coordinate refinement of the echo amplitudes: quadrature part against the
/// X_π/X_−π sequences, then in-phase part against the X_π/Y_π sequences.
fn fit_amplitudes(
    hidden: &ReflectionModel<f64>,
    echoes: &mut [Echo<f64>],
    pi_len: f64,
    gaps: &[f64],
    n: usize,
    dt: f64,
    rounds: usize,
) -> Result<()> {
    let residual = |kind: ReflectionSequence, echoes: &[Echo<f64>]| -> Result<f64> {
        if echoes.iter().map(|e| e.amp.norm()).sum::<f64>() >= 0.95 {
            return Ok(f64::INFINITY);
        }
        let m = ReflectionModel { echoes: echoes.to_vec() };
        match trace(kind, hidden, Some(&m), pi_len, gaps, n, dt) {
            Ok(r) => Ok(r.iter().map(|v| v * v).sum()),
            // a trial model whose inverse series diverges is never the optimum
            Err(Error::Divergence(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    for _ in 0..rounds {
        for k in 0..echoes.len() {
            let re = echoes[k].amp.re;
            let im = scan_min(-AMP_BOUND, AMP_BOUND, 25, 1e-5, |v| {
                let mut e = echoes.to_vec();
                e[k].amp = C64::new(re, v);
                residual(ReflectionSequence::Quadrature, &e)
            })?;
            echoes[k].amp.im = im;
            let re = scan_min(-AMP_BOUND, AMP_BOUND, 25, 1e-5, |v| {
                let mut e = echoes.to_vec();
                e[k].amp = C64::new(v, im);
                residual(ReflectionSequence::InPhase, &e)
            })?;
            echoes[k].amp.re = re;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_pulse_inverts() {
        let env = delay_sequence(ReflectionSequence::Quadrature, 8.0, 0.0, 1, 1.0);
        let half = PulseEnvelope::from_samples(env.samples[..8].to_vec(), 1.0);
        assert!((two_level_excitation(&half, PI / 8.0) - 1.0).abs() < 1e-12);
        assert!(two_level_excitation(&env, PI / 8.0) < 1e-12);
    }

    #[test]
    fn empty_channel_gives_empty_estimate() {
        let r = characterize_reflections(&ReflectionModel::none(), 8.0, &ReflectionSettings::default()).unwrap();
        assert!(r.model.is_empty());
        assert!(r.quadrature_trace.iter().chain(&r.in_phase_trace).all(|&p| p < 1e-12));
    }

    #[test]
    fn rejects_short_pi_pulse() {
        assert!(characterize_reflections(&ReflectionModel::none(), 6.0, &ReflectionSettings::default()).is_err());
    }
}
