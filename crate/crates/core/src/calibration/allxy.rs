use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::M2;
use crate::pulse::{
    apply_reflection_channel, make_envelope, predistort, PulseEnvelope, ReflectionModel, Shape, DEFAULT_RESIDUAL_TOL,
};

/// Pulse pairs in standard order; upper case is π, lower case π/2, `I` idle.
pub const ALLXY_SEQUENCES: [&str; 21] = [
    "II", "XX", "YY", "XY", "YX", "xI", "yI", "xy", "yx", "xY", "yX", "Xy", "Yx", "xX", "Xx", "yY", "Yy", "XI", "YI",
    "xx", "yy",
];

/// Ideal excited population of each pair.
pub fn allxy_ideal() -> [f64; 21] {
    let mut v = [0.5; 21];
    v[..5].fill(0.0);
    v[17..].fill(1.0);
    v
}

/// Single-qubit gate set and injected errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllXYConfig {
    /// Gaussian pulse window (ns).
    pub pulse_len: f64,
    pub sigma: f64,
    pub dt: f64,
    /// Relative amplitude error of every pulse.
    pub amplitude_error: f64,
    /// Drive detuning from the qubit (GHz).
    pub detuning: f64,
    /// Line between generator and qubit.
    pub reflection: Option<ReflectionModel<f64>>,
    /// Predistort the waveform against `reflection`.
    pub predistort: bool,
}

impl Default for AllXYConfig {
    fn default() -> Self {
        Self {
            pulse_len: 16.0,
            sigma: 4.0,
            dt: 1.0,
            amplitude_error: 0.0,
            detuning: 0.0,
            reflection: None,
            predistort: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllXYTrace {
    pub labels: Vec<String>,
    /// Excited population after each pair.
    pub values: Vec<f64>,
}

impl AllXYTrace {
    /// Values split into the ground, equator and excited plateaus.
    pub fn plateaus(&self) -> [&[f64]; 3] {
        [&self.values[..5], &self.values[5..17], &self.values[17..]]
    }

    /// |value − ideal| per point.
    pub fn deviations(&self) -> Vec<f64> {
        self.values.iter().zip(allxy_ideal()).map(|(v, i)| (v - i).abs()).collect()
    }
}

/// exp(−i dt/2 (Ω_x σx + Ω_y σy + Δ σz)) for angular rates in rad/ns.
fn rotation(wx: f64, wy: f64, wz: f64, dt: f64) -> M2 {
    let w = (wx * wx + wy * wy + wz * wz).sqrt();
    if w == 0.0 {
        return M2::identity();
    }
    let h = 0.5 * w * dt;
    let (c, s) = (h.cos(), h.sin());
    let (nx, ny, nz) = (wx / w, wy / w, wz / w);
    let i = C64::new(0.0, 1.0);
    M2::new(
        C64::new(c, 0.0) - i * s * nz,
        -i * s * C64::new(nx, -ny),
        -i * s * C64::new(nx, ny),
        C64::new(c, 0.0) + i * s * nz,
    )
}

fn pulse_for(ch: char) -> Result<Option<C64>> {
    Ok(match ch {
        'I' => None,
        'X' => Some(C64::new(1.0, 0.0)),
        'x' => Some(C64::new(0.5, 0.0)),
        'Y' => Some(C64::new(0.0, 1.0)),
        'y' => Some(C64::new(0.0, 0.5)),
        _ => return Err(Error::Param(format!("unknown AllXY pulse '{ch}'"))),
    })
}

/// Excited population after a pulse string such as "xY", simulated on a
/// driven two-level system in the frame of the drive.
pub fn allxy_point(seq: &str, cfg: &AllXYConfig) -> Result<f64> {
    let g = make_envelope(Shape::Gaussian { total: cfg.pulse_len, sigma: cfg.sigma }, cfg.dt)?;
    let area = g.samples.iter().map(|s| s.re).sum::<f64>() * cfg.dt;
    if !(area > 0.0) {
        return Err(Error::Param("pulse has zero area".into()));
    }
    let mut samples = Vec::new();
    for ch in seq.chars() {
        match pulse_for(ch)? {
            Some(a) => samples.extend(g.samples.iter().map(|s| s * a)),
            None => samples.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(g.len())),
        }
    }
    let mut env = PulseEnvelope::from_samples(samples, cfg.dt);
    if let Some(r) = &cfg.reflection {
        if cfg.predistort {
            env = predistort(&env, r, DEFAULT_RESIDUAL_TOL)?;
        }
        env = apply_reflection_channel(&env, r);
    }
    // a unit-amplitude pulse rotates by π
    let rate = PI / area * (1.0 + cfg.amplitude_error);
    let wz = TAU * cfg.detuning;
    let mut psi = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    for &s in &env.samples {
        let u = rotation(rate * s.re, rate * s.im, -wz, cfg.dt);
        psi = [u[(0, 0)] * psi[0] + u[(0, 1)] * psi[1], u[(1, 0)] * psi[0] + u[(1, 1)] * psi[1]];
    }
    Ok(psi[1].norm_sqr())
}

/// The 21 AllXY pairs in standard order.
pub fn allxy_trace(cfg: &AllXYConfig) -> Result<AllXYTrace> {
    let values = ALLXY_SEQUENCES.iter().map(|s| allxy_point(s, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(AllXYTrace { labels: ALLXY_SEQUENCES.iter().map(|s| s.to_string()).collect(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_plateaus() {
        let t = allxy_trace(&AllXYConfig::default()).unwrap();
        assert!(t.deviations().iter().all(|&d| d < 1e-6));
        let [a, b, c] = t.plateaus();
        assert_eq!((a.len(), b.len(), c.len()), (5, 12, 4));
    }

    #[test]
    fn amplitude_error_spares_ground_plateau() {
        let cfg = AllXYConfig { amplitude_error: 0.01, ..Default::default() };
        let d = allxy_trace(&cfg).unwrap().deviations();
        assert!(d[..5].iter().all(|&x| x < 1e-3));
        assert!(d[5..17].iter().any(|&x| x > 5e-3));
    }

    #[test]
    fn rejects_unknown_pulse() {
        assert!(allxy_point("Zx", &AllXYConfig::default()).is_err());
    }
}
