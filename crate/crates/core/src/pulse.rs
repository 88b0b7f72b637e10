//! Sampled drive envelopes, the multipath reflection channel and its
//! predistortion.
//!
//! Sample `k` sits at the bin center `(k + ½)·dt`; between centers the
//! envelope is linearly interpolated and outside it is held at the edge value.

use std::fmt::Write as _;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

/// Default AWG resolution (ns).
pub const DEFAULT_DT: f64 = 1.0;
/// Default predistortion truncation relative to peak.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-4;
const MAX_ORDER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape<T> {
    /// Gaussian of standard deviation `sigma` centered in a window `total`.
    Gaussian { total: T, sigma: T },
    /// Flat top with half-Gaussian edges of length `ramp` (σ = ramp/2).
    RoundedSquare { flat: T, ramp: T },
    Square { duration: T },
    /// Arbitrary samples (e.g. after predistortion).
    Samples,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope<T: Real> {
    pub samples: Vec<Complex<T>>,
    pub dt: T,
    pub descriptor: Shape<T>,
}

fn steps<T: Real>(x: T, dt: T, what: &str) -> Result<usize> {
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(Error::Param(format!("{what} must be a finite non-negative duration, got {x}")));
    }
    let r = (x / dt).to_f64();
    let n = r.round();
    if (r - n).abs() > 1e-6 {
        return Err(Error::Param(format!("{what} = {x} ns is not a multiple of dt = {dt} ns")));
    }
    Ok(n as usize)
}

/// Gaussian lifted so that it vanishes at offset `x0`.
fn lifted<T: Real>(x: T, x0: T, sigma: T) -> T {
    let two = T::c(2.0);
    let g = (-(x * x) / (two * sigma * sigma)).exp();
    let g0 = (-(x0 * x0) / (two * sigma * sigma)).exp();
    if g0 >= T::one() {
        return T::one();
    }
    ((g - g0) / (T::one() - g0)).max(T::zero())
}

/// Sample an envelope of the requested shape.
pub fn make_envelope<T: Real>(shape: Shape<T>, dt: T) -> Result<PulseEnvelope<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Param(format!("dt must be > 0, got {dt}")));
    }
    let half = T::c(0.5);
    let re = |x: T| Complex::new(x, T::zero());
    let samples = match shape {
        Shape::Gaussian { total, sigma } => {
            let n = steps(total, dt, "total")?;
            if !(sigma > T::zero()) {
                return Err(Error::Param(format!("sigma must be > 0, got {sigma}")));
            }
            let center = total * half;
            let x0 = center - dt * half;
            (0..n)
                .map(|k| {
                    let t = (T::c(k as f64) + half) * dt;
                    re(lifted(t - center, x0, sigma))
                })
                .collect()
        }
        Shape::RoundedSquare { flat, ramp } => {
            let nf = steps(flat, dt, "flat")?;
            let nr = steps(ramp, dt, "ramp")?;
            let sigma = ramp * half;
            let x0 = dt * half - ramp;
            let edge: Vec<T> = (0..nr)
                .map(|k| {
                    let t = (T::c(k as f64) + half) * dt;
                    lifted(t - ramp, x0, sigma)
                })
                .collect();
            let mut s = Vec::with_capacity(2 * nr + nf);
            s.extend(edge.iter().map(|&x| re(x)));
            s.extend(std::iter::repeat(re(T::one())).take(nf));
            s.extend(edge.iter().rev().map(|&x| re(x)));
            s
        }
        Shape::Square { duration } => {
            let n = steps(duration, dt, "duration")?;
            vec![re(T::one()); n]
        }
        Shape::Samples => return Err(Error::Param("cannot synthesize a sample-defined shape".into())),
    };
    Ok(PulseEnvelope { samples, dt, descriptor: shape })
}

impl<T: Real> PulseEnvelope<T> {
    pub fn from_samples(samples: Vec<Complex<T>>, dt: T) -> Self {
        Self { samples, dt, descriptor: Shape::Samples }
    }

    pub fn empty(dt: T) -> Self {
        Self::from_samples(Vec::new(), dt)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> T {
        T::c(self.samples.len() as f64) * self.dt
    }

    pub fn peak(&self) -> T {
        self.samples.iter().map(|&z| cabs(z)).fold(T::zero(), |a, b| a.max(b))
    }

    /// Continuous envelope value at time `t` (ns).
    pub fn value_at(&self, t: T) -> Complex<T> {
        let n = self.samples.len();
        if n == 0 {
            return Complex::new(T::zero(), T::zero());
        }
        let u = t / self.dt - T::c(0.5);
        if u <= T::zero() {
            return self.samples[0];
        }
        let last = T::c((n - 1) as f64);
        if u >= last {
            return self.samples[n - 1];
        }
        let k = u.floor();
        let f = u - k;
        let i = k.to_usize().unwrap_or(0).min(n - 2);
        let a = self.samples[i];
        let b = self.samples[i + 1];
        a + (b - a) * f
    }

    /// ∫ |s(t)|² dt of the interpolated envelope, by the trapezoid rule on the sample centers.
    pub fn power_integral(&self) -> T {
        let n = self.samples.len();
        if n == 0 {
            return T::zero();
        }
        let p: Vec<T> = self.samples.iter().map(|&z| z.re * z.re + z.im * z.im).collect();
        let mut acc = (p[0] + p[n - 1]) * T::c(0.5) * T::c(0.5);
        for w in p.windows(2) {
            acc += (w[0] + w[1]) * T::c(0.5);
        }
        acc * self.dt
    }

    /// ∫ s(t) dt of the interpolated envelope.
    pub fn area(&self) -> Complex<T> {
        let n = self.samples.len();
        if n == 0 {
            return Complex::new(T::zero(), T::zero());
        }
        let h = T::c(0.5);
        let mut acc = (self.samples[0] + self.samples[n - 1]) * h * h;
        for w in self.samples.windows(2) {
            acc += (w[0] + w[1]) * h;
        }
        acc * self.dt
    }

    /// Scale every sample.
    pub fn scaled(&self, c: Complex<T>) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| z * c).collect(),
            dt: self.dt,
            descriptor: self.descriptor,
        }
    }

    /// Zero-pad to at least `n` samples.
    pub fn padded(&self, n: usize) -> Self {
        let mut s = self.samples.clone();
        if s.len() < n {
            s.resize(n, Complex::new(T::zero(), T::zero()));
        }
        Self { samples: s, dt: self.dt, descriptor: Shape::Samples }
    }

    /// CSV with columns `t_ns,re,im` (t at the sample center).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ns,re,im\n");
        for (k, z) in self.samples.iter().enumerate() {
            let t = (T::c(k as f64) + T::c(0.5)) * self.dt;
            let _ = writeln!(out, "{},{},{}", t.to_f64(), z.re.to_f64(), z.im.to_f64());
        }
        out
    }

    /// Parse the format written by [`PulseEnvelope::to_csv`]. The sample period is
    /// taken from the spacing of the time column (1 ns for a single row).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut ts = Vec::new();
        let mut samples = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (ln == 0 && line.starts_with("t_ns")) {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Param(format!("line {}: expected 3 columns", ln + 1)));
            }
            let p = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Param(format!("line {}: {e}", ln + 1)))
            };
            ts.push(p(f[0])?);
            samples.push(Complex::new(T::c(p(f[1])?), T::c(p(f[2])?)));
        }
        let dt = if ts.len() >= 2 { ts[1] - ts[0] } else { DEFAULT_DT };
        if !(dt > 0.0) {
            return Err(Error::Param("time column must be increasing".into()));
        }
        Ok(Self::from_samples(samples, T::c(dt)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Echo<T> {
    /// Delay relative to the main pulse (ns).
    pub delay: T,
    /// Complex amplitude relative to the main pulse.
    pub amp: Complex<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReflectionModel<T> {
    pub echoes: Vec<Echo<T>>,
}

impl<T: Real> ReflectionModel<T> {
    pub fn new(echoes: Vec<Echo<T>>) -> Result<Self> {
        let m = Self { echoes };
        m.validate()?;
        Ok(m)
    }

    pub fn none() -> Self {
        Self { echoes: Vec::new() }
    }

    /// Single echo.
    pub fn single(delay: T, amp: Complex<T>) -> Result<Self> {
        Self::new(vec![Echo { delay, amp }])
    }

    /// The dominant measured echo: 35 % about 20 ns after the pulse.
    pub fn demo() -> Self {
        Self {
            echoes: vec![Echo { delay: T::c(20.0), amp: Complex::new(T::c(0.35), T::zero()) }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut last = T::zero();
        for (k, e) in self.echoes.iter().enumerate() {
            if !(e.delay > last) {
                return Err(Error::Param(format!(
                    "echo {k}: delays must be positive and strictly increasing"
                )));
            }
            if !(cabs(e.amp) < T::one()) {
                return Err(Error::Param(format!("echo {k}: |amplitude| must be < 1")));
            }
            last = e.delay;
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.echoes.is_empty()
    }

    /// Delays snapped to the grid, in samples (at least one).
    pub fn grid_delays(&self, dt: T) -> Vec<usize> {
        self.echoes
            .iter()
            .map(|e| (e.delay / dt).to_f64().round().max(1.0) as usize)
            .collect()
    }

    /// Echoes whose delay is not a multiple of `dt`; these are snapped.
    pub fn off_grid(&self, dt: T) -> Vec<usize> {
        self.echoes
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let r = (e.delay / dt).to_f64();
                (r - r.round()).abs() > 1e-9
            })
            .map(|(k, _)| k)
            .collect()
    }

    pub fn max_delay_samples(&self, dt: T) -> usize {
        self.grid_delays(dt).into_iter().max().unwrap_or(0)
    }
}

/// Σ_k a_k x(t − d_k): the echoes alone, extended by the longest delay.
fn echo_term<T: Real>(x: &[Complex<T>], delays: &[usize], amps: &[Complex<T>]) -> Vec<Complex<T>> {
    let maxd = delays.iter().copied().max().unwrap_or(0);
    let mut out = vec![Complex::new(T::zero(), T::zero()); x.len() + maxd];
    for (&d, &a) in delays.iter().zip(amps) {
        for (i, &v) in x.iter().enumerate() {
            out[i + d] += a * v;
        }
    }
    out
}

/// Output of the reflective line: `x(t) + Σ a_k x(t − d_k)`.
///
/// Delays are snapped to the sample grid; the result is longer than the input
/// by the largest delay.
pub fn apply_reflection_channel<T: Real>(
    env: &PulseEnvelope<T>,
    model: &ReflectionModel<T>,
) -> PulseEnvelope<T> {
    if model.is_empty() {
        return env.clone();
    }
    let delays = model.grid_delays(env.dt);
    let amps: Vec<_> = model.echoes.iter().map(|e| e.amp).collect();
    let mut out = echo_term(&env.samples, &delays, &amps);
    for (o, &v) in out.iter_mut().zip(&env.samples) {
        *o += v;
    }
    PulseEnvelope::from_samples(out, env.dt)
}

/// Truncated inverse `Σ_{j≤order} (−H)^j x` of the channel `1 + H`.
pub fn predistort_order<T: Real>(
    env: &PulseEnvelope<T>,
    model: &ReflectionModel<T>,
    order: usize,
) -> PulseEnvelope<T> {
    if model.is_empty() {
        return env.clone();
    }
    let delays = model.grid_delays(env.dt);
    let neg: Vec<_> = model.echoes.iter().map(|e| -e.amp).collect();
    let mut acc = env.samples.clone();
    let mut term = env.samples.clone();
    for _ in 0..order {
        term = echo_term(&term, &delays, &neg);
        acc.resize(term.len(), Complex::new(T::zero(), T::zero()));
        for (a, &t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
    }
    PulseEnvelope::from_samples(acc, env.dt)
}

/// Predistorted envelope and the truncation order used.
pub fn predistort_with_order<T: Real>(
    env: &PulseEnvelope<T>,
    model: &ReflectionModel<T>,
    residual_tol: T,
) -> Result<(PulseEnvelope<T>, usize)> {
    if model.is_empty() {
        return Ok((env.clone(), 0));
    }
    if let Some(e) = model.echoes.iter().find(|e| !(cabs(e.amp) < T::one())) {
        return Err(Error::Divergence(format!("echo amplitude {} >= 1", cabs(e.amp))));
    }
    let peak = env.peak();
    if peak == T::zero() {
        return Ok((env.clone(), 0));
    }
    let delays = model.grid_delays(env.dt);
    let neg: Vec<_> = model.echoes.iter().map(|e| -e.amp).collect();
    let mut acc = env.samples.clone();
    let mut term = env.samples.clone();
    let mut order = 0;
    loop {
        // the round-trip residual of the current truncation is the next term
        let next = echo_term(&term, &delays, &neg);
        let m = next.iter().map(|&z| cabs(z)).fold(T::zero(), |a, b| a.max(b));
        if m <= residual_tol * peak {
            break;
        }
        if order >= MAX_ORDER || !m.is_finite() || m > T::c(1e6) * peak {
            return Err(Error::Divergence(format!(
                "correction series did not fall below {residual_tol} after {order} orders"
            )));
        }
        term = next;
        acc.resize(term.len(), Complex::new(T::zero(), T::zero()));
        for (a, &t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
        order += 1;
    }
    Ok((PulseEnvelope::from_samples(acc, env.dt), order))
}

/// Envelope whose reflected image matches `env` to `residual_tol · peak`.
pub fn predistort<T: Real>(
    env: &PulseEnvelope<T>,
    model: &ReflectionModel<T>,
    residual_tol: T,
) -> Result<PulseEnvelope<T>> {
    predistort_with_order(env, model, residual_tol).map(|(e, _)| e)
}

/// Largest sample deviation between two envelopes (shorter one zero-padded).
pub fn max_deviation<T: Real>(a: &PulseEnvelope<T>, b: &PulseEnvelope<T>) -> T {
    let n = a.len().max(b.len());
    let z = Complex::new(T::zero(), T::zero());
    (0..n)
        .map(|i| {
            let x = a.samples.get(i).copied().unwrap_or(z);
            let y = b.samples.get(i).copied().unwrap_or(z);
            cabs(x - y)
        })
        .fold(T::zero(), |p, q| p.max(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounded_square_edges_vanish() {
        let e = make_envelope(Shape::RoundedSquare { flat: 58.0, ramp: 6.0 }, 1.0).unwrap();
        assert_eq!(e.len(), 70);
        assert!(e.samples[0].norm() < 1e-6 && e.samples[69].norm() < 1e-6);
        assert_eq!(e.samples[35].re, 1.0);
    }

    #[test]
    fn empty_and_negative() {
        let e = make_envelope(Shape::RoundedSquare { flat: 0.0, ramp: 0.0 }, 1.0).unwrap();
        assert!(e.is_empty());
        assert!(make_envelope(Shape::Square { duration: -1.0 }, 1.0).is_err());
        assert!(make_envelope(Shape::Square { duration: 1.5 }, 1.0).is_err());
    }

    #[test]
    fn interpolation_hits_samples() {
        let e = make_envelope(Shape::Gaussian { total: 16.0, sigma: 4.0 }, 1.0).unwrap();
        for k in 0..16 {
            let v = e.value_at(k as f64 + 0.5);
            assert!((v - e.samples[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn divergent_model_rejected() {
        let env = make_envelope(Shape::Square { duration: 4.0 }, 1.0).unwrap();
        let m = ReflectionModel {
            echoes: vec![
                Echo { delay: 1.0, amp: Complex::new(0.9, 0.0) },
                Echo { delay: 2.0, amp: Complex::new(0.9, 0.0) },
            ],
        };
        assert!(matches!(predistort(&env, &m, 1e-4), Err(Error::Divergence(_))));
    }
}
