//! Averaged joint readout and population metrology.
//!
//! A measurement returns `V = Σ p_k M_k`. Pre-readout π pulses (II, IX, XI, XX)
//! permute the populations, giving the linear system `V_R = Σ_k p_k M_{k⊕R}`
//! where `⊕` is bitwise XOR on the two-bit state index (|AB⟩ → 2A + B).

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, BlockChannel, M4};
use crate::rng;
use crate::scalar::{cabs, Real};

/// Condition-number ceiling for readout and initialization matrices.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PreRotation {
    II,
    IX,
    XI,
    XX,
}

impl PreRotation {
    pub const ALL: [PreRotation; 4] = [PreRotation::II, PreRotation::IX, PreRotation::XI, PreRotation::XX];

    /// XOR mask on the state index.
    pub fn mask(self) -> usize {
        match self {
            PreRotation::II => 0,
            PreRotation::IX => 1,
            PreRotation::XI => 2,
            PreRotation::XX => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "II" => Ok(PreRotation::II),
            "IX" => Ok(PreRotation::IX),
            "XI" => Ok(PreRotation::XI),
            "XX" => Ok(PreRotation::XX),
            _ => Err(Error::Param(format!("unknown pre-rotation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationVector<T> {
    /// p₀₀, p₀₁, p₁₀, p₁₁.
    pub p: [T; 4],
}

impl<T: Real> PopulationVector<T> {
    /// Validated constructor: entries nonnegative and summing to one.
    pub fn new(p: [T; 4]) -> Result<Self> {
        let sum: f64 = p.iter().map(|&x| x.to_f64()).sum();
        if p.iter().any(|&x| !(x.to_f64() >= 0.0)) {
            return Err(Error::Param(format!("negative population in {:?}", p.map(|x| x.to_f64()))));
        }
        if (sum - 1.0).abs() > 1e-9_f64.max(16.0 * T::eps()) {
            return Err(Error::Param(format!("populations sum to {sum}, expected 1")));
        }
        Ok(Self { p })
    }

    pub fn basis(k: usize) -> Self {
        let mut p = [T::zero(); 4];
        p[k] = T::one();
        Self { p }
    }

    /// Product state with excited populations `e` (A) and `eps` (B).
    pub fn product(e: T, eps: T) -> Self {
        let one = T::one();
        Self { p: [(one - e) * (one - eps), (one - e) * eps, e * (one - eps), e * eps] }
    }

    pub fn has_negative(&self) -> bool {
        self.p.iter().any(|&x| x < T::zero())
    }

    /// Euclidean projection onto the probability simplex.
    pub fn project_simplex(&self) -> Self {
        let mut u = self.p;
        u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let mut css = T::zero();
        let mut theta = T::zero();
        for (i, &ui) in u.iter().enumerate() {
            css += ui;
            let t = (css - T::one()) / T::c((i + 1) as f64);
            if ui - t > T::zero() {
                theta = t;
            }
        }
        Self { p: self.p.map(|x| (x - theta).max(T::zero())) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel<T> {
    /// M₀₀, M₀₁, M₁₀, M₁₁.
    pub m: [Complex<T>; 4],
    /// Per-shot complex noise, E|z|² = σ².
    pub noise_sigma: T,
    pub shots: usize,
}

impl<T: Real> ReadoutModel<T> {
    pub fn new(m: [Complex<T>; 4], noise_sigma: T, shots: usize) -> Result<Self> {
        let r = Self { m, noise_sigma, shots };
        r.validate()?;
        Ok(r)
    }

    /// Synthetic unit-magnitude voltages with well separated phases.
    pub fn synthetic() -> Self {
        let ph = [0.3, 1.4, 2.9, 4.4];
        Self {
            m: ph.map(|x| Complex::new(T::c(f64::cos(x)), T::c(f64::sin(x)))),
            noise_sigma: T::zero(),
            shots: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= T::zero()) {
            return Err(Error::Param("noise_sigma must be >= 0".into()));
        }
        if self.shots == 0 {
            return Err(Error::Param("shots must be >= 1".into()));
        }
        let k = xor_condition(&self.m);
        if !(k < MAX_CONDITION) {
            return Err(Error::Singular(format!("readout matrix condition number {k:.3e}")));
        }
        Ok(())
    }

    /// The 4×4 map from populations to (V_II, V_IX, V_XI, V_XX).
    pub fn matrix(&self) -> Matrix4<Complex<T>> {
        xor_matrix(&self.m)
    }
}

/// `A[R][k] = v[k ⊕ R]`.
pub fn xor_matrix<S: Copy + nalgebra::Scalar>(v: &[S; 4]) -> Matrix4<S> {
    Matrix4::from_fn(|r, k| v[r ^ k])
}

/// Eigenvalues of the XOR-structured matrix: the Walsh transform of `v`.
pub fn walsh<T: Real>(v: &[Complex<T>; 4]) -> [Complex<T>; 4] {
    let mut out = [Complex::new(T::zero(), T::zero()); 4];
    for (s, o) in out.iter_mut().enumerate() {
        for (k, &x) in v.iter().enumerate() {
            if (s & k).count_ones() % 2 == 0 {
                *o += x;
            } else {
                *o -= x;
            }
        }
    }
    out
}

/// Exact 2-norm condition number of the XOR-structured matrix built from `v`
/// (normal, so it is the ratio of extreme eigenvalue moduli).
pub fn xor_condition<T: Real>(v: &[Complex<T>; 4]) -> f64 {
    let mags = walsh(v).map(|z| cabs(z).to_f64());
    let hi = mags.iter().cloned().fold(0.0, f64::max);
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Averaged voltage for the populations after the given pre-rotation.
pub fn simulate_voltage<T: Real>(
    p: &PopulationVector<T>,
    model: &ReadoutModel<T>,
    prerot: PreRotation,
) -> Complex<T> {
    let r = prerot.mask();
    let mut v = Complex::new(T::zero(), T::zero());
    for k in 0..4 {
        v += model.m[k ^ r] * p.p[k];
    }
    v
}

/// As [`simulate_voltage`] plus averaged shot noise from the seeded stream.
pub fn simulate_voltage_noisy<T: Real, R: Rng + ?Sized>(
    p: &PopulationVector<T>,
    model: &ReadoutModel<T>,
    prerot: PreRotation,
    rng: &mut R,
) -> Complex<T> {
    let v = simulate_voltage(p, model, prerot);
    if model.noise_sigma == T::zero() {
        return v;
    }
    let s = model.noise_sigma.to_f64() / (2.0 * model.shots as f64).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    v + Complex::new(T::c(re * s), T::c(im * s))
}

/// All four pre-rotated voltages; noise drawn from stream `(seed, index)`.
pub fn measure_all<T: Real>(
    p: &PopulationVector<T>,
    model: &ReadoutModel<T>,
    seed: Option<(u64, u64)>,
) -> [Complex<T>; 4] {
    match seed {
        None => PreRotation::ALL.map(|r| simulate_voltage(p, model, r)),
        Some((master, index)) => {
            let mut g = rng::stream(master, index);
            PreRotation::ALL.map(|r| simulate_voltage_noisy(p, model, r, &mut g))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion<T> {
    /// Real parts of M⁻¹V, not clamped.
    pub populations: PopulationVector<T>,
    /// Largest imaginary part of M⁻¹V.
    pub imag_residual: T,
    pub negative: bool,
}

pub fn invert_population<T: Real>(v: &[Complex<T>; 4], model: &ReadoutModel<T>) -> Result<Inversion<T>> {
    let k = xor_condition(&model.m);
    if !(k < MAX_CONDITION) {
        return Err(Error::Singular(format!("readout matrix condition number {k:.3e}")));
    }
    let lu = model.matrix().lu();
    let x = lu
        .solve(&Vector4::from_column_slice(v))
        .ok_or_else(|| Error::Singular("readout matrix is singular".into()))?;
    let p = PopulationVector { p: [x[0].re, x[1].re, x[2].re, x[3].re] };
    let imag = x.iter().map(|z| z.im.abs()).fold(T::zero(), |a, b| a.max(b));
    Ok(Inversion { negative: p.has_negative(), populations: p, imag_residual: imag })
}

/// Recover M from voltages measured on a known, imperfect initial state.
pub fn calibrate_m<T: Real>(p_init: &PopulationVector<T>, v: &[Complex<T>; 4]) -> Result<[Complex<T>; 4]> {
    let pc = p_init.p.map(|x| Complex::new(x, T::zero()));
    let k = xor_condition(&pc);
    if !(k < MAX_CONDITION) {
        return Err(Error::Singular(format!("initialization matrix condition number {k:.3e}")));
    }
    let x = xor_matrix(&pc)
        .lu()
        .solve(&Vector4::from_column_slice(v))
        .ok_or_else(|| Error::Singular("initialization matrix is singular".into()))?;
    Ok([x[0], x[1], x[2], x[3]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPopulation<T> {
    /// (c − d) / (a + b + c − d).
    pub e_cd: T,
    /// (a − b) / (a − b + c + d).
    pub e_ab: T,
    pub mean: T,
}

/// Residual control population from the four Ramsey contrasts.
pub fn control_population<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
) -> Result<ControlPopulation<T>> {
    let den1 = a + b + c - d;
    let den2 = a - b + c + d;
    let scale = [a, b, c, d].iter().map(|&z| cabs(z)).fold(T::zero(), |x, y| x.max(y));
    let tiny = scale * T::c(1e-12);
    if cabs(den1) <= tiny || cabs(den2) <= tiny || scale == T::zero() {
        return Err(Error::Singular("degenerate contrasts".into()));
    }
    // the estimators are real up to noise; project onto the denominator direction
    let ratio = |num: Complex<T>, den: Complex<T>| (num / den).re;
    let e_cd = ratio(c - d, den1);
    let e_ab = ratio(a - b, den2);
    Ok(ControlPopulation { e_cd, e_ab, mean: (e_cd + e_ab) / T::c(2.0) })
}

/// The four population-estimation experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RamseyKind {
    /// Plain Ramsey on B.
    A,
    /// Ramsey on B with the entangling gate in the middle.
    B,
    /// Control flipped before a plain Ramsey.
    C,
    /// Control flipped, entangling gate in the middle.
    D,
}

impl RamseyKind {
    pub const ALL: [RamseyKind; 4] = [RamseyKind::A, RamseyKind::B, RamseyKind::C, RamseyKind::D];
}

/// Operations of one Ramsey experiment, in time order, for analysis phase φ.
///
/// Sequence (d) uses an analysis phase offset by π so that its ideal contrast
/// equals that of (c).
pub fn ramsey_sequence(kind: RamseyKind, phi: f64, entangler: &BlockChannel) -> Vec<BlockChannel> {
    let u = |m: M4| BlockChannel::from_unitary(&m);
    let x90b = u(gates::on_b(&gates::rot_xy(std::f64::consts::FRAC_PI_2, 0.0)));
    let flip_a = u(gates::on_a(&gates::rx(std::f64::consts::PI)));
    let offset = if kind == RamseyKind::D { std::f64::consts::PI } else { 0.0 };
    let analysis = u(gates::on_b(&gates::rot_xy(std::f64::consts::FRAC_PI_2, phi + offset)));
    let mut seq = Vec::new();
    if matches!(kind, RamseyKind::C | RamseyKind::D) {
        seq.push(flip_a);
    }
    seq.push(x90b);
    if matches!(kind, RamseyKind::B | RamseyKind::D) {
        seq.push(entangler.clone());
    }
    seq.push(analysis);
    seq
}

/// Contrast `−(4/N) Σ V(φ_j) cos φ_j` over `n_phases` equally spaced analysis
/// phases, with populations read through the joint readout (II voltages).
pub fn ramsey_contrast(
    kind: RamseyKind,
    rho0: &M4,
    entangler: &BlockChannel,
    model: &ReadoutModel<f64>,
    n_phases: usize,
    seed: Option<(u64, u64)>,
) -> Complex<f64> {
    let mut acc = Complex::new(0.0, 0.0);
    let mut g = seed.map(|(m, i)| rng::stream(m, i));
    for j in 0..n_phases {
        let phi = std::f64::consts::TAU * j as f64 / n_phases as f64;
        let mut rho = *rho0;
        for op in ramsey_sequence(kind, phi, entangler) {
            rho = op.apply(&rho);
        }
        let p = PopulationVector { p: [0, 1, 2, 3].map(|k| rho[(k, k)].re) };
        let v = match g.as_mut() {
            Some(g) => simulate_voltage_noisy(&p, model, PreRotation::II, g),
            None => simulate_voltage(&p, model, PreRotation::II),
        };
        acc += v * phi.cos();
    }
    -acc * (4.0 / n_phases as f64)
}

/// Diagonal initial state with independent residual populations.
pub fn thermal_state(e: f64, eps: f64) -> M4 {
    let p = PopulationVector::product(e, eps);
    M4::from_fn(|r, c| if r == c { Complex::new(p.p[r], 0.0) } else { Complex::new(0.0, 0.0) })
}

/// Estimate the control population e by forward simulation of the four
/// experiments. `entangler` is the CX_π channel (ideal or imperfect).
pub fn estimate_control_population(
    e: f64,
    eps: f64,
    entangler: &BlockChannel,
    model: &ReadoutModel<f64>,
    n_phases: usize,
    seed: Option<u64>,
) -> Result<ControlPopulation<f64>> {
    let rho0 = thermal_state(e, eps);
    let c = RamseyKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &k)| ramsey_contrast(k, &rho0, entangler, model, n_phases, seed.map(|s| (s, i as u64))))
        .collect::<Vec<_>>();
    control_population(c[0], c[1], c[2], c[3])
}

/// CNOT with B as control: H_A H_B · CNOT_{A→B} · H_A H_B.
pub fn reversed_cnot() -> M4 {
    let h = gates::hadamard();
    let hh = gates::kron(&h, &h);
    hh * gates::cnot() * hh
}

/// Swap the roles of A and B in a two-qubit operator.
pub fn swap_roles(m: &M4) -> M4 {
    let s = [0usize, 2, 1, 3];
    M4::from_fn(|r, c| m[(s[r], s[c])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_voltages() {
        let m = ReadoutModel::<f64>::synthetic();
        let p = PopulationVector::basis(0);
        assert_eq!(simulate_voltage(&p, &m, PreRotation::II), m.m[0]);
        assert_eq!(simulate_voltage(&p, &m, PreRotation::XX), m.m[3]);
        assert_eq!(simulate_voltage(&p, &m, PreRotation::IX), m.m[1]);
    }

    #[test]
    fn synthetic_model_conditioned() {
        let m = ReadoutModel::<f64>::synthetic();
        assert!(xor_condition(&m.m) < 10.0);
        assert!(ReadoutModel::<f32>::synthetic().validate().is_ok());
    }

    #[test]
    fn degenerate_model_rejected() {
        let z = Complex::new(0.5, 0.2);
        let m = ReadoutModel { m: [z; 4], noise_sigma: 0.0, shots: 1 };
        assert!(invert_population(&[z; 4], &m).is_err());
        let u = PopulationVector { p: [0.25; 4] };
        assert!(calibrate_m(&u, &[z; 4]).is_err());
    }

    #[test]
    fn contrasts_equal_gives_zero() {
        let a = Complex::new(1.0, 0.5);
        let c = Complex::new(-0.3, 0.8);
        let r: ControlPopulation<f64> = control_population(a, a, c, c).unwrap();
        assert!(r.e_cd.abs() < 1e-15 && r.e_ab.abs() < 1e-15);
    }

    #[test]
    fn simplex_projection() {
        let p = PopulationVector { p: [1.02, -0.01, 0.0, -0.01] }.project_simplex();
        assert!((p.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn reversed_cnot_flips_a() {
        let m = reversed_cnot();
        // |01⟩ (B = 1) → |11⟩
        assert!((m[(3, 1)].norm() - 1.0).abs() < 1e-12);
        assert!(gates::max_abs(&(m - swap_roles(&gates::cnot()))) < 1e-12);
    }
}
