//! Single and coupled fluxonium spectra.
//!
//! Energies are in GHz (h = 1). The single-qubit Hamiltonian
//! `4 E_C n² + ½ E_L φ² − E_J cos(φ − φ_ext)` is written in the oscillator
//! basis of its quadratic part, where `φ = φ_zpf (a + a†)` and
//! `n = i n_zpf (a† − a)`. The cosine is evaluated through the eigenbasis of the
//! truncated `φ` matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};

pub const DEFAULT_BASIS: usize = 120;
/// Doubling the basis must move the lowest levels by less than this (GHz).
pub const CONVERGENCE_GHZ: f64 = 1e-6;
const CONVERGENCE_LEVELS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxoniumParams<T> {
    pub e_c: T,
    pub e_l: T,
    pub e_j: T,
    /// External flux in radians (2π Φ/Φ₀).
    pub phi_ext: T,
}

impl<T: Real> FluxoniumParams<T> {
    pub fn new(e_c: T, e_l: T, e_j: T, phi_ext: T) -> Self {
        Self { e_c, e_l, e_j, phi_ext }
    }

    /// Control qubit of the reference device.
    pub fn qubit_a() -> Self {
        Self::new(T::c(1.18), T::c(0.78), T::c(4.03), T::c(2.0 * std::f64::consts::PI * 0.5005))
    }

    /// Target qubit of the reference device.
    pub fn qubit_b() -> Self {
        Self::new(T::c(1.13), T::c(1.42), T::c(4.34), T::c(2.0 * std::f64::consts::PI * 0.4993))
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        if !(self.e_c > z) {
            return Err(Error::Param(format!("e_c must be > 0, got {}", self.e_c)));
        }
        if !(self.e_l > z) {
            return Err(Error::Param(format!("e_l must be > 0, got {}", self.e_l)));
        }
        if !(self.e_j >= z) {
            return Err(Error::Param(format!("e_j must be >= 0, got {}", self.e_j)));
        }
        if !self.phi_ext.is_finite() {
            return Err(Error::Param("phi_ext must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult<T: Real> {
    /// Ascending eigenenergies (GHz).
    pub energies: Vec<T>,
    /// ⟨i|n|j⟩ in the eigenbasis (purely imaginary with the phase convention used).
    pub n_elements: DMatrix<Complex<T>>,
    /// ⟨i|φ|j⟩ in the eigenbasis.
    pub phi_elements: DMatrix<T>,
    pub basis_size: usize,
    pub convergence_flag: bool,
    /// Largest shift of the lowest levels under basis doubling (GHz).
    pub convergence_shift: f64,
    /// Eigen residual max ‖Hv − Ev‖ / ‖H‖ over all states.
    pub residual: f64,
}

impl<T: Real> SpectrumResult<T> {
    /// Transition frequency i → j (GHz).
    pub fn freq(&self, i: usize, j: usize) -> T {
        self.energies[j] - self.energies[i]
    }

    /// |⟨i|n|j⟩|.
    pub fn n_abs(&self, i: usize, j: usize) -> T {
        cabs(self.n_elements[(i, j)])
    }
}

struct Solved<T: Real> {
    energies: Vec<T>,
    vecs: DMatrix<T>,
    phi: DMatrix<T>,
    p: DMatrix<T>,
    residual: f64,
}

fn solve<T: Real>(p: &FluxoniumParams<T>, n: usize) -> Solved<T> {
    let two = T::c(2.0);
    let phi_zpf = (two * p.e_c / p.e_l).powf(T::c(0.25));
    let n_zpf = (p.e_l / (T::c(32.0) * p.e_c)).powf(T::c(0.25));
    let omega = (T::c(8.0) * p.e_c * p.e_l).sqrt();

    let mut phi = DMatrix::<T>::zeros(n, n);
    // n = i·P with P = n_zpf (a† − a), real antisymmetric
    let mut pm = DMatrix::<T>::zeros(n, n);
    for k in 1..n {
        let s = T::c((k as f64).sqrt());
        phi[(k - 1, k)] = phi_zpf * s;
        phi[(k, k - 1)] = phi_zpf * s;
        pm[(k, k - 1)] = n_zpf * s;
        pm[(k - 1, k)] = -n_zpf * s;
    }

    let mut h = DMatrix::<T>::zeros(n, n);
    if p.e_j != T::zero() {
        let eig = SymmetricEigen::new(phi.clone());
        let mut scaled = eig.eigenvectors.clone();
        for (c, &w) in eig.eigenvalues.iter().enumerate() {
            let f = (w - p.phi_ext).cos() * p.e_j;
            scaled.column_mut(c).scale_mut(f);
        }
        h -= &scaled * eig.eigenvectors.transpose();
    }
    for k in 0..n {
        h[(k, k)] += omega * T::c(k as f64 + 0.5);
    }
    // exact symmetry before the eigensolver
    let h = (&h + h.transpose()) * T::c(0.5);

    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut vecs = DMatrix::<T>::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < T::zero() {
            col.neg_mut();
        }
        vecs.set_column(dst, &col);
        energies.push(eig.eigenvalues[src]);
    }

    let hnorm = h.norm().to_f64().max(f64::MIN_POSITIVE);
    let mut residual = 0.0f64;
    for (k, &e) in energies.iter().enumerate() {
        let v = vecs.column(k);
        let r = (&h * v - v * e).norm().to_f64() / hnorm;
        residual = residual.max(r);
    }

    Solved { energies, vecs, phi, p: pm, residual }
}

/// Diagonalize one fluxonium in an oscillator basis of `basis_size` states.
pub fn diagonalize_fluxonium<T: Real>(
    params: &FluxoniumParams<T>,
    basis_size: usize,
) -> Result<SpectrumResult<T>> {
    params.validate()?;
    if basis_size < 20 {
        return Err(Error::Param(format!("basis_size must be >= 20, got {basis_size}")));
    }
    let s = solve(params, basis_size);
    let d = solve(params, 2 * basis_size);
    let shift = (0..CONVERGENCE_LEVELS.min(basis_size))
        .map(|k| (s.energies[k] - d.energies[k]).abs().to_f64())
        .fold(0.0, f64::max);
    // single precision cannot resolve 1 kHz on a ~10 GHz scale
    let scale = s.energies[CONVERGENCE_LEVELS - 1].abs().to_f64().max(1.0);
    let tol = CONVERGENCE_GHZ.max(64.0 * T::eps() * scale);

    let vt = s.vecs.transpose();
    let p_e = &vt * &s.p * &s.vecs;
    let phi_e = &vt * &s.phi * &s.vecs;
    let n_elements = p_e.map(|x| Complex::new(T::zero(), x));

    Ok(SpectrumResult {
        energies: s.energies,
        n_elements,
        phi_elements: phi_e,
        basis_size,
        convergence_flag: shift < tol,
        convergence_shift: shift,
        residual: s.residual,
    })
}

/// Magnitudes |⟨i|n|j⟩| among the lowest `levels` states.
pub fn charge_matrix_elements<T: Real>(spectrum: &SpectrumResult<T>, levels: usize) -> DMatrix<T> {
    let l = levels.min(spectrum.energies.len());
    DMatrix::from_fn(l, l, |i, j| cabs(spectrum.n_elements[(i, j)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledParams<T> {
    pub qubit_a: FluxoniumParams<T>,
    pub qubit_b: FluxoniumParams<T>,
    /// Charge-charge coupling (GHz).
    pub j_c: T,
    pub levels_per_qubit: usize,
    /// Replaces the computed static ZZ in the dynamics when set (GHz).
    pub residual_zz_override: Option<T>,
    pub basis_size: usize,
}

impl<T: Real> CoupledParams<T> {
    /// Reference two-fluxonium device.
    pub fn table1() -> Self {
        Self {
            qubit_a: FluxoniumParams::qubit_a(),
            qubit_b: FluxoniumParams::qubit_b(),
            j_c: T::c(0.28),
            levels_per_qubit: 5,
            residual_zz_override: None,
            basis_size: DEFAULT_BASIS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.qubit_a.validate()?;
        self.qubit_b.validate()?;
        if !(self.j_c >= T::zero()) {
            return Err(Error::Param(format!("j_c must be >= 0, got {}", self.j_c)));
        }
        if self.levels_per_qubit < 3 {
            return Err(Error::Param("levels_per_qubit must be >= 3".into()));
        }
        if self.levels_per_qubit > self.basis_size {
            return Err(Error::Param("levels_per_qubit exceeds basis_size".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DressedSystem<T: Real> {
    pub dim: usize,
    pub levels: usize,
    /// Dressed energies relative to the dressed |00⟩ (GHz), ascending.
    pub energies: Vec<T>,
    /// Bare product label (i_A, j_B) of each dressed index.
    pub labels: Vec<(usize, usize)>,
    /// Overlap |⟨bare label|dressed⟩|² of each state.
    pub overlaps: Vec<T>,
    pub n_a_op: DMatrix<Complex<T>>,
    pub n_b_op: DMatrix<Complex<T>>,
    pub static_zz: T,
    pub zz_override: Option<T>,
    pub spectrum_a: SpectrumResult<T>,
    pub spectrum_b: SpectrumResult<T>,
    pub j_c: T,
    index: Vec<usize>,
}

impl<T: Real> DressedSystem<T> {
    /// Dressed index of bare label (i, j).
    pub fn idx(&self, i: usize, j: usize) -> usize {
        self.index[i * self.levels + j]
    }

    pub fn energy(&self, i: usize, j: usize) -> T {
        self.energies[self.idx(i, j)]
    }

    /// Indices of |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn computational(&self) -> [usize; 4] {
        [self.idx(0, 0), self.idx(0, 1), self.idx(1, 0), self.idx(1, 1)]
    }

    /// Energies used for propagation: the |11⟩ level is shifted so that the
    /// ZZ equals the override, when one is set.
    pub fn dynamics_energies(&self) -> Vec<T> {
        let mut e = self.energies.clone();
        if let Some(zz) = self.zz_override {
            let k = self.idx(1, 1);
            e[k] += zz - self.static_zz;
        }
        e
    }

    /// ZZ seen by the dynamics.
    pub fn effective_zz(&self) -> T {
        self.zz_override.unwrap_or(self.static_zz)
    }

    /// Conditional 1→2 frequencies of A with B in |0⟩ and |1⟩.
    pub fn conditional_a12(&self) -> (T, T) {
        (
            self.energy(2, 0) - self.energy(1, 0),
            self.energy(2, 1) - self.energy(1, 1),
        )
    }

    /// Conditional 1→2 frequencies of B with A in |0⟩ and |1⟩.
    pub fn conditional_b12(&self) -> (T, T) {
        (
            self.energy(0, 2) - self.energy(0, 1),
            self.energy(1, 2) - self.energy(1, 1),
        )
    }

    /// Largest dressed energy (GHz).
    pub fn max_energy(&self) -> T {
        self.energies.iter().copied().fold(T::zero(), |a, b| a.max(b))
    }
}

/// Diagonalize H_A + H_B + J_C n_A n_B in the truncated product basis.
pub fn build_coupled_system<T: Real>(params: &CoupledParams<T>) -> Result<DressedSystem<T>> {
    params.validate()?;
    let sa = diagonalize_fluxonium(&params.qubit_a, params.basis_size)?;
    let sb = diagonalize_fluxonium(&params.qubit_b, params.basis_size)?;
    for (name, s) in [("A", &sa), ("B", &sb)] {
        if !s.convergence_flag {
            return Err(Error::Param(format!(
                "qubit {name} spectrum not converged at basis {} (shift {:.2e} GHz)",
                s.basis_size, s.convergence_shift
            )));
        }
    }
    build_from_spectra(sa, sb, params.j_c, params.levels_per_qubit, params.residual_zz_override)
}

/// Coupled system from precomputed single-qubit spectra.
pub fn build_from_spectra<T: Real>(
    sa: SpectrumResult<T>,
    sb: SpectrumResult<T>,
    j_c: T,
    levels: usize,
    zz_override: Option<T>,
) -> Result<DressedSystem<T>> {
    let l = levels;
    let dim = l * l;
    let ra = DMatrix::from_fn(l, l, |i, j| sa.n_elements[(i, j)].im);
    let rb = DMatrix::from_fn(l, l, |i, j| sb.n_elements[(i, j)].im);

    // n_A n_B = (i R_A)(i R_B) = −R_A ⊗ R_B, so H is real symmetric
    let mut h = DMatrix::<T>::zeros(dim, dim);
    for ia in 0..l {
        for ib in 0..l {
            let r = ia * l + ib;
            h[(r, r)] = (sa.energies[ia] - sa.energies[0]) + (sb.energies[ib] - sb.energies[0]);
            for ja in 0..l {
                for jb in 0..l {
                    let c = ja * l + jb;
                    h[(r, c)] -= j_c * ra[(ia, ja)] * rb[(ib, jb)];
                }
            }
        }
    }
    let h = (&h + h.transpose()) * T::c(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let mut vecs = DMatrix::<T>::zeros(dim, dim);
    let mut energies = Vec::with_capacity(dim);
    let mut labels = Vec::with_capacity(dim);
    let mut overlaps = Vec::with_capacity(dim);
    let mut index = vec![usize::MAX; dim];
    for (k, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let imax = col.iamax();
        if col[imax] < T::zero() {
            col.neg_mut();
        }
        let ov = col[imax] * col[imax];
        let label = (imax / l, imax % l);
        if ov.to_f64() <= 0.5 {
            return Err(Error::Label { index: k, label, overlap: ov.to_f64() });
        }
        if index[imax] != usize::MAX {
            return Err(Error::Label { index: k, label, overlap: ov.to_f64() });
        }
        index[imax] = k;
        vecs.set_column(k, &col);
        energies.push(eig.eigenvalues[src]);
        labels.push(label);
        overlaps.push(ov);
    }
    let e00 = energies[index[0]];
    for e in energies.iter_mut() {
        *e -= e00;
    }

    let eye = DMatrix::<T>::identity(l, l);
    let vt = vecs.transpose();
    let na = &vt * ra.kronecker(&eye) * &vecs;
    let nb = &vt * eye.kronecker(&rb) * &vecs;
    let to_c = |m: DMatrix<T>| {
        let m = (&m - m.transpose()) * T::c(0.5);
        m.map(|x| Complex::new(T::zero(), x))
    };

    let e = |i: usize, j: usize| energies[index[i * l + j]];
    // the decoupled limit is exact; avoid rounding residue from the sums
    let static_zz = if j_c == T::zero() {
        T::zero()
    } else {
        e(1, 1) - e(1, 0) - e(0, 1) + e(0, 0)
    };

    Ok(DressedSystem {
        dim,
        levels: l,
        energies,
        labels,
        overlaps,
        n_a_op: to_c(na),
        n_b_op: to_c(nb),
        static_zz,
        zz_override,
        spectrum_a: sa,
        spectrum_b: sb,
        j_c,
        index,
    })
}

/// Static ZZ at J_C and at scale·J_C.
pub fn static_zz_scaling<T: Real>(params: &CoupledParams<T>, scale: T) -> Result<(T, T)> {
    if !(scale > T::zero() && scale <= T::one()) {
        return Err(Error::Param(format!("scale must lie in (0, 1], got {scale}")));
    }
    params.validate()?;
    let sa = diagonalize_fluxonium(&params.qubit_a, params.basis_size)?;
    let sb = diagonalize_fluxonium(&params.qubit_b, params.basis_size)?;
    let l = params.levels_per_qubit;
    let full = build_from_spectra(sa.clone(), sb.clone(), params.j_c, l, None)?;
    let scaled = build_from_spectra(sa, sb, params.j_c * scale, l, None)?;
    Ok((full.static_zz, scaled.static_zz))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CRRates<T> {
    /// Conditional Rabi rate of B with A in |0⟩ (GHz).
    pub omega_0: Complex<T>,
    /// Conditional Rabi rate of B with A in |1⟩ (GHz).
    pub omega_1: Complex<T>,
}

/// Leading-order cross-resonance rates from bare frequencies and charge
/// matrix elements. Only the 0–1 and 1–2 pathways of A are kept, in the
/// rotating-wave approximation.
pub fn perturbative_cr_rates<T: Real>(
    a: &SpectrumResult<T>,
    b: &SpectrumResult<T>,
    j_c: T,
    eps_a: Complex<T>,
) -> Result<CRRates<T>> {
    let w_a = a.freq(0, 1);
    let w_a12 = a.freq(1, 2);
    let w_b = b.freq(0, 1);
    let tiny = T::c(1e-12);
    let d01 = w_b - w_a;
    let d12 = w_a12 - w_b;
    if d01.abs() < tiny {
        return Err(Error::Singular("omega_B equals omega_A".into()));
    }
    if d12.abs() < tiny {
        return Err(Error::Singular("omega_A12 equals omega_B".into()));
    }
    let n01a = a.n_abs(0, 1);
    let n12a = a.n_abs(1, 2);
    let n01b = b.n_abs(0, 1);
    let i = Complex::new(T::zero(), T::one());
    let t0 = n01a * n01a / d01;
    let t1 = t0 + n12a * n12a / d12;
    let omega_0 = eps_a * i * Complex::from(j_c * t0 * n01b);
    let omega_1 = eps_a * (-i) * Complex::from(j_c * t1 * n01b);
    Ok(CRRates { omega_0, omega_1 })
}

/// Rates from the coupled parameters.
pub fn perturbative_cr_rates_from_params<T: Real>(
    params: &CoupledParams<T>,
    eps_a: Complex<T>,
) -> Result<CRRates<T>> {
    params.validate()?;
    let sa = diagonalize_fluxonium(&params.qubit_a, params.basis_size)?;
    let sb = diagonalize_fluxonium(&params.qubit_b, params.basis_size)?;
    perturbative_cr_rates(&sa, &sb, params.j_c, eps_a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_limit_frequency_and_element() {
        let p = FluxoniumParams::new(1.0, 1.0, 0.0, 0.0);
        let s = diagonalize_fluxonium(&p, 40).unwrap();
        assert!((s.freq(0, 1) - 8f64.sqrt()).abs() < 1e-12);
        assert!((s.n_abs(0, 1) - (1.0f64 / 32.0).powf(0.25)).abs() < 1e-12);
        assert!(s.convergence_flag);
    }

    #[test]
    fn rejects_bad_params() {
        let p = FluxoniumParams::new(-1.0, 1.0, 1.0, 0.0);
        assert!(matches!(diagonalize_fluxonium(&p, 40), Err(Error::Param(_))));
        let p = FluxoniumParams::new(1.0, 1.0, 1.0, 0.0);
        assert!(diagonalize_fluxonium(&p, 10).is_err());
    }

    #[test]
    fn decoupled_energies_add() {
        let mut p = CoupledParams::<f64>::table1();
        p.j_c = 0.0;
        let d = build_coupled_system(&p).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let bare = d.spectrum_a.freq(0, i) + d.spectrum_b.freq(0, j);
                assert!((d.energy(i, j) - bare).abs() < 1e-9);
            }
        }
        assert_eq!(d.static_zz, 0.0);
    }

    #[test]
    fn zero_drive_rates_vanish() {
        let p = CoupledParams::<f64>::table1();
        let r = perturbative_cr_rates_from_params(&p, Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(r.omega_0.norm(), 0.0);
        assert_eq!(r.omega_1.norm(), 0.0);
    }
}
