use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, SMatrix};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{c, kron, pauli, rx, ry, BlockChannel, M2, M4};
use crate::readout::{simulate_voltage_noisy, PopulationVector, PreRotation, ReadoutModel};
use crate::rng;

pub type M16 = SMatrix<C64, 16, 16>;

/// Number of tomography pre-rotations per input state.
pub const QPT_PREROTATIONS: usize = 29;
pub const QPT_INPUTS: usize = 36;

/// Single-qubit gates used for preparation and analysis: I, X_π, X_π/2, Y_π/2, X_−π/2, Y_−π/2.
pub fn tomography_gates() -> [M2; 6] {
    [M2::identity(), rx(PI), rx(FRAC_PI_2), ry(FRAC_PI_2), rx(-FRAC_PI_2), ry(-FRAC_PI_2)]
}

/// Two-qubit Pauli P_a ⊗ P_b for index 4a + b.
pub fn pauli2(m: usize) -> M4 {
    kron(&pauli(m / 4), &pauli(m % 4))
}

pub fn pauli_label(m: usize) -> String {
    const L: [char; 4] = ['I', 'X', 'Y', 'Z'];
    format!("{}{}", L[m / 4], L[m % 4])
}

/// Local gate pairs in order, A as the outer index.
fn pairs() -> Vec<M4> {
    let g = tomography_gates();
    let mut v = Vec::with_capacity(36);
    for a in &g {
        for b in &g {
            v.push(kron(a, b));
        }
    }
    v
}

/// The 36 prepared input states (u_A ⊗ u_B)|00⟩.
pub fn qpt_inputs() -> Vec<M4> {
    let mut ground = M4::zeros();
    ground[(0, 0)] = c(1.0, 0.0);
    pairs().iter().map(|u| u * ground * u.adjoint()).collect()
}

/// The pre-readout rotations: the first 29 of the same 36 pairs.
pub fn qpt_prerotations() -> Vec<M4> {
    pairs().into_iter().take(QPT_PREROTATIONS).collect()
}

/// How each tomography setting is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TomographyReadout {
    /// All four computational populations.
    Populations,
    /// One averaged joint-readout voltage (two real numbers) per setting, noise seeded.
    Voltage { model: ReadoutModel<f64>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    /// χ in the two-qubit Pauli basis, trace normalized.
    pub chi: M16,
    pub fidelity: f64,
    /// Smallest eigenvalue of χ.
    pub min_eigenvalue: f64,
    /// Trace of χ before normalization.
    pub raw_trace: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChiExport {
    pub labels: Vec<String>,
    /// Row-major [re, im] pairs.
    pub chi: Vec<[f64; 2]>,
    pub fidelity: f64,
    pub min_eigenvalue: f64,
    pub raw_trace: f64,
}

impl ProcessMatrix {
    fn new(chi: M16, target: &M4) -> Self {
        let raw_trace = (0..16).map(|i| chi[(i, i)].re).sum::<f64>();
        let herm = (chi + chi.adjoint()) * c(0.5, 0.0);
        let chi = if raw_trace.abs() > 0.0 { herm / c(raw_trace, 0.0) } else { herm };
        let min_eigenvalue = chi.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        Self { fidelity: process_fidelity_chi(&chi, target), chi, min_eigenvalue, raw_trace }
    }

    /// Eigenvalue clipping to the nearest positive semidefinite χ with unit trace.
    pub fn psd_projection(&self, target: &M4) -> Self {
        let e = self.chi.symmetric_eigen();
        let mut out = M16::zeros();
        for (k, &l) in e.eigenvalues.iter().enumerate() {
            if l > 0.0 {
                let v = e.eigenvectors.column(k);
                out += v * v.adjoint() * c(l, 0.0);
            }
        }
        Self::new(out, target)
    }

    pub fn export(&self) -> ChiExport {
        let mut chi = Vec::with_capacity(256);
        for r in 0..16 {
            for s in 0..16 {
                chi.push([self.chi[(r, s)].re, self.chi[(r, s)].im]);
            }
        }
        ChiExport {
            labels: (0..16).map(pauli_label).collect(),
            chi,
            fidelity: self.fidelity,
            min_eigenvalue: self.min_eigenvalue,
            raw_trace: self.raw_trace,
        }
    }

    /// `row,col,re,im` for every entry.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,re,im\n");
        for r in 0..16 {
            for k in 0..16 {
                let z = self.chi[(r, k)];
                s.push_str(&format!("{},{},{:.12e},{:.12e}\n", pauli_label(r), pauli_label(k), z.re, z.im));
            }
        }
        s
    }
}

/// χ of the unitary channel ρ ↦ UρU†.
pub fn chi_of_unitary(u: &M4) -> M16 {
    let coeff: Vec<C64> = (0..16).map(|m| (pauli2(m) * u).trace() / c(4.0, 0.0)).collect();
    M16::from_fn(|m, n| coeff[m] * coeff[n].conj())
}

/// Process fidelity Σ u_m* χ_mn u_n with u_m = Tr(P_m U)/4.
pub fn process_fidelity_chi(chi: &M16, target: &M4) -> f64 {
    let u: Vec<C64> = (0..16).map(|m| (pauli2(m) * target).trace() / c(4.0, 0.0)).collect();
    let mut f = c(0.0, 0.0);
    for m in 0..16 {
        for n in 0..16 {
            f += u[m].conj() * chi[(m, n)] * u[n];
        }
    }
    f.re
}

/// The channel ρ ↦ Σ χ_mn P_m ρ P_n.
pub fn channel_from_chi(chi: &M16) -> BlockChannel {
    let p: Vec<M4> = (0..16).map(pauli2).collect();
    let mut out = [[M4::zeros(); 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            for m in 0..16 {
                for n in 0..16 {
                    let x = chi[(m, n)];
                    if x != c(0.0, 0.0) {
                        // P_m |i⟩⟨j| P_n
                        *o += p[m].column(i) * p[n].row(j) * x;
                    }
                }
            }
        }
    }
    BlockChannel { out }
}

/// Hermitian observables measured by one tomography setting.
fn observables(pre: &M4, readout: &TomographyReadout) -> Vec<M4> {
    let proj = |k: usize| {
        let mut m = M4::zeros();
        m[(k, k)] = c(1.0, 0.0);
        pre.adjoint() * m * pre
    };
    match readout {
        TomographyReadout::Populations => (0..4).map(proj).collect(),
        TomographyReadout::Voltage { model, .. } => {
            let mut re = M4::zeros();
            let mut im = M4::zeros();
            for k in 0..4 {
                re += proj(k) * c(model.m[k].re, 0.0);
                im += proj(k) * c(model.m[k].im, 0.0);
            }
            vec![re, im]
        }
    }
}

fn measure(rho: &M4, pre: &M4, readout: &TomographyReadout, index: u64) -> Vec<f64> {
    let r = pre * rho * pre.adjoint();
    let p = PopulationVector { p: [0, 1, 2, 3].map(|k| r[(k, k)].re) };
    match readout {
        TomographyReadout::Populations => p.p.to_vec(),
        TomographyReadout::Voltage { model, seed } => {
            let mut g = rng::stream(*seed, index);
            let v = simulate_voltage_noisy(&p, model, PreRotation::II, &mut g);
            vec![v.re, v.im]
        }
    }
}

/// Least-squares state tomography: real Pauli coefficients r with ρ = Σ r_P P / 4.
fn state_tomography(data: &[f64], design: &DMatrix<f64>) -> Result<M4> {
    let b = DVector::from_column_slice(data);
    let svd = design.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::Protocol(format!("state tomography: {e}")))?;
    let mut rho = M4::zeros();
    for m in 0..16 {
        rho += pauli2(m) * c(x[m] / 4.0, 0.0);
    }
    Ok(rho)
}

fn tomography_design(readout: &TomographyReadout) -> Result<DMatrix<f64>> {
    let obs: Vec<M4> = qpt_prerotations().iter().flat_map(|p| observables(p, readout)).collect();
    let d = DMatrix::from_fn(obs.len(), 16, |r, m| (obs[r] * pauli2(m)).trace().re / 4.0);
    let rank = d.clone().svd(false, false).rank(1e-9);
    if rank < 16 {
        return Err(Error::Protocol(format!("tomography settings span rank {rank} < 16")));
    }
    Ok(d)
}

fn vec_col(m: &M4) -> [C64; 16] {
    let mut v = [c(0.0, 0.0); 16];
    for j in 0..4 {
        for i in 0..4 {
            v[4 * j + i] = m[(i, j)];
        }
    }
    v
}

/// χ by least squares from input and output density matrices.
pub fn chi_from_states(inputs: &[M4], outputs: &[M4]) -> Result<M16> {
    let n = inputs.len();
    let rin = DMatrix::from_fn(16, n, |r, s| vec_col(&inputs[s])[r]);
    let rout = DMatrix::from_fn(16, n, |r, s| vec_col(&outputs[s])[r]);
    let gram = &rin * rin.adjoint();
    let rank = gram.clone().svd(false, false).rank(1e-9);
    if rank < 16 {
        return Err(Error::Protocol(format!("input states span rank {rank} < 16")));
    }
    let inv = gram.try_inverse().ok_or_else(|| Error::Protocol("singular input Gram matrix".into()))?;
    // superoperator on column-stacked vectors
    let s = rout * rin.adjoint() * inv;
    // S = Σ χ_mn P_nᵀ ⊗ P_m, orthogonal with norm 16
    let p: Vec<M4> = (0..16).map(pauli2).collect();
    let mut chi = M16::zeros();
    for m in 0..16 {
        for nn in 0..16 {
            let mut acc = c(0.0, 0.0);
            for j in 0..4 {
                for i in 0..4 {
                    for l in 0..4 {
                        for k in 0..4 {
                            // (P_nᵀ ⊗ P_m)[(4j+i),(4l+k)] = P_n[(l,j)] P_m[(i,k)]
                            let e = p[nn][(l, j)] * p[m][(i, k)];
                            if e != c(0.0, 0.0) {
                                acc += e.conj() * s[(4 * j + i, 4 * l + k)];
                            }
                        }
                    }
                }
            }
            chi[(m, nn)] = acc / c(16.0, 0.0);
        }
    }
    Ok(chi)
}

/// Process tomography of `channel`: 36 inputs, 29 analysis rotations each,
/// least-squares states, then least-squares χ. Fidelity is against `target`.
pub fn qpt(channel: &BlockChannel, readout: &TomographyReadout, target: &M4) -> Result<ProcessMatrix> {
    let design = tomography_design(readout)?;
    let pres = qpt_prerotations();
    let inputs = qpt_inputs();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (s, rho_in) in inputs.iter().enumerate() {
        let rho = channel.apply(rho_in);
        let data: Vec<f64> = pres
            .iter()
            .enumerate()
            .flat_map(|(k, p)| measure(&rho, p, readout, (s * QPT_PREROTATIONS + k) as u64))
            .collect();
        outputs.push(state_tomography(&data, &design)?);
    }
    Ok(ProcessMatrix::new(chi_from_states(&inputs, &outputs)?, target))
}

/// Total number of readouts in a tomography run.
pub fn qpt_measurement_count() -> usize {
    QPT_INPUTS * QPT_PREROTATIONS
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::cx_pi;

    #[test]
    fn identity_channel() {
        let pm = qpt(&BlockChannel::identity(), &TomographyReadout::Populations, &M4::identity()).unwrap();
        assert!((pm.fidelity - 1.0).abs() < 1e-6);
        assert!((pm.chi[(0, 0)].re - 1.0).abs() < 1e-6);
        assert_eq!(qpt_measurement_count(), 1044);
    }

    #[test]
    fn chi_round_trip() {
        let chi = chi_of_unitary(&cx_pi());
        let ch = channel_from_chi(&chi);
        let back = chi_from_states(&qpt_inputs(), &qpt_inputs().iter().map(|r| ch.apply(r)).collect::<Vec<_>>()).unwrap();
        assert!((back - chi).norm() < 1e-10);
    }

    #[test]
    fn voltage_readout_is_complete() {
        let ro = TomographyReadout::Voltage { model: ReadoutModel::synthetic(), seed: 1 };
        let pm = qpt(&BlockChannel::from_unitary(&cx_pi()), &ro, &cx_pi()).unwrap();
        assert!(pm.fidelity > 0.999999);
    }
}
