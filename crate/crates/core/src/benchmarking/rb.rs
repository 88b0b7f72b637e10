use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clifford::{compose2, two_qubit_cliffords, Gate1, Op, TwoQubitCliffords, TWO_QUBIT_ORDER};
use crate::error::{Error, Result};
use crate::gates::{c, cx_pi, kron, on_a, on_b, pauli, BlockChannel, M2, M4};
use crate::readout::{invert_population, measure_all, PopulationVector, ReadoutModel};
use crate::rng;

/// A random Clifford sequence closed by its recovery element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbSequence {
    /// Clifford indices in time order, without the recovery.
    pub cliffords: Vec<usize>,
    /// Whether the interleaved gate follows every Clifford.
    pub interleaved: bool,
    pub recovery: usize,
}

impl RbSequence {
    /// Full gate list, recovery included.
    pub fn ops(&self) -> Vec<Op> {
        let mut ops = Vec::new();
        for &k in &self.cliffords {
            ops.extend(TwoQubitCliffords::decomposition(k));
            if self.interleaved {
                ops.push(Op::Cx);
            }
        }
        ops.extend(TwoQubitCliffords::decomposition(self.recovery));
        ops
    }
}

/// `m` uniform two-qubit Cliffords, optionally each followed by the Clifford
/// `interleave`, plus the element that inverts the whole product.
pub fn generate_rb_sequence(m: usize, interleave: Option<&M4>, seed: u64) -> Result<RbSequence> {
    if m == 0 {
        return Err(Error::Param("sequence length must be >= 1".into()));
    }
    let g = two_qubit_cliffords();
    if let Some(u) = interleave {
        if g.find(u).is_none() {
            return Err(Error::Protocol("interleaved gate is not a two-qubit Clifford".into()));
        }
    }
    let mut r = rng::stream(seed, 0);
    let mut total = M4::identity();
    let mut cliffords = Vec::with_capacity(m);
    for _ in 0..m {
        let k = r.random_range(0..TWO_QUBIT_ORDER);
        cliffords.push(k);
        total = g.unitary(k) * total;
        if let Some(u) = interleave {
            total = u * total;
        }
    }
    let recovery = g.inverse_of(&total).expect("products of Cliffords are Cliffords");
    Ok(RbSequence { cliffords, interleaved: interleave.is_some(), recovery })
}

/// Error model used by [`run_rb`].
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Ideal,
    /// Two-qubit depolarizing channel after every Clifford, sized to give this EPC.
    Depolarizing { epc: f64 },
    /// Per-pulse single-qubit depolarizing (parameter λ on each qubit) and a
    /// full channel for every CX_π, e.g. from the Lindblad engine.
    GateLevel { lambda_a: f64, lambda_b: f64, cx: BlockChannel },
}

impl NoiseModel {
    /// Two-qubit depolarizing parameter for a target EPC.
    pub fn depolarizing_lambda(epc: f64) -> f64 {
        4.0 / 3.0 * epc
    }

    /// Single-qubit depolarizing parameter for an average gate fidelity.
    pub fn lambda_from_fidelity(f: f64) -> f64 {
        2.0 * (1.0 - f)
    }
}

/// How a sequence fidelity is read out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// P(|00⟩) from the simulated density matrix.
    Exact,
    /// Joint-readout voltages under the four pre-pulses, inverted to populations.
    Readout(ReadoutModel<f64>),
}

/// The gate interleaved in IRB: its ideal unitary and its noisy channel.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedGate {
    pub ideal: M4,
    pub channel: BlockChannel,
}

impl InterleavedGate {
    pub fn ideal_cx() -> Self {
        Self { ideal: cx_pi(), channel: BlockChannel::from_unitary(&cx_pi()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub estimator: Estimator,
    pub interleave: Option<InterleavedGate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    /// Covariance of (A, p, B).
    pub covariance: [[f64; 3]; 3],
}

impl RbFit {
    pub fn p_stderr(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBResult {
    pub lengths: Vec<usize>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Sequence fidelities per length.
    pub raw: Vec<Vec<f64>>,
    pub fit: RbFit,
    pub epc: f64,
    pub epc_stderr: f64,
}

impl RBResult {
    /// `m,mean,stderr` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,mean,stderr\n");
        for ((m, f), e) in self.lengths.iter().zip(&self.mean).zip(&self.stderr) {
            s.push_str(&format!("{m},{f:.12e},{e:.12e}\n"));
        }
        s
    }
}

/// EPC = 3/4 (1 − p) for two qubits.
pub fn epc_from_p(p: f64) -> f64 {
    0.75 * (1.0 - p)
}

/// ρ ↦ (1 − λ) ρ + λ I/2 ⊗ Tr_q ρ on one qubit (`on_a` selects A).
fn depolarize_one(rho: &M4, lambda: f64, on_a_qubit: bool) -> M4 {
    if lambda == 0.0 {
        return *rho;
    }
    let mut twirl = M4::zeros();
    for k in 1..4 {
        let p = if on_a_qubit { on_a(&pauli(k)) } else { on_b(&pauli(k)) };
        twirl += p * rho * p;
    }
    rho * c(1.0 - 0.75 * lambda, 0.0) + twirl * c(lambda / 4.0, 0.0)
}

fn conj(u: &M4, rho: &M4) -> M4 {
    u * rho * u.adjoint()
}

fn apply_op(rho: &M4, op: &Op, noise: &NoiseModel, interleave_cx: Option<&BlockChannel>) -> M4 {
    let id = M2::identity();
    match op {
        Op::A(g) | Op::B(g) => {
            let a = matches!(op, Op::A(_));
            let u = if a { kron(&g.matrix(), &id) } else { kron(&id, &g.matrix()) };
            let r = conj(&u, rho);
            match (noise, g) {
                (NoiseModel::GateLevel { lambda_a, lambda_b, .. }, Gate1::X(_) | Gate1::Y(_)) => {
                    depolarize_one(&r, if a { *lambda_a } else { *lambda_b }, a)
                }
                _ => r,
            }
        }
        Op::Cx => match (interleave_cx, noise) {
            (Some(ch), _) => ch.apply(rho),
            (None, NoiseModel::GateLevel { cx, .. }) => cx.apply(rho),
            _ => conj(&cx_pi(), rho),
        },
    }
}

/// Final density matrix of a sequence started in |00⟩.
pub fn simulate_sequence(seq: &RbSequence, noise: &NoiseModel, interleave: Option<&InterleavedGate>) -> M4 {
    let mut rho = M4::zeros();
    rho[(0, 0)] = c(1.0, 0.0);
    let dep = match noise {
        NoiseModel::Depolarizing { epc } => Some(BlockChannel::depolarizing(NoiseModel::depolarizing_lambda(*epc))),
        _ => None,
    };
    let clifford = |rho: M4, k: usize| -> M4 {
        match &dep {
            // gate-independent noise acts per Clifford, not per pulse
            Some(ch) => ch.apply(&conj(&compose2(&TwoQubitCliffords::decomposition(k)), &rho)),
            None => TwoQubitCliffords::decomposition(k).iter().fold(rho, |r, op| apply_op(&r, op, noise, None)),
        }
    };
    for &k in &seq.cliffords {
        rho = clifford(rho, k);
        if seq.interleaved {
            rho = match interleave {
                Some(g) => g.channel.apply(&rho),
                None => apply_op(&rho, &Op::Cx, noise, None),
            };
        }
    }
    clifford(rho, seq.recovery)
}

fn sequence_fidelity(rho: &M4, estimator: &Estimator, seed: u64, index: u64) -> Result<f64> {
    let p = PopulationVector { p: [0, 1, 2, 3].map(|k| rho[(k, k)].re) };
    match estimator {
        Estimator::Exact => Ok(p.p[0]),
        Estimator::Readout(model) => {
            let v = measure_all(&p, model, Some((seed ^ 0x5EAD_0000_0000_0000, index)));
            Ok(invert_population(&v, model)?.populations.p[0])
        }
    }
}

/// Randomized benchmarking: sequence fidelities at each length, averaged and
/// fitted to `A pᵐ + B` without constraints.
pub fn run_rb(cfg: &RbConfig) -> Result<RBResult> {
    if cfg.lengths.is_empty() || cfg.n_sequences == 0 {
        return Err(Error::Param("need at least one length and one sequence".into()));
    }
    if cfg.lengths.windows(2).any(|w| w[0] >= w[1]) || cfg.lengths[0] == 0 {
        return Err(Error::Param("lengths must be positive and strictly ascending".into()));
    }
    let ideal = cfg.interleave.as_ref().map(|g| g.ideal);
    let jobs: Vec<(usize, usize)> =
        (0..cfg.lengths.len()).flat_map(|i| (0..cfg.n_sequences).map(move |j| (i, j))).collect();
    let values = jobs
        .par_iter()
        .map(|&(i, j)| {
            let index = (i * cfg.n_sequences + j) as u64;
            let seq = generate_rb_sequence(cfg.lengths[i], ideal.as_ref(), rng::splitmix64(cfg.seed ^ index))?;
            let rho = simulate_sequence(&seq, &cfg.noise, cfg.interleave.as_ref());
            sequence_fidelity(&rho, &cfg.estimator, cfg.seed, index)
        })
        .collect::<Result<Vec<f64>>>()?;
    let raw: Vec<Vec<f64>> = values.chunks(cfg.n_sequences).map(|c| c.to_vec()).collect();
    let n = cfg.n_sequences as f64;
    let mean: Vec<f64> = raw.iter().map(|v| v.iter().sum::<f64>() / n).collect();
    let stderr: Vec<f64> = raw
        .iter()
        .zip(&mean)
        .map(|(v, m)| {
            if v.len() < 2 {
                return 0.0;
            }
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    let fit = fit_rb(&cfg.lengths, &mean, 0.25).map_err(|e| Error::Fit(format!("{e}; raw means {mean:?}")))?;
    Ok(RBResult {
        lengths: cfg.lengths.clone(),
        epc: epc_from_p(fit.p),
        epc_stderr: 0.75 * fit.p_stderr(),
        mean,
        stderr,
        raw,
        fit,
    })
}

fn model(x: &Vector3<f64>, m: f64) -> f64 {
    x[0] * x[1].powf(m) + x[2]
}

fn jac_row(x: &Vector3<f64>, m: f64) -> Vector3<f64> {
    let pm1 = if m == 0.0 { 0.0 } else { m * x[1].powf(m - 1.0) };
    Vector3::new(x[1].powf(m), x[0] * pm1, 1.0)
}

/// Levenberg-Marquardt fit of `A pᵐ + B`; `b_guess` seeds the offset.
pub fn fit_rb(lengths: &[usize], mean: &[f64], b_guess: f64) -> Result<RbFit> {
    if lengths.len() != mean.len() || lengths.len() < 3 {
        return Err(Error::Fit("need at least three points".into()));
    }
    let spread = mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - mean.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread < 1e-12 {
        // flat decay: no error per Clifford
        let b = mean.iter().sum::<f64>() / mean.len() as f64;
        return Ok(RbFit { a: 0.0, p: 1.0, b, covariance: [[0.0; 3]; 3] });
    }
    let ms: Vec<f64> = lengths.iter().map(|&m| m as f64).collect();
    // log-linear start on the points above the offset
    let pts: Vec<(f64, f64)> =
        ms.iter().zip(mean).filter(|(_, f)| **f - b_guess > 1e-9).map(|(m, f)| (*m, (f - b_guess).ln())).collect();
    let (a0, p0) = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let sxx = pts.iter().map(|(x, _)| x * x).sum::<f64>();
        let sxy = pts.iter().map(|(x, y)| x * y).sum::<f64>();
        let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        let icpt = (sy - slope * sx) / k;
        (icpt.exp(), slope.exp().clamp(1e-3, 1.0))
    } else {
        (mean[0] - b_guess, 0.9)
    };
    let mut x = Vector3::new(a0, p0, b_guess);
    let ssr = |x: &Vector3<f64>| ms.iter().zip(mean).map(|(&m, f)| (f - model(x, m)).powi(2)).sum::<f64>();
    let mut cost = ssr(&x);
    let mut mu = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&m, f) in ms.iter().zip(mean) {
            let j = jac_row(&x, m);
            jtj += j * j.transpose();
            jtr += j * (f - model(&x, m));
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj;
            for d in 0..3 {
                a[(d, d)] += mu * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                mu *= 10.0;
                continue;
            };
            let trial = x + step;
            let tc = ssr(&trial);
            if tc.is_finite() && tc <= cost {
                let rel = (cost - tc) / cost.max(1e-300);
                x = trial;
                cost = tc;
                mu = (mu / 3.0).max(1e-12);
                improved = rel > 1e-15 && step.norm() > 1e-14 * x.norm();
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !x.iter().all(|v| v.is_finite()) || !(0.0..=1.0 + 1e-9).contains(&x[1]) {
        return Err(Error::Fit(format!("decay parameter p = {} outside [0, 1]", x[1])));
    }
    let mut jtj = Matrix3::zeros();
    for &m in &ms {
        let j = jac_row(&x, m);
        jtj += j * j.transpose();
    }
    let dof = (ms.len() as f64 - 3.0).max(1.0);
    let cov = jtj.try_inverse().map(|inv| inv * (cost / dof)).unwrap_or_else(|| Matrix3::from_element(f64::NAN));
    let mut covariance = [[0.0; 3]; 3];
    for (r, row) in covariance.iter_mut().enumerate() {
        for (s, v) in row.iter_mut().enumerate() {
            *v = cov[(r, s)];
        }
    }
    Ok(RbFit { a: x[0], p: x[1].min(1.0), b: x[2], covariance })
}

/// Interleaved gate fidelity (1 − EPC_int) / (1 − EPC_ref). The same ratio
/// gives the idle fidelity when the interleaved gate is an idle.
pub fn irb_fidelity(reference: &RBResult, interleaved: &RBResult) -> f64 {
    irb_fidelity_from_epc(reference.epc, interleaved.epc)
}

pub fn irb_fidelity_from_epc(epc_ref: f64, epc_int: f64) -> f64 {
    (1.0 - epc_int) / (1.0 - epc_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::equal_up_to_phase;

    #[test]
    fn recovery_closes_sequence() {
        for seed in 0..5 {
            let s = generate_rb_sequence(7, Some(&cx_pi()), seed).unwrap();
            assert!(equal_up_to_phase(&compose2(&s.ops()), &M4::identity(), 1e-8));
            assert_eq!(s.ops().iter().filter(|o| **o == Op::Cx).count() >= 7, true);
        }
    }

    #[test]
    fn synthetic_decay_fit() {
        let ls: Vec<usize> = vec![1, 2, 4, 7, 10, 15, 20, 30, 40, 55, 70, 100];
        let f: Vec<f64> = ls.iter().map(|&m| 0.5 * 0.97f64.powi(m as i32) + 0.25).collect();
        let fit = fit_rb(&ls, &f, 0.3).unwrap();
        assert!((fit.p - 0.97).abs() < 1e-6);
        assert!((epc_from_p(fit.p) - 0.0225).abs() < 1e-6);
    }

    #[test]
    fn single_qubit_depolarizer_is_trace_preserving() {
        let mut rho = M4::zeros();
        rho[(0, 0)] = c(1.0, 0.0);
        let r = depolarize_one(&rho, 1.0, true);
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-12 && (r[(2, 2)].re - 0.5).abs() < 1e-12);
    }
}
