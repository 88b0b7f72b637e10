//! Two-qubit gate algebra on the computational block.
//!
//! Basis order is |00⟩, |01⟩, |10⟩, |11⟩ with the control A as the first
//! (most significant) label, so `kron(a, b)` applies `a` to A and `b` to B.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

const TAU: f64 = std::f64::consts::TAU;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
fn cis(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

pub fn kron(a: &M2, b: &M2) -> M4 {
    M4::from_fn(|r, s| a[(r / 2, s / 2)] * b[(r % 2, s % 2)])
}

pub fn pauli(k: usize) -> M2 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        0 => M2::new(o, z, z, o),
        1 => M2::new(z, o, o, z),
        2 => M2::new(z, -i, i, z),
        3 => M2::new(o, z, z, -o),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// exp(−i θ/2 (cos φ X + sin φ Y)).
pub fn rot_xy(theta: f64, phi: f64) -> M2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = cis(phi);
    M2::new(c(co, 0.0), c(0.0, -s) * e.conj(), c(0.0, -s) * e, c(co, 0.0))
}

pub fn rx(theta: f64) -> M2 {
    rot_xy(theta, 0.0)
}

pub fn ry(theta: f64) -> M2 {
    rot_xy(theta, std::f64::consts::FRAC_PI_2)
}

pub fn rz(theta: f64) -> M2 {
    M2::new(cis(-theta / 2.0), c(0.0, 0.0), c(0.0, 0.0), cis(theta / 2.0))
}

pub fn hadamard() -> M2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    M2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
}

pub fn on_a(u: &M2) -> M4 {
    kron(u, &M2::identity())
}

pub fn on_b(u: &M2) -> M4 {
    kron(&M2::identity(), u)
}

/// Controlled X_π: identity for A in |0⟩, −iX on B for A in |1⟩.
pub fn cx_pi() -> M4 {
    let mut m = M4::zeros();
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(0.0, -1.0);
    m[(3, 2)] = c(0.0, -1.0);
    m
}

pub fn cnot() -> M4 {
    let mut m = M4::zeros();
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// CNOT with B as control, from the native direction and Hadamards.
pub fn cnot_reversed() -> M4 {
    let hh = kron(&hadamard(), &hadamard());
    hh * cnot() * hh
}

/// Phase e^{iθ} on the A = 1 states.
pub fn z_a(theta: f64) -> M4 {
    M4::from_diagonal(&nalgebra::Vector4::new(c(1.0, 0.0), c(1.0, 0.0), cis(theta), cis(theta)))
}

/// Phase e^{iθ} on the B = 1 states.
pub fn z_b(theta: f64) -> M4 {
    M4::from_diagonal(&nalgebra::Vector4::new(c(1.0, 0.0), cis(theta), c(1.0, 0.0), cis(theta)))
}

/// The experimental cross-resonance gate: CX_π dressed by phases θ_A and θ_B.
pub fn cr_exp(theta_a: f64, theta_b: f64) -> M4 {
    let mut m = M4::zeros();
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = cis(theta_b);
    let off = c(0.0, -1.0) * cis(theta_a);
    m[(2, 3)] = off;
    m[(3, 2)] = off;
    m
}

/// Virtual-Z frame of the cross-resonance gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GateFrame {
    pub theta_a: f64,
    pub theta_b: f64,
}

impl GateFrame {
    pub fn new(theta_a: f64, theta_b: f64) -> Self {
        Self { theta_a: wrap(theta_a), theta_b: wrap(theta_b) }
    }
}

/// Reduce an angle to (−π, π].
pub fn wrap(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

/// Z^B(−θ_B/2) · U · Z^B(−θ_B/2) · Z^A(θ_B/2 − θ_A).
pub fn virtual_z_compose(u_exp: &M4, theta_a: f64, theta_b: f64) -> M4 {
    let zb = z_b(-theta_b / 2.0);
    zb * u_exp * zb * z_a(theta_b / 2.0 - theta_a)
}

/// Split the composed frame into the operators applied before and after the gate.
pub fn frame_operators(frame: GateFrame) -> (M4, M4) {
    let zb = z_b(-frame.theta_b / 2.0);
    (zb * z_a(frame.theta_b / 2.0 - frame.theta_a), zb)
}

/// Largest off-diagonal-block magnitude (the blocks being A = 0 and A = 1).
pub fn off_block_norm(u: &M4) -> f64 {
    let mut m = 0.0f64;
    for r in 0..4 {
        for s in 0..4 {
            if r / 2 != s / 2 {
                m = m.max(u[(r, s)].norm());
            }
        }
    }
    m
}

fn trace(m: &M4) -> C64 {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)] + m[(3, 3)]
}

/// Average gate fidelity of the (possibly non-unitary) block `m` against the
/// unitary `target`:
///
/// `F = (Tr(M M†) + |Tr(U† M)|²) / (d (d + 1))`, d = 4.
///
/// Leakage enters through `Tr(M M†) < d`: population lost from the block
/// counts as error.
pub fn average_gate_fidelity(m: &M4, target: &M4) -> f64 {
    let d = 4.0;
    let tmm = trace(&(m * m.adjoint())).re;
    let ov = trace(&(target.adjoint() * m)).norm_sqr();
    ((tmm + ov) / (d * (d + 1.0))).clamp(0.0, 1.0)
}

/// |Tr(U† M)|² / d² for a block operator.
pub fn process_fidelity_unitary(m: &M4, target: &M4) -> f64 {
    trace(&(target.adjoint() * m)).norm_sqr() / 16.0
}

/// Mean norm lost by the four computational columns.
pub fn leakage_from_block(m: &M4) -> f64 {
    let mut s = 0.0;
    for col in 0..4 {
        s += m.column(col).norm_squared();
    }
    (1.0 - s / 4.0).clamp(0.0, 1.0)
}

/// Multiply by a phase so the first entry (row-major) above `tol` is real positive.
pub fn canonical_phase4(u: &M4) -> M4 {
    for r in 0..4 {
        for s in 0..4 {
            let z = u[(r, s)];
            if z.norm() > 1e-9 {
                return u * (z.conj() / z.norm());
            }
        }
    }
    *u
}

pub fn canonical_phase2(u: &M2) -> M2 {
    for r in 0..2 {
        for s in 0..2 {
            let z = u[(r, s)];
            if z.norm() > 1e-9 {
                return u * (z.conj() / z.norm());
            }
        }
    }
    *u
}

/// Largest entry modulus.
pub fn max_abs(m: &M4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Equality up to a global phase.
pub fn equal_up_to_phase(a: &M4, b: &M4, tol: f64) -> bool {
    max_abs(&(canonical_phase4(a) - canonical_phase4(b))) < tol
}

/// A linear map on 4×4 block operators, stored by its action on the matrix units.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChannel {
    /// `out[i][j] = E(|i⟩⟨j|)` projected on the computational block.
    pub out: [[M4; 4]; 4],
}

impl BlockChannel {
    pub fn identity() -> Self {
        Self::from_unitary(&M4::identity())
    }

    pub fn from_unitary(u: &M4) -> Self {
        let mut out = [[M4::zeros(); 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = u.column(i) * u.column(j).adjoint();
            }
        }
        Self { out }
    }

    /// ρ ↦ (1 − λ) ρ + λ Tr(ρ) I/4.
    pub fn depolarizing(lambda: f64) -> Self {
        let mut ch = Self::identity();
        for i in 0..4 {
            for j in 0..4 {
                ch.out[i][j] *= c(1.0 - lambda, 0.0);
                if i == j {
                    ch.out[i][j] += M4::identity() * c(lambda / 4.0, 0.0);
                }
            }
        }
        ch
    }

    pub fn apply(&self, rho: &M4) -> M4 {
        let mut r = M4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                let v = rho[(i, j)];
                if v != c(0.0, 0.0) {
                    r += self.out[i][j] * v;
                }
            }
        }
        r
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &BlockChannel) -> Self {
        let mut out = [[M4::zeros(); 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = self.apply(&first.out[i][j]);
            }
        }
        Self { out }
    }

    /// Conjugate the channel by unitaries applied before and after.
    pub fn framed(&self, pre: &M4, post: &M4) -> Self {
        Self::from_unitary(post).compose(&self.compose(&Self::from_unitary(pre)))
    }

    /// Process (entanglement) fidelity against a unitary target.
    pub fn process_fidelity(&self, target: &M4) -> f64 {
        let mut s = c(0.0, 0.0);
        let ud = target.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                let m = ud * self.out[i][j] * target;
                s += m[(i, j)];
            }
        }
        s.re / 16.0
    }

    /// Mean trace retained by the computational basis states.
    pub fn survival(&self) -> f64 {
        (0..4).map(|i| trace(&self.out[i][i]).re).sum::<f64>() / 4.0
    }

    /// Average gate fidelity `(d F_pro + survival) / (d + 1)`.
    pub fn average_fidelity(&self, target: &M4) -> f64 {
        (4.0 * self.process_fidelity(target) + self.survival()) / 5.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cr_exp_composes_to_cx() {
        for &(a, b) in &[(0.3, -1.2), (2.0, 0.7), (-3.0, 3.0)] {
            let g = virtual_z_compose(&cr_exp(a, b), a, b);
            assert!(max_abs(&(g - cx_pi())) < 1e-12);
        }
    }

    #[test]
    fn theta_a_quarter_turn_gives_cnot() {
        let g = virtual_z_compose(&cx_pi(), -std::f64::consts::FRAC_PI_2, 0.0);
        assert!(max_abs(&(g - cnot())) < 1e-12);
    }

    #[test]
    fn channel_fidelity_matches_unitary_formula() {
        let u = kron(&rx(0.1), &rz(0.2)) * cx_pi();
        let ch = BlockChannel::from_unitary(&u);
        let a = ch.average_fidelity(&cx_pi());
        let b = average_gate_fidelity(&u, &cx_pi());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn frame_split_matches_compose() {
        let f = GateFrame::new(0.4, -0.9);
        let u = cr_exp(0.1, 0.2);
        let (pre, post) = frame_operators(f);
        assert!(max_abs(&(post * u * pre - virtual_z_compose(&u, f.theta_a, f.theta_b))) < 1e-12);
    }
}
