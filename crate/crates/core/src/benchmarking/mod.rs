//! Clifford groups, randomized benchmarking and process tomography.

mod clifford;
mod qpt;
mod rb;

pub use clifford::*;
pub use qpt::*;
pub use rb::*;

pub use crate::gates::{average_gate_fidelity, virtual_z_compose, GateFrame};

/// Incoherent error t_g / T_err with 1/T_err = (1/T₁A + 1/T₁B + 2/T₂EA + 2/T₂EB) / 5.
/// Coherence times in µs, gate time in ns; infinite times contribute nothing.
pub fn coherence_limit(t1_a: f64, t1_b: f64, t2e_a: f64, t2e_b: f64, gate_time: f64) -> crate::Result<f64> {
    for (name, v) in [("t1_a", t1_a), ("t1_b", t1_b), ("t2e_a", t2e_a), ("t2e_b", t2e_b)] {
        if !(v > 0.0) {
            return Err(crate::Error::Param(format!("{name} must be positive, got {v}")));
        }
    }
    if !(gate_time >= 0.0) || !gate_time.is_finite() {
        return Err(crate::Error::Param(format!("gate_time must be finite and >= 0, got {gate_time}")));
    }
    let rate = (1.0 / t1_a + 1.0 / t1_b + 2.0 / t2e_a + 2.0 / t2e_b) / 5.0;
    Ok(gate_time * 1e-3 * rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_limit_values() {
        let v = coherence_limit(56.0, 25.0, 23.0, 14.75, 70.0).unwrap();
        assert!((v - 3.9257e-3).abs() < 1e-6, "{v}");
        assert_eq!(coherence_limit(f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 70.0).unwrap(), 0.0);
        assert!(coherence_limit(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }
}
