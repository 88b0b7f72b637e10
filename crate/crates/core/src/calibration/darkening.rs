use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{basis_state, max_population, simulate_block, DriveConfig, StepControl};
use crate::error::{Error, Result};
use crate::gates::M2;
use crate::pulse::PulseEnvelope;
use crate::spectrum::DressedSystem;

/// Local amplitudes (ε_A, ε_B) per unit C for port ratio η = C′/C.
pub fn local_per_unit(crosstalk: &M2, eta: C64) -> [C64; 2] {
    [
        crosstalk[(0, 0)] + crosstalk[(0, 1)] * eta,
        crosstalk[(1, 0)] + crosstalk[(1, 1)] * eta,
    ]
}

/// ⟨to|n̂_α|from⟩ for both qubits.
fn elements(sys: &DressedSystem<f64>, to: (usize, usize), from: (usize, usize)) -> [C64; 2] {
    let (r, c) = (sys.idx(to.0, to.1), sys.idx(from.0, from.1));
    [sys.n_a_op[(r, c)], sys.n_b_op[(r, c)]]
}

/// Drive matrix element per unit C between two dressed states.
pub fn drive_element(
    sys: &DressedSystem<f64>,
    crosstalk: &M2,
    eta: C64,
    to: (usize, usize),
    from: (usize, usize),
) -> C64 {
    let e = local_per_unit(crosstalk, eta);
    let n = elements(sys, to, from);
    e[0] * n[0] + e[1] * n[1]
}

/// OFF-state element ⟨01|H_drive|00⟩ per unit C.
pub fn off_element(sys: &DressedSystem<f64>, crosstalk: &M2, eta: C64) -> C64 {
    drive_element(sys, crosstalk, eta, (0, 1), (0, 0))
}

/// ON-state element ⟨11|H_drive|10⟩ per unit C.
pub fn on_element(sys: &DressedSystem<f64>, crosstalk: &M2, eta: C64) -> C64 {
    drive_element(sys, crosstalk, eta, (1, 1), (1, 0))
}

/// η solving `α + β η = 0` for `α = X₀₀a + X₁₀b`, `β = X₀₁a + X₁₁b`.
fn linear_ratio(crosstalk: &M2, a: C64, b: C64) -> Result<C64> {
    let alpha = crosstalk[(0, 0)] * a + crosstalk[(1, 0)] * b;
    let beta = crosstalk[(0, 1)] * a + crosstalk[(1, 1)] * b;
    let scale = alpha.norm().max(a.norm()).max(b.norm());
    if beta.norm() <= 1e-14 * scale || scale == 0.0 {
        return Err(Error::Singular("port C′ cannot reach the target transition".into()));
    }
    Ok(-alpha / beta)
}

/// Ratio η that cancels the dressed OFF-state element.
pub fn darkening_root(sys: &DressedSystem<f64>, crosstalk: &M2) -> Result<C64> {
    let n = elements(sys, (0, 1), (0, 0));
    linear_ratio(crosstalk, n[0], n[1])
}

/// |⟨01|H|00⟩(η)| relative to the single-port value at η = 0.
pub fn darkening_residual(sys: &DressedSystem<f64>, crosstalk: &M2, eta: C64) -> f64 {
    let r = off_element(sys, crosstalk, C64::new(0.0, 0.0)).norm();
    if r == 0.0 {
        off_element(sys, crosstalk, eta).norm()
    } else {
        off_element(sys, crosstalk, eta).norm() / r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkeningResult {
    pub eta: C64,
    /// Root of the dressed matrix-element condition.
    pub linear_root: C64,
    /// Relative matrix-element residual at `eta`.
    pub residual: f64,
    /// Largest |01⟩ population reached from |00⟩ during the pulse.
    pub excursion: f64,
    /// Whether the dynamic refinement was needed.
    pub refined: bool,
    /// (|η| scan, arg η scan) of final |01⟩ population, when refined.
    pub scans: Option<(Vec<(f64, f64)>, Vec<(f64, f64)>)>,
}

pub struct DarkeningSetup<'a> {
    pub drive_freq: f64,
    /// Port amplitude C.
    pub amplitude: C64,
    pub envelope: &'a PulseEnvelope<f64>,
    pub crosstalk: &'a M2,
    /// Excursion above which the dynamic refinement runs.
    pub tolerance: f64,
    pub step: StepControl,
}

fn drive_for(setup: &DarkeningSetup, eta: C64) -> DriveConfig {
    let mut d = DriveConfig::new(
        setup.drive_freq,
        [setup.amplitude, setup.amplitude * eta],
        setup.envelope.clone(),
    );
    d.crosstalk = *setup.crosstalk;
    d
}

fn off_amplitude(sys: &DressedSystem<f64>, setup: &DarkeningSetup, eta: C64) -> Result<C64> {
    let d = drive_for(setup, eta);
    let t = d.end();
    let u = simulate_block(sys, &[d], t, setup.step)?;
    Ok(u[(1, 0)])
}

fn excursion(sys: &DressedSystem<f64>, setup: &DarkeningSetup, eta: C64) -> Result<f64> {
    let d = drive_for(setup, eta);
    let t = d.end();
    max_population(sys, &[d], &basis_state(sys, 0, 0), sys.idx(0, 1), t, setup.step)
}

/// Darkening ratio for the OFF state: the matrix-element root, refined
/// dynamically (scans over |η| and arg η, then a complex secant on the final
/// ⟨01|U|00⟩) when the simulated excursion exceeds the tolerance.
pub fn find_darkening_ratio(sys: &DressedSystem<f64>, setup: &DarkeningSetup) -> Result<DarkeningResult> {
    if setup.amplitude.norm() == 0.0 {
        return Err(Error::Param("darkening needs a nonzero amplitude".into()));
    }
    let root = darkening_root(sys, setup.crosstalk)?;
    let exc = excursion(sys, setup, root)?;
    if exc <= setup.tolerance {
        return Ok(DarkeningResult {
            eta: root,
            linear_root: root,
            residual: darkening_residual(sys, setup.crosstalk, root),
            excursion: exc,
            refined: false,
            scans: None,
        });
    }

    let pop = |eta: C64| off_amplitude(sys, setup, eta).map(|a| a.norm_sqr());
    let scan = |values: Vec<C64>| -> Result<(Vec<(f64, f64)>, C64)> {
        let mut out = Vec::with_capacity(values.len());
        let mut best = (f64::INFINITY, values[0]);
        for (k, &eta) in values.iter().enumerate() {
            let p = pop(eta)?;
            out.push((k as f64, p));
            if p < best.0 {
                best = (p, eta);
            }
        }
        Ok((out, best.1))
    };
    let mags: Vec<f64> = (-5..=5).map(|k| root.norm() * (1.0 + 0.01 * k as f64)).collect();
    let (mut mag_scan, best) = scan(mags.iter().map(|&m| C64::from_polar(m, root.arg())).collect())?;
    for (p, &m) in mag_scan.iter_mut().zip(&mags) {
        p.0 = m;
    }
    let args: Vec<f64> = (-5..=5).map(|k| best.arg() + 0.02 * k as f64).collect();
    let (mut arg_scan, best) = scan(args.iter().map(|&a| C64::from_polar(best.norm(), a)).collect())?;
    for (p, &a) in arg_scan.iter_mut().zip(&args) {
        p.0 = a;
    }
    let interior = |v: &[(f64, f64)]| {
        let k = (0..v.len()).min_by(|&i, &j| v[i].1.total_cmp(&v[j].1)).unwrap_or(0);
        k > 0 && k + 1 < v.len()
    };
    if !interior(&mag_scan) || !interior(&arg_scan) {
        return Err(Error::Calibration(format!(
            "darkening minimum not bracketed; |η| scan {mag_scan:?}, arg scan {arg_scan:?}"
        )));
    }

    // ⟨01|U|00⟩ is close to affine in η near the optimum
    let mut e0 = best;
    let mut a0 = off_amplitude(sys, setup, e0)?;
    let mut e1 = e0 * C64::new(1.0 + 1e-3, 0.0);
    let mut a1 = off_amplitude(sys, setup, e1)?;
    for _ in 0..20 {
        if a1.norm() < 1e-9 || (e1 - e0).norm() < 1e-12 * e1.norm() {
            break;
        }
        let slope = (a1 - a0) / (e1 - e0);
        if slope.norm() == 0.0 {
            break;
        }
        let e2 = e1 - a1 / slope;
        e0 = e1;
        a0 = a1;
        e1 = e2;
        a1 = off_amplitude(sys, setup, e1)?;
    }
    let eta = if a1.norm() <= a0.norm() { e1 } else { e0 };
    Ok(DarkeningResult {
        eta,
        linear_root: root,
        residual: darkening_residual(sys, setup.crosstalk, eta),
        excursion: excursion(sys, setup, eta)?,
        refined: true,
        scans: Some((mag_scan, arg_scan)),
    })
}

/// Ratio η′ for which the drive reaches B equally for both control states:
/// ⟨01|H|00⟩ = ⟨11|H|10⟩.
pub fn find_single_qubit_ratio(sys: &DressedSystem<f64>, crosstalk: &M2) -> Result<SingleQubitRatio> {
    let off = elements(sys, (0, 1), (0, 0));
    let on = elements(sys, (1, 1), (1, 0));
    let eta = linear_ratio(crosstalk, off[0] - on[0], off[1] - on[1])?;
    let m_off = off_element(sys, crosstalk, eta);
    let m_on = on_element(sys, crosstalk, eta);
    let residual = if m_off.norm() == 0.0 { f64::INFINITY } else { (m_off - m_on).norm() / m_off.norm() };
    Ok(SingleQubitRatio {
        eta,
        drive_freq: single_qubit_frequency(sys),
        residual,
        element: m_off,
    })
}

/// Midpoint of B's two conditional frequencies.
pub fn single_qubit_frequency(sys: &DressedSystem<f64>) -> f64 {
    let e = sys.dynamics_energies();
    let f0 = e[sys.idx(0, 1)] - e[sys.idx(0, 0)];
    let f1 = e[sys.idx(1, 1)] - e[sys.idx(1, 0)];
    0.5 * (f0 + f1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitRatio {
    pub eta: C64,
    /// Drive frequency: the midpoint of B's conditional frequencies.
    pub drive_freq: f64,
    /// |⟨01|H|00⟩ − ⟨11|H|10⟩| / |⟨01|H|00⟩|.
    pub residual: f64,
    /// ⟨01|H|00⟩ per unit C.
    pub element: C64,
}
