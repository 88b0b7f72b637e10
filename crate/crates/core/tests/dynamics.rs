use fluxcr::dynamics::{
    basis_state, propagate_lindblad, propagate_schrodinger, simulate_block, CoherenceSpec, DriveConfig, StepControl,
    States,
};
use fluxcr::gates::M2;
use fluxcr::pulse::{make_envelope, Shape};
use fluxcr::spectrum::{build_coupled_system, CoupledParams, DressedSystem};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn table1() -> DressedSystem<f64> {
    build_coupled_system(&CoupledParams::table1()).unwrap()
}

fn b_drive(sys: &DressedSystem<f64>, eps_b: f64, duration: f64) -> DriveConfig {
    let env = make_envelope(Shape::Square { duration }, 1.0).unwrap();
    let mut d = DriveConfig::new(sys.energy(0, 1), [C64::new(0.0, 0.0), C64::new(eps_b, 0.0)], env);
    d.crosstalk = M2::identity();
    d
}

fn cr_drive(sys: &DressedSystem<f64>) -> DriveConfig {
    let env = make_envelope(Shape::RoundedSquare { flat: 28.0, ramp: 6.0 }, 1.0).unwrap();
    let mut d = DriveConfig::new(sys.energy(1, 1) - sys.energy(1, 0), [C64::new(0.3, 0.0), C64::new(-0.1, 0.05)], env);
    d.crosstalk = M2::identity();
    d
}

fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm_sqr()
}

#[test]
fn step_halving_converges() {
    let sys = table1();
    let drives = [cr_drive(&sys)];
    let psi0 = basis_state(&sys, 1, 0);
    let run = |f: f64| match propagate_schrodinger(&sys, &drives, &psi0, &[40.0], StepControl::new(f)).unwrap().states {
        States::Pure(s) => s[0].clone(),
        _ => unreachable!(),
    };
    let (coarse, fine) = (run(0.05), run(0.025));
    assert!(1.0 - fidelity(&coarse, &fine) < 1e-9);
}

#[test]
fn lindblad_matches_schrodinger_without_decoherence() {
    let sys = table1();
    let drives = [cr_drive(&sys)];
    let psi0: Vec<C64> = basis_state(&sys, 1, 0)
        .iter()
        .zip(basis_state(&sys, 1, 1))
        .map(|(a, b)| (a + b) / 2f64.sqrt())
        .collect();
    let rho0 = DMatrix::from_fn(sys.dim, sys.dim, |r, c| psi0[r] * psi0[c].conj());
    let none = CoherenceSpec::default();
    let ctl = StepControl::default();
    let pure = match propagate_schrodinger(&sys, &drives, &psi0, &[40.0], ctl).unwrap().states {
        States::Pure(s) => s[0].clone(),
        _ => unreachable!(),
    };
    let rho = match propagate_lindblad(&sys, &drives, &rho0, &none, &[40.0], ctl).unwrap().states {
        States::Mixed(s) => s[0].clone(),
        _ => unreachable!(),
    };
    let mut f = C64::new(0.0, 0.0);
    for r in 0..sys.dim {
        for c in 0..sys.dim {
            f += pure[r].conj() * rho[(r, c)] * pure[c];
        }
    }
    assert!(f.re > 1.0 - 1e-7, "{}", f.re);
}

#[test]
fn small_drive_rabi_rate_is_linear() {
    let sys = table1();
    let n01 = sys.spectrum_b.n_abs(0, 1);
    let angle = |strength: f64| {
        let u = simulate_block(&sys, &[b_drive(&sys, strength / n01, 20.0)], 20.0, StepControl::default()).unwrap();
        2.0 * u[(1, 0)].norm().asin()
    };
    let base = angle(0.0025) / 0.0025;
    for s in [0.005, 0.01] {
        let a = angle(s);
        assert!(a < std::f64::consts::PI);
        assert!(((a / s) / base - 1.0).abs() < 0.01, "strength {s}: {}", (a / s) / base);
    }
}
