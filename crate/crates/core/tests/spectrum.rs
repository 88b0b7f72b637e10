use std::f64::consts::{PI, TAU};

use fluxcr::spectrum::{
    build_coupled_system, diagonalize_fluxonium, static_zz_scaling, CoupledParams, FluxoniumParams,
};
use proptest::prelude::*;

#[test]
fn eigen_residual_is_small() {
    for p in [FluxoniumParams::<f64>::qubit_a(), FluxoniumParams::qubit_b()] {
        let s = diagonalize_fluxonium(&p, 120).unwrap();
        assert!(s.residual < 1e-9, "residual {}", s.residual);
        assert!(s.convergence_flag);
    }
}

#[test]
fn parity_selection_at_half_flux() {
    let p = FluxoniumParams::new(1.18, 0.78, 4.03, PI);
    let s = diagonalize_fluxonium(&p, 120).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            if (i + j) % 2 == 0 {
                assert!(s.n_abs(i, j) < 1e-8, "<{i}|n|{j}> = {}", s.n_abs(i, j));
            }
        }
    }
}

#[test]
fn labels_are_identity_without_coupling() {
    let mut p = CoupledParams::<f64>::table1();
    p.j_c = 0.0;
    let sys = build_coupled_system(&p).unwrap();
    assert_eq!(sys.static_zz, 0.0);
    for i in 0..p.levels_per_qubit {
        for j in 0..p.levels_per_qubit {
            let k = sys.idx(i, j);
            assert_eq!(sys.labels[k], (i, j));
            assert!((sys.overlaps[k] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn static_zz_is_level_converged() {
    let p5 = CoupledParams::<f64>::table1();
    let mut p10 = p5;
    p10.levels_per_qubit = 10;
    let z5 = build_coupled_system(&p5).unwrap().static_zz;
    let z10 = build_coupled_system(&p10).unwrap().static_zz;
    assert!(((z10 - z5) / z10).abs() < 0.01, "{z5} vs {z10}");
}

#[test]
fn static_zz_is_quadratic_in_coupling() {
    let (full, half) = static_zz_scaling(&CoupledParams::<f64>::table1(), 0.5).unwrap();
    let r = full / half;
    assert!((3.5..=4.5).contains(&r), "ratio {r}");
}

#[test]
fn single_precision_tracks_double() {
    for (d, s) in [
        (FluxoniumParams::<f64>::qubit_a(), FluxoniumParams::<f32>::qubit_a()),
        (FluxoniumParams::qubit_b(), FluxoniumParams::qubit_b()),
    ] {
        let d = diagonalize_fluxonium(&d, 80).unwrap();
        let s = diagonalize_fluxonium(&s, 80).unwrap();
        assert!((d.freq(0, 1) - s.freq(0, 1) as f64).abs() < 1e-3);
        assert!((d.n_abs(1, 2) - s.n_abs(1, 2) as f64).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flux_reflection_symmetry(
        e_c in 0.8f64..1.5,
        e_l in 0.5f64..1.5,
        e_j in 3.0f64..5.0,
        f in 0.3f64..0.7,
    ) {
        let a = diagonalize_fluxonium(&FluxoniumParams::new(e_c, e_l, e_j, TAU * f), 120).unwrap();
        let b = diagonalize_fluxonium(&FluxoniumParams::new(e_c, e_l, e_j, TAU * (1.0 - f)), 120).unwrap();
        for k in 0..6 {
            prop_assert!((a.energies[k] - b.energies[k]).abs() < 1e-9);
        }
    }
}
