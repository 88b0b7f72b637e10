use fluxcr::gates::{cx_pi, BlockChannel};
use fluxcr::readout::{
    calibrate_m, control_population, estimate_control_population, invert_population, measure_all, PopulationVector,
    ReadoutModel,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn simplex() -> impl Strategy<Value = PopulationVector<f64>> {
    prop::array::uniform4(0.0f64..1.0).prop_filter_map("non-zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-6).then(|| PopulationVector::new(w.map(|x| x / s)).unwrap())
    })
}

#[test]
fn ideal_entangler_recovers_population() {
    let model = ReadoutModel::synthetic();
    let cx = BlockChannel::from_unitary(&cx_pi());
    for e in [0.0, 0.01, 0.05] {
        let est = estimate_control_population(e, 0.02, &cx, &model, 16, None).unwrap();
        assert!((est.e_cd - e).abs() < 1e-12 && (est.e_ab - e).abs() < 1e-12, "{est:?}");
    }
}

#[test]
fn shot_noise_estimators_agree() {
    let mut model = ReadoutModel::synthetic();
    model.noise_sigma = 0.2;
    model.shots = 20000;
    let cx = BlockChannel::from_unitary(&cx_pi());
    let est = estimate_control_population(0.01, 0.02, &cx, &model, 16, Some(7)).unwrap();
    assert!((est.e_cd - est.e_ab).abs() < 0.004, "{est:?}");
    assert!((est.mean - 0.01).abs() < 0.002, "{est:?}");
}

proptest! {
    #[test]
    fn voltage_inversion_round_trip(p in simplex()) {
        let model = ReadoutModel::synthetic();
        let v = measure_all(&p, &model, None);
        let inv = invert_population(&v, &model).unwrap();
        for k in 0..4 {
            prop_assert!((inv.populations.p[k] - p.p[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn m_calibration_round_trip(e in 0.0f64..0.2, eps in 0.0f64..0.2) {
        let model = ReadoutModel::synthetic();
        let p = PopulationVector::product(e, eps);
        let m = calibrate_m(&p, &measure_all(&p, &model, None)).unwrap();
        for k in 0..4 {
            prop_assert!((m[k] - model.m[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn target_factor_cancels(
        c in prop::array::uniform4((-1.0f64..1.0, -1.0f64..1.0)),
        eps in 0.0f64..0.45,
    ) {
        let z = c.map(|(re, im)| C64::new(re, im));
        let base = control_population(z[0], z[1], z[2], z[3]);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let s = 1.0 - 2.0 * eps;
        let scaled = control_population(z[0] * s, z[1] * s, z[2] * s, z[3] * s).unwrap();
        prop_assert!((scaled.e_cd - base.e_cd).abs() <= 1e-12 * base.e_cd.abs().max(1.0));
        prop_assert!((scaled.e_ab - base.e_ab).abs() <= 1e-12 * base.e_ab.abs().max(1.0));
    }
}
