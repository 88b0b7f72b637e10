use fluxcr::benchmarking::{
    channel_from_chi, chi_of_unitary, qpt, run_rb, two_qubit_cliffords, virtual_z_compose, Estimator, NoiseModel,
    RbConfig, TomographyReadout, M16,
};
use fluxcr::gates::{cr_exp, cx_pi, equal_up_to_phase, kron, on_a, rot_xy, rz, M4};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn random_unitary(a: [f64; 6]) -> M4 {
    let la = rz(a[0]) * rot_xy(a[1], a[2]);
    let lb = rot_xy(a[3], a[4]) * rz(a[5]);
    kron(&la, &lb) * cx_pi() * on_a(&rot_xy(a[2] + a[4], a[0]))
}

proptest! {
    #[test]
    fn virtual_z_inverts_cr_exp(theta_a in -10.0f64..10.0, theta_b in -10.0f64..10.0) {
        let u = virtual_z_compose(&cr_exp(theta_a, theta_b), theta_a, theta_b);
        prop_assert!(equal_up_to_phase(&u, &cx_pi(), 1e-12));
    }

    #[test]
    fn clifford_inverse_is_identity(i in 0usize..11520) {
        let g = two_qubit_cliffords();
        let u = g.unitary(i);
        let j = g.inverse_of(&u).unwrap();
        let id = g.find(&M4::identity()).unwrap();
        prop_assert_eq!(g.find(&(g.unitary(j) * u)), Some(id));
    }

    #[test]
    fn qpt_recovers_known_chi(
        a in prop::array::uniform6(-3.2f64..3.2),
        b in prop::array::uniform6(-3.2f64..3.2),
        w in 0.0f64..1.0,
    ) {
        let chi: M16 = chi_of_unitary(&random_unitary(a)) * C64::new(w, 0.0)
            + chi_of_unitary(&random_unitary(b)) * C64::new(1.0 - w, 0.0);
        let pm = qpt(&channel_from_chi(&chi), &TomographyReadout::Populations, &cx_pi()).unwrap();
        prop_assert!((pm.chi - chi).norm() < 1e-6);
    }
}

#[test]
fn random_products_close() {
    let g = two_qubit_cliffords();
    let mut x = 0x9e3779b97f4a7c15u64;
    for _ in 0..10_000 {
        x = fluxcr::rng::splitmix64(x);
        let (i, j) = ((x % 11520) as usize, ((x >> 32) % 11520) as usize);
        assert!(g.find(&(g.unitary(i) * g.unitary(j))).is_some());
    }
}

#[test]
fn depolarizing_rb_recovers_injected_epc() {
    for epc in [0.005, 0.02, 0.05] {
        let cfg = RbConfig {
            lengths: vec![1, 2, 4, 7, 10, 15, 20, 30, 40, 55, 70, 100],
            n_sequences: 10,
            seed: 3,
            noise: NoiseModel::Depolarizing { epc },
            estimator: Estimator::Exact,
            interleave: None,
        };
        let r = run_rb(&cfg).unwrap();
        assert!((r.epc - epc).abs() <= 3.0 * r.epc_stderr + 1e-9 * epc, "{epc}: {} +/- {}", r.epc, r.epc_stderr);
    }
}
