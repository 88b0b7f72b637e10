use fluxcr::pulse::{
    apply_reflection_channel, make_envelope, max_deviation, predistort, predistort_order, predistort_with_order, Echo,
    PulseEnvelope, ReflectionModel, Shape,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn random_envelope(v: &[(f64, f64)]) -> PulseEnvelope<f64> {
    PulseEnvelope::from_samples(v.iter().map(|&(re, im)| C64::new(re, im)).collect(), 1.0)
}

fn model_strategy() -> impl Strategy<Value = ReflectionModel<f64>> {
    prop::collection::btree_map(1usize..40, (0.0f64..0.5, -3.2f64..3.2), 1..=3).prop_map(|m| {
        ReflectionModel::new(
            m.into_iter().map(|(d, (r, ph))| Echo { delay: d as f64, amp: C64::from_polar(r, ph) }).collect(),
        )
        .unwrap()
    })
}

#[test]
fn envelope_examples() {
    let sq = make_envelope::<f64>(Shape::RoundedSquare { flat: 58.0, ramp: 6.0 }, 1.0).unwrap();
    assert!((sq.duration() - 70.0).abs() < 1e-12);
    let g = make_envelope(Shape::Gaussian { total: 16.0, sigma: 4.0 }, 1.0).unwrap();
    let n = g.len();
    for i in 0..n {
        assert!((g.samples[i] - g.samples[n - 1 - i]).norm() < 1e-12);
    }
    assert!(make_envelope(Shape::RoundedSquare { flat: 0.0, ramp: 0.0 }, 1.0).unwrap().is_empty());
}

#[test]
fn single_echo_copy() {
    let env = make_envelope(Shape::Square { duration: 10.0 }, 1.0).unwrap();
    let m = ReflectionModel::new(vec![Echo { delay: 20.0, amp: C64::new(0.35, 0.0) }]).unwrap();
    let out = apply_reflection_channel(&env, &m);
    assert_eq!(out.len(), 30);
    assert!((out.samples[5] - C64::new(1.0, 0.0)).norm() < 1e-15);
    assert!(out.samples[15].norm() < 1e-15);
    assert!((out.samples[25] - C64::new(0.35, 0.0)).norm() < 1e-15);
}

#[test]
fn two_echoes_superpose() {
    let env = make_envelope(Shape::Gaussian { total: 16.0, sigma: 4.0 }, 1.0).unwrap();
    let e1 = Echo { delay: 7.0, amp: C64::new(0.2, 0.1) };
    let e2 = Echo { delay: 19.0, amp: C64::new(-0.3, 0.05) };
    let both = apply_reflection_channel(&env, &ReflectionModel::new(vec![e1, e2]).unwrap());
    let a = apply_reflection_channel(&env, &ReflectionModel::new(vec![e1]).unwrap());
    let b = apply_reflection_channel(&env, &ReflectionModel::new(vec![e2]).unwrap());
    for i in 0..both.len() {
        let z = C64::new(0.0, 0.0);
        let x = a.samples.get(i).copied().unwrap_or(z) + b.samples.get(i).copied().unwrap_or(z)
            - env.samples.get(i).copied().unwrap_or(z);
        assert!((both.samples[i] - x).norm() < 1e-14);
    }
}

#[test]
fn geometric_truncation_bound() {
    let env = make_envelope(Shape::RoundedSquare { flat: 58.0, ramp: 6.0 }, 1.0).unwrap();
    let m = ReflectionModel::new(vec![Echo { delay: 20.0, amp: C64::new(0.35, 0.0) }]).unwrap();
    let pre = predistort_order(&env, &m, 7);
    let r = max_deviation(&apply_reflection_channel(&pre, &m), &env) / env.peak();
    assert!(r <= 0.35f64.powi(8) * (1.0 + 1e-9), "{r}");
    assert!(r <= 2.3e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_is_linear(
        x in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..60),
        y in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..60),
        alpha in (-2.0f64..2.0, -2.0f64..2.0),
        beta in (-2.0f64..2.0, -2.0f64..2.0),
        m in model_strategy(),
    ) {
        let (a, b) = (C64::new(alpha.0, alpha.1), C64::new(beta.0, beta.1));
        let n = x.len().max(y.len());
        let mut ex = random_envelope(&x);
        let mut ey = random_envelope(&y);
        ex.samples.resize(n, C64::new(0.0, 0.0));
        ey.samples.resize(n, C64::new(0.0, 0.0));
        let mix = PulseEnvelope::from_samples(ex.samples.iter().zip(&ey.samples).map(|(p, q)| a * p + b * q).collect(), 1.0);
        let lhs = apply_reflection_channel(&mix, &m);
        let (fx, fy) = (apply_reflection_channel(&ex, &m), apply_reflection_channel(&ey, &m));
        for i in 0..lhs.len() {
            prop_assert!((lhs.samples[i] - (a * fx.samples[i] + b * fy.samples[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn predistortion_round_trip(
        x in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..80),
        m in model_strategy(),
        tol in prop::sample::select(vec![1e-3, 1e-4, 1e-6]),
    ) {
        let env = random_envelope(&x);
        prop_assume!(env.peak() > 1e-3);
        let total: f64 = m.echoes.iter().map(|e| e.amp.norm()).sum();
        let (pre, order) = match predistort_with_order(&env, &m, tol) {
            Ok(r) => r,
            // the causal inverse need not converge once the echoes can add up past unity
            Err(fluxcr::Error::Divergence(_)) if total >= 1.0 => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
        };
        let dev = max_deviation(&apply_reflection_channel(&pre, &m), &env);
        prop_assert!(dev <= tol * env.peak() * (1.0 + 1e-9), "dev {dev}");
        let max_delay = m.echoes.iter().map(|e| e.delay as usize).max().unwrap();
        prop_assert_eq!(pre.len(), env.len() + order * max_delay);
        prop_assert_eq!(predistort(&env, &m, tol).unwrap(), pre);
    }
}
