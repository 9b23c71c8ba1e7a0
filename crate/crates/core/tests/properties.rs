mod common;

use proptest::prelude::*;
use secreg_core::region::{extend_with_auxiliaries, markov_certificate};
use secreg_core::vars::*;
use secreg_core::{build_joint, Axis, JointPmf};

const TOL: f64 = 1e-9;

fn joint_strategy() -> impl Strategy<Value = JointPmf<f64>> {
    (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(a, b, c)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0), 6 => 0.0f64..1.0], a * b * c).prop_filter_map(
            "all-zero table",
            move |raw| {
                let s: f64 = raw.iter().sum();
                (s > 0.0).then(|| {
                    JointPmf::new(
                        vec![Axis::new("A", a), Axis::new("B", b), Axis::new("C", c)],
                        raw.into_iter().map(|x| x / s).collect(),
                    )
                    .unwrap()
                })
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chain_rule(j in joint_strategy()) {
        let lhs = j.mutual_information(&["A", "B"], &["C"]).unwrap();
        let rhs = j.mutual_information(&["A"], &["C"]).unwrap()
            + j.conditional_mutual_information(&["B"], &["C"], &["A"]).unwrap();
        prop_assert!((lhs - rhs).abs() <= TOL);
        let h = j.entropy(&["A", "B", "C"]).unwrap();
        let split = j.entropy(&["A"]).unwrap()
            + j.conditional_entropy(&["B"], &["A"]).unwrap()
            + j.conditional_entropy(&["C"], &["A", "B"]).unwrap();
        prop_assert!((h - split).abs() <= TOL);
    }

    #[test]
    fn non_negativity(j in joint_strategy()) {
        for v in [
            j.entropy(&["A"]).unwrap(),
            j.conditional_entropy(&["A"], &["B", "C"]).unwrap(),
            j.mutual_information(&["A"], &["B"]).unwrap(),
            j.conditional_mutual_information(&["A"], &["B"], &["C"]).unwrap(),
        ] {
            prop_assert!(v >= 0.0);
        }
    }

    #[test]
    fn marginals_stay_normalized(j in joint_strategy()) {
        for keep in [&["A"][..], &["B", "C"], &["C", "A"]] {
            prop_assert!((j.marginal(keep).unwrap().pmf_sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn data_processing_on_extended_joints(seed in any::<u64>(), ternary in any::<bool>()) {
        let mut rng = common::rng(seed);
        let n = if ternary { 3 } else { 2 };
        let model = common::random_model(&mut rng, n);
        let px = build_joint(&model).unwrap().marginal(&[X]).unwrap();
        for (a, b) in px.table().iter().zip(model.px().probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
        let aux = common::random_aux(&mut rng, n, 3, 2, 2);
        let full = extend_with_auxiliaries(&build_joint(&model).unwrap(), &aux).unwrap();
        let i_uy = full.mutual_information(&[U], &[Y]).unwrap();
        let i_ux = full.mutual_information(&[U], &[X]).unwrap();
        let i_uxt = full.mutual_information(&[U], &[XT]).unwrap();
        prop_assert!(i_uy <= i_ux + TOL && i_ux <= i_uxt + TOL);
        prop_assert!(full.mutual_information(&[V], &[Z]).unwrap() <= i_ux + TOL);
    }
}

#[test]
fn markov_certificates_for_random_schemes() {
    let mut rng = common::rng(8);
    for k in 0..100 {
        let n = 2 + k % 2;
        let model = common::random_model(&mut rng, n);
        let aux = common::random_aux(&mut rng, n, 1 + k % 4, 1 + k % 3, 1 + k % 2);
        let full = extend_with_auxiliaries(&build_joint(&model).unwrap(), &aux).unwrap();
        let c = markov_certificate(&full).unwrap();
        assert!(c.qv_through_u_xt <= TOL && c.u_through_xt <= TOL && c.qv_through_u <= TOL, "{c:?}");
        assert!((full.pmf_sum() - 1.0).abs() <= 1e-10);
    }
}
