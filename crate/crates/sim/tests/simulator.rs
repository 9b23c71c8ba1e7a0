use secreg_core::region::{extend_with_auxiliaries, lossy_point, AuxScheme, DistortionMetric};
use secreg_core::vars::*;
use secreg_core::{build_joint, JointPmf, Pmf, SourceModel, StochasticMatrix};
use secreg_sim::{
    design_code, design_code_with_rates, design_from_scheme, exact_leakage, padded_index_check, run_experiment,
    BinRates, Bits, PadRegime,
};

fn binary_model() -> SourceModel<f64> {
    SourceModel::with_independent_channels(
        Pmf::uniform(2).unwrap(),
        StochasticMatrix::bsc(0.1).unwrap(),
        &StochasticMatrix::bsc(0.2).unwrap(),
        &StochasticMatrix::bsc(0.3).unwrap(),
    )
    .unwrap()
}

fn lossless_full(model: &SourceModel<f64>) -> JointPmf<f64> {
    let aux = AuxScheme::lossless(2, 2);
    extend_with_auxiliaries(&build_joint(model).unwrap(), &aux)
        .unwrap()
        .marginal(&[V, U, XT, X, Y, Z])
        .unwrap()
}

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

fn lossless_code(n: usize, eps: f64, r0: f64, seed: u64) -> secreg_sim::BinningCode {
    let h = DistortionMetric::hamming(2);
    design_from_scheme(&binary_model(), &AuxScheme::lossless(2, 2), &h, n, eps, r0, seed).unwrap()
}

#[test]
fn same_seed_gives_identical_code() {
    let a = lossless_code(40, 0.1, 0.2, 9);
    let b = lossless_code(40, 0.1, 0.2, 9);
    assert_eq!(a, b);
    let c = lossless_code(40, 0.1, 0.2, 10);
    assert_ne!(a.u_layer.hash, c.u_layer.hash);
}

#[test]
fn constant_v_gives_a_single_bin() {
    let code = lossless_code(20, 0.1, 0.0, 1);
    assert_eq!(code.rates.tilde_v, 0.0);
    assert_eq!(code.rates.v, 0.0);
    assert_eq!(code.v_layer.rows(), 0);
    assert_eq!(code.v_layer.width, 0);
}

#[test]
fn lossless_u_rate_is_conditional_entropy_plus_slack() {
    let code = lossless_code(50, 0.1, 0.0, 1);
    let h = h2(0.1 * 0.8 + 0.9 * 0.2);
    assert!((code.rates.u_total - (h + 0.2)).abs() < 1e-12);
    assert_eq!(code.regime, PadRegime::KeySlot);
    assert_eq!(code.u_layer.w_bits, (50.0 * (h + 0.2)).ceil() as usize);
    assert_eq!(code.key_bits, 0);
}

#[test]
fn pad_regimes_follow_key_rate() {
    let model = binary_model();
    let aux = AuxScheme::new(
        StochasticMatrix::identity(2),
        StochasticMatrix::bsc(0.2).unwrap(),
        StochasticMatrix::trivial(2),
    )
    .unwrap();
    let full = extend_with_auxiliaries(&build_joint(&model).unwrap(), &aux)
        .unwrap()
        .marginal(&[V, U, XT, X, Y, Z])
        .unwrap();
    let eps = 0.05;
    let rates = BinRates::from_joint(&full, eps, 0.0).unwrap();
    assert!(rates.v > 0.1 && rates.u_total > 0.1);
    let h = DistortionMetric::hamming(2);
    let design = |r0: f64| design_from_scheme(&model, &aux, &h, 40, eps, r0, 1).unwrap();
    assert_eq!(design(0.0).regime, PadRegime::KeySlot);
    assert_eq!(design(rates.u_total / 2.0).regime, PadRegime::KeySlot);
    let partial = design(rates.u_total + 0.01);
    assert_eq!(partial.regime, PadRegime::PadU);
    assert_eq!(partial.u_layer.k_bits, 0);
    let i_u_xt_y = full.conditional_mutual_information(&[U], &[XT], &[Y]).unwrap();
    assert!((rates.v + rates.u_total - (i_u_xt_y + 4.0 * eps)).abs() < 1e-12);
    assert_eq!(design(i_u_xt_y + 4.0 * eps + 0.01).regime, PadRegime::PadBoth);
}

#[test]
fn rate_bookkeeping() {
    let n = 60;
    let r0 = 0.3;
    let code = lossless_code(n, 0.1, r0, 2);
    let expect = code.rates.u_total.max(r0);
    assert!((code.transmitted_rate() - expect).abs() <= 2.0 / n as f64);
}

#[test]
fn trial_count_boundaries() {
    let code = lossless_code(10, 0.1, 0.0, 1);
    assert!(run_experiment(&code, &binary_model(), 0, 1).is_err());
    let r = run_experiment(&code, &binary_model(), 1, 1).unwrap();
    assert!(r.error_rate == 0.0 || r.error_rate == 1.0);
}

#[test]
fn noiseless_side_information_always_succeeds() {
    let model = SourceModel::with_independent_channels(
        Pmf::new(vec![0.3, 0.7]).unwrap(),
        StochasticMatrix::identity(2),
        &StochasticMatrix::identity(2),
        &StochasticMatrix::bsc(0.2).unwrap(),
    )
    .unwrap();
    let h = DistortionMetric::hamming(2);
    for n in [8, 100] {
        let code = design_from_scheme(&model, &AuxScheme::lossless(2, 2), &h, n, 0.1, 0.0, 3).unwrap();
        let r = run_experiment(&code, &model, 50, 4).unwrap();
        assert_eq!(r.error_rate, 0.0);
        assert_eq!(r.distortion, 0.0);
    }
}

#[test]
fn deterministic_aux_gives_deterministic_layers() {
    let code = lossless_code(16, 0.1, 0.0, 5);
    let xt: Vec<usize> = (0..16).map(|i| (i * 7 + 3) % 2).collect();
    let key = Bits::zeros(0);
    let a = code.encode(&xt, &key, 1).unwrap();
    let b = code.encode(&xt, &key, 2).unwrap();
    assert_eq!(a.u, xt);
    assert_eq!(a, b);
    assert!(code.encode(&xt[..15], &key, 1).is_err());
}

#[test]
fn full_pad_messages_differ_only_in_padded_coordinates() {
    let code = lossless_code(4, 0.05, 2.0, 6);
    assert_eq!(code.regime, PadRegime::PadBoth);
    let xt = vec![1, 0, 0, 1];
    let reference = code.encode(&xt, &Bits::zeros(code.key_bits), 7).unwrap().message;
    let cells = 1usize << code.u_layer.w_bits;
    let mut counts = vec![0usize; cells];
    for k in 0..(1u128 << code.key_bits) {
        let key = Bits::from_u128(k, code.key_bits);
        let m = code.encode(&xt, &key, 7).unwrap().message;
        assert_eq!((&m.f_v, &m.f_u, &m.key_slot), (&reference.f_v, &reference.f_u, &reference.key_slot));
        counts[m.w_u.to_u128().unwrap() as usize] += 1;
        let dec = code.decode(&[1, 0, 0, 1], &key, &m).unwrap();
        assert_eq!(dec.u, xt);
    }
    assert!(counts.iter().all(|&c| c == counts[0]));
}

#[test]
fn full_pad_indices_are_independent_of_the_source() {
    for seed in 0..4 {
        for r0 in [h2(0.26) + 0.2 + 0.01, 2.5] {
            let code = lossless_code(6, 0.05, r0, seed);
            assert_eq!(code.regime, PadRegime::PadBoth);
            let check = padded_index_check(&code, &binary_model()).unwrap();
            assert!(check.padded_bits > 0);
            assert!(check.mutual_information.abs() < 1e-12, "{check:?}");
            assert!(check.max_uniform_deviation < 1e-12, "{check:?}");
        }
    }
}

#[test]
fn key_slot_is_uniform_for_any_key_rate() {
    let code = lossless_code(6, 0.05, 0.4, 2);
    assert_eq!(code.regime, PadRegime::KeySlot);
    let check = padded_index_check(&code, &binary_model()).unwrap();
    assert_eq!(check.padded_bits, code.key_bits);
    assert!(check.mutual_information.abs() < 1e-12 && check.max_uniform_deviation < 1e-12);
}

#[test]
fn full_pad_leakage_is_zero() {
    let code = lossless_code(8, 0.05, 1.2, 3);
    let l = exact_leakage(&code, &binary_model()).unwrap().unwrap();
    assert_eq!((l.secrecy, l.privacy), (0.0, 0.0));
    let big = lossless_code(200, 0.05, 1.2, 3);
    let r = run_experiment(&big, &binary_model(), 20, 3).unwrap();
    assert_eq!((r.leakage_secrecy, r.leakage_privacy), (0.0, 0.0));
}

#[test]
fn exact_small_n_leakage_tracks_single_letter_targets() {
    let model = binary_model();
    let joint = build_joint(&model).unwrap();
    let full7 = extend_with_auxiliaries(&joint, &AuxScheme::lossless(2, 2)).unwrap();
    let target = lossy_point(&full7, 0.0, &DistortionMetric::hamming(2)).unwrap().bounds;
    let h_xt_z = joint.conditional_entropy(&[XT], &[Z]).unwrap();
    for n in [6, 8, 10, 12] {
        let code = lossless_code(n, 0.02, 0.0, 11);
        let l = exact_leakage(&code, &model).unwrap().unwrap();
        println!(
            "n = {n}: secrecy {:.4} (target {:.4}, gap {:+.4}), privacy {:.4} (target {:.4}, gap {:+.4})",
            l.secrecy,
            target.rs,
            l.secrecy - target.rs,
            l.privacy,
            target.rl,
            l.privacy - target.rl
        );
        assert!(l.secrecy <= target.rs + 0.1 && l.privacy <= target.rl + 0.1);
        assert!(l.secrecy <= h_xt_z + 1e-12);
        assert!(l.privacy <= l.secrecy + 1e-12);
    }
}

#[test]
fn reliable_at_n_400_and_unreliable_below_the_conditional_entropy() {
    let model = binary_model();
    let h = DistortionMetric::hamming(2);
    let code = lossless_code(400, 0.15, 0.0, 21);
    let r = run_experiment(&code, &model, 200, 22).unwrap();
    assert!(r.error_rate <= 0.05, "{r:?}");
    assert!(r.success_distortion.unwrap() <= 0.05);

    let full = lossless_full(&model);
    let h_xt_y = full.conditional_entropy(&[XT], &[Y]).unwrap();
    let rates = BinRates {
        tilde_v: 0.0,
        v: 0.0,
        tilde_u: 0.0,
        u_total: h_xt_y - 0.1,
        key: 0.0,
    };
    let map = secreg_core::region::ReconstructionMap::identity(2, 2);
    let low = design_code_with_rates(&full, map, h, 400, rates, 23).unwrap();
    assert_eq!(low.decodable(), (true, false));
    let r = run_experiment(&low, &model, 100, 24).unwrap();
    assert!(r.error_rate >= 0.5, "{r:?}");
}

#[test]
fn violated_v_layer_condition_fails_at_n_200() {
    let model = binary_model();
    let aux = AuxScheme::new(StochasticMatrix::identity(2), StochasticMatrix::identity(2), StochasticMatrix::trivial(2)).unwrap();
    let full = extend_with_auxiliaries(&build_joint(&model).unwrap(), &aux)
        .unwrap()
        .marginal(&[V, U, XT, X, Y, Z])
        .unwrap();
    let h_v_y = full.conditional_entropy(&[V], &[Y]).unwrap();
    let rates = BinRates {
        tilde_v: 0.0,
        v: h_v_y - 0.15,
        tilde_u: 0.0,
        u_total: 0.1,
        key: 0.0,
    };
    let map = secreg_core::region::ReconstructionMap::identity(2, 2);
    let code = design_code_with_rates(&full, map, DistortionMetric::hamming(2), 200, rates, 5).unwrap();
    assert!(!code.decodable().0);
    let r = run_experiment(&code, &model, 60, 6).unwrap();
    assert!(r.error_rate >= 0.9, "{r:?}");
}

#[test]
fn lossy_scheme_distortion_matches_single_letter_value() {
    let model = binary_model();
    let h = DistortionMetric::hamming(2);
    let aux = AuxScheme::u_only(StochasticMatrix::bsc(0.1).unwrap());
    let code = design_from_scheme(&model, &aux, &h, 400, 0.15, 0.0, 31).unwrap();
    let full7 = extend_with_auxiliaries(&build_joint(&model).unwrap(), &aux).unwrap();
    let single = lossy_point(&full7, 0.0, &h).unwrap().bounds.d;
    let r = run_experiment(&code, &model, 100, 32).unwrap();
    assert!(r.error_rate <= 0.05, "{r:?}");
    assert!(r.success_distortion.unwrap() <= single + 0.05, "{r:?} vs {single}");
}

#[test]
fn bp_regime_decodes_with_good_side_information() {
    let model = SourceModel::with_independent_channels(
        Pmf::uniform(2).unwrap(),
        StochasticMatrix::identity(2),
        &StochasticMatrix::bsc(0.03).unwrap(),
        &StochasticMatrix::bsc(0.3).unwrap(),
    )
    .unwrap();
    let h = DistortionMetric::hamming(2);
    let code = design_from_scheme(&model, &AuxScheme::lossless(2, 2), &h, 400, 0.15, 0.0, 41).unwrap();
    assert!(code.u_layer.rows() < 400 && !code.u_layer.is_exhaustive());
    let r = run_experiment(&code, &model, 100, 42).unwrap();
    assert!(r.error_rate <= 0.05, "{r:?}");
    assert_eq!(r.leakage_method, secreg_sim::LeakageMethod::PlugIn);
    assert!(r.leakage_secrecy > 0.0);
}

#[test]
fn design_rejects_bad_parameters() {
    let full = lossless_full(&binary_model());
    let map = || secreg_core::region::ReconstructionMap::identity(2, 2);
    let h = || DistortionMetric::hamming(2);
    assert!(design_code(&full, map(), h(), 10, 0.0, 0.0, 1).is_err());
    assert!(design_code(&full, map(), h(), 0, 0.1, 0.0, 1).is_err());
    assert!(design_code(&full, map(), h(), 10, 0.1, -1.0, 1).is_err());
    assert!(design_code(&full, secreg_core::region::ReconstructionMap::identity(3, 2), h(), 10, 0.1, 0.0, 1).is_err());
}
