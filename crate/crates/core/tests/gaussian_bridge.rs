use secreg_core::gaussian::{gaussian_point, quantize, GaussianModel};
use secreg_core::region::{corollary_point, DistortionMetric};
use secreg_core::build_joint;

#[test]
fn quantized_rates_track_closed_form() {
    let m = GaussianModel::<f64>::new(0.9, 0.8, 0.95).unwrap();
    for alpha in [0.3, 0.5, 0.8] {
        let q = quantize(&m, alpha, 32).unwrap();
        let joint = build_joint(&q.model).unwrap();
        let metric = DistortionMetric::squared_error(&q.xtilde_points);
        let t = corollary_point(&joint, &q.p_u_given_xtilde, &metric).unwrap();
        let e = gaussian_point(&m, alpha).unwrap();
        for (got, want) in [(t.rw, e.rw), (t.rs, e.rs), (t.rl, e.rl)] {
            assert!((got - want).abs() < 0.05, "alpha {alpha}: {got} vs {want}");
        }
    }
}
