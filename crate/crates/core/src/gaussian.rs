//! Scalar Gaussian model: `X̃ ~ N(0,1)`, `X = ρx X̃ + Nx`, `Y = ρy X + Ny`,
//! `Z = ρz X + Nz` with unit-variance marginals, and the jointly Gaussian
//! auxiliary `X̃ = U + Θ`, `U ~ N(0, 1-α)`, `Θ ~ N(0, α)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::pmf::{Pmf, StochasticMatrix};
use crate::region::RateTuple;
use crate::scalar::Real;
use crate::source::{Alphabets, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel<F> {
    pub rho_x: F,
    pub rho_y: F,
    pub rho_z: F,
}

impl<F: Real> GaussianModel<F> {
    pub fn new(rho_x: F, rho_y: F, rho_z: F) -> Result<Self> {
        for (name, r) in [("rho_x", rho_x), ("rho_y", rho_y), ("rho_z", rho_z)] {
            if r.is_nan() || r.abs() >= F::one() {
                return Err(Error::InvalidArgument(format!("{name} = {r} outside (-1, 1)")));
            }
        }
        Ok(Self { rho_x, rho_y, rho_z })
    }

    /// The region formulas need the eavesdropper channel to be the better one.
    pub fn check_ordering(&self) -> Result<()> {
        if self.rho_y.abs() >= self.rho_z.abs() {
            return Err(Error::InvalidArgument(format!(
                "need |rho_y| < |rho_z|, got {} and {}",
                self.rho_y, self.rho_z
            )));
        }
        Ok(())
    }
}

fn check_alpha<F: Real>(alpha: F) -> Result<()> {
    if !(alpha > F::zero() && alpha <= F::one()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    Ok(())
}

/// Closed-form rate tuple of the jointly Gaussian scheme with parameter `α`.
pub fn gaussian_point<F: Real>(model: &GaussianModel<F>, alpha: F) -> Result<RateTuple<F>> {
    check_alpha(alpha)?;
    model.check_ordering()?;
    let one = F::one();
    let half = F::lit(0.5);
    let (rx2, ry2, rz2) = (
        model.rho_x * model.rho_x,
        model.rho_y * model.rho_y,
        model.rho_z * model.rho_z,
    );
    let keep = one - alpha;
    let cy = one - rx2 * ry2 * keep;
    let cz = one - rx2 * rz2 * keep;
    let cx = one - rx2 * keep;
    let rw = half * (cy / alpha).log2();
    let rs = half * (cz / alpha).log2();
    let rl = half * (cz / cx).log2();
    let d = alpha * (one - rx2 * ry2) / cy;
    Ok(RateTuple {
        rw: rw.max(F::zero()),
        rs: rs.max(F::zero()),
        rl: rl.max(F::zero()),
        d,
    })
}

/// [`gaussian_point`] on every grid value, sorted by `α`.
pub fn gaussian_trace<F: Real>(
    model: &GaussianModel<F>,
    alphas: &[F],
) -> Result<Vec<(F, RateTuple<F>)>> {
    let mut sorted = alphas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted
        .into_iter()
        .map(|a| Ok((a, gaussian_point(model, a)?)))
        .collect()
}

/// Covariance of `(X̃, U, Y)`.
pub fn covariance_xt_u_y<F: Real>(model: &GaussianModel<F>, alpha: F) -> [[F; 3]; 3] {
    let keep = F::one() - alpha;
    let c = model.rho_x * model.rho_y;
    [
        [F::one(), keep, c],
        [keep, keep, c * keep],
        [c, c * keep, F::one()],
    ]
}

fn det3<F: Real>(m: &[[F; 3]; 3]) -> F {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Minimum mean squared error of `X̃` from `(U, Y)` as the determinant ratio
/// `det K_X̃UY / det K_UY`; falls back to `Y` alone when `U` is degenerate.
pub fn mmse_from_determinants<F: Real>(model: &GaussianModel<F>, alpha: F) -> Result<F> {
    check_alpha(alpha)?;
    let k = covariance_xt_u_y(model, alpha);
    let det_uy = k[1][1] * k[2][2] - k[1][2] * k[2][1];
    if det_uy <= F::derived_tol() {
        return Ok(F::one() - k[0][2] * k[0][2]);
    }
    Ok(det3(&k) / det_uy)
}

/// Linear MMSE coefficients `(a, b)` of `x̂ = a u + b y`.
fn lmmse_coefficients(model: &GaussianModel<f64>, alpha: f64) -> (f64, f64) {
    let k = covariance_xt_u_y(model, alpha);
    let det_uy = k[1][1] * k[2][2] - k[1][2] * k[2][1];
    if det_uy <= 1e-10 {
        return (0.0, k[0][2]);
    }
    let a = (k[0][1] * k[2][2] - k[0][2] * k[2][1]) / det_uy;
    let b = (k[0][2] * k[1][1] - k[0][1] * k[1][2]) / det_uy;
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseCheck<F> {
    pub empirical_d: F,
    pub analytic_d: F,
    /// Sample standard deviation of the squared errors.
    pub std_dev: F,
    pub samples: usize,
}

impl<F: Real> MmseCheck<F> {
    /// `std_dev / sqrt(samples)`.
    pub fn standard_error(&self) -> F {
        self.std_dev / F::from_usize(self.samples).unwrap().sqrt()
    }
}

const MC_BATCH: usize = 1 << 16;

/// Monte-Carlo estimate of the squared error of the linear MMSE estimator
/// of `X̃` from `(U, Y)`, against the closed form.
pub fn gaussian_mmse_check<F: Real>(
    model: &GaussianModel<F>,
    alpha: F,
    samples: usize,
    seed: u64,
) -> Result<MmseCheck<F>> {
    check_alpha(alpha)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let m = GaussianModel {
        rho_x: model.rho_x.as_f64(),
        rho_y: model.rho_y.as_f64(),
        rho_z: model.rho_z.as_f64(),
    };
    let a64 = alpha.as_f64();
    let (ca, cb) = lmmse_coefficients(&m, a64);
    let (su, st) = ((1.0 - a64).sqrt(), a64.sqrt());
    let sx = (1.0 - m.rho_x * m.rho_x).sqrt();
    let sy = (1.0 - m.rho_y * m.rho_y).sqrt();
    let batches = samples.div_ceil(MC_BATCH);
    let (sum, sum_sq) = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BATCH.min(samples - b * MC_BATCH);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                let g: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let u = su * g[0];
                let xt = u + st * g[1];
                let x = m.rho_x * xt + sx * g[2];
                let y = m.rho_y * x + sy * g[3];
                let e = xt - (ca * u + cb * y);
                s += e * e;
                s2 += e * e * e * e;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let analytic = {
        let rx2ry2 = m.rho_x * m.rho_x * m.rho_y * m.rho_y;
        a64 * (1.0 - rx2ry2) / (1.0 - rx2ry2 * (1.0 - a64))
    };
    Ok(MmseCheck {
        empirical_d: F::lit(mean),
        analytic_d: F::lit(analytic),
        std_dev: F::lit(var.sqrt()),
        samples,
    })
}

/// A finite-alphabet version of the Gaussian model and auxiliary.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedGaussian<F> {
    pub model: SourceModel<F>,
    pub p_u_given_xtilde: StochasticMatrix<F>,
    /// Bin representatives (conditional means) of `X̃`.
    pub xtilde_points: Vec<F>,
}

const TAIL: f64 = 4.0;
const OUTER: f64 = 9.0;
const PIECES: usize = 4;

/// Equal-probability bin edges of `N(0, σ²)` restricted to `±4σ`; the
/// outer bins absorb the tails.
fn quantile_edges(levels: usize, sigma: f64) -> Vec<f64> {
    let n = Normal::new(0.0, 1.0).unwrap();
    let (lo, hi) = (n.cdf(-TAIL), n.cdf(TAIL));
    let mut e = Vec::with_capacity(levels + 1);
    e.push(-OUTER * sigma);
    for k in 1..levels {
        let p = lo + (hi - lo) * k as f64 / levels as f64;
        e.push(sigma * n.inverse_cdf(p));
    }
    e.push(OUTER * sigma);
    e
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` by composite Gauss-Legendre.
fn integrate(a: f64, b: f64, rule: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / PIECES as f64;
    let mut s = 0.0;
    for k in 0..PIECES {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
        s += rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half;
    }
    s
}

/// `P(A ∈ bin i, B ∈ bin j)` for `A ~ N(0,1)`, `B | A = a ~ N(c a, s²)`,
/// normalized per row into `P(B-bin | A-bin)`. Also returns the row masses.
fn bin_channel(
    a_edges: &[f64],
    b_edges: &[f64],
    c: f64,
    s: f64,
    rule: &[(f64, f64)],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = Normal::new(0.0, 1.0).unwrap();
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let nb = b_edges.len() - 1;
    let mut masses = Vec::new();
    let mut rows = Vec::new();
    for w in a_edges.windows(2) {
        let row: Vec<f64> = (0..nb)
            .map(|j| {
                let lo = if j == 0 { f64::NEG_INFINITY } else { b_edges[j] };
                let hi = if j + 1 == nb { f64::INFINITY } else { b_edges[j + 1] };
                integrate(w[0], w[1], rule, |t| {
                    phi(t) * (n.cdf((hi - c * t) / s) - n.cdf((lo - c * t) / s))
                })
            })
            .collect();
        let mass: f64 = row.iter().sum();
        masses.push(mass);
        rows.push(row.into_iter().map(|p| p / mass).collect());
    }
    (masses, rows)
}

fn to_matrix<F: Real>(rows: Vec<Vec<f64>>) -> Result<StochasticMatrix<F>> {
    StochasticMatrix::from_rows(
        rows.into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|p| F::lit(p / s)).collect()
            })
            .collect(),
    )
}

/// Quantizes `X̃, X, Y, Z` to `levels` equal-probability bins each and the
/// auxiliary `U` (from `α < 1`) to `levels` bins of its own law. Bin
/// probabilities are integrated numerically; `(Y, Z)` are taken
/// conditionally independent given the quantized `X`.
pub fn quantize<F: Real>(
    model: &GaussianModel<F>,
    alpha: F,
    levels: usize,
) -> Result<QuantizedGaussian<F>> {
    check_alpha(alpha)?;
    if alpha >= F::one() {
        return Err(Error::InvalidArgument("quantization needs alpha < 1".into()));
    }
    if levels < 2 {
        return Err(Error::InvalidArgument("need at least 2 levels".into()));
    }
    let (rx, ry, rz, a) = (
        model.rho_x.as_f64(),
        model.rho_y.as_f64(),
        model.rho_z.as_f64(),
        alpha.as_f64(),
    );
    let rule = gauss_legendre(16);
    let unit = quantile_edges(levels, 1.0);
    let u_edges = quantile_edges(levels, (1.0 - a).sqrt());

    // X̃ -> X is the forward channel; the model stores its inverse.
    let (xt_mass, xt_to_x) = bin_channel(&unit, &unit, rx, (1.0 - rx * rx).sqrt(), &rule);
    let mut joint_xt_x = vec![vec![0.0; levels]; levels];
    for t in 0..levels {
        for x in 0..levels {
            joint_xt_x[t][x] = xt_mass[t] * xt_to_x[t][x];
        }
    }
    let x_mass: Vec<f64> = (0..levels).map(|x| (0..levels).map(|t| joint_xt_x[t][x]).sum()).collect();
    let x_total: f64 = x_mass.iter().sum();
    let p_xt_given_x: Vec<Vec<f64>> = (0..levels)
        .map(|x| (0..levels).map(|t| joint_xt_x[t][x] / x_mass[x]).collect())
        .collect();
    let (_, x_to_y) = bin_channel(&unit, &unit, ry, (1.0 - ry * ry).sqrt(), &rule);
    let (_, x_to_z) = bin_channel(&unit, &unit, rz, (1.0 - rz * rz).sqrt(), &rule);
    let (_, xt_to_u) = bin_channel(
        &unit,
        &u_edges,
        1.0 - a,
        (a * (1.0 - a)).sqrt(),
        &rule,
    );

    let px = Pmf::new(x_mass.iter().map(|&m| F::lit(m / x_total)).collect())?;
    let meas_enc = to_matrix(p_xt_given_x)?;
    let py = to_matrix::<F>(x_to_y)?;
    let pz = to_matrix::<F>(x_to_z)?;
    let label = |prefix: &str| (0..levels).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let mut model_q = SourceModel::with_independent_channels(px, meas_enc, &py, &pz)?;
    model_q = SourceModel::new(
        model_q.px().clone(),
        model_q.meas_enc().clone(),
        model_q.meas_dec_eve().clone(),
        Alphabets {
            x: label("x"),
            x_tilde: label("t"),
            y: label("y"),
            z: label("z"),
        },
    )?;

    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let xtilde_points = unit
        .windows(2)
        .zip(&xt_mass)
        .map(|(w, &m)| F::lit(integrate(w[0], w[1], &rule, |t| t * phi(t)) / m))
        .collect();
    Ok(QuantizedGaussian {
        model: model_q,
        p_u_given_xtilde: to_matrix(xt_to_u)?,
        xtilde_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> GaussianModel<f64> {
        GaussianModel::new(0.9, 0.8, 0.95).unwrap()
    }

    #[test]
    fn endpoint_alpha_one() {
        let t = gaussian_point(&model(), 1.0).unwrap();
        assert_eq!((t.rw, t.rs, t.rl), (0.0, 0.0, 0.0));
        assert!((t.d - (1.0 - 0.81 * 0.64)).abs() < 1e-15);
    }

    #[test]
    fn half_alpha_tuple() {
        let t = gaussian_point(&model(), 0.5).unwrap();
        assert!((t.rw - 0.283_578_001_855_393_4).abs() < 1e-12);
        assert!((t.rs - 0.171_831_823_505_466_66).abs() < 1e-12);
        assert!((t.rl - 0.046_351_036_738_857_24).abs() < 1e-12);
        assert!((t.d - 0.325_053_995_680_345_54).abs() < 1e-12);
    }

    #[test]
    fn determinant_route_agrees() {
        for a in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let d1 = gaussian_point(&model(), a).unwrap().d;
            let d2 = mmse_from_determinants(&model(), a).unwrap();
            assert!((d1 - d2).abs() < 1e-12, "alpha {a}");
        }
    }

    #[test]
    fn useless_side_information() {
        let m = GaussianModel::<f64>::new(0.9, 0.0, 0.5).unwrap();
        assert!((gaussian_point(&m, 0.3).unwrap().d - 0.3).abs() < 1e-15);
    }

    #[test]
    fn small_alpha_limit() {
        let t = gaussian_point(&model(), 1e-9).unwrap();
        assert!(t.d < 1e-8 && t.rw > 10.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gaussian_point(&model(), 0.0).is_err());
        assert!(gaussian_point(&model(), 1.5).is_err());
        let swapped = GaussianModel::new(0.9, 0.95, 0.8).unwrap();
        assert!(gaussian_point(&swapped, 0.5).is_err());
        assert!(GaussianModel::new(1.0, 0.1, 0.2).is_err());
    }

    #[test]
    fn trace_is_sorted() {
        let t = gaussian_trace(&model(), &[0.75, 0.25, 0.5]).unwrap();
        let alphas: Vec<f64> = t.iter().map(|p| p.0).collect();
        assert_eq!(alphas, vec![0.25, 0.5, 0.75]);
        assert!((t[0].1.d - 0.196_989_528_795_811_5).abs() < 1e-12);
        assert!((t[2].1.d - 0.414_981_617_647_058_8).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(16);
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn small_monte_carlo_is_close() {
        let c = gaussian_mmse_check(&model(), 0.5, 20_000, 5).unwrap();
        assert!((c.empirical_d - c.analytic_d).abs() < 5.0 * c.standard_error());
    }
}
