//! Channel orderings: stochastic degradedness by linear-programming
//! feasibility, and a randomized falsification test for the less-noisy
//! ordering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::joint::{Axis, JointPmf};
use crate::pmf::{Pmf, StochasticMatrix};
use crate::scalar::Real;

/// Outcome of the degradedness test of `Y` with respect to `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradednessCertificate<F> {
    pub feasible: bool,
    /// `T(y|z)` with `P_Y|X = P_Z|X T`, when feasible.
    pub witness: Option<StochasticMatrix<F>>,
    /// Largest absolute violation of `P_Z|X T = P_Y|X` by the witness; for an
    /// infeasible problem, the optimal phase-one infeasibility.
    pub residual: F,
}

/// Dense phase-one simplex for `A x = b, x >= 0` with `b >= 0`, using
/// Bland's rule. Returns the basic solution and the remaining artificial
/// mass (zero iff feasible).
fn phase_one<F: Real>(a: &[Vec<F>], b: &[F]) -> (Vec<F>, F) {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let cols = n + m;
    let pivot_tol = F::normalization_tol() * F::lit(10.0);
    // tableau rows: [A | I | b]
    let mut tab: Vec<Vec<F>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|k| if k == i { F::one() } else { F::zero() }));
            row.push(b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..cols).collect();
    // reduced costs of the artificial-sum objective
    let mut cost = vec![F::zero(); cols + 1];
    for row in &tab {
        for j in 0..n {
            cost[j] = cost[j] - row[j];
        }
        cost[cols] = cost[cols] - row[cols];
    }
    let max_pivots = 50 * (m + cols) + 100;
    for _ in 0..max_pivots {
        let Some(enter) = (0..cols).find(|&j| cost[j] < -pivot_tol) else {
            break;
        };
        let mut leave: Option<(usize, F)> = None;
        for (i, row) in tab.iter().enumerate() {
            if row[enter] > pivot_tol {
                let ratio = row[cols] / row[enter];
                let replace = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr || (ratio == lr && basis[i] < basis[li]),
                };
                if replace {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { break };
        let p = tab[r][enter];
        for v in tab[r].iter_mut() {
            *v = *v / p;
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != F::zero() {
                    for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                        *v = *v - f * pv;
                    }
                }
            }
        }
        let f = cost[enter];
        for (v, &pv) in cost.iter_mut().zip(&pivot_row) {
            *v = *v - f * pv;
        }
        basis[r] = enter;
    }
    let mut x = vec![F::zero(); n];
    let mut artificial = F::zero();
    for (i, &bi) in basis.iter().enumerate() {
        let v = tab[i][cols].max(F::zero());
        if bi < n {
            x[bi] = v;
        } else {
            artificial = artificial + v;
        }
    }
    (x, artificial)
}

/// Decides whether a channel `T: Z -> Y` with `P_Y|X = P_Z|X T` exists.
pub fn check_stochastic_degraded<F: Real>(
    p_y_given_x: &StochasticMatrix<F>,
    p_z_given_x: &StochasticMatrix<F>,
) -> Result<DegradednessCertificate<F>> {
    if p_y_given_x.inputs() != p_z_given_x.inputs() {
        return Err(Error::Dimension(format!(
            "channels have {} and {} inputs",
            p_y_given_x.inputs(),
            p_z_given_x.inputs()
        )));
    }
    let (nx, ny, nz) = (p_y_given_x.inputs(), p_y_given_x.outputs(), p_z_given_x.outputs());
    // variable T(y|z) at column z * ny + y
    let nvar = nz * ny;
    let mut a = Vec::with_capacity(nx * ny + nz);
    let mut b = Vec::with_capacity(nx * ny + nz);
    for x in 0..nx {
        for y in 0..ny {
            let mut row = vec![F::zero(); nvar];
            for z in 0..nz {
                row[z * ny + y] = p_z_given_x.get(x, z);
            }
            a.push(row);
            b.push(p_y_given_x.get(x, y));
        }
    }
    for z in 0..nz {
        let mut row = vec![F::zero(); nvar];
        for y in 0..ny {
            row[z * ny + y] = F::one();
        }
        a.push(row);
        b.push(F::one());
    }
    let (t, artificial) = phase_one(&a, &b);
    if artificial > F::identity_tol() {
        return Ok(DegradednessCertificate {
            feasible: false,
            witness: None,
            residual: artificial,
        });
    }
    let mut rows = Vec::with_capacity(nz);
    for z in 0..nz {
        let row = &t[z * ny..(z + 1) * ny];
        let s: F = row.iter().copied().sum();
        rows.push(row.iter().map(|&v| v / s).collect());
    }
    let witness = StochasticMatrix::from_rows(rows)?;
    let composed = p_z_given_x.compose(&witness)?;
    let residual = composed
        .max_abs_diff(p_y_given_x)
        .expect("shapes agree by construction");
    Ok(DegradednessCertificate {
        feasible: true,
        witness: Some(witness),
        residual,
    })
}

/// A distribution of `(L, X)` under which the decoder channel carries more
/// information about `L` than the eavesdropper channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LessNoisyWitness<F> {
    pub p_x: Pmf<F>,
    pub p_l_given_x: StochasticMatrix<F>,
    pub i_l_y: F,
    pub i_l_z: F,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LessNoisyVerdict<F> {
    Falsified(LessNoisyWitness<F>),
    /// No violating `L` was found. This is not a proof of the ordering
    /// unless `degraded` is set, in which case degradedness implies it.
    NotFalsified { degraded: bool },
}

fn info_through<F: Real>(
    px: &[F],
    pl: &StochasticMatrix<F>,
    ch: &StochasticMatrix<F>,
) -> Result<F> {
    let (nl, no) = (pl.outputs(), ch.outputs());
    let mut table = vec![F::zero(); nl * no];
    for (x, &p) in px.iter().enumerate() {
        for l in 0..nl {
            let w = p * pl.get(x, l);
            for o in 0..no {
                table[l * no + o] = table[l * no + o] + w * ch.get(x, o);
            }
        }
    }
    let j = JointPmf::new(vec![Axis::new("L", nl), Axis::new("O", no)], table)?;
    j.mutual_information(&["L"], &["O"])
}

fn try_witness<F: Real>(
    p_y: &StochasticMatrix<F>,
    p_z: &StochasticMatrix<F>,
    p_x: Pmf<F>,
    p_l_given_x: StochasticMatrix<F>,
) -> Result<Option<LessNoisyWitness<F>>> {
    let i_l_y = info_through(p_x.probs(), &p_l_given_x, p_y)?;
    let i_l_z = info_through(p_x.probs(), &p_l_given_x, p_z)?;
    Ok((i_l_y > i_l_z + F::identity_tol()).then_some(LessNoisyWitness {
        p_x,
        p_l_given_x,
        i_l_y,
        i_l_z,
    }))
}

fn dirichlet<F: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<F> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| F::lit(v / s)).collect()
}

/// Searches for `L - X - (Y, Z)` with `I(L;Y) > I(L;Z)`, which would show
/// that `Z` is not less noisy than `Y`. The deterministic candidate `L = X`
/// under a uniform input is tried first, then `trials` draws of
/// `(P_X, P_L|X)` with rows uniform on the simplex.
pub fn less_noisy_falsify<F: Real>(
    p_y_given_x: &StochasticMatrix<F>,
    p_z_given_x: &StochasticMatrix<F>,
    trials: usize,
    l_size: usize,
    seed: u64,
) -> Result<LessNoisyVerdict<F>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    if l_size < 2 {
        return Err(Error::InvalidArgument("|L| must be >= 2".into()));
    }
    let cert = check_stochastic_degraded(p_y_given_x, p_z_given_x)?;
    if cert.feasible {
        return Ok(LessNoisyVerdict::NotFalsified { degraded: true });
    }
    let nx = p_y_given_x.inputs();
    if l_size >= nx {
        let mut rows = vec![vec![F::zero(); l_size]; nx];
        for (x, row) in rows.iter_mut().enumerate() {
            row[x] = F::one();
        }
        let pl = StochasticMatrix::from_rows(rows)?;
        if let Some(w) = try_witness(p_y_given_x, p_z_given_x, Pmf::uniform(nx)?, pl)? {
            return Ok(LessNoisyVerdict::Falsified(w));
        }
    }
    let found = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<Option<LessNoisyWitness<F>>> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let px = Pmf::new(dirichlet(&mut rng, nx))?;
            let rows = (0..nx).map(|_| dirichlet(&mut rng, l_size)).collect();
            let pl = StochasticMatrix::from_rows(rows)?;
            try_witness(p_y_given_x, p_z_given_x, px, pl)
        })
        .find_first(|r| !matches!(r, Ok(None)));
    match found {
        Some(Ok(Some(w))) => Ok(LessNoisyVerdict::Falsified(w)),
        Some(Err(e)) => Err(e),
        _ => Ok(LessNoisyVerdict::NotFalsified { degraded: false }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> StochasticMatrix<f64> {
        StochasticMatrix::bsc(p).unwrap()
    }

    #[test]
    fn identical_channels_are_self_degraded() {
        let c = StochasticMatrix::from_rows(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let cert = check_stochastic_degraded(&c, &c).unwrap();
        assert!(cert.feasible);
        assert!(cert.residual <= 1e-8);
    }

    #[test]
    fn bsc_witness_is_the_crossover_difference() {
        let cert = check_stochastic_degraded(&bsc(0.3), &bsc(0.1)).unwrap();
        assert!(cert.feasible);
        let w = cert.witness.unwrap();
        assert!((w.get(0, 1) - 0.25).abs() < 1e-9 && (w.get(1, 0) - 0.25).abs() < 1e-9);
        assert!(cert.residual <= 1e-12);
    }

    #[test]
    fn cleaner_channel_is_not_degraded() {
        let cert = check_stochastic_degraded(&bsc(0.1), &bsc(0.3)).unwrap();
        assert!(!cert.feasible);
        assert!(cert.witness.is_none());
    }

    #[test]
    fn dimension_mismatch() {
        let c3 = StochasticMatrix::<f64>::identity(3);
        assert!(matches!(
            check_stochastic_degraded(&bsc(0.1), &c3),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn falsified_by_the_source_itself() {
        match less_noisy_falsify(&bsc(0.1), &bsc(0.3), 10, 3, 1).unwrap() {
            LessNoisyVerdict::Falsified(w) => {
                assert_eq!(w.p_x.probs(), &[0.5, 0.5]);
                assert!((w.i_l_y - 0.531_004_406_410_718_8).abs() < 1e-12);
                assert!((w.i_l_z - 0.118_709_100_769_307_3).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noiseless_eavesdropper_is_never_beaten() {
        let id = StochasticMatrix::<f64>::identity(2);
        let v = less_noisy_falsify(&bsc(0.2), &id, 200, 3, 9).unwrap();
        assert_eq!(v, LessNoisyVerdict::NotFalsified { degraded: true });
    }

    #[test]
    fn random_trials_find_non_degeneracy() {
        // ternary channels where neither is degraded and Y is better on some
        // inputs; only the random search detects it
        let y = StochasticMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ])
        .unwrap();
        let z = StochasticMatrix::from_rows(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let v = less_noisy_falsify(&y, &z, 200, 4, 3).unwrap();
        assert!(matches!(v, LessNoisyVerdict::Falsified(_)));
    }

    #[test]
    fn single_precision_lp() {
        let y = StochasticMatrix::<f32>::bsc(0.3).unwrap();
        let z = StochasticMatrix::<f32>::bsc(0.1).unwrap();
        let cert = check_stochastic_degraded(&y, &z).unwrap();
        assert!(cert.feasible);
        assert!((cert.witness.unwrap().get(0, 1) - 0.25).abs() < 1e-4);
    }
}
