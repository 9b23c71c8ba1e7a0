#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secreg_core::region::AuxScheme;
use secreg_core::{Pmf, SourceModel, StochasticMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row on the simplex, occasionally with exact zeros.
pub fn random_row(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                0.0
            } else {
                -rng.random::<f64>().max(1e-300).ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn random_channel(rng: &mut impl Rng, inputs: usize, outputs: usize) -> StochasticMatrix<f64> {
    StochasticMatrix::from_rows((0..inputs).map(|_| random_row(rng, outputs)).collect()).unwrap()
}

pub fn random_model(rng: &mut impl Rng, alphabet: usize) -> SourceModel<f64> {
    SourceModel::with_independent_channels(
        Pmf::new(random_row(rng, alphabet)).unwrap(),
        random_channel(rng, alphabet, alphabet),
        &random_channel(rng, alphabet, alphabet),
        &random_channel(rng, alphabet, alphabet),
    )
    .unwrap()
}

pub fn random_aux(rng: &mut impl Rng, nt: usize, nu: usize, nv: usize, nq: usize) -> AuxScheme<f64> {
    AuxScheme::new(
        random_channel(rng, nt, nu),
        random_channel(rng, nu, nv),
        random_channel(rng, nv, nq),
    )
    .unwrap()
}

pub fn binary_model() -> SourceModel<f64> {
    SourceModel::with_independent_channels(
        Pmf::uniform(2).unwrap(),
        StochasticMatrix::bsc(0.1).unwrap(),
        &StochasticMatrix::bsc(0.2).unwrap(),
        &StochasticMatrix::bsc(0.3).unwrap(),
    )
    .unwrap()
}
