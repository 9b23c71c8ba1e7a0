//! Layered random-binning code: design, encoder and successive decoder.

use crate::bits::Bits;
use crate::hash::{bp_decode, symbol_width, BinTable, LinearHash, EXHAUSTIVE_LIMIT};
use crate::{Result, SimError};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secreg_core::region::{
    extend_with_auxiliaries, optimal_reconstruction, AuxScheme, DistortionMetric, ReconstructionMap,
};
use secreg_core::vars::{U, V, X, XT, Y, Z};
use secreg_core::{build_joint, JointPmf, SourceModel};

/// Bin rates in bits/symbol. `u_total` is the key slot plus the U-layer
/// message, `r0 + r_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRates {
    pub tilde_v: f64,
    pub v: f64,
    pub tilde_u: f64,
    pub u_total: f64,
    pub key: f64,
}

impl BinRates {
    /// Rates for slack `epsilon`, clamped at 0. A layer whose variable is
    /// already determined (constant `V`, or `U` a function of `V`) gets no bins.
    pub fn from_joint(full: &JointPmf<f64>, epsilon: f64, r0: f64) -> Result<Self> {
        let h_v_xt = full.conditional_entropy(&[V], &[XT])?;
        let i_v_xt = full.mutual_information(&[V], &[XT])?;
        let i_v_y = full.mutual_information(&[V], &[Y])?;
        let h_u_vxt = full.conditional_entropy(&[U], &[V, XT])?;
        let i_u_xt_v = full.conditional_mutual_information(&[U], &[XT], &[V])?;
        let i_u_y_v = full.conditional_mutual_information(&[U], &[Y], &[V])?;
        let v_live = full.entropy(&[V])? > 0.0;
        let u_live = full.conditional_entropy(&[U], &[V])? > 0.0;
        let live = |on: bool, r: f64| if on { r.max(0.0) } else { 0.0 };
        Ok(Self {
            tilde_v: live(v_live, h_v_xt - epsilon),
            v: live(v_live, i_v_xt - i_v_y + 2.0 * epsilon),
            tilde_u: live(u_live, h_u_vxt - epsilon),
            u_total: live(u_live, i_u_xt_v - i_u_y_v + 2.0 * epsilon),
            key: r0.max(0.0),
        })
    }
}

/// How the key enters the message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PadRegime {
    /// `W = (W_v, W_u, K + K_u)`.
    KeySlot,
    /// `K_u` dropped, `W_u` padded.
    PadU,
    /// Both `W_v` and `W_u` padded.
    PadBoth,
}

/// One binning layer: a hash whose output rows split into `F`, `W`, `K_u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub alphabet: usize,
    pub width: usize,
    pub f_bits: usize,
    pub w_bits: usize,
    pub k_bits: usize,
    pub hash: LinearHash,
    table: Option<BinTable>,
}

impl Layer {
    fn new(alphabet: usize, n: usize, f_bits: usize, w_bits: usize, k_bits: usize, rng: &mut ChaCha8Rng) -> Self {
        let width = symbol_width(alphabet);
        let exhaustive = (alphabet as f64).powi(n as i32) <= EXHAUSTIVE_LIMIT as f64;
        let hash = LinearHash::new(f_bits + w_bits + k_bits, n * width, !exhaustive, rng);
        let table = exhaustive.then(|| BinTable::build(&hash, alphabet, n));
        Self {
            alphabet,
            width,
            f_bits,
            w_bits,
            k_bits,
            hash,
            table,
        }
    }

    pub fn rows(&self) -> usize {
        self.f_bits + self.w_bits + self.k_bits
    }

    pub fn is_exhaustive(&self) -> bool {
        self.table.is_some()
    }

    fn bins(&self, seq: &[usize]) -> (Bits, Bits, Bits) {
        let h = self.hash.apply_symbols(seq, self.width);
        (
            h.slice(0, self.f_bits),
            h.slice(self.f_bits, self.w_bits),
            h.slice(self.f_bits + self.w_bits, self.k_bits),
        )
    }

    fn decode(&self, syndrome: &Bits, log_prior: &[Vec<f64>]) -> crate::hash::LayerDecode {
        match &self.table {
            Some(t) => t.decode(syndrome, log_prior),
            None => bp_decode(&self.hash, syndrome, log_prior, self.width),
        }
    }
}

/// The transmitted message. Padded coordinates hold index plus key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub f_v: Bits,
    pub w_v: Bits,
    pub f_u: Bits,
    pub w_u: Bits,
    pub key_slot: Bits,
}

impl Message {
    /// Bits sent over the public link, excluding the public randomness `F`.
    pub fn transmitted_bits(&self) -> usize {
        self.w_v.len() + self.w_u.len() + self.key_slot.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub message: Message,
    pub v: Vec<usize>,
    pub u: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub xhat: Vec<usize>,
    pub v: Vec<usize>,
    pub u: Vec<usize>,
    pub success: bool,
}

/// Single-letter quantities fixed at design time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerTargets {
    pub h_v_given_y: f64,
    pub h_u_given_vy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinningCode {
    pub n: usize,
    pub rates: BinRates,
    pub regime: PadRegime,
    pub key_bits: usize,
    pub v_layer: Layer,
    pub u_layer: Layer,
    pub reconstruction: ReconstructionMap,
    pub metric: DistortionMetric<f64>,
    pub targets: LayerTargets,
    pub seed: u64,
    pub(crate) sizes: (usize, usize, usize, usize),
    /// `P(v,u | x̃)`, indexed `[x̃][v * |U| + u]`.
    pub(crate) p_vu_given_xt: Vec<Vec<f64>>,
    log_p_v_given_y: Vec<Vec<f64>>,
    log_p_u_given_vy: Vec<Vec<f64>>,
}

/// `P(target | given)` as rows indexed by the `given` values in the listed
/// order (last fastest), with columns over `target` likewise. Rows of
/// zero-probability conditions are uniform.
pub(crate) fn conditional_law(full: &JointPmf<f64>, given: &[&str], target: &[&str]) -> Result<Vec<Vec<f64>>> {
    let names: Vec<&str> = given.iter().chain(target).copied().collect();
    let m = full.marginal(&names)?;
    let pos = names.iter().map(|n| m.axis_index(n)).collect::<secreg_core::Result<Vec<_>>>()?;
    let sizes = names.iter().map(|n| m.axis_size(n)).collect::<secreg_core::Result<Vec<_>>>()?;
    let ng: usize = sizes[..given.len()].iter().product();
    let nt: usize = sizes[given.len()..].iter().product();
    let mut idx = vec![0usize; names.len()];
    Ok((0..ng * nt)
        .map(|flat| {
            let mut r = flat;
            for k in (0..names.len()).rev() {
                idx[pos[k]] = r % sizes[k];
                r /= sizes[k];
            }
            m.entry(&idx)
        })
        .collect::<Vec<f64>>()
        .chunks(nt)
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|p| if s > 0.0 { p / s } else { 1.0 / nt as f64 }).collect()
        })
        .collect())
}

fn ceil_bits(n: usize, rate: f64) -> usize {
    let x = n as f64 * rate;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// Designs a code for the joint law over `(V, U, X̃, Y, ...)` with slack `epsilon`.
pub fn design_code(
    full: &JointPmf<f64>,
    reconstruction: ReconstructionMap,
    metric: DistortionMetric<f64>,
    n: usize,
    epsilon: f64,
    r0: f64,
    seed: u64,
) -> Result<BinningCode> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SimError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(r0 >= 0.0 && r0.is_finite()) {
        return Err(SimError::InvalidArgument(format!("key rate must be non-negative, got {r0}")));
    }
    let rates = BinRates::from_joint(full, epsilon, r0)?;
    design_code_with_rates(full, reconstruction, metric, n, rates, seed)
}

/// Designs a code from an auxiliary scheme, using its reconstruction map
/// or the optimal one.
pub fn design_from_scheme(
    model: &SourceModel<f64>,
    aux: &AuxScheme<f64>,
    metric: &DistortionMetric<f64>,
    n: usize,
    epsilon: f64,
    r0: f64,
    seed: u64,
) -> Result<BinningCode> {
    let full = extend_with_auxiliaries(&build_joint(model)?, aux)?;
    let map = match &aux.reconstruction {
        Some(m) => m.clone(),
        None => optimal_reconstruction(&full, metric)?.0,
    };
    let full = full.marginal(&[V, U, XT, X, Y, Z])?;
    design_code(&full, map, metric.clone(), n, epsilon, r0, seed)
}

/// Designs a code with explicit bin rates.
pub fn design_code_with_rates(
    full: &JointPmf<f64>,
    reconstruction: ReconstructionMap,
    metric: DistortionMetric<f64>,
    n: usize,
    rates: BinRates,
    seed: u64,
) -> Result<BinningCode> {
    if n == 0 {
        return Err(SimError::InvalidArgument("blocklength must be at least 1".into()));
    }
    for r in [rates.tilde_v, rates.v, rates.tilde_u, rates.u_total, rates.key] {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(SimError::InvalidArgument(format!("rates must be finite and non-negative: {rates:?}")));
        }
    }
    let nv = full.axis_size(V)?;
    let nu = full.axis_size(U)?;
    let nt = full.axis_size(XT)?;
    let ny = full.axis_size(Y)?;
    if reconstruction.u_size() != nu || reconstruction.y_size() != ny {
        return Err(SimError::InvalidArgument(format!(
            "reconstruction map is {}x{}, expected {nu}x{ny}",
            reconstruction.u_size(),
            reconstruction.y_size()
        )));
    }
    if metric.source_size() != nt {
        return Err(SimError::InvalidArgument(format!(
            "distortion metric covers {} source symbols, expected {nt}",
            metric.source_size()
        )));
    }
    if reconstruction.to_rows().iter().flatten().any(|&x| x >= metric.reconstruction_size()) {
        return Err(SimError::InvalidArgument("reconstruction symbol outside the metric".into()));
    }

    let p_vu_given_xt = conditional_law(full, &[XT], &[V, U])?;
    let log = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> { m.into_iter().map(|r| r.into_iter().map(f64::ln).collect()).collect() };
    let log_p_v_given_y = log(conditional_law(full, &[Y], &[V])?);
    let log_p_u_given_vy = log(conditional_law(full, &[V, Y], &[U])?);
    let targets = LayerTargets {
        h_v_given_y: full.conditional_entropy(&[V], &[Y])?,
        h_u_given_vy: full.conditional_entropy(&[U], &[V, Y])?,
    };

    let key_bits = ceil_bits(n, rates.key);
    let wv_full = ceil_bits(n, rates.v);
    let wu_full = ceil_bits(n, rates.u_total);
    let (regime, wu_bits, ku_bits) = if key_bits > 0 && key_bits >= wv_full + wu_full {
        (PadRegime::PadBoth, wu_full, 0)
    } else if key_bits > 0 && key_bits >= wu_full {
        (PadRegime::PadU, wu_full, 0)
    } else {
        (PadRegime::KeySlot, ceil_bits(n, (rates.u_total - rates.key).max(0.0)), key_bits)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v_layer = Layer::new(nv, n, ceil_bits(n, rates.tilde_v), wv_full, 0, &mut rng);
    let u_layer = Layer::new(nu, n, ceil_bits(n, rates.tilde_u), wu_bits, ku_bits, &mut rng);
    Ok(BinningCode {
        n,
        rates,
        regime,
        key_bits,
        v_layer,
        u_layer,
        reconstruction,
        metric,
        targets,
        seed,
        sizes: (nv, nu, nt, ny),
        p_vu_given_xt,
        log_p_v_given_y,
        log_p_u_given_vy,
    })
}

impl BinningCode {
    pub fn v_size(&self) -> usize {
        self.sizes.0
    }

    pub fn u_size(&self) -> usize {
        self.sizes.1
    }

    pub fn x_tilde_size(&self) -> usize {
        self.sizes.2
    }

    pub fn y_size(&self) -> usize {
        self.sizes.3
    }

    /// Key bits consumed by padding.
    pub fn key_bits_used(&self) -> usize {
        match self.regime {
            PadRegime::KeySlot => self.key_bits,
            PadRegime::PadU => self.u_layer.w_bits,
            PadRegime::PadBoth => self.v_layer.w_bits + self.u_layer.w_bits,
        }
    }

    /// Whether `W_v` and `W_u` are sent padded.
    pub fn padded(&self) -> (bool, bool) {
        match self.regime {
            PadRegime::KeySlot => (false, false),
            PadRegime::PadU => (false, true),
            PadRegime::PadBoth => (true, true),
        }
    }

    /// Transmitted bits per symbol.
    pub fn transmitted_rate(&self) -> f64 {
        (self.v_layer.w_bits + self.u_layer.w_bits + self.u_layer.k_bits) as f64 / self.n as f64
    }

    /// Decodability of the V and U layers at the realized index sizes.
    pub fn decodable(&self) -> (bool, bool) {
        let n = self.n as f64;
        let v = (self.v_layer.f_bits + self.v_layer.w_bits) as f64 / n;
        let u = self.u_layer.rows() as f64 / n;
        (
            v > self.targets.h_v_given_y || self.targets.h_v_given_y == 0.0,
            u > self.targets.h_u_given_vy || self.targets.h_u_given_vy == 0.0,
        )
    }

    fn check_key(&self, key: &Bits) -> Result<()> {
        if key.len() != self.key_bits {
            return Err(SimError::InvalidArgument(format!(
                "key has {} bits, code expects {}",
                key.len(),
                self.key_bits
            )));
        }
        Ok(())
    }

    /// Samples `(Vⁿ, Uⁿ)` per letter from `P(v,u | x̃)`.
    pub fn sample_aux(&self, xtilde: &[usize], rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Vec<usize>)> {
        let nu = self.u_size();
        let samplers = self
            .p_vu_given_xt
            .iter()
            .map(|row| WeightedIndex::new(row).map_err(|e| SimError::InvalidArgument(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let mut v = Vec::with_capacity(self.n);
        let mut u = Vec::with_capacity(self.n);
        for &x in xtilde {
            if x >= self.x_tilde_size() {
                return Err(SimError::InvalidArgument(format!("source symbol {x} out of range")));
            }
            let k = samplers[x].sample(rng);
            v.push(k / nu);
            u.push(k % nu);
        }
        Ok((v, u))
    }

    /// Message for given auxiliary sequences and key.
    pub fn message_for(&self, v: &[usize], u: &[usize], key: &Bits) -> Message {
        let (f_v, w_v, _) = self.v_layer.bins(v);
        let (f_u, w_u, k_u) = self.u_layer.bins(u);
        match self.regime {
            PadRegime::KeySlot => Message {
                f_v,
                w_v,
                f_u,
                w_u,
                key_slot: k_u.add_mod(key),
            },
            PadRegime::PadU => Message {
                f_v,
                w_v,
                f_u,
                w_u: w_u.add_mod(&key.prefix(self.u_layer.w_bits)),
                key_slot: Bits::zeros(0),
            },
            PadRegime::PadBoth => {
                let kv = key.prefix(self.v_layer.w_bits);
                let ku = key.slice(self.v_layer.w_bits, self.u_layer.w_bits);
                Message {
                    f_v,
                    w_v: w_v.add_mod(&kv),
                    f_u,
                    w_u: w_u.add_mod(&ku),
                    key_slot: Bits::zeros(0),
                }
            }
        }
    }

    pub fn encode(&self, xtilde: &[usize], key: &Bits, seed: u64) -> Result<Encoded> {
        if xtilde.len() != self.n {
            return Err(SimError::InvalidArgument(format!(
                "sequence length {} does not match blocklength {}",
                xtilde.len(),
                self.n
            )));
        }
        self.check_key(key)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, u) = self.sample_aux(xtilde, &mut rng)?;
        let message = self.message_for(&v, &u, key);
        Ok(Encoded { message, v, u })
    }

    pub fn decode(&self, y: &[usize], key: &Bits, message: &Message) -> Result<Decoded> {
        if y.len() != self.n {
            return Err(SimError::InvalidArgument(format!(
                "sequence length {} does not match blocklength {}",
                y.len(),
                self.n
            )));
        }
        if y.iter().any(|&s| s >= self.y_size()) {
            return Err(SimError::InvalidArgument("side-information symbol out of range".into()));
        }
        self.check_key(key)?;
        let (w_v, w_u, k_u) = match self.regime {
            PadRegime::KeySlot => (message.w_v.clone(), message.w_u.clone(), message.key_slot.sub_mod(key)),
            PadRegime::PadU => (
                message.w_v.clone(),
                message.w_u.sub_mod(&key.prefix(self.u_layer.w_bits)),
                Bits::zeros(0),
            ),
            PadRegime::PadBoth => (
                message.w_v.sub_mod(&key.prefix(self.v_layer.w_bits)),
                message.w_u.sub_mod(&key.slice(self.v_layer.w_bits, self.u_layer.w_bits)),
                Bits::zeros(0),
            ),
        };
        let prior_v: Vec<Vec<f64>> = y.iter().map(|&s| self.log_p_v_given_y[s].clone()).collect();
        let dv = self.v_layer.decode(&Bits::concat(&[&message.f_v, &w_v]), &prior_v);
        let ny = self.y_size();
        let prior_u: Vec<Vec<f64>> = dv
            .sequence
            .iter()
            .zip(y)
            .map(|(&v, &s)| self.log_p_u_given_vy[v * ny + s].clone())
            .collect();
        let du = self.u_layer.decode(&Bits::concat(&[&message.f_u, &w_u, &k_u]), &prior_u);
        let xhat = du.sequence.iter().zip(y).map(|(&u, &s)| self.reconstruction.get(u, s)).collect();
        Ok(Decoded {
            xhat,
            v: dv.sequence,
            u: du.sequence,
            success: dv.unique && du.unique,
        })
    }
}
