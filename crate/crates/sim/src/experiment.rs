//! Monte Carlo experiments and leakage evaluation.

use crate::bits::Bits;
use crate::code::{conditional_law, BinningCode, PadRegime};
use crate::hash::index_to_sequence;
use crate::{Result, SimError};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use secreg_core::vars::{X, XT, Z};
use secreg_core::{build_joint, SourceModel};
use std::collections::HashMap;

/// Enumeration budget for exact leakage and pad checks.
pub const EXACT_BUDGET: f64 = (1u64 << 26) as f64;
/// Largest blocklength for which exact leakage is attempted.
pub const EXACT_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeakageMethod {
    Exact,
    PlugIn,
}

impl std::fmt::Display for LeakageMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LeakageMethod::Exact => "exact",
            LeakageMethod::PlugIn => "plug_in",
        })
    }
}

/// Per-symbol leakage of the unpadded message about `X̃ⁿ` and `Xⁿ` given `Zⁿ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leakage {
    pub secrecy: f64,
    pub privacy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub n: usize,
    pub trials: usize,
    /// Fraction of trials whose decoded `(Vⁿ, Uⁿ)` differs from the encoder's.
    pub error_rate: f64,
    /// Mean per-letter distortion over all trials.
    pub distortion: f64,
    /// Mean per-letter distortion over successful trials.
    pub success_distortion: Option<f64>,
    pub leakage_secrecy: f64,
    pub leakage_privacy: f64,
    pub leakage_method: LeakageMethod,
    pub key_rate_used: f64,
    pub transmitted_rate: f64,
    pub regime: PadRegime,
    pub decodable: (bool, bool),
}

struct Sampler {
    px: WeightedIndex<f64>,
    xt: Vec<WeightedIndex<f64>>,
    yz: Vec<WeightedIndex<f64>>,
    nz: usize,
}

impl Sampler {
    fn new(model: &SourceModel<f64>) -> Result<Self> {
        let w = |p: &[f64]| WeightedIndex::new(p).map_err(|e| SimError::InvalidArgument(e.to_string()));
        Ok(Self {
            px: w(model.px().probs())?,
            xt: model.meas_enc().rows().map(w).collect::<Result<_>>()?,
            yz: model.meas_dec_eve().rows().map(w).collect::<Result<_>>()?,
            nz: model.z_size(),
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (usize, usize, usize, usize) {
        let x = self.px.sample(rng);
        let t = self.xt[x].sample(rng);
        let yz = self.yz[x].sample(rng);
        (t, x, yz / self.nz, yz % self.nz)
    }
}

struct TrialOutcome {
    correct: bool,
    distortion: f64,
    vu: Vec<usize>,
    xt: Vec<usize>,
    x: Vec<usize>,
    z: Vec<usize>,
}

fn check_compatible(code: &BinningCode, model: &SourceModel<f64>) -> Result<()> {
    if model.x_tilde_size() != code.x_tilde_size() || model.y_size() != code.y_size() {
        return Err(SimError::InvalidArgument(format!(
            "model alphabets (|X̃|,|Y|) = ({},{}) do not match the code ({},{})",
            model.x_tilde_size(),
            model.y_size(),
            code.x_tilde_size(),
            code.y_size()
        )));
    }
    Ok(())
}

/// Runs `trials` independent encode/decode rounds.
pub fn run_experiment(code: &BinningCode, model: &SourceModel<f64>, trials: usize, seed: u64) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(SimError::InvalidArgument("trials must be at least 1".into()));
    }
    check_compatible(code, model)?;
    let sampler = Sampler::new(model)?;
    let nu = code.u_size();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<TrialOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let (mut xt, mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for _ in 0..code.n {
                let (a, b, c, d) = sampler.draw(&mut rng);
                xt.push(a);
                x.push(b);
                y.push(c);
                z.push(d);
            }
            let key = Bits::random(code.key_bits, &mut rng);
            let enc = code.encode(&xt, &key, rng.random())?;
            let dec = code.decode(&y, &key, &enc.message)?;
            let correct = dec.success && dec.v == enc.v && dec.u == enc.u;
            let distortion =
                xt.iter().zip(&dec.xhat).map(|(&a, &b)| code.metric.get(a, b)).sum::<f64>() / code.n as f64;
            let vu = dec.v.iter().zip(&dec.u).map(|(&v, &u)| v * nu + u).collect();
            Ok(TrialOutcome {
                correct,
                distortion,
                vu,
                xt,
                x,
                z,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let errors = outcomes.iter().filter(|o| !o.correct).count();
    let distortion = outcomes.iter().map(|o| o.distortion).sum::<f64>() / trials as f64;
    let ok: Vec<f64> = outcomes.iter().filter(|o| o.correct).map(|o| o.distortion).collect();
    let success_distortion = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);

    let (leak, method) = match exact_leakage(code, model)? {
        Some(l) => (l, LeakageMethod::Exact),
        None => (plug_in_leakage(code, &outcomes), LeakageMethod::PlugIn),
    };
    Ok(SimulationReport {
        n: code.n,
        trials,
        error_rate: errors as f64 / trials as f64,
        distortion,
        success_distortion,
        leakage_secrecy: leak.secrecy.max(0.0),
        leakage_privacy: leak.privacy.max(0.0),
        leakage_method: method,
        key_rate_used: code.key_bits_used() as f64 / code.n as f64,
        transmitted_rate: code.transmitted_rate(),
        regime: code.regime,
        decodable: code.decodable(),
    })
}

fn empirical_conditional_entropy(pairs: impl Iterator<Item = (usize, usize)>) -> f64 {
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut cond: HashMap<usize, f64> = HashMap::new();
    let mut total = 0.0;
    for (a, c) in pairs {
        *joint.entry((a, c)).or_default() += 1.0;
        *cond.entry(c).or_default() += 1.0;
        total += 1.0;
    }
    let h = |m: &mut dyn Iterator<Item = f64>| -> f64 {
        m.map(|k| {
            let p = k / total;
            -p * p.log2()
        })
        .sum()
    };
    h(&mut joint.values().copied()) - h(&mut cond.values().copied())
}

fn visible_bits(code: &BinningCode) -> usize {
    let (pv, pu) = code.padded();
    let v = &code.v_layer;
    let u = &code.u_layer;
    v.f_bits + if pv { 0 } else { v.w_bits } + u.f_bits + if pu { 0 } else { u.w_bits }
}

/// Plug-in estimate: the unpadded message is a hash of `b` bits/symbol of
/// `(Vⁿ, Uⁿ)`, so its conditional entropy is approximated by
/// `min(b, Ĥ(VU | ·))` from empirical frequencies of the decoded layers.
fn plug_in_leakage(code: &BinningCode, outcomes: &[TrialOutcome]) -> Leakage {
    let b = visible_bits(code) as f64 / code.n as f64;
    if b == 0.0 {
        return Leakage {
            secrecy: 0.0,
            privacy: 0.0,
        };
    }
    let pairs = |side: fn(&TrialOutcome) -> &Vec<usize>| {
        outcomes
            .iter()
            .flat_map(move |o| o.vu.iter().copied().zip(side(o).iter().copied()))
    };
    let h_z = empirical_conditional_entropy(pairs(|o| &o.z)).min(b);
    let h_xt = empirical_conditional_entropy(pairs(|o| &o.xt)).min(b);
    let h_x = empirical_conditional_entropy(pairs(|o| &o.x)).min(b);
    Leakage {
        secrecy: (h_z - h_xt).max(0.0),
        privacy: (h_z - h_x).max(0.0),
    }
}

/// Per-position contribution of `(v,u)` to the unpadded public message.
fn visible_contributions(code: &BinningCode) -> Option<Vec<Vec<u128>>> {
    let bits = visible_bits(code);
    if bits > 128 {
        return None;
    }
    let (pv, pu) = code.padded();
    let v = &code.v_layer;
    let u = &code.u_layer;
    let v_keep = v.f_bits + if pv { 0 } else { v.w_bits };
    let u_keep = u.f_bits + if pu { 0 } else { u.w_bits };
    let nv = code.v_size();
    let nu = code.u_size();
    Some(
        (0..code.n)
            .map(|i| {
                (0..nv * nu)
                    .map(|k| {
                        let cv = v.hash.symbol_contribution(i, k / nu, v.width).prefix(v_keep);
                        let cu = u.hash.symbol_contribution(i, k % nu, u.width).prefix(u_keep);
                        Bits::concat(&[&cv, &cu]).to_u128().expect("at most 128 bits")
                    })
                    .collect()
            })
            .collect(),
    )
}

fn entropy_of(map: &HashMap<u128, f64>) -> f64 {
    map.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// `H(M | Cⁿ)` for i.i.d. `C` with law `pc` and `P(vu | c)` given by `cond`.
fn conditional_message_entropy(contrib: &[Vec<u128>], pc: &[f64], cond: &[Vec<f64>]) -> f64 {
    let supports: Vec<Vec<(usize, f64)>> = cond
        .iter()
        .map(|row| row.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect())
        .collect();
    fn recurse(
        i: usize,
        weight: f64,
        dist: HashMap<u128, f64>,
        contrib: &[Vec<u128>],
        pc: &[f64],
        supports: &[Vec<(usize, f64)>],
    ) -> f64 {
        if i == contrib.len() {
            return weight * entropy_of(&dist);
        }
        let step = |c: usize| -> f64 {
            if pc[c] == 0.0 {
                return 0.0;
            }
            let mut next: HashMap<u128, f64> = HashMap::with_capacity(dist.len() * supports[c].len());
            for (&m, &p) in &dist {
                for &(k, q) in &supports[c] {
                    *next.entry(m ^ contrib[i][k]).or_default() += p * q;
                }
            }
            recurse(i + 1, weight * pc[c], next, contrib, pc, supports)
        };
        if i < 4 {
            (0..pc.len()).into_par_iter().map(step).sum()
        } else {
            (0..pc.len()).map(step).sum()
        }
    }
    let mut start = HashMap::new();
    start.insert(0u128, 1.0);
    recurse(0, 1.0, start, contrib, pc, &supports)
}

fn enumeration_cost(pc: &[f64], cond: &[Vec<f64>], n: usize) -> f64 {
    let s: f64 = pc
        .iter()
        .zip(cond)
        .filter(|(&p, _)| p > 0.0)
        .map(|(_, row)| row.iter().filter(|&&p| p > 0.0).count() as f64)
        .sum();
    s.powi(n as i32)
}

/// `P(vu | c)` for a conditioning variable `c` of the source.
fn vu_given(code: &BinningCode, p_xt_given_c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = code.v_size() * code.u_size();
    p_xt_given_c
        .iter()
        .map(|row| {
            (0..m)
                .map(|k| row.iter().zip(&code.p_vu_given_xt).map(|(&pt, vu)| pt * vu[k]).sum())
                .collect()
        })
        .collect()
}

/// Marginal of `c` and `P(x̃ | c)` from the source joint.
fn side_law(model: &SourceModel<f64>, c: &str) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let joint = build_joint(model)?;
    let pc = conditional_law(&joint, &[], &[c])?.remove(0);
    Ok((pc, conditional_law(&joint, &[c], &[XT])?))
}

/// Exact per-symbol leakage by enumeration, or `None` when the code is too
/// large to enumerate.
pub fn exact_leakage(code: &BinningCode, model: &SourceModel<f64>) -> Result<Option<Leakage>> {
    check_compatible(code, model)?;
    if visible_bits(code) == 0 {
        return Ok(Some(Leakage {
            secrecy: 0.0,
            privacy: 0.0,
        }));
    }
    if code.n > EXACT_MAX_N {
        return Ok(None);
    }
    let Some(contrib) = visible_contributions(code) else {
        return Ok(None);
    };
    let nt = code.x_tilde_size();
    let (pz, xt_z) = side_law(model, Z)?;
    let (px, xt_x) = side_law(model, X)?;
    let pt: Vec<f64> = (0..nt).map(|t| pz.iter().zip(&xt_z).map(|(&p, row)| p * row[t]).sum()).collect();
    let point: Vec<Vec<f64>> = (0..nt).map(|t| (0..nt).map(|s| f64::from(u8::from(s == t))).collect()).collect();
    let laws = [(pz, vu_given(code, &xt_z)), (pt, vu_given(code, &point)), (px, vu_given(code, &xt_x))];
    if laws.iter().any(|(p, c)| enumeration_cost(p, c, code.n) > EXACT_BUDGET) {
        return Ok(None);
    }
    let [h_z, h_t, h_x] = laws.map(|(p, c)| conditional_message_entropy(&contrib, &p, &c));
    let n = code.n as f64;
    Ok(Some(Leakage {
        secrecy: ((h_z - h_t) / n).max(0.0),
        privacy: ((h_z - h_x) / n).max(0.0),
    }))
}

/// Exact law of the padded coordinates over all keys and encoder randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadCheck {
    pub padded_bits: usize,
    /// `I(X̃ⁿ; padded coordinates)` in bits.
    pub mutual_information: f64,
    /// Largest deviation of `P(padded | x̃ⁿ)` from uniform.
    pub max_uniform_deviation: f64,
}

fn padded_part(code: &BinningCode, m: &crate::code::Message) -> Bits {
    match code.regime {
        PadRegime::KeySlot => m.key_slot.clone(),
        PadRegime::PadU => m.w_u.clone(),
        PadRegime::PadBoth => Bits::concat(&[&m.w_v, &m.w_u]),
    }
}

/// Enumerates every `x̃ⁿ`, key and auxiliary sequence pair.
pub fn padded_index_check(code: &BinningCode, model: &SourceModel<f64>) -> Result<PadCheck> {
    check_compatible(code, model)?;
    let nt = code.x_tilde_size();
    let nu = code.u_size();
    let n = code.n;
    let support: Vec<Vec<(usize, f64)>> = code
        .p_vu_given_xt
        .iter()
        .map(|row| row.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect())
        .collect();
    let max_support = support.iter().map(Vec::len).max().unwrap_or(1) as f64;
    let cost = (nt as f64).powi(n as i32) * 2f64.powi(code.key_bits as i32) * max_support.powi(n as i32);
    let padded_bits = code.key_bits_used();
    if cost > EXACT_BUDGET || padded_bits > 64 {
        return Err(SimError::TooCostly(format!("pad enumeration needs {cost:.3e} evaluations")));
    }
    let pt = conditional_law(&build_joint(model)?, &[], &[XT])?.remove(0);
    let per_x: Vec<(f64, HashMap<u128, f64>)> = (0..nt.pow(n as u32))
        .into_par_iter()
        .map(|idx| {
            let xt = index_to_sequence(idx, nt, n);
            let px: f64 = xt.iter().map(|&t| pt[t]).product();
            let mut dist: HashMap<u128, f64> = HashMap::new();
            let mut stack: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), 1.0)];
            while let Some((prefix, p)) = stack.pop() {
                if prefix.len() == n {
                    let v: Vec<usize> = prefix.iter().map(|k| k / nu).collect();
                    let u: Vec<usize> = prefix.iter().map(|k| k % nu).collect();
                    let share = p / 2f64.powi(code.key_bits as i32);
                    for key in 0..(1u128 << code.key_bits) {
                        let msg = code.message_for(&v, &u, &Bits::from_u128(key, code.key_bits));
                        let val = padded_part(code, &msg).to_u128().expect("at most 64 bits");
                        *dist.entry(val).or_default() += share;
                    }
                    continue;
                }
                for &(k, q) in &support[xt[prefix.len()]] {
                    let mut next = prefix.clone();
                    next.push(k);
                    stack.push((next, p * q));
                }
            }
            (px, dist)
        })
        .collect();
    let cells = 2f64.powi(padded_bits as i32);
    let mut marginal: HashMap<u128, f64> = HashMap::new();
    for (px, d) in &per_x {
        for (&k, &p) in d {
            *marginal.entry(k).or_default() += px * p;
        }
    }
    let mut mi = 0.0;
    let mut dev: f64 = 0.0;
    for (px, d) in &per_x {
        for (&k, &p) in d {
            if p > 0.0 {
                mi += px * p * (p / marginal[&k]).log2();
            }
            dev = dev.max((p - 1.0 / cells).abs());
        }
        if (d.len() as f64) < cells {
            dev = dev.max(1.0 / cells);
        }
    }
    Ok(PadCheck {
        padded_bits,
        mutual_information: mi,
        max_uniform_deviation: dev,
    })
}
