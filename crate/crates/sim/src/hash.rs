//! Linear GF(2) bin maps over the bit expansion of a symbol sequence, with
//! exhaustive maximum-likelihood and belief-propagation bin decoders.

use crate::bits::Bits;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;

/// Exhaustive decoding is used when the layer has at most this many sequences.
pub const EXHAUSTIVE_LIMIT: usize = 1 << 16;
const SPARSE_COLUMN_WEIGHT: usize = 3;
const BP_ITERATIONS: usize = 100;
const LLR_CLIP: f64 = 40.0;

/// Bits per symbol of an alphabet of the given size.
pub fn symbol_width(size: usize) -> usize {
    if size <= 1 {
        0
    } else {
        (usize::BITS - (size - 1).leading_zeros()) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearHash {
    rows: usize,
    columns: Vec<Bits>,
    column_rows: Vec<Vec<u32>>,
}

impl LinearHash {
    /// A hash with `rows` output bits over `n_bits` input bits. When
    /// `rows >= n_bits` the last `n_bits` rows are the identity, making the
    /// map injective.
    pub fn new(rows: usize, n_bits: usize, sparse: bool, rng: &mut impl Rng) -> Self {
        let random_rows = if rows >= n_bits { rows - n_bits } else { rows };
        let mut column_rows: Vec<Vec<u32>> = if sparse {
            sparse_columns(random_rows, n_bits, rng)
        } else {
            (0..n_bits)
                .map(|_| (0..random_rows as u32).filter(|_| rng.random::<bool>()).collect())
                .collect()
        };
        if rows >= n_bits {
            for (j, col) in column_rows.iter_mut().enumerate() {
                col.push((random_rows + j) as u32);
            }
        }
        let columns = column_rows
            .iter()
            .map(|rs| {
                let mut b = Bits::zeros(rows);
                for &r in rs {
                    b.set(r as usize, true);
                }
                b
            })
            .collect();
        Self { rows, columns, column_rows }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn n_bits(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &Bits {
        &self.columns[j]
    }

    pub fn apply(&self, bits: &Bits) -> Bits {
        let mut out = Bits::zeros(self.rows);
        for (j, col) in self.columns.iter().enumerate() {
            if bits.get(j) {
                out.xor_assign(col);
            }
        }
        out
    }

    pub fn apply_symbols(&self, seq: &[usize], width: usize) -> Bits {
        let mut out = Bits::zeros(self.rows);
        for (i, &s) in seq.iter().enumerate() {
            for k in 0..width {
                if (s >> k) & 1 == 1 {
                    out.xor_assign(&self.columns[i * width + k]);
                }
            }
        }
        out
    }

    /// The output contribution of symbol `s` at position `pos`.
    pub fn symbol_contribution(&self, pos: usize, s: usize, width: usize) -> Bits {
        let mut out = Bits::zeros(self.rows);
        for k in 0..width {
            if (s >> k) & 1 == 1 {
                out.xor_assign(&self.columns[pos * width + k]);
            }
        }
        out
    }
}

fn sparse_columns(rows: usize, n_bits: usize, rng: &mut impl Rng) -> Vec<Vec<u32>> {
    if rows == 0 {
        return vec![Vec::new(); n_bits];
    }
    let weight = SPARSE_COLUMN_WEIGHT.min(rows);
    let mut degree = vec![0usize; rows];
    let mut order: Vec<u32> = (0..rows as u32).collect();
    (0..n_bits)
        .map(|_| {
            order.shuffle(rng);
            order.sort_by_key(|&r| degree[r as usize]);
            let col: Vec<u32> = order[..weight].to_vec();
            for &r in &col {
                degree[r as usize] += 1;
            }
            col
        })
        .collect()
}

/// Outcome of decoding one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDecode {
    pub sequence: Vec<usize>,
    pub unique: bool,
}

/// Candidate sequences grouped by hash output, for exhaustive decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinTable {
    bins: HashMap<Bits, Vec<u32>>,
}

/// Symbol sequence with base-`q` index `idx`, least significant position first.
pub fn index_to_sequence(mut idx: usize, q: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let s = idx % q;
            idx /= q;
            s
        })
        .collect()
}

impl BinTable {
    pub fn build(hash: &LinearHash, q: usize, n: usize) -> Self {
        let width = symbol_width(q);
        let total = q.pow(n as u32);
        let mut bins: HashMap<Bits, Vec<u32>> = HashMap::new();
        for idx in 0..total {
            let seq = index_to_sequence(idx, q, n);
            bins.entry(hash.apply_symbols(&seq, width)).or_default().push(idx as u32);
        }
        Self { bins }
    }

    /// Most likely sequence in the bin under per-position log-priors.
    pub fn decode(&self, syndrome: &Bits, log_prior: &[Vec<f64>]) -> LayerDecode {
        let n = log_prior.len();
        let q = log_prior.first().map_or(1, Vec::len);
        let Some(cands) = self.bins.get(syndrome) else {
            return LayerDecode {
                sequence: vec![0; n],
                unique: false,
            };
        };
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = None;
        let mut tie = false;
        for &c in cands {
            let seq = index_to_sequence(c as usize, q, n);
            let score: f64 = seq.iter().zip(log_prior).map(|(&s, lp)| lp[s]).sum();
            if score > best {
                best = score;
                best_idx = Some(c);
                tie = false;
            } else if score == best {
                tie = true;
            }
        }
        match best_idx {
            Some(c) if best > f64::NEG_INFINITY => LayerDecode {
                sequence: index_to_sequence(c as usize, q, n),
                unique: !tie,
            },
            _ => LayerDecode {
                sequence: vec![0; n],
                unique: false,
            },
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Sum-product decoding of the bin `syndrome` with per-position symbol
/// log-priors. Bit LLRs are `ln P(0)/P(1)`.
pub fn bp_decode(hash: &LinearHash, syndrome: &Bits, log_prior: &[Vec<f64>], width: usize) -> LayerDecode {
    let n = log_prior.len();
    let q = log_prior.first().map_or(1, Vec::len);
    let n_bits = n * width;
    debug_assert_eq!(hash.n_bits(), n_bits);
    if width == 0 {
        return LayerDecode {
            sequence: vec![0; n],
            unique: hash.rows() == 0 || syndrome.count_ones() == 0,
        };
    }
    let mut row_edges: Vec<Vec<(u32, usize)>> = vec![Vec::new(); hash.rows()];
    let mut bit_edges: Vec<Vec<usize>> = vec![Vec::new(); n_bits];
    let mut n_edges = 0;
    for (j, edges) in bit_edges.iter_mut().enumerate() {
        for &r in &hash.column_rows[j] {
            row_edges[r as usize].push((j as u32, n_edges));
            edges.push(n_edges);
            n_edges += 1;
        }
    }
    let mut c2v = vec![0.0f64; n_edges];
    let mut v2c = vec![0.0f64; n_edges];
    let mut check_sum = vec![0.0f64; n_bits];
    let mut sym_llr = vec![0.0f64; n_bits];
    let mut seq = vec![0usize; n];
    let mut tanh_buf: Vec<f64> = Vec::new();
    let mut prefix: Vec<f64> = Vec::new();
    for _ in 0..BP_ITERATIONS {
        for j in 0..n_bits {
            check_sum[j] = bit_edges[j].iter().map(|&e| c2v[e]).sum();
        }
        for i in 0..n {
            let bits = &check_sum[i * width..(i + 1) * width];
            let scores: Vec<f64> = (0..q)
                .map(|a| {
                    log_prior[i][a]
                        + (0..width)
                            .map(|k| if (a >> k) & 1 == 0 { bits[k] / 2.0 } else { -bits[k] / 2.0 })
                            .sum::<f64>()
                })
                .collect();
            let mut best = 0;
            for a in 1..q {
                if scores[a] > scores[best] {
                    best = a;
                }
            }
            seq[i] = best;
            for k in 0..width {
                let (mut l0, mut l1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for (a, &s) in scores.iter().enumerate() {
                    let own = if (a >> k) & 1 == 0 { bits[k] / 2.0 } else { -bits[k] / 2.0 };
                    if (a >> k) & 1 == 0 {
                        l0 = log_add(l0, s - own);
                    } else {
                        l1 = log_add(l1, s - own);
                    }
                }
                sym_llr[i * width + k] = (l0 - l1).clamp(-LLR_CLIP, LLR_CLIP);
            }
        }
        if hash.apply_symbols(&seq, width) == *syndrome {
            return LayerDecode {
                sequence: seq,
                unique: true,
            };
        }
        for j in 0..n_bits {
            for &e in &bit_edges[j] {
                v2c[e] = (sym_llr[j] + check_sum[j] - c2v[e]).clamp(-LLR_CLIP, LLR_CLIP);
            }
        }
        for (r, edges) in row_edges.iter().enumerate() {
            let d = edges.len();
            if d == 0 {
                continue;
            }
            tanh_buf.clear();
            tanh_buf.extend(edges.iter().map(|&(_, e)| (v2c[e] / 2.0).tanh()));
            prefix.clear();
            prefix.push(1.0);
            for t in &tanh_buf {
                let last = *prefix.last().unwrap();
                prefix.push(last * t);
            }
            let sign = if syndrome.get(r) { -1.0 } else { 1.0 };
            let mut suffix = 1.0;
            for k in (0..d).rev() {
                let p = (sign * prefix[k] * suffix).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                c2v[edges[k].1] = (2.0 * p.atanh()).clamp(-LLR_CLIP, LLR_CLIP);
                suffix *= tanh_buf[k];
            }
        }
    }
    LayerDecode {
        sequence: seq,
        unique: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn widths() {
        assert_eq!((symbol_width(1), symbol_width(2), symbol_width(3), symbol_width(4), symbol_width(5)), (0, 1, 2, 2, 3));
    }

    #[test]
    fn tall_hash_is_injective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = LinearHash::new(10, 8, false, &mut rng);
        let t = BinTable::build(&h, 2, 8);
        assert!(t.bins.values().all(|c| c.len() == 1));
        assert_eq!(t.bins.len(), 256);
    }

    #[test]
    fn hash_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = LinearHash::new(7, 12, true, &mut rng);
        let a = Bits::random(12, &mut rng);
        let b = Bits::random(12, &mut rng);
        let mut ab = a.clone();
        ab.xor_assign(&b);
        let mut ha = h.apply(&a);
        ha.xor_assign(&h.apply(&b));
        assert_eq!(h.apply(&ab), ha);
    }

    #[test]
    fn sparse_rows_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = LinearHash::new(30, 60, true, &mut rng);
        let mut deg = [0; 30];
        for j in 0..60 {
            assert_eq!(h.column_rows[j].len(), 3);
            for &r in &h.column_rows[j] {
                deg[r as usize] += 1;
            }
        }
        assert!(deg.iter().all(|&d| d == 6));
    }

    #[test]
    fn bp_recovers_sequence_with_strong_side_information() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 300;
        let h = LinearHash::new(150, n, true, &mut rng);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let syn = h.apply_symbols(&truth, 1);
        let p = 0.05f64;
        let prior: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| {
                let y = if rng.random::<f64>() < p { 1 - t } else { t };
                (0..2).map(|a| if a == y { (1.0 - p).ln() } else { p.ln() }).collect()
            })
            .collect();
        let d = bp_decode(&h, &syn, &prior, 1);
        assert!(d.unique);
        assert_eq!(d.sequence, truth);
    }

    #[test]
    fn bp_handles_multibit_symbols() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100;
        let h = LinearHash::new(250, 200, true, &mut rng);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let syn = h.apply_symbols(&truth, 2);
        let prior = vec![vec![(1.0f64 / 3.0).ln(); 3]; n];
        let d = bp_decode(&h, &syn, &prior, 2);
        assert_eq!(d.sequence, truth);
    }

    #[test]
    fn exhaustive_ml_picks_most_likely() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = LinearHash::new(4, 6, false, &mut rng);
        let t = BinTable::build(&h, 2, 6);
        let truth = vec![1, 0, 1, 1, 0, 0];
        let prior: Vec<Vec<f64>> = truth.iter().map(|&s| if s == 0 { vec![0.9f64.ln(), 0.1f64.ln()] } else { vec![0.1f64.ln(), 0.9f64.ln()] }).collect();
        let d = t.decode(&h.apply_symbols(&truth, 1), &prior);
        assert_eq!(d.sequence, truth);
        assert!(d.unique);
    }
}
