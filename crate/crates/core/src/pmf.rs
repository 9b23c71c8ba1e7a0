//! Finite probability mass functions and row-stochastic matrices.

use crate::error::{Error, Result};
use crate::scalar::{plog2p, Real};

fn validate<F: Real>(context: impl Fn() -> String, probs: &[F]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Empty);
    }
    let mut sum = F::zero();
    for (index, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < F::zero() {
            return Err(Error::InvalidEntry {
                context: context(),
                index,
                value: p.as_f64(),
            });
        }
        sum = sum + p;
    }
    if (sum - F::one()).abs() > F::normalization_tol() {
        return Err(Error::NotNormalized {
            context: context(),
            sum: sum.as_f64(),
        });
    }
    Ok(())
}

/// A pmf over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf<F> {
    probs: Vec<F>,
}

impl<F: Real> Pmf<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        validate(|| "pmf".to_string(), &probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Empty);
        }
        let p = F::one() / F::from_usize(len).unwrap();
        Ok(Self { probs: vec![p; len] })
    }

    pub fn point_mass(len: usize, at: usize) -> Result<Self> {
        if at >= len {
            return Err(Error::InvalidArgument(format!(
                "point mass at {at} outside support of size {len}"
            )));
        }
        let mut probs = vec![F::zero(); len];
        probs[at] = F::one();
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> F {
        self.probs[i]
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> F {
        self.probs.iter().map(|&p| plog2p(p)).sum()
    }

    pub fn into_vec(self) -> Vec<F> {
        self.probs
    }
}

/// Conditional pmf `P(out | in)` stored row-major, one row per input symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<F> {
    inputs: usize,
    outputs: usize,
    data: Vec<F>,
}

impl<F: Real> StochasticMatrix<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let inputs = rows.len();
        if inputs == 0 {
            return Err(Error::Empty);
        }
        let outputs = rows[0].len();
        let mut data = Vec::with_capacity(inputs * outputs);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != outputs {
                return Err(Error::Dimension(format!(
                    "row {r} has {} entries, expected {outputs}",
                    row.len()
                )));
            }
            validate(|| format!("row {r}"), &row)?;
            data.extend(row);
        }
        Ok(Self {
            inputs,
            outputs,
            data,
        })
    }

    pub fn from_flat(inputs: usize, outputs: usize, data: Vec<F>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Empty);
        }
        if data.len() != inputs * outputs {
            return Err(Error::Dimension(format!(
                "{} entries for a {inputs}x{outputs} matrix",
                data.len()
            )));
        }
        for r in 0..inputs {
            validate(|| format!("row {r}"), &data[r * outputs..(r + 1) * outputs])?;
        }
        Ok(Self {
            inputs,
            outputs,
            data,
        })
    }

    pub fn identity(size: usize) -> Self {
        let mut data = vec![F::zero(); size * size];
        for i in 0..size {
            data[i * size + i] = F::one();
        }
        Self {
            inputs: size,
            outputs: size,
            data,
        }
    }

    /// Every input maps to the same output distribution.
    pub fn constant(inputs: usize, row: &Pmf<F>) -> Self {
        let mut data = Vec::with_capacity(inputs * row.len());
        for _ in 0..inputs {
            data.extend_from_slice(row.probs());
        }
        Self {
            inputs,
            outputs: row.len(),
            data,
        }
    }

    /// The channel to a single output symbol.
    pub fn trivial(inputs: usize) -> Self {
        Self {
            inputs,
            outputs: 1,
            data: vec![F::one(); inputs],
        }
    }

    /// Binary symmetric channel with the given crossover probability.
    pub fn bsc(crossover: F) -> Result<Self> {
        let q = F::one() - crossover;
        Self::from_rows(vec![vec![q, crossover], vec![crossover, q]])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn get(&self, input: usize, output: usize) -> F {
        self.data[input * self.outputs + output]
    }

    pub fn row(&self, input: usize) -> &[F] {
        &self.data[input * self.outputs..(input + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks(self.outputs)
    }

    pub fn as_flat(&self) -> &[F] {
        &self.data
    }

    /// Replaces one row; the new row must itself be a pmf.
    pub fn set_row(&mut self, input: usize, row: &[F]) -> Result<()> {
        if row.len() != self.outputs {
            return Err(Error::Dimension(format!(
                "row of {} entries for {} outputs",
                row.len(),
                self.outputs
            )));
        }
        validate(|| format!("row {input}"), row)?;
        self.data[input * self.outputs..(input + 1) * self.outputs].copy_from_slice(row);
        Ok(())
    }

    /// Channel `self` followed by `next`: `P(w|x) = sum_y P(y|x) P(w|y)`.
    pub fn compose(&self, next: &StochasticMatrix<F>) -> Result<Self> {
        if self.outputs != next.inputs {
            return Err(Error::Dimension(format!(
                "cannot compose {}x{} with {}x{}",
                self.inputs, self.outputs, next.inputs, next.outputs
            )));
        }
        let mut data = vec![F::zero(); self.inputs * next.outputs];
        for x in 0..self.inputs {
            for y in 0..self.outputs {
                let p = self.get(x, y);
                if p == F::zero() {
                    continue;
                }
                for w in 0..next.outputs {
                    data[x * next.outputs + w] = data[x * next.outputs + w] + p * next.get(y, w);
                }
            }
        }
        Ok(Self {
            inputs: self.inputs,
            outputs: next.outputs,
            data,
        })
    }

    /// Output distribution for the input distribution `input`.
    pub fn push_forward(&self, input: &Pmf<F>) -> Result<Pmf<F>> {
        if input.len() != self.inputs {
            return Err(Error::Dimension(format!(
                "pmf of size {} into channel with {} inputs",
                input.len(),
                self.inputs
            )));
        }
        let mut out = vec![F::zero(); self.outputs];
        for (x, &px) in input.probs().iter().enumerate() {
            for (w, o) in out.iter_mut().enumerate() {
                *o = *o + px * self.get(x, w);
            }
        }
        Ok(Pmf { probs: out })
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &StochasticMatrix<F>) -> Option<F> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .fold(F::zero(), |m, (&a, &b)| m.max((a - b).abs())),
        )
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        self.rows().map(|r| r.to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized_row_with_index() {
        let err = StochasticMatrix::<f64>::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.49]])
            .unwrap_err();
        match err {
            Error::NotNormalized { context, .. } => assert_eq!(context, "row 1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_entry() {
        assert!(matches!(
            Pmf::new(vec![1.5, -0.5]),
            Err(Error::InvalidEntry { index: 1, .. })
        ));
    }

    #[test]
    fn bsc_composition_adds_crossovers() {
        let a = StochasticMatrix::<f64>::bsc(0.1).unwrap();
        let b = StochasticMatrix::bsc(0.25).unwrap();
        let c = a.compose(&b).unwrap();
        assert!((c.get(0, 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn entropy_of_skewed_binary() {
        let p = Pmf::<f64>::new(vec![0.25, 0.75]).unwrap();
        assert!((p.entropy() - 0.811_278_124_459_132_8).abs() < 1e-12);
        let p = Pmf::<f64>::point_mass(3, 2).unwrap();
        assert_eq!(p.entropy(), 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let p = Pmf::<f32>::uniform(2).unwrap();
        assert!((p.entropy() - 1.0).abs() < 1e-6);
    }
}
