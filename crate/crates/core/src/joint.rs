//! Dense joint pmfs over named finite variables and the Shannon functionals
//! evaluated on them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{plog2p, Real};

/// Canonical variable names used throughout the crate.
pub mod vars {
    pub const Q: &str = "Q";
    pub const V: &str = "V";
    pub const U: &str = "U";
    pub const XT: &str = "Xt";
    pub const X: &str = "X";
    pub const Y: &str = "Y";
    pub const Z: &str = "Z";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Joint pmf stored densely in row-major order over its axes (last axis
/// fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf<F> {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    table: Vec<F>,
}

fn strides_for(axes: &[Axis]) -> Vec<usize> {
    let mut strides = vec![1; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * axes[i + 1].size;
    }
    strides
}

impl<F: Real> JointPmf<F> {
    pub fn new(axes: Vec<Axis>, table: Vec<F>) -> Result<Self> {
        let joint = Self::from_parts_unchecked(axes, table)?;
        let mut sum = F::zero();
        for (index, &p) in joint.table.iter().enumerate() {
            if !p.is_finite() || p < F::zero() {
                return Err(Error::InvalidEntry {
                    context: "joint table".into(),
                    index,
                    value: p.as_f64(),
                });
            }
            sum = sum + p;
        }
        if (sum - F::one()).abs() > F::derived_tol() {
            return Err(Error::NotNormalized {
                context: "joint table".into(),
                sum: sum.as_f64(),
            });
        }
        Ok(joint)
    }

    /// Shape checks only; used by constructors that produce the table as a
    /// product of already validated factors.
    pub(crate) fn from_parts_unchecked(axes: Vec<Axis>, table: Vec<F>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if a.size == 0 {
                return Err(Error::Dimension(format!("axis `{}` has size 0", a.name)));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::DuplicateVariable(a.name.clone()));
            }
        }
        let expected: usize = axes.iter().map(|a| a.size).product();
        if expected != table.len() {
            return Err(Error::Dimension(format!(
                "table has {} entries, axes need {expected}",
                table.len()
            )));
        }
        let strides = strides_for(&axes);
        Ok(Self {
            axes,
            strides,
            table,
        })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn table(&self) -> &[F] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn axis_index(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn axis_size(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_index(name)?].size)
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn entry(&self, index: &[usize]) -> F {
        let flat: usize = index.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        self.table[flat]
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut idx = Vec::with_capacity(names.len());
        for &n in names {
            let i = self.axis_index(n)?;
            if idx.contains(&i) {
                return Err(Error::DuplicateVariable(n.to_string()));
            }
            idx.push(i);
        }
        idx.sort_unstable();
        Ok(idx)
    }

    /// For each flat entry, the flat index of its image in the marginal over
    /// `keep` (sorted axis positions). Returns the marginal's axis sizes too.
    fn projection(&self, keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let sizes: Vec<usize> = keep.iter().map(|&k| self.axes[k].size).collect();
        let mut mstride = vec![0usize; self.axes.len()];
        let mut acc = 1;
        for (pos, &k) in keep.iter().enumerate().rev() {
            mstride[k] = acc;
            acc *= sizes[pos];
        }
        let mut map = Vec::with_capacity(self.table.len());
        let mut counter = vec![0usize; self.axes.len()];
        let mut current = 0usize;
        for _ in 0..self.table.len() {
            map.push(current);
            // odometer increment, last axis fastest
            for ax in (0..self.axes.len()).rev() {
                counter[ax] += 1;
                current += mstride[ax];
                if counter[ax] < self.axes[ax].size {
                    break;
                }
                current -= mstride[ax] * counter[ax];
                counter[ax] = 0;
            }
        }
        (sizes, map)
    }

    fn marginal_table(&self, keep: &[usize]) -> (Vec<usize>, Vec<usize>, Vec<F>) {
        let (sizes, map) = self.projection(keep);
        let len: usize = sizes.iter().product();
        let mut out = vec![F::zero(); len];
        for (&m, &p) in map.iter().zip(&self.table) {
            out[m] = out[m] + p;
        }
        (sizes, map, out)
    }

    /// Sums out every axis not named in `keep`. Axis order follows `self`.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointPmf<F>> {
        let idx = self.resolve(keep)?;
        let (_, _, table) = self.marginal_table(&idx);
        let axes = idx.iter().map(|&i| self.axes[i].clone()).collect();
        JointPmf::from_parts_unchecked(axes, table)
    }

    /// Entropy in bits of the marginal on `vars`; zero for the empty set.
    pub fn entropy(&self, vars: &[&str]) -> Result<F> {
        let idx = self.resolve(vars)?;
        if idx.is_empty() {
            return Ok(F::zero());
        }
        let (_, _, table) = self.marginal_table(&idx);
        Ok(clamp_small_negative(table.into_iter().map(plog2p).sum()))
    }

    /// `H(a | c)`.
    pub fn conditional_entropy(&self, a: &[&str], c: &[&str]) -> Result<F> {
        disjoint(a, c)?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let h = self.entropy(&ac)? - self.entropy(c)?;
        Ok(clamp_small_negative(h))
    }

    /// `I(a; b)`.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<F> {
        self.conditional_mutual_information(a, b, &[])
    }

    /// `I(a; b | c) = H(a,c) + H(b,c) - H(a,b,c) - H(c)`.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<F> {
        disjoint(a, b)?;
        disjoint(a, c)?;
        disjoint(b, c)?;
        let v = InfoExpr::cmi(a, b, c).value(self)?;
        Ok(clamp_small_negative(v))
    }

    pub fn pmf_sum(&self) -> F {
        self.table.iter().copied().sum()
    }

    /// Human-readable dump: one header line of `name(size)` tokens followed
    /// by the flat probability list.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty joint text".into()))?;
        let header = header
            .strip_prefix("axes:")
            .ok_or_else(|| Error::InvalidArgument("missing `axes:` header".into()))?;
        let mut axes = Vec::new();
        for tok in header.split_whitespace() {
            let (name, rest) = tok
                .split_once('(')
                .ok_or_else(|| Error::InvalidArgument(format!("bad axis token `{tok}`")))?;
            let size = rest
                .trim_end_matches(')')
                .parse::<usize>()
                .map_err(|e| Error::InvalidArgument(format!("bad axis size in `{tok}`: {e}")))?;
            axes.push(Axis::new(name, size));
        }
        let body = lines
            .next()
            .and_then(|l| l.strip_prefix("probabilities:"))
            .ok_or_else(|| Error::InvalidArgument("missing `probabilities:` line".into()))?;
        let table = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map(F::lit)
                    .map_err(|e| Error::InvalidArgument(format!("bad probability `{t}`: {e}")))
            })
            .collect::<Result<Vec<F>>>()?;
        Self::new(axes, table)
    }
}

/// Precomputed projection of a fixed axis layout onto a subset of its axes.
/// Lets hot loops evaluate marginal entropies on raw tables without redoing
/// the index arithmetic.
#[derive(Debug, Clone)]
pub struct Projector {
    map: Vec<usize>,
    len: usize,
}

impl Projector {
    pub fn new(axes: &[Axis], keep: &[&str]) -> Result<Self> {
        let shape = JointPmf::<f64>::from_parts_unchecked(axes.to_vec(), vec![0.0; axes.iter().map(|a| a.size).product()])?;
        let idx = shape.resolve(keep)?;
        let (sizes, map) = shape.projection(&idx);
        Ok(Self {
            map,
            len: sizes.iter().product(),
        })
    }

    pub fn marginal_len(&self) -> usize {
        self.len
    }

    /// Flat marginal index of every joint entry.
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn marginal<F: Real>(&self, table: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.len];
        for (&m, &p) in self.map.iter().zip(table) {
            out[m] = out[m] + p;
        }
        out
    }
}

/// An [`InfoExpr`] bound to one axis layout.
#[derive(Debug, Clone)]
pub struct CompiledExpr<F> {
    terms: Vec<(F, Projector)>,
}

impl<F: Real> CompiledExpr<F> {
    pub fn value(&self, table: &[F]) -> F {
        self.terms
            .iter()
            .map(|(c, p)| *c * p.marginal(table).into_iter().map(plog2p).sum::<F>())
            .sum()
    }

    /// Adds `scale * gradient` into `grad`; marginal masses below `floor` are
    /// treated as `floor` so the derivative stays finite on the boundary.
    pub fn accumulate_gradient(&self, table: &[F], scale: F, floor: F, grad: &mut [F]) {
        let inv_ln2 = F::one() / F::lit(std::f64::consts::LN_2);
        for (coef, proj) in &self.terms {
            let c = scale * *coef;
            if c == F::zero() {
                continue;
            }
            let dm: Vec<F> = proj
                .marginal(table)
                .into_iter()
                .map(|m| c * (-(m.max(floor)).log2() - inv_ln2))
                .collect();
            for (g, &m) in grad.iter_mut().zip(&proj.map) {
                *g = *g + dm[m];
            }
        }
    }
}

impl<F: Real> fmt::Display for JointPmf<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axes:")?;
        for a in &self.axes {
            write!(f, " {}({})", a.name, a.size)?;
        }
        write!(f, "\nprobabilities:")?;
        for p in &self.table {
            write!(f, " {p}")?;
        }
        writeln!(f)
    }
}

fn disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    match a.iter().find(|x| b.contains(x)) {
        Some(x) => Err(Error::OverlappingVariables(x.to_string())),
        None => Ok(()),
    }
}

fn clamp_small_negative<F: Real>(v: F) -> F {
    if v < F::zero() && v >= -F::derived_tol() {
        F::zero()
    } else {
        v
    }
}

/// A signed linear combination of marginal entropies, e.g. a conditional
/// mutual information. Besides its value it yields the gradient with respect
/// to every entry of the underlying joint table, which the region search
/// chains back to the auxiliary channels.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoExpr<F> {
    terms: Vec<(F, Vec<String>)>,
}

impl<F: Real> InfoExpr<F> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn entropy(vars: &[&str]) -> Self {
        Self {
            terms: vec![(F::one(), vars.iter().map(|s| s.to_string()).collect())],
        }
    }

    /// `H(a | c)`.
    pub fn conditional_entropy(a: &[&str], c: &[&str]) -> Self {
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        Self::entropy(&ac) - Self::entropy(c)
    }

    /// `I(a; b | c)`.
    pub fn cmi(a: &[&str], b: &[&str], c: &[&str]) -> Self {
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        Self::entropy(&ac) + Self::entropy(&bc) - Self::entropy(&abc) - Self::entropy(c)
    }

    pub fn mi(a: &[&str], b: &[&str]) -> Self {
        Self::cmi(a, b, &[])
    }

    pub fn compile(&self, axes: &[Axis]) -> Result<CompiledExpr<F>> {
        let mut terms = Vec::new();
        for (coef, vars) in &self.terms {
            if *coef == F::zero() || vars.is_empty() {
                continue;
            }
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            terms.push((*coef, Projector::new(axes, &names)?));
        }
        Ok(CompiledExpr { terms })
    }

    pub fn value(&self, joint: &JointPmf<F>) -> Result<F> {
        let mut v = F::zero();
        for (coef, vars) in &self.terms {
            if *coef == F::zero() || vars.is_empty() {
                continue;
            }
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            v = v + *coef * joint.entropy(&names)?;
        }
        Ok(v)
    }

    /// Adds `scale * d(self)/d(entry)` into `grad`, one slot per joint entry.
    /// Cells of zero marginal mass get the derivative at a tiny positive mass.
    pub fn accumulate_gradient(&self, joint: &JointPmf<F>, scale: F, grad: &mut [F]) -> Result<()> {
        if grad.len() != joint.len() {
            return Err(Error::Dimension("gradient buffer size".into()));
        }
        let tiny = F::lit(1e-300).max(F::min_positive_value());
        let inv_ln2 = F::one() / F::lit(std::f64::consts::LN_2);
        for (coef, vars) in &self.terms {
            if *coef == F::zero() || vars.is_empty() {
                continue;
            }
            let names: Vec<&str> = vars.iter().map(String::as_str).collect();
            let idx = joint.resolve(&names)?;
            let (_, map, marg) = joint.marginal_table(&idx);
            let dm: Vec<F> = marg
                .iter()
                .map(|&m| -(m.max(tiny)).log2() - inv_ln2)
                .collect();
            let c = scale * *coef;
            for (g, &m) in grad.iter_mut().zip(&map) {
                *g = *g + c * dm[m];
            }
        }
        Ok(())
    }
}

impl<F: Real> Add for InfoExpr<F> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.terms.extend(rhs.terms);
        self
    }
}

impl<F: Real> Neg for InfoExpr<F> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for t in &mut self.terms {
            t.0 = -t.0;
        }
        self
    }
}

impl<F: Real> Sub for InfoExpr<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<F: Real> Mul<F> for InfoExpr<F> {
    type Output = Self;
    fn mul(mut self, rhs: F) -> Self {
        for t in &mut self.terms {
            t.0 = t.0 * rhs;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_pair(p: f64) -> JointPmf<f64> {
        JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 2)],
            vec![0.5 * (1.0 - p), 0.5 * p, 0.5 * p, 0.5 * (1.0 - p)],
        )
        .unwrap()
    }

    #[test]
    fn bsc_mutual_information() {
        let j = bsc_pair(0.2);
        let mi = j.mutual_information(&["A"], &["B"]).unwrap();
        assert!((mi - 0.278_071_905_112_637_7).abs() < 1e-12);
    }

    #[test]
    fn identical_variables_share_one_bit() {
        let j = bsc_pair(0.0);
        assert!((j.mutual_information(&["A"], &["B"]).unwrap() - 1.0).abs() < 1e-15);
        let j = bsc_pair(0.5);
        assert_eq!(j.mutual_information(&["A"], &["B"]).unwrap(), 0.0);
    }

    #[test]
    fn marginal_over_everything_is_identity() {
        let j = bsc_pair(0.3);
        assert_eq!(j.marginal(&["A", "B"]).unwrap(), j);
        assert_eq!(j.marginal(&["B", "A"]).unwrap(), j);
    }

    #[test]
    fn unknown_and_overlapping_variables() {
        let j = bsc_pair(0.3);
        assert_eq!(
            j.marginal(&["C"]).unwrap_err(),
            Error::UnknownVariable("C".into())
        );
        assert_eq!(
            j.conditional_mutual_information(&["A"], &["A"], &[])
                .unwrap_err(),
            Error::OverlappingVariables("A".into())
        );
    }

    #[test]
    fn text_round_trip() {
        let j = bsc_pair(0.3);
        let back = JointPmf::<f64>::from_text(&j.to_text()).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn entropy_gradient_matches_finite_difference() {
        // perturb mass between two cells, compare against the directional
        // derivative predicted by the gradient
        let j = JointPmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 3)],
            vec![0.1, 0.2, 0.05, 0.25, 0.15, 0.25],
        )
        .unwrap();
        let expr = InfoExpr::<f64>::cmi(&["A"], &["B"], &[]);
        let mut g = vec![0.0; 6];
        expr.accumulate_gradient(&j, 1.0, &mut g).unwrap();
        let h = 1e-6;
        let mut t = j.table().to_vec();
        t[1] += h;
        t[4] -= h;
        let jp = JointPmf::new(j.axes().to_vec(), t).unwrap();
        let fd = (expr.value(&jp).unwrap() - expr.value(&j).unwrap()) / h;
        assert!((fd - (g[1] - g[4])).abs() < 1e-4, "{fd} vs {}", g[1] - g[4]);
    }
}
