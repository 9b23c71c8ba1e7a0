//! Single-letter rate bounds of the keyed secure/private source coding
//! problem, for fixed auxiliary schemes, and the numerical search over
//! auxiliary schemes.
//!
//! For a scheme `P_Q|V P_V|U P_U|X̃` on top of the source joint, the minimal
//! storage rate is `I(U;X̃|Y)`. The leakage bounds depend on the key rate
//! `r0` through two thresholds, `I(U;X̃|Y,V) <= I(U;X̃|Y)`:
//!
//! | regime     | condition                         | secrecy / privacy bound             |
//! |------------|-----------------------------------|-------------------------------------|
//! | small key  | `r0 < I(U;X̃|Y,V)`                 | `I(U;X̃|Z)+R'-r0`, `I(U;X|Z)+R'-r0`  |
//! | middle key | `I(U;X̃|Y,V) <= r0 < I(U;X̃|Y)`     | `I(V;X̃|Z)`, `I(V;X|Z)`              |
//! | large key  | `r0 >= I(U;X̃|Y)`                  | `0`, `0`                            |
//!
//! with `R' = min{I(U;Z|V,Q) - I(U;Y|V,Q), 0}`.

mod search;

pub use search::{
    grid_oracle, lower_convex_envelope, project_to_simplex, trace_region, Scalarization,
    SearchConfig, SearchMode, TimeSharing, TracePoint, DEFAULT_SEED,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::joint::{vars::*, Axis, InfoExpr, JointPmf};
use crate::pmf::StochasticMatrix;
use crate::scalar::Real;

/// Upper limits on the auxiliary alphabet sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cardinalities {
    pub u: usize,
    pub v: usize,
    pub q: usize,
}

impl Cardinalities {
    /// Sufficient sizes for the lossy region: `(|X̃|+3)^2`, `|X̃|+3`, `2`.
    pub fn lossy_default(x_tilde: usize) -> Self {
        Self {
            u: (x_tilde + 3) * (x_tilde + 3),
            v: x_tilde + 3,
            q: 2,
        }
    }

    /// Sufficient sizes for the lossless region with `U = X̃`.
    pub fn lossless_default(x_tilde: usize) -> Self {
        Self {
            u: x_tilde,
            v: x_tilde + 2,
            q: 2,
        }
    }
}

/// Decoder reconstruction `x̂(u, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionMap {
    u_size: usize,
    y_size: usize,
    table: Vec<usize>,
}

impl ReconstructionMap {
    pub fn new(u_size: usize, y_size: usize, table: Vec<usize>) -> Result<Self> {
        if table.len() != u_size * y_size {
            return Err(Error::Dimension(format!(
                "reconstruction table has {} entries, expected {}",
                table.len(),
                u_size * y_size
            )));
        }
        Ok(Self {
            u_size,
            y_size,
            table,
        })
    }

    pub fn from_rows(rows: Vec<Vec<usize>>) -> Result<Self> {
        let u_size = rows.len();
        let y_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != y_size) {
            return Err(Error::Dimension("ragged reconstruction table".into()));
        }
        Self::new(u_size, y_size, rows.into_iter().flatten().collect())
    }

    /// `x̂(u, y) = u`.
    pub fn identity(u_size: usize, y_size: usize) -> Self {
        let table = (0..u_size)
            .flat_map(|u| std::iter::repeat_n(u, y_size))
            .collect();
        Self {
            u_size,
            y_size,
            table,
        }
    }

    #[inline]
    pub fn get(&self, u: usize, y: usize) -> usize {
        self.table[u * self.y_size + y]
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.y_size).map(<[usize]>::to_vec).collect()
    }
}

/// Per-letter distortion `d(x̃, x̂)`, rows indexed by `x̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMetric<F> {
    rows: usize,
    cols: usize,
    table: Vec<F>,
}

impl<F: Real> DistortionMetric<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if n == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        let mut table = Vec::with_capacity(n * cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!("distortion row {r} length")));
            }
            for (c, v) in row.into_iter().enumerate() {
                if !v.is_finite() || v < F::zero() {
                    return Err(Error::InvalidEntry {
                        context: format!("distortion row {r}"),
                        index: c,
                        value: v.as_f64(),
                    });
                }
                table.push(v);
            }
        }
        Ok(Self {
            rows: n,
            cols,
            table,
        })
    }

    pub fn hamming(size: usize) -> Self {
        let table = (0..size * size)
            .map(|i| {
                if i / size == i % size {
                    F::zero()
                } else {
                    F::one()
                }
            })
            .collect();
        Self {
            rows: size,
            cols: size,
            table,
        }
    }

    /// Squared error between real-valued symbol representatives.
    pub fn squared_error(points: &[F]) -> Self {
        let n = points.len();
        let table = (0..n * n)
            .map(|i| {
                let d = points[i / n] - points[i % n];
                d * d
            })
            .collect();
        Self {
            rows: n,
            cols: n,
            table,
        }
    }

    #[inline]
    pub fn get(&self, x_tilde: usize, x_hat: usize) -> F {
        self.table[x_tilde * self.cols + x_hat]
    }

    pub fn source_size(&self) -> usize {
        self.rows
    }

    pub fn reconstruction_size(&self) -> usize {
        self.cols
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        self.table.chunks(self.cols).map(<[F]>::to_vec).collect()
    }
}

/// Auxiliary test channels `X̃ -> U -> V -> Q` and an optional decoder map.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxScheme<F> {
    pub p_u_given_xtilde: StochasticMatrix<F>,
    pub p_v_given_u: StochasticMatrix<F>,
    pub p_q_given_v: StochasticMatrix<F>,
    pub reconstruction: Option<ReconstructionMap>,
}

impl<F: Real> AuxScheme<F> {
    /// Checks chaining and the default cardinality bounds.
    pub fn new(
        p_u_given_xtilde: StochasticMatrix<F>,
        p_v_given_u: StochasticMatrix<F>,
        p_q_given_v: StochasticMatrix<F>,
    ) -> Result<Self> {
        let limits = Cardinalities::lossy_default(p_u_given_xtilde.inputs());
        Self::with_limits(p_u_given_xtilde, p_v_given_u, p_q_given_v, limits)
    }

    pub fn with_limits(
        p_u_given_xtilde: StochasticMatrix<F>,
        p_v_given_u: StochasticMatrix<F>,
        p_q_given_v: StochasticMatrix<F>,
        limits: Cardinalities,
    ) -> Result<Self> {
        if p_v_given_u.inputs() != p_u_given_xtilde.outputs() {
            return Err(Error::Dimension(format!(
                "P_V|U has {} inputs but |U| = {}",
                p_v_given_u.inputs(),
                p_u_given_xtilde.outputs()
            )));
        }
        if p_q_given_v.inputs() != p_v_given_u.outputs() {
            return Err(Error::Dimension(format!(
                "P_Q|V has {} inputs but |V| = {}",
                p_q_given_v.inputs(),
                p_v_given_u.outputs()
            )));
        }
        let (u, v, q) = (
            p_u_given_xtilde.outputs(),
            p_v_given_u.outputs(),
            p_q_given_v.outputs(),
        );
        if u > limits.u || v > limits.v || q > limits.q {
            return Err(Error::InvalidArgument(format!(
                "auxiliary sizes (|U|,|V|,|Q|) = ({u},{v},{q}) exceed limits ({},{},{})",
                limits.u, limits.v, limits.q
            )));
        }
        Ok(Self {
            p_u_given_xtilde,
            p_v_given_u,
            p_q_given_v,
            reconstruction: None,
        })
    }

    /// Only `U` is non-trivial; `V` and `Q` are constants.
    pub fn u_only(p_u_given_xtilde: StochasticMatrix<F>) -> Self {
        let u = p_u_given_xtilde.outputs();
        Self {
            p_u_given_xtilde,
            p_v_given_u: StochasticMatrix::trivial(u),
            p_q_given_v: StochasticMatrix::trivial(1),
            reconstruction: None,
        }
    }

    /// `U = X̃` with trivial `V`, `Q` and the identity decoder.
    pub fn lossless(x_tilde: usize, y_size: usize) -> Self {
        let mut s = Self::u_only(StochasticMatrix::identity(x_tilde));
        s.reconstruction = Some(ReconstructionMap::identity(x_tilde, y_size));
        s
    }

    pub fn with_reconstruction(mut self, map: ReconstructionMap) -> Self {
        self.reconstruction = Some(map);
        self
    }

    pub fn u_size(&self) -> usize {
        self.p_u_given_xtilde.outputs()
    }

    pub fn v_size(&self) -> usize {
        self.p_v_given_u.outputs()
    }

    pub fn q_size(&self) -> usize {
        self.p_q_given_v.outputs()
    }
}

/// `(R_w, R_s, R_l, D)`: storage rate, secrecy and privacy leakage rates in
/// bits/symbol, and expected distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTuple<F> {
    pub rw: F,
    pub rs: F,
    pub rl: F,
    pub d: F,
}

impl<F: Real> RateTuple<F> {
    pub fn new(rw: F, rs: F, rl: F, d: F) -> Result<Self> {
        for (name, v) in [("rw", rw), ("rs", rs), ("rl", rl), ("d", d)] {
            if !v.is_finite() || v < F::zero() {
                return Err(Error::InvalidArgument(format!("{name} = {v} is not a finite non-negative value")));
            }
        }
        Ok(Self { rw, rs, rl, d })
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> F {
        (self.rw - other.rw)
            .abs()
            .max((self.rs - other.rs).abs())
            .max((self.rl - other.rl).abs())
            .max((self.d - other.d).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    SmallKey,
    MiddleKey,
    LargeKey,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SmallKey => "small_key",
            Regime::MiddleKey => "middle_key",
            Regime::LargeKey => "large_key",
        })
    }
}

impl Regime {
    /// Closed lower ends: equality with a threshold selects the larger-key
    /// regime.
    pub fn select<F: Real>(r0: F, low: F, high: F) -> Self {
        if r0 >= high {
            Regime::LargeKey
        } else if r0 >= low {
            Regime::MiddleKey
        } else {
            Regime::SmallKey
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport<F> {
    pub regime: Regime,
    /// `I(U;X̃|Y,V)` (lossless: `H(X̃|Y,V)`).
    pub threshold_low: F,
    /// `I(U;X̃|Y)` (lossless: `H(X̃|Y)`).
    pub threshold_high: F,
    /// `R'` (lossless: `R''`), never positive.
    pub r_prime: F,
    pub bounds: RateTuple<F>,
}

fn nonneg<F: Real>(v: F) -> F {
    v.max(F::zero())
}

fn check_r0<F: Real>(r0: F) -> Result<()> {
    if !r0.is_finite() || r0 < F::zero() {
        return Err(Error::InvalidArgument(format!("key rate r0 = {r0} must be >= 0")));
    }
    Ok(())
}

fn check_source_axes<F: Real>(joint: &JointPmf<F>) -> Result<()> {
    let names: Vec<&str> = joint.axes().iter().map(|a| a.name.as_str()).collect();
    if names != [XT, X, Y, Z] {
        return Err(Error::Dimension(format!(
            "expected a joint over (Xt, X, Y, Z), got {names:?}"
        )));
    }
    Ok(())
}

/// Multiplies the source joint by the auxiliary chain; axes
/// `(Q, V, U, Xt, X, Y, Z)`.
pub fn extend_with_auxiliaries<F: Real>(
    joint: &JointPmf<F>,
    aux: &AuxScheme<F>,
) -> Result<JointPmf<F>> {
    check_source_axes(joint)?;
    let nt = joint.axes()[0].size;
    if aux.p_u_given_xtilde.inputs() != nt {
        return Err(Error::Dimension(format!(
            "P_U|X~ has {} inputs but |X~| = {nt}",
            aux.p_u_given_xtilde.inputs()
        )));
    }
    let table = extended_table(
        joint.table(),
        nt,
        aux.p_u_given_xtilde.as_flat(),
        aux.p_v_given_u.as_flat(),
        aux.p_q_given_v.as_flat(),
        (aux.u_size(), aux.v_size(), aux.q_size()),
    );
    let mut axes = vec![
        Axis::new(Q, aux.q_size()),
        Axis::new(V, aux.v_size()),
        Axis::new(U, aux.u_size()),
    ];
    axes.extend(joint.axes().iter().cloned());
    JointPmf::new(axes, table)
}

/// Raw `P(q|v) P(v|u) P(u|x̃) J(x̃, rest)` table, `rest` being the flattened
/// trailing axes of the source joint. Channels are flat row-major slices.
pub(crate) fn extended_table<F: Real>(
    source: &[F],
    nt: usize,
    pu: &[F],
    pv: &[F],
    pq: &[F],
    (nu, nv, nq): (usize, usize, usize),
) -> Vec<F> {
    let rest = source.len() / nt;
    let mut table = Vec::with_capacity(nq * nv * nu * source.len());
    for q in 0..nq {
        for v in 0..nv {
            let pqv = pq[v * nq + q];
            for u in 0..nu {
                let pvu = pqv * pv[u * nv + v];
                for t in 0..nt {
                    let w = pvu * pu[t * nu + u];
                    table.extend(source[t * rest..(t + 1) * rest].iter().map(|&p| w * p));
                }
            }
        }
    }
    table
}

/// `R' = min{I(U;Z|V,Q) - I(U;Y|V,Q), 0}`.
pub fn r_prime<F: Real>(full: &JointPmf<F>) -> Result<F> {
    let diff = InfoExpr::cmi(&[U], &[Z], &[V, Q]) - InfoExpr::cmi(&[U], &[Y], &[V, Q]);
    Ok(diff.value(full)?.min(F::zero()))
}

/// Marginal `p(u, x̃, y)` laid out `[u][x̃][y]`.
fn uty_table<F: Real>(joint: &JointPmf<F>) -> Result<(usize, usize, usize, Vec<F>)> {
    let m = joint.marginal(&[U, XT, Y])?;
    let names: Vec<&str> = m.axes().iter().map(|a| a.name.as_str()).collect();
    if names != [U, XT, Y] {
        return Err(Error::Dimension(format!(
            "expected axis order U, Xt, Y; got {names:?}"
        )));
    }
    let (nu, nt, ny) = (m.axes()[0].size, m.axes()[1].size, m.axes()[2].size);
    Ok((nu, nt, ny, m.table().to_vec()))
}

pub(crate) fn optimal_map_from_uty<F: Real>(
    nu: usize,
    nt: usize,
    ny: usize,
    uty: &[F],
    metric: &DistortionMetric<F>,
) -> (ReconstructionMap, F) {
    let nr = metric.reconstruction_size();
    let mut map = Vec::with_capacity(nu * ny);
    let mut total = F::zero();
    for u in 0..nu {
        for y in 0..ny {
            let mut best = (0usize, F::infinity());
            for xh in 0..nr {
                let cost: F = (0..nt)
                    .map(|t| uty[(u * nt + t) * ny + y] * metric.get(t, xh))
                    .sum();
                if cost < best.1 {
                    best = (xh, cost);
                }
            }
            map.push(best.0);
            total = total + best.1;
        }
    }
    (
        ReconstructionMap {
            u_size: nu,
            y_size: ny,
            table: map,
        },
        total,
    )
}

fn check_metric<F: Real>(nt: usize, metric: &DistortionMetric<F>) -> Result<()> {
    if metric.source_size() != nt {
        return Err(Error::Dimension(format!(
            "distortion metric has {} rows but |X~| = {nt}",
            metric.source_size()
        )));
    }
    Ok(())
}

/// Bayes-optimal decoder map `x̂(u,y) = argmin E[d(X̃, x̂) | u, y]` (smallest
/// index on ties) and its expected distortion. Works on any joint holding
/// `U`, `Xt`, `Y` in that relative order.
pub fn optimal_reconstruction<F: Real>(
    full: &JointPmf<F>,
    metric: &DistortionMetric<F>,
) -> Result<(ReconstructionMap, F)> {
    let (nu, nt, ny, uty) = uty_table(full)?;
    check_metric(nt, metric)?;
    Ok(optimal_map_from_uty(nu, nt, ny, &uty, metric))
}

/// Expected distortion of a given decoder map.
pub fn distortion_of_map<F: Real>(
    full: &JointPmf<F>,
    metric: &DistortionMetric<F>,
    map: &ReconstructionMap,
) -> Result<F> {
    let (nu, nt, ny, uty) = uty_table(full)?;
    check_metric(nt, metric)?;
    if map.u_size != nu || map.y_size != ny {
        return Err(Error::Dimension("reconstruction map shape".into()));
    }
    if map.table.iter().any(|&x| x >= metric.reconstruction_size()) {
        return Err(Error::Dimension("reconstruction symbol out of range".into()));
    }
    let mut total = F::zero();
    for u in 0..nu {
        for t in 0..nt {
            for y in 0..ny {
                total = total + uty[(u * nt + t) * ny + y] * metric.get(t, map.get(u, y));
            }
        }
    }
    Ok(total)
}

/// The information terms of the lossy bounds, evaluated once.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LossyTerms<F> {
    pub rw: F,
    pub low: F,
    pub rp_raw: F,
    pub u_xt_z: F,
    pub u_x_z: F,
    pub v_xt_z: F,
    pub v_x_z: F,
}

pub(crate) fn lossy_exprs<F: Real>() -> [InfoExpr<F>; 7] {
    [
        InfoExpr::cmi(&[U], &[XT], &[Y]),
        InfoExpr::cmi(&[U], &[XT], &[Y, V]),
        InfoExpr::cmi(&[U], &[Z], &[V, Q]) - InfoExpr::cmi(&[U], &[Y], &[V, Q]),
        InfoExpr::cmi(&[U], &[XT], &[Z]),
        InfoExpr::cmi(&[U], &[X], &[Z]),
        InfoExpr::cmi(&[V], &[XT], &[Z]),
        InfoExpr::cmi(&[V], &[X], &[Z]),
    ]
}

impl<F: Real> LossyTerms<F> {
    pub fn from_values(v: [F; 7]) -> Self {
        Self {
            rw: v[0],
            low: v[1],
            rp_raw: v[2],
            u_xt_z: v[3],
            u_x_z: v[4],
            v_xt_z: v[5],
            v_x_z: v[6],
        }
    }

    pub fn report(&self, r0: F, d: F) -> RegimeReport<F> {
        let r_prime = self.rp_raw.min(F::zero());
        let low = nonneg(self.low);
        let high = nonneg(self.rw);
        let regime = Regime::select(r0, low, high);
        let (rs, rl) = match regime {
            Regime::SmallKey => (
                nonneg(self.u_xt_z + r_prime - r0),
                nonneg(self.u_x_z + r_prime - r0),
            ),
            Regime::MiddleKey => (nonneg(self.v_xt_z), nonneg(self.v_x_z)),
            Regime::LargeKey => (F::zero(), F::zero()),
        };
        RegimeReport {
            regime,
            threshold_low: low,
            threshold_high: high,
            r_prime,
            bounds: RateTuple {
                rw: high,
                rs,
                rl,
                d: nonneg(d),
            },
        }
    }
}

fn lossy_terms<F: Real>(full: &JointPmf<F>) -> Result<LossyTerms<F>> {
    let exprs = lossy_exprs::<F>();
    let mut vals = [F::zero(); 7];
    for (v, e) in vals.iter_mut().zip(&exprs) {
        *v = e.value(full)?;
    }
    Ok(LossyTerms::from_values(vals))
}

/// Minimal rate tuple of the lossy region for the scheme embedded in `full`
/// (axes `Q, V, U, Xt, X, Y, Z`), with the optimal decoder map.
pub fn lossy_point<F: Real>(
    full: &JointPmf<F>,
    r0: F,
    metric: &DistortionMetric<F>,
) -> Result<RegimeReport<F>> {
    check_r0(r0)?;
    let (_, d) = optimal_reconstruction(full, metric)?;
    Ok(lossy_terms(full)?.report(r0, d))
}

/// Like [`lossy_point`] but scores the supplied decoder map.
pub fn lossy_point_with_reconstruction<F: Real>(
    full: &JointPmf<F>,
    r0: F,
    metric: &DistortionMetric<F>,
    map: &ReconstructionMap,
) -> Result<RegimeReport<F>> {
    check_r0(r0)?;
    let d = distortion_of_map(full, metric, map)?;
    Ok(lossy_terms(full)?.report(r0, d))
}

/// Builds the extended joint for `aux` and evaluates it, honouring the
/// scheme's own decoder map when it has one.
pub fn evaluate_scheme<F: Real>(
    joint: &JointPmf<F>,
    aux: &AuxScheme<F>,
    r0: F,
    metric: &DistortionMetric<F>,
) -> Result<RegimeReport<F>> {
    let full = extend_with_auxiliaries(joint, aux)?;
    match &aux.reconstruction {
        Some(map) => lossy_point_with_reconstruction(&full, r0, metric, map),
        None => lossy_point(&full, r0, metric),
    }
}

/// Lossless region point for `V` drawn from `X̃` and time sharing `Q` from
/// `V`. Evaluated directly on the `(Q, V, Xt, X, Y, Z)` joint.
pub fn lossless_point<F: Real>(
    joint: &JointPmf<F>,
    aux_v: &StochasticMatrix<F>,
    aux_q: &StochasticMatrix<F>,
    r0: F,
) -> Result<RegimeReport<F>> {
    check_r0(r0)?;
    check_source_axes(joint)?;
    let nt = joint.axes()[0].size;
    if aux_v.inputs() != nt || aux_q.inputs() != aux_v.outputs() {
        return Err(Error::Dimension(
            "lossless auxiliaries must chain X~ -> V -> Q".into(),
        ));
    }
    let limits = Cardinalities::lossless_default(nt);
    if aux_v.outputs() > limits.v || aux_q.outputs() > limits.q {
        return Err(Error::InvalidArgument(format!(
            "|V| = {} and |Q| = {} exceed limits {} and {}",
            aux_v.outputs(),
            aux_q.outputs(),
            limits.v,
            limits.q
        )));
    }
    let rest = joint.len() / nt;
    let (nq, nv) = (aux_q.outputs(), aux_v.outputs());
    let mut table = Vec::with_capacity(nq * nv * joint.len());
    for q in 0..nq {
        for v in 0..nv {
            for t in 0..nt {
                let w = aux_q.get(v, q) * aux_v.get(t, v);
                table.extend(joint.table()[t * rest..(t + 1) * rest].iter().map(|&p| w * p));
            }
        }
    }
    let mut axes = vec![Axis::new(Q, nq), Axis::new(V, nv)];
    axes.extend(joint.axes().iter().cloned());
    let full = JointPmf::new(axes, table)?;

    let h_xt_y = full.conditional_entropy(&[XT], &[Y])?;
    let h_xt_yv = full.conditional_entropy(&[XT], &[Y, V])?;
    let r_pp = (InfoExpr::cmi(&[XT], &[Z], &[V, Q]) - InfoExpr::cmi(&[XT], &[Y], &[V, Q]))
        .value(&full)?
        .min(F::zero());
    let regime = Regime::select(r0, h_xt_yv, h_xt_y);
    let (rs, rl) = match regime {
        Regime::SmallKey => (
            nonneg(full.conditional_entropy(&[XT], &[Z])? + r_pp - r0),
            nonneg(full.conditional_mutual_information(&[XT], &[X], &[Z])? + r_pp - r0),
        ),
        Regime::MiddleKey => (
            full.conditional_mutual_information(&[V], &[XT], &[Z])?,
            full.conditional_mutual_information(&[V], &[X], &[Z])?,
        ),
        Regime::LargeKey => (F::zero(), F::zero()),
    };
    Ok(RegimeReport {
        regime,
        threshold_low: h_xt_yv,
        threshold_high: h_xt_y,
        r_prime: r_pp,
        bounds: RateTuple {
            rw: h_xt_y,
            rs,
            rl,
            d: F::zero(),
        },
    })
}

/// `p(u, x̃, w) = P(u|x̃) p(x̃, w)` over axes `(U, Xt, w)`.
fn u_pair_joint<F: Real>(
    joint: &JointPmf<F>,
    aux_u: &StochasticMatrix<F>,
    other: &str,
) -> Result<JointPmf<F>> {
    let pair = joint.marginal(&[XT, other])?;
    let (nt, nw) = (pair.axes()[0].size, pair.axes()[1].size);
    if aux_u.inputs() != nt {
        return Err(Error::Dimension(format!(
            "P_U|X~ has {} inputs but |X~| = {nt}",
            aux_u.inputs()
        )));
    }
    let nu = aux_u.outputs();
    let mut table = Vec::with_capacity(nu * nt * nw);
    for u in 0..nu {
        for t in 0..nt {
            let w = aux_u.get(t, u);
            table.extend(pair.table()[t * nw..(t + 1) * nw].iter().map(|&p| w * p));
        }
    }
    JointPmf::new(
        vec![Axis::new(U, nu), Axis::new(XT, nt), Axis::new(other, nw)],
        table,
    )
}

/// Rate tuple of the less-noisy, keyless case:
/// `(I(U;X̃)-I(U;Y), I(U;X̃)-I(U;Z), I(U;X)-I(U;Z), D)`. Only pairwise joints
/// of `U` with each observation are formed, so large quantized alphabets stay
/// cheap.
pub fn corollary_point<F: Real>(
    joint: &JointPmf<F>,
    aux_u: &StochasticMatrix<F>,
    metric: &DistortionMetric<F>,
) -> Result<RateTuple<F>> {
    check_source_axes(joint)?;
    let uty = u_pair_joint(joint, aux_u, Y)?;
    let utx = u_pair_joint(joint, aux_u, X)?;
    let utz = u_pair_joint(joint, aux_u, Z)?;
    let i_u_xt = uty.mutual_information(&[U], &[XT])?;
    let i_u_y = uty.mutual_information(&[U], &[Y])?;
    let i_u_z = utz.mutual_information(&[U], &[Z])?;
    let i_u_x = utx.mutual_information(&[U], &[X])?;
    let (_, d) = optimal_reconstruction(&uty, metric)?;
    Ok(RateTuple {
        rw: nonneg(i_u_xt - i_u_y),
        rs: nonneg(i_u_xt - i_u_z),
        rl: nonneg(i_u_x - i_u_z),
        d,
    })
}

/// Conditional mutual informations that vanish exactly when the extended
/// joint factorizes as `(Q,V) - U - X̃ - X - (Y,Z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCertificate<F> {
    /// `I(Q,V; X̃,X,Y,Z | U)`
    pub qv_through_u: F,
    /// `I(Q,V; X,Y,Z | U,X̃)`
    pub qv_through_u_xt: F,
    /// `I(U; X,Y,Z | X̃)`
    pub u_through_xt: F,
}

impl<F: Real> MarkovCertificate<F> {
    pub fn max(&self) -> F {
        self.qv_through_u
            .max(self.qv_through_u_xt)
            .max(self.u_through_xt)
    }
}

pub fn markov_certificate<F: Real>(full: &JointPmf<F>) -> Result<MarkovCertificate<F>> {
    Ok(MarkovCertificate {
        qv_through_u: full.conditional_mutual_information(&[Q, V], &[XT, X, Y, Z], &[U])?,
        qv_through_u_xt: full.conditional_mutual_information(&[Q, V], &[X, Y, Z], &[U, XT])?,
        u_through_xt: full.conditional_mutual_information(&[U], &[X, Y, Z], &[XT])?,
    })
}
