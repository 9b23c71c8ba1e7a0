//! Numerical search over auxiliary schemes for points on the region boundary.
//!
//! Each target distortion `D` is handled by an augmented Lagrangian on the
//! constraint `E[d] <= D`, minimized by cyclic projected gradient steps over
//! the row blocks of `P_U|X̃`, `P_V|U` and `P_Q|V`. Several starts are run in
//! parallel and the best feasible result is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{
    extended_table, lossy_exprs, optimal_map_from_uty, AuxScheme, Cardinalities, DistortionMetric,
    LossyTerms, RateTuple, ReconstructionMap, Regime, RegimeReport,
};
use crate::error::{Error, Result};
use crate::joint::{vars::*, Axis, CompiledExpr, Projector};
use crate::pmf::StochasticMatrix;
use crate::scalar::Real;
use crate::source::{build_joint, SourceModel};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EC2_E60D;

const GRID_LIMIT: usize = 20_000_000;
const GRADIENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Multi-start projected descent.
    Descent,
    /// Exhaustive enumeration of `P_U|X̃` rows on a simplex grid, `V` and `Q`
    /// constant.
    Grid,
}

/// Weights of the minimized combination `a*rw + b*rs + c*rl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalarization<F> {
    pub rw: F,
    pub rs: F,
    pub rl: F,
}

impl<F: Real> Default for Scalarization<F> {
    fn default() -> Self {
        Self {
            rw: F::one(),
            rs: F::zero(),
            rl: F::zero(),
        }
    }
}

impl<F: Real> Scalarization<F> {
    pub fn value(&self, t: &RateTuple<F>) -> F {
        self.rw * t.rw + self.rs * t.rs + self.rl * t.rl
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig<F> {
    /// Random starts per target, in addition to the deterministic ones.
    pub restarts: usize,
    /// Simplex grid step in [`SearchMode::Grid`].
    pub grid_step: F,
    /// Block sweeps per multiplier update.
    pub max_iters: usize,
    pub convergence_tol: F,
    pub seed: u64,
    /// Auxiliary sizes; `None` uses the sufficient bounds.
    pub cardinalities: Option<Cardinalities>,
    pub mode: SearchMode,
    pub scalarization: Scalarization<F>,
    /// Replace the traced values by their lower convex envelope in `D`.
    pub convexify: bool,
}

impl<F: Real> Default for SearchConfig<F> {
    fn default() -> Self {
        Self {
            restarts: 8,
            grid_step: F::lit(0.05),
            max_iters: 400,
            convergence_tol: F::lit(1e-11),
            seed: DEFAULT_SEED,
            cardinalities: None,
            mode: SearchMode::Descent,
            scalarization: Scalarization::default(),
            convexify: false,
        }
    }
}

impl<F: Real> SearchConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        if !(self.grid_step > F::zero() && self.grid_step <= F::lit(0.5)) {
            return Err(Error::InvalidArgument(format!(
                "grid_step {} outside (0, 0.5]",
                self.grid_step
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol <= F::zero() {
            return Err(Error::InvalidArgument("convergence_tol must be > 0".into()));
        }
        let w = self.scalarization;
        if [w.rw, w.rs, w.rl].iter().any(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::InvalidArgument("scalarization weights must be >= 0".into()));
        }
        if let Some(c) = self.cardinalities {
            if c.u == 0 || c.v == 0 || c.q == 0 {
                return Err(Error::InvalidArgument("cardinalities must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Convex combination of two traced points, `(1-weight)*lower + weight*upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSharing<F> {
    pub lower: usize,
    pub upper: usize,
    pub weight: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint<F> {
    pub target: F,
    pub report: RegimeReport<F>,
    pub objective: F,
    /// Minimizing scheme with its decoder map.
    pub scheme: AuxScheme<F>,
    /// Set when `convexify` replaced this point by a mixture of two others
    /// (indices into the returned list).
    pub time_sharing: Option<TimeSharing<F>>,
}

/// Flat rows of the three auxiliary channels.
#[derive(Debug, Clone)]
struct Rows<F> {
    pu: Vec<F>,
    pv: Vec<F>,
    pq: Vec<F>,
}

struct Evaluation<F> {
    table: Vec<F>,
    terms: LossyTerms<F>,
    map: ReconstructionMap,
    d: F,
    report: RegimeReport<F>,
    objective: F,
}

/// The fixed shape of one search problem.
struct Problem<F> {
    nq: usize,
    nv: usize,
    nu: usize,
    nt: usize,
    ny: usize,
    rest: usize,
    source: Vec<F>,
    exprs: Vec<CompiledExpr<F>>,
    uty: Projector,
    metric: DistortionMetric<F>,
    r0: F,
    weights: Scalarization<F>,
    floor: F,
}

impl<F: Real> Problem<F> {
    fn new(
        source_axes: &[Axis],
        source: &[F],
        sizes: Cardinalities,
        metric: &DistortionMetric<F>,
        r0: F,
        weights: Scalarization<F>,
    ) -> Result<Self> {
        let nt = source_axes[0].size;
        let ny = source_axes[2].size;
        let mut axes = vec![
            Axis::new(Q, sizes.q),
            Axis::new(V, sizes.v),
            Axis::new(U, sizes.u),
        ];
        axes.extend(source_axes.iter().cloned());
        let exprs = lossy_exprs::<F>()
            .iter()
            .map(|e| e.compile(&axes))
            .collect::<Result<Vec<_>>>()?;
        if metric.source_size() != nt {
            return Err(Error::Dimension(format!(
                "distortion metric has {} rows but |X~| = {nt}",
                metric.source_size()
            )));
        }
        Ok(Self {
            nq: sizes.q,
            nv: sizes.v,
            nu: sizes.u,
            nt,
            ny,
            rest: source.len() / nt,
            source: source.to_vec(),
            exprs,
            uty: Projector::new(&axes, &[U, XT, Y])?,
            metric: metric.clone(),
            r0,
            weights,
            floor: F::lit(GRADIENT_FLOOR),
        })
    }

    fn evaluate(&self, rows: &Rows<F>) -> Evaluation<F> {
        let table = extended_table(
            &self.source,
            self.nt,
            &rows.pu,
            &rows.pv,
            &rows.pq,
            (self.nu, self.nv, self.nq),
        );
        let mut vals = [F::zero(); 7];
        for (v, e) in vals.iter_mut().zip(&self.exprs) {
            *v = e.value(&table);
        }
        let terms = LossyTerms::from_values(vals);
        let uty = self.uty.marginal(&table);
        let (map, d) = optimal_map_from_uty(self.nu, self.nt, self.ny, &uty, &self.metric);
        let report = terms.report(self.r0, d);
        let objective = self.weights.value(&report.bounds);
        Evaluation {
            table,
            terms,
            map,
            d,
            report,
            objective,
        }
    }

    fn lagrangian(&self, ev: &Evaluation<F>, target: F, lambda: F, rho: F) -> F {
        let shifted = (lambda + rho * (ev.d - target)).max(F::zero());
        ev.objective + (shifted * shifted - lambda * lambda) / (F::lit(2.0) * rho)
    }

    /// Gradients of the augmented Lagrangian with respect to the three row
    /// blocks.
    fn gradient(&self, rows: &Rows<F>, ev: &Evaluation<F>, mult: F) -> Rows<F> {
        let w = self.weights;
        let mut coef = [F::zero(); 7];
        coef[0] = w.rw;
        match ev.report.regime {
            Regime::SmallKey => {
                if ev.report.bounds.rs > F::zero() {
                    coef[3] = coef[3] + w.rs;
                    if ev.terms.rp_raw < F::zero() {
                        coef[2] = coef[2] + w.rs;
                    }
                }
                if ev.report.bounds.rl > F::zero() {
                    coef[4] = coef[4] + w.rl;
                    if ev.terms.rp_raw < F::zero() {
                        coef[2] = coef[2] + w.rl;
                    }
                }
            }
            Regime::MiddleKey => {
                coef[5] = w.rs;
                coef[6] = w.rl;
            }
            Regime::LargeKey => {}
        }
        let mut grad = vec![F::zero(); ev.table.len()];
        for (e, &c) in self.exprs.iter().zip(&coef) {
            if c != F::zero() {
                e.accumulate_gradient(&ev.table, c, self.floor, &mut grad);
            }
        }
        if mult > F::zero() {
            for (g, &m) in grad.iter_mut().zip(self.uty.map()) {
                let y = m % self.ny;
                let t = (m / self.ny) % self.nt;
                let u = m / (self.ny * self.nt);
                *g = *g + mult * self.metric.get(t, ev.map.get(u, y));
            }
        }

        // s[q,v,u,t] = sum over the source tail of grad * J(t, tail)
        let (nq, nv, nu, nt, rest) = (self.nq, self.nv, self.nu, self.nt, self.rest);
        let mut s = vec![F::zero(); nq * nv * nu * nt];
        for (k, sk) in s.iter_mut().enumerate() {
            let t = k % nt;
            let g = &grad[k * rest..(k + 1) * rest];
            let j = &self.source[t * rest..(t + 1) * rest];
            *sk = g.iter().zip(j).map(|(&a, &b)| a * b).sum();
        }
        let mut out = Rows {
            pu: vec![F::zero(); nt * nu],
            pv: vec![F::zero(); nu * nv],
            pq: vec![F::zero(); nv * nq],
        };
        for q in 0..nq {
            for v in 0..nv {
                let pqv = rows.pq[v * nq + q];
                for u in 0..nu {
                    let pvu = rows.pv[u * nv + v];
                    for t in 0..nt {
                        let sk = s[((q * nv + v) * nu + u) * nt + t];
                        let put = rows.pu[t * nu + u];
                        out.pu[t * nu + u] = out.pu[t * nu + u] + pqv * pvu * sk;
                        out.pv[u * nv + v] = out.pv[u * nv + v] + pqv * put * sk;
                        out.pq[v * nq + q] = out.pq[v * nq + q] + pvu * put * sk;
                    }
                }
            }
        }
        out
    }

    fn to_scheme(&self, rows: &Rows<F>, map: ReconstructionMap) -> Result<AuxScheme<F>> {
        let limits = Cardinalities {
            u: self.nu,
            v: self.nv,
            q: self.nq,
        };
        Ok(AuxScheme::with_limits(
            StochasticMatrix::from_flat(self.nt, self.nu, rows.pu.clone())?,
            StochasticMatrix::from_flat(self.nu, self.nv, rows.pv.clone())?,
            StochasticMatrix::from_flat(self.nv, self.nq, rows.pq.clone())?,
            limits,
        )?
        .with_reconstruction(map))
    }

    fn identity_rows(&self) -> Option<Rows<F>> {
        if self.nu < self.nt {
            return None;
        }
        let mut pu = vec![F::zero(); self.nt * self.nu];
        for t in 0..self.nt {
            pu[t * self.nu + t] = F::one();
        }
        Some(Rows {
            pu,
            pv: point_rows(self.nu, self.nv),
            pq: point_rows(self.nv, self.nq),
        })
    }

    fn constant_rows(&self) -> Rows<F> {
        Rows {
            pu: point_rows(self.nt, self.nu),
            pv: point_rows(self.nu, self.nv),
            pq: point_rows(self.nv, self.nq),
        }
    }

    fn random_rows(&self, rng: &mut ChaCha8Rng) -> Rows<F> {
        Rows {
            pu: dirichlet_rows(rng, self.nt, self.nu),
            pv: dirichlet_rows(rng, self.nu, self.nv),
            pq: dirichlet_rows(rng, self.nv, self.nq),
        }
    }
}

fn point_rows<F: Real>(inputs: usize, outputs: usize) -> Vec<F> {
    let mut r = vec![F::zero(); inputs * outputs];
    for i in 0..inputs {
        r[i * outputs] = F::one();
    }
    r
}

fn dirichlet_rows<F: Real>(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Vec<F> {
    let mut out = Vec::with_capacity(inputs * outputs);
    for _ in 0..inputs {
        let g: Vec<f64> = (0..outputs).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = g.iter().sum();
        out.extend(g.into_iter().map(|x| F::lit(x / s)));
    }
    out
}

/// Euclidean projection of `v` onto the probability simplex, in place.
pub fn project_to_simplex<F: Real>(v: &mut [F]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut css = F::zero();
    let mut theta = F::zero();
    for (j, &x) in sorted.iter().enumerate() {
        css = css + x;
        let t = (css - F::one()) / F::from_usize(j + 1).unwrap();
        if x - t > F::zero() {
            theta = t;
        }
    }
    let mut sum = F::zero();
    for x in v.iter_mut() {
        *x = (*x - theta).max(F::zero());
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

fn projected_step<F: Real>(x: &[F], g: &[F], step: F, width: usize) -> Vec<F> {
    let mut out: Vec<F> = x.iter().zip(g).map(|(&a, &b)| a - step * b).collect();
    for row in out.chunks_mut(width) {
        project_to_simplex(row);
    }
    out
}

enum Block {
    U,
    V,
    Q,
}

/// One start of the augmented-Lagrangian descent for target `target`.
fn descend<F: Real>(
    p: &Problem<F>,
    mut rows: Rows<F>,
    target: F,
    cfg: &SearchConfig<F>,
) -> Rows<F> {
    let mut lambda = F::zero();
    let mut rho = F::lit(20.0);
    let mut steps = [F::one(); 3];
    let mut last_violation = F::infinity();
    let armijo = F::lit(1e-4);
    for _outer in 0..40 {
        let mut ev = p.evaluate(&rows);
        let mut value = p.lagrangian(&ev, target, lambda, rho);
        for _ in 0..cfg.max_iters {
            let start_value = value;
            let mut moved = F::zero();
            for (bi, block) in [Block::U, Block::V, Block::Q].into_iter().enumerate() {
                let width = match block {
                    Block::U => p.nu,
                    Block::V => p.nv,
                    Block::Q => p.nq,
                };
                if width < 2 {
                    continue;
                }
                let mult = (lambda + rho * (ev.d - target)).max(F::zero());
                let grad = p.gradient(&rows, &ev, mult);
                let (x, g) = match block {
                    Block::U => (&rows.pu, &grad.pu),
                    Block::V => (&rows.pv, &grad.pv),
                    Block::Q => (&rows.pq, &grad.pq),
                };
                let mut step = steps[bi];
                let mut accepted = None;
                for _ in 0..50 {
                    let cand = projected_step(x, g, step, width);
                    let dir: F = cand
                        .iter()
                        .zip(x)
                        .zip(g)
                        .map(|((&c, &a), &gg)| (c - a) * gg)
                        .sum();
                    if dir >= F::zero() {
                        step = step * F::lit(0.5);
                        continue;
                    }
                    let mut trial = rows.clone();
                    match block {
                        Block::U => trial.pu = cand,
                        Block::V => trial.pv = cand,
                        Block::Q => trial.pq = cand,
                    }
                    let tev = p.evaluate(&trial);
                    let tval = p.lagrangian(&tev, target, lambda, rho);
                    if tval <= value + armijo * dir {
                        accepted = Some((trial, tev, tval));
                        break;
                    }
                    step = step * F::lit(0.5);
                }
                if let Some((trial, tev, tval)) = accepted {
                    let delta = match block {
                        Block::U => max_diff(&trial.pu, &rows.pu),
                        Block::V => max_diff(&trial.pv, &rows.pv),
                        Block::Q => max_diff(&trial.pq, &rows.pq),
                    };
                    moved = moved.max(delta);
                    rows = trial;
                    ev = tev;
                    value = tval;
                    steps[bi] = (step * F::lit(2.0)).min(F::lit(1e3));
                } else {
                    steps[bi] = F::lit(1e-3).max(step);
                }
            }
            let tol = cfg.convergence_tol * (F::one() + value.abs());
            if start_value - value <= tol && moved <= cfg.convergence_tol.sqrt() {
                break;
            }
        }
        let violation = (ev.d - target).max(F::zero());
        let new_lambda = (lambda + rho * (ev.d - target)).max(F::zero());
        let settled = (new_lambda - lambda).abs() <= F::lit(1e-9) * (F::one() + lambda);
        lambda = new_lambda;
        if violation <= F::lit(1e-12) && settled {
            break;
        }
        if violation > F::lit(0.25) * last_violation {
            rho = (rho * F::lit(4.0)).min(F::lit(1e8));
        }
        last_violation = violation;
    }
    rows
}

fn max_diff<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Pulls an infeasible start towards the identity-embedded `U` until the
/// distortion constraint holds. The returned point is always feasible when
/// the identity embedding is.
fn repair<F: Real>(p: &Problem<F>, rows: Rows<F>, target: F) -> Option<(Rows<F>, Evaluation<F>)> {
    let ev = p.evaluate(&rows);
    if ev.d <= target {
        return Some((rows, ev));
    }
    let id = p.identity_rows()?;
    let mix = |theta: F| {
        let mut r = rows.clone();
        for (a, &b) in r.pu.iter_mut().zip(&id.pu) {
            *a = (F::one() - theta) * *a + theta * b;
        }
        r
    };
    let mut hi = (F::one(), p.evaluate(&mix(F::one())));
    if hi.1.d > target {
        return None;
    }
    let mut lo = F::zero();
    for _ in 0..60 {
        let mid = (lo + hi.0) * F::lit(0.5);
        let e = p.evaluate(&mix(mid));
        if e.d <= target {
            hi = (mid, e);
        } else {
            lo = mid;
        }
    }
    Some((mix(hi.0), hi.1))
}

fn seeded_rng(seed: u64, target_index: usize, start: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((target_index as u64) << 32) | start as u64);
    rng
}

fn check_targets<F: Real>(targets: &[F]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no distortion targets".into()));
    }
    if let Some(t) = targets.iter().find(|t| !t.is_finite() || **t < F::zero()) {
        return Err(Error::InvalidArgument(format!("distortion target {t} must be >= 0")));
    }
    Ok(())
}

/// Ascending order of the targets, stable for equal values.
fn ascending<F: Real>(targets: &[F]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| targets[a].partial_cmp(&targets[b]).unwrap());
    order
}

struct Best<F> {
    rows: Rows<F>,
    ev: Evaluation<F>,
}

fn better<F: Real>(a: &Evaluation<F>, b: &Evaluation<F>) -> bool {
    a.objective < b.objective
}

fn finish<F: Real>(
    p: &Problem<F>,
    targets: &[F],
    best: Vec<Option<Best<F>>>,
    convexify: bool,
) -> Result<Vec<TracePoint<F>>> {
    let mut points = Vec::with_capacity(targets.len());
    for (i, b) in best.into_iter().enumerate() {
        let b = b.ok_or_else(|| {
            Error::Infeasible(format!(
                "no auxiliary scheme of the given sizes reaches distortion {}",
                targets[i]
            ))
        })?;
        let scheme = p.to_scheme(&b.rows, b.ev.map.clone())?;
        points.push(TracePoint {
            target: targets[i],
            report: b.ev.report,
            objective: b.ev.objective,
            scheme,
            time_sharing: None,
        });
    }
    if convexify {
        apply_envelope(&mut points, &p.weights);
    }
    Ok(points)
}

fn apply_envelope<F: Real>(points: &mut [TracePoint<F>], w: &Scalarization<F>) {
    let order = ascending(&points.iter().map(|p| p.target).collect::<Vec<_>>());
    let xy: Vec<(F, F)> = order
        .iter()
        .map(|&i| (points[i].report.bounds.d, points[i].objective))
        .collect();
    let hull = lower_convex_envelope(&xy);
    for (k, &i) in order.iter().enumerate() {
        let target = points[i].target;
        // hull vertices with achieved distortion bracketing the target
        let Some(hi_pos) = hull.iter().position(|&h| xy[h].0 >= target) else { continue };
        if hi_pos == 0 || xy[hull[hi_pos]].0 == target {
            continue;
        }
        let (a, b) = (hull[hi_pos - 1], hull[hi_pos]);
        let (da, db) = (xy[a].0, xy[b].0);
        let theta = (target - da) / (db - da);
        let (pa, pb) = (order[a], order[b]);
        let mix = |x: F, y: F| (F::one() - theta) * x + theta * y;
        let ta = points[pa].report.bounds;
        let tb = points[pb].report.bounds;
        let mixed = RateTuple {
            rw: mix(ta.rw, tb.rw),
            rs: mix(ta.rs, tb.rs),
            rl: mix(ta.rl, tb.rl),
            d: mix(ta.d, tb.d),
        };
        let value = w.value(&mixed);
        if value < points[i].objective && k != a && k != b {
            points[i].report.bounds = mixed;
            points[i].objective = value;
            points[i].time_sharing = Some(TimeSharing {
                lower: pa,
                upper: pb,
                weight: theta,
            });
        }
    }
}

/// Indices of the vertices of the lower convex hull of points sorted by `x`.
pub fn lower_convex_envelope<F: Real>(points: &[(F, F)]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..points.len() {
        while hull.len() >= 2 {
            let (a, b) = (points[hull[hull.len() - 2]], points[hull[hull.len() - 1]]);
            let c = points[i];
            let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
            if cross <= F::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

fn source_parts<F: Real>(model: &SourceModel<F>) -> Result<(Vec<Axis>, Vec<F>)> {
    let joint = build_joint(model)?;
    Ok((joint.axes().to_vec(), joint.table().to_vec()))
}

/// For every target distortion, minimizes the configured scalarization of
/// the lossy bounds over auxiliary schemes meeting `E[d] <= D`. Results
/// follow the order of `targets` and are monotone: a larger target never
/// reports a larger objective.
pub fn trace_region<F: Real>(
    model: &SourceModel<F>,
    r0: F,
    metric: &DistortionMetric<F>,
    targets: &[F],
    cfg: &SearchConfig<F>,
) -> Result<Vec<TracePoint<F>>> {
    cfg.validate()?;
    check_targets(targets)?;
    if !r0.is_finite() || r0 < F::zero() {
        return Err(Error::InvalidArgument(format!("key rate r0 = {r0} must be >= 0")));
    }
    if cfg.mode == SearchMode::Grid {
        let nu = cfg.cardinalities.map_or(model.x_tilde_size(), |c| c.u);
        return grid_search(model, r0, metric, targets, nu, cfg);
    }
    let sizes = cfg
        .cardinalities
        .unwrap_or_else(|| Cardinalities::lossy_default(model.x_tilde_size()));
    let (axes, source) = source_parts(model)?;
    let p = Problem::new(&axes, &source, sizes, metric, r0, cfg.scalarization)?;

    let order = ascending(targets);
    let mut best: Vec<Option<Best<F>>> = (0..targets.len()).map(|_| None).collect();
    let mut warm: Option<Rows<F>> = None;
    let mut carried: Option<usize> = None;
    for (k, &i) in order.iter().enumerate() {
        let target = targets[i];
        let mut starts: Vec<Rows<F>> = Vec::new();
        starts.extend(p.identity_rows());
        starts.push(p.constant_rows());
        starts.extend(warm.clone());
        for r in 0..cfg.restarts {
            starts.push(p.random_rows(&mut seeded_rng(cfg.seed, k, r)));
        }
        let results: Vec<Option<(Rows<F>, Evaluation<F>)>> = starts
            .into_par_iter()
            .map(|s| {
                let out = descend(&p, s, target, cfg);
                repair(&p, out, target)
            })
            .collect();
        let mut pick: Option<Best<F>> = None;
        for (rows, ev) in results.into_iter().flatten() {
            if pick.as_ref().is_none_or(|b| better(&ev, &b.ev)) {
                pick = Some(Best { rows, ev });
            }
        }
        if let Some(prev) = carried.and_then(|j| best[j].as_ref()) {
            if pick.as_ref().is_none_or(|b| better(&prev.ev, &b.ev)) {
                pick = Some(Best {
                    rows: prev.rows.clone(),
                    ev: p.evaluate(&prev.rows),
                });
            }
        }
        if let Some(b) = &pick {
            warm = Some(b.rows.clone());
            carried = Some(i);
        }
        best[i] = pick;
    }
    finish(&p, targets, best, cfg.convexify)
}

/// All compositions of `total` into `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn grid_search<F: Real>(
    model: &SourceModel<F>,
    r0: F,
    metric: &DistortionMetric<F>,
    targets: &[F],
    nu: usize,
    cfg: &SearchConfig<F>,
) -> Result<Vec<TracePoint<F>>> {
    let steps = (F::one() / cfg.grid_step).round().to_usize().unwrap_or(0);
    if steps == 0 || (F::from_usize(steps).unwrap() * cfg.grid_step - F::one()).abs() > F::lit(1e-9) {
        return Err(Error::InvalidArgument(format!(
            "grid_step {} must divide 1",
            cfg.grid_step
        )));
    }
    let nt = model.x_tilde_size();
    let per_row = binomial(steps + nu - 1, nu - 1);
    let total = (0..nt).try_fold(1usize, |acc, _| acc.checked_mul(per_row));
    if total.is_none_or(|t| t > GRID_LIMIT) {
        return Err(Error::InvalidArgument(format!(
            "grid of {per_row}^{nt} schemes is too large to enumerate"
        )));
    }
    let total = total.unwrap();
    let scale = F::one() / F::from_usize(steps).unwrap();
    let rows: Vec<Vec<F>> = compositions(steps, nu)
        .into_iter()
        .map(|c| c.into_iter().map(|k| F::from_usize(k).unwrap() * scale).collect())
        .collect();
    let (axes, source) = source_parts(model)?;
    let sizes = Cardinalities { u: nu, v: 1, q: 1 };
    let p = Problem::new(&axes, &source, sizes, metric, r0, cfg.scalarization)?;
    let decode = |mut idx: usize| {
        let mut pu = Vec::with_capacity(nt * nu);
        for _ in 0..nt {
            pu.extend_from_slice(&rows[idx % per_row]);
            idx /= per_row;
        }
        Rows {
            pu,
            pv: vec![F::one(); nu],
            pq: vec![F::one()],
        }
    };
    // per target: (objective, enumeration index) of the best feasible scheme
    let init = || vec![None::<(F, usize)>; targets.len()];
    let winners = (0..total)
        .into_par_iter()
        .fold(init, |mut acc, idx| {
            let ev = p.evaluate(&decode(idx));
            for (slot, &t) in acc.iter_mut().zip(targets) {
                if ev.d <= t && slot.is_none_or(|(v, _)| ev.objective < v) {
                    *slot = Some((ev.objective, idx));
                }
            }
            acc
        })
        .reduce(init, |a, b| {
            a.into_iter()
                .zip(b)
                .map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => Some(if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x }),
                    (x, None) => x,
                    (None, y) => y,
                })
                .collect()
        });
    let best = winners
        .into_iter()
        .map(|w| {
            w.map(|(_, idx)| {
                let rows = decode(idx);
                let ev = p.evaluate(&rows);
                Best { rows, ev }
            })
        })
        .collect();
    finish(&p, targets, best, cfg.convexify)
}

/// Exhaustive minimization over `P_U|X̃` rows on the simplex grid of step
/// `step`, with `V` and `Q` constant.
pub fn grid_oracle<F: Real>(
    model: &SourceModel<F>,
    r0: F,
    metric: &DistortionMetric<F>,
    targets: &[F],
    u_size: usize,
    step: F,
) -> Result<Vec<TracePoint<F>>> {
    let cfg = SearchConfig {
        grid_step: step,
        mode: SearchMode::Grid,
        cardinalities: Some(Cardinalities {
            u: u_size,
            v: 1,
            q: 1,
        }),
        ..SearchConfig::default()
    };
    trace_region(model, r0, metric, targets, &cfg)
}
