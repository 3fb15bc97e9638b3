//! Fitting models to target mappings and to data.
//!
//! Every fit scans a coarse set of candidate parameters (a full grid for one
//! or two parameters, a Latin hypercube otherwise, plus the naive
//! parameter), then refines the best candidates with bounded Nelder-Mead.
//! Refinement runs in the unit cube and is mapped affinely onto the box.

pub mod nelder_mead;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;
use crate::problem::{check_kind_matches, discrepancy, Dataset, Mapping, Menu, Outcome, ProblemKind};
use crate::stats::substream;

use nelder_mead::{lex_cmp, NmOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub n_starts: usize,
    pub max_iters: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    /// Grid points per axis for models with one or two parameters.
    pub grid_points: usize,
    /// Latin-hypercube size for models with three or more parameters.
    pub lhs_points: usize,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { n_starts: 20, max_iters: 500, x_tol: 1e-6, f_tol: 1e-9, grid_points: 200, lhs_points: 2000, seed: 0 }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 || self.max_iters == 0 || self.grid_points < 2 || self.lhs_points == 0 {
            return Err(Error::Config("optimizer counts must be positive (grid_points >= 2)".into()));
        }
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(Error::Config("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta: Vec<f64>,
    /// Objective at `theta`: the discrepancy or the empirical error.
    pub value: f64,
    pub mapping: Mapping,
}

struct Unit<'a> {
    bounds: &'a [(f64, f64)],
}

impl Unit<'_> {
    fn theta(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.bounds).map(|(x, (lo, hi))| lo + x.clamp(0.0, 1.0) * (hi - lo)).collect()
    }

    fn unit(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.bounds)
            .map(|(t, (lo, hi))| if hi > lo { ((t - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 })
            .collect()
    }
}

fn candidates(dim: usize, cfg: &OptConfig) -> (Vec<Vec<f64>>, f64) {
    if dim <= 2 {
        let g = cfg.grid_points;
        let axis: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
        let points = if dim == 1 {
            axis.iter().map(|&x| vec![x]).collect()
        } else {
            axis.iter().flat_map(|&x| axis.iter().map(move |&y| vec![x, y])).collect()
        };
        (points, 2.0 / (g - 1) as f64)
    } else {
        let n = cfg.lhs_points;
        let mut rng = substream(cfg.seed, u64::MAX);
        let mut columns = Vec::with_capacity(dim);
        for _ in 0..dim {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            columns.push(perm.into_iter().map(|k| (k as f64 + rng.random::<f64>()) / n as f64).collect::<Vec<_>>());
        }
        let points = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        let spacing = (n as f64).powf(-1.0 / dim as f64);
        (points, (2.0 * spacing).min(0.25))
    }
}

/// Minimizes `objective(f_theta)` over the model's parameter box.
pub fn minimize_over_model<F>(model: &dyn Model, menu: &Menu, objective: F, cfg: &OptConfig) -> Result<FitResult>
where
    F: Fn(&Mapping) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let bounds = model.bounds();
    let unit = Unit { bounds: &bounds };
    let eval = |u: &[f64]| -> Result<f64> {
        let mapping = model.predict(&unit.theta(u), menu)?;
        let v = objective(&mapping)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    if bounds.is_empty() {
        let mapping = model.predict(&[], menu)?;
        let value = objective(&mapping)?;
        return Ok(FitResult { theta: vec![], value, mapping });
    }

    let (mut points, step) = candidates(bounds.len(), cfg);
    points.push(unit.unit(&model.naive_params()));
    let evaluated: Vec<(Vec<f64>, Result<f64>)> = points
        .into_par_iter()
        .map(|u| {
            let v = eval(&u);
            (u, v)
        })
        .collect();

    let mut first_error = None;
    let mut scored = Vec::with_capacity(evaluated.len());
    for (u, v) in evaluated {
        match v {
            Ok(v) if v.is_finite() => scored.push((u, v)),
            Ok(_) => {}
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if scored.is_empty() {
        return Err(first_error.unwrap_or(Error::NonFinite));
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)));
    scored.truncate(cfg.n_starts);

    let opts = NmOptions { initial_step: step, max_iters: cfg.max_iters, x_tol: cfg.x_tol, f_tol: cfg.f_tol };
    let refined: Vec<(Vec<f64>, f64)> = scored
        .par_iter()
        .map(|(u0, _)| {
            let r = nelder_mead::minimize(|u| eval(u).unwrap_or(f64::INFINITY), u0, opts);
            (r.x, r.f)
        })
        .collect();

    let (u, value) = refined
        .into_iter()
        .chain(scored)
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)))
        .expect("at least one finite start");
    let theta = unit.theta(&u);
    let mapping = model.predict(&theta, menu)?;
    Ok(FitResult { theta, value, mapping })
}

/// Best approximation `inf_theta d(target, f_theta)` of a target mapping.
pub fn fit_model_to_mapping(
    model: &dyn Model,
    target: &Mapping,
    kind: ProblemKind,
    menu: &Menu,
    cfg: &OptConfig,
) -> Result<FitResult> {
    check_kind_matches(kind, target)?;
    if model.kind().uses_simplex() != kind.uses_simplex() {
        return Err(Error::KindMismatch(kind));
    }
    if target.len() != menu.len() {
        return Err(Error::MenuMismatch { expected: menu.len(), got: target.len() });
    }
    if let Some(theta) = model.exact_fit(target, menu) {
        let mapping = model.predict(&theta, menu)?;
        let value = discrepancy(kind, target, &mapping, menu.weights())?;
        return Ok(FitResult { theta, value, mapping });
    }
    minimize_over_model(model, menu, |f| discrepancy(kind, target, f, menu.weights()), cfg)
}

/// Per-item sufficient statistics for the empirical error of a mapping.
#[derive(Debug, Clone)]
pub struct DataObjective {
    kind: ProblemKind,
    n: usize,
    stats: ItemStats,
}

#[derive(Debug, Clone)]
enum ItemStats {
    /// (count, sum, sum of squares)
    Moments(Vec<(f64, f64, f64)>),
    Counts(Vec<[f64; 3]>),
    Values(Vec<Vec<f64>>),
}

impl DataObjective {
    pub fn new(data: &Dataset, kind: ProblemKind, menu_len: usize) -> Result<Self> {
        let stats = match kind {
            ProblemKind::ConditionalMean => {
                let mut m = vec![(0.0, 0.0, 0.0); menu_len];
                for obs in data.observations() {
                    let y = value_of(kind, obs.outcome)?;
                    let s = &mut m[obs.item];
                    s.0 += 1.0;
                    s.1 += y;
                    s.2 += y * y;
                }
                ItemStats::Moments(m)
            }
            ProblemKind::ConditionalDistribution => ItemStats::Counts(action_counts(data, kind, menu_len)?),
            ProblemKind::ConditionalMedian => {
                let mut v = vec![Vec::new(); menu_len];
                for obs in data.observations() {
                    v[obs.item].push(value_of(kind, obs.outcome)?);
                }
                ItemStats::Values(v)
            }
        };
        Ok(Self { kind, n: data.len(), stats })
    }

    /// Empirical error of `mapping` on the data.
    pub fn error(&self, mapping: &Mapping) -> Result<f64> {
        check_kind_matches(self.kind, mapping)?;
        let total: f64 = match (&self.stats, mapping) {
            (ItemStats::Moments(m), Mapping::Scalar(f)) => {
                m.iter().zip(f).map(|((n, s, q), f)| n * f * f - 2.0 * f * s + q).sum::<f64>().max(0.0)
            }
            (ItemStats::Counts(c), Mapping::Simplex(p)) => {
                let mut t = 0.0;
                for (item, (c, p)) in c.iter().zip(p).enumerate() {
                    for a in 0..3 {
                        if c[a] > 0.0 {
                            if p[a] <= 0.0 {
                                return Err(Error::ZeroLikelihood { item, action: a });
                            }
                            t -= c[a] * p[a].ln();
                        }
                    }
                }
                t
            }
            (ItemStats::Values(v), Mapping::Scalar(f)) => {
                v.iter().zip(f).map(|(ys, f)| ys.iter().map(|y| (y - f).abs()).sum::<f64>()).sum()
            }
            _ => return Err(Error::KindMismatch(self.kind)),
        };
        Ok(total / self.n as f64)
    }
}

fn value_of(kind: ProblemKind, outcome: Outcome) -> Result<f64> {
    match outcome {
        Outcome::Value(v) => Ok(v),
        Outcome::Action(_) => Err(Error::KindMismatch(kind)),
    }
}

fn action_counts(data: &Dataset, kind: ProblemKind, menu_len: usize) -> Result<Vec<[f64; 3]>> {
    let mut c = vec![[0.0; 3]; menu_len];
    for obs in data.observations() {
        match obs.outcome {
            Outcome::Action(a) => c[obs.item][a] += 1.0,
            Outcome::Value(_) => return Err(Error::KindMismatch(kind)),
        }
    }
    Ok(c)
}

/// Parameter minimizing the empirical error on `train`.
pub fn fit_model_to_data(
    model: &dyn Model,
    menu: &Menu,
    train: &Dataset,
    kind: ProblemKind,
    cfg: &OptConfig,
) -> Result<FitResult> {
    if model.kind().uses_simplex() != kind.uses_simplex() {
        return Err(Error::KindMismatch(kind));
    }
    let objective = DataObjective::new(train, kind, menu.len())?;
    minimize_over_model(model, menu, |f| objective.error(f), cfg)
}

/// Best mapping among all mappings for the training data.
///
/// Per-item sample means, add-`smoothing` action frequencies, or lower
/// sample medians. Items absent from `train` get the global mean, the
/// smoothed pooled frequencies, or the global median.
pub fn fit_unrestricted(menu_len: usize, train: &Dataset, kind: ProblemKind, smoothing: f64) -> Result<Mapping> {
    if train.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    match kind {
        ProblemKind::ConditionalMean => {
            let mut sums = vec![(0.0, 0usize); menu_len];
            let mut total = 0.0;
            for obs in train.observations() {
                let y = value_of(kind, obs.outcome)?;
                sums[obs.item].0 += y;
                sums[obs.item].1 += 1;
                total += y;
            }
            let global = total / train.len() as f64;
            Mapping::scalar(sums.iter().map(|&(s, n)| if n > 0 { s / n as f64 } else { global }).collect())
        }
        ProblemKind::ConditionalDistribution => {
            if !(smoothing >= 0.0 && smoothing.is_finite()) {
                return Err(Error::Config(format!("smoothing must be nonnegative, got {smoothing}")));
            }
            let counts = action_counts(train, kind, menu_len)?;
            let mut pooled = [smoothing; 3];
            for c in &counts {
                for a in 0..3 {
                    pooled[a] += c[a];
                }
            }
            let normalize = |c: [f64; 3]| {
                let s: f64 = c.iter().sum();
                c.map(|x| x / s)
            };
            let pooled = normalize(pooled);
            Mapping::simplex(
                counts
                    .iter()
                    .map(|c| if c.iter().sum::<f64>() == 0.0 { pooled } else { normalize(c.map(|x| x + smoothing)) })
                    .collect(),
            )
        }
        ProblemKind::ConditionalMedian => {
            let mut values = vec![Vec::new(); menu_len];
            let mut all = Vec::with_capacity(train.len());
            for obs in train.observations() {
                let y = value_of(kind, obs.outcome)?;
                values[obs.item].push(y);
                all.push(y);
            }
            let global = lower_median(&mut all);
            Mapping::scalar(values.iter_mut().map(|v| if v.is_empty() { global } else { lower_median(v) }).collect())
        }
    }
}

fn lower_median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}
