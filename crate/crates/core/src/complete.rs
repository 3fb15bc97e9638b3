//! Completeness: the share of the achievable out-of-sample improvement over
//! the naive mapping that a model attains, estimated by K-fold cross-validation.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_model_to_data, fit_unrestricted, OptConfig};
use crate::models::{naive_mapping, Model};
use crate::problem::{pointwise_loss, Dataset, Mapping, Menu, Observation, Outcome, ProblemKind};
use crate::restrict::f_discrepancy;
use crate::stats::{mean, normal_interval, sample_variance, substream};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_SMOOTHING: f64 = 0.5;
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Fold index of every observation, in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<usize>,
}

fn cmp_outcome(a: &Outcome, b: &Outcome) -> Ordering {
    match (a, b) {
        (Outcome::Value(x), Outcome::Value(y)) => x.total_cmp(y),
        (Outcome::Action(x), Outcome::Action(y)) => x.cmp(y),
        (Outcome::Value(_), Outcome::Action(_)) => Ordering::Less,
        (Outcome::Action(_), Outcome::Value(_)) => Ordering::Greater,
    }
}

fn cmp_observation(a: &Observation, b: &Observation) -> Ordering {
    a.item.cmp(&b.item).then_with(|| cmp_outcome(&a.outcome, &b.outcome)).then_with(|| a.group.cmp(&b.group))
}

impl FoldAssignment {
    /// Folds of sizes differing by at most one. Observations are put in a
    /// canonical order before the seeded shuffle, so the multiset of fold
    /// contents does not depend on the input row order.
    pub fn new(data: &Dataset, k: usize, seed: u64) -> Result<Self> {
        let n = data.len();
        if k < 2 || k > n {
            return Err(Error::InsufficientData(format!("need N >= K >= 2, got N = {n}, K = {k}")));
        }
        let obs = data.observations();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| cmp_observation(&obs[i], &obs[j]));
        order.shuffle(&mut substream(seed, 0));
        let mut folds = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            folds[i] = pos % k;
        }
        Ok(Self { k, seed, folds })
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }
}

/// What is refit on each training fold.
#[derive(Clone, Copy)]
pub enum Family<'a> {
    Model(&'a dyn Model),
    /// All mappings: per-item means, smoothed frequencies or medians.
    Unrestricted {
        smoothing: f64,
    },
    Naive,
}

impl Family<'_> {
    pub fn label(&self) -> String {
        match self {
            Family::Model(m) => m.id(),
            Family::Unrestricted { .. } => "unrestricted".into(),
            Family::Naive => "naive".into(),
        }
    }

    fn fit(&self, menu: &Menu, train: &Dataset, kind: ProblemKind, cfg: &OptConfig) -> Result<Mapping> {
        match self {
            Family::Model(m) => Ok(fit_model_to_data(*m, menu, train, kind, cfg)?.mapping),
            Family::Unrestricted { smoothing } => fit_unrestricted(menu.len(), train, kind, *smoothing),
            Family::Naive => naive_mapping(menu),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub cv: f64,
    /// Test loss of every observation, in dataset order.
    pub losses: Vec<f64>,
    pub fold_errors: Vec<f64>,
    pub fitted: Vec<Mapping>,
}

/// K-fold cross-validated error of a family under a fixed fold assignment.
pub fn kfold_cv(
    family: Family<'_>,
    menu: &Menu,
    data: &Dataset,
    kind: ProblemKind,
    folds: &FoldAssignment,
    cfg: &OptConfig,
) -> Result<CvResult> {
    if folds.folds.len() != data.len() {
        return Err(Error::Config("fold assignment does not match the dataset".into()));
    }
    let per_fold = (0..folds.k)
        .into_par_iter()
        .map(|k| {
            let test = folds.test_indices(k);
            if test.is_empty() {
                return Err(Error::InsufficientData(format!("fold {k} is empty")));
            }
            let train = data.subset(&folds.train_indices(k));
            let fitted = family.fit(menu, &train, kind, cfg)?;
            let losses = test
                .iter()
                .map(|&i| {
                    let obs = &data.observations()[i];
                    pointwise_loss(kind, fitted.get(obs.item), obs.outcome).map_err(|e| match e {
                        Error::ZeroLikelihood { action, .. } => Error::ZeroLikelihood { item: obs.item, action },
                        other => other,
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((test, losses, fitted))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut losses = vec![0.0; data.len()];
    let mut fold_errors = Vec::with_capacity(folds.k);
    let mut fitted = Vec::with_capacity(folds.k);
    for (test, fold_losses, f) in per_fold {
        fold_errors.push(mean(&fold_losses));
        for (i, l) in test.into_iter().zip(fold_losses) {
            losses[i] = l;
        }
        fitted.push(f);
    }
    Ok(CvResult { cv: mean(&fold_errors), losses, fold_errors, fitted })
}

/// `(cv_naive - cv_model) / (cv_naive - cv_unrestricted)`.
pub fn kappa_from_cvs(cv_naive: f64, cv_model: f64, cv_unrestricted: f64) -> Result<f64> {
    let denom = cv_naive - cv_unrestricted;
    if denom <= 0.0 {
        return Err(Error::NaiveNotWorse(denom));
    }
    Ok((cv_naive - cv_model) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDiagnostics {
    pub fold: usize,
    pub size: usize,
    pub error_model: f64,
    pub error_naive: f64,
    pub error_unrestricted: f64,
    pub mean_delta: f64,
    /// Sample variance of the loss differences, absent for folds of size one.
    pub var_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompleteReport {
    pub model: String,
    pub kind: ProblemKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub level: f64,
    pub smoothing: f64,
    pub cv_model: f64,
    pub cv_naive: f64,
    pub cv_unrestricted: f64,
    pub kappa_hat: f64,
    pub sigma_hat: f64,
    pub se: f64,
    pub ci: (f64, f64),
    pub folds: Vec<FoldDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompleteOptions {
    pub k: usize,
    pub seed: u64,
    pub level: f64,
    pub smoothing: f64,
}

impl Default for CompleteOptions {
    fn default() -> Self {
        Self { k: DEFAULT_K, seed: 0, level: 0.05, smoothing: DEFAULT_SMOOTHING }
    }
}

/// Completeness of a model, with the three CVs computed on shared folds.
pub fn estimate_completeness(
    model: &dyn Model,
    menu: &Menu,
    data: &Dataset,
    kind: ProblemKind,
    opts: &CompleteOptions,
    cfg: &OptConfig,
) -> Result<CompleteReport> {
    estimate_completeness_of(Family::Model(model), menu, data, kind, opts, cfg)
}

/// As [`estimate_completeness`], for any family.
pub fn estimate_completeness_of(
    family: Family<'_>,
    menu: &Menu,
    data: &Dataset,
    kind: ProblemKind,
    opts: &CompleteOptions,
    cfg: &OptConfig,
) -> Result<CompleteReport> {
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::Config(format!("level must be in (0, 1), got {}", opts.level)));
    }
    let folds = FoldAssignment::new(data, opts.k, opts.seed)?;
    let unrestricted = Family::Unrestricted { smoothing: opts.smoothing };
    let cv_naive = kfold_cv(Family::Naive, menu, data, kind, &folds, cfg)?;
    let cv_unr = kfold_cv(unrestricted, menu, data, kind, &folds, cfg)?;
    let cv_model = kfold_cv(family, menu, data, kind, &folds, cfg)?;
    let kappa_hat = kappa_from_cvs(cv_naive.cv, cv_model.cv, cv_unr.cv)?;

    let deltas: Vec<f64> = cv_model.losses.iter().zip(&cv_unr.losses).map(|(m, u)| m - u).collect();
    let mut diagnostics = Vec::with_capacity(folds.k);
    let mut variances = Vec::new();
    for k in 0..folds.k {
        let d: Vec<f64> = folds.test_indices(k).iter().map(|&i| deltas[i]).collect();
        let var = (d.len() >= 2).then(|| sample_variance(&d));
        variances.extend(var);
        diagnostics.push(FoldDiagnostics {
            fold: k,
            size: d.len(),
            error_model: cv_model.fold_errors[k],
            error_naive: cv_naive.fold_errors[k],
            error_unrestricted: cv_unr.fold_errors[k],
            mean_delta: mean(&d),
            var_delta: var,
        });
    }
    // with single-observation folds the within-fold variance is undefined;
    // fall back to the pooled variance of the differences
    let var_delta = if variances.is_empty() { sample_variance(&deltas) } else { mean(&variances) };
    let denom = cv_naive.cv - cv_unr.cv;
    let sigma_hat = var_delta.max(0.0).sqrt() / denom;
    let se = sigma_hat / (data.len() as f64).sqrt();
    Ok(CompleteReport {
        model: family.label(),
        kind,
        k: folds.k,
        n: data.len(),
        seed: opts.seed,
        level: opts.level,
        smoothing: opts.smoothing,
        cv_model: cv_model.cv,
        cv_naive: cv_naive.cv,
        cv_unrestricted: cv_unr.cv,
        kappa_hat,
        sigma_hat,
        se,
        ci: normal_interval(kappa_hat, se, opts.level),
        folds: diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltReport {
    pub model: String,
    pub delta_hat: f64,
    pub bootstrap_se: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
    pub d_model: f64,
    pub d_naive: f64,
}

/// Raw per-item estimate of the best mapping, with unseen items taken from `fallback`.
fn item_estimates(menu: &Menu, data: &Dataset, kind: ProblemKind, fallback: Option<&Mapping>) -> Result<Mapping> {
    let raw = fit_unrestricted(menu.len(), data, kind, 0.0)?;
    let counts = data.item_counts(menu.len());
    match fallback {
        None => {
            if let Some(i) = counts.iter().position(|c| *c == 0) {
                return Err(Error::InsufficientData(format!("menu item {} has no observations", menu.ids()[i])));
            }
            Ok(raw)
        }
        Some(full) => Ok(match (raw, full) {
            (Mapping::Scalar(v), Mapping::Scalar(f)) => Mapping::Scalar(
                v.into_iter().zip(f).zip(&counts).map(|((x, y), c)| if *c > 0 { x } else { *y }).collect(),
            ),
            (Mapping::Simplex(v), Mapping::Simplex(f)) => Mapping::Simplex(
                v.into_iter().zip(f).zip(&counts).map(|((x, y), c)| if *c > 0 { x } else { *y }).collect(),
            ),
            _ => return Err(Error::KindMismatch(kind)),
        }),
    }
}

/// f*-discrepancy of the model against the per-item sample estimate of the
/// best mapping, with a nonparametric bootstrap standard error.
#[allow(clippy::too_many_arguments)]
pub fn alt_fstar_discrepancy(
    model: &dyn Model,
    menu: &Menu,
    data: &Dataset,
    kind: ProblemKind,
    b: usize,
    seed: u64,
    cfg: &OptConfig,
) -> Result<AltReport> {
    if b < 2 {
        return Err(Error::Config(format!("bootstrap count must be at least 2, got {b}")));
    }
    let naive = naive_mapping(menu)?;
    let beta_hat = item_estimates(menu, data, kind, None)?;
    let full = f_discrepancy(model, &naive, &beta_hat, kind, menu, cfg)?;
    let n = data.len();
    let replicates = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = data.subset(&idx);
            let target = item_estimates(menu, &sample, kind, Some(&beta_hat))?;
            Ok(f_discrepancy(model, &naive, &target, kind, menu, cfg)?.delta)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AltReport {
        model: model.id(),
        delta_hat: full.delta,
        bootstrap_se: sample_variance(&replicates).sqrt(),
        b,
        seed,
        d_model: full.d_model,
        d_naive: full.d_naive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub report: Option<CompleteReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub groups: Vec<GroupEntry>,
    /// Observation-weighted mean of the per-group estimates that succeeded.
    pub weighted_kappa: Option<f64>,
}

/// Label used for observations without a group.
pub const UNGROUPED: &str = "(none)";

/// Completeness estimated separately within each group.
pub fn group_completeness(
    model: &dyn Model,
    menu: &Menu,
    data: &Dataset,
    kind: ProblemKind,
    opts: &CompleteOptions,
    cfg: &OptConfig,
) -> Result<GroupReport> {
    let key = |o: &Observation| o.group.clone().unwrap_or_else(|| UNGROUPED.to_string());
    let mut keys: Vec<String> = Vec::new();
    for o in data.observations() {
        let k = key(o);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut groups = Vec::with_capacity(keys.len());
    for g in keys {
        let idx: Vec<usize> = (0..data.len()).filter(|&i| key(&data.observations()[i]) == g).collect();
        let sub = data.subset(&idx);
        let (report, error) = match estimate_completeness(model, menu, &sub, kind, opts, cfg) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        groups.push(GroupEntry { group: g, n: idx.len(), report, error });
    }
    let (num, den) = groups
        .iter()
        .filter_map(|g| g.report.as_ref().map(|r| (r.kappa_hat * g.n as f64, g.n as f64)))
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(GroupReport { groups, weighted_kappa: (den > 0.0).then(|| num / den) })
}
