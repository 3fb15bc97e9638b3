//! Restrictiveness: how well a model fits mappings drawn from the permissible set.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_model_to_mapping, OptConfig};
use crate::models::{naive_mapping, Model};
use crate::problem::{discrepancy, Mapping, Menu, ProblemKind};
use crate::sampling::{MuSpec, PermissibleSet, SamplerControls};
use crate::stats::{mean, normal_interval, population_sd, substream};

/// Ratios above one by less than this are numerical slack and are clamped.
pub const NESTING_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FDiscrepancy {
    pub delta: f64,
    pub d_model: f64,
    pub d_naive: f64,
    pub theta: Vec<f64>,
}

/// `inf_theta d(target, f_theta) / d(target, naive)`.
pub fn f_discrepancy(
    model: &dyn Model,
    naive: &Mapping,
    target: &Mapping,
    kind: ProblemKind,
    menu: &Menu,
    cfg: &OptConfig,
) -> Result<FDiscrepancy> {
    let d_naive = discrepancy(kind, target, naive, menu.weights())?;
    if d_naive <= 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let fit = fit_model_to_mapping(model, target, kind, menu, cfg)?;
    let ratio = fit.value / d_naive;
    if ratio > 1.0 + NESTING_SLACK {
        return Err(Error::NestingViolation(ratio));
    }
    Ok(FDiscrepancy { delta: ratio.clamp(0.0, 1.0), d_model: fit.value, d_naive, theta: fit.theta })
}

/// Mean, standard deviation (divisor `M`) and normal interval of a sample of deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub r_hat: f64,
    pub sigma_hat: f64,
    pub se: f64,
    /// Absent when every delta is identical.
    pub ci: Option<(f64, f64)>,
    pub degenerate: bool,
}

pub fn summarize_deltas(deltas: &[f64], level_alpha: f64) -> Result<DeltaSummary> {
    if deltas.len() < 2 {
        return Err(Error::Config(format!("need at least 2 draws, got {}", deltas.len())));
    }
    if !(level_alpha > 0.0 && level_alpha < 1.0) {
        return Err(Error::Config(format!("level must be in (0, 1), got {level_alpha}")));
    }
    let r_hat = mean(deltas);
    let sigma_hat = population_sd(deltas);
    let se = sigma_hat / (deltas.len() as f64).sqrt();
    let degenerate = deltas.iter().all(|d| *d == deltas[0]);
    let ci = (!degenerate).then(|| normal_interval(r_hat, se, level_alpha));
    Ok(DeltaSummary { r_hat, sigma_hat, se, ci, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictReport {
    pub model: String,
    pub mu: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub level: f64,
    pub r_hat: f64,
    pub sigma_hat: f64,
    pub se: f64,
    pub ci: Option<(f64, f64)>,
    pub degenerate: bool,
    pub mean_naive_discrepancy: f64,
    pub mean_model_discrepancy: f64,
    pub deltas: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

/// Restrictiveness of `model` on a fixed list of draws.
pub fn restrictiveness_on_draws(
    model: &dyn Model,
    menu: &Menu,
    draws: &[Mapping],
    mu_label: &str,
    seed: u64,
    level_alpha: f64,
    cfg: &OptConfig,
) -> Result<RestrictReport> {
    let naive = naive_mapping(menu)?;
    let kind = model.kind();
    let per_draw =
        draws.par_iter().map(|f| f_discrepancy(model, &naive, f, kind, menu, cfg)).collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = per_draw.iter().map(|d| d.delta).collect();
    let summary = summarize_deltas(&deltas, level_alpha)?;
    Ok(RestrictReport {
        model: model.id(),
        mu: mu_label.to_string(),
        m: draws.len(),
        seed,
        level: level_alpha,
        r_hat: summary.r_hat,
        sigma_hat: summary.sigma_hat,
        se: summary.se,
        ci: summary.ci,
        degenerate: summary.degenerate,
        mean_naive_discrepancy: mean(&per_draw.iter().map(|d| d.d_naive).collect::<Vec<_>>()),
        mean_model_discrepancy: mean(&per_draw.iter().map(|d| d.d_model).collect::<Vec<_>>()),
        deltas,
        thetas: per_draw.into_iter().map(|d| d.theta).collect(),
    })
}

/// Draws `m` mappings from `set` and estimates restrictiveness.
pub fn estimate_restrictiveness(
    model: &dyn Model,
    menu: &Menu,
    set: &PermissibleSet,
    m: usize,
    seed: u64,
    level_alpha: f64,
    cfg: &OptConfig,
) -> Result<RestrictReport> {
    if m < 2 {
        return Err(Error::Config(format!("M must be at least 2, got {m}")));
    }
    let draws = set.draw_many(m, seed)?;
    restrictiveness_on_draws(model, menu, &draws, &set.spec().label(), seed, level_alpha, cfg)
}

/// Restrictiveness of several models on one shared set of draws.
pub fn compare_restrictiveness(
    models: &[&dyn Model],
    menu: &Menu,
    set: &PermissibleSet,
    m: usize,
    seed: u64,
    level_alpha: f64,
    cfg: &OptConfig,
) -> Result<Vec<RestrictReport>> {
    if m < 2 {
        return Err(Error::Config(format!("M must be at least 2, got {m}")));
    }
    let draws = set.draw_many(m, seed)?;
    models
        .iter()
        .map(|model| restrictiveness_on_draws(*model, menu, &draws, &set.spec().label(), seed, level_alpha, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub ab: Vec<(f64, f64)>,
    pub r: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Restrictiveness under beta-FOSD distributions with `(a, b)` drawn
/// uniformly from `[0.9, 1.1]^2`.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_sweep(
    model: &dyn Model,
    menu: &Menu,
    n_distributions: usize,
    m: usize,
    seed: u64,
    controls: SamplerControls,
    cfg: &OptConfig,
) -> Result<SweepReport> {
    if n_distributions == 0 {
        return Err(Error::Config("sweep needs at least one distribution".into()));
    }
    let mut rng = substream(seed, u64::MAX - 1);
    let ab: Vec<(f64, f64)> =
        (0..n_distributions).map(|_| (rng.random_range(0.9..=1.1), rng.random_range(0.9..=1.1))).collect();
    let mut r = Vec::with_capacity(n_distributions);
    for (k, &(a, b)) in ab.iter().enumerate() {
        let set = PermissibleSet::new(menu, MuSpec::BetaFosd { a, b }, controls)?;
        let report = estimate_restrictiveness(model, menu, &set, m, seed.wrapping_add(k as u64 + 1), 0.05, cfg)?;
        r.push(report.r_hat);
    }
    Ok(SweepReport {
        mean: mean(&r),
        min: r.iter().cloned().fold(f64::INFINITY, f64::min),
        max: r.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ab,
        r,
    })
}

/// For distributions `mu`, `mu2` over a finite list of mappings with
/// deltas `deltas`, returns `(|E_mu delta - E_mu2 delta|, 2 d_TV(mu, mu2))`.
pub fn tv_bound_check(deltas: &[f64], mu: &[f64], mu2: &[f64]) -> Result<(f64, f64)> {
    if deltas.len() != mu.len() || mu.len() != mu2.len() {
        return Err(Error::Config("deltas and distributions must have equal length".into()));
    }
    let diff: f64 = deltas.iter().zip(mu).zip(mu2).map(|((d, p), q)| d * (p - q)).sum();
    let tv = 0.5 * mu.iter().zip(mu2).map(|(p, q)| (p - q).abs()).sum::<f64>();
    Ok((diff.abs(), 2.0 * tv))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins on `[0, 1]`; the last bin is closed.
pub fn delta_histogram(deltas: &[f64], bins: usize) -> Vec<HistogramBin> {
    let mut counts = vec![0; bins];
    for &d in deltas {
        let k = ((d.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin { lo: k as f64 / bins as f64, hi: (k + 1) as f64 / bins as f64, count })
        .collect()
}
