//! Random draws from permissible sets of mappings.
//!
//! Certainty-equivalent tables live in an order polytope: each value lies in
//! its lottery's prize range, and values respect first-order stochastic
//! dominance between lotteries. Uniform draws come from a single-site Gibbs
//! sampler whose coordinate conditionals are uniform on the interval left by
//! the neighbouring constraints. Play mappings for games are independent
//! Dirichlet(1,1,1) draws per game, rejected until dominated actions have at
//! most 1/3 and dominant actions at least 1/3.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::items::Game3x3;
use crate::models::expected_value_naive;
use crate::problem::{Mapping, Menu};
use crate::stats::substream;

const CDF_TOL: f64 = 1e-12;

/// Distribution over the permissible set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mu", rename_all = "kebab-case")]
pub enum MuSpec {
    /// Uniform over range- and FOSD-respecting CE tables.
    UniformFosd,
    /// Uniform over range-respecting CE tables.
    RangeOnly,
    /// Independent scaled beta(a, b) values conditioned on FOSD.
    BetaFosd { a: f64, b: f64 },
    /// Uniform over play mappings obeying the dominance frequency bounds.
    GameDominance,
}

impl MuSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform-fosd" => Ok(MuSpec::UniformFosd),
            "range-only" => Ok(MuSpec::RangeOnly),
            "dominance" | "game-dominance" => Ok(MuSpec::GameDominance),
            other => {
                let ab = other
                    .strip_prefix("beta-fosd:")
                    .and_then(|rest| rest.split_once(','))
                    .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)));
                match ab {
                    Some((a, b)) if a > 0.0 && b > 0.0 => Ok(MuSpec::BetaFosd { a, b }),
                    _ => Err(Error::Config(format!("unknown mu specification '{other}'"))),
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            MuSpec::UniformFosd => "uniform-fosd".into(),
            MuSpec::RangeOnly => "range-only".into(),
            MuSpec::BetaFosd { a, b } => format!("beta-fosd:{a},{b}"),
            MuSpec::GameDominance => "dominance".into(),
        }
    }
}

/// How conditioned beta draws are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMethod {
    /// Whole-table rejection against the FOSD constraints.
    Rejection,
    /// Metropolis-within-Gibbs on the order polytope with the beta product
    /// density as target. Same target law as rejection.
    Gibbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerControls {
    pub burn_in: usize,
    pub thin: usize,
    pub max_rejections: u64,
    pub beta_method: BetaMethod,
}

impl Default for SamplerControls {
    fn default() -> Self {
        Self { burn_in: 500, thin: 50, max_rejections: 1_000_000, beta_method: BetaMethod::Rejection }
    }
}

/// Strict first-order stochastic dominance relation on a lottery menu.
#[derive(Debug, Clone, PartialEq)]
pub struct FosdOrder {
    /// `(i, j)` present iff lottery `i` dominates lottery `j`.
    pub pairs: Vec<(usize, usize)>,
    dominated: Vec<Vec<usize>>,
    dominating: Vec<Vec<usize>>,
}

impl FosdOrder {
    pub fn len(&self) -> usize {
        self.dominated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dominated.is_empty()
    }

    /// Items dominated by `i`.
    pub fn below(&self, i: usize) -> &[usize] {
        &self.dominated[i]
    }

    /// Items dominating `i`.
    pub fn above(&self, i: usize) -> &[usize] {
        &self.dominating[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.dominated[i].contains(&j)
    }

    /// Whether a table of values respects every dominance pair.
    pub fn is_respected_by(&self, values: &[f64]) -> bool {
        self.pairs.iter().all(|&(i, j)| values[i] >= values[j])
    }

    /// Dominance pairs a table violates.
    pub fn violations(&self, values: &[f64]) -> usize {
        self.pairs.iter().filter(|&&(i, j)| values[i] < values[j]).count()
    }
}

fn cdf_at(outcomes: &[(f64, f64)], t: f64) -> f64 {
    outcomes.iter().filter(|(z, _)| *z <= t).map(|(_, p)| p).sum()
}

/// Whether the first outcome distribution strictly FOSD-dominates the second.
pub fn fosd_dominates(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    let mut strict = false;
    // CDFs are step functions, so comparing at the support points suffices.
    for &(t, _) in a.iter().chain(b) {
        let (fa, fb) = (cdf_at(a, t), cdf_at(b, t));
        if fa > fb + CDF_TOL {
            return false;
        }
        if fa < fb - CDF_TOL {
            strict = true;
        }
    }
    strict
}

pub fn build_fosd_order(menu: &Menu) -> Result<FosdOrder> {
    let outcomes = menu
        .items()
        .iter()
        .map(|i| i.lottery_outcomes().ok_or_else(|| Error::DomainMismatch("FOSD order needs lotteries".into())))
        .collect::<Result<Vec<_>>>()?;
    let n = outcomes.len();
    let mut pairs = Vec::new();
    let mut dominated = vec![Vec::new(); n];
    let mut dominating = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && fosd_dominates(&outcomes[i], &outcomes[j]) {
                pairs.push((i, j));
                dominated[i].push(j);
                dominating[j].push(i);
            }
        }
    }
    Ok(FosdOrder { pairs, dominated, dominating })
}

fn prize_bounds(menu: &Menu) -> Result<Vec<(f64, f64)>> {
    menu.items()
        .iter()
        .map(|i| i.prize_range().ok_or_else(|| Error::DomainMismatch("CE sampling needs lotteries".into())))
        .collect()
}

/// Single-site Gibbs chain on an order polytope.
///
/// With `beta = None` the coordinate updates are exact uniform draws and the
/// stationary law is uniform on the polytope. With `beta = Some((a, b))` each
/// coordinate is updated by an independence Metropolis step (uniform proposal
/// on the feasible interval) targeting the product of scaled beta densities.
pub struct OrderPolytopeChain<'a, R: Rng> {
    bounds: &'a [(f64, f64)],
    order: &'a FosdOrder,
    state: Vec<f64>,
    beta: Option<(f64, f64)>,
    rng: R,
}

impl<'a, R: Rng> OrderPolytopeChain<'a, R> {
    pub fn new(bounds: &'a [(f64, f64)], order: &'a FosdOrder, init: Vec<f64>, rng: R) -> Self {
        Self { bounds, order, state: init, beta: None, rng }
    }

    pub fn with_beta(mut self, a: f64, b: f64) -> Self {
        self.beta = Some((a, b));
        self
    }

    fn interval(&self, i: usize) -> (f64, f64) {
        let (mut lo, mut hi) = self.bounds[i];
        for &j in self.order.below(i) {
            lo = lo.max(self.state[j]);
        }
        for &j in self.order.above(i) {
            hi = hi.min(self.state[j]);
        }
        (lo, hi.max(lo))
    }

    fn log_beta_density(&self, i: usize, x: f64, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.bounds[i];
        let u = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln()
    }

    pub fn sweep(&mut self) {
        for i in 0..self.state.len() {
            let (lo, hi) = self.interval(i);
            let proposal = if hi > lo { self.rng.random_range(lo..hi) } else { lo };
            match self.beta {
                None => self.state[i] = proposal,
                Some((a, b)) => {
                    let log_ratio =
                        self.log_beta_density(i, proposal, a, b) - self.log_beta_density(i, self.state[i], a, b);
                    let accept = log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio;
                    if accept {
                        self.state[i] = proposal;
                    }
                }
            }
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Runs `burn_in` sweeps, then returns `n` states spaced `thin` sweeps apart.
    pub fn draws(&mut self, burn_in: usize, thin: usize, n: usize) -> Vec<Vec<f64>> {
        for _ in 0..burn_in {
            self.sweep();
        }
        (0..n)
            .map(|k| {
                if k > 0 {
                    for _ in 0..thin.max(1) {
                        self.sweep();
                    }
                }
                self.state.clone()
            })
            .collect()
    }
}

/// One CE table from `spec`. For the FOSD-constrained specs `order` must be
/// the menu's dominance relation.
pub fn sample_ce_mapping<R: Rng>(
    menu: &Menu,
    order: &FosdOrder,
    spec: MuSpec,
    controls: &SamplerControls,
    rng: &mut R,
) -> Result<Mapping> {
    let bounds = prize_bounds(menu)?;
    let values = match spec {
        MuSpec::RangeOnly => bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect(),
        MuSpec::UniformFosd => {
            let init = menu.items().iter().map(expected_value_naive).collect::<Result<Vec<_>>>()?;
            let mut chain = OrderPolytopeChain::new(&bounds, order, init, &mut *rng);
            chain.draws(controls.burn_in, controls.thin, 1).remove(0)
        }
        MuSpec::BetaFosd { a, b } => match controls.beta_method {
            BetaMethod::Rejection => beta_rejection(&bounds, order, a, b, controls.max_rejections, rng)?,
            BetaMethod::Gibbs => {
                let init = menu.items().iter().map(expected_value_naive).collect::<Result<Vec<_>>>()?;
                let mut chain = OrderPolytopeChain::new(&bounds, order, init, &mut *rng).with_beta(a, b);
                chain.draws(controls.burn_in, controls.thin, 1).remove(0)
            }
        },
        MuSpec::GameDominance => {
            return Err(Error::Config("dominance mu applies to game menus".into()));
        }
    };
    Mapping::scalar(values)
}

fn beta_rejection<R: Rng>(
    bounds: &[(f64, f64)],
    order: &FosdOrder,
    a: f64,
    b: f64,
    budget: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dist = Beta::new(a, b).map_err(|e| Error::Config(format!("beta({a}, {b}): {e}")))?;
    let mut values = vec![0.0; bounds.len()];
    for _ in 0..budget {
        for (v, &(lo, hi)) in values.iter_mut().zip(bounds) {
            *v = lo + (hi - lo) * dist.sample(rng);
        }
        if order.is_respected_by(&values) {
            return Ok(values);
        }
    }
    Err(Error::RejectionBudgetExceeded(budget))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceTag {
    StrictlyDominated,
    StrictlyDominant,
    Neither,
}

/// Pure-strategy strict dominance for the row player.
pub fn classify_dominance(game: &Game3x3) -> [DominanceTag; 3] {
    let beats = |i: usize, j: usize| (0..3).all(|c| game.row[i][c] > game.row[j][c]);
    let mut tags = [DominanceTag::Neither; 3];
    for (i, tag) in tags.iter_mut().enumerate() {
        let others = (0..3).filter(|&j| j != i);
        if others.clone().all(|j| beats(i, j)) {
            *tag = DominanceTag::StrictlyDominant;
        } else if others.clone().any(|j| beats(j, i)) {
            *tag = DominanceTag::StrictlyDominated;
        }
    }
    tags
}

pub fn satisfies_dominance(tags: &[DominanceTag; 3], p: &[f64; 3]) -> bool {
    tags.iter().zip(p).all(|(t, x)| match t {
        DominanceTag::StrictlyDominated => *x <= 1.0 / 3.0,
        DominanceTag::StrictlyDominant => *x >= 1.0 / 3.0,
        DominanceTag::Neither => true,
    })
}

/// Uniform point on the probability simplex.
pub fn uniform_simplex_point<R: Rng>(rng: &mut R) -> [f64; 3] {
    let e: [f64; 3] = std::array::from_fn(|_| Exp1.sample(rng));
    let s: f64 = e.iter().sum();
    e.map(|x| x / s)
}

pub fn sample_play_mapping<R: Rng>(tags: &[[DominanceTag; 3]], max_rejections: u64, rng: &mut R) -> Result<Mapping> {
    let mut values = Vec::with_capacity(tags.len());
    for t in tags {
        let mut attempts = 0u64;
        let p = loop {
            let p = uniform_simplex_point(rng);
            if satisfies_dominance(t, &p) {
                break p;
            }
            attempts += 1;
            if attempts >= max_rejections {
                return Err(Error::RejectionBudgetExceeded(max_rejections));
            }
        };
        values.push(p);
    }
    Ok(Mapping::Simplex(values))
}

/// Precomputed permissible set for a menu, with reproducible indexed draws.
#[derive(Debug, Clone)]
pub struct PermissibleSet {
    menu: Menu,
    spec: MuSpec,
    controls: SamplerControls,
    order: Option<FosdOrder>,
    tags: Vec<[DominanceTag; 3]>,
}

impl PermissibleSet {
    pub fn new(menu: &Menu, spec: MuSpec, controls: SamplerControls) -> Result<Self> {
        let (order, tags) = match spec {
            MuSpec::GameDominance => {
                let tags = menu
                    .items()
                    .iter()
                    .map(|i| {
                        i.as_game()
                            .map(classify_dominance)
                            .ok_or_else(|| Error::Config("dominance mu needs a game menu".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (None, tags)
            }
            _ => {
                if !menu.all_lotteries() {
                    return Err(Error::Config(format!("mu '{}' needs a lottery menu", spec.label())));
                }
                (Some(build_fosd_order(menu)?), Vec::new())
            }
        };
        Ok(Self { menu: menu.clone(), spec, controls, order, tags })
    }

    /// The natural permissible set for a menu: FOSD tables for lotteries,
    /// dominance-bounded play for games.
    pub fn default_for(menu: &Menu) -> Result<Self> {
        let spec = if menu.all_games() { MuSpec::GameDominance } else { MuSpec::UniformFosd };
        Self::new(menu, spec, SamplerControls::default())
    }

    pub fn spec(&self) -> MuSpec {
        self.spec
    }

    pub fn order(&self) -> Option<&FosdOrder> {
        self.order.as_ref()
    }

    pub fn dominance_tags(&self) -> &[[DominanceTag; 3]] {
        &self.tags
    }

    /// Draw number `index` of the stream identified by `seed`.
    pub fn draw(&self, seed: u64, index: u64) -> Result<Mapping> {
        let mut rng = substream(seed, index);
        match (&self.order, self.spec) {
            (_, MuSpec::GameDominance) => sample_play_mapping(&self.tags, self.controls.max_rejections, &mut rng),
            (Some(order), spec) => sample_ce_mapping(&self.menu, order, spec, &self.controls, &mut rng),
            (None, _) => unreachable!("lottery specs always carry an order"),
        }
    }

    /// Draws `0..m`, computed in parallel, returned in index order.
    pub fn draw_many(&self, m: usize, seed: u64) -> Result<Vec<Mapping>> {
        (0..m as u64).into_par_iter().map(|i| self.draw(seed, i)).collect()
    }

    /// Whether a mapping lies in the permissible set.
    pub fn contains(&self, mapping: &Mapping) -> bool {
        match mapping {
            Mapping::Scalar(v) => {
                let in_range = self
                    .menu
                    .items()
                    .iter()
                    .zip(v)
                    .all(|(item, x)| item.prize_range().is_some_and(|(lo, hi)| *x >= lo && *x <= hi));
                let fosd_ok = match self.spec {
                    MuSpec::RangeOnly => true,
                    _ => self.order.as_ref().is_some_and(|o| o.is_respected_by(v)),
                };
                in_range && fosd_ok && v.len() == self.menu.len()
            }
            Mapping::Simplex(v) => {
                v.len() == self.tags.len()
                    && v.iter().zip(&self.tags).all(|(p, t)| {
                        (p.iter().sum::<f64>() - 1.0).abs() < 1e-9
                            && p.iter().all(|x| *x >= 0.0)
                            && satisfies_dominance(t, p)
                    })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::items::{BinaryLottery, FeatureItem};
    use crate::stats::substream;

    fn binary_menu(lotteries: &[(f64, f64, f64)]) -> Menu {
        let items =
            lotteries.iter().map(|&(h, l, p)| FeatureItem::Binary(BinaryLottery::new(h, l, p).unwrap())).collect();
        Menu::new((0..lotteries.len()).map(|i| format!("l{i}")).collect(), items).unwrap()
    }

    fn outcomes(h: f64, l: f64, p: f64) -> Vec<(f64, f64)> {
        BinaryLottery::new(h, l, p).unwrap().outcomes()
    }

    #[test]
    fn fosd_examples() {
        assert!(fosd_dominates(&outcomes(10.0, 0.0, 0.6), &outcomes(10.0, 0.0, 0.5)));
        assert!(fosd_dominates(&outcomes(10.0, 5.0, 0.5), &outcomes(8.0, 2.0, 0.5)));
        assert!(!fosd_dominates(&outcomes(10.0, 0.0, 0.5), &outcomes(8.0, 2.0, 0.5)));
        assert!(!fosd_dominates(&outcomes(8.0, 2.0, 0.5), &outcomes(10.0, 0.0, 0.5)));
        assert!(!fosd_dominates(&outcomes(10.0, 0.0, 0.5), &outcomes(10.0, 0.0, 0.5)));
    }

    #[test]
    fn loss_domain_dominance() {
        // (0, -10, 0.6) puts more weight on the better prize than (0, -10, 0.5)
        assert!(fosd_dominates(&outcomes(0.0, -10.0, 0.6), &outcomes(0.0, -10.0, 0.5)));
        assert!(fosd_dominates(&outcomes(-1.0, -5.0, 0.5), &outcomes(-2.0, -8.0, 0.5)));
    }

    #[test]
    fn single_lottery_uniform_mean() {
        let menu = binary_menu(&[(10.0, 0.0, 0.5)]);
        let set = PermissibleSet::new(&menu, MuSpec::UniformFosd, SamplerControls::default()).unwrap();
        let draws = set.draw_many(10_000, 11).unwrap();
        let mean = draws.iter().map(|m| m.as_scalar().unwrap()[0]).sum::<f64>() / 10_000.0;
        assert!((mean - 5.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn range_only_draws_can_violate_fosd() {
        let menu = binary_menu(&[(10.0, 0.0, 0.9), (10.0, 0.0, 0.5), (10.0, 0.0, 0.1)]);
        let set = PermissibleSet::new(&menu, MuSpec::RangeOnly, SamplerControls::default()).unwrap();
        let order = build_fosd_order(&menu).unwrap();
        let violating =
            set.draw_many(1000, 5).unwrap().iter().filter(|m| order.violations(m.as_scalar().unwrap()) > 0).count();
        assert!(violating > 0);
    }

    #[test]
    fn beta_one_one_rejection_matches_constraints() {
        let menu = binary_menu(&[(10.0, 0.0, 0.9), (10.0, 0.0, 0.5), (12.0, 1.0, 0.5)]);
        let set = PermissibleSet::new(&menu, MuSpec::BetaFosd { a: 1.0, b: 1.0 }, SamplerControls::default()).unwrap();
        for m in set.draw_many(200, 3).unwrap() {
            assert!(set.contains(&m));
        }
    }

    #[test]
    fn rejection_budget_is_enforced() {
        let menu = binary_menu(&[(10.0, 0.0, 0.9), (10.0, 0.0, 0.5), (10.0, 0.0, 0.1)]);
        let controls = SamplerControls { max_rejections: 1, ..Default::default() };
        let set = PermissibleSet::new(&menu, MuSpec::BetaFosd { a: 1.0, b: 1.0 }, controls).unwrap();
        let failures = (0..50).filter(|i| set.draw(1, *i).is_err()).count();
        assert!(failures > 0);
    }

    #[test]
    fn dominance_examples() {
        let cols = [[0.0; 3]; 3];
        let g = Game3x3::new([[5.0, 5.0, 5.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], cols).unwrap();
        assert_eq!(
            classify_dominance(&g),
            [DominanceTag::StrictlyDominant, DominanceTag::StrictlyDominated, DominanceTag::StrictlyDominated]
        );
        let g = Game3x3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], cols).unwrap();
        assert_eq!(classify_dominance(&g), [DominanceTag::Neither; 3]);
        let g = Game3x3::new([[3.0, 0.0, 0.0], [2.0, 1.0, 0.0], [1.0, 1.0, 1.0]], cols).unwrap();
        assert_eq!(classify_dominance(&g), [DominanceTag::Neither; 3]);
        // dominated but no dominant action
        let g = Game3x3::new([[3.0, 3.0, 0.0], [2.0, 2.0, -1.0], [0.0, 0.0, 5.0]], cols).unwrap();
        assert_eq!(
            classify_dominance(&g),
            [DominanceTag::Neither, DominanceTag::StrictlyDominated, DominanceTag::Neither]
        );
    }

    #[test]
    fn unconstrained_play_has_uniform_mean() {
        let tags = vec![[DominanceTag::Neither; 3]];
        let mut rng = substream(9, 0);
        let mut sums = [0.0; 3];
        for _ in 0..10_000 {
            let m = sample_play_mapping(&tags, 1000, &mut rng).unwrap();
            let p = m.as_simplex().unwrap()[0];
            for a in 0..3 {
                sums[a] += p[a];
            }
        }
        for s in sums {
            assert!((s / 10_000.0 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn subsimplex_area_is_four_ninths() {
        let mut rng = substream(10, 0);
        let n = 100_000;
        let hits = (0..n).filter(|_| uniform_simplex_point(&mut rng)[0] >= 1.0 / 3.0).count();
        // (1 - 1/3)^2 = 4/9; 4 standard errors
        assert!((hits as f64 / n as f64 - 4.0 / 9.0).abs() < 4.0 * (0.25f64 / n as f64).sqrt());
    }

    #[test]
    fn dominant_action_draws_respect_bound() {
        let tags =
            vec![[DominanceTag::StrictlyDominant, DominanceTag::StrictlyDominated, DominanceTag::StrictlyDominated]];
        let mut rng = substream(12, 0);
        for _ in 0..1000 {
            let m = sample_play_mapping(&tags, 1000, &mut rng).unwrap();
            let p = m.as_simplex().unwrap()[0];
            assert!(p[0] >= 1.0 / 3.0 && p[1] <= 1.0 / 3.0 && p[2] <= 1.0 / 3.0);
        }
    }

    #[test]
    fn mu_spec_parsing() {
        assert_eq!(MuSpec::parse("uniform-fosd").unwrap(), MuSpec::UniformFosd);
        assert_eq!(MuSpec::parse("beta-fosd:0.9,1.1").unwrap(), MuSpec::BetaFosd { a: 0.9, b: 1.1 });
        assert!(MuSpec::parse("beta-fosd:0,1").is_err());
        assert!(MuSpec::parse("gaussian").is_err());
        let spec = MuSpec::BetaFosd { a: 0.95, b: 1.05 };
        assert_eq!(MuSpec::parse(&spec.label()).unwrap(), spec);
    }
}
