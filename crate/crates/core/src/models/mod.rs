//! Parametric model families with box-bounded parameters and a nested naive member.

pub mod cpt;
pub mod games;

pub use cpt::{cpt3_value, cpt_value, expected_value_naive, weighting, CptModel, CptParams, FreeParams};
pub use games::{
    logit_level1_distribution, logit_pchm_distribution, pchm_distribution, uniform_naive, GameModel, GameModelKind,
};

use crate::error::{Error, Result};
use crate::problem::{Mapping, Menu, ProblemKind};

/// A parametric family `theta -> f_theta` over a menu.
pub trait Model: Send + Sync {
    fn id(&self) -> String;

    /// Problem kind the family predicts for.
    fn kind(&self) -> ProblemKind;

    fn param_names(&self) -> Vec<&'static str>;

    /// Box bounds, one pair per free parameter.
    fn bounds(&self) -> Vec<(f64, f64)>;

    /// Parameter at which the family reproduces the naive mapping.
    fn naive_params(&self) -> Vec<f64>;

    fn predict(&self, theta: &[f64], menu: &Menu) -> Result<Mapping>;

    /// Closed-form best approximation of `target`, when one exists.
    fn exact_fit(&self, _target: &Mapping, _menu: &Menu) -> Option<Vec<f64>> {
        None
    }
}

/// Expected value for lotteries, uniform play for games.
pub fn naive_mapping(menu: &Menu) -> Result<Mapping> {
    if menu.all_games() {
        return Ok(Mapping::uniform_simplex(menu.len()));
    }
    let values = menu.items().iter().map(expected_value_naive).collect::<Result<Vec<_>>>()?;
    Mapping::scalar(values)
}

/// The family containing only the naive mapping.
#[derive(Debug, Clone)]
pub struct NaiveModel {
    kind: ProblemKind,
}

impl NaiveModel {
    pub fn new(kind: ProblemKind) -> Self {
        Self { kind }
    }
}

impl Model for NaiveModel {
    fn id(&self) -> String {
        "naive".into()
    }

    fn kind(&self) -> ProblemKind {
        self.kind
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec![]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![]
    }

    fn naive_params(&self) -> Vec<f64> {
        vec![]
    }

    fn predict(&self, _theta: &[f64], menu: &Menu) -> Result<Mapping> {
        naive_mapping(menu)
    }
}

/// The unrestricted family of lottery mappings: one free value per item,
/// bounded by the item's prize range.
#[derive(Debug, Clone)]
pub struct TableModel {
    bounds: Vec<(f64, f64)>,
    naive: Vec<f64>,
}

impl TableModel {
    pub fn for_menu(menu: &Menu) -> Result<Self> {
        let bounds = menu
            .items()
            .iter()
            .map(|i| i.prize_range().ok_or_else(|| Error::DomainMismatch("table model needs lotteries".into())))
            .collect::<Result<Vec<_>>>()?;
        let naive = menu.items().iter().map(expected_value_naive).collect::<Result<Vec<_>>>()?;
        Ok(Self { bounds, naive })
    }
}

impl Model for TableModel {
    fn id(&self) -> String {
        "table".into()
    }

    fn kind(&self) -> ProblemKind {
        ProblemKind::ConditionalMean
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["value"; self.bounds.len()]
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }

    fn naive_params(&self) -> Vec<f64> {
        self.naive.clone()
    }

    fn predict(&self, theta: &[f64], menu: &Menu) -> Result<Mapping> {
        if theta.len() != menu.len() {
            return Err(Error::MenuMismatch { expected: menu.len(), got: theta.len() });
        }
        Mapping::scalar(theta.to_vec())
    }

    fn exact_fit(&self, target: &Mapping, _menu: &Menu) -> Option<Vec<f64>> {
        target.as_scalar().map(|v| v.iter().zip(&self.bounds).map(|(x, (lo, hi))| x.clamp(*lo, *hi)).collect())
    }
}

/// Builds a model from an identifier such as `cpt:alpha,gamma,eta`,
/// `cpt3:alpha,gamma,eta`, `pchm`, `logit-level1`, `logit-pchm` or `naive`.
///
/// Game models are rescaled to the menu's payoff range.
pub fn parse_model(id: &str, menu: &Menu) -> Result<Box<dyn Model>> {
    let (family, params) = id.split_once(':').unwrap_or((id, ""));
    let model: Box<dyn Model> = match family {
        "cpt" | "cpt3" => {
            if !menu.all_lotteries() {
                return Err(Error::Config(format!("model '{id}' needs a lottery menu")));
            }
            let spec = if params.is_empty() { "alpha,gamma,eta" } else { params };
            Box::new(CptModel::parse(family, spec)?)
        }
        "pchm" | "logit-level1" | "logit-pchm" => {
            if !menu.all_games() {
                return Err(Error::Config(format!("model '{id}' needs a game menu")));
            }
            let kind = match family {
                "pchm" => GameModelKind::Pchm,
                "logit-level1" => GameModelKind::LogitLevel1,
                _ => GameModelKind::LogitPchm,
            };
            let mut m = GameModel::for_menu(kind, menu);
            if !params.is_empty() {
                m.level_cap = params
                    .strip_prefix("cap=")
                    .and_then(|c| c.parse().ok())
                    .filter(|c: &usize| *c > 0)
                    .ok_or_else(|| Error::Config(format!("bad game model option '{params}'")))?;
            }
            Box::new(m)
        }
        "naive" => Box::new(NaiveModel::new(if menu.all_games() {
            ProblemKind::ConditionalDistribution
        } else {
            ProblemKind::ConditionalMean
        })),
        "table" => Box::new(TableModel::for_menu(menu)?),
        other => return Err(Error::Config(format!("unknown model '{other}'"))),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::items::{BinaryLottery, FeatureItem, Game3x3};

    fn lottery_menu() -> Menu {
        let items = vec![
            FeatureItem::Binary(BinaryLottery::new(10.0, 0.0, 0.5).unwrap()),
            FeatureItem::Binary(BinaryLottery::new(20.0, 5.0, 0.1).unwrap()),
        ];
        Menu::new(vec!["a".into(), "b".into()], items).unwrap()
    }

    #[test]
    fn naive_nesting_for_all_families() {
        let menu = lottery_menu();
        let naive = naive_mapping(&menu).unwrap();
        for id in ["cpt:alpha,gamma,eta", "cpt:alpha", "cpt:gamma,eta", "cpt:alpha,gamma", "naive", "table"] {
            let m = parse_model(id, &menu).unwrap();
            assert_eq!(m.predict(&m.naive_params(), &menu).unwrap(), naive, "{id}");
        }
    }

    #[test]
    fn parse_rejects_mismatched_menus() {
        let menu = lottery_menu();
        assert!(parse_model("pchm", &menu).is_err());
        assert!(parse_model("frobnicate", &menu).is_err());
        let g = Game3x3::new([[1.0; 3]; 3], [[2.0; 3]; 3]).unwrap();
        let games = Menu::new(vec!["g".into()], vec![FeatureItem::Game(g)]).unwrap();
        assert!(parse_model("cpt:alpha", &games).is_err());
        let m = parse_model("logit-pchm:cap=5", &games).unwrap();
        assert_eq!(m.id(), "logit-pchm");
        assert_eq!(m.predict(&[0.0, 0.0], &games).unwrap(), Mapping::uniform_simplex(1));
    }

    #[test]
    fn table_model_fits_targets_exactly() {
        let menu = lottery_menu();
        let m = TableModel::for_menu(&menu).unwrap();
        let target = Mapping::scalar(vec![3.0, 7.5]).unwrap();
        assert_eq!(m.exact_fit(&target, &menu).unwrap(), vec![3.0, 7.5]);
    }
}
