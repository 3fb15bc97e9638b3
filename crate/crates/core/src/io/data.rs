//! CSV loaders for certainty-equivalent and game-play data.
//!
//! Certainty-equivalent files have one row per (subject, lottery) report:
//!
//! ```text
//! subject_id,z_high,z_low,p,ce[,cluster]
//! subject_id,z1,z2,z3,p1,p2,p3,ce[,cluster]
//! ```
//!
//! Game files have one row per choice, or one aggregated row per game:
//!
//! ```text
//! game_id,r11,...,r33,c11,...,c33,action
//! game_id,r11,...,r33,c11,...,c33,n1,n2,n3
//! ```
//!
//! `action` is 1, 2 or 3. Payoff `rij`/`cij` is for row action `i` and
//! column action `j`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::items::{BinaryLottery, FeatureItem, Game3x3, ThreeOutcomeLottery};
use crate::problem::{Dataset, Menu, Observation, Outcome};

struct Table {
    headers: Vec<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.iter().map(|h| h.to_ascii_lowercase()).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Self { headers, rows })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.col(n).ok_or_else(|| Error::Parse { line: 1, message: format!("missing column '{n}'") }))
            .collect()
    }
}

fn number(record: &csv::StringRecord, col: usize, line: usize, name: &str) -> Result<f64> {
    let raw = record.get(col).unwrap_or("");
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse { line, message: format!("column '{name}': '{raw}' is not a number") })
}

fn item_error(line: usize, e: Error) -> Error {
    match e {
        Error::InvalidItem(message) => Error::Parse { line, message },
        other => other,
    }
}

fn cmp_items(a: &FeatureItem, b: &FeatureItem) -> Ordering {
    let key = |i: &FeatureItem| -> Vec<f64> {
        match i {
            FeatureItem::Binary(l) => vec![l.z_high, l.z_low, l.p],
            FeatureItem::ThreeOutcome(l) => l.z.iter().chain(&l.p).copied().collect(),
            FeatureItem::Game(g) => g.row.iter().chain(&g.col).flatten().copied().collect(),
        }
    };
    let (ka, kb) = (key(a), key(b));
    ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn lottery_id(item: &FeatureItem) -> String {
    match item {
        FeatureItem::Binary(l) => format!("{}|{}|{}", l.z_high, l.z_low, l.p),
        FeatureItem::ThreeOutcome(l) => {
            format!("{}|{}|{}|{}|{}|{}", l.z[0], l.z[1], l.z[2], l.p[0], l.p[1], l.p[2])
        }
        FeatureItem::Game(_) => unreachable!("lottery ids only"),
    }
}

/// Loads certainty-equivalent reports.
///
/// The menu holds the distinct lotteries sorted lexicographically by their
/// fields; item ids encode the fields.
pub fn load_ce_dataset(path: impl AsRef<Path>) -> Result<(Menu, Dataset)> {
    let table = Table::read(path.as_ref())?;
    let three = table.col("z1").is_some();
    let fields: &[&str] =
        if three { &["z1", "z2", "z3", "p1", "p2", "p3", "ce"] } else { &["z_high", "z_low", "p", "ce"] };
    let cols = table.require(fields)?;
    table.require(&["subject_id"])?;
    let cluster = table.col("cluster");

    let mut rows = Vec::with_capacity(table.rows.len());
    for (line, record) in &table.rows {
        let v =
            cols.iter().zip(fields).map(|(&c, name)| number(record, c, *line, name)).collect::<Result<Vec<f64>>>()?;
        let item = if three {
            FeatureItem::ThreeOutcome(
                ThreeOutcomeLottery::new([v[0], v[1], v[2]], [v[3], v[4], v[5]]).map_err(|e| item_error(*line, e))?,
            )
        } else {
            FeatureItem::Binary(BinaryLottery::new(v[0], v[1], v[2]).map_err(|e| item_error(*line, e))?)
        };
        let ce = *v.last().expect("ce column");
        let group = cluster.and_then(|c| record.get(c)).filter(|s| !s.is_empty()).map(String::from);
        rows.push((item, ce, group));
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("data file has no rows".into()));
    }

    let mut items: Vec<FeatureItem> = Vec::new();
    for (item, _, _) in &rows {
        if !items.contains(item) {
            items.push(*item);
        }
    }
    items.sort_by(cmp_items);
    let observations = rows
        .into_iter()
        .map(|(item, ce, group)| Observation {
            item: items.iter().position(|i| *i == item).expect("item collected above"),
            outcome: Outcome::Value(ce),
            group,
        })
        .collect();
    let ids = items.iter().map(lottery_id).collect();
    let menu = Menu::new(ids, items)?;
    let data = Dataset::new(observations, menu.len())?;
    Ok((menu, data))
}

fn payoff_columns() -> Vec<String> {
    let mut names = Vec::with_capacity(18);
    for prefix in ["r", "c"] {
        for i in 1..=3 {
            for j in 1..=3 {
                names.push(format!("{prefix}{i}{j}"));
            }
        }
    }
    names
}

fn game_from(record: &csv::StringRecord, cols: &[usize], names: &[String], line: usize) -> Result<Game3x3> {
    let mut row = [[0.0; 3]; 3];
    let mut col = [[0.0; 3]; 3];
    for (k, (&c, name)) in cols.iter().zip(names).enumerate() {
        let v = number(record, c, line, name)?;
        let (i, j) = ((k % 9) / 3, k % 3);
        if k < 9 {
            row[i][j] = v;
        } else {
            col[i][j] = v;
        }
    }
    Game3x3::new(row, col).map_err(|e| item_error(line, e))
}

/// Loads 3x3 game choices. Game ids are authoritative: identical payoff
/// matrices under different ids are different menu items. The menu is
/// sorted by game id.
pub fn load_game_dataset(path: impl AsRef<Path>) -> Result<(Menu, Dataset)> {
    let table = Table::read(path.as_ref())?;
    let names = payoff_columns();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let payoff_cols = table.require(&name_refs)?;
    let id_col = table.require(&["game_id"])?[0];
    let aggregated = table.col("n1").is_some();
    let outcome_cols = if aggregated { table.require(&["n1", "n2", "n3"])? } else { table.require(&["action"])? };

    let mut games: BTreeMap<String, Game3x3> = BTreeMap::new();
    let mut choices: Vec<(String, usize, usize)> = Vec::new();
    for (line, record) in &table.rows {
        let line = *line;
        let id = record.get(id_col).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::Parse { line, message: "empty game_id".into() });
        }
        let game = game_from(record, &payoff_cols, &names, line)?;
        if let Some(existing) = games.get(&id) {
            if *existing != game {
                return Err(Error::Parse { line, message: format!("game '{id}' repeated with different payoffs") });
            }
        } else {
            games.insert(id.clone(), game);
        }
        if aggregated {
            for (a, &c) in outcome_cols.iter().enumerate() {
                let raw = record.get(c).unwrap_or("");
                let n: usize = raw.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("count 'n{}' = '{raw}' is not a count", a + 1),
                })?;
                choices.push((id.clone(), a, n));
            }
        } else {
            let raw = record.get(outcome_cols[0]).unwrap_or("");
            match raw.parse::<usize>() {
                Ok(a @ 1..=3) => choices.push((id.clone(), a - 1, 1)),
                _ => return Err(Error::Parse { line, message: format!("action '{raw}' is not 1, 2 or 3") }),
            }
        }
    }
    if games.is_empty() {
        return Err(Error::InsufficientData("data file has no rows".into()));
    }
    let ids: Vec<String> = games.keys().cloned().collect();
    let items = games.values().map(|g| FeatureItem::Game(*g)).collect();
    let mut observations = Vec::new();
    for (id, action, n) in choices {
        let item = ids.binary_search(&id).expect("id collected above");
        observations.extend((0..n).map(|_| Observation { item, outcome: Outcome::Action(action), group: None }));
    }
    let menu = Menu::new(ids, items)?;
    let data = Dataset::new(observations, menu.len())?;
    Ok((menu, data))
}

/// Loads a menu without outcomes: lottery rows (`id` plus lottery fields)
/// or game rows (`game_id` plus payoffs), in file order.
pub fn load_menu_csv(path: impl AsRef<Path>) -> Result<Menu> {
    let table = Table::read(path.as_ref())?;
    if table.col("r11").is_some() {
        let names = payoff_columns();
        let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let cols = table.require(&name_refs)?;
        let id_col = table.require(&["game_id"])?[0];
        let mut ids = Vec::new();
        let mut items = Vec::new();
        for (line, record) in &table.rows {
            ids.push(record.get(id_col).unwrap_or("").to_string());
            items.push(FeatureItem::Game(game_from(record, &cols, &names, *line)?));
        }
        return Menu::new(ids, items);
    }
    let three = table.col("z1").is_some();
    let fields: &[&str] = if three { &["z1", "z2", "z3", "p1", "p2", "p3"] } else { &["z_high", "z_low", "p"] };
    let cols = table.require(fields)?;
    let id_col = table.require(&["id"])?[0];
    let mut ids = Vec::new();
    let mut items = Vec::new();
    for (line, record) in &table.rows {
        let v = cols.iter().zip(fields).map(|(&c, n)| number(record, c, *line, n)).collect::<Result<Vec<f64>>>()?;
        ids.push(record.get(id_col).unwrap_or("").to_string());
        items.push(if three {
            FeatureItem::ThreeOutcome(
                ThreeOutcomeLottery::new([v[0], v[1], v[2]], [v[3], v[4], v[5]]).map_err(|e| item_error(*line, e))?,
            )
        } else {
            FeatureItem::Binary(BinaryLottery::new(v[0], v[1], v[2]).map_err(|e| item_error(*line, e))?)
        });
    }
    Menu::new(ids, items)
}
