//! Restrictiveness of four CPT specifications on a 25-lottery gain menu.
//! All specifications are scored on the same hypothetical draws.

use restrictlab::fit::OptConfig;
use restrictlab::io::synthetic_gain_25;
use restrictlab::models::{CptModel, FreeParams, Model};
use restrictlab::restrict::compare_restrictiveness;
use restrictlab::sampling::PermissibleSet;

fn spec(curvature: bool, gamma: bool, eta: bool) -> CptModel {
    CptModel::new(FreeParams { curvature, gamma, eta })
}

fn main() -> restrictlab::Result<()> {
    let menu = synthetic_gain_25();
    let set = PermissibleSet::default_for(&menu)?;
    let models = [spec(true, false, false), spec(false, true, true), spec(true, true, false), spec(true, true, true)];
    let refs: Vec<&dyn Model> = models.iter().map(|m| m as &dyn Model).collect();
    let reports = compare_restrictiveness(&refs, &menu, &set, 100, 42, 0.05, &OptConfig::default())?;
    for r in &reports {
        let (lo, hi) = r.ci.unwrap_or((f64::NAN, f64::NAN));
        println!("{:<20} r = {:.3}  [{lo:.3}, {hi:.3}]", r.model, r.r_hat);
    }
    Ok(())
}
