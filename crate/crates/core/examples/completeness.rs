//! Completeness of CPT specifications on simulated certainty equivalents.
//!
//! Data come from a CPT decision maker with additive normal noise, so the
//! full specification should be close to complete and the one-parameter
//! specifications less so.

use rand_distr::{Distribution, Normal};
use restrictlab::complete::{alt_fstar_discrepancy, estimate_completeness, CompleteOptions};
use restrictlab::fit::OptConfig;
use restrictlab::io::synthetic_gain_25;
use restrictlab::items::FeatureItem;
use restrictlab::models::{cpt_value, CptModel, CptParams, FreeParams, Model};
use restrictlab::problem::{Dataset, Observation, Outcome, ProblemKind};
use restrictlab::stats::substream;

fn main() -> restrictlab::Result<()> {
    let menu = synthetic_gain_25();
    let truth = CptParams::new(0.8, 0.6, 0.9)?;
    let noise = Normal::new(0.0, 3.0).unwrap();
    let mut rng = substream(11, 0);
    let mut obs = Vec::new();
    for _ in 0..80 {
        for (i, item) in menu.items().iter().enumerate() {
            let FeatureItem::Binary(lottery) = item else { unreachable!() };
            let ce = cpt_value(&truth, lottery);
            obs.push(Observation { item: i, outcome: Outcome::Value(ce + noise.sample(&mut rng)), group: None });
        }
    }
    let data = Dataset::new(obs, menu.len())?;
    println!("{} observations on {} lotteries", data.len(), menu.len());

    let cfg = OptConfig { lhs_points: 500, ..OptConfig::default() };
    let opts = CompleteOptions { seed: 3, ..CompleteOptions::default() };
    let specs = [
        CptModel::new(FreeParams::ALL),
        CptModel::new(FreeParams { curvature: false, gamma: true, eta: true }),
        CptModel::new(FreeParams { curvature: true, gamma: false, eta: false }),
    ];
    for model in &specs {
        let rep = estimate_completeness(model, &menu, &data, ProblemKind::ConditionalMean, &opts, &cfg)?;
        println!(
            "{:<20} kappa = {:.3} (se {:.3})  cv model {:.2}  naive {:.2}  unrestricted {:.2}",
            model.id(),
            rep.kappa_hat,
            rep.se,
            rep.cv_model,
            rep.cv_naive,
            rep.cv_unrestricted
        );
    }

    let alt = alt_fstar_discrepancy(&specs[2], &menu, &data, ProblemKind::ConditionalMean, 50, 5, &cfg)?;
    println!("{}: f*-discrepancy {:.3} (bootstrap se {:.3})", alt.model, alt.delta_hat, alt.bootstrap_se);
    Ok(())
}
