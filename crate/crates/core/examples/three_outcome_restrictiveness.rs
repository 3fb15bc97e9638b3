//! Restrictiveness of three-parameter CPT on the built-in 18-lottery menu.
//!
//! Run with `cargo run --release --example three_outcome_restrictiveness`.

use std::time::Instant;

use restrictlab::fit::OptConfig;
use restrictlab::io::bernheim_sprenger_18;
use restrictlab::models::{CptModel, FreeParams};
use restrictlab::restrict::{delta_histogram, estimate_restrictiveness};
use restrictlab::sampling::{MuSpec, PermissibleSet, SamplerControls};

fn main() -> restrictlab::Result<()> {
    let menu = bernheim_sprenger_18();
    let model = CptModel::three_outcome(FreeParams::ALL);
    let set = PermissibleSet::new(&menu, MuSpec::UniformFosd, SamplerControls::default())?;

    let start = Instant::now();
    let report = estimate_restrictiveness(&model, &menu, &set, 100, 42, 0.05, &OptConfig::default())?;
    let (lo, hi) = report.ci.expect("non-degenerate deltas");
    println!("model      {}", report.model);
    println!("r          {:.3} (se {:.3}, 95% CI [{lo:.3}, {hi:.3}])", report.r_hat, report.se);
    println!("mean d     naive {:.3}, model {:.3}", report.mean_naive_discrepancy, report.mean_model_discrepancy);
    println!("elapsed    {:.1?}", start.elapsed());

    println!("\ndelta histogram");
    for bin in delta_histogram(&report.deltas, 10) {
        println!("[{:.1}, {:.1})  {}", bin.lo, bin.hi, "#".repeat(bin.count));
    }
    Ok(())
}
