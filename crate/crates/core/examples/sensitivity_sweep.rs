//! How much restrictiveness moves when the uniform sampling distribution is
//! replaced by nearby beta distributions.

use restrictlab::fit::OptConfig;
use restrictlab::io::bernheim_sprenger_18;
use restrictlab::models::{CptModel, FreeParams};
use restrictlab::restrict::sensitivity_sweep;
use restrictlab::sampling::{BetaMethod, SamplerControls};

fn main() -> restrictlab::Result<()> {
    let menu = bernheim_sprenger_18();
    let model = CptModel::three_outcome(FreeParams::ALL);
    let controls = SamplerControls { beta_method: BetaMethod::Gibbs, ..SamplerControls::default() };
    let sweep = sensitivity_sweep(&model, &menu, 8, 40, 42, controls, &OptConfig::default())?;
    for ((a, b), r) in sweep.ab.iter().zip(&sweep.r) {
        println!("beta({a:.3}, {b:.3})  r = {r:.3}");
    }
    println!("mean {:.3}  range [{:.3}, {:.3}]", sweep.mean, sweep.min, sweep.max);
    Ok(())
}
