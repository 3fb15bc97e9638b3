//! Excess error equals discrepancy from the best mapping under squared loss,
//! but not under absolute loss.

use restrictlab::problem::{check_decomposition, Mapping, Outcome, ProblemKind, TrialDistribution};

fn main() -> restrictlab::Result<()> {
    // one item, outcome uniform on a fine grid of [0, 1]
    let n = 2000;
    let support: Vec<(Outcome, f64)> =
        (0..n).map(|i| (Outcome::Value((i as f64 + 0.5) / n as f64), 1.0 / n as f64)).collect();
    let trial = TrialDistribution { weights: vec![1.0], conditionals: vec![support] };
    let f = Mapping::scalar(vec![0.4])?;

    for kind in [ProblemKind::ConditionalMean, ProblemKind::ConditionalMedian] {
        let best = trial.optimal_mapping(kind)?;
        let (excess, disc) = check_decomposition(kind, &trial, &f)?;
        println!(
            "{kind:?}: best {:.4}, e(f) {:.5}, excess error {:.5}, discrepancy {:.5}",
            best.as_scalar().unwrap()[0],
            trial.expected_error(kind, &f)?,
            excess,
            disc
        );
    }
    Ok(())
}
