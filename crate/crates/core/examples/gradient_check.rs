//! Analytic gradients against central differences for every loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use segloss::gradients::{max_relative_error, random_interior_pair, FD_STEP};
use segloss::{fd_grad, loss_and_grad, LossSpec};

fn main() -> segloss::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (p, y) = random_interior_pair(6, 6, &mut rng)?;

    for spec in LossSpec::all_defaults() {
        let (value, analytic) = loss_and_grad(&spec, &p, &y)?;
        let numeric = fd_grad(&spec, &p, &y, FD_STEP)?;
        println!(
            "{:<18} L = {value:>10.6}  |dL/dp[0]| = {:.3e}  max rel err = {:.2e}",
            spec.name(),
            analytic.values()[0].abs(),
            max_relative_error(&analytic, &numeric)
        );
    }
    Ok(())
}
