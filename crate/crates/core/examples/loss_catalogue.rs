//! Evaluates every loss with default parameters on one small pair.
//!
//! Run with `cargo run --example loss_catalogue`.

use segloss::{LossSpec, MaskField, ProbField};

fn main() -> segloss::Result<()> {
    let y = MaskField::new(4, 4, vec![0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0])?;
    let p = ProbField::new(
        4,
        4,
        vec![
            0.1, 0.2, 0.1, 0.0, //
            0.2, 0.8, 0.7, 0.3, //
            0.1, 0.9, 0.6, 0.2, //
            0.0, 0.1, 0.2, 0.1,
        ],
    )?;

    println!("{:<64} {:>12}  flags", "loss", "value");
    for spec in LossSpec::all_defaults() {
        let out = spec.evaluate(&p, &y)?;
        let flags: Vec<&str> = out.flags.iter().map(|f| f.as_str()).collect();
        println!(
            "{:<64} {:>12.6}  {}",
            spec.to_string(),
            out.value,
            flags.join(",")
        );
    }
    Ok(())
}
