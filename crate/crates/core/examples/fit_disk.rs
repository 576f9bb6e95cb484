//! Fits a logit field to a disk with several losses and reports how close
//! each one gets.
//!
//! `cargo run --release --example fit_disk`

use segloss::{confusion, fit_logits, metric_report, LossSpec, MaskField};

fn disk(size: usize, radius: f64) -> segloss::Result<MaskField> {
    let centre = (size as f64 - 1.0) / 2.0;
    let values = (0..size * size)
        .map(|i| {
            let (r, c) = ((i / size) as f64, (i % size) as f64);
            u8::from((r - centre).powi(2) + (c - centre).powi(2) <= radius * radius)
        })
        .collect();
    MaskField::new(size, size, values)
}

fn main() -> segloss::Result<()> {
    let y = disk(32, 10.0)?;
    for name in ["bce", "focal", "dice", "tversky", "log_cosh_dice", "combo"] {
        let spec: LossSpec = name.parse()?;
        let fit = fit_logits(&y, &spec, 500, 1.0, 7)?;
        let dice = metric_report(&confusion(&fit.final_p, &y, 0.5)?).dice;
        println!(
            "{name:<14} first {:>9.5}  final {:>9.5}  hard dice {:.4}",
            fit.loss_trace[0],
            fit.final_loss,
            dice.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
