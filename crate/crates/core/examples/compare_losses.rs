//! How the Tversky weights and focal exponents shift the penalty between
//! false positives and false negatives.

use segloss::{LossSpec, MaskField, ProbField};

fn main() -> segloss::Result<()> {
    let y = MaskField::new(1, 8, vec![1, 1, 1, 1, 0, 0, 0, 0])?;
    // one prediction misses two foreground pixels, the other adds two extra
    let misses = ProbField::new(1, 8, vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    let extras = ProbField::new(1, 8, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])?;

    println!("{:<54} {:>9} {:>9}", "loss", "misses", "extras");
    for text in [
        "dice:smooth=0",
        "tversky:alpha=0.5,beta=0.5,smooth=0",
        "tversky:alpha=0.3,beta=0.7,smooth=0",
        "tversky:alpha=0.7,beta=0.3,smooth=0",
        "focal_tversky:alpha=0.3,beta=0.7,smooth=0,gamma=0.75",
        "focal_tversky:alpha=0.3,beta=0.7,smooth=0,gamma=2",
        "sens_spec:w=0.5",
        "sens_spec:w=0.9",
    ] {
        let spec: LossSpec = text.parse()?;
        println!(
            "{:<54} {:>9.5} {:>9.5}",
            text,
            spec.evaluate(&misses, &y)?.value,
            spec.evaluate(&extras, &y)?.value
        );
    }
    Ok(())
}
