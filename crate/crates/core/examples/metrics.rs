//! Hard metrics at several thresholds.

use segloss::{confusion, metric_report, MaskField, ProbField};

fn main() -> segloss::Result<()> {
    let y = MaskField::new(2, 4, vec![1, 1, 0, 0, 1, 0, 0, 0])?;
    let p = ProbField::new(2, 4, vec![0.9, 0.4, 0.6, 0.1, 0.7, 0.3, 0.2, 0.05])?;

    println!("threshold  tp fp tn fn  precision  recall  specificity  dice");
    for t in [0.25, 0.5, 0.75, 0.95] {
        let c = confusion(&p, &y, t)?;
        let m = metric_report(&c);
        let show = |v: Option<f64>| v.map_or("   -   ".to_string(), |v| format!("{v:.4}"));
        println!(
            "{t:<9}  {:>2} {:>2} {:>2} {:>2}  {:>9}  {:>6}  {:>11}  {}",
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            show(m.precision),
            show(m.recall),
            show(m.specificity),
            show(m.dice)
        );
    }
    Ok(())
}
