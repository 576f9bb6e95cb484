//! Batch evaluation of a directory of predictions against ground-truth masks,
//! producing the same JSON report as `segloss eval`.

use std::fs;

use segloss::io::{build_manifest, read_pgm, read_prediction, write_float_grid, write_pgm};
use segloss::report::{evaluate_pair, EvalConfig, EvalReport};
use segloss::{Grid, MaskField};

type Shape = (&'static str, fn(usize, usize) -> bool);

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = tempfile::tempdir()?;
    let (pred_dir, truth_dir) = (root.path().join("pred"), root.path().join("truth"));
    fs::create_dir_all(&pred_dir)?;
    fs::create_dir_all(&truth_dir)?;

    // three 4x4 cases: a square, a stripe and an empty image
    let shapes: [Shape; 3] = [
        ("square", |r, c| (1..3).contains(&r) && (1..3).contains(&c)),
        ("stripe", |_, c| c == 0),
        ("empty", |_, _| false),
    ];
    for (stem, inside) in shapes {
        let truth: Vec<u8> = (0..16).map(|i| u8::from(inside(i / 4, i % 4))).collect();
        let pred: Vec<f64> = truth
            .iter()
            .map(|&t| if t == 1 { 0.8 } else { 0.15 })
            .collect();
        write_pgm(
            &MaskField::new(4, 4, truth)?,
            truth_dir.join(format!("{stem}.pgm")),
        )?;
        write_float_grid(
            &Grid::new(4, 4, pred)?,
            pred_dir.join(format!("{stem}.csv")),
        )?;
    }

    let config = EvalConfig {
        losses: ["bce", "dice", "hausdorff_dt"]
            .iter()
            .map(|s| Ok((s.to_string(), s.parse()?)))
            .collect::<segloss::Result<_>>()?,
        threshold: 0.5,
    };
    let manifest = build_manifest(&pred_dir, &truth_dir)?;
    let mut pairs = Vec::new();
    for pair in &manifest.pairs {
        let p = read_prediction(&pair.pred)?;
        let y = read_pgm(&pair.truth)?;
        pairs.push(evaluate_pair(
            pair.stem.clone(),
            pair.stem.clone(),
            &p,
            &y,
            &config,
        )?);
    }
    print!("{}", EvalReport::new(&config, pairs).to_json()?);
    Ok(())
}
