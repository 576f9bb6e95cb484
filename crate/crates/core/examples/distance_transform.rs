//! Exact Euclidean distance transforms of a mask and of its outline.

use segloss::geometry::{edt_bruteforce, edt_exact, extract_boundary};
use segloss::{DistanceField, MaskField};

fn print_grid(title: &str, d: &DistanceField) {
    println!("{title}");
    for row in d.values().chunks(d.width()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:5.2}")).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> segloss::Result<()> {
    let (h, w) = (7, 9);
    let values = (0..h * w)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            u8::from((r - 3.0).powi(2) + (c - 4.0).powi(2) <= 5.0)
        })
        .collect();
    let mask = MaskField::new(h, w, values)?;

    let region = edt_exact(&mask)?;
    print_grid("distance to the foreground:", &region);

    let outline = extract_boundary(&mask);
    print_grid("distance to the outline:", &edt_exact(&outline)?);

    assert_eq!(region, edt_bruteforce(&mask)?);
    println!("matches the brute-force transform");
    Ok(())
}
