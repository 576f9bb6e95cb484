//! File formats: PGM masks, float grids (`.csv` text or `.slf` raw) and the
//! stem-based pairing of prediction and truth directories.
//!
//! The raw `.slf` layout is the 8-byte magic `SEGLOSSF`, height and width as
//! little-endian `u32`, then `height * width` little-endian `f32` samples in
//! row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::{Grid, MaskField, ProbField};
use crate::format::g17;

pub const SLF_MAGIC: &[u8; 8] = b"SEGLOSSF";

/// Samples at or above this value read as foreground.
const PGM_FOREGROUND_MIN: u32 = 128;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<MaskField> {
    decode_pgm(&read_bytes(path.as_ref())?)
}

pub fn write_pgm(mask: &MaskField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(mask))
}

/// Binary `P5`, maxval 255, foreground 255 and background 0.
pub fn encode_pgm(mask: &MaskField) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(
        mask.values()
            .iter()
            .map(|&v| if v == 1 { 255u8 } else { 0 }),
    );
    out
}

/// Decodes a `P5` (binary) or `P2` (ASCII) graymap with maxval up to 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<MaskField> {
    let mut header = HeaderReader { bytes, pos: 0 };
    let magic = header.token()?;
    let ascii = match magic.as_slice() {
        b"P5" => false,
        b"P2" => true,
        other => {
            return Err(Error::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions {width}x{height}"
        )));
    }
    let (width, height) = (width as usize, height as usize);
    let n = width * height;

    let samples: Vec<u32> = if ascii {
        (0..n)
            .map(|_| header.number("sample"))
            .collect::<Result<_>>()?
    } else {
        // exactly one whitespace byte separates maxval from the raster
        match header.bytes.get(header.pos) {
            Some(b) if b.is_ascii_whitespace() => header.pos += 1,
            Some(_) => return Err(Error::MalformedHeader("missing raster separator".into())),
            None => return Err(Error::UnexpectedEof),
        }
        let raster = &bytes[header.pos..];
        if raster.len() < n {
            return Err(Error::UnexpectedEof);
        }
        raster[..n].iter().map(|&b| u32::from(b)).collect()
    };
    if let Some((index, &s)) = samples.iter().enumerate().find(|(_, &s)| s > maxval) {
        return Err(Error::ValueOutOfRange {
            index,
            value: f64::from(s),
        });
    }
    let labels = samples
        .into_iter()
        .map(|s| u8::from(s >= PGM_FOREGROUND_MIN))
        .collect();
    MaskField::new(height, width, labels)
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Result<Vec<u8>> {
        loop {
            match self.bytes.get(self.pos) {
                None => return Err(Error::UnexpectedEof),
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
            }
        }
        let start = self.pos;
        while let Some(b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || *b == b'#' {
                break;
            }
            self.pos += 1;
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let token = self.token()?;
        std::str::from_utf8(&token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "expected {what}, found {:?}",
                    String::from_utf8_lossy(&token)
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    Csv,
    Slf,
}

impl GridFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") => Ok(GridFormat::Csv),
            Some("slf") => Ok(GridFormat::Slf),
            _ => Err(Error::UnsupportedFormat(path.to_path_buf())),
        }
    }
}

/// Reads a float grid, choosing the format from the file extension.
pub fn read_float_grid(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let path = path.as_ref();
    let format = GridFormat::from_path(path)?;
    let bytes = read_bytes(path)?;
    match format {
        GridFormat::Csv => decode_csv(&bytes),
        GridFormat::Slf => decode_slf(&bytes),
    }
}

/// Reads a float grid and validates it as probabilities.
pub fn read_prob_field(path: impl AsRef<Path>) -> Result<ProbField> {
    let grid = read_float_grid(path)?;
    ProbField::new(grid.height(), grid.width(), grid.into_values())
}

pub fn write_float_grid(grid: &Grid<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match GridFormat::from_path(path)? {
        GridFormat::Csv => encode_csv(grid).into_bytes(),
        GridFormat::Slf => encode_slf(grid),
    };
    write_bytes(path, &bytes)
}

/// One line per row, values in `%.17g` form, trailing newline.
pub fn encode_csv(grid: &Grid<f64>) -> String {
    let mut out = String::new();
    for row in grid.values().chunks(grid.width()) {
        let line: Vec<String> = row.iter().map(|&v| g17(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn decode_csv(bytes: &[u8]) -> Result<Grid<f64>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::MalformedHeader("CSV is not valid UTF-8".into()))?;
    let rows: Vec<&str> = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .collect();
    let Some(first) = rows.first() else {
        return Err(Error::UnexpectedEof);
    };
    let width = first.split(',').count();
    let mut values = Vec::with_capacity(width * rows.len());
    for (r, line) in rows.iter().enumerate() {
        let before = values.len();
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::MalformedHeader(format!("row {r}, column {c}: `{cell}` is not a number"))
            })?;
            if !v.is_finite() {
                return Err(Error::ValueOutOfRange {
                    index: r * width + c,
                    value: v,
                });
            }
            values.push(v);
        }
        let got = values.len() - before;
        if got != width {
            return Err(Error::RaggedRows {
                row: r,
                expected: width,
                got,
            });
        }
    }
    Grid::new(rows.len(), width, values)
}

/// Values are narrowed to `f32`.
pub fn encode_slf(grid: &Grid<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * grid.len());
    out.extend_from_slice(SLF_MAGIC);
    out.extend_from_slice(&(grid.height() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.width() as u32).to_le_bytes());
    for &v in grid.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_slf(bytes: &[u8]) -> Result<Grid<f64>> {
    if bytes.len() < SLF_MAGIC.len() {
        return Err(if SLF_MAGIC.starts_with(bytes) {
            Error::UnexpectedEof
        } else {
            Error::MalformedHeader("bad magic".into())
        });
    }
    if &bytes[..8] != SLF_MAGIC {
        return Err(Error::MalformedHeader("bad magic".into()));
    }
    if bytes.len() < 16 {
        return Err(Error::UnexpectedEof);
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (height, width) = (word(8) as usize, word(12) as usize);
    if height == 0 || width == 0 {
        return Err(Error::MalformedHeader(format!(
            "dimensions {height}x{width}"
        )));
    }
    let n = height
        .checked_mul(width)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[16..];
    let expected = n
        .checked_mul(4)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    if payload.len() < expected {
        return Err(Error::UnexpectedEof);
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut values = Vec::with_capacity(n);
    for (index, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f64::from(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
        if !v.is_finite() {
            return Err(Error::ValueOutOfRange { index, value: v });
        }
        values.push(v);
    }
    Grid::new(height, width, values)
}

/// Reads a prediction: float grids as probabilities, PGM masks as crisp 0/1.
pub fn read_prediction(path: impl AsRef<Path>) -> Result<ProbField> {
    let path = path.as_ref();
    if has_extension(path, "pgm") {
        Ok(ProbField::from_mask(&read_pgm(path)?))
    } else {
        read_prob_field(path)
    }
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// A prediction file and the truth file it is scored against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub stem: String,
    pub pred: PathBuf,
    pub truth: PathBuf,
}

/// Pairs in stem order plus notes about files that could not be paired.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairManifest {
    pub pairs: Vec<Pair>,
    pub warnings: Vec<String>,
}

/// Pairs files of the two directories by identical file stem, ignoring
/// extensions. Unmatched or ambiguous files become warnings.
pub fn build_manifest(
    pred_dir: impl AsRef<Path>,
    truth_dir: impl AsRef<Path>,
) -> Result<PairManifest> {
    let mut warnings = Vec::new();
    let preds = files_by_stem(pred_dir.as_ref(), "prediction", &mut warnings)?;
    let truths = files_by_stem(truth_dir.as_ref(), "truth", &mut warnings)?;

    let mut pairs = Vec::new();
    for (stem, truth) in &truths {
        match preds.get(stem) {
            Some(pred) => pairs.push(Pair {
                stem: stem.clone(),
                pred: pred.clone(),
                truth: truth.clone(),
            }),
            None => warnings.push(format!("no prediction for truth `{}`", truth.display())),
        }
    }
    for (stem, pred) in &preds {
        if !truths.contains_key(stem) {
            warnings.push(format!("no truth for prediction `{}`", pred.display()));
        }
    }
    Ok(PairManifest { pairs, warnings })
}

fn files_by_stem(
    dir: &Path,
    role: &str,
    warnings: &mut Vec<String>,
) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::NotADirectory(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();

    let mut by_stem: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut ambiguous = Vec::new();
    for path in files {
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            warnings.push(format!(
                "skipping {role} file with unusable name `{}`",
                path.display()
            ));
            continue;
        };
        if by_stem.insert(stem.to_string(), path.clone()).is_some() {
            ambiguous.push(stem.to_string());
        }
    }
    ambiguous.dedup();
    for stem in ambiguous {
        by_stem.remove(&stem);
        warnings.push(format!(
            "several {role} files share the stem `{stem}`; skipped"
        ));
    }
    Ok(by_stem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_threshold_rule() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend([255, 0, 0, 255]);
        assert_eq!(decode_pgm(&bytes).unwrap().values(), &[1, 0, 0, 1]);
        let mut bytes = b"P5 3 1 255 ".to_vec();
        bytes.extend([127, 128, 200]);
        assert_eq!(decode_pgm(&bytes).unwrap().values(), &[0, 1, 1]);
    }

    #[test]
    fn p2_with_comments() {
        let text = b"P2\n# a comment\n3 2 # trailing\n255\n0 255 128\n# mid\n127 1 250\n";
        let m = decode_pgm(text).unwrap();
        assert_eq!((m.height(), m.width()), (2, 3));
        assert_eq!(m.values(), &[0, 1, 1, 0, 0, 1]);
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(
            decode_pgm(b"P6\n1 1\n255\n\0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\xff\0"),
            Err(Error::UnexpectedEof)
        ));
        assert!(matches!(decode_pgm(b"P5\n2 2"), Err(Error::UnexpectedEof)));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n65535\n\0\0"),
            Err(Error::UnsupportedMaxval(65535))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n0\n\0"),
            Err(Error::UnsupportedMaxval(0))
        ));
        assert!(matches!(
            decode_pgm(b"P5\nx 1\n255\n\0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P2\n2 1\n100\n5 200\n"),
            Err(Error::ValueOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P2\n2 1\n255\n5\n"),
            Err(Error::UnexpectedEof)
        ));
        assert!(matches!(decode_pgm(b""), Err(Error::UnexpectedEof)));
    }

    #[test]
    fn encoded_pgm_layout() {
        let m = MaskField::new(1, 3, vec![1, 0, 1]).unwrap();
        assert_eq!(encode_pgm(&m), b"P5\n3 1\n255\n\xff\x00\xff");
    }

    #[test]
    fn csv_examples() {
        let g = decode_csv(b"0.5,0.5\n0.5,0.5").unwrap();
        assert_eq!((g.height(), g.width()), (2, 2));
        assert!(g.values().iter().all(|&v| v == 0.5));
        assert!(matches!(
            decode_csv(b"0.5,0.5\n0.5,0.5,0.5\n"),
            Err(Error::RaggedRows {
                row: 1,
                expected: 2,
                got: 3
            })
        ));
        assert!(matches!(decode_csv(b""), Err(Error::UnexpectedEof)));
        assert!(matches!(
            decode_csv(b"0.1,abc\n"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_csv(b"0.1,NaN\n"),
            Err(Error::ValueOutOfRange { .. })
        ));
        let g = Grid::new(1, 3, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(encode_csv(&g), "0,1,2\n");
    }

    #[test]
    fn slf_errors() {
        let g = Grid::new(2, 2, vec![0.25, 0.5, 0.75, 1.0]).unwrap();
        let bytes = encode_slf(&g);
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(decode_slf(&bytes).unwrap(), g);
        assert!(matches!(
            decode_slf(&bytes[..bytes.len() - 1]),
            Err(Error::UnexpectedEof)
        ));
        assert!(matches!(
            decode_slf(&bytes[..12]),
            Err(Error::UnexpectedEof)
        ));
        assert!(matches!(decode_slf(b"SEGL"), Err(Error::UnexpectedEof)));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_slf(&bad), Err(Error::MalformedHeader(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(decode_slf(&long), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn probability_reads_validate_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        fs::write(&path, "0.5,1.5\n").unwrap();
        assert!(matches!(
            read_prob_field(&path),
            Err(Error::ValueOutOfRange { index: 1, .. })
        ));
        assert!(read_float_grid(&path).is_ok());
        assert!(matches!(
            read_float_grid(dir.path().join("p.txt")),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn manifest_pairs_by_stem() {
        let pred = tempfile::tempdir().unwrap();
        let truth = tempfile::tempdir().unwrap();
        for name in ["b.slf", "a.slf"] {
            fs::write(pred.path().join(name), b"").unwrap();
        }
        for name in ["a.pgm", "b.pgm", "c.pgm"] {
            fs::write(truth.path().join(name), b"").unwrap();
        }
        let m = build_manifest(pred.path(), truth.path()).unwrap();
        let stems: Vec<_> = m.pairs.iter().map(|p| p.stem.as_str()).collect();
        assert_eq!(stems, ["a", "b"]);
        assert_eq!(m.warnings.len(), 1);
        assert!(m.warnings[0].contains("c.pgm"));
    }

    #[test]
    fn manifest_edge_cases() {
        let pred = tempfile::tempdir().unwrap();
        let truth = tempfile::tempdir().unwrap();
        let m = build_manifest(pred.path(), truth.path()).unwrap();
        assert!(m.pairs.is_empty() && m.warnings.is_empty());

        let file = pred.path().join("x.csv");
        fs::write(&file, b"").unwrap();
        assert!(matches!(
            build_manifest(&file, truth.path()),
            Err(Error::NotADirectory(_))
        ));

        fs::write(pred.path().join("x.slf"), b"").unwrap();
        fs::write(truth.path().join("x.pgm"), b"").unwrap();
        let m = build_manifest(pred.path(), truth.path()).unwrap();
        assert!(m.pairs.is_empty());
        assert!(m.warnings.iter().any(|w| w.contains("share the stem")));
    }
}
