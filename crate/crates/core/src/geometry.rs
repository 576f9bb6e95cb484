//! Thresholding, boundary extraction and exact Euclidean distance transforms.
//!
//! The distance transform is the separable lower-envelope method: a 1-D
//! squared-distance transform down every column, then along every row. All
//! squared distances are integers and are computed exactly.

use crate::error::{Error, Result};
use crate::field::{DistanceField, Grid, MaskField, ProbField};

/// Foreground wherever `p >= threshold`.
pub fn binarize(p: &ProbField, threshold: f64) -> Result<MaskField> {
    check_threshold(threshold)?;
    Ok(MaskField::from_trusted(
        p.height(),
        p.width(),
        p.values()
            .iter()
            .map(|&v| u8::from(v >= threshold))
            .collect(),
    ))
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(threshold))
    }
}

/// Foreground pixels with at least one background 4-neighbour. Pixels outside
/// the image count as background.
pub fn extract_boundary(mask: &MaskField) -> MaskField {
    let (h, w) = (mask.height(), mask.width());
    let m = mask.values();
    let at = |r: usize, c: usize| m[r * w + c] == 1;
    let mut out = vec![0u8; h * w];
    for r in 0..h {
        for c in 0..w {
            if !at(r, c) {
                continue;
            }
            let interior = r > 0
                && c > 0
                && r + 1 < h
                && c + 1 < w
                && at(r - 1, c)
                && at(r + 1, c)
                && at(r, c - 1)
                && at(r, c + 1);
            out[r * w + c] = u8::from(!interior);
        }
    }
    MaskField::from_trusted(h, w, out)
}

/// Exact squared Euclidean distance from every pixel to the nearest
/// foreground pixel of `source`.
pub fn squared_edt(source: &MaskField) -> Result<Grid<u64>> {
    if source.count_ones() == 0 {
        return Err(Error::EmptySource);
    }
    let (h, w) = (source.height(), source.width());
    let mut dist: Vec<Option<u64>> = source
        .values()
        .iter()
        .map(|&v| (v == 1).then_some(0))
        .collect();

    let mut envelope = Envelope::with_capacity(h.max(w));
    let mut line = Vec::with_capacity(h.max(w));
    let mut out = Vec::with_capacity(h.max(w));

    for c in 0..w {
        line.clear();
        line.extend((0..h).map(|r| dist[r * w + c]));
        envelope.transform(&line, &mut out);
        for (r, &d) in out.iter().enumerate() {
            dist[r * w + c] = d;
        }
    }
    for r in 0..h {
        let row = &mut dist[r * w..(r + 1) * w];
        line.clear();
        line.extend_from_slice(row);
        envelope.transform(&line, &mut out);
        row.copy_from_slice(&out);
    }

    let values = dist
        .into_iter()
        .map(|d| d.expect("non-empty source reaches every pixel"))
        .collect();
    Grid::new(h, w, values)
}

/// Exact Euclidean distance transform of `source`'s foreground.
pub fn edt_exact(source: &MaskField) -> Result<DistanceField> {
    Ok(squared_edt(source)?.map(|&d| (d as f64).sqrt()))
}

/// Reference squared distance transform by exhaustive search over every
/// source pixel. Quadratic in the pixel count; meant for checking
/// [`squared_edt`].
pub fn squared_edt_bruteforce(source: &MaskField) -> Result<Grid<u64>> {
    let (h, w) = (source.height(), source.width());
    let sites: Vec<(i64, i64)> = source
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 1)
        .map(|(i, _)| ((i / w) as i64, (i % w) as i64))
        .collect();
    if sites.is_empty() {
        return Err(Error::EmptySource);
    }
    let mut values = Vec::with_capacity(h * w);
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let best = sites
                .iter()
                .map(|&(sr, sc)| ((sr - r).pow(2) + (sc - c).pow(2)) as u64)
                .min()
                .unwrap_or(u64::MAX);
            values.push(best);
        }
    }
    Grid::new(h, w, values)
}

/// [`squared_edt_bruteforce`] followed by a square root.
pub fn edt_bruteforce(source: &MaskField) -> Result<DistanceField> {
    Ok(squared_edt_bruteforce(source)?.map(|&d| (d as f64).sqrt()))
}

/// Scratch space for the 1-D lower envelope of parabolas `(q - v)^2 + f(v)`.
struct Envelope {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            vertices: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `f[q] = None` marks a pixel with no parabola (infinite cost).
    fn transform(&mut self, f: &[Option<u64>], out: &mut Vec<Option<u64>>) {
        out.clear();
        self.vertices.clear();
        self.bounds.clear();

        let height = |q: usize| f[q].map(|v| v as f64 + (q * q) as f64);
        for q in 0..f.len() {
            let Some(hq) = height(q) else { continue };
            loop {
                let Some(&v) = self.vertices.last() else {
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let hv = height(v).expect("vertices have finite cost");
                let s = (hq - hv) / (2.0 * (q - v) as f64);
                if s <= *self.bounds.last().expect("one bound per vertex") {
                    self.vertices.pop();
                    self.bounds.pop();
                } else {
                    self.bounds.push(s);
                    break;
                }
            }
            self.vertices.push(q);
        }

        if self.vertices.is_empty() {
            out.resize(f.len(), None);
            return;
        }
        let mut k = 0;
        for q in 0..f.len() {
            while k + 1 < self.vertices.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let v = self.vertices[k];
            let dq = q.abs_diff(v) as u64;
            out.push(Some(dq * dq + f[v].expect("vertices have finite cost")));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mask(h: usize, w: usize, v: &[u8]) -> MaskField {
        MaskField::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn binarize_ties_go_to_foreground() {
        let p = ProbField::new(1, 3, vec![0.5, 0.49, 0.51]).unwrap();
        assert_eq!(binarize(&p, 0.5).unwrap().values(), &[1, 0, 1]);
        let p = ProbField::new(1, 1, vec![0.7]).unwrap();
        assert_eq!(binarize(&p, 0.7).unwrap().values(), &[1]);
        let p = ProbField::filled(2, 2, 0.0).unwrap();
        assert_eq!(binarize(&p, 0.5).unwrap().count_ones(), 0);
    }

    #[test]
    fn binarize_rejects_bad_threshold() {
        let p = ProbField::filled(1, 1, 0.3).unwrap();
        for t in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(matches!(binarize(&p, t), Err(Error::InvalidThreshold(_))));
        }
    }

    #[test]
    fn binarize_is_identity_on_crisp_masks() {
        let m = mask(2, 3, &[1, 0, 1, 1, 0, 0]);
        assert_eq!(binarize(&ProbField::from_mask(&m), 0.5).unwrap(), m);
    }

    #[test]
    fn line_distances() {
        let d = edt_exact(&mask(1, 3, &[1, 0, 0])).unwrap();
        assert_eq!(d.values(), &[0.0, 1.0, 2.0]);
        let d = edt_bruteforce(&mask(1, 3, &[1, 0, 0])).unwrap();
        assert_eq!(d.values(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn small_2d_cases() {
        let m = mask(2, 2, &[1, 0, 0, 0]);
        let expected = [0.0, 1.0, 1.0, 2f64.sqrt()];
        assert_eq!(edt_bruteforce(&m).unwrap().values(), &expected);
        assert_eq!(edt_exact(&m).unwrap().values(), &expected);

        let m = mask(3, 3, &[1, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(*edt_exact(&m).unwrap().get(2, 2), 2.0 * 2f64.sqrt());
        assert_eq!(*squared_edt(&m).unwrap().get(2, 2), 8);
    }

    #[test]
    fn empty_source_is_an_error() {
        let m = MaskField::zeros(3, 4).unwrap();
        assert!(matches!(edt_exact(&m), Err(Error::EmptySource)));
        assert!(matches!(edt_bruteforce(&m), Err(Error::EmptySource)));
    }

    #[test]
    fn matches_bruteforce_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let h = rng.random_range(1..=12);
            let w = rng.random_range(1..=12);
            let density = rng.random_range(0.01..0.6);
            let mut v: Vec<u8> = (0..h * w)
                .map(|_| u8::from(rng.random_bool(density)))
                .collect();
            if !v.contains(&1) {
                let i = rng.random_range(0..h * w);
                v[i] = 1;
            }
            let m = mask(h, w, &v);
            assert_eq!(
                squared_edt(&m).unwrap(),
                squared_edt_bruteforce(&m).unwrap()
            );
        }
    }

    #[test]
    fn boundary_of_filled_square_is_its_ring() {
        let b = extract_boundary(&mask(3, 3, &[1; 9]));
        assert_eq!(b.values(), &[1, 1, 1, 1, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn boundary_edge_cases() {
        let b = extract_boundary(&mask(3, 3, &[0, 0, 0, 0, 1, 0, 0, 0, 0]));
        assert_eq!(b.values(), &[0, 0, 0, 0, 1, 0, 0, 0, 0]);
        assert_eq!(
            extract_boundary(&MaskField::zeros(4, 4).unwrap()).count_ones(),
            0
        );
        let mut v = vec![1u8; 25];
        v[0] = 0;
        let b = extract_boundary(&mask(5, 5, &v));
        // interior 3x3 block stays interior, corner hole exposes nothing new inside
        assert_eq!(*b.grid().get(2, 2), 0);
        assert_eq!(*b.grid().get(1, 1), 0);
        assert_eq!(*b.grid().get(0, 1), 1);
    }
}
