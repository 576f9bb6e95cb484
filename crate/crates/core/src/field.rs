//! Dense row-major 2-D fields.
//!
//! Pixel `(row, col)` lives at flat index `row * width + col`. Fields are
//! immutable after construction.

use crate::error::{Error, Result};

/// Clip epsilon applied to probabilities on entry to every log-based loss.
pub const EPS_CLIP: f64 = 1e-7;

/// How far outside `[0, 1]` a probability may stray and still be snapped back.
const SNAP_TOLERANCE: f64 = 1e-12;

/// A plain `height x width` grid with no value invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    values: Vec<T>,
}

/// Per-pixel Euclidean distances in pixel units.
pub type DistanceField = Grid<f64>;

/// Per-pixel gradient `dL/dp`, same shape as the probability field.
pub type GradField = Grid<f64>;

impl<T> Grid<T> {
    pub fn new(height: usize, width: usize, values: Vec<T>) -> Result<Self> {
        check_dims(height, width, values.len())?;
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.values[row * self.width + col]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(f).collect(),
        }
    }
}

fn check_dims(height: usize, width: usize, len: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::EmptyDimensions { height, width });
    }
    let expected = height
        .checked_mul(width)
        .ok_or(Error::EmptyDimensions { height, width })?;
    if expected != len {
        return Err(Error::DimensionMismatch {
            height,
            width,
            expected,
            got: len,
        });
    }
    Ok(())
}

/// Predicted foreground probabilities, every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbField(Grid<f64>);

impl ProbField {
    /// Validates and builds a probability field.
    ///
    /// Values that miss `[0, 1]` by at most `1e-12` are snapped onto the
    /// boundary; anything further out (or non-finite) is rejected.
    pub fn new(height: usize, width: usize, mut values: Vec<f64>) -> Result<Self> {
        check_dims(height, width, values.len())?;
        for (index, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::ValueOutOfRange { index, value: *v });
            }
            if *v < 0.0 {
                if *v < -SNAP_TOLERANCE {
                    return Err(Error::ValueOutOfRange { index, value: *v });
                }
                *v = 0.0;
            } else if *v > 1.0 {
                if *v > 1.0 + SNAP_TOLERANCE {
                    return Err(Error::ValueOutOfRange { index, value: *v });
                }
                *v = 1.0;
            }
        }
        Ok(Self(Grid {
            height,
            width,
            values,
        }))
    }

    /// Builds a field whose values are already known to be valid.
    pub(crate) fn from_trusted(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self(Grid {
            height,
            width,
            values,
        })
    }

    /// Promotes a crisp mask to probabilities 0.0 / 1.0.
    pub fn from_mask(mask: &MaskField) -> Self {
        Self(mask.grid().map(|&v| f64::from(v)))
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height.saturating_mul(width)])
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.0
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn len(&self) -> usize {
        self.0.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }
}

/// Ground-truth labels, every value exactly 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskField(Grid<u8>);

impl MaskField {
    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        check_dims(height, width, values.len())?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::InvalidLabel { index, value });
        }
        Ok(Self(Grid {
            height,
            width,
            values,
        }))
    }

    pub fn from_bools(height: usize, width: usize, values: &[bool]) -> Result<Self> {
        Self::new(height, width, values.iter().map(|&b| u8::from(b)).collect())
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0; height.saturating_mul(width)])
    }

    pub(crate) fn from_trusted(height: usize, width: usize, values: Vec<u8>) -> Self {
        debug_assert!(values.iter().all(|&v| v <= 1));
        Self(Grid {
            height,
            width,
            values,
        })
    }

    pub fn grid(&self) -> &Grid<u8> {
        &self.0
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn len(&self) -> usize {
        self.0.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.values.is_empty()
    }

    pub fn values(&self) -> &[u8] {
        &self.0.values
    }

    /// Number of foreground pixels.
    pub fn count_ones(&self) -> usize {
        self.0.values.iter().filter(|&&v| v == 1).count()
    }
}

/// Clamps every probability into `[eps_clip, 1 - eps_clip]`.
pub fn clip_probabilities(p: &ProbField, eps_clip: f64) -> Result<ProbField> {
    if !(eps_clip > 0.0 && eps_clip < 0.5) {
        return Err(Error::InvalidEpsilon(eps_clip));
    }
    Ok(ProbField::from_trusted(
        p.height(),
        p.width(),
        p.values()
            .iter()
            .map(|&v| v.clamp(eps_clip, 1.0 - eps_clip))
            .collect(),
    ))
}

/// Clipped values plus, per pixel, whether the clamp left the value untouched.
/// Gradients are zero wherever the clamp is active.
pub(crate) fn clipped(p: &ProbField) -> (Vec<f64>, Vec<bool>) {
    p.values()
        .iter()
        .map(|&v| {
            let c = v.clamp(EPS_CLIP, 1.0 - EPS_CLIP);
            (c, c == v)
        })
        .unzip()
}

/// Rejects a `(p, y)` pair whose shapes differ.
pub fn check_shape(p: &ProbField, y: &MaskField) -> Result<()> {
    if p.height() != y.height() || p.width() != y.width() {
        return Err(Error::ShapeMismatch {
            pred_height: p.height(),
            pred_width: p.width(),
            truth_height: y.height(),
            truth_width: y.width(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_values_pass_through() {
        let p = ProbField::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert_eq!(p.values(), &[0.5, 0.5]);
        assert_eq!((p.height(), p.width()), (1, 2));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let err = ProbField::new(2, 2, vec![0.1, 0.2, 0.3]).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                got: 3,
                ..
            }
        ));
    }

    #[test]
    fn tiny_overshoot_snaps_to_boundary() {
        let p = ProbField::new(1, 1, vec![1.0 + 1e-13]).unwrap();
        assert_eq!(p.values()[0], 1.0);
        let p = ProbField::new(1, 1, vec![-1e-13]).unwrap();
        assert_eq!(p.values()[0], 0.0);
    }

    #[test]
    fn large_overshoot_reports_index_and_value() {
        let err = ProbField::new(1, 3, vec![0.2, 0.3, 1.5]).unwrap_err();
        match err {
            Error::ValueOutOfRange { index, value } => {
                assert_eq!(index, 2);
                assert_eq!(value, 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(ProbField::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(ProbField::new(0, 3, vec![]).is_err());
        assert!(MaskField::new(2, 0, vec![]).is_err());
    }

    #[test]
    fn mask_rejects_non_binary_labels() {
        let err = MaskField::new(1, 3, vec![0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { index: 2, value: 2 }));
    }

    #[test]
    fn clip_examples() {
        let p = ProbField::new(1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(
            clip_probabilities(&p, 1e-7).unwrap().values(),
            &[1e-7, 1.0 - 1e-7]
        );
        let p = ProbField::new(1, 1, vec![0.5]).unwrap();
        assert_eq!(clip_probabilities(&p, 1e-7).unwrap().values(), &[0.5]);
        let p = ProbField::new(1, 1, vec![1e-9]).unwrap();
        assert_eq!(clip_probabilities(&p, 1e-7).unwrap().values(), &[1e-7]);
    }

    #[test]
    fn clip_rejects_bad_epsilon() {
        let p = ProbField::new(1, 1, vec![0.5]).unwrap();
        for eps in [0.0, -1.0, 0.5, 0.7, f64::NAN] {
            assert!(matches!(
                clip_probabilities(&p, eps),
                Err(Error::InvalidEpsilon(_))
            ));
        }
    }

    #[test]
    fn shape_check() {
        let p = ProbField::filled(2, 3, 0.5).unwrap();
        let y = MaskField::zeros(3, 2).unwrap();
        assert!(matches!(
            check_shape(&p, &y),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(check_shape(&p, &MaskField::zeros(2, 3).unwrap()).is_ok());
    }
}
