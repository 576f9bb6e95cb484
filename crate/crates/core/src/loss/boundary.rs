//! Boundary-aware losses built on exact distance transforms.
//!
//! Each loss splits into a weight map computed from thresholded geometry
//! (distance maps, boundaries) and a smooth per-pixel term weighted by it. The
//! weight map is a constant of `p` as far as gradients are concerned.
//!
//! Conventions: the Hausdorff surrogate measures distance to the foreground
//! region (zero inside it); the shape-aware and distance-penalty losses measure
//! distance to the ground-truth boundary. Boundaries use 4-connectivity with
//! the image border counted as background.

use super::{Degenerate, LossOutput};
use crate::error::{Error, Result};
use crate::field::{check_shape, MaskField, ProbField};
use crate::geometry::{binarize, check_threshold, edt_exact, extract_boundary};
use crate::loss::distribution::pixel_weighted_ce;

/// Frozen per-pixel weights plus the fallback flags raised building them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub weights: Vec<f64>,
    pub flags: Vec<Degenerate>,
}

/// Distance-map surrogate of the Hausdorff distance:
/// `(1/N) sum (p - y)^2 (d_y^alpha + d_p^alpha)`, where `d_y` is the distance
/// to the truth foreground and `d_p` the distance to the foreground of `p`
/// thresholded at `threshold`.
///
/// An empty foreground contributes no distance term and raises a flag.
pub fn hausdorff_dt_loss(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    threshold: f64,
) -> Result<LossOutput> {
    let map = hausdorff_weights(p, y, alpha, threshold)?;
    Ok(LossOutput {
        value: squared_error_weighted(p, y, &map.weights),
        flags: map.flags,
    })
}

/// `(1/N) sum (1 + E_i) CE_i`, where `E_i` is the distance to the truth
/// boundary at pixels on the predicted boundary and 0 elsewhere.
pub fn shape_aware_loss(p: &ProbField, y: &MaskField, threshold: f64) -> Result<LossOutput> {
    let map = shape_aware_weights(p, y, threshold)?;
    Ok(LossOutput {
        value: pixel_weighted_ce(p, y, &map.weights),
        flags: map.flags,
    })
}

/// `(1/N) sum (1 + phi_i) CE_i`, where `phi` is the distance to the truth
/// boundary scaled so its maximum is 1.
pub fn distance_map_penalty_loss(p: &ProbField, y: &MaskField) -> Result<LossOutput> {
    let map = distance_penalty_weights(p, y)?;
    Ok(LossOutput {
        value: pixel_weighted_ce(p, y, &map.weights),
        flags: map.flags,
    })
}

/// `d_y^alpha + d_p^alpha` per pixel.
pub fn hausdorff_weights(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    threshold: f64,
) -> Result<WeightMap> {
    check_shape(p, y)?;
    check_hausdorff(alpha, threshold)?;
    let mut flags = Vec::new();
    let mut weights = vec![0.0; p.len()];
    let pred = binarize(p, threshold)?;
    for (source, flag) in [
        (y, Degenerate::EmptyTruth),
        (&pred, Degenerate::EmptyPrediction),
    ] {
        match edt_exact(source) {
            Ok(d) => {
                for (w, &d) in weights.iter_mut().zip(d.values()) {
                    *w += d.powf(alpha);
                }
            }
            Err(Error::EmptySource) => flags.push(flag),
            Err(e) => return Err(e),
        }
    }
    Ok(WeightMap { weights, flags })
}

/// `1 + E_i` per pixel.
pub fn shape_aware_weights(p: &ProbField, y: &MaskField, threshold: f64) -> Result<WeightMap> {
    check_shape(p, y)?;
    check_threshold(threshold)?;
    let pred_boundary = extract_boundary(&binarize(p, threshold)?);
    let (dist, flags) = truth_boundary_distance(y)?;
    let weights = pred_boundary
        .values()
        .iter()
        .zip(&dist)
        .map(|(&b, &d)| if b == 1 { 1.0 + d } else { 1.0 })
        .collect();
    Ok(WeightMap { weights, flags })
}

/// `1 + phi_i` per pixel. Only `y` matters; `p` is taken for the shape check.
pub fn distance_penalty_weights(p: &ProbField, y: &MaskField) -> Result<WeightMap> {
    check_shape(p, y)?;
    let (dist, mut flags) = truth_boundary_distance(y)?;
    let max = dist.iter().copied().fold(0.0, f64::max);
    let weights = if flags.is_empty() && max == 0.0 {
        flags.push(Degenerate::FlatDistanceMap);
        vec![1.0; dist.len()]
    } else if max == 0.0 {
        vec![1.0; dist.len()]
    } else {
        dist.iter().map(|&d| 1.0 + d / max).collect()
    };
    Ok(WeightMap { weights, flags })
}

/// Distance to the truth boundary, or zeros with a flag if it is empty.
fn truth_boundary_distance(y: &MaskField) -> Result<(Vec<f64>, Vec<Degenerate>)> {
    match edt_exact(&extract_boundary(y)) {
        Ok(d) => Ok((d.into_values(), Vec::new())),
        Err(Error::EmptySource) => Ok((vec![0.0; y.len()], vec![Degenerate::EmptyTruthBoundary])),
        Err(e) => Err(e),
    }
}

pub(crate) fn squared_error_weighted(p: &ProbField, y: &MaskField, weights: &[f64]) -> f64 {
    let sum: f64 = p
        .values()
        .iter()
        .zip(y.values())
        .zip(weights)
        .map(|((&p, &y), &w)| (p - f64::from(y)).powi(2) * w)
        .sum();
    sum / p.len() as f64
}

pub(crate) fn squared_error_weighted_grad(
    p: &ProbField,
    y: &MaskField,
    weights: &[f64],
) -> Vec<f64> {
    let n = p.len() as f64;
    p.values()
        .iter()
        .zip(y.values())
        .zip(weights)
        .map(|((&p, &y), &w)| 2.0 * (p - f64::from(y)) * w / n)
        .collect()
}

pub(crate) fn check_hausdorff(alpha: f64, threshold: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::out_of_range("alpha", alpha, "must be >= 0"));
    }
    check_threshold(threshold)
}
