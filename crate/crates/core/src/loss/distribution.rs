//! Cross-entropy family: binary, weighted, balanced and focal.
//!
//! Per-pixel cross-entropy is `CE_i = -[y ln p + (1 - y) ln(1 - p)]` on the
//! clipped probabilities; every loss here is a mean over all pixels.

use crate::error::{Error, Result};
use crate::field::{check_shape, clipped, MaskField, ProbField};

pub fn bce(p: &ProbField, y: &MaskField) -> Result<f64> {
    class_weighted_ce(p, y, 1.0, 1.0)
}

/// Cross-entropy with the foreground term scaled by `beta`.
pub fn weighted_ce(p: &ProbField, y: &MaskField, beta: f64) -> Result<f64> {
    check_wce(beta)?;
    class_weighted_ce(p, y, beta, 1.0)
}

/// Cross-entropy with the foreground term scaled by the image's background
/// fraction `beta` and the background term by `1 - beta`.
///
/// Single-class images give `beta` of 0 or 1, so one class is ignored.
pub fn balanced_ce(p: &ProbField, y: &MaskField) -> Result<f64> {
    check_shape(p, y)?;
    let beta = background_fraction(y);
    class_weighted_ce(p, y, beta, 1.0 - beta)
}

/// Focal loss `-alpha_t (1 - p_t)^gamma ln p_t`, averaged.
///
/// `alpha` weights foreground pixels and `1 - alpha` background pixels;
/// `alpha = 1` turns the class weighting off.
pub fn focal(p: &ProbField, y: &MaskField, alpha: f64, gamma: f64) -> Result<f64> {
    check_shape(p, y)?;
    check_focal(alpha, gamma)?;
    let (pc, _) = clipped(p);
    let sum: f64 = pc
        .iter()
        .zip(y.values())
        .map(|(&p, &y)| {
            let (pt, at) = focal_terms(p, y, alpha);
            -at * (1.0 - pt).powf(gamma) * pt.ln()
        })
        .sum();
    Ok(sum / p.len() as f64)
}

/// `(1/N) sum -[w_fg y ln p + w_bg (1 - y) ln(1 - p)]`.
pub(crate) fn class_weighted_ce(p: &ProbField, y: &MaskField, w_fg: f64, w_bg: f64) -> Result<f64> {
    check_shape(p, y)?;
    let (pc, _) = clipped(p);
    let sum: f64 = pc
        .iter()
        .zip(y.values())
        .map(|(&p, &y)| {
            if y == 1 {
                -(w_fg * p.ln())
            } else {
                -(w_bg * (1.0 - p).ln())
            }
        })
        .sum();
    Ok(sum / p.len() as f64)
}

/// `(1/N) sum W_i CE_i` for a per-pixel weight map.
pub(crate) fn pixel_weighted_ce(p: &ProbField, y: &MaskField, weights: &[f64]) -> f64 {
    let (pc, _) = clipped(p);
    let sum: f64 = pc
        .iter()
        .zip(y.values())
        .zip(weights)
        .map(|((&p, &y), &w)| w * ce_term(p, y))
        .sum();
    sum / p.len() as f64
}

pub(crate) fn ce_term(p: f64, y: u8) -> f64 {
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `dCE_i/dp_i` at a clipped probability.
pub(crate) fn ce_term_grad(p: f64, y: u8) -> f64 {
    if y == 1 {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

pub(crate) fn background_fraction(y: &MaskField) -> f64 {
    let n = y.len();
    (n - y.count_ones()) as f64 / n as f64
}

/// `(p_t, alpha_t)` for one pixel.
pub(crate) fn focal_terms(p: f64, y: u8, alpha: f64) -> (f64, f64) {
    let at = if alpha == 1.0 {
        1.0
    } else if y == 1 {
        alpha
    } else {
        1.0 - alpha
    };
    let pt = if y == 1 { p } else { 1.0 - p };
    (pt, at)
}

pub(crate) fn class_weighted_ce_grad(
    p: &ProbField,
    y: &MaskField,
    w_fg: f64,
    w_bg: f64,
) -> Vec<f64> {
    let n = p.len() as f64;
    let (pc, active) = clipped(p);
    pc.iter()
        .zip(&active)
        .zip(y.values())
        .map(|((&p, &active), &y)| {
            if !active {
                0.0
            } else if y == 1 {
                -w_fg / p / n
            } else {
                w_bg / (1.0 - p) / n
            }
        })
        .collect()
}

pub(crate) fn pixel_weighted_ce_grad(p: &ProbField, y: &MaskField, weights: &[f64]) -> Vec<f64> {
    let n = p.len() as f64;
    let (pc, active) = clipped(p);
    pc.iter()
        .zip(&active)
        .zip(y.values())
        .zip(weights)
        .map(|(((&p, &active), &y), &w)| {
            if active {
                w * ce_term_grad(p, y) / n
            } else {
                0.0
            }
        })
        .collect()
}

pub(crate) fn balanced_ce_grad(p: &ProbField, y: &MaskField) -> Vec<f64> {
    let beta = background_fraction(y);
    class_weighted_ce_grad(p, y, beta, 1.0 - beta)
}

pub(crate) fn focal_grad(p: &ProbField, y: &MaskField, alpha: f64, gamma: f64) -> Vec<f64> {
    let n = p.len() as f64;
    let (pc, active) = clipped(p);
    pc.iter()
        .zip(&active)
        .zip(y.values())
        .map(|((&p, &active), &y)| {
            if !active {
                return 0.0;
            }
            let (pt, at) = focal_terms(p, y, alpha);
            let q = 1.0 - pt;
            let modulation = if gamma == 0.0 {
                0.0
            } else {
                gamma * q.powf(gamma - 1.0) * pt.ln()
            };
            let d_pt = at * (modulation - q.powf(gamma) / pt);
            let sign = if y == 1 { 1.0 } else { -1.0 };
            sign * d_pt / n
        })
        .collect()
}

pub(crate) fn check_wce(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::out_of_range("beta", beta, "must be > 0"))
    }
}

pub(crate) fn check_focal(alpha: f64, gamma: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::out_of_range("alpha", alpha, "must lie in (0, 1]"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::out_of_range("gamma", gamma, "must be >= 0"));
    }
    Ok(())
}
