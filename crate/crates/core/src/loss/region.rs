//! Overlap losses on soft probabilities: Dice, Tversky, Focal Tversky,
//! log-cosh Dice and sensitivity-specificity.
//!
//! All region statistics are per image. An overlap ratio whose numerator and
//! denominator are both zero (possible only with `smooth = 0` and an empty
//! prediction and truth) is defined as 1.

use super::RegionSums;
use crate::error::{Error, Result};
use crate::field::{check_shape, MaskField, ProbField};

/// Soft Dice coefficient `(2 sum(p y) + s) / (sum(p) + sum(y) + s)`.
pub fn soft_dice_coeff(p: &ProbField, y: &MaskField, smooth: f64) -> Result<f64> {
    check_shape(p, y)?;
    check_smooth(smooth)?;
    Ok(dice_from_sums(
        &RegionSums::of(p.values(), y.values()),
        smooth,
    ))
}

pub fn dice_loss(p: &ProbField, y: &MaskField, smooth: f64) -> Result<f64> {
    Ok(1.0 - soft_dice_coeff(p, y, smooth)?)
}

/// Tversky index `(TP + s) / (TP + alpha FP + beta FN + s)` with soft counts.
pub fn tversky_index(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
) -> Result<f64> {
    check_shape(p, y)?;
    check_tversky(alpha, beta, smooth)?;
    Ok(tversky_from_sums(
        &RegionSums::of(p.values(), y.values()),
        alpha,
        beta,
        smooth,
    ))
}

pub fn tversky_loss(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
) -> Result<f64> {
    Ok(1.0 - tversky_index(p, y, alpha, beta, smooth)?)
}

/// `(1 - TI)^gamma`. The exponent is applied as given; a formulation written
/// with `1/gamma'` corresponds to `gamma = 1/gamma'`.
pub fn focal_tversky_loss(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
    gamma: f64,
) -> Result<f64> {
    check_focal_tversky_gamma(gamma)?;
    let ti = tversky_index(p, y, alpha, beta, smooth)?;
    Ok((1.0 - ti).max(0.0).powf(gamma))
}

pub fn log_cosh_dice_loss(p: &ProbField, y: &MaskField, smooth: f64) -> Result<f64> {
    Ok(dice_loss(p, y, smooth)?.cosh().ln())
}

/// `w * sens + (1 - w) * spec`, where `sens` is the squared error over
/// foreground pixels divided by `sum(y) + s` and `spec` the squared error over
/// background pixels divided by `sum(1 - y) + s`.
pub fn sens_spec_loss(p: &ProbField, y: &MaskField, w: f64, smooth: f64) -> Result<f64> {
    check_shape(p, y)?;
    check_sens_spec(w, smooth)?;
    let (mut fg_err, mut bg_err) = (0.0, 0.0);
    for (&p, &y) in p.values().iter().zip(y.values()) {
        let e = (p - f64::from(y)).powi(2);
        if y == 1 {
            fg_err += e;
        } else {
            bg_err += e;
        }
    }
    let (fg_den, bg_den) = sens_spec_denominators(y, smooth);
    Ok(w * ratio_or_zero(fg_err, fg_den) + (1.0 - w) * ratio_or_zero(bg_err, bg_den))
}

pub(crate) fn dice_from_sums(s: &RegionSums, smooth: f64) -> f64 {
    let num = 2.0 * s.intersection + smooth;
    let den = s.pred + s.truth + smooth;
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

pub(crate) fn tversky_from_sums(s: &RegionSums, alpha: f64, beta: f64, smooth: f64) -> f64 {
    let num = s.intersection + smooth;
    let den = tversky_denominator(s, alpha, beta, smooth);
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn tversky_denominator(s: &RegionSums, alpha: f64, beta: f64, smooth: f64) -> f64 {
    s.intersection + alpha * s.false_pos + beta * s.false_neg + smooth
}

fn sens_spec_denominators(y: &MaskField, smooth: f64) -> (f64, f64) {
    let ones = y.count_ones() as f64;
    let zeros = (y.len() - y.count_ones()) as f64;
    (ones + smooth, zeros + smooth)
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `dDSC/dp`.
pub(crate) fn dice_coeff_grad(p: &ProbField, y: &MaskField, smooth: f64) -> Vec<f64> {
    let s = RegionSums::of(p.values(), y.values());
    let num = 2.0 * s.intersection + smooth;
    let den = s.pred + s.truth + smooth;
    if den == 0.0 {
        return vec![0.0; p.len()];
    }
    let den2 = den * den;
    y.values()
        .iter()
        .map(|&y| (2.0 * f64::from(y) * den - num) / den2)
        .collect()
}

/// `dTI/dp`.
pub(crate) fn tversky_index_grad(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
) -> Vec<f64> {
    let s = RegionSums::of(p.values(), y.values());
    let num = s.intersection + smooth;
    let den = tversky_denominator(&s, alpha, beta, smooth);
    if den == 0.0 {
        return vec![0.0; p.len()];
    }
    let den2 = den * den;
    y.values()
        .iter()
        .map(|&y| {
            let (d_num, d_den) = if y == 1 {
                (1.0, 1.0 - beta)
            } else {
                (0.0, alpha)
            };
            (d_num * den - num * d_den) / den2
        })
        .collect()
}

pub(crate) fn dice_loss_grad(p: &ProbField, y: &MaskField, smooth: f64) -> Vec<f64> {
    dice_coeff_grad(p, y, smooth)
        .into_iter()
        .map(|g| -g)
        .collect()
}

pub(crate) fn tversky_loss_grad(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
) -> Vec<f64> {
    tversky_index_grad(p, y, alpha, beta, smooth)
        .into_iter()
        .map(|g| -g)
        .collect()
}

/// At a perfect prediction with `gamma < 1` the derivative is unbounded; the
/// gradient is reported as zero there.
pub(crate) fn focal_tversky_grad(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    beta: f64,
    smooth: f64,
    gamma: f64,
) -> Vec<f64> {
    let ti = tversky_from_sums(&RegionSums::of(p.values(), y.values()), alpha, beta, smooth);
    let base = (1.0 - ti).max(0.0);
    if base == 0.0 && gamma < 1.0 {
        return vec![0.0; p.len()];
    }
    let outer = gamma * base.powf(gamma - 1.0);
    tversky_index_grad(p, y, alpha, beta, smooth)
        .into_iter()
        .map(|g| -outer * g)
        .collect()
}

pub(crate) fn log_cosh_dice_grad(p: &ProbField, y: &MaskField, smooth: f64) -> Vec<f64> {
    let loss = 1.0 - dice_from_sums(&RegionSums::of(p.values(), y.values()), smooth);
    let outer = loss.tanh();
    dice_loss_grad(p, y, smooth)
        .into_iter()
        .map(|g| outer * g)
        .collect()
}

pub(crate) fn sens_spec_grad(p: &ProbField, y: &MaskField, w: f64, smooth: f64) -> Vec<f64> {
    let (fg_den, bg_den) = sens_spec_denominators(y, smooth);
    p.values()
        .iter()
        .zip(y.values())
        .map(|(&p, &y)| {
            let d = 2.0 * (p - f64::from(y));
            if y == 1 {
                w * ratio_or_zero(d, fg_den)
            } else {
                (1.0 - w) * ratio_or_zero(d, bg_den)
            }
        })
        .collect()
}

pub(crate) fn check_smooth(smooth: f64) -> Result<()> {
    if smooth >= 0.0 && smooth.is_finite() {
        Ok(())
    } else {
        Err(Error::out_of_range("smooth", smooth, "must be >= 0"))
    }
}

pub(crate) fn check_tversky(alpha: f64, beta: f64, smooth: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::out_of_range("alpha", alpha, "must be >= 0"));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::out_of_range("beta", beta, "must be >= 0"));
    }
    check_smooth(smooth)
}

pub(crate) fn check_focal_tversky_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::out_of_range("gamma", gamma, "must be > 0"))
    }
}

pub(crate) fn check_sens_spec(w: f64, smooth: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::out_of_range("w", w, "must lie in [0, 1]"));
    }
    check_smooth(smooth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pf(h: usize, w: usize, v: &[f64]) -> ProbField {
        ProbField::new(h, w, v.to_vec()).unwrap()
    }

    fn mf(h: usize, w: usize, v: &[u8]) -> MaskField {
        MaskField::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn dice_examples() {
        let y = mf(2, 2, &[1, 0, 0, 1]);
        assert_eq!(
            soft_dice_coeff(&ProbField::from_mask(&y), &y, 1.0).unwrap(),
            1.0
        );
        assert_eq!(dice_loss(&ProbField::from_mask(&y), &y, 1.0).unwrap(), 0.0);

        let p = ProbField::filled(2, 2, 0.5).unwrap();
        let y = mf(2, 2, &[1, 0, 0, 0]);
        assert_eq!(soft_dice_coeff(&p, &y, 1.0).unwrap(), 0.5);
        assert_eq!(dice_loss(&p, &y, 1.0).unwrap(), 0.5);

        let p = ProbField::filled(2, 2, 0.0).unwrap();
        assert_eq!(
            soft_dice_coeff(&p, &MaskField::zeros(2, 2).unwrap(), 1.0).unwrap(),
            1.0
        );

        let v = dice_loss(&pf(1, 2, &[1.0, 0.0]), &mf(1, 2, &[0, 1]), 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dice_without_smoothing_on_empty_pair_is_perfect() {
        let p = ProbField::filled(1, 3, 0.0).unwrap();
        let y = MaskField::zeros(1, 3).unwrap();
        assert_eq!(soft_dice_coeff(&p, &y, 0.0).unwrap(), 1.0);
        assert_eq!(tversky_index(&p, &y, 0.3, 0.7, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn tversky_examples() {
        let p = pf(1, 4, &[0.3, 0.8, 0.1, 0.6]);
        let y = mf(1, 4, &[1, 1, 0, 0]);
        // with alpha = beta = 1/2 the index is the Dice coefficient with twice
        // the smoothing: (TP + s) / (TP + FP/2 + FN/2 + s) = (2TP + 2s) / (P + Y + 2s)
        let ti = tversky_index(&p, &y, 0.5, 0.5, 1.0).unwrap();
        assert!((ti - soft_dice_coeff(&p, &y, 2.0).unwrap()).abs() < 1e-15);
        let ti = tversky_index(&p, &y, 0.5, 0.5, 0.0).unwrap();
        assert!((ti - soft_dice_coeff(&p, &y, 0.0).unwrap()).abs() < 1e-15);

        let y = mf(1, 3, &[1, 0, 1]);
        assert_eq!(
            tversky_index(&ProbField::from_mask(&y), &y, 0.3, 0.7, 1.0).unwrap(),
            1.0
        );

        let v = tversky_index(&pf(1, 2, &[1.0, 0.0]), &mf(1, 2, &[0, 1]), 0.3, 0.7, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        let v = tversky_loss(&pf(1, 2, &[1.0, 0.0]), &mf(1, 2, &[0, 1]), 0.3, 0.7, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn raising_a_false_positive_lowers_the_index() {
        let y = mf(1, 3, &[1, 0, 0]);
        let lo = pf(1, 3, &[0.8, 0.2, 0.1]);
        let hi = pf(1, 3, &[0.8, 0.6, 0.1]);
        let a = tversky_index(&lo, &y, 0.3, 0.7, 1.0).unwrap();
        let b = tversky_index(&hi, &y, 0.3, 0.7, 1.0).unwrap();
        assert!(b < a);
    }

    #[test]
    fn focal_tversky_examples() {
        let p = pf(1, 4, &[0.3, 0.8, 0.1, 0.6]);
        let y = mf(1, 4, &[1, 1, 0, 0]);
        assert_eq!(
            focal_tversky_loss(&p, &y, 0.3, 0.7, 1.0, 1.0).unwrap(),
            tversky_loss(&p, &y, 0.3, 0.7, 1.0).unwrap()
        );
        assert_eq!(
            focal_tversky_loss(&ProbField::from_mask(&y), &y, 0.3, 0.7, 1.0, 0.75).unwrap(),
            0.0
        );
        // TI = 0.5 from the disjoint pair above
        let v = focal_tversky_loss(
            &pf(1, 2, &[1.0, 0.0]),
            &mf(1, 2, &[0, 1]),
            0.3,
            0.7,
            1.0,
            0.75,
        )
        .unwrap();
        assert!((v - 0.5f64.powf(0.75)).abs() < 1e-15);
        assert!((v - 0.5946036).abs() < 1e-7);
        assert!(focal_tversky_loss(&p, &y, 0.3, 0.7, 1.0, 0.0).is_err());
    }

    #[test]
    fn log_cosh_dice_examples() {
        let y = mf(1, 2, &[1, 0]);
        assert_eq!(
            log_cosh_dice_loss(&ProbField::from_mask(&y), &y, 1.0).unwrap(),
            0.0
        );
        let p = ProbField::filled(2, 2, 0.5).unwrap();
        let y = mf(2, 2, &[1, 0, 0, 0]);
        let v = log_cosh_dice_loss(&p, &y, 1.0).unwrap();
        assert!((v - 0.5f64.cosh().ln()).abs() < 1e-15);
        assert!((v - 0.1201145).abs() < 1e-7);
        assert!(v <= dice_loss(&p, &y, 1.0).unwrap());
    }

    #[test]
    fn sens_spec_examples() {
        let y = mf(1, 3, &[1, 0, 1]);
        assert_eq!(
            sens_spec_loss(&ProbField::from_mask(&y), &y, 0.5, 1e-6).unwrap(),
            0.0
        );

        let v = sens_spec_loss(&pf(1, 2, &[0.5, 0.5]), &mf(1, 2, &[1, 0]), 0.5, 1e-6).unwrap();
        let expected = 0.5 * (0.25 / (1.0 + 1e-6)) + 0.5 * (0.25 / (1.0 + 1e-6));
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.2499998).abs() < 1e-7);

        let p = pf(1, 3, &[0.2, 0.9, 0.5]);
        let y = mf(1, 3, &[1, 1, 1]);
        let mse = (0.64 + 0.01 + 0.25) / 3.0;
        assert!((sens_spec_loss(&p, &y, 1.0, 0.0).unwrap() - mse).abs() < 1e-15);
    }

    #[test]
    fn parameter_ranges() {
        let p = pf(1, 1, &[0.5]);
        let y = mf(1, 1, &[1]);
        assert!(soft_dice_coeff(&p, &y, -1.0).is_err());
        assert!(tversky_index(&p, &y, -0.1, 0.7, 1.0).is_err());
        assert!(tversky_index(&p, &y, 0.3, -0.7, 1.0).is_err());
        assert!(sens_spec_loss(&p, &y, 1.1, 1e-6).is_err());
        assert!(sens_spec_loss(&p, &y, 0.5, -1e-6).is_err());
    }
}
