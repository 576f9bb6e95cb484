//! Combinations of a cross-entropy term and a Dice term.

use super::region::{dice_coeff_grad, dice_from_sums};
use super::{Degenerate, LossOutput, RegionSums};
use crate::error::{Error, Result};
use crate::field::{check_shape, clipped, MaskField, ProbField};
use crate::loss::distribution::{class_weighted_ce, class_weighted_ce_grad, focal_terms};
use crate::loss::region::check_smooth;

/// Floor applied to the Dice coefficient before taking its logarithm.
const DSC_FLOOR: f64 = 1e-7;

/// `alpha * mCE - (1 - alpha) * DSC`, where `mCE` weights foreground
/// cross-entropy by `ce_beta` and background by `1 - ce_beta`.
///
/// The value is reported as is, so it goes negative near a good prediction
/// and approaches `-(1 - alpha)` at a perfect one.
pub fn combo_loss(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    ce_beta: f64,
    smooth: f64,
) -> Result<f64> {
    check_shape(p, y)?;
    check_combo(alpha, ce_beta, smooth)?;
    let mce = class_weighted_ce(p, y, ce_beta, 1.0 - ce_beta)?;
    let dsc = dice_from_sums(&RegionSums::of(p.values(), y.values()), smooth);
    Ok(alpha * mce - (1.0 - alpha) * dsc)
}

/// `w_dice * (-ln DSC)^gamma_dice + w_ce * mean(w_l (-ln p_t)^gamma_ce)`.
///
/// The label weight `w_l = sqrt(N / n_l)` uses the per-image pixel count of
/// each label; a single-label image uses `w_l = 1` and is flagged.
pub fn exp_log_loss(
    p: &ProbField,
    y: &MaskField,
    w_dice: f64,
    w_ce: f64,
    gamma_dice: f64,
    gamma_ce: f64,
    smooth: f64,
) -> Result<LossOutput> {
    check_shape(p, y)?;
    check_exp_log(w_dice, w_ce, gamma_dice, gamma_ce, smooth)?;
    let dsc = floored_dice(p, y, smooth);
    let dice_term = (-dsc.ln()).max(0.0).powf(gamma_dice);

    let (label_weights, flags) = label_weights(y);
    let (pc, _) = clipped(p);
    let sum: f64 = pc
        .iter()
        .zip(y.values())
        .map(|(&p, &y)| {
            let (pt, _) = focal_terms(p, y, 1.0);
            label_weights[usize::from(y)] * (-pt.ln()).powf(gamma_ce)
        })
        .sum();
    let ce_term = sum / p.len() as f64;
    Ok(LossOutput {
        value: w_dice * dice_term + w_ce * ce_term,
        flags,
    })
}

fn floored_dice(p: &ProbField, y: &MaskField, smooth: f64) -> f64 {
    dice_from_sums(&RegionSums::of(p.values(), y.values()), smooth).max(DSC_FLOOR)
}

/// `[background weight, foreground weight]`.
pub(crate) fn label_weights(y: &MaskField) -> ([f64; 2], Vec<Degenerate>) {
    let n = y.len();
    let ones = y.count_ones();
    if ones == 0 || ones == n {
        return ([1.0, 1.0], vec![Degenerate::SingleLabel]);
    }
    let n = n as f64;
    (
        [(n / (n - ones as f64)).sqrt(), (n / ones as f64).sqrt()],
        Vec::new(),
    )
}

pub(crate) fn combo_grad(
    p: &ProbField,
    y: &MaskField,
    alpha: f64,
    ce_beta: f64,
    smooth: f64,
) -> Vec<f64> {
    class_weighted_ce_grad(p, y, ce_beta, 1.0 - ce_beta)
        .into_iter()
        .zip(dice_coeff_grad(p, y, smooth))
        .map(|(ce, dsc)| alpha * ce - (1.0 - alpha) * dsc)
        .collect()
}

/// Where the Dice floor is active, or `gamma_dice < 1` at a perfect Dice
/// score, the Dice term contributes no gradient.
pub(crate) fn exp_log_grad(
    p: &ProbField,
    y: &MaskField,
    w_dice: f64,
    w_ce: f64,
    gamma_dice: f64,
    gamma_ce: f64,
    smooth: f64,
) -> Vec<f64> {
    let n = p.len() as f64;
    let dsc = dice_from_sums(&RegionSums::of(p.values(), y.values()), smooth);
    let neg_log = (-dsc.ln()).max(0.0);
    let dice_outer = if dsc < DSC_FLOOR || (neg_log == 0.0 && gamma_dice < 1.0) {
        0.0
    } else {
        // d/dp (-ln DSC)^g = -g (-ln DSC)^(g-1) / DSC * dDSC/dp
        -gamma_dice * neg_log.powf(gamma_dice - 1.0) / dsc
    };
    let dice_grad = dice_coeff_grad(p, y, smooth);

    let (label_weights, _) = label_weights(y);
    let (pc, active) = clipped(p);
    pc.iter()
        .zip(&active)
        .zip(y.values())
        .zip(dice_grad)
        .map(|(((&p, &active), &y), dg)| {
            let ce = if active {
                let (pt, _) = focal_terms(p, y, 1.0);
                let sign = if y == 1 { 1.0 } else { -1.0 };
                // d/dp_t (-ln p_t)^g = -g (-ln p_t)^(g-1) / p_t
                let d_pt = -gamma_ce * (-pt.ln()).powf(gamma_ce - 1.0) / pt;
                label_weights[usize::from(y)] * sign * d_pt / n
            } else {
                0.0
            };
            w_dice * dice_outer * dg + w_ce * ce
        })
        .collect()
}

pub(crate) fn check_combo(alpha: f64, ce_beta: f64, smooth: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::out_of_range("alpha", alpha, "must lie in [0, 1]"));
    }
    if !(ce_beta > 0.0 && ce_beta < 1.0) {
        return Err(Error::out_of_range(
            "ce_beta",
            ce_beta,
            "must lie in (0, 1)",
        ));
    }
    check_smooth(smooth)
}

pub(crate) fn check_exp_log(
    w_dice: f64,
    w_ce: f64,
    gamma_dice: f64,
    gamma_ce: f64,
    smooth: f64,
) -> Result<()> {
    for (name, w) in [("w_dice", w_dice), ("w_ce", w_ce)] {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::out_of_range(name, w, "must be >= 0"));
        }
    }
    for (name, g) in [("gamma_dice", gamma_dice), ("gamma_ce", gamma_ce)] {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::out_of_range(name, g, "must be > 0"));
        }
    }
    check_smooth(smooth)
}
