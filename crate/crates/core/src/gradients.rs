//! Analytic gradients `dL/dp`, a central-difference oracle, and a small
//! logit-space gradient-descent harness.
//!
//! Differentiation contract: wherever the probability clamp is active the
//! gradient is zero, and every quantity derived from thresholding `p`
//! (binarized masks, boundaries, distance maps) is held constant. The
//! finite-difference oracle follows the same contract by freezing those
//! quantities at the base point, so both sides differentiate the same smooth
//! surrogate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{check_shape, GradField, Grid, MaskField, ProbField};
use crate::loss::{boundary, compound, distribution, region, LossSpec};

/// Quantities held constant with respect to `p`.
enum Frozen {
    Nothing,
    Weights(Vec<f64>),
}

fn freeze(spec: &LossSpec, p: &ProbField, y: &MaskField) -> Result<Frozen> {
    Ok(match *spec {
        LossSpec::HausdorffDt { alpha, threshold } => {
            Frozen::Weights(boundary::hausdorff_weights(p, y, alpha, threshold)?.weights)
        }
        LossSpec::ShapeAware { threshold } => {
            Frozen::Weights(boundary::shape_aware_weights(p, y, threshold)?.weights)
        }
        LossSpec::DistMapPenalty => {
            Frozen::Weights(boundary::distance_penalty_weights(p, y)?.weights)
        }
        _ => Frozen::Nothing,
    })
}

/// Loss value with thresholded quantities taken from `frozen`.
fn surrogate_value(spec: &LossSpec, frozen: &Frozen, p: &ProbField, y: &MaskField) -> Result<f64> {
    match (spec, frozen) {
        (LossSpec::HausdorffDt { .. }, Frozen::Weights(w)) => {
            Ok(boundary::squared_error_weighted(p, y, w))
        }
        (LossSpec::ShapeAware { .. } | LossSpec::DistMapPenalty, Frozen::Weights(w)) => {
            Ok(distribution::pixel_weighted_ce(p, y, w))
        }
        _ => Ok(spec.evaluate(p, y)?.value),
    }
}

fn analytic_grad(spec: &LossSpec, frozen: &Frozen, p: &ProbField, y: &MaskField) -> Vec<f64> {
    use LossSpec::*;
    match (*spec, frozen) {
        (Bce, _) => distribution::class_weighted_ce_grad(p, y, 1.0, 1.0),
        (Wce { beta }, _) => distribution::class_weighted_ce_grad(p, y, beta, 1.0),
        (BalancedCe, _) => distribution::balanced_ce_grad(p, y),
        (Focal { alpha, gamma }, _) => distribution::focal_grad(p, y, alpha, gamma),
        (Dice { smooth }, _) => region::dice_loss_grad(p, y, smooth),
        (
            Tversky {
                alpha,
                beta,
                smooth,
            },
            _,
        ) => region::tversky_loss_grad(p, y, alpha, beta, smooth),
        (
            FocalTversky {
                alpha,
                beta,
                smooth,
                gamma,
            },
            _,
        ) => region::focal_tversky_grad(p, y, alpha, beta, smooth, gamma),
        (LogCoshDice { smooth }, _) => region::log_cosh_dice_grad(p, y, smooth),
        (SensSpec { w, smooth }, _) => region::sens_spec_grad(p, y, w, smooth),
        (HausdorffDt { .. }, Frozen::Weights(w)) => boundary::squared_error_weighted_grad(p, y, w),
        (ShapeAware { .. } | DistMapPenalty, Frozen::Weights(w)) => {
            distribution::pixel_weighted_ce_grad(p, y, w)
        }
        (
            Combo {
                alpha,
                ce_beta,
                smooth,
            },
            _,
        ) => compound::combo_grad(p, y, alpha, ce_beta, smooth),
        (
            ExpLog {
                w_dice,
                w_ce,
                gamma_dice,
                gamma_ce,
                smooth,
            },
            _,
        ) => compound::exp_log_grad(p, y, w_dice, w_ce, gamma_dice, gamma_ce, smooth),
        (HausdorffDt { .. } | ShapeAware { .. } | DistMapPenalty, Frozen::Nothing) => {
            unreachable!("boundary losses always freeze a weight map")
        }
    }
}

/// Loss value (identical to [`LossSpec::evaluate`]) and its analytic gradient
/// with respect to `p`.
pub fn loss_and_grad(spec: &LossSpec, p: &ProbField, y: &MaskField) -> Result<(f64, GradField)> {
    check_shape(p, y)?;
    spec.validate()?;
    let value = spec.evaluate(p, y)?.value;
    let frozen = freeze(spec, p, y)?;
    let grad = analytic_grad(spec, &frozen, p, y);
    Ok((value, Grid::new(p.height(), p.width(), grad)?))
}

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Central differences `(L(p + h e_i) - L(p - h e_i)) / 2h` of the frozen
/// surrogate at `p`.
///
/// Perturbed values are not re-clipped to `[0, 1]`; keep `p` inside
/// `[2h, 1 - 2h]` for meaningful results.
pub fn fd_grad(spec: &LossSpec, p: &ProbField, y: &MaskField, h: f64) -> Result<GradField> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::out_of_range("h", h, "must lie in (0, 0.5)"));
    }
    check_shape(p, y)?;
    spec.validate()?;
    let frozen = freeze(spec, p, y)?;
    let mut values = p.values().to_vec();
    let mut grad = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let base = values[i];
        values[i] = base + h;
        let plus = surrogate_value(
            spec,
            &frozen,
            &ProbField::from_trusted(p.height(), p.width(), values.clone()),
            y,
        )?;
        values[i] = base - h;
        let minus = surrogate_value(
            spec,
            &frozen,
            &ProbField::from_trusted(p.height(), p.width(), values.clone()),
            y,
        )?;
        values[i] = base;
        grad.push((plus - minus) / (2.0 * h));
    }
    Grid::new(p.height(), p.width(), grad)
}

/// `max_i |a_i - f_i| / max(|f_i|, 1e-8)`.
pub fn max_relative_error(analytic: &GradField, reference: &GradField) -> f64 {
    analytic
        .values()
        .iter()
        .zip(reference.values())
        .map(|(&a, &f)| (a - f).abs() / f.abs().max(1e-8))
        .fold(0.0, f64::max)
}

/// Random pair for gradient checks: `p` uniform in `[0.05, 0.95]`, `y` a fair
/// coin per pixel with at least one pixel of each label.
pub fn random_interior_pair(
    height: usize,
    width: usize,
    rng: &mut impl Rng,
) -> Result<(ProbField, MaskField)> {
    let n = height * width;
    let p = (0..n).map(|_| rng.random_range(0.05..=0.95)).collect();
    let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.5))).collect();
    if n >= 2 {
        if !y.contains(&1) {
            y[rng.random_range(0..n)] = 1;
        }
        if !y.contains(&0) {
            y[rng.random_range(0..n)] = 0;
        }
    }
    Ok((
        ProbField::new(height, width, p)?,
        MaskField::new(height, width, y)?,
    ))
}

/// Worst relative gradient error for `spec` over `seeds` random pairs of the
/// given size (seeds `0..seeds`).
pub fn gradient_check(spec: &LossSpec, height: usize, width: usize, seeds: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, y) = random_interior_pair(height, width, &mut rng)?;
        let (_, analytic) = loss_and_grad(spec, &p, &y)?;
        let numeric = fd_grad(spec, &p, &y, FD_STEP)?;
        worst = worst.max(max_relative_error(&analytic, &numeric));
    }
    Ok(worst)
}

/// Outcome of [`fit_logits`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub steps_taken: usize,
    /// Loss before each update.
    pub loss_trace: Vec<f64>,
    /// `sigmoid(z)` after the last update.
    pub final_p: ProbField,
    /// Loss evaluated at `final_p`.
    pub final_loss: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Plain gradient descent on a logit field `z` so that `sigmoid(z)` fits `y`
/// under `spec`.
///
/// Logits start as seeded uniform noise in `[-0.1, 0.1]`. Each step evaluates
/// `L` and `g = dL/dp` at `p = sigmoid(z)`, then updates
/// `z -= lr * N * g * p * (1 - p)` with `N` the pixel count. Losses are
/// pixel means, so `lr` acts as a per-pixel step size and the same value
/// works at any image size.
pub fn fit_logits(
    y: &MaskField,
    spec: &LossSpec,
    steps: usize,
    lr: f64,
    seed: u64,
) -> Result<FitResult> {
    if steps == 0 {
        return Err(Error::out_of_range("steps", 0.0, "must be >= 1"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::out_of_range("lr", lr, "must be > 0"));
    }
    spec.validate()?;
    let (h, w) = (y.height(), y.width());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<f64> = (0..y.len()).map(|_| rng.random_range(-0.1..=0.1)).collect();
    let probs = |z: &[f64]| ProbField::from_trusted(h, w, z.iter().map(|&z| sigmoid(z)).collect());

    let scale = y.len() as f64;
    let mut loss_trace = Vec::with_capacity(steps);
    for _ in 0..steps {
        let p = probs(&z);
        let (loss, grad) = loss_and_grad(spec, &p, y)?;
        loss_trace.push(loss);
        for ((z, &g), &p) in z.iter_mut().zip(grad.values()).zip(p.values()) {
            *z -= lr * scale * g * p * (1.0 - p);
        }
    }
    let final_p = probs(&z);
    let final_loss = spec.evaluate(&final_p, y)?.value;
    Ok(FitResult {
        steps_taken: steps,
        loss_trace,
        final_p,
        final_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::LossKind;

    fn pf(h: usize, w: usize, v: &[f64]) -> ProbField {
        ProbField::new(h, w, v.to_vec()).unwrap()
    }

    fn mf(h: usize, w: usize, v: &[u8]) -> MaskField {
        MaskField::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn bce_single_pixel_gradient() {
        let (v, g) = loss_and_grad(&LossSpec::Bce, &pf(1, 1, &[0.5]), &mf(1, 1, &[1])).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g.values(), &[-2.0]);
        let fd = fd_grad(&LossSpec::Bce, &pf(1, 1, &[0.5]), &mf(1, 1, &[1]), FD_STEP).unwrap();
        assert!((fd.values()[0] + 2.0).abs() < 1e-8);
    }

    #[test]
    fn clipped_pixels_have_zero_gradient() {
        let p = pf(1, 3, &[0.0, 0.4, 1.0]);
        let y = mf(1, 3, &[1, 0, 0]);
        for spec in [
            LossSpec::Bce,
            LossSpec::Wce { beta: 2.0 },
            LossSpec::BalancedCe,
            LossSpec::Focal {
                alpha: 0.25,
                gamma: 2.0,
            },
        ] {
            let (_, g) = loss_and_grad(&spec, &p, &y).unwrap();
            assert_eq!(g.values()[0], 0.0, "{spec}");
            assert_eq!(g.values()[2], 0.0, "{spec}");
            assert!(g.values()[1] != 0.0, "{spec}");
        }
    }

    #[test]
    fn dice_gradient_at_perfect_prediction_matches_fd() {
        let y = mf(2, 3, &[1, 0, 1, 1, 0, 0]);
        let p = ProbField::from_mask(&y);
        let spec = LossSpec::Dice { smooth: 1.0 };
        let (v, g) = loss_and_grad(&spec, &p, &y).unwrap();
        assert_eq!(v, 0.0);
        let fd = fd_grad(&spec, &p, &y, FD_STEP).unwrap();
        assert!(max_relative_error(&g, &fd) < 1e-4);
    }

    #[test]
    fn sens_spec_fd_is_nearly_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, y) = random_interior_pair(5, 5, &mut rng).unwrap();
        let spec = LossSpec::default_for(LossKind::SensSpec);
        let (_, g) = loss_and_grad(&spec, &p, &y).unwrap();
        let fd = fd_grad(&spec, &p, &y, FD_STEP).unwrap();
        assert!(max_relative_error(&g, &fd) < 1e-8);
    }

    #[test]
    fn every_loss_matches_its_oracle() {
        for spec in LossSpec::all_defaults() {
            let err = gradient_check(&spec, 6, 6, 4).unwrap();
            assert!(err < 1e-4, "{spec}: {err}");
        }
    }

    #[test]
    fn value_matches_standalone_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, y) = random_interior_pair(4, 4, &mut rng).unwrap();
        for spec in LossSpec::all_defaults() {
            let (v, _) = loss_and_grad(&spec, &p, &y).unwrap();
            assert_eq!(v.to_bits(), spec.evaluate(&p, &y).unwrap().value.to_bits());
        }
    }

    #[test]
    fn fd_step_is_validated() {
        let p = pf(1, 1, &[0.5]);
        let y = mf(1, 1, &[1]);
        assert!(fd_grad(&LossSpec::Bce, &p, &y, 0.0).is_err());
        assert!(fd_grad(&LossSpec::Bce, &p, &y, -1e-5).is_err());
    }

    #[test]
    fn fit_records_one_loss_per_step() {
        let y = mf(2, 2, &[1, 0, 0, 1]);
        let fit = fit_logits(&y, &LossSpec::Bce, 1, 1.0, 7).unwrap();
        assert_eq!(fit.steps_taken, 1);
        assert_eq!(fit.loss_trace.len(), 1);
        assert!(fit_logits(&y, &LossSpec::Bce, 0, 1.0, 7).is_err());
        assert!(fit_logits(&y, &LossSpec::Bce, 5, 0.0, 7).is_err());
    }

    #[test]
    fn fit_is_deterministic_per_seed() {
        let y = mf(3, 3, &[0, 1, 0, 1, 1, 1, 0, 1, 0]);
        let spec = LossSpec::Dice { smooth: 1.0 };
        let a = fit_logits(&y, &spec, 20, 1.0, 9).unwrap();
        let b = fit_logits(&y, &spec, 20, 1.0, 9).unwrap();
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.final_p, b.final_p);
    }
}
