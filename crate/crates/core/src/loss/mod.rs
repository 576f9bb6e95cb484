//! The loss catalogue.
//!
//! Every loss takes a probability field `p` and a mask `y` of the same shape
//! and returns a scalar. Pixel terms are averaged over the whole image. Log
//! terms see `p` clipped to `[1e-7, 1 - 1e-7]`; region and squared-error terms
//! use the raw probabilities.
//!
//! [`LossSpec`] names a loss together with its resolved hyperparameters and is
//! what the gradient, evaluation and CLI layers dispatch on.

pub mod boundary;
pub mod compound;
pub mod distribution;
pub mod region;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{MaskField, ProbField};

/// Identifier of one of the fourteen losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossKind {
    Bce,
    Wce,
    BalancedCe,
    Focal,
    Dice,
    Tversky,
    FocalTversky,
    LogCoshDice,
    SensSpec,
    HausdorffDt,
    ShapeAware,
    DistMapPenalty,
    Combo,
    ExpLog,
}

impl LossKind {
    pub const ALL: [LossKind; 14] = [
        LossKind::Bce,
        LossKind::Wce,
        LossKind::BalancedCe,
        LossKind::Focal,
        LossKind::Dice,
        LossKind::Tversky,
        LossKind::FocalTversky,
        LossKind::LogCoshDice,
        LossKind::SensSpec,
        LossKind::HausdorffDt,
        LossKind::ShapeAware,
        LossKind::DistMapPenalty,
        LossKind::Combo,
        LossKind::ExpLog,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Bce => "bce",
            LossKind::Wce => "wce",
            LossKind::BalancedCe => "balanced_ce",
            LossKind::Focal => "focal",
            LossKind::Dice => "dice",
            LossKind::Tversky => "tversky",
            LossKind::FocalTversky => "focal_tversky",
            LossKind::LogCoshDice => "log_cosh_dice",
            LossKind::SensSpec => "sens_spec",
            LossKind::HausdorffDt => "hausdorff_dt",
            LossKind::ShapeAware => "shape_aware",
            LossKind::DistMapPenalty => "dist_map_penalty",
            LossKind::Combo => "combo",
            LossKind::ExpLog => "exp_log",
        }
    }

    /// Parameter names and their defaults, in canonical order.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            LossKind::Bce | LossKind::BalancedCe | LossKind::DistMapPenalty => &[],
            LossKind::Wce => &[("beta", 1.0)],
            LossKind::Focal => &[("alpha", 0.25), ("gamma", 2.0)],
            LossKind::Dice | LossKind::LogCoshDice => &[("smooth", 1.0)],
            LossKind::Tversky => &[("alpha", 0.3), ("beta", 0.7), ("smooth", 1.0)],
            LossKind::FocalTversky => &[
                ("alpha", 0.3),
                ("beta", 0.7),
                ("smooth", 1.0),
                ("gamma", 0.75),
            ],
            LossKind::SensSpec => &[("w", 0.5), ("smooth", 1e-6)],
            LossKind::HausdorffDt => &[("alpha", 2.0), ("threshold", 0.5)],
            LossKind::ShapeAware => &[("threshold", 0.5)],
            LossKind::Combo => &[("alpha", 0.5), ("ce_beta", 0.5), ("smooth", 1.0)],
            LossKind::ExpLog => &[
                ("w_dice", 0.8),
                ("w_ce", 0.2),
                ("gamma_dice", 0.3),
                ("gamma_ce", 0.3),
                ("smooth", 1.0),
            ],
        }
    }

    /// Losses whose value depends on thresholded geometry of `p`.
    pub fn uses_distance_maps(self) -> bool {
        matches!(
            self,
            LossKind::HausdorffDt | LossKind::ShapeAware | LossKind::DistMapPenalty
        )
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownLoss(s.to_string()))
    }
}

/// A loss with fully resolved hyperparameters.
///
/// Tversky-family `alpha` weights false positives `sum((1 - y) p)` and `beta`
/// weights false negatives `sum(y (1 - p))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LossSpec {
    #[default]
    Bce,
    Wce {
        beta: f64,
    },
    BalancedCe,
    Focal {
        alpha: f64,
        gamma: f64,
    },
    Dice {
        smooth: f64,
    },
    Tversky {
        alpha: f64,
        beta: f64,
        smooth: f64,
    },
    FocalTversky {
        alpha: f64,
        beta: f64,
        smooth: f64,
        gamma: f64,
    },
    LogCoshDice {
        smooth: f64,
    },
    SensSpec {
        w: f64,
        smooth: f64,
    },
    HausdorffDt {
        alpha: f64,
        threshold: f64,
    },
    ShapeAware {
        threshold: f64,
    },
    DistMapPenalty,
    Combo {
        alpha: f64,
        ce_beta: f64,
        smooth: f64,
    },
    ExpLog {
        w_dice: f64,
        w_ce: f64,
        gamma_dice: f64,
        gamma_ce: f64,
        smooth: f64,
    },
}

impl LossSpec {
    /// The loss with every parameter at its default.
    pub fn default_for(kind: LossKind) -> Self {
        let defaults: BTreeMap<&str, f64> = kind.defaults().iter().copied().collect();
        Self::from_params(kind, |name| defaults[name])
    }

    /// Every loss at its defaults, in catalogue order.
    pub fn all_defaults() -> Vec<LossSpec> {
        LossKind::ALL.into_iter().map(Self::default_for).collect()
    }

    /// Parses `name` or `name:key=value,key=value`. Omitted parameters take
    /// their defaults; the result is validated.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((name, rest)) => (name.trim(), Some(rest)),
            None => (text, None),
        };
        let kind: LossKind = name.parse()?;
        let mut given: BTreeMap<&'static str, f64> = BTreeMap::new();
        for item in rest.into_iter().flat_map(|r| r.split(',')) {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidParamValue {
                    param: item.to_string(),
                    text: String::new(),
                })?;
            let key = key.trim();
            let &(canonical, _) =
                kind.defaults()
                    .iter()
                    .find(|(k, _)| *k == key)
                    .ok_or_else(|| Error::UnknownParam {
                        loss: kind.name().to_string(),
                        param: key.to_string(),
                    })?;
            let value: f64 = value.trim().parse().map_err(|_| Error::InvalidParamValue {
                param: key.to_string(),
                text: value.trim().to_string(),
            })?;
            if given.insert(canonical, value).is_some() {
                return Err(Error::DuplicateParam {
                    param: key.to_string(),
                });
            }
        }
        let defaults: BTreeMap<&str, f64> = kind.defaults().iter().copied().collect();
        let spec = Self::from_params(kind, |name| {
            given.get(name).copied().unwrap_or(defaults[name])
        });
        spec.validate()?;
        Ok(spec)
    }

    fn from_params(kind: LossKind, get: impl Fn(&str) -> f64) -> Self {
        match kind {
            LossKind::Bce => LossSpec::Bce,
            LossKind::Wce => LossSpec::Wce { beta: get("beta") },
            LossKind::BalancedCe => LossSpec::BalancedCe,
            LossKind::Focal => LossSpec::Focal {
                alpha: get("alpha"),
                gamma: get("gamma"),
            },
            LossKind::Dice => LossSpec::Dice {
                smooth: get("smooth"),
            },
            LossKind::Tversky => LossSpec::Tversky {
                alpha: get("alpha"),
                beta: get("beta"),
                smooth: get("smooth"),
            },
            LossKind::FocalTversky => LossSpec::FocalTversky {
                alpha: get("alpha"),
                beta: get("beta"),
                smooth: get("smooth"),
                gamma: get("gamma"),
            },
            LossKind::LogCoshDice => LossSpec::LogCoshDice {
                smooth: get("smooth"),
            },
            LossKind::SensSpec => LossSpec::SensSpec {
                w: get("w"),
                smooth: get("smooth"),
            },
            LossKind::HausdorffDt => LossSpec::HausdorffDt {
                alpha: get("alpha"),
                threshold: get("threshold"),
            },
            LossKind::ShapeAware => LossSpec::ShapeAware {
                threshold: get("threshold"),
            },
            LossKind::DistMapPenalty => LossSpec::DistMapPenalty,
            LossKind::Combo => LossSpec::Combo {
                alpha: get("alpha"),
                ce_beta: get("ce_beta"),
                smooth: get("smooth"),
            },
            LossKind::ExpLog => LossSpec::ExpLog {
                w_dice: get("w_dice"),
                w_ce: get("w_ce"),
                gamma_dice: get("gamma_dice"),
                gamma_ce: get("gamma_ce"),
                smooth: get("smooth"),
            },
        }
    }

    pub fn kind(&self) -> LossKind {
        match self {
            LossSpec::Bce => LossKind::Bce,
            LossSpec::Wce { .. } => LossKind::Wce,
            LossSpec::BalancedCe => LossKind::BalancedCe,
            LossSpec::Focal { .. } => LossKind::Focal,
            LossSpec::Dice { .. } => LossKind::Dice,
            LossSpec::Tversky { .. } => LossKind::Tversky,
            LossSpec::FocalTversky { .. } => LossKind::FocalTversky,
            LossSpec::LogCoshDice { .. } => LossKind::LogCoshDice,
            LossSpec::SensSpec { .. } => LossKind::SensSpec,
            LossSpec::HausdorffDt { .. } => LossKind::HausdorffDt,
            LossSpec::ShapeAware { .. } => LossKind::ShapeAware,
            LossSpec::DistMapPenalty => LossKind::DistMapPenalty,
            LossSpec::Combo { .. } => LossKind::Combo,
            LossSpec::ExpLog { .. } => LossKind::ExpLog,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Resolved parameters in canonical order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            LossSpec::Bce | LossSpec::BalancedCe | LossSpec::DistMapPenalty => vec![],
            LossSpec::Wce { beta } => vec![("beta", beta)],
            LossSpec::Focal { alpha, gamma } => vec![("alpha", alpha), ("gamma", gamma)],
            LossSpec::Dice { smooth } | LossSpec::LogCoshDice { smooth } => {
                vec![("smooth", smooth)]
            }
            LossSpec::Tversky {
                alpha,
                beta,
                smooth,
            } => vec![("alpha", alpha), ("beta", beta), ("smooth", smooth)],
            LossSpec::FocalTversky {
                alpha,
                beta,
                smooth,
                gamma,
            } => vec![
                ("alpha", alpha),
                ("beta", beta),
                ("smooth", smooth),
                ("gamma", gamma),
            ],
            LossSpec::SensSpec { w, smooth } => vec![("w", w), ("smooth", smooth)],
            LossSpec::HausdorffDt { alpha, threshold } => {
                vec![("alpha", alpha), ("threshold", threshold)]
            }
            LossSpec::ShapeAware { threshold } => vec![("threshold", threshold)],
            LossSpec::Combo {
                alpha,
                ce_beta,
                smooth,
            } => vec![("alpha", alpha), ("ce_beta", ce_beta), ("smooth", smooth)],
            LossSpec::ExpLog {
                w_dice,
                w_ce,
                gamma_dice,
                gamma_ce,
                smooth,
            } => vec![
                ("w_dice", w_dice),
                ("w_ce", w_ce),
                ("gamma_dice", gamma_dice),
                ("gamma_ce", gamma_ce),
                ("smooth", smooth),
            ],
        }
    }

    /// Checks every parameter against its legal range.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.params() {
            if !value.is_finite() {
                return Err(Error::out_of_range(name, value, "must be finite"));
            }
        }
        match *self {
            LossSpec::Bce | LossSpec::BalancedCe | LossSpec::DistMapPenalty => Ok(()),
            LossSpec::Wce { beta } => distribution::check_wce(beta),
            LossSpec::Focal { alpha, gamma } => distribution::check_focal(alpha, gamma),
            LossSpec::Dice { smooth } | LossSpec::LogCoshDice { smooth } => {
                region::check_smooth(smooth)
            }
            LossSpec::Tversky {
                alpha,
                beta,
                smooth,
            } => region::check_tversky(alpha, beta, smooth),
            LossSpec::FocalTversky {
                alpha,
                beta,
                smooth,
                gamma,
            } => {
                region::check_tversky(alpha, beta, smooth)?;
                region::check_focal_tversky_gamma(gamma)
            }
            LossSpec::SensSpec { w, smooth } => region::check_sens_spec(w, smooth),
            LossSpec::HausdorffDt { alpha, threshold } => {
                boundary::check_hausdorff(alpha, threshold)
            }
            LossSpec::ShapeAware { threshold } => crate::geometry::check_threshold(threshold),
            LossSpec::Combo {
                alpha,
                ce_beta,
                smooth,
            } => compound::check_combo(alpha, ce_beta, smooth),
            LossSpec::ExpLog {
                w_dice,
                w_ce,
                gamma_dice,
                gamma_ce,
                smooth,
            } => compound::check_exp_log(w_dice, w_ce, gamma_dice, gamma_ce, smooth),
        }
    }

    /// Evaluates the loss on one `(p, y)` pair.
    pub fn evaluate(&self, p: &ProbField, y: &MaskField) -> Result<LossOutput> {
        use LossSpec::*;
        let plain = |value: Result<f64>| value.map(LossOutput::plain);
        match *self {
            Bce => plain(distribution::bce(p, y)),
            Wce { beta } => plain(distribution::weighted_ce(p, y, beta)),
            BalancedCe => plain(distribution::balanced_ce(p, y)),
            Focal { alpha, gamma } => plain(distribution::focal(p, y, alpha, gamma)),
            Dice { smooth } => plain(region::dice_loss(p, y, smooth)),
            Tversky {
                alpha,
                beta,
                smooth,
            } => plain(region::tversky_loss(p, y, alpha, beta, smooth)),
            FocalTversky {
                alpha,
                beta,
                smooth,
                gamma,
            } => plain(region::focal_tversky_loss(p, y, alpha, beta, smooth, gamma)),
            LogCoshDice { smooth } => plain(region::log_cosh_dice_loss(p, y, smooth)),
            SensSpec { w, smooth } => plain(region::sens_spec_loss(p, y, w, smooth)),
            HausdorffDt { alpha, threshold } => boundary::hausdorff_dt_loss(p, y, alpha, threshold),
            ShapeAware { threshold } => boundary::shape_aware_loss(p, y, threshold),
            DistMapPenalty => boundary::distance_map_penalty_loss(p, y),
            Combo {
                alpha,
                ce_beta,
                smooth,
            } => plain(compound::combo_loss(p, y, alpha, ce_beta, smooth)),
            ExpLog {
                w_dice,
                w_ce,
                gamma_dice,
                gamma_ce,
                smooth,
            } => compound::exp_log_loss(p, y, w_dice, w_ce, gamma_dice, gamma_ce, smooth),
        }
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossSpec::parse(s)
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        for (i, (key, value)) in self.params().into_iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{key}={value}")?;
        }
        Ok(())
    }
}

/// Marker for a loss value computed under a documented fallback rather than
/// the nominal formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Degenerate {
    /// Ground truth has no foreground; its distance map is taken as zero.
    EmptyTruth,
    /// Thresholded prediction has no foreground; its distance map is taken as zero.
    EmptyPrediction,
    /// Ground truth has no boundary pixels; boundary distances are taken as zero.
    EmptyTruthBoundary,
    /// Every pixel lies on the truth boundary, so normalised distances are
    /// taken as zero.
    FlatDistanceMap,
    /// Every pixel carries the same label; label weights fall back to 1.
    SingleLabel,
}

impl Degenerate {
    pub fn as_str(self) -> &'static str {
        match self {
            Degenerate::EmptyTruth => "empty_truth",
            Degenerate::EmptyPrediction => "empty_prediction",
            Degenerate::EmptyTruthBoundary => "empty_truth_boundary",
            Degenerate::FlatDistanceMap => "flat_distance_map",
            Degenerate::SingleLabel => "single_label",
        }
    }
}

impl fmt::Display for Degenerate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A loss value together with any fallback flags raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub flags: Vec<Degenerate>,
}

impl LossOutput {
    pub fn plain(value: f64) -> Self {
        Self {
            value,
            flags: Vec::new(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Shared closed-form statistics of region losses.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct RegionSums {
    /// `sum(p y)`
    pub intersection: f64,
    /// `sum(p)`
    pub pred: f64,
    /// `sum(y)`
    pub truth: f64,
    /// `sum((1 - y) p)`
    pub false_pos: f64,
    /// `sum(y (1 - p))`
    pub false_neg: f64,
}

impl RegionSums {
    pub fn of(p: &[f64], y: &[u8]) -> Self {
        let mut s = Self::default();
        for (&p, &y) in p.iter().zip(y) {
            s.pred += p;
            if y == 1 {
                s.intersection += p;
                s.truth += 1.0;
                s.false_neg += 1.0 - p;
            } else {
                s.false_pos += p;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fills_defaults() {
        assert_eq!(
            LossSpec::parse("dice").unwrap(),
            LossSpec::Dice { smooth: 1.0 }
        );
        assert_eq!(
            LossSpec::parse("tversky:alpha=0.3,beta=0.7").unwrap(),
            LossSpec::Tversky {
                alpha: 0.3,
                beta: 0.7,
                smooth: 1.0
            }
        );
        assert_eq!(
            LossSpec::parse(" focal : gamma = 1.5 ").unwrap(),
            LossSpec::Focal {
                alpha: 0.25,
                gamma: 1.5
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            LossSpec::parse("focal:gamma=-1"),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            LossSpec::parse("dyce"),
            Err(Error::UnknownLoss(_))
        ));
        assert!(matches!(
            LossSpec::parse("dice:alpha=0.3"),
            Err(Error::UnknownParam { .. })
        ));
        assert!(matches!(
            LossSpec::parse("dice:smooth=abc"),
            Err(Error::InvalidParamValue { .. })
        ));
        assert!(matches!(
            LossSpec::parse("dice:smooth=1,smooth=2"),
            Err(Error::DuplicateParam { .. })
        ));
        assert!(matches!(
            LossSpec::parse("bce:beta=1"),
            Err(Error::UnknownParam { .. })
        ));
        assert!(matches!(
            LossSpec::parse("wce:beta=inf"),
            Err(Error::ParamOutOfRange { .. })
        ));
    }

    #[test]
    fn display_round_trips_through_parse() {
        for spec in LossSpec::all_defaults() {
            let text = spec.to_string();
            assert_eq!(LossSpec::parse(&text).unwrap(), spec, "{text}");
        }
        let spec = LossSpec::parse("exp_log:w_ce=0.4,gamma_ce=1").unwrap();
        assert_eq!(LossSpec::parse(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn all_defaults_are_valid_and_distinct() {
        let all = LossSpec::all_defaults();
        assert_eq!(all.len(), 14);
        for spec in &all {
            spec.validate().unwrap();
        }
        let mut names: Vec<_> = all.iter().map(|s| s.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 14);
    }
}
