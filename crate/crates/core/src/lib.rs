//! Binary semantic-segmentation losses with analytic gradients.
//!
//! The crate covers fourteen losses in four families, all over a field of
//! per-pixel foreground probabilities `p` and a crisp ground-truth mask `y`:
//!
//! | family | losses |
//! |---|---|
//! | distribution | `bce`, `wce`, `balanced_ce`, `focal` |
//! | region | `dice`, `tversky`, `focal_tversky`, `log_cosh_dice`, `sens_spec` |
//! | boundary | `hausdorff_dt`, `shape_aware`, `dist_map_penalty` |
//! | compound | `combo`, `exp_log` |
//!
//! Every loss has an analytic gradient ([`gradients::loss_and_grad`]) that is
//! checked against central differences ([`gradients::fd_grad`]). Boundary
//! losses sit on an exact Euclidean distance transform ([`geometry`]). Hard
//! metrics, file formats and a JSON evaluation report round out a batch
//! evaluation workflow, which the `segloss` binary exposes on the command line.
//!
//! ```
//! use segloss::{LossSpec, MaskField, ProbField};
//!
//! let y = MaskField::new(2, 2, vec![1, 0, 0, 0])?;
//! let p = ProbField::filled(2, 2, 0.5)?;
//! let dice: LossSpec = "dice:smooth=1".parse()?;
//! assert_eq!(dice.evaluate(&p, &y)?.value, 0.5);
//! # Ok::<(), segloss::Error>(())
//! ```
//!
//! Runnable walkthroughs live in `examples/`.

pub mod cli;
pub mod error;
pub mod field;
pub mod format;
pub mod geometry;
pub mod gradients;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod report;

pub use error::{Error, Result};
pub use field::{
    clip_probabilities, DistanceField, GradField, Grid, MaskField, ProbField, EPS_CLIP,
};
pub use gradients::{fd_grad, fit_logits, loss_and_grad, FitResult};
pub use loss::{Degenerate, LossKind, LossOutput, LossSpec};
pub use metrics::{confusion, metric_report, ConfusionCounts, MetricReport};
