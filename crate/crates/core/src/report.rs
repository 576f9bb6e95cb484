//! Batch evaluation reports and their deterministic JSON form.
//!
//! Maps are `BTreeMap`s so keys come out sorted, and floats go through
//! [`g17`] so every value survives a parse exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::field::{check_shape, MaskField, ProbField};
use crate::format::g17;
use crate::loss::LossSpec;
use crate::metrics::{confusion, metric_report, MetricReport};

/// Losses to compute, keyed by a caller-chosen label, plus the hard-metric
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub losses: Vec<(String, LossSpec)>,
    pub threshold: f64,
}

impl EvalConfig {
    /// All fourteen losses with default parameters, labelled by name.
    pub fn all_defaults(threshold: f64) -> Self {
        Self {
            losses: LossSpec::all_defaults()
                .into_iter()
                .map(|s| (s.name().to_string(), s))
                .collect(),
            threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub pred: String,
    pub truth: String,
    pub losses: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, Option<f64>>,
    /// `label:flag` entries for losses that fell back to a degenerate case.
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PairReport {
    /// An entry whose `error` reads `Class: message`.
    pub fn failed(pred: impl Into<String>, truth: impl Into<String>, error: &Error) -> Self {
        Self {
            pred: pred.into(),
            truth: truth.into(),
            losses: BTreeMap::new(),
            metrics: BTreeMap::new(),
            flags: Vec::new(),
            error: Some(format!("{}: {error}", error.class())),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

/// Scores one prediction against its truth under every configured loss and
/// the four hard metrics.
pub fn evaluate_pair(
    pred: impl Into<String>,
    truth: impl Into<String>,
    p: &ProbField,
    y: &MaskField,
    config: &EvalConfig,
) -> Result<PairReport> {
    check_shape(p, y)?;
    let mut losses = BTreeMap::new();
    let mut flags = BTreeSet::new();
    for (label, spec) in &config.losses {
        let out = spec.evaluate(p, y)?;
        losses.insert(label.clone(), out.value);
        flags.extend(out.flags.iter().map(|f| format!("{label}:{f}")));
    }
    let counts = confusion(p, y, config.threshold)?;
    let metrics = metric_report(&counts)
        .entries()
        .into_iter()
        .map(|(name, v)| (name.to_string(), v))
        .collect();
    Ok(PairReport {
        pred: pred.into(),
        truth: truth.into(),
        losses,
        metrics,
        flags: flags.into_iter().collect(),
        error: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricAggregate {
    /// Mean over pairs where the metric is defined.
    pub mean: Option<f64>,
    pub undefined_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    /// Mean over successful pairs; `None` when there are none.
    pub losses: BTreeMap<String, Option<f64>>,
    pub metrics: BTreeMap<String, MetricAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedLoss {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub losses: BTreeMap<String, ResolvedLoss>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub pairs: Vec<PairReport>,
    pub aggregate: Aggregate,
    pub config: ReportConfig,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    /// Assembles a report, aggregating over the pairs without errors in the
    /// order given.
    pub fn new(config: &EvalConfig, pairs: Vec<PairReport>) -> Self {
        let ok: Vec<&PairReport> = pairs.iter().filter(|p| !p.is_error()).collect();
        let losses = config
            .losses
            .iter()
            .map(|(label, _)| {
                let m = mean(ok.iter().filter_map(|p| p.losses.get(label).copied()));
                (label.clone(), m)
            })
            .collect();
        let metrics = MetricReport::NAMES
            .iter()
            .map(|&name| {
                let values: Vec<Option<f64>> = ok
                    .iter()
                    .map(|p| p.metrics.get(name).copied().flatten())
                    .collect();
                let agg = MetricAggregate {
                    mean: mean(values.iter().flatten().copied()),
                    undefined_count: values.iter().filter(|v| v.is_none()).count() as u64,
                };
                (name.to_string(), agg)
            })
            .collect();
        let resolved = config
            .losses
            .iter()
            .map(|(label, spec)| {
                let params = spec
                    .params()
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect();
                let loss = ResolvedLoss {
                    name: spec.name().to_string(),
                    params,
                };
                (label.clone(), loss)
            })
            .collect();
        Self {
            pairs,
            aggregate: Aggregate { losses, metrics },
            config: ReportConfig {
                losses: resolved,
                threshold: config.threshold,
            },
        }
    }

    pub fn has_errors(&self) -> bool {
        self.pairs.iter().any(PairReport::is_error)
    }

    /// Pretty JSON with sorted keys, `%.17g` floats and a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter::new());
        value.serialize(&mut ser)?;
        out.push(b'\n');
        Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
    }
}

pub fn write_report_json(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))
}

/// Pretty printer that writes floats with [`g17`].
struct G17Formatter<'a>(PrettyFormatter<'a>);

impl G17Formatter<'_> {
    fn new() -> Self {
        Self(PrettyFormatter::with_indent(b"  "))
    }
}

impl Formatter for G17Formatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(g17(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn end_object_key<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_key(writer)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn pair() -> (ProbField, MaskField) {
        (
            ProbField::new(1, 4, vec![1.0, 1.0, 0.0, 0.0]).unwrap(),
            MaskField::new(1, 4, vec![1, 0, 1, 0]).unwrap(),
        )
    }

    fn config(specs: &[&str]) -> EvalConfig {
        EvalConfig {
            losses: specs
                .iter()
                .map(|s| (s.to_string(), s.parse().unwrap()))
                .collect(),
            threshold: 0.5,
        }
    }

    #[test]
    fn single_pair_round_trips_through_a_parser() {
        let (p, y) = pair();
        let cfg = config(&["bce", "dice:smooth=0"]);
        let pr = evaluate_pair("a.csv", "a.pgm", &p, &y, &cfg).unwrap();
        let report = EvalReport::new(&cfg, vec![pr.clone()]);
        let json: Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        let pair = &json["pairs"][0];
        assert_eq!(pair["pred"], "a.csv");
        for (label, v) in &pr.losses {
            assert_eq!(pair["losses"][label].as_f64().unwrap(), *v);
            assert_eq!(json["aggregate"]["losses"][label].as_f64().unwrap(), *v);
        }
        assert_eq!(pair["metrics"]["dice"].as_f64(), Some(0.5));
        assert_eq!(json["config"]["threshold"].as_f64(), Some(0.5));
        assert_eq!(json["config"]["losses"]["dice:smooth=0"]["name"], "dice");
        assert!(pair.get("error").is_none());
    }

    #[test]
    fn undefined_metric_is_null_and_counted() {
        let p = ProbField::filled(2, 2, 0.0).unwrap();
        let y = MaskField::zeros(2, 2).unwrap();
        let cfg = config(&["bce"]);
        let pr = evaluate_pair("p", "t", &p, &y, &cfg).unwrap();
        let report = EvalReport::new(&cfg, vec![pr]);
        let json: Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert!(json["pairs"][0]["metrics"]["precision"].is_null());
        assert!(json["aggregate"]["metrics"]["precision"]["mean"].is_null());
        assert_eq!(
            json["aggregate"]["metrics"]["precision"]["undefined_count"],
            1
        );
        assert_eq!(
            json["aggregate"]["metrics"]["specificity"]["mean"].as_f64(),
            Some(1.0)
        );
    }

    #[test]
    fn errors_are_kept_out_of_aggregates() {
        let (p, y) = pair();
        let cfg = config(&["bce"]);
        let good = evaluate_pair("a", "a", &p, &y, &cfg).unwrap();
        let bad = PairReport::failed("b", "b", &Error::EmptySource);
        let report = EvalReport::new(&cfg, vec![good.clone(), bad]);
        assert!(report.has_errors());
        assert_eq!(report.aggregate.losses["bce"], Some(good.losses["bce"]));
        let json = report.to_json().unwrap();
        assert!(json.contains("\"error\""));
    }

    #[test]
    fn degenerate_flags_are_labelled() {
        let p = ProbField::filled(1, 3, 0.2).unwrap();
        let y = MaskField::zeros(1, 3).unwrap();
        let pr = evaluate_pair("p", "t", &p, &y, &config(&["hausdorff_dt"])).unwrap();
        assert!(pr.flags.iter().all(|f| f.starts_with("hausdorff_dt:")));
        assert!(!pr.flags.is_empty());
    }

    #[test]
    fn output_is_sorted_pretty_and_newline_terminated() {
        let (p, y) = pair();
        let cfg = config(&["dice", "bce"]);
        let pr = evaluate_pair("p", "t", &p, &y, &cfg).unwrap();
        let bce = pr.losses["bce"];
        let json = EvalReport::new(&cfg, vec![pr]).to_json().unwrap();
        assert!(json.ends_with("}\n"));
        let agg = json.find("\"aggregate\"").unwrap();
        let cfg_at = json.find("\"config\"").unwrap();
        let pairs = json.find("\"pairs\"").unwrap();
        assert!(agg < cfg_at && cfg_at < pairs);
        assert!(json.contains(&format!("\"bce\": {}", g17(bce))));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = ProbField::filled(2, 2, 0.5).unwrap();
        let y = MaskField::zeros(1, 4).unwrap();
        assert!(matches!(
            evaluate_pair("p", "t", &p, &y, &config(&["bce"])),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
