//! The `simulate`, `compare` and `chart` commands and their file formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{get_value, CONFIG_KEYS};
use super::svg::{emit_svg_chart, Series};
use crate::error::{Error, Result};
use crate::protocol::Scheme;
use crate::sim::{average_comm_overhead, run_simulation, RoundMetrics, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;

pub const METRICS_HEADER: &str = "round,test_loss,test_accuracy,comm_mb,num_selected,num_final_received,\
num_intermediate_used,num_interrupted,num_cancelled";
pub const SWEEP_HEADER: &str = "value,seed,final_accuracy,mean_overhead_mb";
pub const CURVES_HEADER: &str = "value,round,mean_test_accuracy,mean_test_loss,mean_comm_mb";

/// Process exit status for a failed command: 1 for bad input, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

pub fn metrics_to_csv(metrics: &[RoundMetrics]) -> String {
    let mut out = String::with_capacity(64 * (metrics.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            m.round_index,
            m.test_loss,
            m.test_accuracy,
            m.comm_mb,
            m.num_selected,
            m.num_final_received,
            m.num_intermediate_used,
            m.num_interrupted,
            m.num_cancelled_transmissions
        );
    }
    out
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, line: usize) -> Result<T> {
    cols.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { line, message: format!("bad or missing column {}", i + 1) })
}

/// Reads a `metrics.csv` back.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<RoundMetrics>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Parse { line: 1, message: "unexpected metrics header".to_string() });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            let n = i + 2;
            Ok(RoundMetrics {
                round_index: field(&c, 0, n)?,
                test_loss: field(&c, 1, n)?,
                test_accuracy: field(&c, 2, n)?,
                comm_mb: field(&c, 3, n)?,
                num_selected: field(&c, 4, n)?,
                num_final_received: field(&c, 5, n)?,
                num_intermediate_used: field(&c, 6, n)?,
                num_interrupted: field(&c, 7, n)?,
                num_cancelled_transmissions: field(&c, 8, n)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub rounds: usize,
    pub final_accuracy: Option<f64>,
    pub final_loss: Option<f64>,
    pub mean_overhead_mb: Option<f64>,
    pub config: BTreeMap<String, String>,
}

pub fn summarize(config: &SimConfig, metrics: &[RoundMetrics]) -> Summary {
    let config_echo = CONFIG_KEYS
        .iter()
        .map(|k| (k.to_string(), get_value(config, k).unwrap_or_default()))
        .collect();
    Summary {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        rounds: metrics.len(),
        final_accuracy: metrics.last().map(|m| m.test_accuracy),
        final_loss: metrics.last().map(|m| m.test_loss),
        mean_overhead_mb: average_comm_overhead(metrics).ok(),
        config: config_echo,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Runs one simulation (with `seed` overriding the configured one) and
/// writes `metrics.csv` and `summary.json` into `out_dir`.
pub fn cmd_simulate(config: &SimConfig, seed: Option<u64>, out_dir: &Path) -> Result<Summary> {
    let mut cfg = config.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    create_dir(out_dir)?;
    let result = run_simulation(&cfg)?;
    std::fs::write(out_dir.join("metrics.csv"), metrics_to_csv(&result.metrics))?;
    let summary = summarize(&cfg, &result.metrics);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

/// Configuration field varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    Scheme,
    B,
    TauMax,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scheme" => Ok(Self::Scheme),
            "b" => Ok(Self::B),
            "tau_max" | "tau_max_s" => Ok(Self::TauMax),
            other => Err(Error::invalid(format!("unknown sweep axis `{other}` (scheme, b, tau_max)"))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Scheme => "scheme",
            Self::B => "b",
            Self::TauMax => "tau_max",
        })
    }
}

impl SweepAxis {
    /// Applies one sweep value. Schemes other than `opt` always run with a
    /// single transmission.
    pub fn apply(&self, cfg: &mut SimConfig, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::invalid(format!("sweep value `{value}` for {self}: {e}"));
        match self {
            Self::Scheme => {
                cfg.scheme = value.parse::<Scheme>()?;
                if cfg.scheme != Scheme::Opt {
                    cfg.b = 1;
                }
            }
            Self::B => cfg.b = value.parse().map_err(|e| bad(&e))?,
            Self::TauMax => cfg.tau_max_s = value.parse().map_err(|e| bad(&e))?,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    /// Parses `axis=v1,v2,...`.
    pub fn parse_sweep(text: &str) -> Result<(SweepAxis, Vec<String>)> {
        let (axis, values) =
            text.split_once('=').ok_or_else(|| Error::invalid(format!("sweep must look like axis=v1,v2 (got `{text}`)")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        Ok((axis.trim().parse()?, values))
    }

    pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| Error::invalid(format!("bad seed `{s}`"))))
            .collect()
    }

    /// Configuration of every cell, in value-major order.
    pub fn cells(&self) -> Result<Vec<(String, u64, SimConfig)>> {
        let mut errs = Vec::new();
        if self.values.is_empty() {
            errs.push("sweep values must not be empty".to_string());
        }
        if self.seeds.is_empty() {
            errs.push("seeds must not be empty".to_string());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let mut cells = Vec::new();
        for v in &self.values {
            for &seed in &self.seeds {
                let mut cfg = self.base.clone();
                self.axis.apply(&mut cfg, v)?;
                cfg.seed = seed;
                cfg.validate()?;
                cells.push((v.clone(), seed, cfg));
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub seed: u64,
    pub final_accuracy: f64,
    pub mean_overhead_mb: f64,
}

/// File name of one cell's metrics.
pub fn cell_file_name(axis: SweepAxis, value: &str, seed: u64) -> String {
    let safe: String = value.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("metrics_{axis}={safe}_seed={seed}.csv")
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.value, r.seed, r.final_accuracy, r.mean_overhead_mb);
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(Error::Parse { line: 1, message: "unexpected sweep header".to_string() });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            let n = i + 2;
            Ok(SweepRow {
                value: c.first().map(|s| s.to_string()).unwrap_or_default(),
                seed: field(&c, 1, n)?,
                final_accuracy: field(&c, 2, n)?,
                mean_overhead_mb: field(&c, 3, n)?,
            })
        })
        .collect()
}

/// Seed-averaged curve for one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub value: String,
    /// `(round, accuracy, loss, comm_mb)` averaged over seeds.
    pub points: Vec<(usize, f64, f64, f64)>,
}

fn average_curves(values: &[String], cells: &[(String, Vec<RoundMetrics>)]) -> Vec<Curve> {
    values
        .iter()
        .map(|v| {
            let runs: Vec<&Vec<RoundMetrics>> = cells.iter().filter(|(cv, _)| cv == v).map(|(_, m)| m).collect();
            let rounds = runs.iter().map(|m| m.len()).min().unwrap_or(0);
            let n = runs.len() as f64;
            let points = (0..rounds)
                .map(|r| {
                    let sum = |f: fn(&RoundMetrics) -> f64| runs.iter().map(|m| f(&m[r])).sum::<f64>() / n;
                    (r + 1, sum(|m| m.test_accuracy), sum(|m| m.test_loss), sum(|m| m.comm_mb))
                })
                .collect();
            Curve { value: v.clone(), points }
        })
        .collect()
}

pub fn curves_to_csv(curves: &[Curve]) -> String {
    let mut out = format!("{CURVES_HEADER}\n");
    for c in curves {
        for &(r, acc, loss, mb) in &c.points {
            let _ = writeln!(out, "{},{r},{acc},{loss},{mb}", c.value);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<SweepRow>,
    pub curves: Vec<Curve>,
}

/// Runs every (value, seed) cell, writing each cell's metrics as soon as it
/// finishes; `sweep.csv`, `curves.csv` and `curves.svg` follow once all
/// cells succeed. A failing cell aborts the sweep but keeps files already
/// written.
pub fn cmd_compare(spec: &ExperimentSpec) -> Result<CompareReport> {
    let cells = spec.cells()?;
    create_dir(&spec.out_dir)?;
    let results: Vec<Result<(String, u64, Vec<RoundMetrics>)>> = cells
        .par_iter()
        .map(|(value, seed, cfg)| {
            let result = run_simulation(cfg)?;
            let path = spec.out_dir.join(cell_file_name(spec.axis, value, *seed));
            std::fs::write(path, metrics_to_csv(&result.metrics))?;
            Ok((value.clone(), *seed, result.metrics))
        })
        .collect();
    let mut finished = Vec::with_capacity(results.len());
    for r in results {
        finished.push(r?);
    }

    let rows: Vec<SweepRow> = finished
        .iter()
        .map(|(value, seed, metrics)| SweepRow {
            value: value.clone(),
            seed: *seed,
            final_accuracy: metrics.last().map_or(f64::NAN, |m| m.test_accuracy),
            mean_overhead_mb: average_comm_overhead(metrics).unwrap_or(f64::NAN),
        })
        .collect();
    std::fs::write(spec.out_dir.join("sweep.csv"), sweep_to_csv(&rows))?;

    let per_cell: Vec<(String, Vec<RoundMetrics>)> = finished.into_iter().map(|(v, _, m)| (v, m)).collect();
    let curves = average_curves(&spec.values, &per_cell);
    std::fs::write(spec.out_dir.join("curves.csv"), curves_to_csv(&curves))?;
    let series: Vec<Series> = curves
        .iter()
        .filter(|c| !c.points.is_empty())
        .map(|c| {
            Series::new(
                format!("{}={}", spec.axis, c.value),
                c.points.iter().map(|&(r, acc, _, _)| (r as f64, acc)).collect(),
            )
        })
        .collect();
    if !series.is_empty() {
        emit_svg_chart(
            &series,
            &format!("Test accuracy by {}", spec.axis),
            "communication round",
            "test accuracy",
            &spec.out_dir.join("curves.svg"),
        )?;
    }
    Ok(CompareReport { rows, curves })
}

/// Charts a `sweep.csv`: mean final accuracy per sweep value.
///
/// Numeric values share one line; otherwise each value is its own series
/// with a single marker.
pub fn cmd_chart(input: &Path, output: &Path) -> Result<()> {
    let rows = parse_sweep_csv(&std::fs::read_to_string(input)?)?;
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in &rows {
        if !order.contains(&r.value) {
            order.push(r.value.clone());
        }
        let e = acc.entry(r.value.clone()).or_insert((0.0, 0));
        e.0 += r.final_accuracy;
        e.1 += 1;
    }
    let mean = |v: &str| acc[v].0 / acc[v].1 as f64;
    let numeric: Option<Vec<f64>> = order.iter().map(|v| v.parse::<f64>().ok()).collect();
    let series = match numeric {
        Some(xs) => {
            let mut pts: Vec<(f64, f64)> = xs.iter().zip(&order).map(|(&x, v)| (x, mean(v))).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            vec![Series::new("mean final accuracy", pts)]
        }
        None => order.iter().enumerate().map(|(i, v)| Series::new(v.clone(), vec![(i as f64, mean(v))])).collect(),
    };
    emit_svg_chart(&series, "Final accuracy by sweep value", "sweep value", "mean final accuracy", output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_parsing() {
        let (axis, values) = ExperimentSpec::parse_sweep("b=1,2,3").unwrap();
        assert_eq!(axis, SweepAxis::B);
        assert_eq!(values, vec!["1", "2", "3"]);
        assert!(ExperimentSpec::parse_sweep("speed=1").is_err());
        assert!(ExperimentSpec::parse_sweep("b").is_err());
        assert_eq!(ExperimentSpec::parse_seeds("0, 7").unwrap(), vec![0, 7]);
    }

    #[test]
    fn scheme_axis_forces_single_transmission() {
        let mut cfg = SimConfig { b: 3, ..SimConfig::default() };
        SweepAxis::Scheme.apply(&mut cfg, "async").unwrap();
        assert_eq!((cfg.scheme, cfg.b), (Scheme::Async, 1));
    }

    #[test]
    fn empty_sweep_is_rejected() {
        let spec = ExperimentSpec {
            base: SimConfig::default(),
            axis: SweepAxis::B,
            values: vec![],
            seeds: vec![],
            out_dir: PathBuf::from("unused"),
        };
        match spec.cells() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_roundtrip() {
        let m = RoundMetrics {
            round_index: 1,
            test_loss: 0.25,
            test_accuracy: 0.5,
            comm_mb: 0.1018,
            num_selected: 3,
            num_final_received: 2,
            num_intermediate_used: 1,
            num_interrupted: 1,
            num_cancelled_transmissions: 0,
        };
        let csv = metrics_to_csv(std::slice::from_ref(&m));
        assert_eq!(parse_metrics_csv(&csv).unwrap(), vec![m]);
        let rows = vec![SweepRow { value: "opt".into(), seed: 3, final_accuracy: 0.75, mean_overhead_mb: 1.5 }];
        assert_eq!(parse_sweep_csv(&sweep_to_csv(&rows)).unwrap(), rows);
    }
}
