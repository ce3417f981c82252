//! Configuration files and result serialization.
//!
//! Every float is written as `{:.16e}` (17 significant digits), so parsing
//! and re-writing any emitted file reproduces it byte for byte. Wall-clock
//! data goes to a separate `timing.json`; everything else depends only on
//! the configuration, the seed and the crate version.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::constants::ConstantEstimate;
use crate::error::{Error, Result};
use crate::experiment::{
    mecke_expected_bin, AggregateStats, ExperimentConfig, RunReport, SweepReport, TheoryReport, TrialResult, Window,
    DK_STREAM,
};

/// Version of the summary, CSV and plot-data layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Renders a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct RoundTripFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for RoundTripFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Pretty JSON with round-trip-exact floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = RoundTripFormatter {
        pretty: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub n_list: Option<Vec<f64>>,
}

/// Parses a flat JSON configuration (unknown keys rejected) without validating it.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Reads, overrides and validates a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<(ExperimentConfig, Window)> {
    let mut cfg = parse_config_str(&read_file(path)?)?;
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(t) = overrides.trials {
        cfg.trials = t;
    }
    if let Some(l) = &overrides.n_list {
        cfg.n_list = l.clone();
    }
    let w = cfg.validate()?;
    Ok((cfg, w))
}

/// How `D_k` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DkProvenance {
    pub method: DkMethod,
    pub estimate: ConstantEstimate,
    pub stream_index: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DkMethod {
    ExactEnumeration,
    MonteCarlo,
}

impl DkProvenance {
    pub fn new(estimate: ConstantEstimate) -> Self {
        Self {
            method: if estimate.exact {
                DkMethod::ExactEnumeration
            } else {
                DkMethod::MonteCarlo
            },
            estimate,
            stream_index: DK_STREAM,
        }
    }
}

/// Everything needed to reproduce a run with the same crate version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub schema_version: u32,
    pub master_seed: u64,
    pub backend: String,
    pub config: ExperimentConfig,
    pub dk: Option<DkProvenance>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, dk: Option<ConstantEstimate>) -> Self {
        Self {
            artifact: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            schema_version: SCHEMA_VERSION,
            master_seed: cfg.seed,
            backend: serde_json::to_value(cfg.resolved_backend())
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            config: cfg.clone(),
            dk: dk.map(DkProvenance::new),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub manifest: RunManifest,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<Window>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stats: Option<AggregateStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theory: Option<TheoryReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep: Option<SweepReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub sweep_stats: Vec<AggregateStats>,
}

impl Summary {
    pub fn from_run(r: &RunReport) -> Self {
        Self {
            manifest: RunManifest::new(&r.config, r.dk),
            window: Some(r.window),
            stats: Some(r.stats.clone()),
            theory: r.theory.clone(),
            sweep: None,
            sweep_stats: Vec::new(),
        }
    }

    pub fn from_sweep(cfg: &ExperimentConfig, sweep: &SweepReport, stats: &[AggregateStats]) -> Self {
        Self {
            manifest: RunManifest::new(cfg, Some(sweep.dk)),
            window: None,
            stats: None,
            theory: None,
            sweep: Some(sweep.clone()),
            sweep_stats: stats.to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Wall-clock facts about a run; kept out of the reproducible outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub elapsed_seconds: f64,
    pub workers: Option<usize>,
}

/// Atom table: `trial,center_0..center_{d-1},u,sign,index`.
///
/// Rows are ordered by trial, then `k`-atoms before negative `(k+1)`-atoms,
/// each by vertex ids.
pub fn atoms_csv(results: &[TrialResult], d: usize) -> String {
    let mut s = String::from("trial");
    for i in 0..d {
        let _ = write!(s, ",center_{i}");
    }
    s.push_str(",u,sign,index\n");
    let mut sorted: Vec<&TrialResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    for r in sorted {
        for a in r.atoms.iter().chain(&r.minus_atoms) {
            let _ = write!(s, "{}", r.trial_index);
            for &c in a.center.coords() {
                let _ = write!(s, ",{}", fmt_f64(c));
            }
            let _ = writeln!(s, ",{},{},{}", fmt_f64(a.u), a.sign.as_str(), a.index);
        }
    }
    s
}

fn opt_estimate(e: Option<crate::experiment::SweepEstimate>) -> [String; 3] {
    match e {
        Some(e) => [fmt_f64(e.estimate), fmt_f64(e.std_error), e.covers.to_string()],
        None => [String::new(), String::new(), String::new()],
    }
}

/// One row per sweep intensity.
pub fn sweep_csv(r: &SweepReport) -> String {
    let mut s = String::from(
        "n,seed,trials,a_n,b_kn,r_lo,r_hi,target,estimate_g,se_g,covers_g,estimate_pos,se_pos,covers_pos,estimate_neg_next,se_neg_next,covers_neg_next,two_atom_ratio,discrepancy,discrepancy_se\n",
    );
    for c in &r.cells {
        let w = &c.window;
        let [ep, sp, cp] = opt_estimate(c.g_pos);
        let [en, sn, cn] = opt_estimate(c.g_neg_next);
        let (dr, ds) = c
            .discrepancy
            .map(|p| (fmt_f64(p.estimate), fmt_f64(p.std_error)))
            .unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{ep},{sp},{cp},{en},{sn},{cn},{},{dr},{ds}",
            fmt_f64(c.n),
            c.seed,
            c.trials,
            fmt_f64(w.a_n),
            fmt_f64(w.b_kn),
            fmt_f64(w.r_lo),
            fmt_f64(w.r_hi),
            fmt_f64(r.target),
            fmt_f64(c.g.estimate),
            fmt_f64(c.g.std_error),
            c.g.covers,
            fmt_f64(c.two_atom_ratio),
        );
    }
    s
}

/// `n estimate lo hi target` per sweep intensity, whitespace separated.
pub fn sweep_plot_data(r: &SweepReport) -> String {
    let mut s = String::from("# n estimate lo hi target\n");
    for c in &r.cells {
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            fmt_f64(c.n),
            fmt_f64(c.g.estimate),
            fmt_f64(c.g.lo),
            fmt_f64(c.g.hi),
            fmt_f64(r.target)
        );
    }
    s
}

/// `lo hi empirical std_error mecke` per `u`-bin; empty bins are kept.
pub fn bins_plot_data(r: &RunReport) -> Result<String> {
    let mut s = String::from("# lo hi empirical std_error mecke\n");
    for b in &r.stats.bins {
        let hi = b.hi.unwrap_or(f64::INFINITY);
        let mecke = match &r.dk {
            Some(dk) => mecke_expected_bin(&r.config, &r.window, dk, b.lo, hi)?,
            None => f64::NAN,
        };
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            fmt_f64(b.lo),
            fmt_f64(hi),
            fmt_f64(b.moments.mean),
            fmt_f64(b.moments.std_error),
            fmt_f64(mecke)
        );
    }
    Ok(s)
}

/// Plotting script for the `.dat` files (matplotlib).
pub const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plot sweep_plot.dat and bins_plot.dat from a results directory."""
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def load(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or not line.strip():
            continue
        rows.append([float(x) for x in line.split()])
    return rows


def main(out):
    out = Path(out)
    sweep = out / "sweep_plot.dat"
    if sweep.exists():
        rows = load(sweep)
        n = [r[0] for r in rows]
        est = [r[1] for r in rows]
        err = [[r[1] - r[2] for r in rows], [r[3] - r[1] for r in rows]]
        fig, ax = plt.subplots()
        ax.errorbar(n, est, yerr=err, fmt="o-", capsize=3, label="estimate")
        ax.axhline(rows[0][4], color="k", ls="--", label="limit")
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("P(G >= 1) / b")
        ax.legend()
        fig.savefig(out / "sweep.png", dpi=150)
    bins = out / "bins_plot.dat"
    if bins.exists():
        rows = load(bins)
        labels = [f"[{r[0]:g},{r[1]:g})" for r in rows]
        x = range(len(rows))
        fig, ax = plt.subplots()
        ax.errorbar(x, [r[2] for r in rows], yerr=[3 * r[3] for r in rows], fmt="o", capsize=3, label="empirical")
        ax.plot(x, [r[4] for r in rows], "x", label="exact mean")
        ax.set_xticks(list(x), labels)
        ax.set_xlabel("u bin")
        ax.set_ylabel("atoms per trial")
        ax.legend()
        fig.savefig(out / "bins.png", dpi=150)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
"##;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `summary.json`, `atoms.csv`, `bins_plot.dat` and `plot.py`.
pub fn write_results(out: &Path, r: &RunReport) -> Result<Vec<PathBuf>> {
    if r.results.is_empty() || r.stats.trials == 0 {
        return Err(Error::Contract("refusing to write results of zero trials".into()));
    }
    ensure_dir(out)?;
    let files = [
        ("summary.json", to_json(&Summary::from_run(r))?),
        ("atoms.csv", atoms_csv(&r.results, r.config.d)),
        ("bins_plot.dat", bins_plot_data(r)?),
        ("plot.py", PLOT_SCRIPT.to_string()),
    ];
    files
        .into_iter()
        .map(|(name, text)| {
            let p = out.join(name);
            write_file(&p, &text).map(|_| p)
        })
        .collect()
}

/// Writes `summary.json`, `sweep.csv`, `sweep_plot.dat` and `plot.py`.
pub fn write_sweep(out: &Path, cfg: &ExperimentConfig, sweep: &SweepReport, stats: &[AggregateStats]) -> Result<Vec<PathBuf>> {
    if sweep.cells.iter().any(|c| c.trials == 0) {
        return Err(Error::Contract("refusing to write results of zero trials".into()));
    }
    ensure_dir(out)?;
    let files = [
        ("summary.json", to_json(&Summary::from_sweep(cfg, sweep, stats))?),
        ("sweep.csv", sweep_csv(sweep)),
        ("sweep_plot.dat", sweep_plot_data(sweep)),
        ("plot.py", PLOT_SCRIPT.to_string()),
    ];
    files
        .into_iter()
        .map(|(name, text)| {
            let p = out.join(name);
            write_file(&p, &text).map(|_| p)
        })
        .collect()
}

/// Writes `timing.json`.
pub fn write_timing(out: &Path, t: &Timing) -> Result<PathBuf> {
    ensure_dir(out)?;
    let p = out.join("timing.json");
    write_file(&p, &to_json(t)?)?;
    Ok(p)
}
