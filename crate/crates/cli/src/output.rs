//! Output files. Everything written here is a pure function of the run's
//! configuration and seed; wall-clock timings go to a separate file so reruns
//! reproduce the rest byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use pwexp::diagnostics::Summary;
use pwexp::mcmc::ChainStore;
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct SeedInfo {
    pub chain: usize,
    pub seed: u64,
    pub stream: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: Vec<SeedInfo>,
    pub files: Vec<String>,
    /// Wall-clock timings are kept apart from the reproducible outputs.
    pub timings_file: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            tool: "pwexp",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            seeds: Vec::new(),
            files: Vec::new(),
            timings_file: String::new(),
        }
    }
}

#[derive(Serialize)]
struct ChainMeta<'a> {
    manifest: &'static str,
    data_file: String,
    chain_id: usize,
    seed: u64,
    stream: u64,
    family: &'static str,
    burn_in: usize,
    n_iter: usize,
    thin: usize,
    retained: usize,
    columns: &'a [String],
}

#[derive(Serialize)]
struct SummaryMeta {
    manifest: &'static str,
    data_file: &'static str,
    hpd_mass: f64,
    ess_source: &'static str,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_chain_csv<W: Write>(chain: &ChainStore, writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["iteration".to_string()];
    header.extend(chain.names().iter().cloned());
    w.write_record(&header)?;
    let columns: Vec<&[f64]> = chain.columns().map(|(_, d)| d).collect();
    for row in 0..chain.n_draws() {
        let iteration = chain.burn_in + (row + 1) * chain.thin;
        let mut rec = vec![iteration.to_string()];
        rec.extend(columns.iter().map(|c| c[row].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summary: &[Summary], writer: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "parameter",
        "mean",
        "median",
        "sd",
        "hpd_low",
        "hpd_high",
        "ess",
    ])?;
    for s in summary {
        w.write_record([
            s.name.clone(),
            s.mean.to_string(),
            s.median.to_string(),
            s.sd.to_string(),
            s.hpd_low.to_string(),
            s.hpd_high.to_string(),
            s.ess.map_or_else(|| "NA".into(), |e| e.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table with four decimals, HPD as `(low, high)`.
pub fn summary_table(summary: &[Summary], mass: f64) -> String {
    let hpd_head = format!("{:.0}% HPD", mass * 100.0);
    let rows: Vec<[String; 6]> = summary
        .iter()
        .map(|s| {
            [
                s.name.clone(),
                format!("{:.4}", s.mean),
                format!("{:.4}", s.median),
                format!("{:.4}", s.sd),
                format!("({:.4}, {:.4})", s.hpd_low, s.hpd_high),
                s.ess.map_or_else(|| "NA".into(), |e| format!("{e:.1}")),
            ]
        })
        .collect();
    let head = [
        "Parameter",
        "Mean",
        "Median",
        "S.D.",
        hpd_head.as_str(),
        "ESS",
    ];
    let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&head);
    for r in &rows {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

/// Writes chains, summaries and the manifest of a fit into `dir`.
pub fn write_fit_outputs(
    dir: &Path,
    mut manifest: RunManifest,
    chains: &[ChainStore],
    summary: &[Summary],
    mass: f64,
    timings: &serde_json::Value,
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for chain in chains {
        let id = chain.chain_id + 1;
        let csv_name = format!("chain_{id}.csv");
        let file = fs::File::create(dir.join(&csv_name))?;
        write_chain_csv(chain, std::io::BufWriter::new(file))?;
        let meta_name = format!("chain_{id}.json");
        write_json(
            &dir.join(&meta_name),
            &ChainMeta {
                manifest: MANIFEST_FILE,
                data_file: csv_name.clone(),
                chain_id: chain.chain_id,
                seed: chain.seed,
                stream: chain.chain_id as u64,
                family: chain.family.name(),
                burn_in: chain.burn_in,
                n_iter: chain.n_iter,
                thin: chain.thin,
                retained: chain.n_draws(),
                columns: chain.names(),
            },
        )?;
        manifest.seeds.push(SeedInfo {
            chain: chain.chain_id,
            seed: chain.seed,
            stream: chain.chain_id as u64,
        });
        manifest.files.extend([csv_name, meta_name]);
    }
    write_summary_csv(summary, fs::File::create(dir.join("summary.csv"))?)?;
    write_json(
        &dir.join("summary.json"),
        &SummaryMeta {
            manifest: MANIFEST_FILE,
            data_file: "summary.csv",
            hpd_mass: mass,
            ess_source: "first chain",
        },
    )?;
    fs::write(dir.join("summary.txt"), summary_table(summary, mass))?;
    manifest
        .files
        .extend(["summary.csv", "summary.json", "summary.txt"].map(String::from));
    manifest.timings_file = "timings.json".into();
    write_json(&dir.join("timings.json"), timings)?;
    write_json(&dir.join(MANIFEST_FILE), &manifest)
}
