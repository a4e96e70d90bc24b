//! `sweep`: evaluation panels. `f | force | rho | v` panels sweep one
//! parameter and report box statistics of the terminal Byzantine sample
//! fraction per x-value per algorithm; `convergence` reports time to stay
//! within 25% of the optimal proportion; `maxrate` reports the largest
//! sustainable sampling rate per view size.

use std::fs::File;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use basalt_sim::sim::{
    convergence_from_records, max_sampling_rate, run_sim, terminal_stats, Convergence, SimConfig,
};
use clap::Args;
use rayon::prelude::*;

use crate::config::{resolve, FileConfig};
use crate::fmt::sig6;
use crate::UsageError;

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Panel: f | force | rho | v | convergence | maxrate.
    #[arg(long)]
    pub panel: String,
    /// Swept values (x-axis), comma-separated.
    #[arg(long)]
    pub values: Option<String>,
    /// Algorithms to compare (comma-separated).
    #[arg(long, default_value = "basalt,basalt-simple,brahms")]
    pub algo: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub v: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub force: Option<f64>,
    #[arg(long)]
    pub ticks: Option<u64>,
    #[arg(long)]
    pub seeds: Option<String>,
    /// Sampling-rate grid for the maxrate panel (comma-separated; values
    /// must keep k/rho integral for every swept view size).
    #[arg(long, default_value = "0.5,1,2.5,5")]
    pub rho_grid: String,
    /// Convergence threshold ratio over the optimal proportion.
    #[arg(long, default_value_t = 1.25)]
    pub threshold: f64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn base_config(args: &SweepArgs, file: &FileConfig, algo: &str) -> Result<SimConfig> {
    let algorithm = super::parse_algo(algo)?;
    let n = args.n.unwrap_or(1_000);
    let f = args.f.unwrap_or(0.1);
    let v = args.v.unwrap_or(100);
    let mut cfg = SimConfig::new(algorithm, n, f, v);
    cfg.sampling_rate = args.rho.unwrap_or(1.0);
    cfg.attack.force = args.force.unwrap_or(10.0);
    cfg.ticks = resolve(args.ticks, file.ticks, 400);
    cfg.metrics_interval = resolve(None, file.metrics_interval, 5);
    Ok(cfg)
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

fn box_row(vals: &mut Vec<f64>) -> String {
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [0.0, 0.25, 0.5, 0.75, 1.0]
        .map(|q| sig6(quantile(vals, q)))
        .join(",")
}

pub fn run(args: SweepArgs, file: &FileConfig) -> Result<()> {
    let algos: Vec<String> = args.algo.split(',').map(|s| s.trim().to_string()).collect();
    let seeds = super::parse_seeds(&resolve(args.seeds.clone(), file.seeds.clone(), "1..5".into()))?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut out =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    match args.panel.as_str() {
        "f" | "force" | "rho" | "v" => {
            let values: Vec<f64> = super::parse_list(
                "values",
                args.values
                    .as_deref()
                    .ok_or_else(|| UsageError("--values is required for this panel".into()))?,
            )?;
            writeln!(out, "panel,x,algo,min,q1,median,q3,max")?;
            let mut jobs = Vec::new();
            for algo in &algos {
                for &x in &values {
                    for &seed in &seeds {
                        let mut cfg = base_config(&args, file, algo)?;
                        match args.panel.as_str() {
                            "f" => {
                                cfg.byz_fraction = x;
                                cfg.bootstrap.byz_fraction = x;
                            }
                            "force" => cfg.attack.force = x,
                            "rho" => cfg.sampling_rate = x,
                            "v" => {
                                cfg.view_size = x as usize;
                                cfg.replacement_count = (x as usize / 2).max(1);
                                cfg.bootstrap.size = (2 * x as usize).min(cfg.n - 1);
                            }
                            _ => unreachable!(),
                        }
                        cfg.rng_seed = seed;
                        jobs.push((algo.clone(), x, cfg));
                    }
                }
            }
            let terms: Result<Vec<f64>, basalt_sim::Error> = jobs
                .par_iter()
                .map(|(_, _, cfg)| {
                    run_sim(cfg).map(|o| terminal_stats(&o.records, cfg.ticks).byz_sample_fraction)
                })
                .collect();
            let terms = terms?;
            for (chunk, term_chunk) in jobs.chunks(seeds.len()).zip(terms.chunks(seeds.len())) {
                let (algo, x, _) = &chunk[0];
                let mut vals = term_chunk.to_vec();
                writeln!(out, "{},{},{},{}", args.panel, sig6(*x), algo, box_row(&mut vals))?;
            }
        }
        "convergence" => {
            let values: Vec<f64> = super::parse_list(
                "values",
                args.values.as_deref().unwrap_or("0.05,0.1,0.15,0.2,0.25,0.3"),
            )?;
            writeln!(
                out,
                "panel,f,algo,min,q1,median,q3,max,converged,seeds"
            )?;
            let mut jobs = Vec::new();
            for algo in &algos {
                for &x in &values {
                    for &seed in &seeds {
                        let mut cfg = base_config(&args, file, algo)?;
                        cfg.byz_fraction = x;
                        cfg.bootstrap.byz_fraction = x;
                        cfg.rng_seed = seed;
                        jobs.push((algo.clone(), x, cfg));
                    }
                }
            }
            let outcomes: Result<Vec<Convergence>, basalt_sim::Error> = jobs
                .par_iter()
                .map(|(_, _, cfg)| {
                    run_sim(cfg).map(|o| {
                        convergence_from_records(&o.records, cfg.byz_fraction, args.threshold)
                    })
                })
                .collect();
            let outcomes = outcomes?;
            for (chunk, conv_chunk) in jobs.chunks(seeds.len()).zip(outcomes.chunks(seeds.len())) {
                let (algo, x, cfg) = &chunk[0];
                // Non-converged runs enter the box statistics as T + 1.
                let mut ticks: Vec<f64> = conv_chunk
                    .iter()
                    .map(|c| match c {
                        Convergence::Converged(t) => *t as f64,
                        Convergence::NotConverged => (cfg.ticks + 1) as f64,
                    })
                    .collect();
                let converged = conv_chunk
                    .iter()
                    .filter(|c| matches!(c, Convergence::Converged(_)))
                    .count();
                writeln!(
                    out,
                    "convergence,{},{},{},{},{}",
                    sig6(*x),
                    algo,
                    box_row(&mut ticks),
                    converged,
                    seeds.len()
                )?;
            }
        }
        "maxrate" => {
            let v_grid: Vec<usize> =
                super::parse_list("values", args.values.as_deref().unwrap_or("50,100,160,200"))?;
            let rho_grid: Vec<f64> = super::parse_list("rho-grid", &args.rho_grid)?;
            writeln!(out, "panel,algo,v,max_rho")?;
            for algo in &algos {
                let cfg = base_config(&args, file, algo)?;
                let results = max_sampling_rate(&cfg, &v_grid, &rho_grid, seeds.len() as u64)?;
                for r in results {
                    writeln!(
                        out,
                        "maxrate,{},{},{}",
                        algo,
                        r.view_size,
                        r.max_rate.map(sig6).unwrap_or_else(|| "nan".into())
                    )?;
                }
            }
        }
        other => bail!(UsageError(format!(
            "unknown panel `{other}` (f | force | rho | v | convergence | maxrate)"
        ))),
    }

    println!("wrote {}", args.out.display());
    Ok(())
}
