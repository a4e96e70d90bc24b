//! `simulate`: run the protocol over a parameter grid, writing one CSV of
//! per-tick metrics per run, a per-run terminal summary and a per-grid
//! aggregate with mean and standard deviation over seeds.

use std::fs::File;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use basalt_sim::sim::{run_sim, terminal_stats, Algorithm, RunOutput, SimConfig, TerminalStats};
use clap::Args;
use rayon::prelude::*;

use crate::config::{resolve, FileConfig};
use crate::fmt::{compact, sig6};
use crate::UsageError;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Algorithms: basalt | basalt-simple | brahms (comma-separated).
    #[arg(long)]
    pub algo: Option<String>,
    /// Node counts (comma-separated grid).
    #[arg(long)]
    pub n: Option<String>,
    /// Byzantine fractions (comma-separated grid).
    #[arg(long)]
    pub f: Option<String>,
    /// View sizes (comma-separated grid).
    #[arg(long)]
    pub v: Option<String>,
    /// Sampling rates (comma-separated grid).
    #[arg(long)]
    pub rho: Option<String>,
    /// Attack forces (comma-separated grid).
    #[arg(long)]
    pub force: Option<String>,
    /// Replacement count (default: v/2 per grid point).
    #[arg(long)]
    pub k: Option<usize>,
    /// Attack strategy: flood | hitpoison.
    #[arg(long, default_value = "flood")]
    pub strategy: String,
    /// Correct identifiers advertised per hit-poison message.
    #[arg(long, default_value_t = 100)]
    pub advertised: usize,
    /// Ticks per run.
    #[arg(long)]
    pub ticks: Option<u64>,
    /// Seeds: "a..b" inclusive or comma-separated.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Byzantine fraction of the bootstrap list (default: same as f).
    #[arg(long)]
    pub f0: Option<f64>,
    /// Bootstrap list size (default: 2v capped at n-1).
    #[arg(long)]
    pub bootstrap_size: Option<usize>,
    /// Draw an independent bootstrap list per node.
    #[arg(long)]
    pub per_node_bootstrap: bool,
    /// Ticks between metric records.
    #[arg(long)]
    pub metrics_interval: Option<u64>,
    /// Skip graph-quality metrics (clustering, mean path, in-degrees).
    #[arg(long)]
    pub no_graph_metrics: bool,
    /// Skip per-slot distinct-correct tracking (c_mean).
    #[arg(long)]
    pub no_track_seen: bool,
    /// Maximum grid-point x seed count.
    #[arg(long)]
    pub grid_cap: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub const RUN_CSV_HEADER: &str =
    "tick,byz_sample_fraction,byz_view_fraction,isolated_count,clustering,mean_path,indegree_spread,c_mean";

pub struct RunSpec {
    pub cfg: SimConfig,
    pub label: String,
}

#[allow(clippy::too_many_arguments)]
pub fn build_config(
    algorithm: Algorithm,
    n: usize,
    f: f64,
    v: usize,
    rho: f64,
    force: f64,
    args: &SimulateArgs,
    file: &FileConfig,
    seed: u64,
) -> SimConfig {
    let mut cfg = SimConfig::new(algorithm, n, f, v);
    cfg.sampling_rate = rho;
    cfg.replacement_count = args.k.or(file.k).unwrap_or_else(|| (v / 2).max(1));
    cfg.attack.force = force;
    cfg.ticks = resolve(args.ticks, file.ticks, 400);
    cfg.rng_seed = seed;
    cfg.metrics_interval = resolve(args.metrics_interval, file.metrics_interval, 5);
    cfg.graph_metrics = !args.no_graph_metrics;
    cfg.track_seen = !args.no_track_seen;
    cfg.bootstrap.byz_fraction = args.f0.or(file.f0).unwrap_or(f);
    if let Some(size) = args.bootstrap_size.or(file.bootstrap_size) {
        cfg.bootstrap.size = size;
    }
    cfg.bootstrap.shared = !args.per_node_bootstrap;
    cfg
}

pub fn expand_grid(args: &SimulateArgs, file: &FileConfig) -> Result<(Vec<RunSpec>, usize)> {
    let algos_raw = resolve(args.algo.clone(), file.algo.clone(), "basalt".into());
    let mut algos = Vec::new();
    for a in algos_raw.split(',') {
        algos.push(super::parse_algo(a.trim())?);
    }
    let ns: Vec<usize> = super::parse_list("n", &resolve(args.n.clone(), file.n.clone(), "1000".into()))?;
    let fs: Vec<f64> = super::parse_list("f", &resolve(args.f.clone(), file.f.clone(), "0.1".into()))?;
    let vs: Vec<usize> = super::parse_list("v", &resolve(args.v.clone(), file.v.clone(), "100".into()))?;
    let rhos: Vec<f64> =
        super::parse_list("rho", &resolve(args.rho.clone(), file.rho.clone(), "1".into()))?;
    let forces: Vec<f64> = super::parse_list(
        "force",
        &resolve(args.force.clone(), file.force.clone(), "10".into()),
    )?;
    let seeds = super::parse_seeds(&resolve(args.seeds.clone(), file.seeds.clone(), "1..5".into()))?;
    let strategy = super::parse_strategy(&args.strategy, args.advertised)?;

    let cap = resolve(args.grid_cap, file.grid_cap, 10_000);
    let total = algos.len() * ns.len() * fs.len() * vs.len() * rhos.len() * forces.len()
        * seeds.len();
    if total > cap {
        bail!(UsageError(format!(
            "grid of {total} runs exceeds the cap of {cap} (raise --grid-cap to override)"
        )));
    }

    let mut specs = Vec::with_capacity(total);
    for &algorithm in &algos {
        for &n in &ns {
            for &f in &fs {
                for &v in &vs {
                    for &rho in &rhos {
                        for &force in &forces {
                            for &seed in &seeds {
                                let mut cfg =
                                    build_config(algorithm, n, f, v, rho, force, args, file, seed);
                                cfg.attack.strategy = strategy;
                                let label = format!(
                                    "{}_n{}_f{}_v{}_rho{}_F{}_s{}",
                                    algorithm.name(),
                                    n,
                                    compact(f),
                                    v,
                                    compact(rho),
                                    compact(force),
                                    seed
                                );
                                specs.push(RunSpec { cfg, label });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((specs, seeds.len()))
}

pub fn write_run_csv(out: &mut impl std::io::Write, run: &RunOutput) -> std::io::Result<()> {
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for r in &run.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.tick,
            sig6(r.byz_sample_fraction),
            sig6(r.byz_view_fraction),
            r.isolated_count,
            sig6(r.clustering),
            sig6(r.mean_path),
            sig6(r.indegree_spread),
            sig6(r.c_mean),
        )?;
    }
    Ok(())
}

const TERMINAL_COLS: &str = "terminal_byz_sample_fraction,terminal_byz_view_fraction,terminal_isolated,terminal_clustering,terminal_mean_path,terminal_indegree_spread,terminal_c_mean";

fn terminal_row(t: &TerminalStats) -> String {
    [
        t.byz_sample_fraction,
        t.byz_view_fraction,
        t.isolated_count,
        t.clustering,
        t.mean_path,
        t.indegree_spread,
        t.c_mean,
    ]
    .map(sig6)
    .join(",")
}

pub fn run(args: SimulateArgs, file: &FileConfig) -> Result<()> {
    let (specs, seeds_per_point) = expand_grid(&args, file)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let results: Result<Vec<(TerminalStats, RunOutput)>, basalt_sim::Error> = specs
        .par_iter()
        .map(|spec| {
            let out = run_sim(&spec.cfg)?;
            Ok((terminal_stats(&out.records, spec.cfg.ticks), out))
        })
        .collect();
    let results = results?;

    // Per-run tick CSVs and the per-run terminal summary.
    let mut summary = File::create(args.out.join("summary.csv"))?;
    writeln!(
        summary,
        "algo,n,f,v,rho,k,force,strategy,seed,{TERMINAL_COLS}"
    )?;
    for (spec, (term, out)) in specs.iter().zip(&results) {
        let mut f = File::create(args.out.join(format!("run_{}.csv", spec.label)))?;
        write_run_csv(&mut f, out)?;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            spec.cfg.algorithm.name(),
            spec.cfg.n,
            sig6(spec.cfg.byz_fraction),
            spec.cfg.view_size,
            sig6(spec.cfg.sampling_rate),
            spec.cfg.replacement_count,
            sig6(spec.cfg.attack.force),
            match spec.cfg.attack.strategy {
                basalt_sim::adversary::Strategy::Flood => "flood",
                basalt_sim::adversary::Strategy::HitPoison { .. } => "hitpoison",
            },
            spec.cfg.rng_seed,
            terminal_row(term),
        )?;
    }

    // Aggregate over seeds per grid point (specs are grouped by seed
    // innermost, so consecutive chunks share a grid point).
    let mut aggregate = File::create(args.out.join("aggregate.csv"))?;
    let metric_names = [
        "byz_sample_fraction",
        "byz_view_fraction",
        "isolated",
        "clustering",
        "mean_path",
        "indegree_spread",
        "c_mean",
    ];
    let cols: Vec<String> = metric_names
        .iter()
        .flat_map(|m| [format!("{m}_mean"), format!("{m}_std")])
        .collect();
    writeln!(
        aggregate,
        "algo,n,f,v,rho,k,force,strategy,seeds,{}",
        cols.join(",")
    )?;
    for (chunk_specs, chunk_results) in specs
        .chunks(seeds_per_point)
        .zip(results.chunks(seeds_per_point))
    {
        let cfg = &chunk_specs[0].cfg;
        let vals: Vec<[f64; 7]> = chunk_results
            .iter()
            .map(|(t, _)| {
                [
                    t.byz_sample_fraction,
                    t.byz_view_fraction,
                    t.isolated_count,
                    t.clustering,
                    t.mean_path,
                    t.indegree_spread,
                    t.c_mean,
                ]
            })
            .collect();
        let n = vals.len() as f64;
        let mut row = Vec::new();
        for m in 0..7 {
            let mean = vals.iter().map(|v| v[m]).sum::<f64>() / n;
            let var = vals.iter().map(|v| (v[m] - mean) * (v[m] - mean)).sum::<f64>() / n;
            row.push(sig6(mean));
            row.push(sig6(var.sqrt()));
        }
        writeln!(
            aggregate,
            "{},{},{},{},{},{},{},{},{},{}",
            cfg.algorithm.name(),
            cfg.n,
            sig6(cfg.byz_fraction),
            cfg.view_size,
            sig6(cfg.sampling_rate),
            cfg.replacement_count,
            sig6(cfg.attack.force),
            match cfg.attack.strategy {
                basalt_sim::adversary::Strategy::Flood => "flood",
                basalt_sim::adversary::Strategy::HitPoison { .. } => "hitpoison",
            },
            seeds_per_point,
            row.join(","),
        )?;
    }

    println!(
        "wrote {} runs, summary.csv and aggregate.csv under {}",
        specs.len(),
        args.out.display()
    );
    Ok(())
}
