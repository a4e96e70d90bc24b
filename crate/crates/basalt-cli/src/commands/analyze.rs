//! `analyze`: closed-form model outputs and dataset-driven attacker-power
//! computations, emitted as deterministic CSV.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use basalt_sim::analysis::{
    delta_c_bound, equilibrium, equilibrium_from_power, join_isolation_prob, ode_trajectory,
    reset_isolation_prob, Equilibrium, TheoryParams,
};
use basalt_sim::dataset::{attacker_power, IpBlockTable, PowerMethod};
use basalt_sim::rank::{PrefixGroup, RankingFunction};
use basalt_sim::synth::synthetic_table;
use clap::{Args, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fmt::sig6;
use crate::UsageError;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub what: AnalyzeCmd,
}

#[derive(Subcommand, Debug)]
pub enum AnalyzeCmd {
    /// Equilibria B1 (stable) and B2 (unstable) of the view composition.
    Equilibrium {
        #[arg(long)]
        f: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the mean-field trajectory of c(t) and B(t).
    Ode {
        #[arg(long)]
        f: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        c0: f64,
        #[arg(long, default_value_t = 400.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Keep one point every this many integration steps.
        #[arg(long, default_value_t = 100)]
        sample_every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Isolation probabilities: joining node and at-reset bounds.
    Isolation {
        /// Joining-node bound (uses --f0 and --i).
        #[arg(long, conflicts_with = "reset")]
        join: bool,
        /// At-reset bound (uses --c and --k).
        #[arg(long)]
        reset: bool,
        #[arg(long, default_value_t = 0.5)]
        f0: f64,
        #[arg(long, default_value_t = 250.0)]
        i: f64,
        #[arg(long, default_value_t = 585.0)]
        c: f64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        v: f64,
        #[arg(long, default_value_t = 50.0)]
        k: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupon-collector lower bound on per-reset knowledge growth.
    Deltac {
        #[arg(long)]
        c0: f64,
        #[arg(long)]
        f: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        v: f64,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attacker power of one AS under one ranking function.
    Power {
        #[arg(long)]
        dataset: PathBuf,
        /// Attacker ASN (default: the largest AS by active addresses).
        #[arg(long)]
        asn: Option<u32>,
        #[arg(long)]
        honest: usize,
        /// uniform | g8 | g16 | g24 | hierarchical.
        #[arg(long, default_value = "hierarchical")]
        ranking: String,
        /// exact | mc.
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Power of the largest AS for all five sampling methods across
    /// honest population sizes.
    Table2 {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "100,1000,10000")]
        honest: String,
        #[arg(long)]
        asn: Option<u32>,
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hierarchical power and resulting equilibrium for the biggest ASes.
    Fig2 {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 100)]
        top: usize,
        #[arg(long, default_value_t = 1000)]
        honest: usize,
        #[arg(long, default_value_t = 100.0)]
        v: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic GeoLite2-style block table.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_ranking(s: &str) -> Result<RankingFunction> {
    Ok(match s {
        "uniform" => RankingFunction::Uniform,
        "g8" => RankingFunction::Grouped(PrefixGroup::new(8).unwrap()),
        "g16" => RankingFunction::Grouped(PrefixGroup::new(16).unwrap()),
        "g24" => RankingFunction::Grouped(PrefixGroup::new(24).unwrap()),
        "hierarchical" => RankingFunction::Hierarchical,
        other => anyhow::bail!(UsageError(format!("unknown ranking `{other}`"))),
    })
}

fn parse_method(s: &str, trials: usize) -> Result<PowerMethod> {
    Ok(match s {
        "exact" => PowerMethod::Exact,
        "mc" => PowerMethod::MonteCarlo { trials },
        other => anyhow::bail!(UsageError(format!("unknown method `{other}` (exact | mc)"))),
    })
}

fn emit(out: Option<PathBuf>, content: String) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?
                .write_all(content.as_bytes())?;
            println!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn largest_asn(table: &IpBlockTable) -> Result<u32> {
    table
        .top_asns(1)
        .first()
        .map(|&(asn, _)| asn)
        .ok_or_else(|| UsageError("dataset has no blocks".into()).into())
}

pub fn run(args: AnalyzeArgs) -> Result<()> {
    match args.what {
        AnalyzeCmd::Equilibrium { f, n, v, rho, out } => {
            let eq = equilibrium(&TheoryParams::new(n, f, v, rho))?;
            let (b1, b2) = match eq {
                Equilibrium::Roots { stable, unstable } => (sig6(stable), sig6(unstable)),
                Equilibrium::Collapse => ("nan".into(), "nan".into()),
            };
            emit(
                out,
                format!(
                    "f,n,v,rho,b1,b2\n{},{},{},{},{b1},{b2}\n",
                    sig6(f),
                    sig6(n),
                    sig6(v),
                    sig6(rho)
                ),
            )
        }
        AnalyzeCmd::Ode {
            f,
            n,
            v,
            rho,
            c0,
            t_end,
            dt,
            sample_every,
            out,
        } => {
            let tp = TheoryParams::new(n, f, v, rho);
            let traj = ode_trajectory(&tp, c0, t_end, dt)?;
            let mut content = String::from("t,c,b\n");
            let step = sample_every.max(1);
            for (i, p) in traj.iter().enumerate() {
                if i % step == 0 || i == traj.len() - 1 {
                    content.push_str(&format!("{},{},{}\n", sig6(p.t), sig6(p.c), sig6(p.b)));
                }
            }
            emit(out, content)
        }
        AnalyzeCmd::Isolation {
            join,
            reset,
            f0,
            i,
            c,
            f,
            n,
            v,
            k,
            out,
        } => {
            let mut content = String::from("bound,probability\n");
            let default_both = !join && !reset;
            if join || default_both {
                let p = join_isolation_prob(f0, i, f, n, v);
                content.push_str(&format!("join,{}\n", sig6(p)));
            }
            if reset || default_both {
                let p = reset_isolation_prob(c, f, n, v, k);
                content.push_str(&format!("reset,{}\n", sig6(p)));
            }
            emit(out, content)
        }
        AnalyzeCmd::Deltac {
            c0,
            f,
            n,
            v,
            k,
            rho,
            out,
        } => {
            let mut tp = TheoryParams::new(n, f, v, rho);
            tp.replacement_count = k;
            let dc = delta_c_bound(c0, &tp)?;
            emit(
                out,
                format!("c0,f,n,v,k,rho,delta_c_lower_bound\n{},{},{},{},{},{},{}\n",
                    sig6(c0), sig6(f), sig6(n), sig6(v), sig6(k), sig6(rho), sig6(dc)),
            )
        }
        AnalyzeCmd::Power {
            dataset,
            asn,
            honest,
            ranking,
            method,
            trials,
            seed,
            out,
        } => {
            let table = IpBlockTable::from_csv_path(&dataset)?;
            let asn = match asn {
                Some(a) => a,
                None => largest_asn(&table)?,
            };
            let rf = parse_ranking(&ranking)?;
            let m = parse_method(&method, trials)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let power = attacker_power(&table, asn, honest, rf, m, &mut rng)?;
            emit(
                out,
                format!(
                    "asn,active,honest,ranking,method,power\n{},{},{},{},{},{}\n",
                    asn,
                    table.active_of(asn),
                    honest,
                    ranking,
                    method,
                    sig6(power)
                ),
            )
        }
        AnalyzeCmd::Table2 {
            dataset,
            honest,
            asn,
            method,
            trials,
            seed,
            out,
        } => {
            let table = IpBlockTable::from_csv_path(&dataset)?;
            let asn = match asn {
                Some(a) => a,
                None => largest_asn(&table)?,
            };
            let qs: Vec<usize> = super::parse_list("honest", &honest)?;
            let m = parse_method(&method, trials)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let methods: [(&str, RankingFunction); 5] = [
                ("uniform", RankingFunction::Uniform),
                ("by-8-prefix", RankingFunction::Grouped(PrefixGroup::new(8).unwrap())),
                ("by-16-prefix", RankingFunction::Grouped(PrefixGroup::new(16).unwrap())),
                ("by-24-prefix", RankingFunction::Grouped(PrefixGroup::new(24).unwrap())),
                ("hierarchical", RankingFunction::Hierarchical),
            ];
            let mut content = format!(
                "method,{}\n",
                qs.iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(",")
            );
            for (name, rf) in methods {
                let row: Vec<String> = qs
                    .iter()
                    .map(|&q| {
                        attacker_power(&table, asn, q, rf, m, &mut rng).map(sig6)
                    })
                    .collect::<Result<_, _>>()?;
                content.push_str(&format!("{name},{}\n", row.join(",")));
            }
            emit(out, content)
        }
        AnalyzeCmd::Fig2 {
            dataset,
            top,
            honest,
            v,
            rho,
            seed,
            out,
        } => {
            let table = IpBlockTable::from_csv_path(&dataset)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut content = String::from("asn,active,power,b1\n");
            for (asn, active) in table.top_asns(top) {
                let power = attacker_power(
                    &table,
                    asn,
                    honest,
                    RankingFunction::Hierarchical,
                    PowerMethod::Exact,
                    &mut rng,
                )?;
                let n_equiv = honest as f64 / (1.0 - power);
                let b1 = match equilibrium_from_power(power, n_equiv, v, rho)? {
                    Equilibrium::Roots { stable, .. } => sig6(stable),
                    Equilibrium::Collapse => "nan".into(),
                };
                content.push_str(&format!("{asn},{active},{},{b1}\n", sig6(power)));
            }
            emit(out, content)
        }
        AnalyzeCmd::GenDataset { out, seed } => {
            let table = synthetic_table(seed);
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            table.to_csv(std::io::BufWriter::new(file))?;
            println!(
                "wrote {} ({} blocks, {} active addresses)",
                out.display(),
                table.blocks().len(),
                table.total_active()
            );
            Ok(())
        }
    }
}
