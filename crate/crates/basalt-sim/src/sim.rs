//! Deterministic synchronous-round simulator: every tick, correct nodes
//! emit their exchange and sampling messages, Byzantine nodes emit their
//! attack traffic, and all messages emitted at the previous tick are
//! delivered and processed in a deterministically shuffled order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adversary::{Adversary, AttackConfig, WireFlavor};
use crate::brahms::{BrahmsParams, BrahmsState};
use crate::error::{Error, Result};
use crate::graph::{graph_metrics, PathSampling};
use crate::node::{Mode, NodeState, OutMessage, ProtocolParams};
use crate::rank::{NodeId, RankingFunction};
use crate::seen::CorrectRange;

/// Address blocks assigned to simulated nodes. Correct nodes get a
/// contiguous range so the seen-tracking instrumentation can index them.
const CORRECT_BASE: u32 = 0x0a00_0000; // 10.0.0.0
const BYZ_BASE: u32 = 0xc000_0000; // 192.0.0.0

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Basalt,
    BasaltSimple,
    Brahms,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Basalt => "basalt",
            Algorithm::BasaltSimple => "basalt-simple",
            Algorithm::Brahms => "brahms",
        }
    }
}

/// Bootstrap list parameterization: `size` identifiers of which a
/// `byz_fraction` share is Byzantine. With `shared`, one list is drawn and
/// given to every correct node; otherwise each node draws its own.
#[derive(Clone, Copy, Debug)]
pub struct BootstrapConfig {
    pub size: usize,
    pub byz_fraction: f64,
    pub shared: bool,
}

/// Brahms view mix weights (only read when the algorithm is Brahms).
#[derive(Clone, Copy, Debug)]
pub struct BrahmsMix {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub push_limit: Option<usize>,
}

impl Default for BrahmsMix {
    fn default() -> Self {
        BrahmsMix {
            alpha: 0.45,
            beta: 0.45,
            gamma: 0.10,
            push_limit: None,
        }
    }
}

/// Full experiment parameterization. A config plus its `rng_seed` fully
/// determines the simulation: identical configs produce bit-identical
/// metric streams.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    /// Fraction `f` of Byzantine nodes.
    pub byz_fraction: f64,
    pub algorithm: Algorithm,
    pub view_size: usize,
    pub sampling_rate: f64,
    pub replacement_count: usize,
    pub exchange_interval: u64,
    pub brahms_mix: BrahmsMix,
    pub attack: AttackConfig,
    pub bootstrap: BootstrapConfig,
    pub ticks: u64,
    pub rng_seed: u64,
    pub metrics_interval: u64,
    /// Compute clustering / mean path / in-degree spread at each record.
    pub graph_metrics: bool,
    /// Track distinct correct identifiers per slot window (c(t)).
    pub track_seen: bool,
    pub path_sampling: PathSampling,
}

impl SimConfig {
    /// A config with the defaults used throughout the evaluation
    /// (`F = 10`, `rho = 1`, `k = v/2`, shared bootstrap of `2v` ids with
    /// the population's Byzantine fraction).
    pub fn new(algorithm: Algorithm, n: usize, byz_fraction: f64, view_size: usize) -> Self {
        SimConfig {
            n,
            byz_fraction,
            algorithm,
            view_size,
            sampling_rate: 1.0,
            replacement_count: (view_size / 2).max(1),
            exchange_interval: 1,
            brahms_mix: BrahmsMix::default(),
            attack: AttackConfig::flood(10.0),
            bootstrap: BootstrapConfig {
                size: (2 * view_size).min(n.saturating_sub(1).max(1)),
                byz_fraction,
                shared: true,
            },
            ticks: 400,
            rng_seed: 1,
            metrics_interval: 5,
            graph_metrics: false,
            track_seen: false,
            path_sampling: PathSampling::default(),
        }
    }

    /// Number of correct nodes `Q = round((1 - f) n)`.
    pub fn correct_count(&self) -> usize {
        ((1.0 - self.byz_fraction) * self.n as f64).round() as usize
    }

    pub fn byz_count(&self) -> usize {
        self.n - self.correct_count()
    }

    fn protocol_params(&self) -> ProtocolParams {
        ProtocolParams {
            view_size: self.view_size,
            exchange_interval: self.exchange_interval,
            sampling_rate: self.sampling_rate,
            replacement_count: self.replacement_count,
            mode: match self.algorithm {
                Algorithm::BasaltSimple => Mode::Simple,
                _ => Mode::Full,
            },
        }
    }

    fn brahms_params(&self) -> BrahmsParams {
        BrahmsParams {
            view_size: self.view_size,
            exchange_interval: self.exchange_interval,
            sampling_rate: self.sampling_rate,
            replacement_count: self.replacement_count,
            alpha: self.brahms_mix.alpha,
            beta: self.brahms_mix.beta,
            gamma: self.brahms_mix.gamma,
            push_limit: self.brahms_mix.push_limit,
        }
    }

    fn bootstrap_split(&self) -> (usize, usize) {
        let byz = (self.bootstrap.byz_fraction * self.bootstrap.size as f64).ceil() as usize;
        (self.bootstrap.size - byz, byz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("need at least 2 nodes".into()));
        }
        if !(0.0..1.0).contains(&self.byz_fraction) {
            return Err(Error::Config(format!(
                "byzantine fraction {} must be in [0, 1)",
                self.byz_fraction
            )));
        }
        if self.correct_count() == 0 {
            return Err(Error::Config("no correct nodes".into()));
        }
        if self.ticks == 0 {
            return Err(Error::Config("tick count must be at least 1".into()));
        }
        if self.metrics_interval == 0 {
            return Err(Error::Config("metrics interval must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.bootstrap.byz_fraction) {
            return Err(Error::Config(format!(
                "bootstrap byzantine fraction {} must be in [0, 1]",
                self.bootstrap.byz_fraction
            )));
        }
        if self.bootstrap.size == 0 {
            return Err(Error::Config("bootstrap list must not be empty".into()));
        }
        let (boot_correct, boot_byz) = self.bootstrap_split();
        if boot_byz > self.byz_count() {
            return Err(Error::Config(format!(
                "bootstrap needs {boot_byz} byzantine ids but the population has {}",
                self.byz_count()
            )));
        }
        if boot_correct > self.correct_count() {
            return Err(Error::Config(format!(
                "bootstrap needs {boot_correct} correct ids but the population has {}",
                self.correct_count()
            )));
        }
        match self.algorithm {
            Algorithm::Brahms => self.brahms_params().validate()?,
            _ => self.protocol_params().validate()?,
        }
        self.attack.validate()
    }
}

/// Measurements taken every `metrics_interval` ticks (and at tick 0 and
/// the final tick). Fractions are over the window since the previous
/// record for samples, and instantaneous for view contents.
#[derive(Clone, Copy, Debug)]
pub struct MetricsRecord {
    pub tick: u64,
    /// Fraction of application samples emitted in this window that are
    /// Byzantine (0 when the window contains no samples).
    pub byz_sample_fraction: f64,
    /// Mean over correct nodes of Byzantine view slots / v.
    pub byz_view_fraction: f64,
    /// Correct nodes whose every view slot is Byzantine.
    pub isolated_count: u32,
    pub clustering: f64,
    pub mean_path: f64,
    pub indegree_spread: f64,
    /// Mean distinct correct identifiers seen per slot window (c(t)).
    pub c_mean: f64,
    pub samples_emitted: u64,
    pub samples_byzantine: u64,
    pub mean_path_disconnected: f64,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<MetricsRecord>,
    /// Isolation count per tick, index 0 holding the post-bootstrap state.
    pub isolated_per_tick: Vec<u32>,
    pub messages_emitted: u64,
    pub messages_delivered: u64,
    /// Messages emitted at the final tick (never delivered: the run ends).
    pub final_tick_emitted: u64,
}

#[derive(Clone, Debug)]
enum Wire {
    Pull,
    Push(Vec<NodeId>),
    PullReply(Vec<NodeId>),
}

#[derive(Clone, Debug)]
struct Envelope {
    from: NodeId,
    to: NodeId,
    wire: Wire,
}

enum AnyNode {
    Basalt(Box<NodeState>),
    Brahms(Box<BrahmsState>),
}

impl AnyNode {
    fn view(&self) -> Vec<NodeId> {
        match self {
            AnyNode::Basalt(n) => n.view(),
            AnyNode::Brahms(b) => b.view().to_vec(),
        }
    }

    fn byz_slots(&self) -> (usize, usize) {
        match self {
            AnyNode::Basalt(n) => {
                let total = n.slot_count();
                let byz = n
                    .slot_peers()
                    .filter(|p| p.is_some_and(|p| p.is_byzantine()))
                    .count();
                (byz, total)
            }
            AnyNode::Brahms(b) => {
                let v = b.view();
                (v.iter().filter(|p| p.is_byzantine()).count(), v.len())
            }
        }
    }

    fn mean_seen(&self) -> Option<f64> {
        match self {
            AnyNode::Basalt(n) => n.mean_seen(),
            AnyNode::Brahms(b) => b.mean_seen(),
        }
    }
}

struct Sim {
    cfg: SimConfig,
    rng: ChaCha8Rng,
    nodes: Vec<AnyNode>,
    byz_ids: Vec<NodeId>,
    adversary: Option<Adversary>,
    pending: Vec<Envelope>,
    win_samples: u64,
    win_byz: u64,
    messages_emitted: u64,
    messages_delivered: u64,
}

impl Sim {
    fn build(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let q = cfg.correct_count();
        let b = cfg.byz_count();
        let correct_ids: Vec<NodeId> =
            (0..q).map(|i| NodeId::correct(CORRECT_BASE + i as u32)).collect();
        let byz_ids: Vec<NodeId> =
            (0..b).map(|i| NodeId::byzantine(BYZ_BASE + i as u32)).collect();

        let flavor = match cfg.algorithm {
            Algorithm::Brahms => WireFlavor::Brahms,
            _ => WireFlavor::Basalt,
        };
        let adversary = if b > 0 {
            Some(Adversary::new(
                cfg.attack,
                flavor,
                cfg.view_size,
                byz_ids.clone(),
                correct_ids.clone(),
            )?)
        } else {
            None
        };

        let (boot_correct, boot_byz) = cfg.bootstrap_split();
        let draw_bootstrap = |rng: &mut ChaCha8Rng| -> Vec<NodeId> {
            let mut list: Vec<NodeId> =
                rand::seq::index::sample(rng, q, boot_correct.min(q))
                    .into_iter()
                    .map(|i| correct_ids[i])
                    .collect();
            if boot_byz > 0 {
                list.extend(
                    rand::seq::index::sample(rng, b, boot_byz)
                        .into_iter()
                        .map(|i| byz_ids[i]),
                );
            }
            list
        };
        let shared = cfg.bootstrap.shared.then(|| draw_bootstrap(&mut rng));

        let tracking = cfg.track_seen.then_some(CorrectRange {
            base: CORRECT_BASE,
            len: q as u32,
        });

        let mut nodes = Vec::with_capacity(q);
        for &id in &correct_ids {
            let list;
            let boot = match &shared {
                Some(l) => l.as_slice(),
                None => {
                    list = draw_bootstrap(&mut rng);
                    list.as_slice()
                }
            };
            let node = match cfg.algorithm {
                Algorithm::Brahms => AnyNode::Brahms(Box::new(BrahmsState::init(
                    id,
                    cfg.brahms_params(),
                    boot,
                    tracking,
                    &mut rng,
                )?)),
                _ => {
                    let mut n = NodeState::new(
                        id,
                        cfg.protocol_params(),
                        RankingFunction::Uniform,
                        &mut rng,
                    )?;
                    if let Some(range) = tracking {
                        n.enable_seen_tracking(range);
                    }
                    n.bootstrap(boot)?;
                    AnyNode::Basalt(Box::new(n))
                }
            };
            nodes.push(node);
        }

        Ok(Sim {
            cfg: cfg.clone(),
            rng,
            nodes,
            byz_ids,
            adversary,
            pending: Vec::new(),
            win_samples: 0,
            win_byz: 0,
            messages_emitted: 0,
            messages_delivered: 0,
        })
    }

    fn enqueue(&mut self, from: NodeId, msg: OutMessage) {
        let env = match msg {
            OutMessage::Sample { peer } => {
                self.win_samples += 1;
                if peer.is_byzantine() {
                    self.win_byz += 1;
                }
                return;
            }
            OutMessage::Pull { to } => Envelope {
                from,
                to,
                wire: Wire::Pull,
            },
            OutMessage::Push { to, peers } => Envelope {
                from,
                to,
                wire: Wire::Push(peers),
            },
            OutMessage::PullReply { to, peers } => Envelope {
                from,
                to,
                wire: Wire::PullReply(peers),
            },
        };
        self.messages_emitted += 1;
        self.pending.push(env);
    }

    fn correct_index(&self, id: NodeId) -> Option<usize> {
        id.addr()
            .checked_sub(CORRECT_BASE)
            .map(|i| i as usize)
            .filter(|&i| i < self.nodes.len())
    }

    fn route(&mut self, env: Envelope) {
        self.messages_delivered += 1;
        let reply: Option<OutMessage> = if env.to.is_byzantine() {
            match (&env.wire, &self.adversary) {
                (Wire::Pull, Some(adv)) => Some(adv.on_pull(env.from, &mut self.rng)),
                _ => None,
            }
        } else if let Some(idx) = self.correct_index(env.to) {
            match &mut self.nodes[idx] {
                AnyNode::Basalt(node) => match env.wire {
                    Wire::Pull => Some(node.on_pull(env.from)),
                    Wire::Push(peers) | Wire::PullReply(peers) => {
                        node.on_push(env.from, &peers);
                        None
                    }
                },
                AnyNode::Brahms(node) => match env.wire {
                    Wire::Pull => Some(node.on_pull(env.from)),
                    Wire::Push(_) => {
                        node.receive_push(env.from);
                        None
                    }
                    Wire::PullReply(peers) => {
                        node.receive_pull_reply(&peers);
                        None
                    }
                },
            }
        } else {
            None
        };
        if let Some(msg) = reply {
            self.enqueue(env.to, msg);
        }
    }

    fn isolated_count(&self) -> u32 {
        self.nodes
            .iter()
            .map(|n| n.byz_slots())
            .filter(|&(byz, total)| byz == total)
            .count() as u32
    }

    fn record(&mut self, tick: u64) -> MetricsRecord {
        let q = self.nodes.len();
        let mut byz_fraction_sum = 0.0;
        for n in &self.nodes {
            let (byz, total) = n.byz_slots();
            byz_fraction_sum += byz as f64 / total as f64;
        }
        let c_mean = if self.cfg.track_seen {
            self.nodes.iter().map(|n| n.mean_seen().unwrap()).sum::<f64>() / q as f64
        } else {
            f64::NAN
        };
        let (clustering, mean_path, indegree_spread, disconnected) = if self.cfg.graph_metrics {
            let views: Vec<(NodeId, Vec<NodeId>)> = self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (NodeId::correct(CORRECT_BASE + i as u32), n.view()))
                .collect();
            // A dedicated stream: graph metrics never perturb the run.
            let mut metrics_rng = ChaCha8Rng::seed_from_u64(
                self.cfg
                    .rng_seed
                    .wrapping_add(tick.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            );
            let m = graph_metrics(&views, self.cfg.path_sampling, &mut metrics_rng);
            (
                m.clustering,
                m.mean_path,
                m.indegree_spread,
                m.disconnected_fraction,
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        };
        let rec = MetricsRecord {
            tick,
            byz_sample_fraction: if self.win_samples > 0 {
                self.win_byz as f64 / self.win_samples as f64
            } else {
                0.0
            },
            byz_view_fraction: byz_fraction_sum / q as f64,
            isolated_count: self.isolated_count(),
            clustering,
            mean_path,
            indegree_spread,
            c_mean,
            samples_emitted: self.win_samples,
            samples_byzantine: self.win_byz,
            mean_path_disconnected: disconnected,
        };
        self.win_samples = 0;
        self.win_byz = 0;
        rec
    }
}

/// Execute a simulation. Fully deterministic given the config.
pub fn run_sim(cfg: &SimConfig) -> Result<RunOutput> {
    let mut sim = Sim::build(cfg)?;
    let mut records = Vec::new();
    let mut isolated_per_tick = Vec::with_capacity(cfg.ticks as usize + 1);

    isolated_per_tick.push(sim.isolated_count());
    records.push(sim.record(0));

    let mut final_tick_emitted = 0u64;
    for t in 1..=cfg.ticks {
        // Messages emitted during this tick are delivered at t + 1.
        let mut delivering = std::mem::take(&mut sim.pending);

        let emitted_before = sim.messages_emitted;
        for i in 0..sim.nodes.len() {
            let from = NodeId::correct(CORRECT_BASE + i as u32);
            let msgs = match &mut sim.nodes[i] {
                AnyNode::Basalt(node) => node.on_tick(t, &mut sim.rng),
                AnyNode::Brahms(node) => node.round(t, &mut sim.rng),
            };
            for m in msgs {
                sim.enqueue(from, m);
            }
        }
        if sim.adversary.is_some() {
            for bi in 0..sim.byz_ids.len() {
                let from = sim.byz_ids[bi];
                let msgs = sim.adversary.as_ref().unwrap().on_tick(&mut sim.rng);
                for m in msgs {
                    sim.enqueue(from, m);
                }
            }
        }

        delivering.shuffle(&mut sim.rng);
        for env in delivering {
            sim.route(env);
        }
        if t == cfg.ticks {
            // Replies generated while routing this tick count too.
            final_tick_emitted = sim.messages_emitted - emitted_before;
        }

        isolated_per_tick.push(sim.isolated_count());
        if t % cfg.metrics_interval == 0 || t == cfg.ticks {
            records.push(sim.record(t));
        }
    }

    Ok(RunOutput {
        records,
        isolated_per_tick,
        messages_emitted: sim.messages_emitted,
        messages_delivered: sim.messages_delivered,
        final_tick_emitted,
    })
}

/// Terminal statistics over the final 20% of a run's ticks. Sample
/// fractions aggregate as byzantine-to-total sample ratios so that
/// windows without sampling events carry no weight; instantaneous
/// metrics average over the records in the tail.
#[derive(Clone, Copy, Debug)]
pub struct TerminalStats {
    pub byz_sample_fraction: f64,
    pub byz_view_fraction: f64,
    pub isolated_count: f64,
    pub clustering: f64,
    pub mean_path: f64,
    pub indegree_spread: f64,
    pub c_mean: f64,
}

pub fn terminal_stats(records: &[MetricsRecord], ticks: u64) -> TerminalStats {
    let cutoff = (0.8 * ticks as f64).floor() as u64;
    let tail: Vec<&MetricsRecord> = records.iter().filter(|r| r.tick > cutoff).collect();
    let n = tail.len().max(1) as f64;
    let samples: u64 = tail.iter().map(|r| r.samples_emitted).sum();
    let byz: u64 = tail.iter().map(|r| r.samples_byzantine).sum();
    let mean = |f: fn(&MetricsRecord) -> f64| tail.iter().map(|r| f(r)).sum::<f64>() / n;
    TerminalStats {
        byz_sample_fraction: if samples > 0 {
            byz as f64 / samples as f64
        } else {
            0.0
        },
        byz_view_fraction: mean(|r| r.byz_view_fraction),
        isolated_count: mean(|r| f64::from(r.isolated_count)),
        clustering: mean(|r| r.clustering),
        mean_path: mean(|r| r.mean_path),
        indegree_spread: mean(|r| r.indegree_spread),
        c_mean: mean(|r| r.c_mean),
    }
}

/// Convergence verdict of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    /// First tick after which the Byzantine sample fraction stayed within
    /// the threshold for the remainder of the run.
    Converged(u64),
    NotConverged,
}

/// Sustained convergence rule over recorded windows: the earliest record
/// tick from which every later record with a non-empty sample window keeps
/// `byz_sample_fraction <= threshold_ratio * f`. Windows without samples
/// carry no evidence and are skipped, but convergence is never declared on
/// a tail of empty windows after a violation.
pub fn convergence_from_records(
    records: &[MetricsRecord],
    byz_fraction: f64,
    threshold_ratio: f64,
) -> Convergence {
    let threshold = threshold_ratio * byz_fraction;
    let mut last_violation: Option<usize> = None;
    for (i, r) in records.iter().enumerate() {
        if r.samples_emitted > 0 && r.byz_sample_fraction > threshold {
            last_violation = Some(i);
        }
    }
    match last_violation {
        None => Convergence::Converged(0),
        Some(i) => {
            let tail = &records[i + 1..];
            if tail.iter().any(|r| r.samples_emitted > 0) {
                Convergence::Converged(records[i].tick)
            } else {
                Convergence::NotConverged
            }
        }
    }
}

/// Run a simulation and evaluate the sustained convergence rule
/// (`threshold_ratio` defaults to 1.25 in the CLI).
pub fn convergence_time(cfg: &SimConfig, threshold_ratio: f64) -> Result<Convergence> {
    let out = run_sim(cfg)?;
    Ok(convergence_from_records(
        &out.records,
        cfg.byz_fraction,
        threshold_ratio,
    ))
}

/// Whether a run keeps every correct node non-isolated over its second
/// half.
pub fn run_succeeds(out: &RunOutput, ticks: u64) -> bool {
    let half = (ticks / 2) as usize;
    out.isolated_per_tick[half..].iter().all(|&c| c == 0)
}

/// Result of the sampling-rate search for one view size.
#[derive(Clone, Copy, Debug)]
pub struct MaxRateResult {
    pub view_size: usize,
    /// Largest grid rate whose runs succeed (majority over seeds), if any.
    pub max_rate: Option<f64>,
}

/// For each view size in `v_grid`, find the largest sampling rate in
/// `rho_grid` for which no correct node is ever isolated during the second
/// half of the run, judged by majority vote over `seeds` seeded runs.
/// The replacement count is scaled to `v/2` for each grid point.
pub fn max_sampling_rate(
    base: &SimConfig,
    v_grid: &[usize],
    rho_grid: &[f64],
    seeds: u64,
) -> Result<Vec<MaxRateResult>> {
    let mut grid = Vec::new();
    for &v in v_grid {
        for &rho in rho_grid {
            for s in 0..seeds.max(1) {
                let mut cfg = base.clone();
                cfg.view_size = v;
                cfg.replacement_count = (v / 2).max(1);
                cfg.sampling_rate = rho;
                cfg.rng_seed = base.rng_seed.wrapping_add(s);
                cfg.bootstrap.size = cfg.bootstrap.size.min(cfg.n - 1);
                grid.push(cfg);
            }
        }
    }
    let outcomes: Result<Vec<bool>> = grid
        .par_iter()
        .map(|cfg| run_sim(cfg).map(|out| run_succeeds(&out, cfg.ticks)))
        .collect();
    let outcomes = outcomes?;

    let per_seed = seeds.max(1) as usize;
    let mut results = Vec::new();
    let mut cursor = 0usize;
    for &v in v_grid {
        let mut best: Option<f64> = None;
        for &rho in rho_grid {
            let wins = outcomes[cursor..cursor + per_seed]
                .iter()
                .filter(|&&ok| ok)
                .count();
            cursor += per_seed;
            if wins * 2 > per_seed && best.is_none_or(|b| rho > b) {
                best = Some(rho);
            }
        }
        results.push(MaxRateResult {
            view_size: v,
            max_rate: best,
        });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Strategy;

    fn base(algorithm: Algorithm, n: usize, f: f64, v: usize) -> SimConfig {
        let mut cfg = SimConfig::new(algorithm, n, f, v);
        cfg.ticks = 60;
        cfg.rng_seed = 7;
        cfg
    }

    fn record_bits(r: &MetricsRecord) -> Vec<u64> {
        vec![
            r.tick,
            r.byz_sample_fraction.to_bits(),
            r.byz_view_fraction.to_bits(),
            u64::from(r.isolated_count),
            r.clustering.to_bits(),
            r.mean_path.to_bits(),
            r.indegree_spread.to_bits(),
            r.c_mean.to_bits(),
            r.samples_emitted,
            r.samples_byzantine,
        ]
    }

    #[test]
    fn identical_configs_give_bit_identical_records() {
        for algorithm in [Algorithm::Basalt, Algorithm::BasaltSimple, Algorithm::Brahms] {
            let mut cfg = base(algorithm, 80, 0.1, 10);
            cfg.graph_metrics = true;
            cfg.track_seen = true;
            let a = run_sim(&cfg).unwrap();
            let b = run_sim(&cfg).unwrap();
            assert_eq!(a.records.len(), b.records.len());
            for (x, y) in a.records.iter().zip(&b.records) {
                assert_eq!(record_bits(x), record_bits(y));
            }
            assert_eq!(a.isolated_per_tick, b.isolated_per_tick);
        }
    }

    #[test]
    fn every_message_is_delivered_exactly_once_next_tick() {
        for algorithm in [Algorithm::Basalt, Algorithm::Brahms] {
            let cfg = base(algorithm, 60, 0.1, 8);
            let out = run_sim(&cfg).unwrap();
            assert_eq!(
                out.messages_delivered,
                out.messages_emitted - out.final_tick_emitted,
                "conservation violated for {algorithm:?}"
            );
        }
    }

    #[test]
    fn no_adversary_means_no_byzantine_samples_or_isolation() {
        for algorithm in [Algorithm::Basalt, Algorithm::BasaltSimple, Algorithm::Brahms] {
            let cfg = base(algorithm, 60, 0.0, 8);
            let out = run_sim(&cfg).unwrap();
            for r in &out.records {
                assert_eq!(r.byz_sample_fraction, 0.0);
                assert_eq!(r.byz_view_fraction, 0.0);
                assert_eq!(r.isolated_count, 0);
            }
            assert!(out.isolated_per_tick.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn all_byzantine_bootstrap_counts_everyone_isolated() {
        // Eclipse detection soundness: with an all-Byzantine bootstrap,
        // every correct node starts with zero correct slots.
        let mut cfg = base(Algorithm::Basalt, 50, 0.4, 6);
        cfg.bootstrap.byz_fraction = 1.0;
        cfg.bootstrap.size = 12;
        cfg.ticks = 5;
        let out = run_sim(&cfg).unwrap();
        assert_eq!(out.records[0].isolated_count, cfg.correct_count() as u32);
        assert_eq!(out.records[0].byz_view_fraction, 1.0);
    }

    #[test]
    fn sample_counts_follow_the_sampling_rate() {
        let mut cfg = base(Algorithm::Basalt, 40, 0.0, 8);
        cfg.replacement_count = 4;
        cfg.sampling_rate = 0.5; // k/rho = 8 ticks
        cfg.ticks = 64;
        let out = run_sim(&cfg).unwrap();
        let total: u64 = out.records.iter().map(|r| r.samples_emitted).sum();
        // rho * T samples per node.
        assert_eq!(total, (0.5 * 64.0) as u64 * cfg.correct_count() as u64);
    }

    #[test]
    fn convergence_rule_handles_edges() {
        let mk = |tick, frac: f64, n: u64| MetricsRecord {
            tick,
            byz_sample_fraction: frac,
            byz_view_fraction: 0.0,
            isolated_count: 0,
            clustering: f64::NAN,
            mean_path: f64::NAN,
            indegree_spread: f64::NAN,
            c_mean: f64::NAN,
            samples_emitted: n,
            samples_byzantine: 0,
            mean_path_disconnected: f64::NAN,
        };
        // All records satisfy: converged at 0.
        let recs = vec![mk(0, 0.0, 0), mk(50, 0.11, 10), mk(100, 0.12, 10)];
        assert_eq!(
            convergence_from_records(&recs, 0.1, 1.25),
            Convergence::Converged(0)
        );
        // Violation at 50, clean afterwards: converged at 50.
        let recs = vec![mk(0, 0.0, 0), mk(50, 0.9, 10), mk(100, 0.1, 10)];
        assert_eq!(
            convergence_from_records(&recs, 0.1, 1.25),
            Convergence::Converged(50)
        );
        // Violation in the last non-empty window: not converged.
        let recs = vec![mk(0, 0.0, 0), mk(50, 0.1, 10), mk(100, 0.9, 10)];
        assert_eq!(
            convergence_from_records(&recs, 0.1, 1.25),
            Convergence::NotConverged
        );
        // Trailing empty windows after a violation carry no evidence.
        let recs = vec![mk(0, 0.0, 0), mk(50, 0.9, 10), mk(100, 0.0, 0)];
        assert_eq!(
            convergence_from_records(&recs, 0.1, 1.25),
            Convergence::NotConverged
        );
        // f = 0: converged at tick 0.
        let recs = vec![mk(0, 0.0, 0), mk(50, 0.0, 10)];
        assert_eq!(
            convergence_from_records(&recs, 0.0, 1.25),
            Convergence::Converged(0)
        );
    }

    #[test]
    fn hit_counters_stay_balanced_under_honest_gossip() {
        // With an all-honest population, no slot's counter drifts away
        // from the others: the coefficient of variation of hits across
        // all (node, slot) pairs stays below a configured bound.
        let mut cfg = base(Algorithm::Basalt, 50, 0.0, 10);
        cfg.replacement_count = 5;
        cfg.ticks = 300;
        let mut sim = Sim::build(&cfg).unwrap();
        for t in 1..=cfg.ticks {
            let mut delivering = std::mem::take(&mut sim.pending);
            for i in 0..sim.nodes.len() {
                let from = NodeId::correct(CORRECT_BASE + i as u32);
                let msgs = match &mut sim.nodes[i] {
                    AnyNode::Basalt(node) => node.on_tick(t, &mut sim.rng),
                    AnyNode::Brahms(_) => unreachable!(),
                };
                for m in msgs {
                    sim.enqueue(from, m);
                }
            }
            delivering.shuffle(&mut sim.rng);
            for env in delivering {
                sim.route(env);
            }
        }
        let mut hits: Vec<f64> = Vec::new();
        for n in &sim.nodes {
            let AnyNode::Basalt(node) = n else { unreachable!() };
            hits.extend(node.slot_hits().map(|h| h as f64));
        }
        let mean = hits.iter().sum::<f64>() / hits.len() as f64;
        let var = hits.iter().map(|h| (h - mean) * (h - mean)).sum::<f64>() / hits.len() as f64;
        let cv = var.sqrt() / mean;
        assert!(cv < 1.0, "hit counter CV too high: {cv}");
    }

    #[test]
    fn hit_poison_only_grows_correct_knowledge() {
        // c(t) under hit poisoning never decreases except at resets; at
        // equal force the poisoned run knows at least as many correct ids.
        let mut flood = base(Algorithm::Basalt, 60, 0.2, 8);
        flood.replacement_count = 8;
        flood.sampling_rate = 0.25; // reset every 32 ticks
        flood.ticks = 30; // before the first reset
        flood.track_seen = true;
        let mut poison = flood.clone();
        poison.attack.strategy = Strategy::HitPoison {
            advertised_correct: 8,
        };
        let out_f = run_sim(&flood).unwrap();
        let out_p = run_sim(&poison).unwrap();
        let c_f: Vec<f64> = out_f.records.iter().map(|r| r.c_mean).collect();
        let c_p: Vec<f64> = out_p.records.iter().map(|r| r.c_mean).collect();
        // Monotone within the window (no resets happened).
        for w in c_p.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert!(
            c_p.last().unwrap() >= c_f.last().unwrap(),
            "poisoning should accelerate correct discovery: {c_p:?} vs {c_f:?}"
        );
    }

    #[test]
    fn invalid_configs_are_descriptive_errors() {
        let mut cfg = base(Algorithm::Basalt, 50, 0.1, 8);
        cfg.bootstrap.byz_fraction = 0.9; // needs more byz ids than exist
        cfg.bootstrap.size = 49;
        assert!(matches!(run_sim(&cfg), Err(Error::Config(_))));

        let mut cfg = base(Algorithm::Basalt, 50, 1.0, 8);
        cfg.bootstrap.byz_fraction = 0.0;
        assert!(matches!(run_sim(&cfg), Err(Error::Config(_))));

        let mut cfg = base(Algorithm::Basalt, 50, 0.1, 8);
        cfg.sampling_rate = 3.0; // k/rho = 4/3 ticks
        cfg.replacement_count = 4;
        assert!(matches!(run_sim(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn max_sampling_rate_is_monotone_with_majority_vote() {
        let mut cfg = base(Algorithm::Basalt, 120, 0.1, 10);
        cfg.ticks = 80;
        cfg.bootstrap.size = 20;
        let grid_v = [8usize, 16];
        let grid_rho = [0.5, 1.0, 2.0];
        let results = max_sampling_rate(&cfg, &grid_v, &grid_rho, 3).unwrap();
        assert_eq!(results.len(), 2);
        // Success is monotone: the reported max is the largest successful
        // rate, so every smaller grid rate must succeed as well.
        for r in &results {
            if let Some(max) = r.max_rate {
                for &rho in grid_rho.iter().filter(|&&x| x < max) {
                    let mut c = cfg.clone();
                    c.view_size = r.view_size;
                    c.replacement_count = (r.view_size / 2).max(1);
                    c.sampling_rate = rho;
                    let wins = (0..3)
                        .filter(|&s| {
                            let mut cc = c.clone();
                            cc.rng_seed = cfg.rng_seed.wrapping_add(s);
                            let out = run_sim(&cc).unwrap();
                            run_succeeds(&out, cc.ticks)
                        })
                        .count();
                    assert!(wins * 2 > 3, "non-monotone at v={} rho={rho}", r.view_size);
                }
            }
        }
    }
}
