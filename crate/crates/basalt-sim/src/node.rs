//! The per-node protocol state machine: a view of `v` slots, each owning a
//! random ranking seed, the best-matching peer seen for that seed and a hit
//! counter; periodic pull/push exchanges; and round-robin sampling with
//! seed replacement.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rank::{keyed_hash, rank, NodeId, RankVector, RankingFunction, Seed};
use crate::seen::{CorrectRange, SeenSet};

/// Protocol mode: with or without the hit-counter hardening mechanism.
///
/// `Simple` drops hit counting entirely: received identifiers only ever
/// replace a slot's peer when they rank strictly better, and peers to
/// contact are drawn uniformly from the view.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Full,
    Simple,
}

/// Protocol parameters: view size `v`, exchange interval `tau` (in ticks),
/// sampling rate `rho` (samples per tick) and replacement count `k`.
#[derive(Clone, Copy, Debug)]
pub struct ProtocolParams {
    pub view_size: usize,
    pub exchange_interval: u64,
    pub sampling_rate: f64,
    pub replacement_count: usize,
    pub mode: Mode,
}

impl ProtocolParams {
    pub fn new(view_size: usize, sampling_rate: f64, replacement_count: usize, mode: Mode) -> Self {
        ProtocolParams {
            view_size,
            exchange_interval: 1,
            sampling_rate,
            replacement_count,
            mode,
        }
    }

    /// Ticks between sampling events: `k / rho`. Time is quantized to
    /// integer ticks, so both `k/rho` and `v/rho` must be positive integer
    /// multiples of the exchange interval.
    pub fn sample_interval(&self) -> Result<u64> {
        let k = self.replacement_count as f64;
        let v = self.view_size as f64;
        let interval = k / self.sampling_rate;
        let view_period = v / self.sampling_rate;
        let tau = self.exchange_interval as f64;
        for (name, value) in [("k/rho", interval), ("v/rho", view_period)] {
            let ticks = value.round();
            if (value - ticks).abs() > 1e-9 || ticks < 1.0 {
                return Err(Error::Config(format!(
                    "{name} = {value} is not a positive whole number of ticks"
                )));
            }
            if (ticks / tau).fract().abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{name} = {value} is not a multiple of the exchange interval {tau}"
                )));
            }
        }
        Ok(interval.round() as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_size == 0 {
            return Err(Error::Config("view size must be at least 1".into()));
        }
        if self.replacement_count == 0 || self.replacement_count > self.view_size {
            return Err(Error::Config(format!(
                "replacement count {} must be in 1..={}",
                self.replacement_count, self.view_size
            )));
        }
        if !(self.sampling_rate > 0.0) {
            return Err(Error::Config("sampling rate must be positive".into()));
        }
        if self.exchange_interval == 0 {
            return Err(Error::Config("exchange interval must be at least 1 tick".into()));
        }
        self.sample_interval().map(|_| ())
    }
}

/// Messages produced by a node during one tick, plus samples handed to the
/// application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutMessage {
    /// Ask `to` for its current view.
    Pull { to: NodeId },
    /// Send our current view (or an arbitrary payload, for attackers).
    Push { to: NodeId, peers: Vec<NodeId> },
    /// Answer a pull with a view. Only the Brahms wire distinguishes pull
    /// replies from pushes; this protocol replies with an ordinary `Push`.
    PullReply { to: NodeId, peers: Vec<NodeId> },
    /// A peer identifier emitted to the application as a random sample.
    Sample { peer: NodeId },
}

/// One view slot: its ranking seed, the best-matching peer seen since the
/// seed was last set, and the hit counter.
#[derive(Clone, Debug)]
struct ViewSlot {
    seed: Seed,
    peer: Option<NodeId>,
    /// Cached `rank(ranking, seed, peer)`; recomputed whenever `seed` or
    /// `peer` changes.
    peer_rank: RankVector,
    hits: u64,
    seen: Option<SeenSet>,
}

/// Read-only view of a slot, for metrics and tests.
#[derive(Clone, Copy, Debug)]
pub struct SlotView<'a> {
    pub seed: &'a Seed,
    pub peer: Option<NodeId>,
    pub hits: u64,
}

/// State of one protocol node.
///
/// Single-owner: all operations on one node are serialized by the caller.
#[derive(Clone, Debug)]
pub struct NodeState {
    id: NodeId,
    params: ProtocolParams,
    ranking: RankingFunction,
    slots: Vec<ViewSlot>,
    /// Round-robin cursor: index of the next slot to sample and reset.
    cursor: usize,
    sample_interval: u64,
    seen_range: Option<CorrectRange>,
    scratch: Vec<(NodeId, u32)>,
    push_scratch: Vec<NodeId>,
}

impl NodeState {
    /// Create a node with freshly seeded, empty slots. Callers normally use
    /// [`NodeState::init`]; this staged constructor exists so the simulator
    /// can enable instrumentation before bootstrapping.
    pub fn new<R: Rng + ?Sized>(
        id: NodeId,
        params: ProtocolParams,
        ranking: RankingFunction,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let sample_interval = params.sample_interval()?;
        let slots = (0..params.view_size)
            .map(|_| ViewSlot {
                seed: Seed::generate(rng),
                peer: None,
                peer_rank: rank(ranking, &Seed::from_words([0; 4]), id),
                hits: 0,
                seen: None,
            })
            .collect();
        Ok(NodeState {
            id,
            params,
            ranking,
            slots,
            cursor: 0,
            sample_interval,
            seen_range: None,
            scratch: Vec::new(),
            push_scratch: Vec::new(),
        })
    }

    /// Track, per slot, the set of distinct correct identifiers presented
    /// since the slot's seed was last set. Must be called before
    /// [`NodeState::bootstrap`].
    pub fn enable_seen_tracking(&mut self, range: CorrectRange) {
        self.seen_range = Some(range);
        for slot in &mut self.slots {
            slot.seen = Some(SeenSet::new(range.len));
        }
    }

    /// Fill every slot with the best-matching bootstrap peer for its seed.
    pub fn bootstrap(&mut self, bootstrap_peers: &[NodeId]) -> Result<()> {
        if bootstrap_peers.is_empty() {
            return Err(Error::Config("bootstrap peer list is empty".into()));
        }
        self.update_sample(bootstrap_peers);
        if self.slots.iter().any(|s| s.peer.is_none()) {
            // Only possible when the bootstrap list contained nothing but
            // our own identifier.
            return Err(Error::Config(
                "bootstrap peer list contains no other node".into(),
            ));
        }
        Ok(())
    }

    /// Initialize a node: fresh random seeds, hit counters reset, every
    /// slot holding its best-matching bootstrap peer.
    pub fn init<R: Rng + ?Sized>(
        id: NodeId,
        params: ProtocolParams,
        ranking: RankingFunction,
        bootstrap_peers: &[NodeId],
        rng: &mut R,
    ) -> Result<Self> {
        let mut node = NodeState::new(id, params, ranking, rng)?;
        node.bootstrap(bootstrap_peers)?;
        Ok(node)
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn ranking(&self) -> RankingFunction {
        self.ranking
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn slot(&self, i: usize) -> SlotView<'_> {
        let s = &self.slots[i];
        SlotView {
            seed: &s.seed,
            peer: s.peer,
            hits: s.hits,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Current view contents. Panics if called before bootstrap.
    pub fn view(&self) -> Vec<NodeId> {
        self.slots
            .iter()
            .map(|s| s.peer.expect("view read before bootstrap"))
            .collect()
    }

    pub fn slot_peers(&self) -> impl Iterator<Item = Option<NodeId>> + '_ {
        self.slots.iter().map(|s| s.peer)
    }

    pub fn slot_hits(&self) -> impl Iterator<Item = u64> + '_ {
        self.slots.iter().map(|s| s.hits)
    }

    /// Mean over slots of the number of distinct correct identifiers seen
    /// since each slot's last reset. `None` unless tracking is enabled.
    pub fn mean_seen(&self) -> Option<f64> {
        self.seen_range?;
        let total: u64 = self.slots.iter().map(|s| s.seen.as_ref().unwrap().count()).sum();
        Some(total as f64 / self.slots.len() as f64)
    }

    /// Present a batch of candidate identifiers to every slot.
    ///
    /// Semantics are those of the per-occurrence greedy loop: for each slot
    /// and each candidate occurrence in order, an occurrence equal to the
    /// slot's current peer increments the hit counter (in `Full` mode),
    /// while a strictly better-ranking candidate replaces the peer and
    /// resets the counter to 1. Own identifiers are ignored. The loop below
    /// is an order-insensitive rewrite of that recurrence: the final peer
    /// is the rank argmin of {current peer} ∪ candidates, and the final
    /// counter value is the occurrence count of whichever identifier ends
    /// up in the slot (plus its previous count if it was already there).
    pub fn update_sample(&mut self, candidates: &[NodeId]) {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        'outer: for &c in candidates {
            if c.addr() == self.id.addr() {
                continue;
            }
            for d in scratch.iter_mut() {
                if d.0 == c {
                    d.1 += 1;
                    continue 'outer;
                }
            }
            scratch.push((c, 1));
        }
        if !scratch.is_empty() {
            self.mark_seen(&scratch);
            match self.ranking {
                RankingFunction::Uniform => self.apply_uniform(&scratch),
                _ => self.apply_general(&scratch),
            }
        }
        self.scratch = scratch;
    }

    fn mark_seen(&mut self, distinct: &[(NodeId, u32)]) {
        let Some(range) = self.seen_range else { return };
        // The same candidate set is presented to every slot.
        for &(c, _) in distinct {
            if let Some(idx) = range.index(c.addr()) {
                for slot in &mut self.slots {
                    slot.seen.as_mut().unwrap().set(idx);
                }
            }
        }
    }

    /// Single-word fast path for the uniform ranking.
    fn apply_uniform(&mut self, distinct: &[(NodeId, u32)]) {
        let full = self.params.mode == Mode::Full;
        for slot in &mut self.slots {
            let current = slot.peer.map(|p| (slot.peer_rank.words()[0], p.addr()));
            let mut best: Option<(u64, NodeId, u32)> = None;
            for &(c, count) in distinct {
                if slot.peer == Some(c) {
                    if full {
                        slot.hits += u64::from(count);
                    }
                    continue;
                }
                let w = keyed_hash(&slot.seed, 32, u64::from(c.addr()));
                let key = (w, c.addr());
                if current.is_some_and(|cur| key >= cur) {
                    continue;
                }
                if best.is_none_or(|(bw, bc, _)| key < (bw, bc.addr())) {
                    best = Some((w, c, count));
                }
            }
            if let Some((_, c, count)) = best {
                slot.peer = Some(c);
                slot.peer_rank = rank(RankingFunction::Uniform, &slot.seed, c);
                slot.hits = if full { u64::from(count) } else { 1 };
            }
        }
    }

    fn apply_general(&mut self, distinct: &[(NodeId, u32)]) {
        let full = self.params.mode == Mode::Full;
        let ranking = self.ranking;
        for slot in &mut self.slots {
            let mut best: Option<(RankVector, NodeId, u32)> = None;
            for &(c, count) in distinct {
                if slot.peer == Some(c) {
                    if full {
                        slot.hits += u64::from(count);
                    }
                    continue;
                }
                let r = rank(ranking, &slot.seed, c);
                if let Some(p) = slot.peer {
                    if (r, c.addr()) >= (slot.peer_rank, p.addr()) {
                        continue;
                    }
                }
                if best.is_none_or(|(br, bc, _)| (r, c.addr()) < (br, bc.addr())) {
                    best = Some((r, c, count));
                }
            }
            if let Some((r, c, count)) = best {
                slot.peer = Some(c);
                slot.peer_rank = r;
                slot.hits = if full { u64::from(count) } else { 1 };
            }
        }
    }

    /// Pick a peer to contact. In `Full` mode: a peer with the minimal hit
    /// counter (ties broken uniformly at random), whose counter is then
    /// incremented. In `Simple` mode: a uniformly random slot's peer, with
    /// no counter change.
    pub fn select_peer<R: Rng + ?Sized>(&mut self, rng: &mut R) -> NodeId {
        match self.params.mode {
            Mode::Simple => {
                let i = rng.gen_range(0..self.slots.len());
                self.slots[i].peer.expect("select_peer before bootstrap")
            }
            Mode::Full => {
                let min = self
                    .slots
                    .iter()
                    .filter(|s| s.peer.is_some())
                    .map(|s| s.hits)
                    .min()
                    .expect("select_peer before bootstrap");
                let ties = self
                    .slots
                    .iter()
                    .filter(|s| s.peer.is_some() && s.hits == min)
                    .count();
                let pick = rng.gen_range(0..ties);
                let idx = self
                    .slots
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.peer.is_some() && s.hits == min)
                    .nth(pick)
                    .map(|(i, _)| i)
                    .unwrap();
                self.slots[idx].hits += 1;
                self.slots[idx].peer.unwrap()
            }
        }
    }

    /// Advance one tick: every `tau` ticks emit one pull and one push to
    /// independently selected peers; every `k/rho` ticks emit `k` samples
    /// in round-robin order, resetting each sampled slot's seed, then
    /// re-match all slots against the current view contents.
    pub fn on_tick<R: Rng + ?Sized>(&mut self, now: u64, rng: &mut R) -> Vec<OutMessage> {
        let mut out = Vec::new();
        if now.is_multiple_of(self.params.exchange_interval) {
            let p = self.select_peer(rng);
            out.push(OutMessage::Pull { to: p });
            let q = self.select_peer(rng);
            out.push(OutMessage::Push {
                to: q,
                peers: self.view(),
            });
        }
        if now.is_multiple_of(self.sample_interval) {
            for _ in 0..self.params.replacement_count {
                let r = self.cursor;
                let peer = self.slots[r].peer.expect("sampling before bootstrap");
                out.push(OutMessage::Sample { peer });
                let seed = Seed::generate(rng);
                let slot = &mut self.slots[r];
                slot.seed = seed;
                // The retained occupant competes under the new seed.
                slot.peer_rank = rank(self.ranking, &slot.seed, peer);
                if let Some(seen) = &mut slot.seen {
                    seen.clear();
                }
                self.cursor = (r + 1) % self.slots.len();
            }
            let view = self.view();
            self.update_sample(&view);
        }
        out
    }

    /// Serve a pull request: reply with the current view. Read-only.
    pub fn on_pull(&self, from: NodeId) -> OutMessage {
        OutMessage::Push {
            to: from,
            peers: self.view(),
        }
    }

    /// Process a received push: present the payload plus the sender.
    /// Oversized payloads are truncated to the first `v` entries.
    pub fn on_push(&mut self, from: NodeId, peers: &[NodeId]) {
        let mut buf = std::mem::take(&mut self.push_scratch);
        buf.clear();
        buf.extend_from_slice(&peers[..peers.len().min(self.params.view_size)]);
        buf.push(from);
        self.update_sample(&buf);
        self.push_scratch = buf;
    }
}


#[cfg(test)]
mod provenance_tests {
    use super::*;
    use crate::rank::rank;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_sample_is_the_argmin_of_its_window() {
        // Shadow-track, per slot, the set of identifiers presented since
        // the slot's last seed reset; every emitted sample must be the
        // rank argmin of that set under the seed that was current for the
        // window.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5a3b1e);
        let pop: Vec<NodeId> = (0..50).map(|i| NodeId::correct(i + 1)).collect();
        let me = NodeId::correct(1_000);
        let params = ProtocolParams::new(6, 1.0, 3, Mode::Full);
        let mut node = NodeState::init(me, params, RankingFunction::Uniform, &pop[..8], &mut rng)
            .unwrap();
        let v = 6usize;
        let mut shadow: Vec<Vec<NodeId>> = vec![pop[..8].to_vec(); v];

        for now in 1..=60u64 {
            // Random gossip between ticks.
            let m = rng.gen_range(1..10);
            let batch: Vec<NodeId> = (0..m).map(|_| pop[rng.gen_range(0..pop.len())]).collect();
            node.update_sample(&batch);
            for s in shadow.iter_mut() {
                s.extend_from_slice(&batch);
            }

            let seeds_before: Vec<Seed> = (0..v).map(|i| *node.slot(i).seed).collect();
            let cursor_before = node.cursor();
            let view_before = node.view();
            let out = node.on_tick(now, &mut rng);
            let samples: Vec<NodeId> = out
                .iter()
                .filter_map(|msg| match msg {
                    OutMessage::Sample { peer } => Some(*peer),
                    _ => None,
                })
                .collect();
            if samples.is_empty() {
                continue;
            }
            assert_eq!(samples.len(), 3);
            for (j, sample) in samples.iter().enumerate() {
                let slot = (cursor_before + j) % v;
                let argmin = *shadow[slot]
                    .iter()
                    .min_by_key(|p| {
                        (rank(RankingFunction::Uniform, &seeds_before[slot], **p), p.addr())
                    })
                    .unwrap();
                assert_eq!(*sample, argmin, "slot {slot} at tick {now}");
                // Window restarts; the post-reset re-match presents the
                // pre-update view to every slot.
                shadow[slot].clear();
            }
            for s in shadow.iter_mut() {
                s.extend_from_slice(&view_before);
            }
        }
    }
}
