//! Brahms baseline: view mixing from push/pull buffers plus min-wise
//! samplers, with the periodic round-robin sampler reset added so the
//! algorithm keeps producing fresh samples.
//!
//! Rates are normalized to one push and one pull request per exchange
//! interval so that both compared algorithms have the same communication
//! cost (a pull reply carries exactly `v` identifiers in both).

use rand::Rng;

use crate::error::{Error, Result};
use crate::node::OutMessage;
use crate::rank::{rank, NodeId, RankVector, RankingFunction, Seed};
use crate::seen::{CorrectRange, SeenSet};

/// Brahms parameters: the shared schedule knobs plus the view mix weights.
///
/// The view is recomposed each round from `alpha*v` pushed identifiers,
/// `beta*v` pulled identifiers and `gamma*v` sampler outputs. A round whose
/// push inflow exceeds `push_limit` leaves the view untouched.
#[derive(Clone, Copy, Debug)]
pub struct BrahmsParams {
    pub view_size: usize,
    pub exchange_interval: u64,
    pub sampling_rate: f64,
    pub replacement_count: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Defaults to the push segment size `alpha*v` when `None`.
    pub push_limit: Option<usize>,
}

impl BrahmsParams {
    pub fn new(view_size: usize, sampling_rate: f64, replacement_count: usize) -> Self {
        BrahmsParams {
            view_size,
            exchange_interval: 1,
            sampling_rate,
            replacement_count,
            alpha: 0.45,
            beta: 0.45,
            gamma: 0.10,
            push_limit: None,
        }
    }

    /// Segment sizes `(alpha*v, beta*v, gamma*v)`; the sampler segment
    /// absorbs the rounding remainder so the three always sum to `v`.
    pub fn segments(&self) -> (usize, usize, usize) {
        let a = (self.alpha * self.view_size as f64).floor() as usize;
        let b = (self.beta * self.view_size as f64).floor() as usize;
        (a, b, self.view_size - a - b)
    }

    pub fn effective_push_limit(&self) -> usize {
        self.push_limit.unwrap_or_else(|| self.segments().0)
    }

    pub fn sample_interval(&self) -> Result<u64> {
        let k = self.replacement_count as f64;
        let interval = k / self.sampling_rate;
        let ticks = interval.round();
        if (interval - ticks).abs() > 1e-9 || ticks < 1.0 {
            return Err(Error::Config(format!(
                "k/rho = {interval} is not a positive whole number of ticks"
            )));
        }
        Ok(ticks as u64)
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
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.gamma > 0.0) {
            return Err(Error::Config("mix weights must all be positive".into()));
        }
        if (self.alpha + self.beta + self.gamma - 1.0).abs() > 1e-9 {
            return Err(Error::Config("mix weights must sum to 1".into()));
        }
        let (a, b, g) = self.segments();
        if a == 0 || b == 0 || g == 0 {
            return Err(Error::Config(format!(
                "view size {} too small for mix segments ({a}, {b}, {g})",
                self.view_size
            )));
        }
        self.sample_interval().map(|_| ())
    }
}

/// Min-wise sampler: retains the identifier minimizing a uniform seeded
/// hash over everything offered since the sampler's last reset.
#[derive(Clone, Debug)]
struct Sampler {
    seed: Seed,
    current: Option<(NodeId, RankVector)>,
    seen: Option<SeenSet>,
}

impl Sampler {
    fn new<R: Rng + ?Sized>(rng: &mut R, tracking: Option<CorrectRange>) -> Self {
        Sampler {
            seed: Seed::generate(rng),
            current: None,
            seen: tracking.map(|r| SeenSet::new(r.len)),
        }
    }

    #[inline]
    fn offer(&mut self, id: NodeId) {
        let r = rank(RankingFunction::Uniform, &self.seed, id);
        match &self.current {
            Some((cur, cur_rank)) if (r, id.addr()) >= (*cur_rank, cur.addr()) => {}
            _ => self.current = Some((id, r)),
        }
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.seed = Seed::generate(rng);
        self.current = None;
        if let Some(seen) = &mut self.seen {
            seen.clear();
        }
    }
}

/// State of one Brahms node.
#[derive(Clone, Debug)]
pub struct BrahmsState {
    id: NodeId,
    params: BrahmsParams,
    view: Vec<NodeId>,
    samplers: Vec<Sampler>,
    cursor: usize,
    sample_interval: u64,
    push_buf: Vec<NodeId>,
    pull_buf: Vec<NodeId>,
    pull_replies: usize,
    seen_range: Option<CorrectRange>,
}

impl BrahmsState {
    /// Initialize from a bootstrap list: the view is sampled uniformly
    /// (with replacement) from the bootstrap peers and every sampler is
    /// offered the full list.
    pub fn init<R: Rng + ?Sized>(
        id: NodeId,
        params: BrahmsParams,
        bootstrap_peers: &[NodeId],
        tracking: Option<CorrectRange>,
        rng: &mut R,
    ) -> Result<Self> {
        params.validate()?;
        let sample_interval = params.sample_interval()?;
        let peers: Vec<NodeId> = bootstrap_peers
            .iter()
            .copied()
            .filter(|p| p.addr() != id.addr())
            .collect();
        if peers.is_empty() {
            return Err(Error::Config("bootstrap peer list is empty".into()));
        }
        let view = (0..params.view_size)
            .map(|_| peers[rng.gen_range(0..peers.len())])
            .collect();
        let mut samplers: Vec<Sampler> = (0..params.view_size)
            .map(|_| Sampler::new(rng, tracking))
            .collect();
        for s in &mut samplers {
            for &p in &peers {
                s.offer(p);
            }
        }
        let mut state = BrahmsState {
            id,
            params,
            view,
            samplers,
            cursor: 0,
            sample_interval,
            push_buf: Vec::new(),
            pull_buf: Vec::new(),
            pull_replies: 0,
            seen_range: tracking,
        };
        if tracking.is_some() {
            state.mark_seen(&peers);
        }
        Ok(state)
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn params(&self) -> &BrahmsParams {
        &self.params
    }

    pub fn view(&self) -> &[NodeId] {
        &self.view
    }

    /// Identifier currently retained by sampler `i`, if any.
    pub fn sampler_element(&self, i: usize) -> Option<NodeId> {
        self.samplers[i].current.map(|(id, _)| id)
    }

    pub fn sampler_count(&self) -> usize {
        self.samplers.len()
    }

    /// Mean over samplers of distinct correct identifiers seen since each
    /// sampler's last reset.
    pub fn mean_seen(&self) -> Option<f64> {
        self.seen_range?;
        let total: u64 = self
            .samplers
            .iter()
            .map(|s| s.seen.as_ref().unwrap().count())
            .sum();
        Some(total as f64 / self.samplers.len() as f64)
    }

    /// Buffer the sender of a received push.
    pub fn receive_push(&mut self, from: NodeId) {
        if from.addr() != self.id.addr() {
            self.push_buf.push(from);
        }
    }

    /// Buffer a received pull reply (truncated to `v` identifiers).
    pub fn receive_pull_reply(&mut self, peers: &[NodeId]) {
        self.pull_replies += 1;
        self.pull_buf.extend(
            peers
                .iter()
                .take(self.params.view_size)
                .copied()
                .filter(|p| p.addr() != self.id.addr()),
        );
    }

    /// Serve a pull request: reply with the current view.
    pub fn on_pull(&self, from: NodeId) -> OutMessage {
        OutMessage::PullReply {
            to: from,
            peers: self.view.clone(),
        }
    }

    fn mark_seen(&mut self, ids: &[NodeId]) {
        let Some(range) = self.seen_range else { return };
        for &id in ids {
            if let Some(idx) = range.index(id.addr()) {
                for s in &mut self.samplers {
                    s.seen.as_mut().unwrap().set(idx);
                }
            }
        }
    }

    /// Overwrite up to `quota` uniformly chosen positions of the view
    /// segment `[start, end)` with distinct buffered identifiers.
    fn fill_segment<R: Rng + ?Sized>(
        &mut self,
        start: usize,
        end: usize,
        quota: usize,
        buffer: &[NodeId],
        rng: &mut R,
    ) {
        let take = quota.min(buffer.len()).min(end - start);
        if take == 0 {
            return;
        }
        let picks = rand::seq::index::sample(rng, buffer.len(), take);
        let slots = rand::seq::index::sample(rng, end - start, take);
        for (slot, pick) in slots.into_iter().zip(picks) {
            self.view[start + slot] = buffer[pick];
        }
    }

    /// One round: offer all buffered identifiers to every sampler, then
    /// recompose the view segment-wise (skipped entirely when the push
    /// inflow exceeds the push limit), run the sampling schedule, and emit
    /// one push of our own identifier and one pull request.
    pub fn round<R: Rng + ?Sized>(&mut self, now: u64, rng: &mut R) -> Vec<OutMessage> {
        let mut out = Vec::new();
        if now.is_multiple_of(self.params.exchange_interval) {
            let pushes = std::mem::take(&mut self.push_buf);
            let pulls = std::mem::take(&mut self.pull_buf);
            let replies = std::mem::take(&mut self.pull_replies);

            // Samplers are always fed, even in flooded rounds.
            for &id in pushes.iter().chain(pulls.iter()) {
                for s in &mut self.samplers {
                    s.offer(id);
                }
            }
            self.mark_seen(&pushes);
            self.mark_seen(&pulls);

            if pushes.len() <= self.params.effective_push_limit() {
                let (a, b, _) = self.params.segments();
                // Each push contributes one identifier and each pull reply
                // one draw from its payload, keeping old entries for
                // unfilled positions: a sparse round must not be amplified
                // into a whole segment, and a single replier must not
                // rewrite the entire pull segment. The sampler segment
                // always refreshes.
                self.fill_segment(0, a, pushes.len(), &pushes, rng);
                self.fill_segment(a, a + b, replies, &pulls, rng);
                for i in (a + b)..self.view.len() {
                    let s = rng.gen_range(0..self.samplers.len());
                    if let Some((id, _)) = self.samplers[s].current {
                        self.view[i] = id;
                    }
                }
            }
        }

        if now.is_multiple_of(self.sample_interval) {
            for _ in 0..self.params.replacement_count {
                let r = self.cursor;
                if let Some((id, _)) = self.samplers[r].current {
                    out.push(OutMessage::Sample { peer: id });
                }
                self.samplers[r].reset(rng);
                self.cursor = (r + 1) % self.samplers.len();
            }
        }

        if now.is_multiple_of(self.params.exchange_interval) {
            let pull_to = self.view[rng.gen_range(0..self.view.len())];
            out.push(OutMessage::Pull { to: pull_to });
            let push_to = self.view[rng.gen_range(0..self.view.len())];
            out.push(OutMessage::Push {
                to: push_to,
                peers: Vec::new(),
            });
        }
        out
    }
}
