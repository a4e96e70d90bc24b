//! Byzantine behaviors: worst-case identifier flooding with force `F`, and
//! hit-counter poisoning (advertising random correct identifiers to inflate
//! the counters of a victim's view entries).

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::node::OutMessage;
use crate::rank::NodeId;

/// Attack strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Advertise only Byzantine identifiers, as fast as the force allows.
    Flood,
    /// Advertise `advertised_correct` uniformly random correct identifiers
    /// per message, hoping to inflate hit counters of view entries.
    HitPoison { advertised_correct: usize },
}

/// Attack parameterization. `force` is the ratio between the push rate of
/// one Byzantine node and the push rate of one correct node; fractional
/// values are realized by Bernoulli rounding each tick.
#[derive(Clone, Copy, Debug)]
pub struct AttackConfig {
    pub force: f64,
    pub strategy: Strategy,
}

impl AttackConfig {
    pub fn flood(force: f64) -> Self {
        AttackConfig {
            force,
            strategy: Strategy::Flood,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.force >= 0.0) {
            return Err(Error::Config("attack force must be non-negative".into()));
        }
        if let Strategy::HitPoison { advertised_correct } = self.strategy {
            if advertised_correct == 0 {
                return Err(Error::Config(
                    "hit-poison payload size must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Which wire the attacked protocol speaks: it changes the shape of push
/// payloads and pull replies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WireFlavor {
    /// Pushes and pull replies both carry a view of `v` identifiers.
    Basalt,
    /// Pushes carry only the (unspoofable) sender identity; pull replies
    /// carry a view.
    Brahms,
}

/// The colluding Byzantine population. Stateless apart from the shared
/// simulation PRNG stream.
#[derive(Clone, Debug)]
pub struct Adversary {
    config: AttackConfig,
    flavor: WireFlavor,
    view_size: usize,
    byz: Vec<NodeId>,
    correct: Vec<NodeId>,
}

impl Adversary {
    pub fn new(
        config: AttackConfig,
        flavor: WireFlavor,
        view_size: usize,
        byz: Vec<NodeId>,
        correct: Vec<NodeId>,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Adversary {
            config,
            flavor,
            view_size,
            byz,
            correct,
        })
    }

    pub fn config(&self) -> &AttackConfig {
        &self.config
    }

    /// Attack payload: under `Flood`, `v` identifiers drawn uniformly with
    /// replacement from the Byzantine population; under `HitPoison`, the
    /// configured number of uniformly random correct identifiers.
    fn payload<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<NodeId> {
        match self.config.strategy {
            Strategy::Flood => (0..self.view_size)
                .map(|_| self.byz[rng.gen_range(0..self.byz.len())])
                .collect(),
            Strategy::HitPoison { advertised_correct } => (0..advertised_correct)
                .map(|_| self.correct[rng.gen_range(0..self.correct.len())])
                .collect(),
        }
    }

    /// Reply to a pull request.
    pub fn on_pull<R: Rng + ?Sized>(&self, from: NodeId, rng: &mut R) -> OutMessage {
        let peers = self.payload(rng);
        match self.flavor {
            WireFlavor::Basalt => OutMessage::Push { to: from, peers },
            WireFlavor::Brahms => OutMessage::PullReply { to: from, peers },
        }
    }

    /// Push messages one Byzantine node emits this tick: `floor(F)` distinct
    /// uniformly random correct targets, plus one more with probability
    /// `F - floor(F)`.
    pub fn on_tick<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<OutMessage> {
        let whole = self.config.force.floor();
        let frac = self.config.force - whole;
        let mut count = whole as usize;
        if frac > 0.0 && rng.gen_bool(frac) {
            count += 1;
        }
        count = count.min(self.correct.len());
        if count == 0 {
            return Vec::new();
        }
        index::sample(rng, self.correct.len(), count)
            .into_iter()
            .map(|i| {
                let to = self.correct[i];
                let peers = match self.flavor {
                    WireFlavor::Basalt => self.payload(rng),
                    // A Brahms push carries only the sender identity.
                    WireFlavor::Brahms => Vec::new(),
                };
                OutMessage::Push { to, peers }
            })
            .collect()
    }
}
