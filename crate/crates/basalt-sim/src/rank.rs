//! Node identifiers, per-slot seeds and the ranking functions that define
//! the implicit target graph.
//!
//! A ranking function maps a node identifier to a lexicographically ordered
//! vector of 64-bit hash words under a 256-bit seed. The global argmin of
//! the rank over all identifiers is the slot's target neighbor; because the
//! seed is random, nobody (including the node itself) can predict or steer
//! the target.

use std::fmt;

use rand::Rng;

/// Whether a simulated node follows the protocol or attacks it.
///
/// Simulation metadata only: protocol logic never reads this field, it is
/// used by the simulator and for metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Correct,
    Byzantine,
}

/// An IPv4-address-valued node identity.
///
/// Equality, ordering and hashing are defined on the address alone; the
/// role tags the identity for measurement purposes and is ignored in all
/// comparisons. Addresses are unique within a simulation (no spoofing).
#[derive(Clone, Copy, Debug)]
pub struct NodeId {
    addr: u32,
    role: Role,
}

impl NodeId {
    pub fn new(addr: u32, role: Role) -> Self {
        NodeId { addr, role }
    }

    pub fn correct(addr: u32) -> Self {
        NodeId::new(addr, Role::Correct)
    }

    pub fn byzantine(addr: u32) -> Self {
        NodeId::new(addr, Role::Byzantine)
    }

    pub fn addr(&self) -> u32 {
        self.addr
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_byzantine(&self) -> bool {
        self.role == Role::Byzantine
    }

    /// The `bits` most significant bits of the address, right-aligned.
    pub fn prefix(&self, bits: u8) -> u32 {
        debug_assert!((1..=32).contains(&bits));
        self.addr >> (32 - u32::from(bits))
    }
}

impl PartialEq for NodeId {
    fn eq(&self, other: &Self) -> bool {
        self.addr == other.addr
    }
}

impl Eq for NodeId {}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.addr.cmp(&other.addr)
    }
}

impl std::hash::Hash for NodeId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.addr.hash(state);
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.addr.to_be_bytes();
        write!(f, "{a}.{b}.{c}.{d}")
    }
}

const MIX_A: u64 = 0xbf58_476d_1ce4_e5b9;
const MIX_B: u64 = 0x94d0_49bb_1331_11eb;
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Full-avalanche 64-bit finalizer (splitmix64).
#[inline(always)]
fn mix(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(MIX_A);
    x ^= x >> 27;
    x = x.wrapping_mul(MIX_B);
    x ^= x >> 31;
    x
}

/// A 256-bit ranking seed, sampled uniformly by the simulation PRNG.
///
/// The two derived subkey words are a pure function of the seed words and
/// exist only to shorten the per-candidate hashing chain; identity is the
/// seed words.
#[derive(Clone, Copy, Debug)]
pub struct Seed {
    words: [u64; 4],
    key: [u64; 2],
}

impl Seed {
    pub fn from_words(words: [u64; 4]) -> Self {
        let key = [
            mix(words[0].wrapping_add(GOLDEN) ^ mix(words[1])),
            mix(words[2].wrapping_add(GOLDEN) ^ mix(words[3])),
        ];
        Seed { words, key }
    }

    /// Sample a fresh uniform seed from the given deterministic PRNG.
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Seed::from_words([rng.gen(), rng.gen(), rng.gen(), rng.gen()])
    }

    pub fn words(&self) -> [u64; 4] {
        self.words
    }
}

impl PartialEq for Seed {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl Eq for Seed {}

/// Keyed 64-bit hash of `(seed, domain, operand)`.
///
/// The construction is three chained splitmix64 finalizers over the seed
/// subkeys, the operand and a domain-separation byte (the prefix length in
/// bits of the hashed operand). It is fixed: golden outputs in tests depend
/// on these exact constants, so the function must never change.
#[inline(always)]
pub fn keyed_hash(seed: &Seed, domain: u8, operand: u64) -> u64 {
    let x = mix(operand ^ seed.key[0] ^ (u64::from(domain) << 56));
    mix(mix(x ^ seed.key[1]).wrapping_add(GOLDEN))
}

/// A lexicographically ordered vector of 1 to 4 hash words.
///
/// Unused trailing words are zero so that the derived ordering compares
/// same-length vectors lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RankVector {
    words: [u64; 4],
    len: u8,
}

impl RankVector {
    fn new(words: [u64; 4], len: u8) -> Self {
        debug_assert!((1..=4).contains(&len));
        RankVector { words, len }
    }

    pub fn words(&self) -> &[u64] {
        &self.words[..usize::from(self.len)]
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Maps an address to the group identifier used by grouped ranking.
///
/// Shipped implementations extract address prefixes; other extractors
/// (e.g. a country code lookup) can be plugged in through this trait.
pub trait GroupExtractor {
    /// Group identifier of the address.
    fn group(&self, addr: u32) -> u64;
    /// Domain-separation byte mixed into the group-level hash word.
    fn domain_tag(&self) -> u8;
}

/// Groups addresses by their `bits`-long prefix (8, 16 or 24).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrefixGroup {
    bits: u8,
}

impl PrefixGroup {
    pub fn new(bits: u8) -> Option<Self> {
        matches!(bits, 8 | 16 | 24).then_some(PrefixGroup { bits })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }
}

impl GroupExtractor for PrefixGroup {
    fn group(&self, addr: u32) -> u64 {
        u64::from(addr >> (32 - u32::from(self.bits)))
    }

    fn domain_tag(&self) -> u8 {
        self.bits
    }
}

/// The three ranking functions.
///
/// All are pure in `(seed, identifier)`:
/// - `Uniform`: a single hash word over the full address; every identifier
///   is equally likely to produce the minimum.
/// - `Grouped`: first a word over the group identifier, then a word over
///   the address, sampling uniformly among occupied groups and then
///   uniformly within the chosen group.
/// - `Hierarchical`: four words over the /8, /16 and /24 prefixes and the
///   full address, descending the address hierarchy uniformly at each
///   level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankingFunction {
    Uniform,
    Grouped(PrefixGroup),
    Hierarchical,
}

impl RankingFunction {
    /// Number of words in the rank vectors this function produces.
    pub fn width(&self) -> usize {
        match self {
            RankingFunction::Uniform => 1,
            RankingFunction::Grouped(_) => 2,
            RankingFunction::Hierarchical => 4,
        }
    }
}

/// Domain byte for the full-address word.
const ADDR_DOMAIN: u8 = 32;

/// Rank of `id` under `rf` and `seed`.
pub fn rank(rf: RankingFunction, seed: &Seed, id: NodeId) -> RankVector {
    let addr = u64::from(id.addr());
    match rf {
        RankingFunction::Uniform => {
            RankVector::new([keyed_hash(seed, ADDR_DOMAIN, addr), 0, 0, 0], 1)
        }
        RankingFunction::Grouped(g) => rank_grouped(seed, &g, id),
        RankingFunction::Hierarchical => RankVector::new(
            [
                keyed_hash(seed, 8, u64::from(id.prefix(8))),
                keyed_hash(seed, 16, u64::from(id.prefix(16))),
                keyed_hash(seed, 24, u64::from(id.prefix(24))),
                keyed_hash(seed, ADDR_DOMAIN, addr),
            ],
            4,
        ),
    }
}

/// Two-level grouped rank with a pluggable group extractor.
pub fn rank_grouped<E: GroupExtractor>(seed: &Seed, extractor: &E, id: NodeId) -> RankVector {
    RankVector::new(
        [
            keyed_hash(seed, extractor.domain_tag(), extractor.group(id.addr())),
            keyed_hash(seed, ADDR_DOMAIN, u64::from(id.addr())),
            0,
            0,
        ],
        2,
    )
}

/// True iff `p` better matches `seed` than `q`: strictly smaller rank, with
/// exact rank collisions broken by numeric identifier order. This makes
/// `better` a strict total order for any fixed `(rf, seed)`.
pub fn better(rf: RankingFunction, seed: &Seed, p: NodeId, q: NodeId) -> bool {
    (rank(rf, seed, p), p.addr()) < (rank(rf, seed, q), q.addr())
}
