//! IP block dataset ingestion and attacker-power computation.
//!
//! A table maps non-overlapping CIDR blocks to an owning AS and a count of
//! currently active addresses. The attacker power of an AS is the
//! probability that the best-matching peer for a fresh seed is one of its
//! addresses, when it registers every active address it owns and `Q`
//! honest nodes sit uniformly on the remaining active address space.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rank::RankingFunction;

/// A CIDR prefix. The base address has all host bits zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cidr {
    pub base: u32,
    pub prefix_len: u8,
}

impl Cidr {
    pub fn size(&self) -> u64 {
        1u64 << (32 - u32::from(self.prefix_len))
    }

    /// One past the last address, as a u64 to avoid overflow at 0.0.0.0/0.
    pub fn end(&self) -> u64 {
        u64::from(self.base) + self.size()
    }
}

impl FromStr for Cidr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (addr, len) = s.split_once('/').ok_or("missing '/'")?;
        let prefix_len: u8 = len.parse().map_err(|_| "bad prefix length")?;
        if prefix_len > 32 {
            return Err("prefix length above 32".into());
        }
        let mut octets = [0u8; 4];
        let mut it = addr.split('.');
        for o in &mut octets {
            *o = it
                .next()
                .ok_or("too few octets")?
                .parse()
                .map_err(|_| "bad octet")?;
        }
        if it.next().is_some() {
            return Err("too many octets".into());
        }
        let base = u32::from_be_bytes(octets);
        let host_mask = (1u64 << (32 - u32::from(prefix_len))) - 1;
        if u64::from(base) & host_mask != 0 {
            return Err("host bits set in network address".into());
        }
        Ok(Cidr { base, prefix_len })
    }
}

impl std::fmt::Display for Cidr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c, d] = self.base.to_be_bytes();
        write!(f, "{a}.{b}.{c}.{d}/{}", self.prefix_len)
    }
}

/// One dataset row.
#[derive(Clone, Copy, Debug)]
pub struct IpBlock {
    pub network: Cidr,
    pub asn: u32,
    pub active_count: u64,
}

/// Ingested block table: rows sorted by base address, pairwise disjoint.
#[derive(Clone, Debug)]
pub struct IpBlockTable {
    blocks: Vec<IpBlock>,
}

pub const CSV_HEADER: &str = "network,asn,active_count";

impl IpBlockTable {
    /// Build from rows, enforcing the table invariants. `rows` carries the
    /// 1-based source row number for error reporting.
    pub fn from_rows(rows: Vec<(usize, IpBlock)>) -> Result<Self> {
        let mut rows = rows;
        rows.sort_by_key(|(_, b)| b.network.base);
        for w in rows.windows(2) {
            let (_, a) = w[0];
            let (row, b) = w[1];
            if u64::from(b.network.base) < a.network.end() {
                return Err(Error::Dataset {
                    row,
                    message: format!(
                        "network {} overlaps preceding {}",
                        b.network, a.network
                    ),
                });
            }
        }
        Ok(IpBlockTable {
            blocks: rows.into_iter().map(|(_, b)| b).collect(),
        })
    }

    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or(Error::Dataset {
                row: 0,
                message: "empty file".into(),
            })?;
        if header.trim() != CSV_HEADER {
            return Err(Error::Dataset {
                row: 0,
                message: format!("expected header `{CSV_HEADER}`, found `{header}`"),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.trim().split(',');
            let parse = |field: Option<&str>, what: &str| -> Result<String> {
                field.map(str::to_owned).ok_or(Error::Dataset {
                    row,
                    message: format!("missing {what}"),
                })
            };
            let network: Cidr = parse(fields.next(), "network")?
                .parse()
                .map_err(|e| Error::Dataset {
                    row,
                    message: format!("bad network: {e}"),
                })?;
            let asn: u32 = parse(fields.next(), "asn")?
                .parse()
                .map_err(|_| Error::Dataset {
                    row,
                    message: "bad asn".into(),
                })?;
            let active_count: u64 = parse(fields.next(), "active_count")?
                .parse()
                .map_err(|_| Error::Dataset {
                    row,
                    message: "bad active_count".into(),
                })?;
            if fields.next().is_some() {
                return Err(Error::Dataset {
                    row,
                    message: "too many fields".into(),
                });
            }
            if active_count > network.size() {
                return Err(Error::Dataset {
                    row,
                    message: format!(
                        "active_count {active_count} exceeds block size {}",
                        network.size()
                    ),
                });
            }
            rows.push((
                row,
                IpBlock {
                    network,
                    asn,
                    active_count,
                },
            ));
        }
        IpBlockTable::from_rows(rows)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        IpBlockTable::from_csv(std::io::BufReader::new(file))
    }

    pub fn to_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for b in &self.blocks {
            writeln!(w, "{},{},{}", b.network, b.asn, b.active_count)?;
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[IpBlock] {
        &self.blocks
    }

    pub fn total_active(&self) -> u64 {
        self.blocks.iter().map(|b| b.active_count).sum()
    }

    pub fn active_of(&self, asn: u32) -> u64 {
        self.blocks
            .iter()
            .filter(|b| b.asn == asn)
            .map(|b| b.active_count)
            .sum()
    }

    /// ASNs by total active addresses, largest first.
    pub fn top_asns(&self, limit: usize) -> Vec<(u32, u64)> {
        let mut totals: HashMap<u32, u64> = HashMap::new();
        for b in &self.blocks {
            *totals.entry(b.asn).or_default() += b.active_count;
        }
        let mut list: Vec<(u32, u64)> = totals.into_iter().collect();
        list.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        list.truncate(limit);
        list
    }
}

/// How to evaluate the attacker power for grouped and hierarchical
/// rankings (the uniform formula is closed-form either way).
#[derive(Clone, Copy, Debug)]
pub enum PowerMethod {
    /// Expected-occupancy approximation: a prefix counts as occupied with
    /// probability 1 - (1 - w)^Q and honest node counts enter as their
    /// expectations.
    Exact,
    /// Ground truth up to sampling error: average the exact per-placement
    /// descent probability over random placements of the honest nodes.
    MonteCarlo { trials: usize },
}

/// An address range within a single /8, with uniform active density.
#[derive(Clone, Copy, Debug)]
struct Chunk {
    start: u32,
    len: u64,
    active: f64,
    attacker: bool,
}

fn chunks_of(table: &IpBlockTable, attacker_asn: u32) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    for b in table.blocks() {
        let attacker = b.asn == attacker_asn;
        let size = b.network.size();
        if b.network.prefix_len >= 8 {
            chunks.push(Chunk {
                start: b.network.base,
                len: size,
                active: b.active_count as f64,
                attacker,
            });
        } else {
            let pieces = 1u64 << (8 - b.network.prefix_len);
            let piece_len = size / pieces;
            for i in 0..pieces {
                chunks.push(Chunk {
                    start: b.network.base + (i * piece_len) as u32,
                    len: piece_len,
                    active: b.active_count as f64 / pieces as f64,
                    attacker,
                });
            }
        }
    }
    chunks
}

/// Attacker /24 leaves grouped under /16 and /8 prefixes.
struct AttackerTree {
    eights: Vec<AttEight>,
}

struct AttEight {
    prefix: u32,
    sixteens: Vec<AttSixteen>,
}

struct AttSixteen {
    prefix: u32,
    leaves: Vec<(u32, f64)>,
}

fn attacker_tree(chunks: &[Chunk]) -> AttackerTree {
    let mut leaves: HashMap<u32, f64> = HashMap::new();
    for c in chunks.iter().filter(|c| c.attacker) {
        if c.len >= 256 {
            let m = c.len / 256;
            let share = c.active / m as f64;
            for i in 0..m {
                *leaves.entry((c.start >> 8) + i as u32).or_default() += share;
            }
        } else {
            *leaves.entry(c.start >> 8).or_default() += c.active;
        }
    }
    let mut sorted: Vec<(u32, f64)> = leaves.into_iter().collect();
    sorted.sort_unstable_by_key(|&(p, _)| p);
    let mut eights: Vec<AttEight> = Vec::new();
    for (p24, active) in sorted {
        let p16 = p24 >> 8;
        let p8 = p24 >> 16;
        if eights.last().map(|e| e.prefix) != Some(p8) {
            eights.push(AttEight {
                prefix: p8,
                sixteens: Vec::new(),
            });
        }
        let eight = eights.last_mut().unwrap();
        if eight.sixteens.last().map(|s| s.prefix) != Some(p16) {
            eight.sixteens.push(AttSixteen {
                prefix: p16,
                leaves: Vec::new(),
            });
        }
        eight.sixteens.last_mut().unwrap().leaves.push((p24, active));
    }
    AttackerTree { eights }
}

/// Number of level-`bits` groups a chunk spans, and the active share per
/// group. Chunks are /8-aligned pieces, so for bits >= 8 a chunk either
/// covers whole groups or fits inside one.
fn group_span(c: &Chunk, bits: u32) -> (u32, u64, f64) {
    let group_size = 1u64 << (32 - bits);
    if c.len >= group_size {
        let m = c.len / group_size;
        (c.start >> (32 - bits), m, c.active / m as f64)
    } else {
        (c.start >> (32 - bits), 1, c.active)
    }
}

/// Expected occupancy term for a group holding honest weight `w` (share of
/// the honest active space) under `q` honest placements.
fn occupancy(w: f64, q: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        1.0 - (1.0 - w).powf(q)
    }
}

/// Exact (expected-occupancy) hierarchical power.
fn hierarchical_power_exact(chunks: &[Chunk], tree: &AttackerTree, q: f64) -> f64 {
    let honest_total: f64 = chunks.iter().filter(|c| !c.attacker).map(|c| c.active).sum();
    if honest_total <= 0.0 {
        return 1.0;
    }

    // Honest weight per /8 and expected number of occupied /8s.
    let mut h8 = [0.0f64; 256];
    let mut by_eight: BTreeMap<u32, Vec<&Chunk>> = BTreeMap::new();
    for c in chunks.iter().filter(|c| !c.attacker) {
        h8[(c.start >> 24) as usize] += c.active;
        by_eight.entry(c.start >> 24).or_default().push(c);
    }
    let att8: Vec<u32> = tree.eights.iter().map(|e| e.prefix).collect();
    let mut n8 = att8.len() as f64;
    for (p, &a) in h8.iter().enumerate() {
        if !att8.contains(&(p as u32)) {
            n8 += occupancy(a / honest_total, q);
        }
    }

    let empty = Vec::new();
    let mut power = 0.0;
    for eight in &tree.eights {
        let local = by_eight.get(&eight.prefix).unwrap_or(&empty);
        // Honest /16-level structure within this /8.
        let att16: Vec<u32> = eight.sixteens.iter().map(|s| s.prefix).collect();
        let mut pure16 = 0.0; // expected occupied honest-only /16s from coarse chunks
        let mut map16: BTreeMap<u32, f64> = BTreeMap::new();
        for c in local {
            let (first, m, share) = group_span(c, 16);
            if c.len >= 1 << 16 {
                pure16 += m as f64 * occupancy(share / honest_total, q);
            } else {
                *map16.entry(first).or_default() += c.active;
            }
        }
        let mut n16 = att16.len() as f64 + pure16;
        for (&p16, &a) in &map16 {
            if !att16.contains(&p16) {
                n16 += occupancy(a / honest_total, q);
            }
        }

        for sixteen in &eight.sixteens {
            let att24: Vec<u32> = sixteen.leaves.iter().map(|&(p, _)| p).collect();
            let mut pure24 = 0.0;
            let mut map24: BTreeMap<u32, f64> = BTreeMap::new();
            for c in local.iter().filter(|c| c.start >> 16 == sixteen.prefix) {
                let (first, m, share) = group_span(c, 24);
                if c.len >= 1 << 8 {
                    pure24 += m as f64 * occupancy(share / honest_total, q);
                } else {
                    *map24.entry(first).or_default() += c.active;
                }
            }
            let mut n24 = att24.len() as f64 + pure24;
            for (&p24, &a) in &map24 {
                if !att24.contains(&p24) {
                    n24 += occupancy(a / honest_total, q);
                }
            }

            for &(p24, q24) in &sixteen.leaves {
                let honest_here = map24.get(&p24).copied().unwrap_or(0.0);
                let expected_honest = q * honest_here / honest_total;
                power += (1.0 / n8) * (1.0 / n16) * (1.0 / n24) * (q24 / (q24 + expected_honest));
            }
        }
    }
    power
}

/// Exact (expected-occupancy) grouped power at the given prefix level.
fn grouped_power_exact(chunks: &[Chunk], bits: u32, q: f64) -> f64 {
    let honest_total: f64 = chunks.iter().filter(|c| !c.attacker).map(|c| c.active).sum();
    if honest_total <= 0.0 {
        return 1.0;
    }
    // Attacker groups with their active counts.
    let mut att: BTreeMap<u32, f64> = BTreeMap::new();
    for c in chunks.iter().filter(|c| c.attacker) {
        let (first, m, share) = group_span(c, bits);
        for i in 0..m {
            *att.entry(first + i as u32).or_default() += share;
        }
    }
    // Honest occupancy and in-group weights.
    let mut pure = 0.0;
    let mut map: BTreeMap<u32, f64> = BTreeMap::new();
    let group_size = 1u64 << (32 - bits);
    for c in chunks.iter().filter(|c| !c.attacker) {
        let (first, m, share) = group_span(c, bits);
        if c.len >= group_size {
            pure += m as f64 * occupancy(share / honest_total, q);
        } else {
            *map.entry(first).or_default() += c.active;
        }
    }
    let mut n = att.len() as f64 + pure;
    for (&g, &a) in &map {
        if !att.contains_key(&g) {
            n += occupancy(a / honest_total, q);
        }
    }
    let mut power = 0.0;
    for (&g, &q_g) in &att {
        let honest_here = map.get(&g).copied().unwrap_or(0.0);
        let expected_honest = q * honest_here / honest_total;
        power += (1.0 / n) * (q_g / (q_g + expected_honest));
    }
    power
}

/// One random placement of `q` honest nodes on the honest active space,
/// summarized at every prefix level.
struct Placement {
    /// Sorted, deduplicated prefixes at /8, /16, /24.
    h8: Vec<u32>,
    h16: Vec<u32>,
    h24: Vec<u32>,
    /// Sorted (prefix24, honest node count).
    h24_counts: Vec<(u32, u32)>,
    /// Sorted per-level prefixes with duplicates, for in-group counting.
    all16: Vec<u32>,
    all8: Vec<u32>,
}

fn place_honest<R: Rng + ?Sized>(chunks: &[Chunk], q: usize, rng: &mut R) -> Placement {
    let honest: Vec<&Chunk> = chunks.iter().filter(|c| !c.attacker && c.active > 0.0).collect();
    let mut cumulative = Vec::with_capacity(honest.len());
    let mut total = 0.0;
    for c in &honest {
        total += c.active;
        cumulative.push(total);
    }
    let mut addrs: Vec<u32> = (0..q)
        .map(|_| {
            let x = rng.gen_range(0.0..total);
            let i = cumulative.partition_point(|&c| c <= x);
            let c = honest[i.min(honest.len() - 1)];
            c.start + rng.gen_range(0..c.len) as u32
        })
        .collect();
    addrs.sort_unstable();
    let mut h24_counts: Vec<(u32, u32)> = Vec::new();
    for &a in &addrs {
        let p = a >> 8;
        match h24_counts.last_mut() {
            Some((last, n)) if *last == p => *n += 1,
            _ => h24_counts.push((p, 1)),
        }
    }
    let dedup = |shift: u32| -> Vec<u32> {
        let mut v: Vec<u32> = addrs.iter().map(|&a| a >> shift).collect();
        v.dedup();
        v
    };
    Placement {
        h8: dedup(24),
        h16: dedup(16),
        h24: dedup(8),
        h24_counts,
        all16: addrs.iter().map(|&a| a >> 16).collect(),
        all8: addrs.iter().map(|&a| a >> 24).collect(),
    }
}

/// Count of sorted `haystack` entries in `[lo, hi)`.
fn range_count(haystack: &[u32], lo: u32, hi: u64) -> usize {
    let a = haystack.partition_point(|&x| u64::from(x) < u64::from(lo));
    let b = haystack.partition_point(|&x| u64::from(x) < hi);
    b - a
}

fn hierarchical_power_placement(tree: &AttackerTree, p: &Placement) -> f64 {
    let att8: Vec<u32> = tree.eights.iter().map(|e| e.prefix).collect();
    let extra8 = p.h8.iter().filter(|x| !att8.contains(x)).count();
    let n8 = (att8.len() + extra8) as f64;
    let mut power = 0.0;
    for eight in &tree.eights {
        let att16: Vec<u32> = eight.sixteens.iter().map(|s| s.prefix).collect();
        let lo16 = eight.prefix << 8;
        let in16 = range_count(&p.h16, lo16, u64::from(lo16) + 256);
        let shared16 = att16
            .iter()
            .filter(|&&s| p.h16.binary_search(&s).is_ok())
            .count();
        let n16 = (att16.len() + in16 - shared16) as f64;
        for sixteen in &eight.sixteens {
            let lo24 = sixteen.prefix << 8;
            let in24 = range_count(&p.h24, lo24, u64::from(lo24) + 256);
            let att24: Vec<u32> = sixteen.leaves.iter().map(|&(x, _)| x).collect();
            let shared24 = att24
                .iter()
                .filter(|&&s| p.h24.binary_search(&s).is_ok())
                .count();
            let n24 = (att24.len() + in24 - shared24) as f64;
            for &(p24, q24) in &sixteen.leaves {
                let honest_here = match p.h24_counts.binary_search_by_key(&p24, |&(x, _)| x) {
                    Ok(i) => f64::from(p.h24_counts[i].1),
                    Err(_) => 0.0,
                };
                power += (1.0 / n8) * (1.0 / n16) * (1.0 / n24) * (q24 / (q24 + honest_here));
            }
        }
    }
    power
}

fn grouped_power_placement(chunks: &[Chunk], bits: u32, p: &Placement) -> f64 {
    let mut att: BTreeMap<u32, f64> = BTreeMap::new();
    for c in chunks.iter().filter(|c| c.attacker) {
        let (first, m, share) = group_span(c, bits);
        for i in 0..m {
            *att.entry(first + i as u32).or_default() += share;
        }
    }
    let (dedup, all): (&[u32], &[u32]) = match bits {
        8 => (&p.h8, &p.all8),
        16 => (&p.h16, &p.all16),
        24 => (&p.h24, &[]),
        _ => unreachable!("grouping levels are 8, 16, 24"),
    };
    let extra = dedup.iter().filter(|x| !att.contains_key(x)).count();
    let n = (att.len() + extra) as f64;
    let mut power = 0.0;
    for (&g, &q_g) in &att {
        let honest_here = if bits == 24 {
            match p.h24_counts.binary_search_by_key(&g, |&(x, _)| x) {
                Ok(i) => f64::from(p.h24_counts[i].1),
                Err(_) => 0.0,
            }
        } else {
            let lo = all.partition_point(|&x| x < g);
            let hi = all.partition_point(|&x| x <= g);
            (hi - lo) as f64
        };
        power += (1.0 / n) * (q_g / (q_g + honest_here));
    }
    power
}

/// Probability that the best-matching peer sample is an attacker address.
///
/// The attacker registers all its active addresses; `honest_count` honest
/// nodes are spread uniformly over the remaining active address space.
pub fn attacker_power<R: Rng + ?Sized>(
    table: &IpBlockTable,
    attacker_asn: u32,
    honest_count: usize,
    ranking: RankingFunction,
    method: PowerMethod,
    rng: &mut R,
) -> Result<f64> {
    let q_active = table.active_of(attacker_asn);
    if q_active == 0 {
        return Err(Error::Domain(format!(
            "attacker AS {attacker_asn} owns no active addresses in the table"
        )));
    }
    let honest_active = table.total_active() - q_active;
    if honest_active == 0 {
        return Err(Error::Domain("empty honest address space".into()));
    }
    if honest_count == 0 {
        return Err(Error::Domain("need at least one honest node".into()));
    }

    // Uniform sampling does not depend on the placement at all.
    if ranking == RankingFunction::Uniform {
        return Ok(q_active as f64 / (q_active as f64 + honest_count as f64));
    }

    let chunks = chunks_of(table, attacker_asn);
    let q = honest_count as f64;
    match method {
        PowerMethod::Exact => Ok(match ranking {
            RankingFunction::Uniform => unreachable!(),
            RankingFunction::Grouped(g) => {
                grouped_power_exact(&chunks, u32::from(g.bits()), q)
            }
            RankingFunction::Hierarchical => {
                let tree = attacker_tree(&chunks);
                hierarchical_power_exact(&chunks, &tree, q)
            }
        }),
        PowerMethod::MonteCarlo { trials } => {
            if trials == 0 {
                return Err(Error::Domain("need at least one trial".into()));
            }
            let tree = attacker_tree(&chunks);
            let mut sum = 0.0;
            for _ in 0..trials {
                let placement = place_honest(&chunks, honest_count, rng);
                sum += match ranking {
                    RankingFunction::Uniform => unreachable!(),
                    RankingFunction::Grouped(g) => {
                        grouped_power_placement(&chunks, u32::from(g.bits()), &placement)
                    }
                    RankingFunction::Hierarchical => {
                        hierarchical_power_placement(&tree, &placement)
                    }
                };
            }
            Ok(sum / trials as f64)
        }
    }
}
