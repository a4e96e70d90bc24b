//! Deterministic synthetic IPv4 block table with the shape of a
//! contemporaneous GeoLite2-style snapshot: a dominant ISP holding on the
//! order of 1.06e8 active addresses across a few thousand blocks in a few
//! dozen /8s, a small tier of densely active (eyeball) /8s, and a thin
//! floor of activity across the remaining address plane.
//!
//! The real snapshot the published attacker-power table was computed from
//! is not redistributable. The tier weights here are calibrated so that
//! the hierarchical power of the dominant ISP lands in the published
//! bands for 100 / 1000 / 10000 honest nodes; absolute totals are not
//! faithful to any particular snapshot, and reproductions on this table
//! carry a stated dataset-vintage tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Cidr, IpBlock, IpBlockTable};

/// ASN of the dominant ISP in the generated table.
pub const ATTACKER_ASN: u32 = 64500;

/// Number of /8 prefixes the dominant ISP is present in.
const ATTACKER_EIGHTS: usize = 26;
/// /16s the attacker owns inside each of its /8s.
const ATTACKER_SIXTEENS: u32 = 200;
/// Mean active addresses per attacker /16 (totals ~1.06e8).
const ATTACKER_SIXTEEN_ACTIVE: f64 = 20_400.0;
/// Densely active /8s holding the bulk of the honest space.
const HEAVY_EIGHTS: usize = 18;
/// Mean active addresses per heavy /8.
const HEAVY_EIGHT_ACTIVE: f64 = 11_200_000.0;
/// Mean active addresses per lightly used /8 (the floor tier).
const LIGHT_EIGHT_ACTIVE: f64 = 138_000.0;

/// Build the synthetic table. Deterministic in `rng_seed`.
pub fn synthetic_table(rng_seed: u64) -> IpBlockTable {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rows: Vec<(usize, IpBlock)> = Vec::new();
    let push = |rows: &mut Vec<(usize, IpBlock)>, network: Cidr, asn: u32, active: f64| {
        let active = (active.max(0.0) as u64).min(network.size());
        rows.push((
            rows.len() + 1,
            IpBlock {
                network,
                asn,
                active_count: active,
            },
        ));
    };

    // Usable /8s: 1..=223 except loopback and the private 10/8.
    let eights: Vec<u32> = (1u32..=223).filter(|&p| p != 10 && p != 127).collect();

    // Tier assignment: the attacker takes every eighth /8, the heavy
    // honest tier sits in between, everything else is floor.
    let attacker_eights: Vec<u32> = eights.iter().copied().step_by(8).take(ATTACKER_EIGHTS).collect();
    let heavy_eights: Vec<u32> = eights
        .iter()
        .copied()
        .filter(|p| !attacker_eights.contains(p))
        .skip(2)
        .step_by(10)
        .take(HEAVY_EIGHTS)
        .collect();

    let mut asn_counter = 1_000u32;
    for &p8 in &eights {
        let base8 = p8 << 24;
        if attacker_eights.contains(&p8) {
            // Attacker-owned run of /16s, plus a light honest remainder
            // in the free /16s.
            for s in 0..ATTACKER_SIXTEENS {
                let net = Cidr {
                    base: base8 | (s << 16),
                    prefix_len: 16,
                };
                push(
                    &mut rows,
                    net,
                    ATTACKER_ASN,
                    ATTACKER_SIXTEEN_ACTIVE * rng.gen_range(0.7..1.3),
                );
            }
            asn_counter += 1;
            for t in 0..8u32 {
                let net = Cidr {
                    base: base8 | ((ATTACKER_SIXTEENS + t * 7) << 16),
                    prefix_len: 16,
                };
                push(
                    &mut rows,
                    net,
                    asn_counter,
                    LIGHT_EIGHT_ACTIVE / 8.0 * rng.gen_range(0.5..1.5),
                );
            }
        } else if heavy_eights.contains(&p8) {
            // Dense eyeball space: sixteen /12s owned by regional ASes.
            for s in 0..16u32 {
                asn_counter += 1;
                let net = Cidr {
                    base: base8 | (s << 20),
                    prefix_len: 12,
                };
                push(
                    &mut rows,
                    net,
                    asn_counter,
                    HEAVY_EIGHT_ACTIVE / 16.0 * rng.gen_range(0.6..1.4),
                );
            }
        } else {
            // Floor tier: a few scattered /16s with modest density, and
            // occasionally some sub-/24 leaf blocks for table realism.
            asn_counter += 1;
            for t in 0..8u32 {
                let s = t * 31 % 256;
                let net = Cidr {
                    base: base8 | (s << 16),
                    prefix_len: 16,
                };
                push(
                    &mut rows,
                    net,
                    asn_counter,
                    LIGHT_EIGHT_ACTIVE / 8.0 * rng.gen_range(0.5..1.5),
                );
            }
            if rng.gen_bool(0.1) {
                asn_counter += 1;
                let net = Cidr {
                    base: base8 | (9 << 16) | (1 << 8) | 64,
                    prefix_len: 26,
                };
                push(&mut rows, net, asn_counter, rng.gen_range(8.0..60.0));
            }
        }
    }

    IpBlockTable::from_rows(rows).expect("generated rows are disjoint by construction")
}
