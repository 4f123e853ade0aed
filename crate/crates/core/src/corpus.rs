//! The standard seed corpus: stage approximations engineered so that every
//! desk-scale check resolves below the evaluation horizon. Each limit
//! sequence carries several early one bits (so deviant families have
//! multiple distinct members), a late one bit (so truncation deviants are
//! decidable), and at least one up-then-down flip (so stage replay is
//! exercised); change stages sit just above their bit positions to keep
//! stabilization stages small.

use crate::streams::Delta02Script;
use alloc::sync::Arc;
use alloc::vec::Vec;

fn ones(depth: usize, positions: &[usize], flips: &[(usize, usize, usize)]) -> Arc<Delta02Script> {
    let mut triples: Vec<(usize, usize, bool)> = positions
        .iter()
        .map(|&p| (p, p + 1, true))
        .collect();
    for &(bit, up, down) in flips {
        triples.push((bit, up, true));
        triples.push((bit, down, false));
    }
    triples.sort();
    Arc::new(Delta02Script::from_changes(depth, &triples).expect("corpus script is well-formed"))
}

/// The two-change example approximation: bit 0 flips at stage 1, bit 1 at
/// stage 2, so the stage sets run {}, {0}, {0,1}, {0,1}, ...
pub fn example_script() -> Arc<Delta02Script> {
    Arc::new(
        Delta02Script::from_changes(8, &[(0, 1, true), (1, 2, true)])
            .expect("example script is well-formed"),
    )
}

/// Seed scripts for the rank-one constructions (depth 64). Last one bits sit
/// at 17..21 so that every deviant image separates from the limit image well
/// inside a 2048-bit horizon, even after two product doublings.
pub fn rank1_scripts() -> Vec<Arc<Delta02Script>> {
    alloc::vec![
        ones(64, &[1, 3, 6, 10, 18], &[(13, 14, 17)]),
        ones(64, &[0, 2, 5, 9, 19], &[(7, 8, 11)]),
        ones(64, &[2, 3, 7, 12, 20], &[(5, 6, 9)]),
        ones(64, &[1, 4, 8, 13, 17], &[(2, 3, 6)]),
        ones(64, &[0, 1, 5, 11, 21], &[(15, 16, 19)]),
    ]
}

/// The master approximation for dynamic joins and the transfinite driver
/// (depth 4096). Its component restrictions along the interleaving index
/// sets, and its even/odd splits to depth three, all carry early and late
/// one bits.
pub fn master_script() -> Arc<Delta02Script> {
    let positions: &[usize] = &[
        // component 0 (even positions): bits 1, 2, 3, 4, 20
        2, 4, 6, 8, 40,
        // component 1 (1 mod 4): bits 1, 2, 3, 18
        5, 9, 13, 73,
        // component 2 (3 mod 8): bits 1, 2, 4
        11, 19, 35,
        // component 3 (7 mod 16): bits 1, 2, 4
        23, 39, 71,
        // components 4..7: bits 1, 2 or just 1
        47, 79, 95, 159, 191, 383,
        // components 8..12: one bit each so all-zero inputs deviate
        767, 1535, 3071, 2047, 4095,
    ];
    ones(4096, positions, &[(3, 4, 12), (10, 11, 14)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::component_script;

    #[test]
    fn corpus_limits_have_spread_ones() {
        for script in rank1_scripts() {
            let limit = script.limit_prefix(script.depth()).unwrap();
            let early = limit[..16].iter().filter(|&&b| b).count();
            let late = limit[16..].iter().filter(|&&b| b).count();
            assert!(early >= 3, "need early deviation structure");
            assert!(late >= 1, "need a late one for decidable truncations");
        }
    }

    #[test]
    fn master_components_have_spread_ones() {
        let master = master_script();
        for k in 0..4 {
            let comp = component_script(&master, k);
            let limit = comp.limit_prefix(comp.depth()).unwrap();
            let early = limit[..16.min(limit.len())].iter().filter(|&&b| b).count();
            assert!(early >= 2, "component {k} needs early ones");
        }
        // Deeper components still deviate from the all-zero input.
        for k in 4..11 {
            let comp = component_script(&master, k);
            let limit = comp.limit_prefix(comp.depth()).unwrap();
            assert!(limit.iter().any(|&b| b), "component {k} must not be zero");
        }
    }

    #[test]
    fn designated_images_cover_the_class_horizon() {
        use crate::functionals::{eval_symbolic, PrefixFunctional, SymbolicInput};
        for script in rank1_scripts() {
            let out = eval_symbolic(
                &PrefixFunctional::Phi(script),
                &SymbolicInput::Designated,
                2048,
                2048,
            )
            .unwrap();
            assert!(out.bits.len() >= 2048, "got {}", out.bits.len());
        }
    }
}
