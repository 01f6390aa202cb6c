#![allow(dead_code)]

use ghzmetro::{ratio, Exact, ExactState, GhzDiagonalState};
use proptest::prelude::*;

/// Random exact GHZ-diagonal states on 2..=max_n qubits with small integer
/// weights, normalized exactly.
pub fn exact_state(max_n: u32) -> impl Strategy<Value = ExactState> {
    (2..=max_n).prop_flat_map(|n| {
        let sectors = 1usize << (n - 1);
        proptest::collection::vec((0u32..20, 0u32..20), sectors)
            .prop_filter("nonzero trace", |w| w.iter().any(|(a, b)| a + b > 0))
            .prop_map(move |w| {
                let total: i64 = w.iter().map(|(a, b)| (a + b) as i64).sum();
                let plus: Vec<Exact> = w.iter().map(|(a, _)| ratio(*a as i64, total)).collect();
                let minus: Vec<Exact> = w.iter().map(|(_, b)| ratio(*b as i64, total)).collect();
                GhzDiagonalState::from_sectors(n, plus, minus).expect("normalized")
            })
    })
}
