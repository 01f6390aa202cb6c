mod common;

use ghzmetro::dense::to_dense;
use ghzmetro::qfi::{qfi_closed_nk, qfi_dense, qfi_ghz_diagonal, PhaseGenerator};
use ghzmetro::{build_rho_nk, ratio, Exact, FloatState, Scalar};
use proptest::prelude::*;

proptest! {
    #[test]
    fn sector_formula_matches_spectral_oracle(state in common::exact_state(5)) {
        let exact = qfi_ghz_diagonal(&state).to_f64_lossy();
        let dense = qfi_dense(&to_dense(&state).unwrap(), &PhaseGenerator::new(state.n())).unwrap();
        prop_assert!((exact - dense).abs() <= 1e-9 * exact.max(1.0), "{exact} vs {dense}");
    }

    #[test]
    fn sector_swap_leaves_qfi_invariant(state in common::exact_state(6), pick in 0usize..32) {
        let i = pick % state.sector_count();
        prop_assert_eq!(qfi_ghz_diagonal(&state), qfi_ghz_diagonal(&state.with_sector_swapped(i)));
    }

    #[test]
    fn qfi_never_exceeds_heisenberg(state in common::exact_state(7)) {
        let n = state.n() as i64;
        let f = qfi_ghz_diagonal(&state);
        prop_assert!(f >= ratio(0, 1) && f <= ratio(n * n, 1));
    }

    #[test]
    fn float_and_exact_instantiations_agree(state in common::exact_state(7)) {
        let f64_value = qfi_ghz_diagonal(&state.cast::<f64>());
        let f32_value = qfi_ghz_diagonal(&state.cast::<f32>());
        let exact = qfi_ghz_diagonal(&state).to_f64_lossy();
        prop_assert!((f64_value - exact).abs() <= 1e-10 * exact.max(1.0));
        prop_assert!((f32_value as f64 - exact).abs() <= 1e-4 * exact.max(1.0));
    }
}

#[test]
fn closed_form_matches_state_beyond_dense_range() {
    for (n, k) in [(13u32, 2u32), (14, 5), (16, 7), (18, 4)] {
        let state = build_rho_nk::<Exact>(n, k).unwrap();
        assert_eq!(qfi_ghz_diagonal(&state), qfi_closed_nk(n as u64, k as u64).unwrap());
    }
}

#[test]
fn float_family_states_track_the_closed_form() {
    for n in 3..=14u32 {
        for k in (1..).take_while(|k| 2 * k < n) {
            let s: FloatState = build_rho_nk(n, k).unwrap();
            let exact = qfi_closed_nk(n as u64, k as u64).unwrap().to_f64_lossy();
            assert!((qfi_ghz_diagonal(&s) - exact).abs() < 1e-10 * exact);
        }
    }
}
