mod common;

use ghzmetro::{build_rho_nkm, ExactState, FloatState};
use proptest::prelude::*;

proptest! {
    #[test]
    fn json_round_trip_is_lossless(state in common::exact_state(6)) {
        let text = serde_json::to_string(&state).unwrap();
        let back: ExactState = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, state);
    }
}

#[test]
fn float_round_trip_and_validation() {
    let s: FloatState = build_rho_nkm(8, 2, 1).unwrap();
    let back: FloatState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    let bad = r#"{"n":3,"entries":[{"i":0,"lp":"1/2","lm":"0/1"}]}"#;
    assert!(serde_json::from_str::<ExactState>(bad).is_err());
    let out_of_range = r#"{"n":3,"entries":[{"i":9,"lp":"1/1","lm":"0/1"}]}"#;
    assert!(serde_json::from_str::<ExactState>(out_of_range).is_err());
}
