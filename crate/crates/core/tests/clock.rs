use proptest::collection::vec;
use proptest::prelude::*;

use nfcsim_core::{SimClock, SimTime};

proptest! {
    #[test]
    fn pops_in_time_then_insertion_order(times in vec(0u64..1_000, 1..200), cancel in vec(any::<bool>(), 200)) {
        let mut clock = SimClock::new();
        let mut expected = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let h = clock.schedule(SimTime::from_micros(t), i).unwrap();
            if cancel[i] {
                prop_assert!(clock.cancel(h));
                prop_assert!(!clock.cancel(h));
            } else {
                expected.push((t, i));
            }
        }
        expected.sort();
        prop_assert_eq!(clock.pending(), expected.len());
        let mut got = Vec::new();
        while let Some((at, _, i)) = clock.pop() {
            prop_assert_eq!(clock.now(), at);
            got.push((at.as_micros(), i));
        }
        prop_assert_eq!(got, expected);
        prop_assert!(clock.is_idle());
    }
}

#[test]
fn rejects_the_past() {
    let mut clock = SimClock::new();
    clock.schedule(SimTime::from_micros(5), ()).unwrap();
    clock.pop();
    assert!(clock.schedule(SimTime::from_micros(4), ()).is_err());
    assert!(clock.schedule(SimTime::from_micros(5), ()).is_ok());
}
