use proptest::prelude::*;
use stratcert::family::counter_fixture;
use stratcert::format::{is_aiger_expressible, parse_aiger, parse_extended, print_aiger, print_extended};
use stratcert::oracle::{random_format_circuit, random_stratified_circuit, GenParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn aiger_round_trip(seed in any::<u64>()) {
        let c = random_format_circuit(seed, false);
        prop_assert!(is_aiger_expressible(&c));
        let text = print_aiger(&c).unwrap();
        let back = parse_aiger(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(print_aiger(&back).unwrap(), text);
    }

    #[test]
    fn extended_round_trip(seed in any::<u64>()) {
        let c = random_format_circuit(seed, true);
        let text = print_extended(&c);
        let back = parse_extended(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(print_extended(&back), text);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = parse_aiger(&bytes);
        let _ = parse_extended(&bytes);
    }

    #[test]
    fn corrupted_files_never_panic(seed in any::<u64>(), pos in any::<usize>(), byte in any::<u8>()) {
        let mut text = print_extended(&random_format_circuit(seed, true)).into_bytes();
        let at = pos % text.len();
        text[at] = byte;
        if let Ok(c) = parse_extended(&text) {
            prop_assert!(c.validate().is_empty());
        }
    }
}

#[test]
fn generator_round_trips_through_extended_format() {
    for seed in 0..200 {
        let c = random_stratified_circuit(seed, GenParams::default());
        let back = parse_extended(print_extended(&c).as_bytes()).unwrap();
        assert_eq!(back, c, "seed {seed}");
    }
}

#[test]
fn counter_fixture_golden_file() {
    let text = include_str!("fixtures/counter_fixture.aag");
    assert_eq!(print_aiger(&counter_fixture()).unwrap(), text);
    assert_eq!(parse_aiger(text.as_bytes()).unwrap(), counter_fixture());
}

#[test]
fn generator_snapshot_is_stable() {
    let c = random_stratified_circuit(
        0,
        GenParams {
            latches: 3,
            inputs: 1,
            gates: 8,
        },
    );
    assert_eq!(print_extended(&c), include_str!("fixtures/generator_seed0.aag"));
}

#[test]
fn plain_parser_ignores_reset_section_magic_only_in_extended_mode() {
    let text = "aag 2 0 2 1 0\n2 2 2\n4 4 4\n2\nc\nreset-functions v1\nr 2 4\nr 4 2\n";
    let ext = parse_extended(text.as_bytes()).unwrap();
    assert!(!ext.is_stratified());
    let plain = parse_aiger(text.as_bytes()).unwrap();
    assert!(plain.latches().iter().all(|l| l.is_uninitialized()));
}
