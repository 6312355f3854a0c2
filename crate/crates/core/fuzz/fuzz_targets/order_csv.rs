#![no_main]

use libfuzzer_sys::fuzz_target;
use pe_forge::io::{parse_order_csv, write_order_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(order) = parse_order_csv(text) {
        let again = parse_order_csv(&write_order_csv(&order)).expect("re-parse");
        assert_eq!(order, again);
    }
});
