#![no_main]

use libfuzzer_sys::fuzz_target;
use pe_forge::io::{parse_bias_csv, write_bias_csv};
use pe_forge::GridShape;

fuzz_target!(|data: &[u8]| {
    // first byte picks a small grid, the rest is the file
    let Some((&dims, rest)) = data.split_first() else { return };
    let shape = GridShape::new(1 + (dims & 0x0f) as usize, 1 + (dims >> 4) as usize).unwrap();
    let Ok(text) = std::str::from_utf8(rest) else { return };
    if let Ok(bias) = parse_bias_csv(text, shape) {
        assert!(bias.values().iter().all(|v| v.abs() < 1.0));
        let again = parse_bias_csv(&write_bias_csv(&bias), shape).expect("re-parse");
        assert_eq!(bias, again);
    }
});
