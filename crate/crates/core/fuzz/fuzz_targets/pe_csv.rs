#![no_main]

use libfuzzer_sys::fuzz_target;
use pe_forge::io::{parse_pe_csv, write_pe_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((emb, meta)) = parse_pe_csv(text) {
        let (again, meta_again) = parse_pe_csv(&write_pe_csv(&emb, &meta)).expect("re-parse");
        assert_eq!(emb, again);
        assert_eq!(meta, meta_again);
    }
});
