#![no_main]

use libfuzzer_sys::fuzz_target;
use pe_forge::io::{decode_ppm, encode_ppm};

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_ppm(data) {
        assert_eq!(img.data.len(), img.width as usize * img.height as usize * 3);
        assert_eq!(decode_ppm(&encode_ppm(&img)).expect("re-decode"), img);
    }
});
