#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = castlight::io::decode_pfm(data) {
        // decoded images must round-trip
        let again = castlight::io::decode_pfm(&castlight::io::encode_pfm(&img))
            .expect("re-encoded PFM parses");
        assert_eq!(again.valid, img.valid);
    }
});
