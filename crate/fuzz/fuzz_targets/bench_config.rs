#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = serde_json::from_str::<castlight::synth::BenchConfig>(text) {
        // parsing may succeed on configs that validation rejects; both paths
        // must stay panic-free (the benchmark itself is never run here)
        let _ = config.validate();
    }
});
