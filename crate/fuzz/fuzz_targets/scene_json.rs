#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // the base path never exists, so PFM references fail cleanly instead of
    // touching the filesystem
    let _ = castlight::io::load_scene_str(text, Path::new("/nonexistent/scene.json"));
});
