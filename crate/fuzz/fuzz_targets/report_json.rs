#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    sausage_lab::fuzzing::report_json(data);
});
