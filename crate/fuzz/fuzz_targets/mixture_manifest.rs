#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    mirl_fuzz::mixture_manifest(data);
});
