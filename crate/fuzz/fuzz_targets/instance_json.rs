#![no_main]

use amdl_harness::instance_file::{parse_instance, InstanceFile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((inst, meta)) = parse_instance(text) {
        // anything accepted must survive a round trip unchanged
        let again = InstanceFile::from_instance(&inst, meta.clone()).to_json();
        let (inst2, meta2) = parse_instance(&again).expect("re-parse");
        assert_eq!(inst, inst2);
        assert_eq!(meta, meta2);
    }
});
