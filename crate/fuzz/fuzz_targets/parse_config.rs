#![no_main]

use libfuzzer_sys::fuzz_target;
use modint_cli::{parse_config, CliError};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    match parse_config(text) {
        Ok(cfg) => {
            assert!(cfg.setup.nx >= 16);
            assert!(cfg.t_end > 0.0);
        }
        Err(CliError::ConfigAt { line, .. }) => assert!(line >= 1),
        Err(_) => {}
    }
});
