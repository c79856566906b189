#![no_main]

use bamot_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<RunConfig>(data) {
        if cfg.validate().is_ok() {
            let _ = cfg.hash();
            let _ = cfg.hedge_config(false);
            let _ = cfg.hedge_config(true);
        }
    }
});
