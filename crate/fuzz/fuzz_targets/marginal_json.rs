#![no_main]

use bamot::measures::Marginal;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = serde_json::from_slice::<Marginal>(data) {
        // Decoded marginals must support basic queries without panicking.
        let _ = m.barycenter();
        let _ = m.cdf(1.0);
        let _ = m.call_price(1.0);
    }
});
