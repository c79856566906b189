#![no_main]

use bamot::quotes::QuoteChain;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(chain) = QuoteChain::from_csv(data, 100.0) {
        // Anything that parses must survive the rest of the pipeline without
        // panicking; errors are fine.
        if let Ok(calls) = chain.impute().combine_put_call() {
            let _ = bamot::quotes::enhance(&calls);
        }
    }
});
