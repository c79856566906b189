#![no_main]

use bamot::payoff::Payoff;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(payoff) = text.parse::<Payoff>() {
            // Parsed payoffs must evaluate without panicking.
            let _ = payoff.eval(1.0);
            let _ = payoff.terminal_slope();
            let _ = payoff.two_maturity();
        }
    }
});
