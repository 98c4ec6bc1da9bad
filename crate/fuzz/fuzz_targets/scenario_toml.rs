#![no_main]

use libfuzzer_sys::fuzz_target;
use swarmlink::scenario::Scenario;

fuzz_target!(|text: &str| {
    // Config text is user input: malformed documents must come back as
    // errors, and every accepted scenario must be internally consistent
    // (validation passed) and round-trip through its own serialization.
    if let Ok(scenario) = Scenario::from_toml_str(text) {
        let printed = scenario.to_toml_string();
        let reparsed =
            Scenario::from_toml_str(&printed).expect("printed scenario should parse back");
        assert_eq!(scenario, reparsed);
    }
});
