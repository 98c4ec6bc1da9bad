#![no_main]

use libfuzzer_sys::fuzz_target;
use swarmlink::graph::Topology;

fuzz_target!(|text: &str| {
    // The parser must reject garbage with an error, never a panic. Anything
    // it accepts must survive a print/re-parse round trip unchanged.
    if let Ok(topology) = Topology::from_edge_list_str(text) {
        let printed = topology.to_edge_list_string();
        let reparsed = Topology::from_edge_list_str(&printed)
            .expect("printed edge list should parse back");
        // Every node id the parser counts comes from some edge, so the
        // printed list pins down the node count too.
        assert_eq!(topology.edges(), reparsed.edges());
        assert_eq!(topology.node_count(), reparsed.node_count());
    }
});
