#![no_main]

use affectsim::network::{parse_edge_list, write_edge_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(graph) = parse_edge_list(text) else { return };
    let mut buf = Vec::new();
    write_edge_list(&graph, &mut buf).unwrap();
    let again = parse_edge_list(std::str::from_utf8(&buf).unwrap()).expect("written edge list parses");
    assert_eq!(again.node_count(), graph.node_count());
    assert!(again.edges().eq(graph.edges()));
});
