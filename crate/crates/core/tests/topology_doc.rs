use asanakit::skeleton::Kind;

#[test]
fn topology_doc_matches_code() {
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/topology.md")).unwrap();
    for kind in [Kind::Hand, Kind::Body] {
        let topo = kind.topology();
        assert!(doc.contains(&format!("`{}`", topo.layout_id())));
        for i in 0..topo.landmark_count() {
            let row = format!("| {i} | {} |", topo.landmark_name(i).unwrap());
            assert!(doc.contains(&row), "missing `{row}`");
        }
        for (k, j) in topo.angle_joints.iter().enumerate() {
            let (a, b, c) = j.triple;
            let row = format!("| {k} | {} | {} | ({a}, {b}, {c}) |", j.name, topo.landmark_name(b).unwrap());
            assert!(doc.contains(&row), "missing `{row}`");
        }
        for p in &topo.slope_pairs {
            assert!(doc.contains(&format!("| {} | ({}, {})", p.name, p.pair.0, p.pair.1)), "{}", p.name);
        }
    }
}
