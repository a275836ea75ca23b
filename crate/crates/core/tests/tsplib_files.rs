use std::path::PathBuf;

use cogs_core::oracle::read_external_tour;
use cogs_core::tsplib::{build_tsplib50, load_source_dir, parse_tsplib, Tsplib50Options};
use cogs_core::{normalize_to_unit_square, Error};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn header_dimension(text: &str) -> usize {
    text.lines()
        .find_map(|l| l.strip_prefix("DIMENSION"))
        .and_then(|rest| rest.trim_start_matches([' ', ':']).trim().parse().ok())
        .unwrap()
}

#[test]
fn parses_real_euc2d_file() {
    let text = std::fs::read_to_string(data("pcb442.tsp")).unwrap();
    let inst = parse_tsplib(&text).unwrap();
    assert_eq!(inst.name, "pcb442");
    assert_eq!(inst.dimension, header_dimension(&text));
    assert_eq!(inst.raw_points.len(), 442);
    assert_eq!(inst.raw_points[0], (1, 200.0, 400.0));
    assert_eq!(inst.raw_points[441], (442, 0.0, 0.0));
}

#[test]
fn rejects_other_edge_weight_types() {
    for (file, kind) in [("att532.tsp", "ATT"), ("gr17.tsp", "EXPLICIT")] {
        let text = std::fs::read_to_string(data(file)).unwrap();
        match parse_tsplib(&text) {
            Err(Error::UnsupportedFormat(t)) => assert_eq!(t, kind),
            other => panic!("{file}: {other:?}"),
        }
    }
}

#[test]
fn reads_distributed_optimal_tour() {
    let inst = parse_tsplib(&std::fs::read_to_string(data("pcb442.tsp")).unwrap()).unwrap();
    let unit = normalize_to_unit_square(&inst.points()).unwrap();
    let tour = std::fs::read_to_string(data("pcb442.opt.tour")).unwrap();
    let r = read_external_tour(&tour, &unit).unwrap();
    assert_eq!(r.tour.order().len(), 442);
    assert!(r.tour.is_consistent_with(&unit));
}

#[test]
fn builds_from_fixture_directory() {
    let (accepted, rejected) = load_source_dir(&data(""), Tsplib50Options::default()).unwrap();
    assert_eq!(accepted.len(), 1);
    assert_eq!(accepted[0].1.name, "pcb442");
    let mut reasons: Vec<String> = rejected
        .iter()
        .map(|r| r.path.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    reasons.sort();
    assert_eq!(reasons, vec!["att532.tsp", "gr17.tsp"]);
    let sources: Vec<_> = accepted.into_iter().map(|(_, s)| s).collect();
    let d = build_tsplib50(&sources, 25, 3, Tsplib50Options::default()).unwrap();
    assert_eq!(d.len(), 25);
    assert!(d.provenance.iter().all(|p| p.source == "pcb442"));
}
