use hazcause::data::read_header;
use hazcause::{load_cohort, parse_graph, write_cohort, ColumnMap, GraphFileError, LoadError};
use hazcause_core::{generate_cohort, CohortError, GraphError, SimConfig};
use proptest::prelude::*;

fn map() -> ColumnMap {
    ColumnMap::new("X", "T", "S").with_covariates(&["Z"])
}

fn load(text: &str) -> Result<hazcause_core::CohortDataset, LoadError> {
    load_cohort(text.as_bytes(), &map())
}

fn cohort_error(text: &str) -> CohortError {
    match load(text) {
        Err(LoadError::Cohort(e)) => e,
        other => panic!("expected a cohort error, got {other:?}"),
    }
}

#[test]
fn four_row_cohort() {
    let c = load("X,T,S,Z\n1,5,1,0\n0,3,1,1\n1,8,1,1\n0,2,1,0\n").unwrap();
    assert_eq!(c.len(), 4);
    assert_eq!(c.t_max(), 8);
    assert_eq!(c.covariate_levels()["Z"], vec!["0".to_string(), "1".to_string()]);
    assert_eq!(c.arm_sizes(), [2, 2]);
}

#[test]
fn treatment_must_be_binary() {
    let e = cohort_error("X,T,S,Z\n1,5,1,0\n2,3,1,1\n0,8,1,1\n");
    assert_eq!(e, CohortError::NonBinaryTreatment { row: 3, value: "2".into() });
}

#[test]
fn row_level_validation() {
    assert!(matches!(cohort_error("X,T,S,Z\n1,5,1,0\n0,-3,1,1\n"), CohortError::NegativeTime { row: 3, .. }));
    assert!(matches!(cohort_error("X,T,S,Z\n1,5.5,1,0\n0,3,1,1\n"), CohortError::NonIntegerTime { row: 2, .. }));
    assert!(matches!(cohort_error("X,T,S,Z\n1,5,yes,0\n0,3,1,1\n"), CohortError::NonBinaryEvent { row: 2, .. }));
    assert_eq!(
        cohort_error("X,T,S,Z\n1,5,1,0\n0,3,1\n"),
        CohortError::RaggedRow { row: 3, expected: 4, found: 3 }
    );
    assert_eq!(cohort_error("X,T,S,Z\n1,5,1,\n0,3,1,1\n"), CohortError::EmptyCell { row: 2, column: "Z".into() });
    assert_eq!(cohort_error("X,T,S\n1,5,1\n0,3,1\n"), CohortError::MissingColumn("Z".into()));
    assert!(matches!(cohort_error("X,T,S,Z\n1,5,1,0\n1,3,1,1\n"), CohortError::EmptyArm(_)));
    assert!(matches!(cohort_error("X,T,S,Z\n1,5,1,0.25\n0,3,1,1\n"), CohortError::ContinuousCovariate { .. }));
}

#[test]
fn quoted_fields_follow_rfc_4180() {
    let text = "id,X,T,S,Z\n\"a, \"\"first\"\"\",1,5,1,\"low\"\n\"b\",0,3,0,high\n";
    let c = load_cohort(text.as_bytes(), &map().with_id("id")).unwrap();
    assert_eq!(c.subjects()[0].id, "a, \"first\"");
    assert_eq!(c.covariate_levels()["Z"], vec!["high".to_string(), "low".to_string()]);
    assert!(!c.subjects()[1].event);
}

#[test]
fn header_is_read_in_file_order() {
    assert_eq!(read_header("b,a,c\n1,2,3\n".as_bytes()).unwrap(), vec!["b", "a", "c"]);
}

#[test]
fn simulated_cohort_round_trips_bit_exactly() {
    let cohort = generate_cohort(&SimConfig::default().with_seed(42)).unwrap();
    let columns = map().with_id("id");
    let mut first = Vec::new();
    write_cohort(&mut first, &cohort, &columns).unwrap();
    let reloaded = load_cohort(first.as_slice(), &columns).unwrap();
    assert_eq!(reloaded, cohort);
    let mut second = Vec::new();
    write_cohort(&mut second, &reloaded, &columns).unwrap();
    assert_eq!(first, second);
}

proptest! {
    #[test]
    fn written_files_reload_unchanged(rows in proptest::collection::vec((any::<bool>(), 0u64..1_000_000, any::<bool>(), "[a-c ,\"]{1,4}"), 2..25)) {
        let mut text = String::from("id,X,T,S,Z\n");
        for (i, (x, t, s, z)) in rows.iter().enumerate() {
            let x = if i < 2 { i == 1 } else { *x };
            prop_assume!(!z.trim().is_empty());
            let quoted = format!("\"{}\"", z.replace('"', "\"\""));
            text.push_str(&format!("s{i},{},{t},{},{quoted}\n", u8::from(x), u8::from(*s)));
        }
        let columns = map().with_id("id");
        let cohort = load_cohort(text.as_bytes(), &columns).unwrap();
        let mut out = Vec::new();
        write_cohort(&mut out, &cohort, &columns).unwrap();
        prop_assert_eq!(load_cohort(out.as_slice(), &columns).unwrap(), cohort);
    }
}

#[test]
fn graph_json_errors_carry_positions() {
    let e = parse_graph("{\"nodes\": [{\"name\": \"A\"},\n {\"name\": 3}], \"edges\": []}").unwrap_err();
    assert_eq!(e.to_string(), "nodes[1].name: expected a string");

    let e = parse_graph(r#"{"nodes": ["A", "B"], "edges": [["A", "B"], ["B"]]}"#).unwrap_err();
    assert_eq!(e.to_string(), "edges[1]: expected a [parent, child] pair");

    let e = parse_graph("{\"nodes\": [\"A\"],\n\"edges\": [[\"A\", \"A\"],]}").unwrap_err();
    assert!(matches!(e, GraphFileError::Syntax { line: 2, .. }), "{e}");

    let e = parse_graph(r#"{"nodes": ["A", "B"], "edges": [["A", "B"], ["B", "A"]]}"#).unwrap_err();
    assert!(matches!(e, GraphFileError::Graph(GraphError::CycleDetected(_))), "{e}");

    let e = parse_graph(r#"{"nodes": ["A", "A"]}"#).unwrap_err();
    assert_eq!(e.to_string(), "nodes[1].name: duplicate node `A`");

    let e = parse_graph(r#"{"nodes": [], "extra": 1}"#).unwrap_err();
    assert_eq!(e.to_string(), "extra: unknown key");
}

#[test]
fn graph_json_latent_nodes() {
    let g = parse_graph(
        r#"{"nodes": [{"name": "X"}, {"name": "M"}, {"name": "Y"}, {"name": "U", "observed": false}],
            "edges": [["X", "M"], ["M", "Y"], ["U", "X"], ["U", "Y"]]}"#,
    )
    .unwrap();
    assert!(g.minimal_backdoor_sets("X", "Y").unwrap().is_empty());
}
