use hazcause::svg::analysis_series;
use hazcause::{render_svg, Series, SvgError};
use hazcause_core::{adjust::adjust_on, generate_cohort, to_daily_trials, AdjustOptions, SimConfig};

fn series(id: &str, days: Vec<u64>, survival: Vec<f64>) -> Series {
    Series { id: id.into(), label: id.into(), dashed: false, days, survival }
}

fn count(doc: &str, needle: &str) -> usize {
    doc.matches(needle).count()
}

#[test]
fn two_arm_curve_has_two_step_paths_and_a_legend() {
    let doc = render_svg(&[
        series("control", vec![0, 2, 5], vec![1.0, 0.5, 0.25]),
        series("treated", vec![0, 3, 5], vec![1.0, 0.75, 0.5]),
    ])
    .unwrap();
    assert_eq!(count(&doc, "<polyline "), 2);
    assert!(doc.contains(r#"id="control""#) && doc.contains(r#"id="treated""#));
    assert!(doc.contains(r#"id="legend""#));
    assert!(doc.contains(">days</text>"));
    assert!(doc.contains(">survival probability</text>"));
    assert!(doc.contains(r#"version="1.1""#));
    assert!(!doc.contains("<script"));
}

#[test]
fn steps_hold_the_previous_value_until_the_next_day() {
    let doc = render_svg(&[series("only", vec![0, 10], vec![1.0, 0.0])]).unwrap();
    let points = doc.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let pts: Vec<(f64, f64)> = points
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect();
    assert_eq!(pts.len(), 3);
    assert_eq!(pts[1].0, pts[2].0);
    assert_eq!(pts[0].1, pts[1].1);
    assert!(pts[2].1 > pts[1].1);
}

#[test]
fn identical_arms_give_coincident_paths_with_distinct_ids() {
    let doc = render_svg(&[
        series("a", vec![0, 4], vec![1.0, 0.5]),
        series("b", vec![0, 4], vec![1.0, 0.5]),
    ])
    .unwrap();
    let points: Vec<&str> = doc.split("points=\"").skip(1).map(|s| s.split('"').next().unwrap()).collect();
    assert_eq!(points.len(), 2);
    assert_eq!(points[0], points[1]);
}

#[test]
fn single_series_has_no_legend() {
    let doc = render_svg(&[series("alone", vec![0, 1], vec![1.0, 0.9])]).unwrap();
    assert_eq!(count(&doc, "<polyline "), 1);
    assert!(!doc.contains("legend"));
}

#[test]
fn empty_input_is_rejected() {
    assert_eq!(render_svg(&[]), Err(SvgError::EmptyCurve));
    assert_eq!(render_svg(&[series("x", vec![], vec![])]), Err(SvgError::EmptyCurve));
    assert!(matches!(render_svg(&[series("x", vec![0], vec![])]), Err(SvgError::LengthMismatch(..))));
}

#[test]
fn labels_are_escaped() {
    let mut s = series("a", vec![0, 1], vec![1.0, 0.5]);
    s.label = "<A & B>".into();
    let doc = render_svg(&[s.clone(), series("b", vec![0, 1], vec![1.0, 0.5])]).unwrap();
    assert!(doc.contains("&lt;A &amp; B&gt;"));
}

#[test]
fn analysis_plot_has_four_paths() {
    let cohort = generate_cohort(&SimConfig::default().with_seed(5)).unwrap();
    let m = to_daily_trials(&cohort);
    let crude = adjust_on::<&str>(&cohort, &m, &[], AdjustOptions::default()).unwrap();
    let adjusted = adjust_on(&cohort, &m, &["Z"], AdjustOptions::default()).unwrap();
    let doc = render_svg(&analysis_series(&crude, &adjusted)).unwrap();
    assert_eq!(count(&doc, "<polyline "), 4);
    for id in ["unadjusted-control", "unadjusted-treated", "adjusted-control", "adjusted-treated"] {
        assert!(doc.contains(&format!("id=\"{id}\"")), "{id}");
    }
}
