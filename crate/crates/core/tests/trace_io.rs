use proptest::prelude::*;
use resilient_cacc::sim::trace::{read_trace, write_trace};
use resilient_cacc::sim::{emit_trace, parse_trace_file, run_scenario, ScenarioConfig, TraceRow, TRACE_HEADER};

fn emit_to_string(rows: &[TraceRow]) -> String {
    let mut buf = Vec::new();
    write_trace(rows, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn empty_trace_is_header_only() {
    let text = emit_to_string(&[]);
    assert_eq!(text, format!("{}\n", TRACE_HEADER.join(",")));
    assert!(read_trace(text.as_bytes(), "mem").unwrap().is_empty());
}

#[test]
fn one_row_has_22_columns() {
    let text = emit_to_string(&[TraceRow { t: 0.001, gap: 5.0, contained: true, ..Default::default() }]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 22);
    assert!(lines[1].ends_with(",1"));
}

#[test]
fn header_mismatch_rejected() {
    let text = "t,leader_x\n0,1\n";
    assert!(read_trace(text.as_bytes(), "mem").is_err());
}

#[test]
fn simulated_trace_round_trips_through_a_file() {
    let mut c = ScenarioConfig::named("noisy").unwrap();
    c.t_end = 2.0;
    let out = run_scenario(c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    emit_trace(&out.trace, &path).unwrap();
    let back = parse_trace_file(&path).unwrap();
    assert_eq!(back.len(), out.trace.len());
    for (a, b) in out.trace.iter().zip(&back) {
        assert_eq!(a.rounded(), *b);
    }
    let first = std::fs::read_to_string(&path).unwrap();
    emit_trace(&back, &path).unwrap();
    assert_eq!(first, std::fs::read_to_string(&path).unwrap());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        -1e-3..1e-3f64,
        Just(0.0),
        (-300i32..300, -9.99..9.99f64).prop_map(|(e, m)| m * 10f64.powi(e)),
    ]
}

proptest! {
    #[test]
    fn parse_back_is_bitwise_at_printed_precision(
        values in prop::collection::vec(prop::array::uniform21(finite()), 1..8),
        flags in prop::collection::vec(any::<bool>(), 8),
    ) {
        let rows: Vec<TraceRow> = values
            .iter()
            .zip(&flags)
            .map(|(v, &c)| TraceRow::from_values(v, c))
            .collect();
        let back = read_trace(emit_to_string(&rows).as_bytes(), "mem").unwrap();
        for (a, b) in rows.iter().zip(&back) {
            let (ra, rb) = (a.rounded().values(), b.values());
            for (x, y) in ra.iter().zip(&rb) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            prop_assert_eq!(a.contained, b.contained);
        }
    }
}
