use natgrad_lens::experiments::{check_effectiveness, run_lti, LtiConfig};
use natgrad_lens::io::{
    parse_effectiveness, parse_key_values, parse_loss_sequence, parse_pairs, parse_spectrum_rows, parse_trace_rows,
    spectrum_row, trace_rows, write_atomic, write_effectiveness, write_pairs, write_spectrum_rows, write_trace_rows,
    Header, OutputFormat, PairRecord, RowStatus,
};
use natgrad_lens::metric::strategy::Optimal;
use proptest::prelude::*;

const FORMATS: [OutputFormat; 2] = [OutputFormat::Csv, OutputFormat::Json];

fn header() -> Header {
    let mut h = Header::new();
    h.insert("seed".into(), "42".into());
    h.insert("command".into(), "test".into());
    h
}

/// Finite doubles spanning many magnitudes, including subnormals.
fn any_finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3f64..1e3,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE / 4.0),
    ]
}

fn records(dim: usize) -> impl Strategy<Value = Vec<PairRecord>> {
    prop::collection::vec(
        (
            prop::collection::vec(any_finite(), dim),
            prop::collection::vec(any_finite(), dim),
        )
            .prop_map(|(g, y)| PairRecord::new(g, y)),
        0..20,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pair_files_round_trip_bit_for_bit(recs in (1usize..6).prop_flat_map(records)) {
        for format in FORMATS {
            let text = write_pairs(format, &header(), &recs).unwrap();
            let (h, back) = parse_pairs(format, &text).unwrap();
            prop_assert_eq!(&h, &header());
            prop_assert_eq!(back.len(), recs.len());
            for (a, b) in back.iter().zip(&recs) {
                let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                prop_assert_eq!(bits(&a.g), bits(&b.g));
                prop_assert_eq!(bits(&a.y), bits(&b.y));
            }
        }
    }

    #[test]
    fn spectrum_rows_round_trip(recs in (2usize..5).prop_flat_map(records)) {
        let rows: Vec<_> = recs.iter().enumerate().map(|(i, r)| spectrum_row(i, r, &Optimal)).collect();
        for row in &rows {
            if row.status == RowStatus::Ok {
                prop_assert!(row.kappa.unwrap() >= 1.0);
            } else {
                prop_assert!(!row.reason.is_empty());
            }
        }
        for format in FORMATS {
            let text = write_spectrum_rows(format, &header(), &rows).unwrap();
            let (_, back) = parse_spectrum_rows(format, &text).unwrap();
            prop_assert_eq!(&back, &rows);
        }
    }

    #[test]
    fn loss_sequences_round_trip(losses in prop::collection::vec(any_finite(), 1..50)) {
        let text: String = losses.iter().map(|l| format!("{}\n", natgrad_lens::io::fmt_f64(*l))).collect();
        let back = parse_loss_sequence(&text).unwrap();
        prop_assert_eq!(back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), losses.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn lti_trace_and_report_round_trip() {
    let run = run_lti(&LtiConfig::random(3, 7, 0.01, 1.0)).unwrap();
    let rows = trace_rows(&run.trace);
    assert_eq!(rows.len(), run.trace.len());
    for format in FORMATS {
        let text = write_trace_rows(format, &header(), &rows).unwrap();
        let (h, back) = parse_trace_rows(format, &text).unwrap();
        assert_eq!(h, header());
        assert_eq!(back, rows);
        let text = write_effectiveness(format, &header(), &run.trace.effectiveness).unwrap();
        let (_, report) = parse_effectiveness(format, &text).unwrap();
        assert_eq!(report, run.trace.effectiveness);
    }
}

#[test]
fn trace_file_feeds_the_effectiveness_checker() {
    let run = run_lti(&LtiConfig::random(2, 3, 0.01, 2.0)).unwrap();
    let text = write_trace_rows(OutputFormat::Csv, &header(), &trace_rows(&run.trace)).unwrap();
    let losses = parse_loss_sequence(&text).unwrap();
    assert_eq!(losses, run.trace.losses);
    assert_eq!(check_effectiveness(&losses, 1).unwrap(), run.trace.effectiveness);
}

#[test]
fn atomic_write_replaces_contents() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write_atomic(&path, b"first").unwrap();
    write_atomic(&path, b"second").unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn config_files_reject_duplicates_and_garbage() {
    assert!(parse_key_values("a = 1\n# comment\n\nb=2\n").is_ok());
    assert!(parse_key_values("a = 1\na = 2\n").is_err());
    assert!(parse_key_values("just words\n").is_err());
}
