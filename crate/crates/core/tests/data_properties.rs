use clgnet::data::{
    binarize, correlation_matrix, read_csv, summarize, Column, ColumnSchema, ColumnStats, CsvOptions, Cutoff, DataError, Role,
};
use clgnet::Dataset;
use proptest::prelude::*;

fn continuous(name: &str, v: &[f64]) -> (ColumnSchema, Column) {
    (ColumnSchema::continuous(name, Role::Physiological), Column::Continuous(v.iter().copied().map(Some).collect()))
}

fn dataset(cols: Vec<(ColumnSchema, Column)>) -> Dataset {
    let (s, c) = cols.into_iter().unzip();
    Dataset::from_columns(s, c).unwrap()
}

proptest! {
    /// Written CSV reads back to the identical dataset, missing cells included.
    #[test]
    fn csv_round_trip(
        xs in proptest::collection::vec(proptest::option::of(any::<f64>().prop_filter("finite", |x| x.is_finite())), 0..30),
        states in proptest::collection::vec(proptest::option::of(0usize..3), 30),
    ) {
        let n = xs.len();
        let schema = vec![
            ColumnSchema::continuous("x", Role::Other),
            ColumnSchema::discrete("s", &["a", "b c", "d,e"], Role::MentalState),
        ];
        let d = Dataset::from_columns(schema.clone(), vec![Column::Continuous(xs), Column::Discrete(states[..n].to_vec())]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, &CsvOptions::default()).unwrap();
        let (back, report) = read_csv(buf.as_slice(), &schema, &CsvOptions::default()).unwrap();
        prop_assert_eq!(report.rows, n);
        prop_assert_eq!(back.columns(), d.columns());
    }

    #[test]
    fn correlations_are_well_formed(cols in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 8), 2..5)) {
        let names: Vec<String> = (0..cols.len()).map(|i| format!("c{i}")).collect();
        let d = dataset(names.iter().zip(&cols).map(|(n, c)| continuous(n, c)).collect());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let m = match correlation_matrix(&d, &refs) {
            Ok(m) => m,
            Err(DataError::ZeroVariance(_)) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for i in 0..refs.len() {
            prop_assert_eq!(m.values[i][i], 1.0);
            for j in 0..refs.len() {
                prop_assert_eq!(m.values[i][j], m.values[j][i]);
                prop_assert!((-1.0..=1.0).contains(&m.values[i][j]));
            }
        }
    }

    #[test]
    fn summary_bounds(xs in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
        let d = dataset(vec![continuous("x", &xs)]);
        let Some(ColumnStats::Continuous { stats: Some(s), .. }) = summarize(&d).get("x").cloned() else { panic!() };
        prop_assert!(s.min <= s.median && s.median <= s.max);
        prop_assert!(s.min <= s.mean + 1e-9 && s.mean <= s.max + 1e-9);
    }
}

#[test]
fn pearson_hand_computed() {
    let d = dataset(vec![continuous("x", &[1.0, 2.0, 3.0]), continuous("y", &[1.0, 2.0, 4.0]), continuous("z", &[-1.0, -2.0, -3.0])]);
    let m = correlation_matrix(&d, &["x", "y", "z"]).unwrap();
    // r = 2.5 / sqrt(2 * 4.6667)
    assert!((m.get("x", "y").unwrap() - 0.9820).abs() < 5e-5);
    assert!((m.get("x", "z").unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn summary_of_four_weights() {
    let d = dataset(vec![continuous("w", &[49.0, 115.0, 71.0, 72.0])]);
    let Some(ColumnStats::Continuous { stats: Some(s), .. }) = summarize(&d).get("w").cloned() else { panic!() };
    assert_eq!((s.min, s.max, s.mean, s.median), (49.0, 115.0, 76.75, 71.5));
}

#[test]
fn binarize_threshold_is_inclusive_and_final() {
    let d = dataset(vec![continuous("q", &[10.0, 50.0, 60.0])]);
    let b = binarize(&d, "q", 50.0, Cutoff::GreaterOrEqual).unwrap();
    assert_eq!(b.discrete("q").unwrap(), &[Some(0), Some(1), Some(1)]);
    assert!(binarize(&b, "q", 50.0, Cutoff::GreaterOrEqual).is_err());
    let all = binarize(&d, "q", 0.0, Cutoff::GreaterOrEqual).unwrap();
    assert!(all.discrete("q").unwrap().iter().all(|s| *s == Some(1)));
    let out = dataset(vec![continuous("q", &[101.0])]);
    assert!(matches!(binarize(&out, "q", 50.0, Cutoff::GreaterOrEqual), Err(DataError::OutOfRange { .. })));
}

#[test]
fn parse_errors_name_row_and_column() {
    let schema = vec![ColumnSchema::continuous("x", Role::Other), ColumnSchema::discrete("s", &["a", "b"], Role::Other)];
    let err = read_csv("x,s\n1,a\n2,zz\n".as_bytes(), &schema, &CsvOptions::default()).unwrap_err();
    assert!(matches!(err, DataError::Parse { row: 2, ref column, .. } if column == "s"), "{err}");
    let err = read_csv("x\n1\n".as_bytes(), &schema, &CsvOptions::default()).unwrap_err();
    assert!(matches!(err, DataError::HeaderMismatch(_)));
    let (d, r) = read_csv("x,s,extra\n1,a,9\nNA,b,9\n".as_bytes(), &schema, &CsvOptions::default()).unwrap();
    assert_eq!(d.n_rows(), 2);
    assert_eq!(r.ignored_columns, ["extra"]);
    assert_eq!(r.missing_per_column[0], ("x".to_string(), 1));
}
