use cmdp_lab::sweep::{csv_header, quantile, RowKind};
use cmdp_lab::{reference_instance, sweep, write_csv, Mode, PipelineOptions};

fn base(mode: Mode) -> PipelineOptions {
    PipelineOptions {
        t_cap: Some(20_000),
        ..PipelineOptions::new(mode, 0.3, 0.1, 1, 0)
    }
}

#[test]
fn one_cell_gives_one_data_and_one_aggregate_row() {
    let rows = sweep(&reference_instance(), &base(Mode::Relaxed), &[100], &[1]).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].kind, RowKind::Data);
    assert_eq!(rows[1].kind, RowKind::Aggregate);
    assert_eq!(rows[1].subopt, rows[0].subopt);
    assert_eq!(rows[1].p90_max_violation, Some(rows[0].max_violation));

    let mut buf = Vec::new();
    write_csv(&mut buf, 2, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], csv_header(2).join(","));
    assert!(lines[1].starts_with("data,100,1,"));
    assert!(lines[2].starts_with("aggregate,100,,"));
}

#[test]
fn repeated_seeds_give_identical_rows() {
    let rows = sweep(&reference_instance(), &base(Mode::Strict), &[50, 200], &[3, 3]).unwrap();
    assert_eq!(rows.len(), 6);
    let strip = |i: usize| {
        let mut r = rows[i].clone();
        r.runtime_ms = 0.0;
        r
    };
    assert_eq!(strip(0), strip(1));
    assert_eq!(strip(3), strip(4));
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![50, 50, 50, 200, 200, 200]);
}

#[test]
fn bad_grids_are_rejected() {
    let spec = reference_instance();
    assert!(sweep(&spec, &base(Mode::Relaxed), &[], &[1]).is_err());
    assert!(sweep(&spec, &base(Mode::Relaxed), &[100, 10], &[1]).is_err());
    assert!(sweep(&spec, &base(Mode::Relaxed), &[100], &[]).is_err());
}

#[test]
fn quantiles_interpolate() {
    assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    assert!((quantile(&(0..11).map(f64::from).collect::<Vec<_>>(), 0.9) - 9.0).abs() < 1e-12);
}

#[test]
fn median_violation_does_not_grow_with_samples() {
    let seeds: Vec<u64> = (0..20).collect();
    let rows = sweep(&reference_instance(), &base(Mode::Relaxed), &[100, 1000, 10_000], &seeds).unwrap();
    let medians: Vec<f64> = rows
        .iter()
        .filter(|r| r.kind == RowKind::Aggregate)
        .map(|r| r.max_violation)
        .collect();
    assert_eq!(medians.len(), 3);
    assert!(medians.windows(2).all(|w| w[1] <= w[0]), "{medians:?}");
}
