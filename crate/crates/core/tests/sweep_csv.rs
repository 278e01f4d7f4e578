use gossip_rel_core::sweep::{
    format_float, read_csv, run_sweep, write_csv, SimSettings, CSV_HEADER,
};
use gossip_rel_core::{solve, Params, Policy, SweepParam, SweepSpec};

fn spec(swept: SweepParam, grid: &[f64], n: usize, policies: &[Policy]) -> SweepSpec {
    SweepSpec {
        swept,
        grid: grid.to_vec(),
        base: Params::baseline(n, policies[0]),
        policies: policies.to_vec(),
        sim: None,
    }
}

#[test]
fn network_size_sweep_is_nondecreasing() {
    let rows = run_sweep(&spec(
        SweepParam::N,
        &[2.0, 10.0, 50.0, 100.0],
        100,
        &[Policy::ReliabilityFirst],
    ))
    .unwrap();
    assert_eq!(rows.len(), 4);
    let ns: Vec<usize> = rows.iter().map(|r| r.params.n).collect();
    assert_eq!(ns, [2, 10, 50, 100]);
    assert!(rows.windows(2).all(|w| w[0].f_solver <= w[1].f_solver));
    assert!(rows.windows(2).all(|w| w[0].x1_solver <= w[1].x1_solver));
}

#[test]
fn reliable_rate_sweep_is_decreasing() {
    let rows = run_sweep(&spec(
        SweepParam::LambdaR,
        &[0.1, 1.0, 10.0, 100.0],
        100,
        &[Policy::ReliabilityFirst],
    ))
    .unwrap();
    assert!(rows.windows(2).all(|w| w[0].f_solver > w[1].f_solver));
}

#[test]
fn fast_events_make_policies_coincide() {
    let rows = run_sweep(&spec(
        SweepParam::LambdaE,
        &[10.0, 100.0, 1000.0],
        100,
        &Policy::ALL,
    ))
    .unwrap();
    assert_eq!(rows.len(), 6);
    // Rows alternate policies within each grid point.
    assert_eq!(rows[4].params.policy, Policy::ReliabilityFirst);
    assert_eq!(rows[5].params.policy, Policy::FreshnessFirst);
    let (e, e_bar) = (rows[4].x1_solver, rows[5].x1_solver);
    assert!((e - e_bar).abs() / e <= 0.05);
}

#[test]
fn file_layout() {
    let rows = run_sweep(&spec(
        SweepParam::Lambda,
        &[0.01, 0.1, 1.0],
        20,
        &Policy::ALL,
    ))
    .unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    let expected = format!(
        "lambda,0.01,20,2,5,1,0.01,reliability,{},{},,,,,,,,",
        format_float(rows[0].f_solver),
        format_float(rows[0].x1_solver)
    );
    assert_eq!(lines.next().unwrap(), expected);
    assert!(lines
        .next()
        .unwrap()
        .starts_with("lambda,0.01,20,2,5,1,0.01,freshness,"));
    assert!(lines.next().unwrap().starts_with("lambda,0.1,20,"));
    assert_eq!(text.lines().count(), 1 + 6);
}

#[test]
fn csv_is_loss_free() {
    let mut sweep = spec(
        SweepParam::LambdaU,
        &[0.01, 0.3, 7.0, 100.0],
        15,
        &Policy::ALL,
    );
    sweep.sim = Some(SimSettings {
        horizon: 200.0,
        warmup: 2.0,
        seed: 42,
        replications: 2,
    });
    let rows = run_sweep(&sweep).unwrap();

    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());

    for (orig, row) in rows.iter().zip(&back) {
        assert_eq!(row.params, orig.params);
        assert_eq!(row.swept_param, "lambda_u");
        assert_eq!(row.swept_value, orig.swept_value);
        let sim = row.sim.expect("simulation columns present");
        assert_eq!((sim.seed, sim.replications), (42, 2));
        assert_eq!((sim.horizon, sim.warmup), (200.0, 2.0));

        let again = solve(&row.params).unwrap();
        assert!((again.f_value - row.f_solver).abs() <= 1e-9);
        assert!((again.x1_value - row.x1_solver).abs() <= 1e-9 * again.x1_value.max(1.0));
    }
}

#[test]
fn solver_only_rows_have_empty_sim_fields() {
    let rows = run_sweep(&spec(SweepParam::N, &[3.0], 3, &[Policy::FreshnessFirst])).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let line = text.lines().nth(1).unwrap();
    assert!(line.starts_with("n,3,3,"));
    assert!(line.ends_with(",,,,,,,,"));
    assert!(read_csv(text.as_bytes()).unwrap()[0].sim.is_none());
}

#[test]
fn invalid_grid_points_are_rejected() {
    let bad = spec(SweepParam::N, &[0.5, 2.0], 3, &[Policy::ReliabilityFirst]);
    assert!(run_sweep(&bad).is_err());
}
