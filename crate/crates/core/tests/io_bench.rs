use sampled_mip::bench::{check_reports, report_csv, run_benchmark, spec_hash, BenchConfig, Method};
use sampled_mip::io::*;
use sampled_mip::learn::{generate_training_data, train, TrainConfig};
use sampled_mip::mip::MipOptions;
use sampled_mip::problems::{make_random_milp, FamilySpec, RandomMilpSpec, UnitCommitmentSpec};
use sampled_mip::scenario::build_sampled_problem;
use sampled_mip::sequential::{solve_sequential, SeqOptions};
use sampled_mip::Error;

fn desk_problem(n: usize) -> ProblemDocument {
    let spec = RandomMilpSpec::desk(3);
    let model = make_random_milp::<f64>(&spec).unwrap();
    ProblemDocument {
        problem: build_sampled_problem(&model, n, 9).unwrap(),
        source: Some(FamilySpec::Milp(spec)),
    }
}

#[test]
fn problem_round_trip_is_byte_identical() {
    let doc = desk_problem(30);
    let text = problem_to_json(&doc).unwrap();
    let back = problem_from_json(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(problem_to_json(&back).unwrap(), text);
    assert!(text.starts_with("{\"blocks\":[{"));
    assert!(text.contains(",\"format_version\":1,"));
    assert!(text.ends_with('\n'));
}

#[test]
fn uc_problem_round_trips_with_shared_rows() {
    let spec = UnitCommitmentSpec::default();
    let source = FamilySpec::Uc(spec);
    let model = source.build::<f64>().unwrap();
    let problem = build_sampled_problem(model.as_ref(), 5, 1).unwrap();
    let doc = ProblemDocument { problem, source: Some(source) };
    let text = problem_to_json(&doc).unwrap();
    assert_eq!(problem_from_json(&text).unwrap(), doc);
}

#[test]
fn solution_round_trip_is_byte_identical() {
    let doc = desk_problem(40);
    let (solution, basis, _) = solve_sequential(&doc.problem, &SeqOptions::default()).unwrap();
    let sol = SolutionDocument { method: "seq".into(), solution, basis };
    let text = solution_to_json(&sol).unwrap();
    let back = solution_from_json(&text).unwrap();
    assert_eq!(back, sol);
    assert_eq!(solution_to_json(&back).unwrap(), text);
}

#[test]
fn model_round_trip_preserves_predictions_bit_for_bit() {
    let spec = RandomMilpSpec::desk(4);
    let model = make_random_milp::<f64>(&spec).unwrap();
    let (ts, dict) = generate_training_data(&model, 60, 2, &MipOptions::default()).unwrap();
    let cfg = TrainConfig { hidden_width: 8, epochs: 3, batch_size: 16, ..TrainConfig::desk(5) };
    let (net, metrics) = train(&ts, &dict, &cfg).unwrap();
    let doc = ModelDocument { net, dict, config: cfg, family: Some(FamilySpec::Milp(spec)), metrics: Some(metrics) };
    let text = model_to_json(&doc).unwrap();
    let back = model_from_json(&text).unwrap();
    assert_eq!(model_to_json(&back).unwrap(), text);
    for q in &ts.q {
        let a = doc.net.forward(q).unwrap();
        let b = back.net.forward(q).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back.net.layers(), doc.net.layers());
    assert_eq!((back.net.shift(), back.net.scale()), (doc.net.shift(), doc.net.scale()));
    assert_eq!((&back.dict, &back.config, &back.family, &back.metrics), (&doc.dict, &doc.config, &doc.family, &doc.metrics));
}

fn schema_field(text: &str) -> String {
    match problem_from_json(text) {
        Err(Error::Schema { field, .. }) => field,
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn malformed_problems_name_the_field() {
    let text = problem_to_json(&desk_problem(4)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();

    let mut bad = v.clone();
    bad["d_r"] = 5.into();
    assert_eq!(schema_field(&bad.to_string()), "lower");

    let mut bad = v.clone();
    bad["blocks"][2]["rows"][1]["a"].as_array_mut().unwrap().pop();
    assert_eq!(schema_field(&bad.to_string()), "blocks[2].rows[1].a");

    let mut bad = v.clone();
    bad["format_version"] = 7.into();
    assert_eq!(schema_field(&bad.to_string()), "format_version");

    v.as_object_mut().unwrap().remove("format_version");
    assert_eq!(schema_field(&v.to_string()), "format_version");
}

#[test]
fn trace_csv_has_one_line_per_iteration() {
    let doc = desk_problem(60);
    let (_, _, trace) = solve_sequential(&doc.problem, &SeqOptions::default()).unwrap();
    let csv = trace_csv(&trace).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,J,basis_size,violations"));
    assert_eq!(lines.count(), trace.records.len());
}

#[test]
fn paired_benchmark_rows_agree() {
    let family = FamilySpec::Milp(RandomMilpSpec::desk(0));
    let methods = [Method::Direct, Method::Seq];
    let cfg = BenchConfig {
        family: &family,
        ns: &[100],
        methods: &methods,
        seed: 0,
        seq: SeqOptions::default(),
        learned: None,
    };
    let reports = run_benchmark(&cfg).unwrap();
    assert_eq!(reports.len(), 1);
    let r = &reports[0];
    assert_eq!(r.rows.len(), 2);
    assert!(r.objectives_agree());
    assert_eq!(r.row(Method::Direct).unwrap().max_constraints_per_solve, 100);
    assert!(r.row(Method::Seq).unwrap().max_constraints_per_solve <= 29);
    assert_eq!(r.spec_hash, spec_hash(&family).unwrap());
    check_reports(&reports).unwrap();
    assert_eq!(report_csv(&reports).unwrap().lines().count(), 3);
}

#[test]
fn empty_method_list_gives_empty_rows() {
    let family = FamilySpec::Milp(RandomMilpSpec::desk(0));
    let cfg = BenchConfig {
        family: &family,
        ns: &[100, 200],
        methods: &[],
        seed: 0,
        seq: SeqOptions::default(),
        learned: None,
    };
    let reports = run_benchmark(&cfg).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.rows.is_empty()));
}

#[test]
fn learned_method_without_a_model_is_rejected() {
    let family = FamilySpec::Milp(RandomMilpSpec::desk(0));
    let cfg = BenchConfig {
        family: &family,
        ns: &[10],
        methods: &[Method::Learned],
        seed: 0,
        seq: SeqOptions::default(),
        learned: None,
    };
    assert!(matches!(run_benchmark(&cfg), Err(Error::InvalidModel(_))));
}

#[test]
fn spec_hash_tracks_parameters() {
    let a = FamilySpec::Milp(RandomMilpSpec::desk(0));
    let b = FamilySpec::Milp(RandomMilpSpec::desk(1));
    assert_ne!(spec_hash(&a).unwrap(), spec_hash(&b).unwrap());
    assert_eq!(spec_hash(&a).unwrap().len(), 64);
}

#[test]
fn partial_family_spec_takes_defaults() {
    let f: FamilySpec = serde_json::from_str(r#"{"family":"milp","spec":{"seed":4}}"#).unwrap();
    assert_eq!(f, FamilySpec::Milp(RandomMilpSpec { seed: 4, ..RandomMilpSpec::default() }));
}
