use pdgo::io::{read_problem, write_problem};
use pdgo::pipeline::{run_pipeline, PipelineConfig};
use pdgo::problems::{generate, GeneratorSpec};
use pdgo::trace::{read_csv, read_metadata, write_csv, write_metadata};
use pdgo::ConstraintKind;

#[test]
fn problem_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("problem.json");
    let p = generate(&GeneratorSpec::new(60, 30, ConstraintKind::Inequality, 2)).unwrap();
    write_problem(&path, &p).unwrap();
    assert_eq!(read_problem(&path).unwrap(), p);
}

#[test]
fn trace_and_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = generate(&GeneratorSpec::new(6, 3, ConstraintKind::Equality, 1)).unwrap();
    let out = run_pipeline(&p, &PipelineConfig::default()).unwrap();
    let csv = dir.path().join("trace.csv");
    let meta = dir.path().join("trace.json");
    write_csv(&csv, &out.trace.rows).unwrap();
    write_metadata(&meta, &out.trace.metadata).unwrap();
    assert_eq!(read_csv(&csv).unwrap(), out.trace.rows);
    assert_eq!(read_metadata(&meta).unwrap(), out.trace.metadata);
}

#[test]
fn missing_file_error_names_path() {
    let err = read_problem(std::path::Path::new("/nonexistent/problem.json")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/problem.json"));
}
