use std::collections::BTreeMap;

use kservice_core::instances::{gen_bad_instance, gen_random, BadInstanceParams, GenMode, RandomSpec};
use kservice_core::io::{load_instance, load_solution, save_instance, save_json, InstanceFile, SolutionFile};
use kservice_core::partition::ConstraintSpec;
use kservice_core::sampling::substream;
use kservice_core::solver::{solve, SolveOptions};
use kservice_core::{AlgorithmParams, MetricInstance};

fn all_distances(inst: &MetricInstance) -> Vec<f64> {
    let pts: Vec<usize> = inst.clients().iter().chain(inst.facilities()).copied().collect();
    pts.iter().flat_map(|&a| pts.iter().map(move |&b| inst.dist(a, b))).collect()
}

#[test]
fn euclidean_round_trip() {
    let coords: BTreeMap<usize, Vec<f64>> =
        [(0, vec![0.1, 0.2]), (1, vec![3.3, -1.0]), (2, vec![1e-7, 5.0]), (3, vec![2.0, 2.0]), (4, vec![9.5, 0.0])].into();
    let inst = MetricInstance::from_coords(vec![0, 1, 2], vec![3, 4], &coords, 2.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.json");
    save_instance(&path, &inst, Some(ConstraintSpec::RGather { r: vec![1, 2] }), None).unwrap();
    let (back, file) = load_instance(&path).unwrap();
    for (a, b) in all_distances(&inst).iter().zip(all_distances(&back)) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(file.constraint, Some(ConstraintSpec::RGather { r: vec![1, 2] }));
    // canonical form is a fixed point
    let again = InstanceFile::from_instance(&back, file.constraint.clone(), None);
    assert_eq!(again, file);
}

#[test]
fn graph_round_trip_preserves_shortest_paths() {
    let b = gen_bad_instance(&BadInstanceParams::new(2, 3, 0.1, 1.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    save_instance(&path, &b.instance, None, Some(serde_json::to_value(b.params).unwrap())).unwrap();
    let (back, file) = load_instance(&path).unwrap();
    assert_eq!(all_distances(&back), all_distances(&b.instance));
    let params: BadInstanceParams = serde_json::from_value(file.meta.unwrap()).unwrap();
    assert_eq!(params, b.params);
}

#[test]
fn matrix_round_trip() {
    let inst = gen_random(&RandomSpec { mode: GenMode::Matrix, ..RandomSpec::new(5, 3) }, &mut substream(2, &[])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_instance(&path, &inst, None, None).unwrap();
    assert_eq!(load_instance(&path).unwrap().0, inst);
}

#[test]
fn malformed_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"ell\": 1,\n  \"mode\": \"matrix\",\n  \"clients\": [0],\n  \"facilities\": [0],\n  \"matrix\": [[0, \"a\"]]\n}").unwrap();
    let msg = load_instance(&path).unwrap_err().to_string();
    assert!(msg.contains("matrix[0][1]") && msg.contains("line 6"), "{msg}");
}

#[test]
fn solution_file_round_trip() {
    let inst = gen_random(&RandomSpec::new(6, 4), &mut substream(8, &[])).unwrap();
    let params = AlgorithmParams::practical(2, 0.5).unwrap().with_eta(5);
    let sol = solve(&inst, 2, &ConstraintSpec::Outlier { m: 1 }, &params, 3, &SolveOptions::default()).unwrap();
    let file = SolutionFile::from_solution(&inst, &sol, serde_json::Map::new());
    assert_eq!(file.excluded.len(), 1);
    assert_eq!(file.assignment.len(), 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    save_json(&path, &file).unwrap();
    assert_eq!(load_solution(&path).unwrap(), file);
}
