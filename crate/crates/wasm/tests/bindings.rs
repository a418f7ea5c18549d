use qthermo_wasm::{beta_sweep_json, entropy_surface_json, solve_branches_json};
use serde_json::Value;

#[test]
fn beta_sweep_returns_one_point_per_step() {
    let v: Value = serde_json::from_str(&beta_sweep_json(&[0.5, 0.8], 0.3333, 0.0, 1.2, 7).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 7);
    assert!((pts[6]["beta"].as_f64().unwrap() - 1.2).abs() < 1e-12);
    assert!((pts[6]["pressure"].as_f64().unwrap() - 1.6895).abs() < 5e-4);
}

#[test]
fn entropy_surface_maximum_is_log_q_of_two() {
    let v: Value = serde_json::from_str(&entropy_surface_json(0.5, 20).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 19 * 19);
    let max: Vec<f64> = v["max"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!((max[0], max[1]), (0.5, 0.5));
    assert!((max[2] - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
}

#[test]
fn solve_branches_finds_memory_one_root() {
    let out = solve_branches_json(r#"{"d": 2, "memory": 1, "values": [2.0, 5.5]}"#, 0.5).unwrap();
    let v: Value = serde_json::from_str(&out).unwrap();
    let c = v["branches"][0]["c"].as_f64().unwrap();
    assert!((c - 5.75).abs() < 1e-8);
}

#[test]
fn invalid_input_is_reported() {
    assert!(solve_branches_json(r#"{"d": 2, "memory": 1, "values": []}"#, 0.5).is_err());
    assert!(solve_branches_json("not json", 0.5).is_err());
    assert!(entropy_surface_json(0.5, 1).is_err());
    assert!(beta_sweep_json(&[0.5], 0.5, 0.0, 1.0, 3).is_err());
}
