use tmlab_wasm::{kantorovich_curve_impl, lie_trotter_study_impl, mean_2x2_impl};

#[test]
fn curve_starts_at_one_and_hits_the_closed_form() {
    let c = kantorovich_curve_impl(1.0, 2.0, 2.0, 4).unwrap();
    assert_eq!(c.len(), 5);
    assert!((c[0] - 1.0).abs() < 1e-12);
    assert!((c[4] - 1.125).abs() < 1e-12);
    assert!(kantorovich_curve_impl(1.0, 2.0, 2.0, 0).is_err());
}

#[test]
fn geometric_mean_of_diagonals() {
    let m = mean_2x2_impl(&[4.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 9.0], "geometric").unwrap();
    assert!((m[0] - 2.0).abs() < 1e-12 && (m[3] - 3.0).abs() < 1e-12);
    assert!(m[1].abs() < 1e-12 && m[2].abs() < 1e-12);
    assert!((m[4] - 2.0).abs() < 1e-12 && (m[5] - 3.0).abs() < 1e-12);
}

#[test]
fn complex_off_diagonal_round_trips() {
    let x = [2.0, 0.3, -0.4, 1.5];
    let m = mean_2x2_impl(&x, &x, "square").unwrap();
    for (a, b) in m[..4].iter().zip(&x) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(mean_2x2_impl(&x, &[1.0], "square").is_err());
    assert!(mean_2x2_impl(&x, &x, "nope").is_err());
}

#[test]
fn study_json_has_the_expected_fields() {
    let s = lie_trotter_study_impl(&[0.5, 0.2, 0.1, -0.3], &[-0.4, 0.0, 0.3, 0.6], "geometric").unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["distances"].as_array().unwrap().len(), 8);
    assert_eq!(v["limit"].as_array().unwrap().len(), 4);
    assert!(v["final_relative_error"].as_f64().unwrap() < 1e-2);
}
