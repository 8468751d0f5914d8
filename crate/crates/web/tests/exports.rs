use qbsde_web::{gallery_json, local_constants_json, reciprocal_pair_json};

#[test]
fn gallery_lists_sorted_labels() {
    let v: serde_json::Value = serde_json::from_str(&gallery_json()).unwrap();
    let labels: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["label"].as_str().unwrap()).collect();
    let mut sorted = labels.clone();
    sorted.sort();
    assert_eq!(labels, sorted);
    assert!(labels.contains(&"burgers"));
}

#[test]
fn reciprocal_pair_reports_the_condition() {
    let v: serde_json::Value = serde_json::from_str(&reciprocal_pair_json(3.0, 1.5).unwrap()).unwrap();
    assert_eq!(v["reciprocal_condition"], true);
    let off: serde_json::Value = serde_json::from_str(&reciprocal_pair_json(3.0, 2.0).unwrap()).unwrap();
    assert_eq!(off["reciprocal_condition"], false);
    assert!(reciprocal_pair_json(0.0, 1.0).is_err());
}

#[test]
fn local_constants_round_trip_and_reject_p_one() {
    let v: serde_json::Value = serde_json::from_str(&local_constants_json(2, 1.0, 0.0, 0.0, 2.0, 0.5, 0.1, 1.0).unwrap()).unwrap();
    assert!(v["k"].as_f64().unwrap() > 0.0);
    assert!(local_constants_json(2, 1.0, 0.5, 0.0, 1.0, 0.5, 0.1, 1.0).is_err());
}
