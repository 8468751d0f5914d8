use qbsde::generators::{classify_assumptions, gallery, CaseLabel, GalleryParams, SamplePlan};

fn plan() -> SamplePlan {
    SamplePlan { count: 2048, pairs: 1024, ..SamplePlan::default() }
}

#[test]
fn burgers_components_sit_in_case_ii() {
    for d in [2, 3, 4] {
        let v = classify_assumptions(&gallery("burgers", d, &GalleryParams::new()).unwrap(), &plan()).unwrap();
        assert_eq!(v.components.len(), d);
        for c in &v.components {
            assert_eq!(c.c1b.label, CaseLabel::C1bii, "d = {d}, component {}", c.component);
            assert!(c.c1b.margin >= 0.0);
        }
    }
}

#[test]
fn mixed_example_gold_labels() {
    let v = classify_assumptions(&gallery("ex2.7(iv)", 2, &GalleryParams::new()).unwrap(), &plan()).unwrap();
    let labels: Vec<&str> = v.labels("C1b").iter().map(|l| l.as_str()).collect();
    assert_eq!(labels, ["C1b(i)", "C1b(i)", "C1b(ii)", "C1b(iii)", "C1b(iii)"]);
    assert_eq!(v.c1b_sets.j1, vec![1, 2]);
    assert_eq!(v.c1b_sets.j2, vec![3]);
    assert_eq!(v.c1b_sets.j3, vec![4, 5]);
}

#[test]
fn zero_generator_passes_every_family() {
    let v = classify_assumptions(&gallery("zero", 1, &GalleryParams::new()).unwrap(), &plan()).unwrap();
    for c in &v.components {
        assert!(c.b1.satisfied() && c.c1a.satisfied() && c.c1b.satisfied() && c.d1.satisfied());
    }
    assert!(v.b2.satisfied && v.b2.coincident_exact);
    assert!(v.d2.satisfied);
}

#[test]
fn verdicts_are_reproducible() {
    let spec = gallery("(2.5b)", 2, &GalleryParams::new()).unwrap();
    let a = classify_assumptions(&spec, &plan()).unwrap();
    let b = classify_assumptions(&spec, &plan()).unwrap();
    assert_eq!(a.labels("B1"), b.labels("B1"));
    assert_eq!(a.b2.worst_margin.to_bits(), b.b2.worst_margin.to_bits());
}
