use std::time::Instant;

use mrkernel::mt::*;

#[test]
fn reference_subjects_earn_their_expected_labels() {
    let config = MtConfig::default();
    for s in reference_subjects() {
        let r = run_campaign(&s, &MetamorphicRelation::ALL, &config, 1).unwrap();
        for c in Category::ALL {
            assert_eq!(r.label(c), Some(s.expected(c)), "{} {c}", s.name());
        }
    }
}

#[test]
fn every_fault_breaks_a_category_its_reference_satisfies() {
    let config = MtConfig::default();
    let faults = fault_subjects();
    assert!(faults.len() >= 5);
    for s in &faults {
        let r = run_campaign(s, &MetamorphicRelation::ALL, &config, 1).unwrap();
        let broken = Category::ALL
            .into_iter()
            .filter(|&c| s.expected(c) && r.label(c) == Some(false))
            .count();
        assert!(broken > 0, "{} passes everything", s.name());
    }
}

#[test]
fn campaigns_finish_quickly_and_reproducibly() {
    let started = Instant::now();
    let subjects: Vec<NativeSubject> = reference_subjects().into_iter().chain(fault_subjects()).collect();
    let refs: Vec<&dyn Subject> = subjects.iter().map(|s| s as &dyn Subject).collect();
    let config = MtConfig::default();
    let a = run_campaigns(&refs, &MetamorphicRelation::ALL, &config, 5).unwrap();
    let b = run_campaigns(&refs, &MetamorphicRelation::ALL, &config, 5).unwrap();
    assert!(started.elapsed().as_secs() < 30);
    assert_eq!(format_report(&a, &config), format_report(&b, &config));
}

#[test]
fn failures_carry_a_detail_and_passes_none() {
    let s = reference_subjects().into_iter().find(|s| s.name() == "subtract").unwrap();
    let r = run_campaign(&s, &MetamorphicRelation::ALL, &MtConfig::default(), 2).unwrap();
    for v in &r.verdicts {
        match &v.outcome {
            Outcome::Pass => assert!(v.detail().is_none()),
            Outcome::Fail(d) => assert!(!d.is_empty() && v.detail().is_some()),
            Outcome::Skip(_) => {}
        }
    }
    assert!(r.verdicts.iter().any(|v| !v.passed()));
}
