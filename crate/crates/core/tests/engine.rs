mod common;

use std::collections::BTreeMap;

use deliberate::agents::rubric::{Rubric, RubricBackend};
use deliberate::agents::scripted::{AlwaysFail, AlwaysPass, PassOnRound};
use deliberate::agents::{Paired, Perspective, Severity};
use deliberate::canonical::to_canonical_string;
use deliberate::engine::{display_score, recommend, reweight, run_case, EngineError, WeightVector};
use deliberate::host::{default_hosts, CountryCode};
use deliberate::synth::{generate, SynthConfig};

use common::*;

fn code(c: &str) -> CountryCode {
    CountryCode::new(c).unwrap()
}

#[test]
fn worked_cases_fuse_exactly() {
    let backend = case_study_backend();
    let hosts = default_hosts();
    for (id, host, fused, shown) in [("case-1", "DEU", 8.92, "8.9"), ("case-2", "CAN", 8.78, "8.7"), ("case-3", "USA", 7.1, "7.1")] {
        let d = run_case(&case_study(id), &hosts, &WeightVector::default(), &backend, 3).unwrap();
        assert_eq!(d.fused_scores[&code(host)], fused, "{id}");
        assert_eq!(display_score(d.fused_scores[&code(host)]), shown, "{id}");
        assert_eq!(d.recommendation, code(host), "{id}");
        assert!(d.fully_converged);
        assert_eq!(d.assessments.len(), 15);
    }
}

#[test]
fn explanation_keeps_every_statement_in_fixed_order() {
    let d = run_case(&case_study("case-1"), &default_hosts(), &WeightVector::default(), &case_study_backend(), 3).unwrap();
    let e = &d.explanations[&code("DEU")];
    let order: Vec<Perspective> = e.blocks.iter().map(|b| b.perspective).collect();
    assert_eq!(order, Perspective::FUSION_ORDER);
    for block in &e.blocks {
        let a = d.assessment(&code("DEU"), block.perspective).unwrap();
        assert_eq!(block.statements, a.rationale.statements);
        assert_eq!(block.score, a.score);
    }
    let text = e.render();
    for block in &e.blocks {
        for st in &block.statements {
            assert!(text.contains(&st.text));
        }
    }
}

#[test]
fn reweighting_uses_stored_scores() {
    let hosts = default_hosts();
    let backend = case_study_backend();
    let d3 = run_case(&case_study("case-3"), &hosts, &WeightVector::default(), &backend, 3).unwrap();
    let equal = reweight(&d3, &WeightVector::equal()).unwrap();
    assert_eq!(equal.fused_scores[&code("USA")], 7.0);
    assert_eq!(equal.assessments, d3.assessments);
    assert!(equal.override_.is_none());

    let same = reweight(&d3, &d3.weights).unwrap();
    assert_eq!((same.fused_scores, same.recommendation), (d3.fused_scores.clone(), d3.recommendation.clone()));

    let d1 = run_case(&case_study("case-1"), &hosts, &WeightVector::default(), &backend, 3).unwrap();
    let cultural_only = reweight(&d1, &WeightVector::new(1.0, 0.0, 0.0).unwrap()).unwrap();
    assert_eq!(cultural_only.fused_scores[&code("DEU")], 9.1);

    assert!(matches!(
        reweight(&d1, &WeightVector { cultural: 0.5, emotional: 0.5, ethical: 0.5 }),
        Err(EngineError::InvalidWeights(_))
    ));
}

#[test]
fn scripted_validators_drive_the_loop() {
    let pop = generate(&SynthConfig::new(12, 3)).unwrap().profiles;
    let hosts = default_hosts();
    let w = WeightVector::default();
    let rubric = || RubricBackend::new(Rubric::default()).unwrap();

    let pass = Paired::new("pass", rubric(), AlwaysPass);
    let fail = Paired::new("fail", rubric(), AlwaysFail);
    let second = Paired::new("second", rubric(), PassOnRound(2));
    for p in &pop {
        let d = run_case(p, &hosts, &w, &pass, 3).unwrap();
        assert!(d.assessments.iter().all(|a| a.iterations_used == 1 && a.converged && a.proposed_scores.len() == 1));

        let d = run_case(p, &hosts, &w, &fail, 3).unwrap();
        assert!(!d.fully_converged && d.needs_review);
        for a in &d.assessments {
            assert_eq!((a.iterations_used, a.converged), (3, false));
            // the selector also answers the third rejection
            assert_eq!(a.proposed_scores.len(), 4);
            assert_eq!(a.verdicts.len(), 3);
            assert!(a.verdicts.iter().all(|v| v.severity == Severity::Minor));
        }

        let d = run_case(p, &hosts, &w, &second, 3).unwrap();
        for a in &d.assessments {
            assert_eq!(a.iterations_used, 2);
            assert!(!a.verdicts[0].is_pass() && a.verdicts[1].is_pass());
        }
    }
}

#[test]
fn rubric_run_is_reproducible() {
    let backend = RubricBackend::new(Rubric::default()).unwrap();
    let p = case_study("case-2");
    let a = run_case(&p, &default_hosts(), &WeightVector::default(), &backend, 3).unwrap();
    let b = run_case(&p, &default_hosts(), &WeightVector::default(), &backend, 3).unwrap();
    assert_eq!(to_canonical_string(&a), to_canonical_string(&b));
    assert!(a.fully_converged, "rubric output self-validates");
}

#[test]
fn eligibility_and_candidates() {
    let backend = RubricBackend::new(Rubric::default()).unwrap();
    let w = WeightVector::default();
    let minors: Vec<_> = load_profiles("mixed_ages.csv").into_iter().filter(|p| p.demo.age < Some(15)).collect();
    assert_eq!(minors.len(), 2);
    for p in &minors {
        let err = run_case(p, &default_hosts(), &w, &backend, 3).unwrap_err();
        assert!(matches!(err.error, EngineError::IneligibleProfile { .. }));
    }
    let adult = case_study("case-1");
    assert!(matches!(run_case(&adult, &[], &w, &backend, 3).unwrap_err().error, EngineError::EmptyCandidateSet));
    let single = run_case(&adult, &default_hosts()[..1], &w, &backend, 3).unwrap();
    assert_eq!(single.assessments.len(), 3);
    assert_eq!(single.recommendation, default_hosts()[0].country);
}

#[test]
fn ties_go_to_the_smallest_code() {
    let fused: BTreeMap<CountryCode, f64> = ["USA", "SWE", "DEU", "CAN", "AUS"].iter().map(|c| (code(c), 7.5)).collect();
    assert_eq!(recommend(&fused).unwrap(), code("AUS"));
    assert!(matches!(recommend(&BTreeMap::new()), Err(EngineError::EmptyCandidateSet)));
}

#[test]
fn recorded_remote_exchanges_replay_the_worked_cases() {
    use deliberate::agents::remote::{RemoteBackend, RemoteConfig, ReplayTransport};
    let replay = ReplayTransport::open(&fixture("case_studies.replay.jsonl")).unwrap();
    assert_eq!(replay.len(), 45);
    let backend = RemoteBackend::new(replay, RemoteConfig::new("replay"));
    for (id, host, fused) in [("case-1", "DEU", 8.92), ("case-2", "CAN", 8.78), ("case-3", "USA", 7.1)] {
        let d = run_case(&case_study(id), &default_hosts(), &WeightVector::default(), &backend, 3).unwrap();
        assert_eq!((d.recommendation.clone(), d.fused_scores[&code(host)]), (code(host), fused));
        assert_eq!(d.backend.name, "remote");
    }
}
