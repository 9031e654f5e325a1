use std::collections::BTreeMap;

use actsafe::extract::{
    enumerate_templates, evaluate_extraction, extract_from_guideline, match_statement, read_annotations,
    write_annotations,
};
use actsafe::mtc::{ActivityVocabulary, ClockTime, DayPart, DependencyPrep, Mtc, OccurrencePrep, TimeStamp};
use proptest::prelude::*;

const CORPUS: &str = include_str!("fixtures/extraction_corpus.jsonl");

const FILLER: [&str; 20] = [
    "keep", "the", "tablet", "dry", "read", "leaflet", "carefully", "ask", "your", "pharmacist", "rash", "report",
    "swallow", "whole", "water", "store", "away", "children", "light", "and",
];

proptest! {
    #[test]
    fn filler_never_matches(words in prop::collection::vec(prop::sample::select(FILLER.to_vec()), 1..25)) {
        let vocab = ActivityVocabulary::default_rhb();
        let templates = enumerate_templates(&vocab);
        prop_assert!(match_statement(&words.join(" "), &templates, &vocab, 0).is_empty());
    }

    #[test]
    fn phrase_survives_filler(
        pre in prop::collection::vec(prop::sample::select(FILLER.to_vec()), 0..8),
        post in prop::collection::vec(prop::sample::select(FILLER.to_vec()), 0..8),
    ) {
        let vocab = ActivityVocabulary::default_rhb();
        let templates = enumerate_templates(&vocab);
        let text = format!("{} in the morning before 9 AM {}", pre.join(" "), post.join(" "));
        let got: Vec<Mtc> = match_statement(&text, &templates, &vocab, 0).into_iter().map(|m| m.mtc).collect();
        prop_assert_eq!(got, vec![
            Mtc::TimeOfDay { p: OccurrencePrep::In, d: DayPart::Morning },
            Mtc::ImpreciseTimeDependency {
                dp: DependencyPrep::Before,
                t: TimeStamp::Clock(ClockTime::hm(9, 0).unwrap()),
            },
        ]);
    }
}

#[test]
fn corpus_annotations_round_trip_and_score_one() {
    let vocab = ActivityVocabulary::default_rhb();
    let templates = enumerate_templates(&vocab);
    let mut written = String::new();
    for line in CORPUS.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let matches = extract_from_guideline(v["text"].as_str().unwrap(), &templates, &vocab);
        written.push_str(&write_annotations(v["doc"].as_str().unwrap(), &matches));
    }
    let predicted = read_annotations(&written).unwrap();
    let gold = read_annotations(CORPUS).unwrap();
    assert_eq!(predicted.len(), 30);
    let report = evaluate_extraction(&predicted, &gold).unwrap();
    assert_eq!(report.micro.f1, 1.0, "{}", report.to_table());
}

#[test]
fn mismatched_corpora_are_rejected() {
    let gold = read_annotations(CORPUS).unwrap();
    let mut pred = gold.clone();
    pred.remove("s01");
    assert!(evaluate_extraction(&pred, &gold).is_err());
    assert!(evaluate_extraction(&BTreeMap::new(), &BTreeMap::new()).is_ok());
}
