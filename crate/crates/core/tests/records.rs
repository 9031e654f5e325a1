use actsafe::mtc::{
    read_records, write_records, ActivityVocabulary, ClockTime, Count, DayPart, DependencyPrep, IntervalPrep, Mtc,
    OccurrencePrep, TimeStamp, TimeUnit,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = TimeUnit> {
    prop::sample::select(vec![TimeUnit::Minute, TimeUnit::Hour, TimeUnit::Day, TimeUnit::Week])
}

fn count() -> impl Strategy<Value = Count> {
    (1u32..500).prop_map(|n| Count::new(n).unwrap())
}

fn dp() -> impl Strategy<Value = DependencyPrep> {
    prop::sample::select(vec![DependencyPrep::Before, DependencyPrep::After])
}

fn act() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["eating", "sleeping", "exercise", "wake_up", "drive"]).prop_map(String::from)
}

fn stamp() -> impl Strategy<Value = TimeStamp> {
    prop_oneof![
        Just(TimeStamp::SameTime),
        (0u16..1440).prop_map(|m| TimeStamp::Clock(ClockTime::new(m).unwrap())),
    ]
}

fn prep() -> impl Strategy<Value = OccurrencePrep> {
    prop::sample::select(vec![OccurrencePrep::At, OccurrencePrep::In])
}

fn leaf() -> impl Strategy<Value = Mtc> {
    prop_oneof![
        (count(), unit(), dp(), act()).prop_map(|(n, u, dp, act)| Mtc::DefinitiveDependency { n, u, dp, act }),
        (count(), unit()).prop_map(|(n, u)| Mtc::Frequency { n, u }),
        (
            count(),
            unit(),
            prop::sample::select(vec![IntervalPrep::Within, IntervalPrep::For, IntervalPrep::Apart])
        )
            .prop_map(|(n, u, ip)| Mtc::Interval { n, u, ip }),
        (dp(), act()).prop_map(|(dp, act)| Mtc::ImpreciseDependency { dp, act }),
        (dp(), stamp()).prop_map(|(dp, t)| Mtc::ImpreciseTimeDependency { dp, t }),
        (prep(), stamp(), unit()).prop_map(|(p, t, u)| Mtc::Consistency { p, t, u }),
        (prep(), prop::sample::select(DayPart::ALL.to_vec())).prop_map(|(p, d)| Mtc::TimeOfDay { p, d }),
    ]
}

fn mtc() -> impl Strategy<Value = Mtc> {
    prop_oneof![
        4 => leaf(),
        1 => prop::collection::vec(leaf(), 2..5).prop_map(|items| Mtc::Compound { items }),
        1 => (dp(), act()).prop_map(|(dp, act)| Mtc::Negated {
            inner: Box::new(Mtc::ImpreciseDependency { dp, act })
        }),
    ]
}

proptest! {
    #[test]
    fn record_round_trip(m in mtc()) {
        prop_assert_eq!(Mtc::from_record(&m.to_record()).unwrap(), m);
    }

    #[test]
    fn record_file_round_trip(ms in prop::collection::vec(mtc(), 0..8)) {
        prop_assert_eq!(read_records(&write_records(&ms)).unwrap(), ms);
    }

    #[test]
    fn canonicalize_is_idempotent(m in mtc()) {
        let vocab = ActivityVocabulary::default_rhb();
        let once = m.canonicalize(&vocab, false).unwrap();
        prop_assert_eq!(once.canonicalize(&vocab, false).unwrap(), once);
    }

    #[test]
    fn synonyms_map_to_canonical_names(i in 0usize..1000, n in count(), u in unit(), dp in dp()) {
        let vocab = ActivityVocabulary::default_rhb();
        let surfaces: Vec<(String, String)> =
            vocab.surfaces().map(|(s, c)| (s.to_uppercase(), c.to_string())).collect();
        let (surface, canonical) = surfaces[i % surfaces.len()].clone();
        let raw = Mtc::DefinitiveDependency { n, u, dp, act: surface };
        let want = Mtc::DefinitiveDependency { n, u, dp, act: canonical };
        prop_assert_eq!(raw.canonicalize(&vocab, true).unwrap(), want);
    }
}

#[test]
fn nested_compound_flattens() {
    let vocab = ActivityVocabulary::default_rhb();
    let v2 = Mtc::Frequency { n: Count::new(3).unwrap(), u: TimeUnit::Day };
    let v3 = Mtc::Interval { n: Count::new(6).unwrap(), u: TimeUnit::Hour, ip: IntervalPrep::Apart };
    let nested = Mtc::Compound {
        items: vec![Mtc::Compound { items: vec![v2.clone(), v3.clone()] }, v3.clone()],
    };
    assert_eq!(nested.canonicalize(&vocab, false).unwrap(), Mtc::Compound { items: vec![v2, v3] });
}
