mod common;

use amrsum::amr::{parse_corpus, parse_penman, serialize_penman, CorpusError};
use common::*;

#[test]
fn every_fixture_graph_round_trips() {
    let graphs = fixture_graphs();
    assert!(graphs.len() >= 20);
    for g in &graphs {
        let text = serialize_penman(g).unwrap();
        let again = parse_penman(&text).unwrap();
        assert!(again.is_isomorphic(g), "{text}");
        again.validate().unwrap();
        assert_eq!(serialize_penman(&again).unwrap(), text);
    }
}

#[test]
fn malformed_input_is_reported() {
    for bad in ["(c / chase-01", "c / chase-01)", "(c chase-01)", "(c / chase-01 :ARG0)", ""] {
        assert!(parse_penman(bad).is_err(), "{bad:?}");
    }
    match parse_corpus("# ::doc a\n# ::snt x\n(c / chase-01\n") {
        Err(e @ CorpusError::Penman { .. }) | Err(e @ CorpusError::Malformed { .. }) => assert!(e.to_string().contains("`a`")),
        other => panic!("{other:?}"),
    }
}
