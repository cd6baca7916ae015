use ndarray::Array2;
use pmean::{lookup_sequence, read_text_embeddings, EmbeddingSpace, OovPolicy};
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = EmbeddingSpace> {
    (1usize..12, 1usize..6).prop_flat_map(|(n, d)| {
        prop::collection::vec(-1e3f64..1e3, n * d).prop_map(move |values| {
            let words = (0..n).map(|i| format!("tok{i}")).collect();
            EmbeddingSpace::new("s", words, Array2::from_shape_vec((n, d), values).unwrap())
                .unwrap()
        })
    })
}

fn text_of(space: &EmbeddingSpace) -> String {
    let mut buf = Vec::new();
    space.write_text(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

proptest! {
    #[test]
    fn write_then_read_round_trips(space in space_strategy()) {
        let (back, report) = read_text_embeddings(text_of(&space).as_bytes(), "s", Some(space.dim())).unwrap();
        prop_assert!(report.header);
        prop_assert_eq!(back.words(), space.words());
        for (a, b) in back.matrix().iter().zip(space.matrix()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn skip_keeps_one_row_per_known_token(
        space in space_strategy(),
        picks in prop::collection::vec(0usize..20, 0..15),
    ) {
        // indices past the vocabulary become unknown tokens
        let tokens: Vec<String> = picks.iter().map(|i| format!("tok{i}")).collect();
        let known = picks.iter().filter(|&&i| i < space.len()).count();
        let lookup = lookup_sequence(&space, &tokens, OovPolicy::Skip);
        prop_assert_eq!(lookup.oov, tokens.len() - known);
        if known == 0 {
            prop_assert!(lookup.fallback);
            prop_assert_eq!(lookup.matrix.nrows(), 1);
        } else {
            prop_assert!(!lookup.fallback);
            prop_assert_eq!(lookup.matrix.nrows(), known);
        }
        let zero = lookup_sequence(&space, &tokens, OovPolicy::ZeroVector);
        prop_assert_eq!(zero.matrix.nrows(), tokens.len().max(1));
    }

    #[test]
    fn line_order_does_not_change_lookups(
        space in space_strategy(),
        seed in any::<u64>(),
        picks in prop::collection::vec(0usize..12, 1..10),
    ) {
        use rand::seq::SliceRandom;
        let text = text_of(&space);
        let mut lines: Vec<&str> = text.lines().skip(1).collect();
        lines.shuffle(&mut pmean::synth::rng(seed));
        let shuffled = lines.join("\n");
        let (a, _) = read_text_embeddings(text.as_bytes(), "a", None).unwrap();
        let (b, _) = read_text_embeddings(shuffled.as_bytes(), "b", None).unwrap();
        let tokens: Vec<String> = picks.iter().map(|i| format!("tok{i}")).collect();
        for policy in [OovPolicy::Skip, OovPolicy::ZeroVector] {
            prop_assert_eq!(lookup_sequence(&a, &tokens, policy), lookup_sequence(&b, &tokens, policy));
        }
    }
}

#[test]
fn file_loader_names_space_and_errors_after_path() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("glove.txt");
    std::fs::write(&good, "2 2\nthe 0.1 0.2\ncat 1 2\n").unwrap();
    let (space, report) = pmean::load_text_embeddings(&good, Some(2)).unwrap();
    assert_eq!(space.name(), "glove");
    assert!(report.header);

    let bad = dir.path().join("ragged.txt");
    std::fs::write(&bad, "the 0.1 0.2\ncat 1\n").unwrap();
    let err = pmean::load_text_embeddings(&bad, None).unwrap_err();
    assert!(err.is_input_error());
    let msg = err.to_string();
    assert!(msg.contains("ragged.txt:2"), "{msg}");

    let missing = pmean::load_text_embeddings(dir.path().join("nope.txt"), None).unwrap_err();
    assert!(matches!(missing, pmean::Error::Io { .. }));
}
