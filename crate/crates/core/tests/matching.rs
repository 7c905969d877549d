use orbitmatch_core::matching::{
    apply_encoder, encoded_optimum_is_aligned, lcs_encoded, lcs_k_bruteforce, lcs_k_fast, lcs_k_fast_witness,
    scrabble_vn, scrabble_vn_bruteforce, scrabble_vn_window, Window,
};
use orbitmatch_core::{EncoderSpec, SymbolSequence};
use proptest::prelude::*;

fn sequences(max_k: usize, max_len: usize) -> impl Strategy<Value = (Vec<SymbolSequence>, usize)> {
    (2usize..=max_k, 1usize..=max_len, 2usize..=4).prop_flat_map(|(k, len, a)| {
        (
            prop::collection::vec(prop::collection::vec(0..a as u8, len), k),
            1..=len,
        )
            .prop_map(move |(raw, n)| {
                let seqs = raw
                    .into_iter()
                    .map(|s| SymbolSequence::new(s, a).unwrap())
                    .collect();
                (seqs, n)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fast_equals_bruteforce((seqs, n) in sequences(4, 40)) {
        let w = lcs_k_fast_witness(&seqs, n).unwrap();
        prop_assert_eq!(w.len, lcs_k_bruteforce(&seqs, n).unwrap());
        prop_assert!(w.verify(&seqs, n));
    }

    #[test]
    fn witness_is_smallest_word((seqs, n) in sequences(3, 24)) {
        let w = lcs_k_fast_witness(&seqs, n).unwrap();
        let m = w.len;
        if m > 0 {
            // Every common word of length m is at least the witness.
            for i in 0..=n - m {
                let word = &seqs[0].symbols()[i..i + m];
                let common = seqs.iter().all(|s| (0..=n - m).any(|j| &s.symbols()[j..j + m] == word));
                if common {
                    prop_assert!(w.word.as_slice() <= word);
                }
            }
        }
    }

    #[test]
    fn monotone_in_n((seqs, n) in sequences(3, 40)) {
        let mut prev = 0;
        for i in 1..=n {
            let m = lcs_k_fast(&seqs, i).unwrap();
            prop_assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn permutation_and_duplication((seqs, n) in sequences(4, 40)) {
        let m = lcs_k_fast(&seqs, n).unwrap();
        let mut rev = seqs.clone();
        rev.reverse();
        prop_assert_eq!(lcs_k_fast(&rev, n).unwrap(), m);
        let mut dup = seqs.clone();
        dup.push(seqs[0].clone());
        prop_assert_eq!(lcs_k_fast(&dup, n).unwrap(), m);
    }

    #[test]
    fn scrabble_matches_oracle((seqs, n) in sequences(3, 20), w in prop::collection::vec(1u32..4, 4)) {
        let weights = &w[..seqs[0].alphabet()];
        for window in [Window::Original, Window::Encoded] {
            let needed = if window == Window::Encoded { n } else { 0 };
            let long_enough = seqs.iter().all(|s| s.symbols().iter().map(|&c| weights[usize::from(c)] as usize).sum::<usize>() >= needed);
            if long_enough {
                prop_assert_eq!(
                    scrabble_vn_window(&seqs, weights, n, window).unwrap(),
                    scrabble_vn_bruteforce(&seqs, weights, n, window).unwrap()
                );
            }
        }
        let v = scrabble_vn(&seqs, weights, n).unwrap();
        let min = *weights.iter().min().unwrap() as usize;
        prop_assert!(v >= min * lcs_k_fast(&seqs, n).unwrap());
    }

    #[test]
    fn unit_weights_give_lcs((seqs, n) in sequences(3, 40)) {
        let ones = vec![1; seqs[0].alphabet()];
        prop_assert_eq!(scrabble_vn(&seqs, &ones, n).unwrap(), lcs_k_fast(&seqs, n).unwrap());
        let enc = EncoderSpec::LetterRepetition { weights: ones };
        prop_assert_eq!(lcs_encoded(&enc, &seqs, n).unwrap(), lcs_k_fast(&seqs, n).unwrap());
        prop_assert_eq!(lcs_encoded(&EncoderSpec::Identity, &seqs, n).unwrap(), lcs_k_fast(&seqs, n).unwrap());
    }

    #[test]
    fn encoded_window_identity(raw in prop::collection::vec(prop::collection::vec(0u8..2, 24), 2), v1 in 1u32..4, n in 1usize..=24) {
        let weights = [1, v1];
        let seqs: Vec<SymbolSequence> = raw.into_iter().map(|s| SymbolSequence::new(s, 2).unwrap()).collect();
        let enc = EncoderSpec::LetterRepetition { weights: weights.to_vec() };
        let mf = lcs_encoded(&enc, &seqs, n).unwrap();
        let v = scrabble_vn_window(&seqs, &weights, n, Window::Encoded).unwrap();
        prop_assert!(v <= mf);
        if encoded_optimum_is_aligned(&seqs, &weights, n).unwrap() {
            prop_assert_eq!(v, mf);
        }
    }
}

#[test]
fn encoded_bruteforce_agrees() {
    let seqs = [
        SymbolSequence::from_digits("0110100111", 2).unwrap(),
        SymbolSequence::from_digits("1101001100", 2).unwrap(),
    ];
    let enc = EncoderSpec::LetterRepetition { weights: vec![1, 2] };
    let encoded: Vec<SymbolSequence> = seqs.iter().map(|s| apply_encoder(&enc, s).unwrap()).collect();
    for n in 1..=12 {
        assert_eq!(
            lcs_encoded(&enc, &seqs, n).unwrap(),
            lcs_k_bruteforce(&encoded, n).unwrap()
        );
    }
}

#[test]
fn identical_encodings_match_fully() {
    let x = SymbolSequence::from_digits("0110101", 2).unwrap();
    let enc = EncoderSpec::LetterRepetition { weights: vec![1, 2] };
    let n = apply_encoder(&enc, &x).unwrap().len();
    assert_eq!(lcs_encoded(&enc, &[x.clone(), x], n).unwrap(), n);
}

#[test]
fn reads_sequences_from_byte_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seq.bin");
    std::fs::write(&path, [0u8, 1, 2, 1, 0]).unwrap();
    let s = SymbolSequence::read(&path, 3).unwrap();
    assert_eq!(s.symbols(), &[0, 1, 2, 1, 0]);
    assert!(SymbolSequence::read(&path, 2).is_err());
    assert!(SymbolSequence::read(dir.path().join("missing"), 2).is_err());
}
