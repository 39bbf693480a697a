use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sembed_core::corpus::{
    fold_assignment, generate_corpus, split_corpus, split_indices, Emotion, GenerateConfig, Lexicon, Synthesizer,
};
use sembed_core::dsp::{log_mel, FRAME_SHIFT, N_MELS};

fn clean_config(n: usize) -> GenerateConfig {
    GenerateConfig {
        num_sentences: n,
        noise_snr_db: None,
        seed: 21,
        ..GenerateConfig::default()
    }
}

/// Frame with its mean removed, so overall level does not enter the distance.
fn centred(frame: &[f64]) -> Vec<f64> {
    let m = frame.iter().sum::<f64>() / frame.len() as f64;
    frame.iter().map(|v| v - m).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[test]
fn nearest_template_recovers_aligned_phonemes() {
    let config = clean_config(60);
    let synth = Synthesizer::new(&config).unwrap();
    let n_ph = synth.lexicon.phonemes.len();
    // the generator rendering each phoneme on its own, per speaker
    let solo = Synthesizer {
        lexicon: Lexicon {
            phonemes: synth.lexicon.phonemes.clone(),
            words: (0..n_ph).map(|p| vec![p]).collect(),
        },
        speakers: synth.speakers.clone(),
    };
    let templates: Vec<Vec<Vec<f64>>> = (0..synth.speakers.len())
        .map(|spk| {
            (0..n_ph)
                .map(|p| {
                    let mut rng = ChaCha8Rng::seed_from_u64((spk * 100 + p) as u64);
                    let r = solo.render(&[p, p, p, p], spk, Emotion::Neutral, &mut rng, None).unwrap();
                    let mel = log_mel(&r.audio).unwrap();
                    let frames: Vec<Vec<f64>> = (0..mel.num_frames()).map(|t| centred(mel.frame(t))).collect();
                    (0..N_MELS)
                        .map(|c| frames.iter().map(|f| f[c]).sum::<f64>() / frames.len() as f64)
                        .collect()
                })
                .collect()
        })
        .collect();
    let labels = synth.lexicon.phoneme_labels();

    let (mut units, mut units_right, mut frames, mut frames_right) = (0, 0, 0, 0);
    for rec in generate_corpus(&config).unwrap() {
        let mel = log_mel(&rec.audio).unwrap();
        let tpl = &templates[rec.speaker_id];
        for unit in &rec.alignment.units {
            let mut votes = vec![0usize; n_ph];
            for t in unit.start..unit.end {
                let f = centred(mel.frame(t));
                let best = (0..n_ph).min_by(|a, b| dist(&f, &tpl[*a]).total_cmp(&dist(&f, &tpl[*b]))).unwrap();
                votes[best] += 1;
                frames += 1;
                frames_right += usize::from(labels[best] == unit.label);
            }
            let winner = (0..n_ph).max_by_key(|p| votes[*p]).unwrap();
            units += 1;
            units_right += usize::from(labels[winner] == unit.label);
        }
    }
    let unit_acc = units_right as f64 / units as f64;
    let frame_acc = frames_right as f64 / frames as f64;
    assert!(unit_acc >= 0.95, "aligned units {unit_acc:.3} (frames {frame_acc:.3})");
}

#[test]
fn pitch_slope_separates_every_pair_of_emotions() {
    let records = generate_corpus(&GenerateConfig {
        num_sentences: 500,
        max_words: 3,
        seed: 4,
        ..GenerateConfig::default()
    })
    .unwrap();
    let mut by_class: Vec<Vec<f64>> = vec![Vec::new(); 7];
    for r in &records {
        by_class[r.emotion.index()].push(r.pitch_slope_st);
    }
    let stats: Vec<(f64, f64, f64)> = by_class
        .iter()
        .map(|xs| {
            let n = xs.len() as f64;
            let m = xs.iter().sum::<f64>() / n;
            let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            (n, m, v)
        })
        .collect();
    for a in 0..7 {
        for b in a + 1..7 {
            let (na, ma, va) = stats[a];
            let (nb, mb, vb) = stats[b];
            assert!(na >= 10.0 && nb >= 10.0);
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
            let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
            assert!((ma - mb).abs() > 3.0 * se, "{:?} vs {:?}", Emotion::ALL[a], Emotion::ALL[b]);
        }
    }
}

#[test]
fn same_seed_gives_identical_corpora() {
    let config = GenerateConfig {
        num_sentences: 12,
        ..GenerateConfig::default()
    };
    let a = generate_corpus(&config).unwrap();
    let b = generate_corpus(&config).unwrap();
    assert_eq!(a, b);
    let other = generate_corpus(&GenerateConfig { seed: 1, ..config }).unwrap();
    assert_ne!(a[0].audio, other[0].audio);
}

#[test]
fn hundred_sentences_have_consistent_alignments() {
    let records = generate_corpus(&GenerateConfig {
        num_sentences: 100,
        max_words: 4,
        ..GenerateConfig::default()
    })
    .unwrap();
    assert_eq!(records.len(), 100);
    for r in &records {
        r.validate().unwrap();
        assert_eq!(r.alignment.len(), r.transcript.len());
        assert_eq!(r.word_alignment.len(), r.words().len());
        assert_eq!(r.alignment.units.last().unwrap().end, r.num_frames());
    }
}

#[test]
fn fast_emotion_is_four_fifths_of_neutral() {
    let config = GenerateConfig::default();
    let synth = Synthesizer::new(&config).unwrap();
    for seed in 0..5 {
        let words = [0, 3, 7, 1];
        let neutral = synth
            .render(&words, 2, Emotion::Neutral, &mut ChaCha8Rng::seed_from_u64(seed), None)
            .unwrap();
        let fast = synth.render(&words, 2, Emotion::Angry, &mut ChaCha8Rng::seed_from_u64(seed), None).unwrap();
        assert_eq!(Emotion::Angry.profile().duration_factor, 0.8);
        // durations in samples, tolerance one frame shift
        let (n, f) = (neutral.audio.len() as f64, fast.audio.len() as f64);
        assert!((f - 0.8 * n).abs() <= FRAME_SHIFT as f64, "{f} vs 0.8 * {n}");
    }
}

#[test]
fn split_of_records_matches_index_split() {
    let records = generate_corpus(&GenerateConfig {
        num_sentences: 20,
        max_words: 3,
        ..GenerateConfig::default()
    })
    .unwrap();
    let (train, test) = split_corpus(&records, 1, 4).unwrap();
    assert_eq!(train.len() + test.len(), 20);
    assert!(test.len() == 5);
    assert!(train.iter().all(|r| !test.iter().any(|t| t.id == r.id)));
}

proptest! {
    #[test]
    fn folds_partition_with_balanced_sizes(n in 1usize..300, n_folds in 1usize..9, salt in 0u32..1000) {
        let ids: Vec<String> = (0..n).map(|i| format!("u{salt}-{i}")).collect();
        let folds = fold_assignment(&ids, n_folds).unwrap();
        let mut sizes = vec![0usize; n_folds];
        for f in &folds {
            sizes[*f] += 1;
        }
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        let mut covered = vec![0; n];
        for fold in 0..n_folds {
            let (train, test) = split_indices(&ids, fold, n_folds).unwrap();
            prop_assert_eq!(train.len() + test.len(), n);
            for i in test {
                covered[i] += 1;
            }
        }
        prop_assert!(covered.iter().all(|c| *c == 1));
    }

    #[test]
    fn fold_of_an_id_ignores_corpus_order(n in 2usize..100, rot in 0usize..100) {
        let ids: Vec<String> = (0..n).map(|i| format!("s{i:04}")).collect();
        let mut rotated = ids.clone();
        rotated.rotate_left(rot % n);
        let a = fold_assignment(&ids, 4).unwrap();
        let b = fold_assignment(&rotated, 4).unwrap();
        for (j, id) in rotated.iter().enumerate() {
            let i = ids.iter().position(|x| x == id).unwrap();
            prop_assert_eq!(a[i], b[j]);
        }
    }
}
