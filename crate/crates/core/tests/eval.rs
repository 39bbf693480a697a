mod common;

use common::oracles::dp_distance;
use common::rng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sembed_core::eval::asr::corpus_per;
use sembed_core::eval::{
    bucket_trend, cluster_purity, edit_distance, eval_asr, eval_emotion, kmeans, length_bucket_analysis, pca_2d,
    quantile_buckets, tsne_2d, AsrConfig, AsrSample, ConfusionMatrix, EditCounts, EmotionConfig, TsneConfig,
    UtteranceScore,
};
use sembed_core::model::Vocab;

#[test]
fn kitten_to_sitting_is_three() {
    let (a, b): (Vec<char>, Vec<char>) = ("kitten".chars().collect(), "sitting".chars().collect());
    assert_eq!(edit_distance(&a, &b).distance, 3);
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(
        a in prop::collection::vec(0u8..4, 0..10),
        b in prop::collection::vec(0u8..4, 0..10),
        c in prop::collection::vec(0u8..4, 0..10),
    ) {
        let d = |x: &[u8], y: &[u8]| edit_distance(x, y).distance;
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b), dp_distance(&a, &b));
    }

    #[test]
    fn macro_metrics_ignore_class_relabelling(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        perm_seed in 0u64..1000,
    ) {
        let truth: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng(perm_seed));
        let a = ConfusionMatrix::from_predictions(&truth, &pred, 4).unwrap();
        let pt: Vec<usize> = truth.iter().map(|c| perm[*c]).collect();
        let pp: Vec<usize> = pred.iter().map(|c| perm[*c]).collect();
        let b = ConfusionMatrix::from_predictions(&pt, &pp, 4).unwrap();
        prop_assert!((a.accuracy() - b.accuracy()).abs() < 1e-12);
        prop_assert!((a.macro_precision() - b.macro_precision()).abs() < 1e-12);
        prop_assert!((a.macro_recall() - b.macro_recall()).abs() < 1e-12);
    }
}

#[test]
fn macro_precision_of_hand_counted_matrix() {
    // truth rows, predictions columns:
    //   [3 1 0]
    //   [0 2 2]
    //   [1 0 1]
    let truth = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2];
    let pred = [0, 0, 0, 1, 1, 1, 2, 2, 0, 2];
    let m = ConfusionMatrix::from_predictions(&truth, &pred, 3).unwrap();
    let precisions = [3.0 / 4.0, 2.0 / 3.0, 1.0 / 3.0];
    let recalls = [3.0 / 4.0, 2.0 / 4.0, 1.0 / 2.0];
    assert!((m.macro_precision() - precisions.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    assert!((m.macro_recall() - recalls.iter().sum::<f64>() / 3.0).abs() < 1e-12);
    assert!((m.accuracy() - 0.6).abs() < 1e-12);
}

/// Random transcripts over four phonemes (ids 3..7) with word boundaries,
/// each paired with a distinct random embedding.
fn synthetic_asr(n: usize, seed: u64) -> Vec<AsrSample> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let mut target = Vec::new();
            for w in 0..r.gen_range(1..3) {
                if w > 0 {
                    target.push(Vocab::BOUNDARY_ID);
                }
                for _ in 0..r.gen_range(2..4) {
                    target.push(r.gen_range(3..7));
                }
            }
            AsrSample {
                id: format!("s{i}"),
                embedding: (0..12).map(|_| r.gen_range(-1.0..1.0)).collect(),
                num_frames: 10 * target.len(),
                target,
            }
        })
        .collect()
}

#[test]
fn decoder_memorises_ten_sentences() {
    let data = synthetic_asr(10, 1);
    let config = AsrConfig {
        steps: 600,
        batch_size: 10,
        hidden: 48,
        bootstrap_resamples: 100,
        ..AsrConfig::default()
    };
    let out = eval_asr(&data, &data, 7, &config).unwrap();
    let per = out.report.metric("per").unwrap().value;
    assert!(per < 0.05, "PER {per}");
}

#[test]
fn untrained_decoder_is_near_chance() {
    let data = synthetic_asr(40, 2);
    let config = AsrConfig {
        steps: 0,
        hidden: 48,
        bootstrap_resamples: 100,
        ..AsrConfig::default()
    };
    let out = eval_asr(&data, &data, 7, &config).unwrap();
    let per = out.report.metric("per").unwrap().value;
    assert!(per > 0.6, "PER {per}");
}

fn score(id: &str, frames: usize, ref_len: usize, distance: usize) -> UtteranceScore {
    UtteranceScore {
        id: id.into(),
        num_frames: frames,
        phoneme_ref_len: ref_len,
        phoneme_edits: EditCounts { distance, substitutions: distance, deletions: 0, insertions: 0 },
        word_ref_len: 1,
        word_edits: EditCounts::default(),
        hypothesis: Vec::new(),
    }
}

#[test]
fn one_bucket_equals_overall_per_and_counts_sum() {
    let mut r = rng(4);
    let scores: Vec<UtteranceScore> = (0..37)
        .map(|i| {
            let len = r.gen_range(2..12);
            score(&format!("u{i}"), r.gen_range(20..300), len, r.gen_range(0..len))
        })
        .collect();
    let lengths: Vec<usize> = scores.iter().map(|s| s.num_frames).collect();
    let one = length_bucket_analysis(&scores, &quantile_buckets(&lengths, 1).unwrap()).unwrap();
    assert_eq!(one.len(), 1);
    assert!((one[0].per - corpus_per(&scores)).abs() < 1e-12);
    for k in 2..8 {
        let rows = length_bucket_analysis(&scores, &quantile_buckets(&lengths, k).unwrap()).unwrap();
        assert_eq!(rows.iter().map(|b| b.n).sum::<usize>(), scores.len());
    }
}

#[test]
fn rising_buckets_have_positive_trend() {
    let scores: Vec<UtteranceScore> = (0..50).map(|i| score(&format!("u{i}"), 10 + i, 10, i / 10)).collect();
    let lengths: Vec<usize> = scores.iter().map(|s| s.num_frames).collect();
    let rows = length_bucket_analysis(&scores, &quantile_buckets(&lengths, 5).unwrap()).unwrap();
    let trend = bucket_trend(&rows).unwrap();
    assert!((trend.spearman - 1.0).abs() < 1e-12);
    assert!((trend.slope - 0.1).abs() < 1e-12);
}

#[test]
fn shuffled_emotion_labels_give_chance_accuracy() {
    let mut r = rng(12);
    let n = 7 * 40;
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..16).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
    let mut labels: Vec<usize> = (0..n).map(|i| i % 7).collect();
    labels.shuffle(&mut r);
    let ids: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let names = ["a", "b", "c", "d", "e", "f", "g"];
    let report = eval_emotion(&x, &labels, &ids, &names, &EmotionConfig::default()).unwrap();
    let acc = report.metric("accuracy").unwrap();
    let chance = 1.0 / 7.0;
    assert!((acc.value - chance).abs() <= acc.ci95_halfwidth.max(0.05), "{acc:?}");
}

fn gaussian_blobs(centres: &[Vec<f64>], per: usize, sigma: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per {
            pts.push(centre.iter().map(|m| m + noise.sample(&mut r)).collect());
            labels.push(c);
        }
    }
    (pts, labels)
}

#[test]
fn tsne_keeps_three_separated_clusters_apart() {
    let centres = vec![vec![0.0; 5], [vec![10.0], vec![0.0; 4]].concat(), [vec![0.0, 10.0], vec![0.0; 3]].concat()];
    let (pts, labels) = gaussian_blobs(&centres, 50, 0.1, 3);
    let y = tsne_2d(&pts, &TsneConfig::default(), 7).unwrap();
    let rows: Vec<Vec<f64>> = y.iter().map(|p| p.to_vec()).collect();
    let assign = kmeans(&rows, 3, 10, 1).unwrap();
    assert!(cluster_purity(&assign, &labels).unwrap() >= 0.95);
}

#[test]
fn pca_recovers_dominant_axes() {
    let mut r = rng(6);
    // variance 9 along e0, 1 along e1, 0.01 along the rest
    let pts: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let (a, b): (f64, f64) = (r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
            let mut p = vec![3.0 * a * 3f64.sqrt(), b * 3f64.sqrt(), 0.0, 0.0];
            p[2] = 0.1 * r.gen_range(-1.0..1.0);
            p[3] = 0.1 * r.gen_range(-1.0..1.0);
            p
        })
        .collect();
    let y = pca_2d(&pts).unwrap();
    let mean0 = pts.iter().map(|p| p[0]).sum::<f64>() / 200.0;
    let mean1 = pts.iter().map(|p| p[1]).sum::<f64>() / 200.0;
    let corr = |k: usize, axis: usize, m: f64| {
        let xs: Vec<f64> = y.iter().map(|q| q[k]).collect();
        let zs: Vec<f64> = pts.iter().map(|p| p[axis] - m).collect();
        let dot: f64 = xs.iter().zip(&zs).map(|(a, b)| a * b).sum();
        dot / (xs.iter().map(|a| a * a).sum::<f64>().sqrt() * zs.iter().map(|b| b * b).sum::<f64>().sqrt())
    };
    assert!(corr(0, 0, mean0).abs() > 0.99);
    assert!(corr(1, 1, mean1).abs() > 0.99);
    let var = |k: usize| y.iter().map(|q| q[k] * q[k]).sum::<f64>();
    assert!(var(0) >= var(1));
}

#[test]
fn projection_rejects_tiny_inputs() {
    let two = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    assert!(pca_2d(&two).is_err());
    let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.5]).collect();
    let cfg = TsneConfig { perplexity: 10.0, ..TsneConfig::default() };
    assert!(tsne_2d(&pts, &cfg, 0).is_err());
}
