use std::collections::BTreeSet;

use crate::common::oracles::{close, naive_conv};
use crate::common::{rng, uniform};
use sembed_core::model::{TcnConfig, TcnEncoder};
use sembed_core::params::ParamStore;
use sembed_core::{Tape, Tensor};

/// Input frames that can reach trunk position `t`, by walking the stacked
/// causal taps back through every level.
fn dependency_set(k: usize, dilations: &[usize], t: usize) -> BTreeSet<usize> {
    let mut frontier = BTreeSet::from([t]);
    for &d in dilations.iter().rev() {
        let mut next = BTreeSet::new();
        for &p in &frontier {
            for j in 0..k {
                if let Some(q) = p.checked_sub(d * j) {
                    next.insert(q);
                }
            }
            // residual paths keep the position itself
            next.insert(p);
        }
        frontier = next;
    }
    frontier
}

fn config(k: usize, dilations: Vec<usize>) -> TcnConfig {
    TcnConfig {
        kernel_size: k,
        dilations,
        channels: 3,
        embedding_dim: 4,
        dropout: 0.0,
        ..TcnConfig::default()
    }
}

fn trunk_output(enc: &TcnEncoder, store: &ParamStore, x: &Tensor) -> Vec<f64> {
    let mut tape = Tape::new();
    let bound = store.bind_frozen(&mut tape);
    let xv = tape.constant(x.clone());
    let h = enc.trunk(&mut tape, &bound, xv, None).unwrap();
    tape.value(h).data().to_vec()
}

/// For every perturbed input frame `s`, checks that trunk outputs before `s`
/// and outputs more than `rf − 1` frames after it are bitwise unchanged, and
/// returns the largest lag at which a change was seen.
fn probe_trunk(k: usize, dilations: Vec<usize>, t_len: usize, seed: u64) -> (usize, usize) {
    let c = config(k, dilations);
    let rf = c.receptive_field();
    let mut store = ParamStore::new();
    let enc = TcnEncoder::new(&c, 3, &mut store, &mut rng(seed)).unwrap();
    let x = uniform(&mut rng(seed + 1), &[3, t_len]);
    let base = trunk_output(&enc, &store, &x);
    let mut max_lag = 0;
    for s in 0..t_len {
        let mut xp = x.clone();
        for ch in 0..3 {
            xp.data_mut()[ch * t_len + s] += 2.0;
        }
        let y = trunk_output(&enc, &store, &xp);
        for ch in 0..3 {
            for t in 0..t_len {
                let i = ch * t_len + t;
                let changed = y[i] != base[i];
                assert!(!(changed && t < s), "influence flowed backwards from {s} to {t}");
                assert!(!(changed && t - s >= rf), "frame {s} reached {t} beyond the receptive field {rf}");
                if changed {
                    max_lag = max_lag.max(t - s);
                }
            }
        }
    }
    (max_lag, rf)
}

pub fn receptive_field_matches_dependency_enumeration() {
    for (k, dilations, expect) in [(2, vec![1, 2, 4], 8), (2, vec![1, 2, 4, 8, 16, 32], 64)] {
        let c = config(k, dilations.clone());
        assert_eq!(c.receptive_field(), expect);
        assert_eq!(dependency_set(k, &dilations, 500).len(), expect);
    }
    for k in 1..=4 {
        for dilations in [vec![1], vec![3], vec![1, 1], vec![1, 2, 4, 8], vec![2, 5, 1]] {
            let c = config(k, dilations.clone());
            let span = dependency_set(k, &dilations, 1000);
            assert_eq!(1000 - span.first().unwrap() + 1, c.receptive_field(), "k={k} {dilations:?}");
        }
    }
}

pub fn single_level_trunks_are_causal_with_exact_reach() {
    for k in 1..=3 {
        for d in [1, 2, 4, 8] {
            for t_len in [1, 5, 16, 32] {
                let (lag, rf) = probe_trunk(k, vec![d], t_len, (k * 10 + d) as u64);
                if t_len >= rf {
                    assert_eq!(lag, rf - 1, "k={k} d={d} T={t_len}");
                }
            }
        }
    }
}

pub fn stacked_trunks_are_causal_within_receptive_field() {
    for (k, dilations) in [(2, vec![1, 2, 4]), (3, vec![1, 2]), (2, vec![1, 2, 4, 8]), (3, vec![1, 4, 2])] {
        for t_len in [7, 20, 32] {
            let (lag, rf) = probe_trunk(k, dilations.clone(), t_len, t_len as u64);
            assert!(lag < rf);
            if t_len >= rf {
                assert_eq!(lag, rf - 1, "k={k} {dilations:?} T={t_len}");
            }
        }
    }
}

pub fn convolution_is_causal_for_every_perturbation() {
    for k in 1..=3 {
        for d in [1, 2, 4, 8] {
            for t_len in 1..=16 {
                let mut r = rng((k * 1000 + d * 100 + t_len) as u64);
                let x = uniform(&mut r, &[2, t_len]);
                let w = uniform(&mut r, &[3, 2, k]);
                let base = naive_conv(&x, &w, d);
                let run = |x: &Tensor| {
                    let mut tape = Tape::new();
                    let (vx, vw) = (tape.constant(x.clone()), tape.constant(w.clone()));
                    let y = tape.conv1d_causal(vx, vw, d).unwrap();
                    tape.value(y).data().to_vec()
                };
                assert!(close(&run(&x), &base, 1e-12));
                for s in 0..t_len {
                    let mut xp = x.clone();
                    xp.data_mut()[s] += 1.0;
                    xp.data_mut()[t_len + s] -= 0.5;
                    let y = run(&xp);
                    for o in 0..3 {
                        for t in 0..t_len {
                            let i = o * t_len + t;
                            if t < s {
                                assert_eq!(y[i], base[i], "k={k} d={d} T={t_len}: frame {s} leaked into {t}");
                            }
                        }
                    }
                }
            }
        }
    }
}

checks!(
    receptive_field_matches_dependency_enumeration,
    single_level_trunks_are_causal_with_exact_reach,
    stacked_trunks_are_causal_within_receptive_field,
    convolution_is_causal_for_every_perturbation,
);
