use num_complex::Complex64;
use rand::Rng;

use crate::common::oracles::{close, dp_distance, naive_conv, naive_dft};
use crate::common::{rng, uniform};
use sembed_core::dsp::fft::fft;
use sembed_core::eval::edit_distance;
use sembed_core::Tape;

pub fn convolution_equals_zero_padded_oracle() {
    let mut seed = 0;
    for k in 1..=4 {
        for d in [1, 2, 3, 4, 8, 16] {
            for (c_in, c_out, t) in [(1, 1, 5), (3, 2, 17), (4, 8, 33), (2, 5, 3)] {
                seed += 1;
                let mut r = rng(seed);
                let x = uniform(&mut r, &[c_in, t]);
                let w = uniform(&mut r, &[c_out, c_in, k]);
                let mut tape = Tape::new();
                let (vx, vw) = (tape.constant(x.clone()), tape.constant(w.clone()));
                let y = tape.conv1d_causal(vx, vw, d).unwrap();
                assert!(close(tape.value(y).data(), &naive_conv(&x, &w, d), 1e-10), "k={k} d={d} {c_in}->{c_out} T={t}");
            }
        }
    }
}

pub fn fft_matches_naive_dft_up_to_512() {
    for p in 0..=9 {
        let n = 1usize << p;
        for seed in 0..3 {
            let mut r = rng(seed * 31 + p as u64);
            let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
            let mut y = x.clone();
            fft(&mut y).unwrap();
            for (a, b) in y.iter().zip(naive_dft(&x)) {
                assert!((a - b).norm() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }
}

pub fn edit_distance_agrees_with_dp_on_a_thousand_short_pairs() {
    let mut r = rng(99);
    for _ in 0..1000 {
        let (la, lb) = (r.gen_range(0..=10), r.gen_range(0..=10));
        let a: Vec<u8> = (0..la).map(|_| r.gen_range(0..4)).collect();
        let b: Vec<u8> = (0..lb).map(|_| r.gen_range(0..4)).collect();
        let c = edit_distance(&a, &b);
        assert_eq!(c.distance, dp_distance(&a, &b), "{a:?} {b:?}");
        assert_eq!(c.substitutions + c.deletions + c.insertions, c.distance);
        // deletions remove reference symbols, insertions add hypothesis symbols
        assert_eq!(la + c.insertions, lb + c.deletions);
    }
}

checks!(
    convolution_equals_zero_padded_oracle,
    fft_matches_naive_dft_up_to_512,
    edit_distance_agrees_with_dp_on_a_thousand_short_pairs,
);
