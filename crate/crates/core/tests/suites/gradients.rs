use crate::common::{leaf_gradient_error, rng, store_gradient_error, uniform, weighted_sum, TOL};
use rand::Rng;
use sembed_core::dsp::{MelSpectrogram, N_MELS};
use sembed_core::fusion::DanEncoder;
use sembed_core::model::{
    AcousticDecoder, DecoderConfig, EncoderInput, Example, LinguisticDecoder, LstmCell, ModelConfig, ModelKind,
    MultitaskWeights, RnnConfig, RnnEncoder, SentenceModel, TcnConfig, TcnEncoder, Vocab,
};
use sembed_core::params::ParamStore;
use sembed_core::{Tape, Tensor, Var};

const SEEDS: u64 = 20;

fn check_op(name: &str, shapes: &[&[usize]], f: impl Fn(&mut Tape, &[Var], u64) -> sembed_core::Result<Var>) {
    for seed in 0..SEEDS {
        let mut r = rng(seed);
        let inputs: Vec<Tensor> = shapes.iter().map(|s| uniform(&mut r, s)).collect();
        let err = leaf_gradient_error(&inputs, |t, v| f(t, v, seed));
        assert!(err < TOL, "{name} seed {seed}: relative error {err:e}");
    }
}

pub fn matmul_matches_finite_differences() {
    for (m, k, n) in [(3, 4, 2), (1, 5, 3), (6, 3, 9), (5, 7, 1)] {
        check_op("matmul", &[&[m, k], &[k, n]], |t, v, s| {
            let y = t.matmul(v[0], v[1])?;
            weighted_sum(t, y, s)
        });
    }
}

pub fn sum_of_product_has_outer_product_gradient() {
    // d/dA sum(A·B) = ones · Bᵀ
    let mut r = rng(3);
    let (a, b) = (uniform(&mut r, &[3, 4]), uniform(&mut r, &[4, 2]));
    let mut tape = Tape::new();
    let (va, vb) = (tape.leaf(a.with_grad()), tape.leaf(b.clone()));
    let y = tape.matmul(va, vb).unwrap();
    let s = tape.sum(y);
    tape.backward(s).unwrap();
    let g = tape.grad(va).unwrap();
    for i in 0..3 {
        for j in 0..4 {
            let expect = b.at(j, 0) + b.at(j, 1);
            assert!((g[i * 4 + j] - expect).abs() < 1e-12);
        }
    }
}

pub fn elementwise_binary_ops() {
    let s: &[usize] = &[3, 5];
    check_op("add", &[s, s], |t, v, seed| {
        let y = t.add(v[0], v[1])?;
        weighted_sum(t, y, seed)
    });
    check_op("sub", &[s, s], |t, v, seed| {
        let y = t.sub(v[0], v[1])?;
        weighted_sum(t, y, seed)
    });
    check_op("mul", &[s, s], |t, v, seed| {
        let y = t.mul(v[0], v[1])?;
        weighted_sum(t, y, seed)
    });
}

pub fn broadcasts() {
    check_op("add_row", &[&[4, 3], &[1, 3]], |t, v, s| {
        let y = t.add_row(v[0], v[1])?;
        weighted_sum(t, y, s)
    });
    check_op("add_col", &[&[4, 3], &[4]], |t, v, s| {
        let y = t.add_col(v[0], v[1])?;
        weighted_sum(t, y, s)
    });
    check_op("repeat_rows", &[&[1, 4]], |t, v, s| {
        let y = t.repeat_rows(v[0], 3)?;
        weighted_sum(t, y, s)
    });
}

pub fn unary_ops() {
    let s: &[usize] = &[4, 4];
    check_op("scale", &[s], |t, v, seed| {
        let y = t.scale(v[0], -1.7);
        weighted_sum(t, y, seed)
    });
    check_op("relu", &[s], |t, v, seed| {
        let y = t.relu(v[0]);
        weighted_sum(t, y, seed)
    });
    check_op("sigmoid", &[s], |t, v, seed| {
        let y = t.scale(v[0], 3.0);
        let y = t.sigmoid(y);
        weighted_sum(t, y, seed)
    });
    check_op("tanh", &[s], |t, v, seed| {
        let y = t.scale(v[0], 2.0);
        let y = t.tanh(y);
        weighted_sum(t, y, seed)
    });
    check_op("mask", &[s], |t, v, seed| {
        let mut r = rng(seed + 100);
        let m = (0..16).map(|_| if r.gen_bool(0.7) { 1.0 / 0.7 } else { 0.0 }).collect();
        let y = t.mask(v[0], m)?;
        weighted_sum(t, y, seed)
    });
    check_op("transpose", &[&[2, 5]], |t, v, seed| {
        let y = t.transpose(v[0]);
        weighted_sum(t, y, seed)
    });
}

pub fn causal_convolution() {
    for (c_in, c_out, k, t_len, d) in [(2, 3, 2, 9, 1), (3, 2, 3, 12, 2), (1, 1, 2, 5, 8), (2, 4, 1, 6, 1)] {
        check_op("conv1d_causal", &[&[c_in, t_len], &[c_out, c_in, k]], |t, v, s| {
            let y = t.conv1d_causal(v[0], v[1], d)?;
            weighted_sum(t, y, s)
        });
    }
}

pub fn mse_of_convolution_matches_finite_differences() {
    for seed in 0..SEEDS {
        let mut r = rng(seed);
        let target = uniform(&mut r, &[2, 10]);
        let inputs = [uniform(&mut r, &[3, 10]), uniform(&mut r, &[2, 3, 2])];
        let err = leaf_gradient_error(&inputs, |t, v| {
            let y = t.conv1d_causal(v[0], v[1], 2)?;
            let target = t.constant(target.clone());
            t.mse_loss(y, target)
        });
        assert!(err < 1e-5, "seed {seed}: {err:e}");
    }
}

pub fn pooling_and_selection() {
    check_op("mean_pool_time", &[&[3, 7]], |t, v, s| {
        let y = t.mean_pool_time(v[0], 2)?;
        weighted_sum(t, y, s)
    });
    check_op("select_col", &[&[3, 7]], |t, v, s| {
        let y = t.select_col(v[0], 6)?;
        weighted_sum(t, y, s)
    });
    check_op("select_row", &[&[4, 3]], |t, v, s| {
        let y = t.select_row(v[0], 2)?;
        weighted_sum(t, y, s)
    });
    check_op("gather_rows", &[&[4, 3]], |t, v, s| {
        let y = t.gather_rows(v[0], &[3, 0, 3, 1])?;
        weighted_sum(t, y, s)
    });
    check_op("slice_cols", &[&[3, 8]], |t, v, s| {
        let y = t.slice_cols(v[0], 2, 4)?;
        weighted_sum(t, y, s)
    });
}

pub fn concatenation() {
    check_op("concat_cols", &[&[3, 2], &[3, 4], &[3, 1]], |t, v, s| {
        let y = t.concat_cols(v)?;
        weighted_sum(t, y, s)
    });
    check_op("concat_rows", &[&[1, 3], &[2, 3], &[4, 3]], |t, v, s| {
        let y = t.concat_rows(v)?;
        weighted_sum(t, y, s)
    });
}

pub fn losses() {
    check_op("mse_loss", &[&[4, 3], &[4, 3]], |t, v, _| t.mse_loss(v[0], v[1]));
    check_op("cross_entropy", &[&[5, 6]], |t, v, s| {
        let mut r = rng(s + 7);
        let mut targets: Vec<usize> = (0..5).map(|_| r.gen_range(0..6)).collect();
        targets[1] = 0;
        let scaled = t.scale(v[0], 2.0);
        t.cross_entropy(scaled, &targets, Some(0))
    });
}

pub fn fan_out_accumulates_gradients() {
    // one value used on several paths
    check_op("fan-out", &[&[3, 3]], |t, v, s| {
        let a = t.tanh(v[0]);
        let b = t.mul(a, v[0])?;
        let c = t.matmul(b, a)?;
        let d = t.add(c, v[0])?;
        weighted_sum(t, d, s)
    });
}

pub fn lstm_cell_over_three_steps() {
    for seed in 0..SEEDS {
        let mut store = ParamStore::new();
        let cell = LstmCell::new("cell", 3, 4, &mut store, &mut rng(seed));
        let mut r = rng(seed + 1000);
        let xs: Vec<Tensor> = (0..3).map(|_| uniform(&mut r, &[1, 3])).collect();
        let err = store_gradient_error(&mut store, 12, seed, |tape, bound| {
            let (mut h, mut c) = cell.zero_state(tape);
            for x in &xs {
                let x = tape.constant(x.clone());
                let xw = tape.matmul(x, bound[cell.w_x])?;
                (h, c) = cell.step(tape, bound, xw, h, c)?;
            }
            let hc = tape.concat_cols(&[h, c])?;
            weighted_sum(tape, hc, seed)
        });
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}

pub fn rnn_encoder() {
    for seed in 0..5 {
        let mut store = ParamStore::new();
        let config = RnnConfig { hidden: 5, ..RnnConfig::default() };
        let enc = RnnEncoder::new(&config, 3, 4, &mut store, &mut rng(seed)).unwrap();
        let x = uniform(&mut rng(seed + 50), &[6, 3]);
        let err = store_gradient_error(&mut store, 10, seed, |tape, bound| {
            let x = tape.constant(x.clone());
            let e = enc.forward(tape, bound, x)?;
            weighted_sum(tape, e, seed)
        });
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}

pub fn deep_averaging_network() {
    for seed in 0..SEEDS {
        let mut store = ParamStore::new();
        let dan = DanEncoder::new(4, 6, 3, &mut store, &mut rng(seed));
        let mut r = rng(seed + 9);
        let segments: Vec<Vec<f64>> = (0..3).map(|_| uniform(&mut r, &[4]).into_data()).collect();
        let err = store_gradient_error(&mut store, 10, seed, |tape, bound| {
            let y = dan.forward(tape, bound, &segments)?;
            weighted_sum(tape, y, seed)
        });
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}

pub fn tcn_encoder_with_residuals() {
    for seed in 0..5 {
        let mut store = ParamStore::new();
        let config = TcnConfig {
            kernel_size: 2,
            dilations: vec![1, 2, 4],
            channels: 4,
            embedding_dim: 3,
            dropout: 0.0,
            ..TcnConfig::default()
        };
        let enc = TcnEncoder::new(&config, 4, &mut store, &mut rng(seed)).unwrap();
        let x = uniform(&mut rng(seed + 77), &[4, 11]);
        let err = store_gradient_error(&mut store, 10, seed, |tape, bound| {
            let x = tape.constant(x.clone());
            let e = enc.forward(tape, bound, x, None)?;
            weighted_sum(tape, e, seed)
        });
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}

fn small_decoder_config() -> DecoderConfig {
    DecoderConfig {
        acoustic_hidden: 6,
        position_dim: 4,
        linguistic_hidden: 5,
        symbol_dim: 3,
    }
}

pub fn acoustic_decoder_reconstruction() {
    for seed in 0..5 {
        let mut store = ParamStore::new();
        let dec = AcousticDecoder::new(4, &small_decoder_config(), &mut store, &mut rng(seed));
        let e = uniform(&mut rng(seed + 3), &[1, 4]);
        let target = uniform(&mut rng(seed + 4), &[7, N_MELS]);
        let err = store_gradient_error(&mut store, 10, seed, |tape, bound| {
            let e = tape.constant(e.clone());
            let y = dec.forward(tape, bound, e, 7)?;
            let target = tape.constant(target.clone());
            tape.mse_loss(y, target)
        });
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}

pub fn linguistic_decoder_single_and_batched() {
    for seed in 0..5 {
        let mut store = ParamStore::new();
        let dec = LinguisticDecoder::new("ling", 4, 7, &small_decoder_config(), &mut store, &mut rng(seed));
        let e = uniform(&mut rng(seed + 3), &[2, 4]);
        let targets = vec![vec![3, 4, 2, 5], vec![6, 3]];
        let single = store_gradient_error(&mut store, 8, seed, |tape, bound| {
            let e = tape.constant(Tensor::row(e.data()[..4].to_vec()));
            dec.loss(tape, bound, e, &targets[0])
        });
        assert!(single < TOL, "seed {seed}: {single:e}");
        let batched = store_gradient_error(&mut store, 8, seed, |tape, bound| {
            let e = tape.constant(e.clone());
            dec.loss_batch(tape, bound, e, &targets)
        });
        assert!(batched < TOL, "seed {seed}: {batched:e}");
    }
}

fn tiny_model(kind: ModelKind, seed: u64) -> SentenceModel {
    let mut config = ModelConfig::new(kind);
    config.tcn = TcnConfig {
        dilations: vec![1, 2],
        channels: 4,
        embedding_dim: 5,
        dropout: 0.0,
        ..TcnConfig::default()
    };
    config.rnn.hidden = 4;
    config.dan.hidden = 4;
    config.segment_dim = 3;
    config.decoder = small_decoder_config();
    SentenceModel::new(config, Vocab::new(&["a", "b", "c"]), seed).unwrap()
}

fn tiny_mel(seed: u64, frames: usize) -> MelSpectrogram {
    MelSpectrogram::new(frames, uniform(&mut rng(seed), &[frames * N_MELS]).into_data()).unwrap()
}

pub fn multitask_objective_end_to_end() {
    let weights = MultitaskWeights::new(0.7, 1.3).unwrap();
    for seed in 0..3 {
        let mel = tiny_mel(seed + 11, 6);
        let target = [3, 4, 2, 5];
        for kind in [ModelKind::Tcn, ModelKind::Rnn] {
            let mut model = tiny_model(kind, seed);
            let snapshot = model.clone();
            let ex = Example { input: EncoderInput::Mel(&mel), mel: &mel, target: &target };
            let err = store_gradient_error(&mut model.store, 4, seed, |tape, bound| {
                Ok(snapshot.loss(tape, bound, &ex, &weights, None)?.0)
            });
            assert!(err < TOL, "{kind:?} seed {seed}: {err:e}");
        }
    }
}

pub fn shared_encoder_gradient_is_sum_of_task_gradients() {
    let mel = tiny_mel(5, 8);
    let target = [3, 5, 2, 4, 4];
    let ex = Example { input: EncoderInput::Mel(&mel), mel: &mel, target: &target };
    let (la, ll) = (0.6, 1.8);
    let grads = |w: MultitaskWeights| {
        let mut model = tiny_model(ModelKind::Tcn, 2);
        model.store.zero_grads();
        model.accumulate_gradients(&ex, &w, None, 1.0).unwrap();
        let names = model.encoder_param_names();
        model
            .store
            .names()
            .iter()
            .zip(model.store.tensors())
            .filter(|(n, _)| names.contains(n))
            .flat_map(|(_, t)| t.grad.clone().unwrap())
            .collect::<Vec<f64>>()
    };
    let total = grads(MultitaskWeights::new(la, ll).unwrap());
    let acoustic = grads(MultitaskWeights::new(la, 0.0).unwrap());
    let linguistic = grads(MultitaskWeights::new(0.0, ll).unwrap());
    assert!(!total.is_empty());
    for ((t, a), l) in total.iter().zip(&acoustic).zip(&linguistic) {
        assert!((t - (a + l)).abs() <= 1e-10 * (1.0 + t.abs()), "{t} vs {a} + {l}");
    }
}

pub fn backward_is_deterministic() {
    let run = || {
        let mut model = tiny_model(ModelKind::Tcn, 4);
        let mel = tiny_mel(1, 9);
        let target = [3, 4];
        let ex = Example { input: EncoderInput::Mel(&mel), mel: &mel, target: &target };
        model.store.zero_grads();
        let v = model.accumulate_gradients(&ex, &MultitaskWeights::default(), None, 1.0).unwrap();
        let g: Vec<u64> = model.store.tensors().iter().flat_map(|t| t.grad.clone().unwrap()).map(f64::to_bits).collect();
        (v.total.to_bits(), g)
    };
    assert_eq!(run(), run());
}

checks!(
    matmul_matches_finite_differences,
    sum_of_product_has_outer_product_gradient,
    elementwise_binary_ops,
    broadcasts,
    unary_ops,
    causal_convolution,
    mse_of_convolution_matches_finite_differences,
    pooling_and_selection,
    concatenation,
    losses,
    fan_out_accumulates_gradients,
    lstm_cell_over_three_steps,
    rnn_encoder,
    deep_averaging_network,
    tcn_encoder_with_residuals,
    acoustic_decoder_reconstruction,
    linguistic_decoder_single_and_batched,
    multitask_objective_end_to_end,
    shared_encoder_gradient_is_sum_of_task_gradients,
    backward_is_deterministic,
);
