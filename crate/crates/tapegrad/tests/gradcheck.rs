//! Finite-difference checks for every operation and layer, plus determinism
//! and persistence round trips.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tapegrad::{forward, load_checkpoint, save_checkpoint, Activation, AdamW, ArchDesc, ChannelStats, Model, NetworkCheckpoint, PadMode, Tape, Tensor};

/// Directional finite-difference check: perturb one input tensor, compare the
/// analytic gradient of `f` against central differences.
fn check_grad<F>(data: Vec<f64>, shape: &[usize], f: F, tol: f64)
where
    F: Fn(&Tape, &Tensor) -> Tensor,
{
    let tape = Tape::new();
    let x = tape.leaf(data.clone(), shape);
    let loss = f(&tape, &x);
    assert_eq!(loss.len(), 1, "check_grad expects a scalar loss");
    let grads = loss.backward();
    let g = grads.wrt_or_zeros(&x);

    let eps = 1e-6;
    for i in 0..data.len() {
        let mut dp = data.clone();
        dp[i] += eps;
        let tp = Tape::new();
        let lp = f(&tp, &tp.leaf(dp, shape)).scalar_value();
        let mut dm = data.clone();
        dm[i] -= eps;
        let tm = Tape::new();
        let lm = f(&tm, &tm.leaf(dm, shape)).scalar_value();
        let fd = (lp - lm) / (2.0 * eps);
        let denom = fd.abs().max(1.0);
        assert!(
            (g[i] - fd).abs() / denom < tol,
            "component {i}: analytic {} vs fd {fd}",
            g[i]
        );
    }
}

fn randvec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

#[test]
fn square_gradient_matches_hand_value() {
    let tape = Tape::new();
    let x = tape.leaf(vec![3.0], &[1]);
    let y = x.mul(&x);
    let g = y.backward();
    assert_eq!(g.wrt(&x).unwrap(), &[6.0]);
}

#[test]
fn elementwise_ops_pass_fd_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 9;
    let a = randvec(&mut rng, n, 0.3, 2.0);
    let w: Vec<f64> = randvec(&mut rng, n, -1.0, 1.0);

    let wc = w.clone();
    check_grad(a.clone(), &[n], move |t, x| {
        let c = t.constant_1d(wc.clone());
        x.mul(&c).sum()
    }, 1e-6);

    let wc = w.clone();
    check_grad(a.clone(), &[n], move |t, x| {
        let c = t.constant_1d(wc.clone());
        let y = x.sqrt().add(&x.exp()).sub(&x.recip()).mul(&c);
        y.div(&x.add_scalar(2.0)).sum()
    }, 1e-5);

    let wc = w.clone();
    check_grad(a.clone(), &[n], move |t, x| {
        let c = t.constant_1d(wc.clone());
        x.abs().mul(&c).add(&x.scale(0.5)).sum()
    }, 1e-6);
}

#[test]
fn activations_pass_fd_check_away_from_kinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Keep inputs away from 0 where relu-family kinks live.
    let data: Vec<f64> = (0..12)
        .map(|_| {
            let v: f64 = rng.gen_range(0.2..1.5);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    check_grad(data.clone(), &[12], |_, x| x.relu().sum(), 1e-6);
    check_grad(data.clone(), &[12], |_, x| x.leaky_relu(0.01).sum(), 1e-6);
    check_grad(data, &[12], |_, x| x.elu().sum(), 1e-6);
}

#[test]
fn activation_values_match_definitions() {
    let tape = Tape::new();
    let x = tape.constant_1d(vec![0.0, -30.0, -3.0, 3.0, -2.0]);
    assert_eq!(x.elu().value()[0], 0.0);
    assert!((x.elu().value()[1] - (-1.0)).abs() < 1e-12);
    assert_eq!(x.relu().value()[2], 0.0);
    assert_eq!(x.relu().value()[3], 3.0);
    assert!((x.leaky_relu(0.01).value()[4] - (-0.02)).abs() < 1e-15);
}

#[test]
fn shift_reverse_minmod_minmax_pass_fd_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 8;
    let a = randvec(&mut rng, n, -1.0, 1.0);
    let b = randvec(&mut rng, n, -1.0, 1.0);
    let w = randvec(&mut rng, n, -1.0, 1.0);

    for pad in [PadMode::Circular, PadMode::Replicate] {
        let wc = w.clone();
        check_grad(a.clone(), &[n], move |t, x| {
            let c = t.constant_1d(wc.clone());
            x.shift(1, pad).add(&x.shift(-1, pad)).mul(&c).sum()
        }, 1e-6);
    }

    let wc = w.clone();
    check_grad(a.clone(), &[n], move |t, x| {
        let c = t.constant_1d(wc.clone());
        x.reverse().mul(&c).sum()
    }, 1e-6);

    let (bc, wc) = (b.clone(), w.clone());
    check_grad(a.clone(), &[n], move |t, x| {
        let bb = t.constant_1d(bc.clone());
        let cc = t.constant_1d(wc.clone());
        x.minmod(&bb).mul(&cc).sum()
    }, 1e-6);

    let (bc, wc) = (b.clone(), w.clone());
    check_grad(a.clone(), &[n], move |t, x| {
        let bb = t.constant_1d(bc.clone());
        let cc = t.constant_1d(wc.clone());
        x.max2(&bb).add(&x.min2(&bb)).mul(&cc).sum()
    }, 1e-6);

    check_grad(a, &[n], |_, x| x.reduce_max(), 1e-6);
}

#[test]
fn broadcast_and_stack_pass_fd_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 6;
    let a = randvec(&mut rng, n, 0.5, 1.5);
    let w = randvec(&mut rng, 2 * n, -1.0, 1.0);

    check_grad(a.clone(), &[n], |_, x| {
        let s = x.sum();
        x.mul_bcast(&s).sum()
    }, 1e-6);

    let wc = w.clone();
    check_grad(a, &[n], move |t, x| {
        let c = t.constant_1d(wc.clone());
        let m = Tensor::stack_cols(&[x, &x.scale(2.0)]);
        m.reshape(&[2 * n]).mul(&c).sum()
    }, 1e-6);
}

#[test]
fn dense_and_conv_pass_fd_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (n, ci, co, k) = (6, 3, 2, 3);
    let x = randvec(&mut rng, n * ci, -1.0, 1.0);
    let w = randvec(&mut rng, ci * co, -1.0, 1.0);
    let b = randvec(&mut rng, co, -0.5, 0.5);
    let cw = randvec(&mut rng, co * k * ci, -1.0, 1.0);

    // Through the input.
    let (wc, bc) = (w.clone(), b.clone());
    check_grad(x.clone(), &[n, ci], move |t, xx| {
        let w = t.constant(wc.clone(), &[ci, co]);
        let b = t.constant_1d(bc.clone());
        tapegrad::dense(xx, &w, &b).sum()
    }, 1e-6);

    // Through dense weights.
    let (xc, bc) = (x.clone(), b.clone());
    check_grad(w.clone(), &[ci, co], move |t, ww| {
        let x = t.constant(xc.clone(), &[n, ci]);
        let b = t.constant_1d(bc.clone());
        tapegrad::dense(&x, ww, &b).sum()
    }, 1e-6);

    // Through conv weights, both paddings.
    for pad in [PadMode::Circular, PadMode::Replicate] {
        let (xc, bc) = (x.clone(), b.clone());
        check_grad(cw.clone(), &[co, k, ci], move |t, ww| {
            let x = t.constant(xc.clone(), &[n, ci]);
            let b = t.constant_1d(bc.clone());
            tapegrad::conv1d(&x, ww, &b, pad).sum()
        }, 1e-6);
    }
}

#[test]
fn pooling_and_upsampling_pass_fd_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (n, c) = (8, 2);
    let x = randvec(&mut rng, n * c, -1.0, 1.0);
    let w = randvec(&mut rng, n / 2 * c, -1.0, 1.0);
    let wc = w.clone();
    check_grad(x.clone(), &[n, c], move |t, xx| {
        let c0 = t.constant(wc.clone(), &[n / 2, c]);
        tapegrad::maxpool2(xx).mul(&c0).sum()
    }, 1e-6);

    let w2 = randvec(&mut rng, 2 * n * c, -1.0, 1.0);
    check_grad(x, &[n, c], move |t, xx| {
        let c0 = t.constant(w2.clone(), &[2 * n, c]);
        tapegrad::upsample2(xx).mul(&c0).sum()
    }, 1e-6);
}

#[test]
fn whole_networks_pass_fd_check_on_a_few_directions() {
    for (arch, pad) in [
        (
            ArchDesc::SharedMlp { in_channels: 3, width: 6, hidden_layers: 2, activation: Activation::Elu },
            PadMode::Circular,
        ),
        (
            ArchDesc::UNet1d { in_channels: 3, base_channels: 4, depth: 2, activation: Activation::Elu },
            PadMode::Circular,
        ),
        (
            ArchDesc::UNet1d { in_channels: 3, base_channels: 4, depth: 2, activation: Activation::Elu },
            PadMode::Replicate,
        ),
    ] {
        let model = Model::init(arch.clone(), 123, false);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 8;
        let xdata = randvec(&mut rng, n * 3, -1.0, 1.0);

        let tape = Tape::new();
        let leaves = model.bind(&tape, true);
        let x = tape.constant(xdata.clone(), &[n, 3]);
        let y = forward(&arch, &leaves, &x, pad).unwrap();
        let loss = y.mul(&y).sum();
        let grads = loss.backward();

        // Spot-check a few random parameter coordinates per tensor.
        let eps = 1e-6;
        for (pi, p) in model.params.iter().enumerate() {
            let g = grads.wrt_or_zeros(&leaves[pi]);
            for _ in 0..3.min(p.data.len()) {
                let i = rng.gen_range(0..p.data.len());
                let run = |delta: f64| {
                    let mut m2 = model.clone();
                    m2.params[pi].data[i] += delta;
                    let t2 = Tape::new();
                    let l2 = m2.bind(&t2, false);
                    let x2 = t2.constant(xdata.clone(), &[n, 3]);
                    let y2 = forward(&arch, &l2, &x2, pad).unwrap();
                    y2.mul(&y2).sum().scalar_value()
                };
                let fd = (run(eps) - run(-eps)) / (2.0 * eps);
                let denom = fd.abs().max(1e-3);
                assert!(
                    (g[i] - fd).abs() / denom < 1e-5,
                    "{} [{i}]: analytic {} vs fd {fd}",
                    p.name,
                    g[i]
                );
            }
        }
    }
}

#[test]
fn replicate_conv_matches_edge_extended_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, ci, co, k, p) = (7, 2, 3, 5, 2usize);
    let x = randvec(&mut rng, n * ci, -1.0, 1.0);
    let w = randvec(&mut rng, co * k * ci, -1.0, 1.0);
    let b = randvec(&mut rng, co, -0.5, 0.5);

    let tape = Tape::new();
    let xt = tape.constant(x.clone(), &[n, ci]);
    let wt = tape.constant(w.clone(), &[co, k, ci]);
    let bt = tape.constant_1d(b.clone());
    let y = tapegrad::conv1d(&xt, &wt, &bt, PadMode::Replicate);

    // Oracle: manually extend the edges, then read off valid positions.
    let mut ext = Vec::new();
    for _ in 0..p {
        ext.extend_from_slice(&x[0..ci]);
    }
    ext.extend_from_slice(&x);
    for _ in 0..p {
        ext.extend_from_slice(&x[(n - 1) * ci..n * ci]);
    }
    for j in 0..n {
        for oc in 0..co {
            let mut acc = b[oc];
            for r in 0..k {
                for c in 0..ci {
                    acc += w[(oc * k + r) * ci + c] * ext[(j + r) * ci + c];
                }
            }
            assert!((y.value()[j * co + oc] - acc).abs() < 1e-12);
        }
    }
}

#[test]
fn circular_padding_wraps_like_the_index_rule() {
    // For n = 4, p = 1 the padded sequence must read [x3, x0, x1, x2, x3, x0]:
    // a kernel [1, 0, 0] therefore shifts the signal by one to the left.
    let tape = Tape::new();
    let x = tape.constant(vec![10.0, 20.0, 30.0, 40.0], &[4, 1]);
    let w = tape.constant(vec![1.0, 0.0, 0.0], &[1, 3, 1]);
    let b = tape.constant_1d(vec![0.0]);
    let y = tapegrad::conv1d(&x, &w, &b, PadMode::Circular);
    assert_eq!(y.value(), &[40.0, 10.0, 20.0, 30.0]);
}

#[test]
fn conv_with_width_one_kernel_reproduces_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, ci, co) = (5, 3, 2);
    let x = randvec(&mut rng, n * ci, -1.0, 1.0);
    let w = randvec(&mut rng, ci * co, -1.0, 1.0);
    let b = randvec(&mut rng, co, -0.5, 0.5);

    let tape = Tape::new();
    let xt = tape.constant(x.clone(), &[n, ci]);
    let b_t = tape.constant_1d(b.clone());
    let dense_w = tape.constant(w.clone(), &[ci, co]);
    let yd = tapegrad::dense(&xt, &dense_w, &b_t);

    // Same weights rearranged as a [co, 1, ci] kernel.
    let mut cw = vec![0.0; co * ci];
    for i in 0..ci {
        for o in 0..co {
            cw[o * ci + i] = w[i * co + o];
        }
    }
    let conv_w = tape.constant(cw, &[co, 1, ci]);
    let yc = tapegrad::conv1d(&xt, &conv_w, &b_t, PadMode::Circular);
    for (a, b) in yd.value().iter().zip(yc.value()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn identity_kernel_passes_input_through() {
    let tape = Tape::new();
    let x = tape.constant(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[3, 2]);
    // k = 1, w[o, 0, i] = delta_oi
    let w = tape.constant(vec![1.0, 0.0, 0.0, 1.0], &[2, 1, 2]);
    let b = tape.constant_1d(vec![0.0, 0.0]);
    let y = tapegrad::conv1d(&x, &w, &b, PadMode::Circular);
    assert_eq!(y.value(), x.value());
}

#[test]
fn maxpool_breaks_ties_toward_the_lower_index() {
    let tape = Tape::new();
    let x = tape.leaf(vec![2.0, 2.0, 1.0, 5.0], &[4, 1]);
    let y = tapegrad::maxpool2(&x);
    assert_eq!(y.value(), &[2.0, 5.0]);
    let g = y.sum().backward();
    assert_eq!(g.wrt(&x).unwrap(), &[1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn zero_final_layer_gives_zero_output_for_both_archs() {
    for arch in [
        ArchDesc::SharedMlp { in_channels: 4, width: 8, hidden_layers: 2, activation: Activation::Relu },
        ArchDesc::UNet1d { in_channels: 4, base_channels: 4, depth: 2, activation: Activation::Elu },
    ] {
        let model = Model::init(arch.clone(), 3, true);
        let tape = Tape::new();
        let leaves = model.bind(&tape, false);
        let x = tape.constant((0..32).map(|i| i as f64 * 0.1 - 1.0).collect(), &[8, 4]);
        let y = forward(&arch, &leaves, &x, PadMode::Circular).unwrap();
        assert!(y.value().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn shared_mlp_identity_configuration_doubles_positive_input() {
    // One hidden block with identity weights on a width-2 network: the skip
    // connection turns x into relu(2x), and an identity read-out keeps 2x.
    let arch = ArchDesc::SharedMlp { in_channels: 2, width: 2, hidden_layers: 1, activation: Activation::Relu };
    let mut model = Model::init(arch.clone(), 0, false);
    for p in &mut model.params {
        let eye = vec![1.0, 0.0, 0.0, 1.0];
        match p.name.as_str() {
            "in.w" | "hidden0.w" => p.data = eye,
            "out.w" => p.data = vec![1.0, 0.0],
            _ => p.data.iter_mut().for_each(|v| *v = 0.0),
        }
    }
    let tape = Tape::new();
    let leaves = model.bind(&tape, false);
    let x = tape.constant(vec![0.5, 1.0, 2.0, 0.25], &[2, 2]);
    let y = forward(&arch, &leaves, &x, PadMode::Circular).unwrap();
    assert_eq!(y.value(), &[1.0, 4.0]);
}

#[test]
fn shared_mlp_is_translation_equivariant() {
    let arch = ArchDesc::SharedMlp { in_channels: 3, width: 10, hidden_layers: 2, activation: Activation::Elu };
    let model = Model::init(arch.clone(), 99, false);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 7;
    let x = randvec(&mut rng, n * 3, -1.0, 1.0);
    let mut xs = vec![0.0; n * 3];
    for i in 0..n {
        xs[((i + 1) % n) * 3..((i + 1) % n) * 3 + 3].copy_from_slice(&x[i * 3..i * 3 + 3]);
    }

    let tape = Tape::new();
    let leaves = model.bind(&tape, false);
    let y = forward(&arch, &leaves, &tape.constant(x, &[n, 3]), PadMode::Circular).unwrap();
    let ys = forward(&arch, &leaves, &tape.constant(xs, &[n, 3]), PadMode::Circular).unwrap();
    for i in 0..n {
        assert!((ys.value()[(i + 1) % n] - y.value()[i]).abs() < 1e-14);
    }
}

#[test]
fn unet_is_shift_equivariant_at_pool_granularity() {
    let arch = ArchDesc::UNet1d { in_channels: 2, base_channels: 4, depth: 3, activation: Activation::Elu };
    let model = Model::init(arch.clone(), 100, false);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 32;
    let shift = 8; // one bottom-level cell
    let x = randvec(&mut rng, n * 2, -1.0, 1.0);
    let mut xs = vec![0.0; n * 2];
    for i in 0..n {
        let j = (i + shift) % n;
        xs[i * 2..i * 2 + 2].copy_from_slice(&x[j * 2..j * 2 + 2]);
    }
    let tape = Tape::new();
    let leaves = model.bind(&tape, false);
    let y = forward(&arch, &leaves, &tape.constant(x, &[n, 2]), PadMode::Circular).unwrap();
    let ys = forward(&arch, &leaves, &tape.constant(xs, &[n, 2]), PadMode::Circular).unwrap();
    for i in 0..n {
        assert!((ys.value()[i] - y.value()[(i + shift) % n]).abs() < 1e-12);
    }
}

#[test]
fn unet_parameter_count_matches_symbolic_formula() {
    let (cin, w, d) = (7usize, 32usize, 3usize);
    let arch = ArchDesc::UNet1d { in_channels: cin, base_channels: w, depth: d, activation: Activation::Elu };
    // Symbolic count, written out independently of param_specs.
    let ch = |l: usize| w << l;
    let mut expect = 0usize;
    for l in 0..=d {
        let c_in = if l == 0 { cin } else { ch(l - 1) };
        expect += ch(l) * 3 * c_in + ch(l); // first conv
        expect += ch(l) * 3 * ch(l) + ch(l); // second conv
    }
    for l in 0..d {
        expect += ch(l) * 3 * (ch(l + 1) + ch(l)) + ch(l);
        expect += ch(l) * 3 * ch(l) + ch(l);
    }
    expect += w + 1; // 1x1 read-out
    assert_eq!(arch.param_count(), expect);
    assert_eq!(Model::init(arch, 0, false).param_count(), expect);
}

#[test]
fn unet_rejects_lengths_not_divisible_by_pool_factor() {
    let arch = ArchDesc::UNet1d { in_channels: 2, base_channels: 4, depth: 3, activation: Activation::Elu };
    let model = Model::init(arch.clone(), 0, false);
    let tape = Tape::new();
    let leaves = model.bind(&tape, false);
    let x = tape.constant(vec![0.0; 20 * 2], &[20, 2]);
    let err = forward(&arch, &leaves, &x, PadMode::Circular).unwrap_err();
    assert!(matches!(err, tapegrad::NnError::LengthNotDivisible { .. }));
}

#[test]
fn adamw_single_step_matches_closed_form() {
    let arch = ArchDesc::SharedMlp { in_channels: 1, width: 1, hidden_layers: 0, activation: Activation::Relu };
    let mut model = Model::init(arch, 0, false);
    for p in &mut model.params {
        p.data.iter_mut().for_each(|v| *v = 0.5);
    }
    let zeros: Vec<Vec<f64>> = model.params.iter().map(|p| vec![0.0; p.data.len()]).collect();

    // Zero gradient and zero weight decay leave parameters untouched.
    let mut opt = AdamW::new(1e-3, 0.0);
    let before = model.clone();
    opt.step(&mut model.params, &zeros);
    assert_eq!(model, before);

    // One step from zero moments: delta = -lr * g/(|g| + eps') - lr * wd * p
    // with eps' absorbing the bias-corrected epsilon.
    let mut opt = AdamW::new(1e-3, 1e-2);
    let g = 0.3;
    let grads: Vec<Vec<f64>> = model.params.iter().map(|p| vec![g; p.data.len()]).collect();
    let p0 = model.params[0].data[0];
    opt.step(&mut model.params, &grads);
    let mhat = g;
    let vhat = g * g;
    let expect = p0 - 1e-3 * mhat / (vhat.sqrt() + 1e-8) - 1e-3 * 1e-2 * p0;
    assert!((model.params[0].data[0] - expect).abs() < 1e-15);

    // Pure decay once the gradient goes back to zero and moments have decayed
    // to (numerically) nothing: p shrinks by (1 - lr * wd) each step.
    let mut opt = AdamW::new(1e-3, 1e-2);
    let p0 = model.params[0].data[0];
    opt.step(&mut model.params, &zeros);
    assert!((model.params[0].data[0] - p0 * (1.0 - 1e-3 * 1e-2)).abs() < 1e-15);
}

#[test]
fn forward_and_backward_are_bitwise_reproducible() {
    let arch = ArchDesc::UNet1d { in_channels: 3, base_channels: 4, depth: 2, activation: Activation::Elu };
    let run = || {
        let model = Model::init(arch.clone(), 2024, false);
        let tape = Tape::new();
        let leaves = model.bind(&tape, true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = tape.constant(randvec(&mut rng, 16 * 3, -1.0, 1.0), &[16, 3]);
        let y = forward(&arch, &leaves, &x, PadMode::Circular).unwrap();
        let loss = y.mul(&y).sum();
        let grads = loss.backward();
        let mut bits: Vec<u64> = y.value().iter().map(|v| v.to_bits()).collect();
        for l in &leaves {
            bits.extend(grads.wrt_or_zeros(l).iter().map(|v| v.to_bits()));
        }
        bits
    };
    assert_eq!(run(), run());
}

#[test]
fn checkpoint_roundtrip_is_bit_exact_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let arch = ArchDesc::SharedMlp { in_channels: 4, width: 6, hidden_layers: 2, activation: Activation::LeakyRelu { slope: 0.01 } };
    let model = Model::init(arch.clone(), 17, false);
    let ckpt = NetworkCheckpoint {
        model,
        stats: ChannelStats { mean: vec![0.1; 4], var: vec![2.0; 4], passthrough: vec![false; 4] },
        meta: serde_json::json!({"note": "roundtrip"}),
    };
    let path = dir.path().join("ck");
    save_checkpoint(&ckpt, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    assert_eq!(loaded.model, ckpt.model);
    assert_eq!(loaded.stats, ckpt.stats);

    // Identical forward outputs bit-for-bit.
    let tape = Tape::new();
    let x = tape.constant(vec![0.3; 5 * 4], &[5, 4]);
    let y1 = forward(&ckpt.model.arch, &ckpt.model.bind(&tape, false), &x, PadMode::Circular).unwrap();
    let y2 = forward(&loaded.model.arch, &loaded.model.bind(&tape, false), &x, PadMode::Circular).unwrap();
    let b1: Vec<u64> = y1.value().iter().map(|v| v.to_bits()).collect();
    let b2: Vec<u64> = y2.value().iter().map(|v| v.to_bits()).collect();
    assert_eq!(b1, b2);

    // Truncated blob fails the checksum.
    let blob = std::fs::read(path.join("params.bin")).unwrap();
    std::fs::write(path.join("params.bin"), &blob[..blob.len() - 8]).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(tapegrad::CheckpointError::ChecksumMismatch { .. })));
    std::fs::write(path.join("params.bin"), &blob).unwrap();

    // Unknown tags are a format revision this build does not understand.
    let manifest = std::fs::read_to_string(path.join("manifest.json")).unwrap();
    std::fs::write(path.join("manifest.json"), manifest.replace("shared_mlp", "hyper_mlp")).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(tapegrad::CheckpointError::VersionMismatch(_))));
    std::fs::write(path.join("manifest.json"), manifest.replace("ipnc-ckpt/1", "ipnc-ckpt/9")).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(tapegrad::CheckpointError::VersionMismatch(_))));
}
