use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tape::BackFn;
use crate::tensor::{tensor_parts, PadMode, Tensor};
use crate::Tape;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("input has {got} channels, architecture expects {want}")]
    ChannelMismatch { got: usize, want: usize },
    #[error("input length {len} is not divisible by {div} (pooling depth {depth})")]
    LengthNotDivisible { len: usize, div: usize, depth: usize },
    #[error("architecture expects {want} parameter tensors, got {got}")]
    ParamMismatch { want: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
    Elu,
}

impl Activation {
    pub fn apply(&self, x: &Tensor) -> Tensor {
        match self {
            Activation::Relu => x.relu(),
            Activation::LeakyRelu { slope } => x.leaky_relu(*slope),
            Activation::Elu => x.elu(),
        }
    }
}

/// Network architecture descriptor; fixes the ordered parameter layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchDesc {
    /// Per-point residual MLP shared across the spatial axis.
    SharedMlp {
        in_channels: usize,
        width: usize,
        hidden_layers: usize,
        activation: Activation,
    },
    /// 1D U-Net: `depth` pool/upsample levels, channels double per level.
    UNet1d {
        in_channels: usize,
        base_channels: usize,
        depth: usize,
        activation: Activation,
    },
}

impl ArchDesc {
    pub fn in_channels(&self) -> usize {
        match *self {
            ArchDesc::SharedMlp { in_channels, .. } => in_channels,
            ArchDesc::UNet1d { in_channels, .. } => in_channels,
        }
    }

    /// Spatial granularity at which the architecture is shift-equivariant
    /// (and the divisibility the input length must satisfy).
    pub fn stride(&self) -> usize {
        match *self {
            ArchDesc::SharedMlp { .. } => 1,
            ArchDesc::UNet1d { depth, .. } => 1 << depth,
        }
    }

    /// Ordered parameter names and shapes. Dense weights are [c_in, c_out];
    /// convolution weights are [c_out, k, c_in].
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        match *self {
            ArchDesc::SharedMlp { in_channels, width, hidden_layers, .. } => {
                out.push(("in.w".into(), vec![in_channels, width]));
                out.push(("in.b".into(), vec![width]));
                for l in 0..hidden_layers {
                    out.push((format!("hidden{l}.w"), vec![width, width]));
                    out.push((format!("hidden{l}.b"), vec![width]));
                }
                out.push(("out.w".into(), vec![width, 1]));
                out.push(("out.b".into(), vec![1]));
            }
            ArchDesc::UNet1d { in_channels, base_channels, depth, .. } => {
                let ch = |l: usize| base_channels << l;
                for l in 0..=depth {
                    let cin = if l == 0 { in_channels } else { ch(l - 1) };
                    out.push((format!("enc{l}.a.w"), vec![ch(l), 3, cin]));
                    out.push((format!("enc{l}.a.b"), vec![ch(l)]));
                    out.push((format!("enc{l}.b.w"), vec![ch(l), 3, ch(l)]));
                    out.push((format!("enc{l}.b.b"), vec![ch(l)]));
                }
                for l in (0..depth).rev() {
                    out.push((format!("dec{l}.a.w"), vec![ch(l), 3, ch(l + 1) + ch(l)]));
                    out.push((format!("dec{l}.a.b"), vec![ch(l)]));
                    out.push((format!("dec{l}.b.w"), vec![ch(l), 3, ch(l)]));
                    out.push((format!("dec{l}.b.b"), vec![ch(l)]));
                }
                out.push(("out.w".into(), vec![1, 1, base_channels]));
                out.push(("out.b".into(), vec![1]));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_specs().iter().map(|(_, s)| s.iter().product::<usize>()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// An architecture together with its parameter values.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub arch: ArchDesc,
    pub params: Vec<Param>,
}

impl Model {
    /// Deterministic initialization: uniform Kaiming-style weights, zero
    /// biases. With `zero_final` the read-out layer starts at exactly zero so
    /// the initial network output vanishes.
    pub fn init(arch: ArchDesc, seed: u64, zero_final: bool) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = arch
            .param_specs()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = if name.ends_with(".b") || (zero_final && name.starts_with("out.")) {
                    vec![0.0; n]
                } else {
                    let fan_in: usize = match shape.len() {
                        2 => shape[0],            // dense [c_in, c_out]
                        3 => shape[1] * shape[2], // conv [c_out, k, c_in]
                        _ => n,
                    };
                    let limit = (6.0 / fan_in as f64).sqrt();
                    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
                };
                Param { name, shape, data }
            })
            .collect();
        Model { arch, params }
    }

    /// Place the parameters on a tape, as gradient-carrying leaves or as
    /// constants (inference).
    pub fn bind(&self, tape: &Tape, trainable: bool) -> Vec<Tensor> {
        self.params
            .iter()
            .map(|p| {
                if trainable {
                    tape.leaf(p.data.clone(), &p.shape)
                } else {
                    tape.constant(p.data.clone(), &p.shape)
                }
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }
}

/// Dense layer shared over the spatial axis: y[j,k] = sum_i w[i,k] x[j,i] + b[k].
pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(x.shape().len(), 2, "dense expects [n, c_in] input");
    assert_eq!(w.shape().len(), 2, "dense expects [c_in, c_out] weights");
    let (n, ci) = (x.shape()[0], x.shape()[1]);
    let (wci, co) = (w.shape()[0], w.shape()[1]);
    assert_eq!(ci, wci, "dense: input has {ci} channels, weight expects {wci}");
    assert_eq!(b.shape(), [co], "dense: bias shape mismatch");

    let (xid, xd) = tensor_parts(x);
    let (wid, wd) = tensor_parts(w);
    let (bid, bd) = tensor_parts(b);
    let mut out = vec![0.0; n * co];
    for j in 0..n {
        let row = &xd[j * ci..(j + 1) * ci];
        let o = &mut out[j * co..(j + 1) * co];
        o.copy_from_slice(&bd);
        for (i, &xv) in row.iter().enumerate() {
            let wrow = &wd[i * co..(i + 1) * co];
            for k in 0..co {
                o[k] += xv * wrow[k];
            }
        }
    }
    let needs = x.needs_grad() || w.needs_grad() || b.needs_grad();
    let (xd2, wd2) = (Rc::clone(&xd), Rc::clone(&wd));
    let back: BackFn = Box::new(move |g, sink| {
        sink.accumulate(xid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                let dr = &mut d[j * ci..(j + 1) * ci];
                for i in 0..ci {
                    let wrow = &wd2[i * co..(i + 1) * co];
                    let mut acc = 0.0;
                    for k in 0..co {
                        acc += gr[k] * wrow[k];
                    }
                    dr[i] += acc;
                }
            }
        });
        sink.accumulate(wid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                let xr = &xd2[j * ci..(j + 1) * ci];
                for (i, &xv) in xr.iter().enumerate() {
                    let dr = &mut d[i * co..(i + 1) * co];
                    for k in 0..co {
                        dr[k] += xv * gr[k];
                    }
                }
            }
        });
        sink.accumulate(bid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                for k in 0..co {
                    d[k] += gr[k];
                }
            }
        });
    });
    Tensor::fresh(x.tape(), out, &[n, co], needs, Some(back))
}

/// 1D convolution over [n, c_in] with kernel [c_out, 2p+1, c_in] and the given
/// padding; output keeps the spatial length.
pub fn conv1d(x: &Tensor, w: &Tensor, b: &Tensor, pad: PadMode) -> Tensor {
    assert_eq!(x.shape().len(), 2, "conv1d expects [n, c_in] input");
    assert_eq!(w.shape().len(), 3, "conv1d expects [c_out, k, c_in] weights");
    let (n, ci) = (x.shape()[0], x.shape()[1]);
    let (co, k, wci) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    assert_eq!(ci, wci, "conv1d: input has {ci} channels, kernel expects {wci}");
    assert!(k % 2 == 1, "conv1d kernel width must be odd, got {k}");
    assert_eq!(b.shape(), [co], "conv1d: bias shape mismatch");
    let p = (k / 2) as isize;

    let (xid, xd) = tensor_parts(x);
    let (wid, wd) = tensor_parts(w);
    let (bid, bd) = tensor_parts(b);

    // Spatial source index per (output row, tap).
    let mut src = vec![0usize; n * k];
    for j in 0..n {
        for r in 0..k {
            src[j * k + r] = pad.map(j as isize + r as isize - p, n);
        }
    }

    let mut out = vec![0.0; n * co];
    for j in 0..n {
        let o = &mut out[j * co..(j + 1) * co];
        o.copy_from_slice(&bd);
        for r in 0..k {
            let xr = &xd[src[j * k + r] * ci..src[j * k + r] * ci + ci];
            for oc in 0..co {
                let wrow = &wd[(oc * k + r) * ci..(oc * k + r) * ci + ci];
                let mut acc = 0.0;
                for c in 0..ci {
                    acc += wrow[c] * xr[c];
                }
                o[oc] += acc;
            }
        }
    }

    let needs = x.needs_grad() || w.needs_grad() || b.needs_grad();
    let src = Rc::new(src);
    let (xd2, wd2) = (Rc::clone(&xd), Rc::clone(&wd));
    let back: BackFn = Box::new(move |g, sink| {
        sink.accumulate(xid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                for r in 0..k {
                    let dst = &mut d[src[j * k + r] * ci..src[j * k + r] * ci + ci];
                    for oc in 0..co {
                        let wrow = &wd2[(oc * k + r) * ci..(oc * k + r) * ci + ci];
                        let gv = gr[oc];
                        for c in 0..ci {
                            dst[c] += gv * wrow[c];
                        }
                    }
                }
            }
        });
        sink.accumulate(wid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                for r in 0..k {
                    let xr = &xd2[src[j * k + r] * ci..src[j * k + r] * ci + ci];
                    for oc in 0..co {
                        let dst = &mut d[(oc * k + r) * ci..(oc * k + r) * ci + ci];
                        let gv = gr[oc];
                        for c in 0..ci {
                            dst[c] += gv * xr[c];
                        }
                    }
                }
            }
        });
        sink.accumulate(bid, |d| {
            for j in 0..n {
                let gr = &g[j * co..(j + 1) * co];
                for oc in 0..co {
                    d[oc] += gr[oc];
                }
            }
        });
    });
    Tensor::fresh(x.tape(), out, &[n, co], needs, Some(back))
}

/// Width-2 max pooling along the spatial axis; ties route the gradient to the
/// lower index.
pub fn maxpool2(x: &Tensor) -> Tensor {
    assert_eq!(x.shape().len(), 2, "maxpool2 expects [n, c] input");
    let (n, c) = (x.shape()[0], x.shape()[1]);
    assert!(n % 2 == 0, "maxpool2 needs an even length, got {n}");
    let (xid, xd) = tensor_parts(x);
    let m = n / 2;
    let mut out = vec![0.0; m * c];
    let mut arg = vec![0u32; m * c];
    for i in 0..m {
        for j in 0..c {
            let a = xd[(2 * i) * c + j];
            let b = xd[(2 * i + 1) * c + j];
            if a >= b {
                out[i * c + j] = a;
                arg[i * c + j] = (2 * i * c + j) as u32;
            } else {
                out[i * c + j] = b;
                arg[i * c + j] = ((2 * i + 1) * c + j) as u32;
            }
        }
    }
    let arg = Rc::new(arg);
    let back: BackFn = Box::new(move |g, sink| {
        sink.accumulate(xid, |d| {
            for (i, &a) in arg.iter().enumerate() {
                d[a as usize] += g[i];
            }
        })
    });
    Tensor::fresh(x.tape(), out, &[m, c], x.needs_grad(), Some(back))
}

/// Nearest-neighbour upsampling by a factor of 2 along the spatial axis.
pub fn upsample2(x: &Tensor) -> Tensor {
    assert_eq!(x.shape().len(), 2, "upsample2 expects [n, c] input");
    let (n, c) = (x.shape()[0], x.shape()[1]);
    let (xid, xd) = tensor_parts(x);
    let mut out = vec![0.0; 2 * n * c];
    for i in 0..n {
        let row = &xd[i * c..(i + 1) * c];
        out[(2 * i) * c..(2 * i + 1) * c].copy_from_slice(row);
        out[(2 * i + 1) * c..(2 * i + 2) * c].copy_from_slice(row);
    }
    let back: BackFn = Box::new(move |g, sink| {
        sink.accumulate(xid, |d| {
            for i in 0..n {
                for j in 0..c {
                    d[i * c + j] += g[(2 * i) * c + j] + g[(2 * i + 1) * c + j];
                }
            }
        })
    });
    Tensor::fresh(x.tape(), out, &[2 * n, c], x.needs_grad(), Some(back))
}

/// Run the architecture on an [n, c_in] input; returns a length-n vector.
/// `leaves` must come from [`Model::bind`] in parameter order.
pub fn forward(arch: &ArchDesc, leaves: &[Tensor], x: &Tensor, pad: PadMode) -> Result<Tensor, NnError> {
    let specs = arch.param_specs();
    if leaves.len() != specs.len() {
        return Err(NnError::ParamMismatch { want: specs.len(), got: leaves.len() });
    }
    assert_eq!(x.shape().len(), 2, "forward expects [n, c] input");
    let (n, c) = (x.shape()[0], x.shape()[1]);
    if c != arch.in_channels() {
        return Err(NnError::ChannelMismatch { got: c, want: arch.in_channels() });
    }
    match *arch {
        ArchDesc::SharedMlp { hidden_layers, activation, .. } => {
            let mut h = dense(x, &leaves[0], &leaves[1]);
            for l in 0..hidden_layers {
                let r = dense(&h, &leaves[2 + 2 * l], &leaves[3 + 2 * l]);
                h = activation.apply(&h.add(&r));
            }
            let y = dense(&h, &leaves[leaves.len() - 2], &leaves[leaves.len() - 1]);
            Ok(y.reshape(&[n]))
        }
        ArchDesc::UNet1d { depth, activation, .. } => {
            let div = 1usize << depth;
            if n % div != 0 {
                return Err(NnError::LengthNotDivisible { len: n, div, depth });
            }
            let mut idx = 0;
            let mut take2 = |h: &Tensor| {
                let a = conv1d(h, &leaves[idx], &leaves[idx + 1], pad);
                let a = activation.apply(&a);
                let b = conv1d(&a, &leaves[idx + 2], &leaves[idx + 3], pad);
                idx += 4;
                activation.apply(&b)
            };
            let mut skips = Vec::with_capacity(depth);
            let mut h = take2(x);
            for _ in 0..depth {
                skips.push(h.clone());
                h = take2(&maxpool2(&h));
            }
            for l in (0..depth).rev() {
                let up = upsample2(&h);
                h = take2(&up.concat_cols(&skips[l]));
            }
            let y = conv1d(&h, &leaves[idx], &leaves[idx + 1], pad);
            Ok(y.reshape(&[n]))
        }
    }
}
