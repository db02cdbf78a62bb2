use std::rc::Rc;

use crate::tape::{BackFn, Tape};

/// Boundary handling for shifts and convolution padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    /// Wrap around (periodic boundary).
    Circular,
    /// Repeat the edge value (fixed boundary).
    Replicate,
}

impl PadMode {
    /// Resolve an out-of-range index according to the padding rule.
    #[inline]
    pub fn map(self, idx: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            PadMode::Circular => idx.rem_euclid(n) as usize,
            PadMode::Replicate => idx.clamp(0, n - 1) as usize,
        }
    }
}

/// Immutable value on a [`Tape`]. Cloning is cheap; the data is shared.
#[derive(Clone)]
pub struct Tensor {
    tape: Tape,
    id: usize,
    shape: Vec<usize>,
    data: Rc<Vec<f64>>,
    needs_grad: bool,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor").field("id", &self.id).field("shape", &self.shape).finish()
    }
}

fn same_shape(a: &Tensor, b: &Tensor, op: &str) {
    assert_eq!(a.shape, b.shape, "{op}: shape mismatch {:?} vs {:?}", a.shape, b.shape);
    assert!(a.tape.same_tape(&b.tape), "{op}: tensors from different tapes");
}

impl Tensor {
    pub(crate) fn fresh(tape: &Tape, data: Vec<f64>, shape: &[usize], needs_grad: bool, back: Option<BackFn>) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "tensor shape {shape:?} does not match data length {}",
            data.len()
        );
        let (id, data) = tape.push(data, needs_grad, back);
        Tensor { tape: tape.clone(), id, shape: shape.to_vec(), data, needs_grad }
    }

    fn unary(&self, out: Vec<f64>, back: Option<BackFn>) -> Tensor {
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad(), back)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn value(&self) -> &[f64] {
        &self.data
    }

    pub fn scalar_value(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "scalar_value on tensor of length {}", self.data.len());
        self.data[0]
    }

    pub(crate) fn needs_grad(&self) -> bool {
        self.needs_grad
    }

    /// Same data viewed under a new shape.
    pub fn reshape(&self, shape: &[usize]) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            self.len(),
            "reshape to {shape:?} incompatible with length {}",
            self.len()
        );
        let id = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(id, |dst| {
                for (d, s) in dst.iter_mut().zip(g) {
                    *d += s;
                }
            })
        });
        Tensor::fresh(&self.tape, self.data.as_ref().clone(), shape, self.needs_grad(), Some(back))
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        same_shape(self, other, "add");
        let out: Vec<f64> = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        let (ia, ib) = (self.id, other.id);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d += s;
                }
            });
            sink.accumulate(ib, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d += s;
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        same_shape(self, other, "sub");
        let out: Vec<f64> = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        let (ia, ib) = (self.id, other.id);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d += s;
                }
            });
            sink.accumulate(ib, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d -= s;
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        same_shape(self, other, "mul");
        let out: Vec<f64> = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).collect();
        let (ia, ib) = (self.id, other.id);
        let (da, db) = (Rc::clone(&self.data), Rc::clone(&other.data));
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * db[i];
                }
            });
            sink.accumulate(ib, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * da[i];
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    pub fn div(&self, other: &Tensor) -> Tensor {
        same_shape(self, other, "div");
        let out: Vec<f64> = self.data.iter().zip(other.data.iter()).map(|(a, b)| a / b).collect();
        let (ia, ib) = (self.id, other.id);
        let (da, db) = (Rc::clone(&self.data), Rc::clone(&other.data));
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] / db[i];
                }
            });
            sink.accumulate(ib, |d| {
                for i in 0..d.len() {
                    d[i] -= g[i] * da[i] / (db[i] * db[i]);
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a * c).collect();
        let ia = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d += s * c;
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn add_scalar(&self, c: f64) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a + c).collect();
        let ia = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for (d, s) in d.iter_mut().zip(g) {
                    *d += s;
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn neg(&self) -> Tensor {
        self.scale(-1.0)
    }

    pub fn sqrt(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a.sqrt()).collect();
        let ia = self.id;
        let out_rc = Rc::new(out.clone());
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] / (2.0 * out_rc[i]);
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn exp(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a.exp()).collect();
        let ia = self.id;
        let out_rc = Rc::new(out.clone());
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * out_rc[i];
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn recip(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| 1.0 / a).collect();
        let ia = self.id;
        let out_rc = Rc::new(out.clone());
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] -= g[i] * out_rc[i] * out_rc[i];
                }
            })
        });
        self.unary(out, Some(back))
    }

    /// |x| with subgradient 0 at x = 0.
    pub fn abs(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a.abs()).collect();
        let ia = self.id;
        let da = Rc::clone(&self.data);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * if da[i] > 0.0 { 1.0 } else if da[i] < 0.0 { -1.0 } else { 0.0 };
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn relu(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|a| a.max(0.0)).collect();
        let ia = self.id;
        let da = Rc::clone(&self.data);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    if da[i] > 0.0 {
                        d[i] += g[i];
                    }
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|&a| if a >= 0.0 { a } else { slope * a }).collect();
        let ia = self.id;
        let da = Rc::clone(&self.data);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * if da[i] >= 0.0 { 1.0 } else { slope };
                }
            })
        });
        self.unary(out, Some(back))
    }

    /// elu(x) = x for x >= 0, exp(x) - 1 otherwise.
    pub fn elu(&self) -> Tensor {
        let out: Vec<f64> = self.data.iter().map(|&a| if a >= 0.0 { a } else { a.exp() - 1.0 }).collect();
        let ia = self.id;
        let da = Rc::clone(&self.data);
        let out_rc = Rc::new(out.clone());
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * if da[i] >= 0.0 { 1.0 } else { out_rc[i] + 1.0 };
                }
            })
        });
        self.unary(out, Some(back))
    }

    /// Slope limiter: 0 when the arguments disagree in sign, otherwise the one
    /// of smaller magnitude. The gradient follows the selected argument
    /// (subgradient at ties and at the sign boundary).
    pub fn minmod(&self, other: &Tensor) -> Tensor {
        same_shape(self, other, "minmod");
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut pick = vec![0u8; n]; // 0: zero region, 1: self, 2: other
        for i in 0..n {
            let (a, b) = (self.data[i], other.data[i]);
            if a * b > 0.0 {
                if a.abs() <= b.abs() {
                    out[i] = a;
                    pick[i] = 1;
                } else {
                    out[i] = b;
                    pick[i] = 2;
                }
            }
        }
        let (ia, ib) = (self.id, other.id);
        let pick = Rc::new(pick);
        let p2 = Rc::clone(&pick);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    if p2[i] == 1 {
                        d[i] += g[i];
                    }
                }
            });
            sink.accumulate(ib, |d| {
                for i in 0..d.len() {
                    if p2[i] == 2 {
                        d[i] += g[i];
                    }
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    pub fn max2(&self, other: &Tensor) -> Tensor {
        self.select2(other, true)
    }

    pub fn min2(&self, other: &Tensor) -> Tensor {
        self.select2(other, false)
    }

    fn select2(&self, other: &Tensor, take_max: bool) -> Tensor {
        same_shape(self, other, "min2/max2");
        let n = self.len();
        let mut out = vec![0.0; n];
        let mut pick = vec![0u8; n];
        for i in 0..n {
            let (a, b) = (self.data[i], other.data[i]);
            // Ties go to the left operand.
            let left = if take_max { a >= b } else { a <= b };
            out[i] = if left { a } else { b };
            pick[i] = if left { 1 } else { 2 };
        }
        let (ia, ib) = (self.id, other.id);
        let pick = Rc::new(pick);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    if pick[i] == 1 {
                        d[i] += g[i];
                    }
                }
            });
            sink.accumulate(ib, |d| {
                for i in 0..d.len() {
                    if pick[i] == 2 {
                        d[i] += g[i];
                    }
                }
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || other.needs_grad(), Some(back))
    }

    /// out[i] = in[i + offset] with boundary handling; rank-1 only.
    pub fn shift(&self, offset: isize, pad: PadMode) -> Tensor {
        assert_eq!(self.shape.len(), 1, "shift expects a rank-1 tensor");
        let n = self.len();
        assert!(offset.unsigned_abs() < n, "shift offset {offset} out of range for length {n}");
        let mut out = vec![0.0; n];
        let mut src = vec![0usize; n];
        for i in 0..n {
            let j = pad.map(i as isize + offset, n);
            src[i] = j;
            out[i] = self.data[j];
        }
        let ia = self.id;
        let src = Rc::new(src);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..g.len() {
                    d[src[i]] += g[i];
                }
            })
        });
        self.unary(out, Some(back))
    }

    /// Reverse a rank-1 tensor.
    pub fn reverse(&self) -> Tensor {
        assert_eq!(self.shape.len(), 1, "reverse expects a rank-1 tensor");
        let n = self.len();
        let out: Vec<f64> = self.data.iter().rev().copied().collect();
        let ia = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..g.len() {
                    d[n - 1 - i] += g[i];
                }
            })
        });
        self.unary(out, Some(back))
    }

    pub fn sum(&self) -> Tensor {
        let s: f64 = self.data.iter().sum();
        let ia = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for d in d.iter_mut() {
                    *d += g[0];
                }
            })
        });
        Tensor::fresh(&self.tape, vec![s], &[1], self.needs_grad(), Some(back))
    }

    /// Maximum entry as a length-1 tensor; the gradient routes to the first
    /// position attaining the maximum.
    pub fn reduce_max(&self) -> Tensor {
        assert!(!self.is_empty(), "reduce_max on empty tensor");
        let mut arg = 0usize;
        let mut best = self.data[0];
        for (i, &v) in self.data.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                arg = i;
            }
        }
        let ia = self.id;
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                d[arg] += g[0];
            })
        });
        Tensor::fresh(&self.tape, vec![best], &[1], self.needs_grad(), Some(back))
    }

    /// Multiply by a length-1 tensor (broadcast).
    pub fn mul_bcast(&self, s: &Tensor) -> Tensor {
        assert_eq!(s.len(), 1, "mul_bcast expects a length-1 factor");
        assert!(self.tape.same_tape(&s.tape), "mul_bcast: tensors from different tapes");
        let sv = s.data[0];
        let out: Vec<f64> = self.data.iter().map(|a| a * sv).collect();
        let (ia, is) = (self.id, s.id);
        let da = Rc::clone(&self.data);
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                for i in 0..d.len() {
                    d[i] += g[i] * sv;
                }
            });
            sink.accumulate(is, |d| {
                let mut acc = 0.0;
                for i in 0..g.len() {
                    acc += g[i] * da[i];
                }
                d[0] += acc;
            });
        });
        Tensor::fresh(&self.tape, out, &self.shape, self.needs_grad() || s.needs_grad(), Some(back))
    }

    /// Stack rank-1 tensors of equal length as the columns of an [n, k] matrix.
    pub fn stack_cols(cols: &[&Tensor]) -> Tensor {
        assert!(!cols.is_empty(), "stack_cols on empty list");
        let tape = cols[0].tape.clone();
        let n = cols[0].len();
        let k = cols.len();
        let mut needs = false;
        for c in cols {
            assert_eq!(c.shape.len(), 1, "stack_cols expects rank-1 tensors");
            assert_eq!(c.len(), n, "stack_cols: length mismatch");
            assert!(tape.same_tape(&c.tape), "stack_cols: tensors from different tapes");
            needs |= c.needs_grad();
        }
        let mut out = vec![0.0; n * k];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                out[i * k + j] = c.data[i];
            }
        }
        let ids: Vec<usize> = cols.iter().map(|c| c.id).collect();
        let back: BackFn = Box::new(move |g, sink| {
            for (j, &id) in ids.iter().enumerate() {
                sink.accumulate(id, |d| {
                    for i in 0..d.len() {
                        d[i] += g[i * ids.len() + j];
                    }
                });
            }
        });
        Tensor::fresh(&tape, out, &[n, k], needs, Some(back))
    }

    /// Concatenate two [n, c] matrices along the channel axis.
    pub fn concat_cols(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.shape.len(), 2, "concat_cols expects rank-2 tensors");
        assert_eq!(other.shape.len(), 2, "concat_cols expects rank-2 tensors");
        assert_eq!(self.shape[0], other.shape[0], "concat_cols: row count mismatch");
        assert!(self.tape.same_tape(&other.tape), "concat_cols: tensors from different tapes");
        let (n, c1, c2) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![0.0; n * (c1 + c2)];
        for i in 0..n {
            out[i * (c1 + c2)..i * (c1 + c2) + c1].copy_from_slice(&self.data[i * c1..(i + 1) * c1]);
            out[i * (c1 + c2) + c1..(i + 1) * (c1 + c2)].copy_from_slice(&other.data[i * c2..(i + 1) * c2]);
        }
        let (ia, ib) = (self.id, other.id);
        let back: BackFn = Box::new(move |g, sink| {
            let ct = c1 + c2;
            sink.accumulate(ia, |d| {
                for i in 0..n {
                    for j in 0..c1 {
                        d[i * c1 + j] += g[i * ct + j];
                    }
                }
            });
            sink.accumulate(ib, |d| {
                for i in 0..n {
                    for j in 0..c2 {
                        d[i * c2 + j] += g[i * ct + c1 + j];
                    }
                }
            });
        });
        Tensor::fresh(&self.tape, out, &[n, c1 + c2], self.needs_grad() || other.needs_grad(), Some(back))
    }

    /// Per-channel affine map with constant coefficients: out[i,c] = x[i,c] * scale[c] + offset[c].
    pub fn row_affine(&self, scale: &[f64], offset: &[f64]) -> Tensor {
        assert_eq!(self.shape.len(), 2, "row_affine expects a rank-2 tensor");
        let (n, c) = (self.shape[0], self.shape[1]);
        assert_eq!(scale.len(), c, "row_affine: scale length mismatch");
        assert_eq!(offset.len(), c, "row_affine: offset length mismatch");
        let mut out = vec![0.0; n * c];
        for i in 0..n {
            for j in 0..c {
                out[i * c + j] = self.data[i * c + j] * scale[j] + offset[j];
            }
        }
        let ia = self.id;
        let scale = scale.to_vec();
        let back: BackFn = Box::new(move |g, sink| {
            sink.accumulate(ia, |d| {
                let c = scale.len();
                for i in 0..d.len() {
                    d[i] += g[i] * scale[i % c];
                }
            })
        });
        self.unary_shaped(out, &[n, c], Some(back))
    }

    fn unary_shaped(&self, out: Vec<f64>, shape: &[usize], back: Option<BackFn>) -> Tensor {
        Tensor::fresh(&self.tape, out, shape, self.needs_grad(), back)
    }

    /// Scalar backward pass. The tensor must have length 1.
    pub fn backward(&self) -> crate::Gradients {
        assert_eq!(self.len(), 1, "backward requires a scalar loss, got length {}", self.len());
        self.tape.run_backward(self.id)
    }
}

pub(crate) fn tensor_parts(t: &Tensor) -> (usize, Rc<Vec<f64>>) {
    (t.id, Rc::clone(&t.data))
}
