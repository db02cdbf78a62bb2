use std::cell::RefCell;
use std::rc::Rc;

use crate::tensor::Tensor;

/// Backward rule of one node: receives the node's own gradient and accumulates
/// into the gradients of strictly earlier nodes.
pub(crate) type BackFn = Box<dyn Fn(&[f64], &mut GradSink)>;

pub(crate) struct Node {
    pub value: Rc<Vec<f64>>,
    pub needs_grad: bool,
    pub back: Option<BackFn>,
}

/// Recording tape. Cheap to clone (shared handle); single-threaded by design —
/// run independent tapes for parallel work.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<Vec<Node>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn same_tape(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    pub(crate) fn push(&self, value: Vec<f64>, needs_grad: bool, back: Option<BackFn>) -> (usize, Rc<Vec<f64>>) {
        let value = Rc::new(value);
        let mut nodes = self.inner.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value: Rc::clone(&value),
            needs_grad,
            back: if needs_grad { back } else { None },
        });
        (id, value)
    }

    /// A tensor that does not receive gradients.
    pub fn constant(&self, data: Vec<f64>, shape: &[usize]) -> Tensor {
        Tensor::fresh(self, data, shape, false, None)
    }

    pub fn constant_1d(&self, data: Vec<f64>) -> Tensor {
        let n = data.len();
        self.constant(data, &[n])
    }

    /// A trainable tensor: gradients are accumulated for it during `backward`.
    pub fn leaf(&self, data: Vec<f64>, shape: &[usize]) -> Tensor {
        Tensor::fresh(self, data, shape, true, None)
    }

    pub fn scalar(&self, v: f64) -> Tensor {
        self.constant(vec![v], &[1])
    }

    pub(crate) fn run_backward(&self, root: usize) -> Gradients {
        let nodes = self.inner.borrow();
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        slots[root] = Some(vec![1.0]);
        for id in (0..=root).rev() {
            let node = &nodes[id];
            if !node.needs_grad {
                continue;
            }
            let Some(back) = &node.back else { continue };
            // Parents are strictly earlier on the tape, so the node's own
            // gradient and its parents' slots never alias.
            let (lower, upper) = slots.split_at_mut(id);
            if let Some(grad) = upper[0].as_ref() {
                back(grad, &mut GradSink { slots: lower, nodes: &nodes });
            }
        }
        Gradients { slots }
    }
}

/// Write access to the gradients of nodes earlier than the one being processed.
pub struct GradSink<'a> {
    slots: &'a mut [Option<Vec<f64>>],
    nodes: &'a [Node],
}

impl<'a> GradSink<'a> {
    /// Accumulate into the gradient buffer of node `id`, creating it as zeros
    /// on first touch. Skips nodes that do not require gradients.
    pub fn accumulate(&mut self, id: usize, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[id].needs_grad {
            return;
        }
        let len = self.nodes[id].value.len();
        let slot = &mut self.slots[id];
        if slot.is_none() {
            *slot = Some(vec![0.0; len]);
        }
        f(slot.as_mut().expect("slot populated above"));
    }
}

/// Gradients of one backward pass, indexed by tape position.
pub struct Gradients {
    slots: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `t`, if any was accumulated.
    pub fn wrt(&self, t: &Tensor) -> Option<&[f64]> {
        self.slots.get(t.id()).and_then(|s| s.as_deref())
    }

    /// Gradient with respect to `t`, zeros if the tensor never received one.
    pub fn wrt_or_zeros(&self, t: &Tensor) -> Vec<f64> {
        self.wrt(t).map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.len()])
    }
}
