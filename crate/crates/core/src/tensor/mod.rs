//! Reverse-mode automatic differentiation over dense 2-D tensors.
//!
//! Every tensor is a row-major matrix (a scalar is `[1, 1]`, a row vector
//! `[1, n]`). Operations compute eagerly; when any input is tracked they
//! also record a node on the input's [`Tape`] holding the parent ids and a
//! closure that maps the output gradient to parent gradients.
//! [`backward`] walks the tape strictly in reverse node order and
//! accumulates contributions in recording order, so gradients for the same
//! tape are bit-identical across repeated passes.
//!
//! A tape is single-threaded by construction (`Rc`-based, not `Send`): one
//! training step builds one tape on one worker. Evaluation runs the same
//! ops on untracked tensors and records nothing.

mod check;
mod ops;

pub use check::{grad_check, GradReport};
pub use ops::{
    add, concat, dropout_mask_apply, gelu, l2_normalize, layer_norm, log_sum_exp, masked_softmax,
    matmul, scale, slice, sub, sum_all, transpose,
};

use std::cell::RefCell;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::num::Real;

/// Maps the gradient of a node's output to gradients of its tracked
/// parents, in parent order.
type BackFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>>>;

struct Node<T> {
    parents: Vec<usize>,
    back: Option<BackFn<T>>,
}

/// Recording of one differentiable computation.
pub struct Tape<T: Real> {
    inner: Rc<RefCell<Vec<Node<T>>>>,
}

impl<T: Real> Clone for Tape<T> {
    fn clone(&self) -> Self {
        Tape {
            inner: Rc::clone(&self.inner),
        }
    }
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: Rc::new(RefCell::new(Vec::new())),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.inner.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registers a leaf holding `data` and returns the tracked tensor.
    pub fn param(&self, shape: [usize; 2], data: Vec<T>) -> Tensor<T> {
        let t = Tensor::new(shape, data);
        self.watch(&t)
    }

    /// Returns a tracked leaf with the same contents as `t`.
    pub fn watch(&self, t: &Tensor<T>) -> Tensor<T> {
        let id = self.push(Node {
            parents: Vec::new(),
            back: None,
        });
        Tensor {
            shape: t.shape,
            data: Rc::clone(&t.data),
            node: Some((self.clone(), id)),
        }
    }

    fn push(&self, node: Node<T>) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.push(node);
        inner.len() - 1
    }

    /// Attaches `out` to this tape as the child of `parents`.
    pub(crate) fn attach(&self, mut out: Tensor<T>, parents: Vec<usize>, back: BackFn<T>) -> Tensor<T> {
        let id = self.push(Node {
            parents,
            back: Some(back),
        });
        out.node = Some((self.clone(), id));
        out
    }

    fn same_as(&self, other: &Tape<T>) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }
}

/// Dense row-major matrix, optionally tracked on a tape.
pub struct Tensor<T: Real> {
    shape: [usize; 2],
    data: Rc<Vec<T>>,
    node: Option<(Tape<T>, usize)>,
}

impl<T: Real> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            shape: self.shape,
            data: Rc::clone(&self.data),
            node: self.node.clone(),
        }
    }
}

impl<T: Real> std::fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("tracked", &self.node.is_some())
            .field("data", &self.data)
            .finish()
    }
}

impl<T: Real> Tensor<T> {
    /// Builds an untracked tensor; `data.len()` must equal `rows * cols`.
    pub fn new(shape: [usize; 2], data: Vec<T>) -> Self {
        assert_eq!(
            shape[0] * shape[1],
            data.len(),
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor {
            shape,
            data: Rc::new(data),
            node: None,
        }
    }

    pub fn scalar(v: T) -> Self {
        Tensor::new([1, 1], vec![v])
    }

    pub fn zeros(shape: [usize; 2]) -> Self {
        Tensor::new(shape, vec![T::zero(); shape[0] * shape[1]])
    }

    pub fn filled(shape: [usize; 2], v: T) -> Self {
        Tensor::new(shape, vec![v; shape[0] * shape[1]])
    }

    /// Row vector `[1, n]`.
    pub fn row(data: Vec<T>) -> Self {
        let n = data.len();
        Tensor::new([1, n], data)
    }

    /// Column vector `[n, 1]`.
    pub fn col(data: Vec<T>) -> Self {
        let n = data.len();
        Tensor::new([n, 1], data)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub(crate) fn data_rc(&self) -> Rc<Vec<T>> {
        Rc::clone(&self.data)
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.shape[1] + c]
    }

    /// Value of a `[1, 1]` tensor.
    pub fn item(&self) -> Result<T> {
        if self.shape != [1, 1] {
            return Err(Error::NonScalar {
                shape: self.shape.to_vec(),
            });
        }
        Ok(self.data[0])
    }

    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    pub(crate) fn node_id(&self) -> Option<usize> {
        self.node.as_ref().map(|(_, id)| *id)
    }

    pub(crate) fn tape(&self) -> Option<&Tape<T>> {
        self.node.as_ref().map(|(t, _)| t)
    }
}

/// Picks the common tape of the tracked inputs, if any.
///
/// Panics when inputs are tracked on different tapes — mixing tapes in one
/// expression is a programming error, not a data error.
pub(crate) fn pick_tape<'a, T: Real>(inputs: &[&'a Tensor<T>]) -> Option<&'a Tape<T>> {
    let mut found: Option<&Tape<T>> = None;
    for t in inputs {
        if let Some(tape) = t.tape() {
            match found {
                None => found = Some(tape),
                Some(f) => assert!(f.same_as(tape), "inputs tracked on different tapes"),
            }
        }
    }
    found
}

/// Gradients of one backward pass, addressable by tensor.
pub struct Gradients<T> {
    by_node: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to `t`, if `t` is tracked and reached by the
    /// backward pass.
    pub fn wrt(&self, t: &Tensor<T>) -> Option<&[T]> {
        let id = t.node_id()?;
        self.by_node.get(id)?.as_deref()
    }
}

/// Reverse pass from a tracked scalar loss.
///
/// Accumulation is sequential and ordered, so repeated passes over the
/// same tape produce bit-identical gradients.
pub fn backward<T: Real>(loss: &Tensor<T>) -> Result<Gradients<T>> {
    let (tape, loss_id) = loss
        .node
        .as_ref()
        .ok_or_else(|| Error::param("loss", "not recorded on a tape"))?;
    if loss.shape != [1, 1] {
        return Err(Error::NonScalar {
            shape: loss.shape.to_vec(),
        });
    }
    let nodes = tape.inner.borrow();
    let mut by_node: Vec<Option<Vec<T>>> = vec![None; nodes.len()];
    by_node[*loss_id] = Some(vec![T::one()]);
    for id in (0..=*loss_id).rev() {
        let Some(grad) = by_node[id].as_ref() else {
            continue;
        };
        let node = &nodes[id];
        let Some(back) = &node.back else {
            continue;
        };
        let contributions = back(grad);
        debug_assert_eq!(contributions.len(), node.parents.len());
        for (pid, contrib) in node.parents.iter().zip(contributions) {
            match &mut by_node[*pid] {
                Some(acc) => {
                    debug_assert_eq!(acc.len(), contrib.len());
                    for (a, c) in acc.iter_mut().zip(contrib) {
                        *a += c;
                    }
                }
                slot @ None => *slot = Some(contrib),
            }
        }
    }
    Ok(Gradients { by_node })
}
