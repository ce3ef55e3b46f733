//! Small helpers for axis-wise work on dense dynamic-dimension tensors.

use ndarray::{ArrayD, Axis, Zip};

use crate::deriv::LaneOp;
use crate::grid::Grid1D;
use crate::scalar::{from_f64, Real};

/// Apply a lane operator along one axis, copying each (possibly strided)
/// lane through scratch buffers.
pub(crate) fn apply_along_axis<R: Real>(
    values: &ArrayD<R>,
    axis: usize,
    op: &LaneOp<R>,
) -> ArrayD<R> {
    let n = values.shape()[axis];
    let mut out = values.clone();
    let mut buf_in = vec![R::zero(); n];
    let mut buf_out = vec![R::zero(); n];
    for (lane_in, mut lane_out) in values
        .lanes(Axis(axis))
        .into_iter()
        .zip(out.lanes_mut(Axis(axis)))
    {
        for (b, v) in buf_in.iter_mut().zip(lane_in.iter()) {
            *b = *v;
        }
        op.apply(&buf_in, &mut buf_out);
        for (o, v) in lane_out.iter_mut().zip(buf_out.iter()) {
            *o = *v;
        }
    }
    out
}

/// Multiply in place by a per-node profile along one axis.
pub(crate) fn scale_along_axis<R: Real>(values: &mut ArrayD<R>, axis: usize, profile: &[R]) {
    for (j, mut sub) in values.axis_iter_mut(Axis(axis)).enumerate() {
        let w = profile[j];
        sub.map_inplace(|v| *v *= w);
    }
}

/// Contract one axis against per-node weights: `out = sum_j w_j values[.., j, ..]`.
pub(crate) fn contract_axis<R: Real>(values: &ArrayD<R>, axis: usize, weights: &[R]) -> ArrayD<R> {
    let mut shape = values.shape().to_vec();
    shape.remove(axis);
    let mut out = ArrayD::<R>::zeros(shape);
    for (j, sub) in values.axis_iter(Axis(axis)).enumerate() {
        let w = weights[j];
        Zip::from(&mut out).and(&sub).for_each(|o, &s| *o += w * s);
    }
    out
}

/// Trapezoid quadrature weights (spacing absorbed).
pub(crate) fn trapezoid_weights<R: Real>(grid: &Grid1D<R>) -> Vec<R> {
    let h = grid.spacing();
    let half = from_f64::<R>(0.5);
    let n = grid.count();
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { h * half } else { h })
        .collect()
}

/// Zero the outermost layer of every axis (absorbing boundary).
pub(crate) fn zero_boundary<R: Real>(values: &mut ArrayD<R>) {
    let ndim = values.ndim();
    for ax in 0..ndim {
        let len = values.shape()[ax];
        values
            .index_axis_mut(Axis(ax), 0)
            .map_inplace(|v| *v = R::zero());
        values
            .index_axis_mut(Axis(ax), len - 1)
            .map_inplace(|v| *v = R::zero());
    }
}

/// Max absolute entry.
pub(crate) fn max_abs<R: Real>(values: &ArrayD<R>) -> R {
    values.iter().fold(R::zero(), |m, v| m.max(v.abs()))
}

/// Max absolute entry over interior nodes (outermost layer of every axis
/// excluded).
pub(crate) fn max_abs_interior<R: Real>(values: &ArrayD<R>) -> R {
    let shape = values.shape().to_vec();
    let mut m = R::zero();
    for (idx, v) in values.indexed_iter() {
        let interior = (0..shape.len()).all(|d| idx[d] > 0 && idx[d] + 1 < shape[d]);
        if interior {
            m = m.max(v.abs());
        }
    }
    m
}
