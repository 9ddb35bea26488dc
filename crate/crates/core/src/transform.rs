//! Raw axis-wise fast transforms.
//!
//! Thin wrappers around even/odd fast transforms of the midpoint-sampled
//! data; all normalization lives in `field`. Lanes along the transformed
//! axis are copied through a contiguous scratch buffer, so both axes of a
//! 2D array are handled uniformly.

use ndarray::{Array2, Axis};

use crate::grid::Grid;

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    /// Cosine analysis at midpoints: `X_k = sum_j x_j cos(pi k (j+1/2)/N)`.
    Dct2,
    /// Cosine synthesis: `y_j = x_0/2 + sum_{k>=1} x_k cos(pi k (j+1/2)/N)`.
    Dct3,
    /// Sine analysis at midpoints: `X_k = sum_j x_j sin(pi (k+1)(j+1/2)/N)`.
    Dst2,
    /// Sine synthesis: `y_j = sum_k x_k sin(pi (k+1)(j+1/2)/N)`, last input halved.
    Dst3,
}

/// Apply one unnormalized transform in place along `axis`.
pub(crate) fn transform_axis(arr: &mut Array2<f64>, grid: &Grid, axis: usize, kind: Kind) {
    let n = grid.resolution(axis);
    let plan = grid.plan(axis);
    let mut buf = vec![0.0_f64; n];
    let mut scratch = vec![0.0_f64; plan.get_scratch_len()];
    for mut lane in arr.lanes_mut(Axis(axis)) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        match kind {
            Kind::Dct2 => plan.process_dct2_with_scratch(&mut buf, &mut scratch),
            Kind::Dct3 => plan.process_dct3_with_scratch(&mut buf, &mut scratch),
            Kind::Dst2 => plan.process_dst2_with_scratch(&mut buf, &mut scratch),
            Kind::Dst3 => plan.process_dst3_with_scratch(&mut buf, &mut scratch),
        }
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b;
        }
    }
}
