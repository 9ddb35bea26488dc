//! Rectangular Neumann domains with midpoint collocation.
//!
//! The domain is an axis-aligned rectangle `(0, L_0) x ... x (0, L_{d-1})`
//! with `d` in {1, 2}. Each axis carries `N_a` cosine modes and the `N_a`
//! midpoint nodes `x_j = (j + 1/2) L_a / N_a`, so no node touches the
//! boundary and the cosine basis satisfies the Neumann condition exactly.
//!
//! The eigenfunctions of the Neumann Laplacian on this domain are the
//! L2-normalized product cosines
//!
//! ```text
//! psi_k(x) = prod_a n_{k_a} cos(k_a pi x_a / L_a),
//! n_0 = 1/sqrt(L_a),  n_k = sqrt(2/L_a) for k >= 1,
//! ```
//!
//! with eigenvalues `lambda_k = sum_a (k_a pi / L_a)^2`. Mode 0 is the
//! normalized constant; its coefficient carries the mean of the field.

use std::fmt;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};

/// Smallest admissible per-axis resolution.
pub const MIN_RESOLUTION: usize = 8;

/// Per-axis transform plan; one plan serves DCT-II/III and DST-II/III.
type AxisPlan = Arc<dyn TransformType2And3<f64>>;

/// Descriptor of a rectangular Neumann domain with midpoint collocation.
///
/// Cloning is cheap: transform plans are shared behind `Arc`.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    extent: [f64; 2],
    resolution: [usize; 2],
    plans: [AxisPlan; 2],
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("extent", &self.extents())
            .field("resolution", &self.resolutions())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.extent == other.extent
            && self.resolution == other.resolution
    }
}

impl Grid {
    /// 1D interval `(0, extent)` with `n` modes.
    pub fn new_1d(extent: f64, n: usize) -> Result<Self> {
        Self::new(&[extent], &[n])
    }

    /// 2D rectangle `(0, lx) x (0, ly)` with `nx x ny` modes.
    pub fn new_2d(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    /// Build a grid from per-axis extents and resolutions (1 or 2 axes).
    pub fn new(extent: &[f64], resolution: &[usize]) -> Result<Self> {
        let dim = extent.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if resolution.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "extent has {dim} axes but resolution has {}",
                resolution.len()
            )));
        }
        for (a, &l) in extent.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "extent of axis {a} must be positive and finite, got {l}"
                )));
            }
        }
        for (a, &n) in resolution.iter().enumerate() {
            if n < MIN_RESOLUTION {
                return Err(Error::InvalidGrid(format!(
                    "resolution of axis {a} must be at least {MIN_RESOLUTION}, got {n}"
                )));
            }
        }

        let mut ext = [1.0_f64; 2];
        let mut res = [1_usize; 2];
        ext[..dim].copy_from_slice(extent);
        res[..dim].copy_from_slice(resolution);

        let mut planner = DctPlanner::<f64>::new();
        let plan0 = planner.plan_dct2(res[0]);
        let plan1 = if dim == 2 {
            planner.plan_dct2(res[1])
        } else {
            plan0.clone()
        };

        Ok(Self {
            dim,
            extent: ext,
            resolution: res,
            plans: [plan0, plan1],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extents of the real axes.
    pub fn extents(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    /// Modes per real axis.
    pub fn resolutions(&self) -> &[usize] {
        &self.resolution[..self.dim]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn resolution(&self, axis: usize) -> usize {
        self.resolution[axis]
    }

    /// Internal storage shape; 1D fields are stored as `(n0, 1)`.
    pub(crate) fn shape(&self) -> (usize, usize) {
        (self.resolution[0], self.resolution[1])
    }

    pub(crate) fn plan(&self, axis: usize) -> &AxisPlan {
        &self.plans[axis]
    }

    /// `h_a = L_a / N_a`, the cell size along an axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.resolution[axis] as f64
    }

    /// Smallest cell size over all axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight of one collocation cell, `prod_a L_a / N_a`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Measure of the whole domain.
    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Total number of collocation nodes.
    pub fn num_nodes(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    /// Midpoint nodes along one axis, all strictly inside `(0, L_a)`.
    pub fn collocation(&self, axis: usize) -> Vec<f64> {
        let n = self.resolution[axis];
        let h = self.spacing(axis);
        (0..n).map(|j| (j as f64 + 0.5) * h).collect()
    }

    fn check_mode(&self, k: &[usize]) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::ModeOutOfRange {
                index: k.to_vec(),
                resolution: self.resolutions().to_vec(),
            });
        }
        for (a, &ka) in k.iter().enumerate() {
            if ka >= self.resolution[a] {
                return Err(Error::ModeOutOfRange {
                    index: k.to_vec(),
                    resolution: self.resolutions().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Neumann eigenvalue `lambda_k = sum_a (k_a pi / L_a)^2`.
    ///
    /// Vanishes exactly for `k = 0` and is nondecreasing in every component.
    pub fn eigenvalue(&self, k: &[usize]) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.eigenvalue_unchecked(k))
    }

    pub(crate) fn eigenvalue_pair(&self, k0: usize, k1: usize) -> f64 {
        let e0 = k0 as f64 * std::f64::consts::PI / self.extent[0];
        let mut lambda = e0 * e0;
        if self.dim == 2 {
            let e1 = k1 as f64 * std::f64::consts::PI / self.extent[1];
            lambda += e1 * e1;
        }
        lambda
    }

    fn eigenvalue_unchecked(&self, k: &[usize]) -> f64 {
        let k1 = if self.dim == 2 { k[1] } else { 0 };
        self.eigenvalue_pair(k[0], k1)
    }

    /// Largest eigenvalue represented on the grid.
    pub fn max_eigenvalue(&self) -> f64 {
        let k1 = if self.dim == 2 {
            self.resolution[1] - 1
        } else {
            0
        };
        self.eigenvalue_pair(self.resolution[0] - 1, k1)
    }

    /// Smallest nonzero eigenvalue, `lambda_1 = (pi / max_a L_a)^2`.
    pub fn lambda_1(&self) -> f64 {
        (0..self.dim)
            .map(|a| {
                let e = std::f64::consts::PI / self.extent[a];
                e * e
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eigenvalues_on_unit_pi_interval() {
        let grid = Grid::new_1d(PI, 16).unwrap();
        assert_eq!(grid.eigenvalue(&[0]).unwrap(), 0.0);
        assert!((grid.eigenvalue(&[1]).unwrap() - 1.0).abs() < 1e-14);
        assert!((grid.eigenvalue(&[3]).unwrap() - 9.0).abs() < 1e-13);
    }

    #[test]
    fn eigenvalue_2d_rectangle() {
        let grid = Grid::new_2d(1.0, 2.0, 8, 8).unwrap();
        let got = grid.eigenvalue(&[1, 2]).unwrap();
        assert!((got - 2.0 * PI * PI).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn eigenvalue_monotone_in_each_component() {
        let grid = Grid::new_2d(1.3, 0.7, 16, 12).unwrap();
        let mut prev = -1.0;
        for k0 in 0..16 {
            let lam = grid.eigenvalue(&[k0, 3]).unwrap();
            assert!(lam >= prev);
            prev = lam;
        }
        let mut prev = -1.0;
        for k1 in 0..12 {
            let lam = grid.eigenvalue(&[5, k1]).unwrap();
            assert!(lam >= prev);
            prev = lam;
        }
    }

    #[test]
    fn eigenvalue_rejects_out_of_range() {
        let grid = Grid::new_1d(PI, 8).unwrap();
        assert!(matches!(
            grid.eigenvalue(&[8]),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matches!(
            grid.eigenvalue(&[1, 1]),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn collocation_strictly_interior() {
        let grid = Grid::new_2d(2.0, 3.0, 8, 16).unwrap();
        for axis in 0..2 {
            let nodes = grid.collocation(axis);
            assert_eq!(nodes.len(), grid.resolution(axis));
            for &x in &nodes {
                assert!(x > 0.0 && x < grid.extent(axis));
            }
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new_1d(0.0, 16).is_err());
        assert!(Grid::new_1d(-1.0, 16).is_err());
        assert!(Grid::new_1d(1.0, 4).is_err());
        assert!(Grid::new(&[1.0, 1.0, 1.0], &[8, 8, 8]).is_err());
    }
}
