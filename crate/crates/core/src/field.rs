//! Scalar fields in physical (collocation) and spectral (cosine) form.
//!
//! A `SpectralField` stores the coefficients of the L2-normalized
//! product-cosine eigenbasis; slot `k = 0` carries the mean (times
//! `sqrt(|Omega|)`). A `PhysicalField` stores values at the midpoint
//! collocation nodes. The two representations are exact inverses of each
//! other on the grid's band: `to_physical(to_spectral(f)) = f` to machine
//! precision, and Parseval holds between midpoint quadrature and the sum
//! of squared coefficients.
//!
//! Differentiation moves between the cosine and sine families:
//! `d/dx cos(k pi x/L) = -(k pi/L) sin(k pi x/L)`, so gradients are
//! synthesized through sine transforms and divergences are analyzed
//! through them. A sine series carries no constant, which makes the
//! mode-0 coefficient of every divergence vanish identically; this is
//! the discrete form of no-flux mass conservation.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::transform::{transform_axis, Kind};

/// Relative tolerance under which a mode-0 coefficient counts as zero mean.
pub const ZERO_MEAN_RTOL: f64 = 1e-13;

/// Policy for the `lambda = 0` mode when applying a spectral multiplier
/// that may be singular there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode0 {
    /// Evaluate the multiplier at 0 like any other eigenvalue.
    Apply,
    /// Leave the mode-0 coefficient untouched.
    PassThrough,
    /// Annihilate the mode-0 coefficient.
    Zero,
}

/// Scalar field sampled at the midpoint collocation nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Array2<f64>,
}

/// Scalar field as coefficients of the Neumann cosine eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Array2<f64>,
}

impl PhysicalField {
    /// Wrap collocation values, checking shape and finiteness.
    pub fn new(grid: Grid, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::InvalidGrid(format!(
                "field shape {:?} does not match grid shape {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        let field = Self { grid, values };
        field.check_finite("physical field")?;
        Ok(field)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: Array2::zeros(grid.shape()),
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            values: Array2::from_elem(grid.shape(), c),
            grid: grid.clone(),
        }
    }

    /// Sample `f(x)` at every collocation node; `x` has `dim` entries.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let (n0, n1) = grid.shape();
        let x0 = grid.collocation(0);
        let mut values = Array2::zeros((n0, n1));
        if grid.dim() == 1 {
            for (i, v) in values.column_mut(0).iter_mut().enumerate() {
                *v = f(&[x0[i]]);
            }
        } else {
            let x1 = grid.collocation(1);
            for ((i, j), v) in values.indexed_iter_mut() {
                *v = f(&[x0[i], x1[j]]);
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise map; the result is not re-validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.mapv(|v| f(v)),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the grids differ; this is an internal programming error,
    /// not a data error.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "zip_map across different grids");
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |a, &b| *a = f(*a, b));
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Midpoint quadrature of the field, `h * sum_j f_j`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.sum()
    }

    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }

    /// L2 norm under midpoint quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Lp norm under midpoint quadrature, `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        (self.grid.cell_volume()
            * self
                .values
                .iter()
                .map(|v| v.abs().powf(p))
                .sum::<f64>())
        .powf(1.0 / p)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Cosine analysis: project onto the eigenbasis.
    pub fn to_spectral(&self) -> SpectralField {
        let mut coeffs = self.values.clone();
        for axis in 0..self.grid.dim() {
            transform_axis(&mut coeffs, &self.grid, axis, Kind::Dct2);
            scale_analysis(&mut coeffs, &self.grid, axis);
        }
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }
}

/// After a raw DCT-II along `axis`: slot 0 gets `sqrt(L)/N`, slots k >= 1
/// get `sqrt(2 L)/N`, matching the L2-normalized basis under midpoint
/// quadrature.
fn scale_analysis(arr: &mut Array2<f64>, grid: &Grid, axis: usize) {
    let n = grid.resolution(axis) as f64;
    let l = grid.extent(axis);
    let s0 = l.sqrt() / n;
    let sk = (2.0 * l).sqrt() / n;
    scale_axis(arr, axis, s0, sk);
}

/// Before a raw DCT-III along `axis`: slot 0 gets `2/sqrt(L)`, slots k >= 1
/// get `sqrt(2/L)` (the DCT-III halves its first input).
fn scale_synthesis(arr: &mut Array2<f64>, grid: &Grid, axis: usize) {
    let l = grid.extent(axis);
    let s0 = 2.0 / l.sqrt();
    let sk = (2.0 / l).sqrt();
    scale_axis(arr, axis, s0, sk);
}

fn scale_axis(arr: &mut Array2<f64>, axis: usize, s0: f64, sk: f64) {
    if axis == 0 {
        for (k, mut row) in arr.rows_mut().into_iter().enumerate() {
            let s = if k == 0 { s0 } else { sk };
            row.mapv_inplace(|v| v * s);
        }
    } else {
        for mut row in arr.rows_mut() {
            for (k, v) in row.iter_mut().enumerate() {
                *v *= if k == 0 { s0 } else { sk };
            }
        }
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            coeffs: Array2::zeros(grid.shape()),
            grid: grid.clone(),
        }
    }

    /// Wrap a coefficient array, checking shape and finiteness.
    pub fn from_coeffs(grid: Grid, coeffs: Array2<f64>) -> Result<Self> {
        if coeffs.dim() != grid.shape() {
            return Err(Error::InvalidGrid(format!(
                "coefficient shape {:?} does not match grid shape {:?}",
                coeffs.dim(),
                grid.shape()
            )));
        }
        if !coeffs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("spectral coefficients".to_string()));
        }
        Ok(Self { grid, coeffs })
    }

    /// The eigenfunction `psi_k` itself: unit coefficient at `k`.
    pub fn basis(grid: &Grid, k: &[usize]) -> Result<Self> {
        grid.eigenvalue(k)?; // range check
        let mut field = Self::zeros(grid);
        let idx = (k[0], if grid.dim() == 2 { k[1] } else { 0 });
        field.coeffs[idx] = 1.0;
        Ok(field)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut Array2<f64> {
        &mut self.coeffs
    }

    pub fn coeff(&self, k: &[usize]) -> Result<f64> {
        self.grid.eigenvalue(k)?; // range check
        Ok(self.coeffs[(k[0], if self.grid.dim() == 2 { k[1] } else { 0 })])
    }

    pub fn set_coeff(&mut self, k: &[usize], value: f64) -> Result<()> {
        self.grid.eigenvalue(k)?;
        self.coeffs[(k[0], if self.grid.dim() == 2 { k[1] } else { 0 })] = value;
        Ok(())
    }

    pub fn mode0(&self) -> f64 {
        self.coeffs[(0, 0)]
    }

    /// Integral of the field over the domain, `coeff_0 * sqrt(|Omega|)`.
    pub fn integral(&self) -> f64 {
        self.mode0() * self.grid.volume().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.mode0() / self.grid.volume().sqrt()
    }

    /// L2 norm; by Parseval this is the root sum of squared coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Explicit zero-mean projection: mode 0 set to zero.
    pub fn zero_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[(0, 0)] = 0.0;
        out
    }

    /// True when the mode-0 coefficient is negligible against the field.
    pub fn is_zero_mean(&self) -> bool {
        self.mode0().abs() <= ZERO_MEAN_RTOL * self.l2_norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * s),
        }
    }

    /// `self + s * other`; panics on grid mismatch (programming error).
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        assert_eq!(self.grid, other.grid, "add_scaled across different grids");
        let mut coeffs = self.coeffs.clone();
        coeffs.zip_mut_with(&other.coeffs, |a, &b| *a += s * b);
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Apply a spectral multiplier `m(lambda_k)`, evaluating it at every
    /// eigenvalue including zero.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64) -> Result<Self> {
        self.apply_multiplier_with(m, Mode0::Apply)
    }

    /// Apply a spectral multiplier with an explicit mode-0 policy.
    ///
    /// A non-finite multiplier value at a mode with a nonzero coefficient
    /// is a domain error; modes with zero coefficients never evaluate the
    /// multiplier's singularities.
    pub fn apply_multiplier_with(
        &self,
        m: impl Fn(f64) -> f64,
        mode0: Mode0,
    ) -> Result<Self> {
        let dim = self.grid.dim();
        let mut out = self.coeffs.clone();
        for ((k0, k1), c) in out.indexed_iter_mut() {
            if k0 == 0 && k1 == 0 {
                match mode0 {
                    Mode0::PassThrough => continue,
                    Mode0::Zero => {
                        *c = 0.0;
                        continue;
                    }
                    Mode0::Apply => {}
                }
            }
            if *c == 0.0 {
                continue;
            }
            let lambda = self.grid.eigenvalue_pair(k0, k1);
            let factor = m(lambda);
            if !factor.is_finite() {
                let index = if dim == 1 { vec![k0] } else { vec![k0, k1] };
                return Err(Error::MultiplierUndefined { lambda, index });
            }
            *c *= factor;
        }
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: out,
        })
    }

    /// Zero every mode with `k_a > 2 N_a / 3` on some axis (2/3 rule).
    pub fn dealiased(&self) -> Self {
        let mut out = self.clone();
        let cut0 = 2 * self.grid.resolution(0) / 3;
        let cut1 = 2 * self.grid.resolution(1) / 3;
        for ((k0, k1), c) in out.coeffs.indexed_iter_mut() {
            if k0 > cut0 || (self.grid.dim() == 2 && k1 > cut1) {
                *c = 0.0;
            }
        }
        out
    }

    /// Cosine synthesis back to collocation values.
    pub fn to_physical(&self) -> PhysicalField {
        let mut values = self.coeffs.clone();
        for axis in 0..self.grid.dim() {
            scale_synthesis(&mut values, &self.grid, axis);
            transform_axis(&mut values, &self.grid, axis, Kind::Dct3);
        }
        PhysicalField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Per-axis derivatives synthesized at the collocation nodes.
    ///
    /// Exact on the grid's band; the gradient of a constant is zero.
    pub fn gradient(&self) -> Vec<PhysicalField> {
        (0..self.grid.dim())
            .map(|axis| self.derivative_axis(axis))
            .collect()
    }

    fn derivative_axis(&self, axis: usize) -> PhysicalField {
        let grid = &self.grid;
        let n_axis = grid.resolution(axis);
        let l_axis = grid.extent(axis);
        let norm = (2.0 / l_axis).sqrt();
        let mut work = Array2::zeros(grid.shape());

        // Sine-synthesis input along `axis`: slot k-1 holds the derivative
        // coefficient of frequency k; the Nyquist slot stays zero.
        {
            let src = &self.coeffs;
            if axis == 0 {
                for k in 1..n_axis {
                    let factor = -norm * k as f64 * std::f64::consts::PI / l_axis;
                    for (w, c) in work
                        .row_mut(k - 1)
                        .iter_mut()
                        .zip(src.row(k).iter())
                    {
                        *w = factor * c;
                    }
                }
            } else {
                for (mut wrow, srow) in work.rows_mut().into_iter().zip(src.rows()) {
                    for k in 1..n_axis {
                        let factor = -norm * k as f64 * std::f64::consts::PI / l_axis;
                        wrow[k - 1] = factor * srow[k];
                    }
                    wrow[n_axis - 1] = 0.0;
                }
            }
        }

        transform_axis(&mut work, grid, axis, Kind::Dst3);
        for other in 0..grid.dim() {
            if other != axis {
                scale_synthesis(&mut work, grid, other);
                transform_axis(&mut work, grid, other, Kind::Dct3);
            }
        }
        PhysicalField {
            grid: grid.clone(),
            values: work,
        }
    }
}

/// Divergence of a vector field given by per-axis components.
///
/// Each component is sine-analyzed along its own axis and differentiated
/// into the cosine basis. The mode-0 coefficient of the result is zero by
/// construction: no-flux boundaries conserve mass.
pub fn divergence(components: &[PhysicalField]) -> Result<SpectralField> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidGrid("divergence of an empty vector field".into()))?;
    let grid = first.grid.clone();
    if components.len() != grid.dim() {
        return Err(Error::InvalidGrid(format!(
            "divergence needs {} components, got {}",
            grid.dim(),
            components.len()
        )));
    }
    let mut total = SpectralField::zeros(&grid);
    for (axis, comp) in components.iter().enumerate() {
        if comp.grid != grid {
            return Err(Error::GridMismatch);
        }
        comp.check_finite("divergence component")?;
        let mut work = comp.values.clone();

        // Sine analysis along the differentiation axis, cosine analysis
        // along the rest.
        transform_axis(&mut work, &grid, axis, Kind::Dst2);
        for other in 0..grid.dim() {
            if other != axis {
                transform_axis(&mut work, &grid, other, Kind::Dct2);
                scale_analysis(&mut work, &grid, other);
            }
        }

        let n_axis = grid.resolution(axis);
        let l_axis = grid.extent(axis);
        // beta_k = (2/N) X_{k-1}; d/dx sin(k pi x/L) = (k pi/L) cos(k pi x/L),
        // re-expressed on the normalized basis via sqrt(L/2).
        let base = (2.0 / n_axis as f64) * (l_axis / 2.0).sqrt();
        let out = total.coeffs_mut();
        if axis == 0 {
            for k in 1..n_axis {
                let factor = base * k as f64 * std::f64::consts::PI / l_axis;
                for (o, w) in out.row_mut(k).iter_mut().zip(work.row(k - 1).iter()) {
                    *o += factor * w;
                }
            }
        } else {
            for (mut orow, wrow) in out.rows_mut().into_iter().zip(work.rows()) {
                for k in 1..n_axis {
                    let factor = base * k as f64 * std::f64::consts::PI / l_axis;
                    orow[k] += factor * wrow[k - 1];
                }
            }
        }
    }
    Ok(total)
}
