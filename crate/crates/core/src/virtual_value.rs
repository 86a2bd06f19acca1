//! Boundary virtual value curves on a type grid and the ironing procedure.
//!
//! The lower-boundary virtual value is
//! `lower(t_k) = t_k - (t_{k+1} - t_k) (1 - F(t_k)) / f(t_k)` (so the last
//! entry is `t_N` by the zero final gap), the upper-boundary one is
//! `upper(t_k) = t_k + (t_k - t_{k-1}) F(t_{k-1}) / f(t_k)` (first entry
//! `t_1`), and the mixed curve with weight `c` is their convex combination.
//!
//! Ironing replaces a non-monotone curve by the derivative of the lower
//! convex hull of its quantile-space integral: with breakpoints `z_i =
//! F(t_i)` the integral `H` is piecewise linear with slope `raw(t_i)` on
//! `(z_{i-1}, z_i]`; the ironed value at `t_i` is the slope of the hull
//! segment covering that interval. The result is always non-decreasing and
//! preserves the mass-weighted integral of the curve.

use crate::model::TypeGrid;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VirtualValueError {
    #[error("mixing weight must lie in [0,1], got {0}")]
    BadMixWeight(f64),
    #[error("raw curve has length {0}, grid has {1} types")]
    LengthMismatch(usize, usize),
}

/// Which virtual value a curve represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    Lower,
    Upper,
    Mixed(f64),
}

/// A raw virtual value curve together with its ironed version and the
/// quantile-space workspace (breakpoints, integral, hull) used to build it.
#[derive(Debug, Clone)]
pub struct VirtualCurve {
    pub kind: CurveKind,
    /// `raw[i]` is the virtual value at `t_i`.
    pub raw: Vec<f64>,
    /// `ironed[i]` is the ironed (monotone) virtual value at `t_i`.
    pub ironed: Vec<f64>,
    /// Quantile breakpoints `z_0 = 0, z_i = F(t_i)`; length N+1.
    pub breakpoints: Vec<f64>,
    /// `H(z_i)`: integral of the raw curve in quantile space; length N+1.
    pub integral: Vec<f64>,
    /// `L(z_i)`: lower convex hull of `H` evaluated at the breakpoints.
    pub hull: Vec<f64>,
}

/// `lower(t_k) = t_k - (t_{k+1}-t_k)(1-F(t_k))/f(t_k)`.
pub fn lower_virtual(grid: &TypeGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| grid.t(i) - grid.gap_after(i) * (1.0 - grid.cdf(i)) / grid.f(i))
        .collect()
}

/// `upper(t_k) = t_k + (t_k-t_{k-1})F(t_{k-1})/f(t_k)`.
pub fn upper_virtual(grid: &TypeGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| grid.t(i) + grid.gap_before(i) * grid.cdf_prev(i) / grid.f(i))
        .collect()
}

/// `c * lower + (1 - c) * upper`, entrywise.
pub fn mixed_virtual(grid: &TypeGrid, c: f64) -> Result<Vec<f64>, VirtualValueError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(VirtualValueError::BadMixWeight(c));
    }
    let lo = lower_virtual(grid);
    let hi = upper_virtual(grid);
    Ok(lo
        .iter()
        .zip(&hi)
        .map(|(&l, &u)| c * l + (1.0 - c) * u)
        .collect())
}

/// Smallest index `i` with `F(t_i) >= c`.
pub fn crossing_type(grid: &TypeGrid, c: f64) -> usize {
    for i in 0..grid.len() {
        if grid.cdf(i) >= c {
            return i;
        }
    }
    grid.len() - 1
}

/// Irons a raw curve over the grid's quantile measure.
pub fn iron(raw: &[f64], grid: &TypeGrid) -> Result<VirtualCurve, VirtualValueError> {
    iron_kind(raw, grid, CurveKind::Mixed(f64::NAN))
}

fn iron_kind(
    raw: &[f64],
    grid: &TypeGrid,
    kind: CurveKind,
) -> Result<VirtualCurve, VirtualValueError> {
    let n = grid.len();
    if raw.len() != n {
        return Err(VirtualValueError::LengthMismatch(raw.len(), n));
    }
    let mut breakpoints = Vec::with_capacity(n + 1);
    let mut integral = Vec::with_capacity(n + 1);
    breakpoints.push(0.0);
    integral.push(0.0);
    for i in 0..n {
        let z = grid.cdf(i);
        let h = integral[i] + raw[i] * (z - breakpoints[i]);
        breakpoints.push(z);
        integral.push(h);
    }

    // Monotone-chain lower hull over the breakpoint graph of H. Collinear
    // points are kept; the slope extraction below is insensitive to them.
    let mut hull_idx: Vec<usize> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        while hull_idx.len() >= 2 {
            let a = hull_idx[hull_idx.len() - 2];
            let b = hull_idx[hull_idx.len() - 1];
            let cross = (breakpoints[b] - breakpoints[a]) * (integral[i] - integral[a])
                - (breakpoints[i] - breakpoints[a]) * (integral[b] - integral[a]);
            if cross < 0.0 {
                hull_idx.pop();
            } else {
                break;
            }
        }
        hull_idx.push(i);
    }

    // Hull values at every breakpoint and the segment slope over each
    // quantile cell (z_{i-1}, z_i].
    let mut hull = vec![0.0; n + 1];
    let mut ironed = vec![0.0; n];
    hull[0] = integral[0];
    for seg in hull_idx.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (integral[b] - integral[a]) / (breakpoints[b] - breakpoints[a]);
        for i in a + 1..=b {
            hull[i] = integral[a] + slope * (breakpoints[i] - breakpoints[a]);
            ironed[i - 1] = slope;
        }
    }

    Ok(VirtualCurve {
        kind,
        raw: raw.to_vec(),
        ironed,
        breakpoints,
        integral,
        hull,
    })
}

impl VirtualCurve {
    pub fn lower(grid: &TypeGrid) -> Self {
        iron_kind(&lower_virtual(grid), grid, CurveKind::Lower).unwrap()
    }

    pub fn upper(grid: &TypeGrid) -> Self {
        iron_kind(&upper_virtual(grid), grid, CurveKind::Upper).unwrap()
    }

    pub fn mixed(grid: &TypeGrid, c: f64) -> Result<Self, VirtualValueError> {
        iron_kind(&mixed_virtual(grid, c)?, grid, CurveKind::Mixed(c))
    }

    /// Irons a caller-supplied raw curve. Panics if the length does not
    /// match the grid.
    pub fn from_raw(raw: &[f64], grid: &TypeGrid) -> Self {
        iron_kind(raw, grid, CurveKind::Mixed(f64::NAN)).unwrap()
    }

    /// CSV rows `(t, F, raw, ironed)` for plotting.
    pub fn to_csv(&self, grid: &TypeGrid) -> String {
        let mut out = String::from("t,F,raw,ironed\n");
        for i in 0..grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                grid.t(i),
                grid.cdf(i),
                self.raw[i],
                self.ironed[i]
            ));
        }
        out
    }
}
