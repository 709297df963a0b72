//! Region geometry, workload density, and midpoint-rule quadrature.
//!
//! A coverage region is bounded below/above by `y = 0` and `y = l` and
//! laterally by two smooth curves `x = g_a(y)` (left) and `x = g_b(y)`
//! (right). Subregions produced by the partition engine are bounded by
//! piecewise-linear traces instead of curves, so quadrature is generic over
//! anything that can answer "what is x at height y".

use thiserror::Error;

use crate::expr::{Expr, Program};

/// Default quadrature resolution (points per unit length) for reference
/// computations.
pub const ORACLE_RESOLUTION: f64 = 200.0;
/// Default quadrature resolution for inside-the-loop mass updates.
pub const INLOOP_RESOLUTION: f64 = 50.0;
/// Default central-difference half-width for numeric curve slopes.
pub const SLOPE_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("curve evaluates to a non-finite value at y = {y}")]
    NonFiniteCurve { y: f64 },
    #[error("y = {y} outside curve domain [0, {l}]")]
    CurveDomain { y: f64, l: f64 },
    #[error("degenerate region: left boundary meets or crosses right boundary at y = {y}")]
    DegenerateRegion { y: f64 },
    #[error("workload density violates its positivity/bound assumption at ({x}, {y}): rho = {rho}")]
    AssumptionViolated { x: f64, y: f64, rho: f64 },
    #[error("boundaries crossed at y = {y}: left {left} > right {right}")]
    CrossedBoundaries { y: f64, left: f64, right: f64 },
    #[error("density evaluates to a non-finite value near y = {y}")]
    NonFiniteDensity { y: f64 },
    #[error("trace query at y = {y} outside recorded range [0, {max_y}]")]
    TraceRange { y: f64, max_y: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn domain_slack(l: f64) -> f64 {
    1e-9 * l.max(1.0)
}

// ---------------------------------------------------------------------------
// Boundaries
// ---------------------------------------------------------------------------

/// Anything that gives the x-coordinate of a lateral boundary at height y.
pub trait XBoundary {
    fn x_at(&self, y: f64) -> Result<f64, RegionError>;
}

/// A smooth lateral boundary `x = g(y)` on `y in [0, l]`.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    expr: Expr,
    program: Program,
    length: f64,
}

impl BoundaryCurve {
    /// Builds a curve and checks finiteness on a dense sample of `[0, l]`.
    pub fn new(expr: Expr, length: f64) -> Result<Self, RegionError> {
        if length.is_nan() || length <= 0.0 {
            return Err(RegionError::InvalidParameter {
                name: "l",
                reason: format!("must be positive, got {length}"),
            });
        }
        let program = expr.compile(&["y"]);
        let samples = 2000;
        for k in 0..=samples {
            let y = length * k as f64 / samples as f64;
            let v = program.eval(&[y]);
            if !v.is_finite() {
                return Err(RegionError::NonFiniteCurve { y });
            }
        }
        Ok(Self {
            expr,
            program,
            length,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// True if the curve does not depend on y (constant abscissa).
    pub fn is_constant(&self) -> bool {
        !self.expr.references("y")
    }

    fn clamp_domain(&self, y: f64) -> Result<f64, RegionError> {
        let slack = domain_slack(self.length);
        if y < -slack || y > self.length + slack {
            return Err(RegionError::CurveDomain { y, l: self.length });
        }
        Ok(y.clamp(0.0, self.length))
    }

    /// x-coordinate of the boundary at height y.
    pub fn value_at(&self, y: f64) -> Result<f64, RegionError> {
        let y = self.clamp_domain(y)?;
        Ok(self.program.eval(&[y]))
    }

    /// Numeric slope g'(y) by central difference, one-sided at the domain
    /// ends.
    pub fn slope_at(&self, y: f64, h: f64) -> Result<f64, RegionError> {
        let y = self.clamp_domain(y)?;
        let f = |y: f64| self.program.eval(&[y]);
        let slope = if y - h < 0.0 {
            (f(y + h) - f(y)) / h
        } else if y + h > self.length {
            (f(y) - f(y - h)) / h
        } else {
            (f(y + h) - f(y - h)) / (2.0 * h)
        };
        Ok(slope)
    }
}

impl XBoundary for BoundaryCurve {
    fn x_at(&self, y: f64) -> Result<f64, RegionError> {
        self.value_at(y)
    }
}

/// A constant abscissa (a vertical segment) as a boundary.
impl XBoundary for f64 {
    fn x_at(&self, _y: f64) -> Result<f64, RegionError> {
        Ok(*self)
    }
}

// ---------------------------------------------------------------------------
// Region and density
// ---------------------------------------------------------------------------

/// The coverage domain: two lateral curves and the vertical extent `l`.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    pub left: BoundaryCurve,
    pub right: BoundaryCurve,
    pub length_l: f64,
}

impl RegionSpec {
    pub fn new(left: BoundaryCurve, right: BoundaryCurve, length_l: f64) -> Result<Self, RegionError> {
        let samples = 2000;
        for k in 0..=samples {
            let y = length_l * k as f64 / samples as f64;
            let (a, b) = (left.value_at(y)?, right.value_at(y)?);
            if a >= b {
                return Err(RegionError::DegenerateRegion { y });
            }
        }
        Ok(Self {
            left,
            right,
            length_l,
        })
    }

    /// True if both lateral boundaries are constant (a rectangle).
    pub fn is_rectangular(&self) -> bool {
        self.left.is_constant() && self.right.is_constant()
    }
}

/// Workload density `rho(x, y)` with certified positive bounds.
#[derive(Debug, Clone)]
pub struct DensityField {
    expr: Expr,
    program: Program,
    pub rho_lower: f64,
    pub rho_upper: f64,
}

impl DensityField {
    /// Builds a density field, checking the declared bounds on a sample grid
    /// of the region.
    pub fn new(
        expr: Expr,
        rho_lower: f64,
        rho_upper: f64,
        region: &RegionSpec,
    ) -> Result<Self, RegionError> {
        if rho_lower.is_nan() || rho_lower <= 0.0 {
            return Err(RegionError::InvalidParameter {
                name: "rho_lower",
                reason: format!("must be positive, got {rho_lower}"),
            });
        }
        if rho_upper < rho_lower {
            return Err(RegionError::InvalidParameter {
                name: "rho_upper",
                reason: format!("must be >= rho_lower, got {rho_upper} < {rho_lower}"),
            });
        }
        let program = expr.compile(&["x", "y"]);
        let grid = 100;
        let slack = 1e-9 * rho_upper.max(1.0);
        for i in 0..grid {
            let y = region.length_l * (i as f64 + 0.5) / grid as f64;
            let xl = region.left.value_at(y)?;
            let xr = region.right.value_at(y)?;
            for j in 0..grid {
                let x = xl + (xr - xl) * (j as f64 + 0.5) / grid as f64;
                let v = program.eval(&[x, y]);
                if !v.is_finite() || v < rho_lower - slack || v > rho_upper + slack {
                    return Err(RegionError::AssumptionViolated { x, y, rho: v });
                }
            }
        }
        Ok(Self {
            expr,
            program,
            rho_lower,
            rho_upper,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    #[inline]
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.program.eval(&[x, y])
    }
}

/// Samples `rho` on a `grid x grid` lattice of the region, returning
/// `(min * 0.99, max * 1.01)` as safety-margined bounds.
pub fn estimate_density_bounds(
    rho: &Expr,
    region: &RegionSpec,
    grid: usize,
) -> Result<(f64, f64), RegionError> {
    if grid < 2 {
        return Err(RegionError::InvalidParameter {
            name: "grid",
            reason: format!("must be >= 2, got {grid}"),
        });
    }
    let program = rho.compile(&["x", "y"]);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..grid {
        let y = region.length_l * (i as f64 + 0.5) / grid as f64;
        let xl = region.left.value_at(y)?;
        let xr = region.right.value_at(y)?;
        for j in 0..grid {
            let x = xl + (xr - xl) * (j as f64 + 0.5) / grid as f64;
            let v = program.eval(&[x, y]);
            if !v.is_finite() || v <= 0.0 {
                return Err(RegionError::AssumptionViolated { x, y, rho: v });
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo * 0.99, hi * 1.01))
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

/// The recorded trajectory of a partition bar's lower terminal point: the
/// frozen boundary ("workload memory") between adjacent subregions.
///
/// Samples are appended once per integration step; queries interpolate
/// piecewise-linearly in y and fail beyond the recorded range.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    ys: Vec<f64>,
    xs: Vec<f64>,
}

impl Trace {
    /// Starts a trace at `y = 0`.
    pub fn new(x0: f64) -> Self {
        Self {
            ys: vec![0.0],
            xs: vec![x0],
        }
    }

    pub fn push(&mut self, y: f64, x: f64) {
        debug_assert!(y > *self.ys.last().unwrap(), "trace samples must advance in y");
        self.ys.push(y);
        self.xs.push(x);
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last_y(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ys.iter().copied().zip(self.xs.iter().copied())
    }
}

impl XBoundary for Trace {
    fn x_at(&self, y: f64) -> Result<f64, RegionError> {
        let max_y = self.last_y();
        let slack = domain_slack(max_y);
        if y < -slack || y > max_y + slack {
            return Err(RegionError::TraceRange { y, max_y });
        }
        let y = y.clamp(0.0, max_y);
        // First index with ys[idx] >= y.
        let idx = self.ys.partition_point(|&v| v < y);
        if idx == 0 {
            return Ok(self.xs[0]);
        }
        if idx >= self.ys.len() {
            return Ok(*self.xs.last().unwrap());
        }
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let w = (y - y0) / (y1 - y0);
        Ok(x0 + w * (x1 - x0))
    }
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Midpoint-rule double integral of `rho` over
/// `{(x, y) : y in [y0, y1], x in [x_left(y), x_right(y)]}` on a uniform
/// `ny` x `nx` grid. Rows are summed in ascending y order and cells in
/// ascending x order, so the result is deterministic.
pub fn strip_mass<L: XBoundary + ?Sized, R: XBoundary + ?Sized>(
    rho: &DensityField,
    x_left: &L,
    x_right: &R,
    y0: f64,
    y1: f64,
    ny: usize,
    nx: usize,
) -> Result<f64, RegionError> {
    if y0 == y1 {
        return Ok(0.0);
    }
    if y0.is_nan() || y1.is_nan() || y0 > y1 {
        return Err(RegionError::InvalidParameter {
            name: "y0/y1",
            reason: format!("need y0 <= y1, got {y0} and {y1}"),
        });
    }
    if ny == 0 || nx == 0 {
        return Err(RegionError::InvalidParameter {
            name: "ny/nx",
            reason: "resolutions must be >= 1".to_string(),
        });
    }
    let hy = (y1 - y0) / ny as f64;
    let mut total = 0.0;
    for j in 0..ny {
        let y = y0 + (j as f64 + 0.5) * hy;
        let xl = x_left.x_at(y)?;
        let xr = x_right.x_at(y)?;
        if xl > xr {
            return Err(RegionError::CrossedBoundaries {
                y,
                left: xl,
                right: xr,
            });
        }
        if xl == xr {
            continue;
        }
        let hx = (xr - xl) / nx as f64;
        let mut row = 0.0;
        for k in 0..nx {
            let x = xl + (k as f64 + 0.5) * hx;
            row += rho.value_at(x, y);
        }
        if !row.is_finite() {
            return Err(RegionError::NonFiniteDensity { y });
        }
        total += row * hx * hy;
    }
    Ok(total)
}

/// Grid count for a span at a per-unit-length resolution. Rounding keeps
/// grids aligned when spans are exact multiples of the cell size, which the
/// additivity property relies on.
pub fn grid_count(span: f64, resolution: f64) -> usize {
    ((span * resolution).round() as usize).max(1)
}

/// [`strip_mass`] with grid counts derived from a per-unit-length
/// resolution. The x-count is taken from the mean boundary separation over
/// the row midpoints.
pub fn strip_mass_res<L: XBoundary + ?Sized, R: XBoundary + ?Sized>(
    rho: &DensityField,
    x_left: &L,
    x_right: &R,
    y0: f64,
    y1: f64,
    resolution: f64,
) -> Result<f64, RegionError> {
    if y0 >= y1 {
        return Ok(0.0);
    }
    let ny = grid_count(y1 - y0, resolution);
    let hy = (y1 - y0) / ny as f64;
    let mut width_sum = 0.0;
    for j in 0..ny {
        let y = y0 + (j as f64 + 0.5) * hy;
        width_sum += x_right.x_at(y)? - x_left.x_at(y)?;
    }
    let nx = grid_count(width_sum / ny as f64, resolution);
    strip_mass(rho, x_left, x_right, y0, y1, ny, nx)
}

/// Total workload over the whole region at the given grid counts.
pub fn total_workload(
    region: &RegionSpec,
    rho: &DensityField,
    ny: usize,
    nx: usize,
) -> Result<f64, RegionError> {
    strip_mass(rho, &region.left, &region.right, 0.0, region.length_l, ny, nx)
}

/// Total workload at a per-unit-length resolution.
pub fn total_workload_res(
    region: &RegionSpec,
    rho: &DensityField,
    resolution: f64,
) -> Result<f64, RegionError> {
    strip_mass_res(rho, &region.left, &region.right, 0.0, region.length_l, resolution)
}
