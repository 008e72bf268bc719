//! Discretised solution of `u = b + T u` for `u(x) = P(M > x)`, where
//! `b(x) = P(xi > x)` and `(T g)(x) = P(xi <= x) ∫ g(x - y) P(X ∈ dy)`,
//! by summing the Neumann series `u = Σ T^n b`.

use rayon::prelude::*;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::tilt::solve_theta_star;
use crate::walk::WalkModel;

/// A uniform mesh on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bad grid range [{x_min}, {x_max}]"
            )));
        }
        if n_points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 points, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// A domain wide enough for level `x`: from `5 / |mu|` below the bulk of
    /// the perturbation law to ten decay lengths above `x`.
    pub fn auto(model: &WalkModel, x: f64, n_points: usize) -> Result<Self> {
        let pert = model.perturbation;
        let (inf, _) = pert.support();
        let low = if inf.is_finite() {
            inf
        } else {
            let mut y = -pert.scale();
            while pert.cdf(y) > 1e-12 {
                y -= pert.scale();
            }
            y
        };
        let x_min = low.min(x) - 5.0 / model.drift().abs();
        let mean_excess = {
            let t = pert.tail(x);
            if t > 0.0 {
                pert.integrated_tail(x)? / t
            } else {
                0.0
            }
        };
        let cl_length = solve_theta_star(&model.increment)
            .map(|s| 1.0 / s.theta_star)
            .unwrap_or(0.0);
        let length = mean_excess.max(cl_length).max(pert.scale());
        Self::new(x_min, x + 10.0 * length, n_points)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.n_points - 1 {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// The grid with half the spacing over the same range.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }
}

/// Grid values with constant extension on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFn {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub below_min_value: f64,
    pub above_max_value: f64,
}

impl TabulatedFn {
    pub fn from_fn<F: Fn(f64) -> f64>(
        grid: Grid,
        f: F,
        below_min_value: f64,
        above_max_value: f64,
    ) -> Self {
        Self {
            grid,
            values: grid.points().into_iter().map(f).collect(),
            below_min_value,
            above_max_value,
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_fn(grid, |_| c, c, c)
    }

    /// Linear interpolation inside the grid, the constant extensions outside.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g.x_min {
            return self.below_min_value;
        }
        if x > g.x_max {
            return self.above_max_value;
        }
        let t = (x - g.x_min) / g.spacing();
        let i = (t.floor() as usize).min(g.n_points - 2);
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute difference at the points of `self.grid`.
    pub fn sup_distance(&self, other: &TabulatedFn) -> f64 {
        self.grid
            .points()
            .iter()
            .zip(&self.values)
            .map(|(&x, v)| (v - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }
}

/// The operator `T` discretised on a grid.
///
/// The integral over `y` is a trapezoid sum over the grid-induced mesh
/// `y = x_i - x_j`, so the kernel is Toeplitz in `i - j`; the parts of the
/// increment law that map outside the grid meet the constant extensions.
#[derive(Debug, Clone)]
pub struct Operator {
    grid: Grid,
    /// `P(xi <= x_i)`.
    factor: Vec<f64>,
    /// Increment density at `k h`, `k = -(n-1)..=(n-1)`, offset by `n - 1`.
    kernel: Vec<f64>,
    /// `P(X > x_i - x_min)`, mass sent below the grid.
    below_mass: Vec<f64>,
    /// `P(X < x_i - x_max)`, mass sent above the grid.
    above_mass: Vec<f64>,
    /// Point-mass increments act as an exact shift.
    shift: Option<f64>,
}

impl Operator {
    pub fn new(model: &WalkModel, grid: Grid) -> Result<Self> {
        model.require_independent()?;
        let n = grid.n_points;
        let h = grid.spacing();
        let xs = grid.points();
        let inc = model.increment;
        let factor = xs.iter().map(|&x| model.perturbation.cdf(x)).collect();
        let shift = match inc {
            DistributionSpec::Deterministic { value } => Some(value),
            _ => None,
        };
        let (kernel, below_mass, above_mass) = if shift.is_some() {
            (Vec::new(), Vec::new(), Vec::new())
        } else {
            let kernel = (0..2 * n - 1)
                .map(|k| {
                    let y = (k as f64 - (n - 1) as f64) * h;
                    inc.midpoint_density(y).unwrap_or(0.0)
                })
                .collect();
            let below = xs.iter().map(|&x| inc.tail(x - grid.x_min)).collect();
            let above = xs.iter().map(|&x| left_cdf(&inc, x - grid.x_max)).collect();
            (kernel, below, above)
        };
        Ok(Self {
            grid,
            factor,
            kernel,
            below_mass,
            above_mass,
            shift,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `T g` on the grid, clamped to `[0, 1]`; the result extends by its
    /// end values on the left and by 0 on the right.
    pub fn apply(&self, g: &TabulatedFn) -> Result<TabulatedFn> {
        if g.grid != self.grid {
            return Err(Error::InvalidParameter(
                "function and operator grids differ".into(),
            ));
        }
        let n = self.grid.n_points;
        let h = self.grid.spacing();
        let xs = self.grid.points();
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                if self.factor[i] == 0.0 {
                    return 0.0;
                }
                let integral = match self.shift {
                    Some(c) => g.eval(xs[i] - c),
                    None => {
                        // Kernel index for (i, j) is i - j + n - 1.
                        let k = &self.kernel[i..i + n];
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += g.values[j] * k[n - 1 - j];
                        }
                        acc -= 0.5 * (g.values[0] * k[n - 1] + g.values[n - 1] * k[0]);
                        acc * h
                            + g.below_min_value * self.below_mass[i]
                            + g.above_max_value * self.above_mass[i]
                    }
                };
                (self.factor[i] * integral).clamp(0.0, 1.0)
            })
            .collect();
        Ok(TabulatedFn {
            grid: self.grid,
            below_min_value: values[0],
            above_max_value: 0.0,
            values,
        })
    }
}

fn left_cdf(d: &DistributionSpec, y: f64) -> f64 {
    // P(X < y); differs from the CDF only at atoms.
    match *d {
        DistributionSpec::Deterministic { value } => {
            if value < y {
                1.0
            } else {
                0.0
            }
        }
        _ => d.cdf(y),
    }
}

/// One application of `T` to `g` on `g`'s grid.
pub fn apply_t(g: &TabulatedFn, model: &WalkModel) -> Result<TabulatedFn> {
    Operator::new(model, g.grid)?.apply(g)
}

/// `b(x) = P(xi > x)` on the grid, extended by 1 and 0.
pub fn source_term(model: &WalkModel, grid: Grid) -> TabulatedFn {
    TabulatedFn::from_fn(grid, |x| model.perturbation.tail(x), 1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannSolution {
    pub u: TabulatedFn,
    /// Index `N` of the last term added.
    pub terms: usize,
    /// Sup norm of `T^N b`.
    pub last_norm: f64,
    /// The partial sums `Σ_{n<=k} T^n b`, `k = 0..=N`, when requested.
    pub partial_sums: Option<Vec<TabulatedFn>>,
}

/// Options for [`solve_u`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_terms: usize,
    pub keep_partial_sums: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_terms: 10_000,
            keep_partial_sums: false,
        }
    }
}

/// Sum `Σ_{n<=N} T^n b` until `|T^N b|_∞ <= tol`.
pub fn solve_u(model: &WalkModel, grid: Grid, opts: SolveOptions) -> Result<NeumannSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    let mean = model.increment.mean()?;
    if !(mean < 0.0) {
        return Err(Error::InvalidDrift { mean });
    }
    let op = Operator::new(model, grid)?;
    let mut term = source_term(model, grid);
    let mut sum = term.values.clone();
    let mut partial = opts.keep_partial_sums.then(Vec::new);
    let snapshot = |sum: &[f64]| TabulatedFn {
        grid,
        values: sum.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        below_min_value: 1.0,
        above_max_value: 0.0,
    };
    if let Some(p) = partial.as_mut() {
        p.push(snapshot(&sum));
    }
    let mut n = 0;
    let mut norm = term.sup_norm();
    while norm > opts.tol {
        if n >= opts.max_terms {
            return Err(Error::NonConvergence {
                terms: n,
                last_norm: norm,
            });
        }
        term = op.apply(&term)?;
        n += 1;
        norm = term.sup_norm();
        for (s, t) in sum.iter_mut().zip(&term.values) {
            *s += t;
        }
        if let Some(p) = partial.as_mut() {
            p.push(snapshot(&sum));
        }
    }
    Ok(NeumannSolution {
        u: snapshot(&sum),
        terms: n,
        last_norm: norm,
        partial_sums: partial,
    })
}

/// `sup |u - b - T u|` over the interior grid points.
pub fn residual(u: &TabulatedFn, model: &WalkModel) -> Result<f64> {
    let tu = apply_t(u, model)?;
    let n = u.grid.n_points;
    let xs = u.grid.points();
    Ok((1..n - 1)
        .map(|i| (u.values[i] - model.perturbation.tail(xs[i]) - tu.values[i]).abs())
        .fold(0.0, f64::max))
}
