//! Spatial domains and uniform grids.
//!
//! Two geometries are supported: a symmetric interval `(-R, R)` and a ball
//! of radius `R` in dimension `n` reduced to its radial coordinate
//! `r in [0, R]`.  Solutions are held at zero on the outer boundary; the
//! radial origin is an ordinary unknown handled by the symmetric stencil.

use crate::error::{Error, Result};

/// Domain geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// The interval `(-radius, radius)` in one dimension.
    Interval { radius: f64 },
    /// The ball of the given radius in `R^dim`, discretised radially.
    RadialBall { radius: f64, dim: u32 },
}

impl Domain {
    pub fn radius(&self) -> f64 {
        match *self {
            Domain::Interval { radius } => radius,
            Domain::RadialBall { radius, .. } => radius,
        }
    }

    /// Ambient dimension (1 for the interval).
    pub fn dim(&self) -> u32 {
        match *self {
            Domain::Interval { .. } => 1,
            Domain::RadialBall { dim, .. } => dim,
        }
    }

    fn validate(&self) -> Result<()> {
        let radius = self.radius();
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "domain radius must be positive and finite, got {radius}"
            )));
        }
        if let Domain::RadialBall { dim, .. } = *self {
            if dim < 1 {
                return Err(Error::UnsupportedDimension(dim));
            }
        }
        Ok(())
    }
}

/// Uniform mesh over the domain: `cells` equal intervals, `cells + 1` nodes.
///
/// Interval grids span `[-R, R]`; radial grids span `[0, R]`.  Endpoint
/// nodes land exactly on the boundary coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub cells: usize,
    pub nodes: Vec<f64>,
    pub h: f64,
}

/// Build a uniform grid with `cells` cells (at least 2).
pub fn build_grid(domain: Domain, cells: usize) -> Result<Grid> {
    domain.validate()?;
    if cells < 2 {
        return Err(Error::InvalidResolution { min: 2, got: cells });
    }
    let r = domain.radius();
    let m = cells as f64;
    let (lo, extent) = match domain {
        Domain::Interval { .. } => (-r, 2.0 * r),
        Domain::RadialBall { .. } => (0.0, r),
    };
    // Blend endpoints so the first and last node are exact.
    let nodes: Vec<f64> = (0..=cells)
        .map(|i| {
            let s = i as f64 / m;
            lo * (1.0 - s) + (lo + extent) * s
        })
        .collect();
    let h = extent / m;
    Ok(Grid {
        domain,
        cells,
        nodes,
        h,
    })
}

impl Grid {
    pub fn num_nodes(&self) -> usize {
        self.cells + 1
    }

    /// Indices of nodes pinned to zero by the boundary condition.
    pub fn is_boundary(&self, idx: usize) -> bool {
        match self.domain {
            Domain::Interval { .. } => idx == 0 || idx == self.cells,
            Domain::RadialBall { .. } => idx == self.cells,
        }
    }

    /// Distance from a point (coordinate on this grid's axis) to the
    /// outer boundary.
    pub fn boundary_distance(&self, x: f64) -> Result<f64> {
        let radius = self.domain.radius();
        let inside = match self.domain {
            Domain::Interval { .. } => x.abs() <= radius,
            Domain::RadialBall { .. } => (0.0..=radius).contains(&x),
        };
        if !inside {
            return Err(Error::OutsideDomain { point: x, radius });
        }
        Ok(match self.domain {
            Domain::Interval { .. } => radius - x.abs(),
            Domain::RadialBall { .. } => radius - x,
        })
    }

    /// Apply the discrete Laplacian.  Boundary rows return 0 (those nodes
    /// are held by the boundary condition, not evolved).  On radial grids
    /// the origin uses the symmetric-limit stencil `2 n (u_1 - u_0) / h^2`
    /// and interior nodes use
    /// `(u_{i-1} - 2 u_i + u_{i+1})/h^2 + (n-1)/r_i * (u_{i+1} - u_{i-1})/(2h)`.
    pub fn laplacian_apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n_nodes = self.num_nodes();
        if u.len() != n_nodes {
            return Err(Error::ShapeMismatch {
                expected: n_nodes,
                got: u.len(),
            });
        }
        let h2 = self.h * self.h;
        let mut out = vec![0.0; n_nodes];
        match self.domain {
            Domain::Interval { .. } => {
                for i in 1..self.cells {
                    out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
                }
            }
            Domain::RadialBall { dim, .. } => {
                let n = dim as f64;
                out[0] = 2.0 * n * (u[1] - u[0]) / h2;
                for i in 1..self.cells {
                    let second = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
                    let first = (u[i + 1] - u[i - 1]) / (2.0 * self.h);
                    out[i] = second + (n - 1.0) / self.nodes[i] * first;
                }
            }
        }
        Ok(out)
    }

    /// Quadrature weights for integrals over the domain: trapezoid rule
    /// times the surface measure of the sphere of each node's radius
    /// (plain `dx` on the interval, `omega_n r^{n-1} dr` radially).
    pub fn measure_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.num_nodes()];
        w[0] = 0.5 * self.h;
        w[self.cells] = 0.5 * self.h;
        if let Domain::RadialBall { dim, .. } = self.domain {
            let omega = unit_sphere_area(dim);
            let n = dim as f64;
            for (wi, &r) in w.iter_mut().zip(self.nodes.iter()) {
                // 0^0 = 1 keeps the one-dimensional radial measure exact.
                *wi *= omega * if dim == 1 { 1.0 } else { r.powf(n - 1.0) };
            }
        }
        w
    }
}

/// Surface area of the unit sphere in `R^n`: `2 pi^{n/2} / Gamma(n/2)`.
pub fn unit_sphere_area(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // Gamma(n/2) by the half-integer recurrence.
            let even = n.is_multiple_of(2);
            let mut g = if even { 1.0 } else { PI.sqrt() };
            let mut k = if even { 1.0 } else { 0.5 };
            while k < n as f64 / 2.0 - 0.25 {
                g *= k;
                k += 1.0;
            }
            2.0 * PI.powf(n as f64 / 2.0) / g
        }
    }
}
