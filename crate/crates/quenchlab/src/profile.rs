//! Permittivity profiles: the coefficient `f(x) >= 0` multiplying the
//! singular source `(1 - u)^{-p}`.
//!
//! Profiles are stored nodewise on a grid.  All built-in families are
//! functions of `s = |x|` (interval) or `s = r` (radial), so the same
//! constructors serve both geometries.  Transitions between levels use the
//! smooth cosine ramp `s -> (1 - cos(pi s)) / 2`.

use std::collections::BTreeMap;

use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};

/// Family tag recording how a profile was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileFamily {
    Constant,
    MShaped,
    OneWell,
    TwoBump,
    Convex,
    TwoAnnulus,
    Custom,
}

impl ProfileFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileFamily::Constant => "constant",
            ProfileFamily::MShaped => "m_shaped",
            ProfileFamily::OneWell => "one_well",
            ProfileFamily::TwoBump => "two_bump",
            ProfileFamily::Convex => "convex",
            ProfileFamily::TwoAnnulus => "two_annulus",
            ProfileFamily::Custom => "custom",
        }
    }
}

/// A nonnegative source profile sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub family: ProfileFamily,
    /// Constructor parameters, kept for reporting.
    pub params: BTreeMap<String, f64>,
}

impl Profile {
    pub fn new(
        grid: Grid,
        values: Vec<f64>,
        family: ProfileFamily,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::ShapeMismatch {
                expected: grid.num_nodes(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "profile values must be finite and nonnegative, found {bad}"
            )));
        }
        Ok(Profile {
            grid,
            values,
            family,
            params,
        })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        let values = vec![value; grid.num_nodes()];
        let mut params = BTreeMap::new();
        params.insert("value".into(), value);
        Profile::new(grid, values, ProfileFamily::Constant, params)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maximum of the profile over the nodes of a region.
    pub fn max_on(&self, region: &FloorRegion) -> Result<f64> {
        let idx = region.node_indices(&self.grid)?;
        Ok(idx
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Minimum of the profile over the nodes of a region.
    pub fn min_on(&self, region: &FloorRegion) -> Result<f64> {
        let idx = region.node_indices(&self.grid)?;
        Ok(idx
            .iter()
            .map(|&i| self.values[i])
            .fold(f64::INFINITY, f64::min))
    }
}

/// Smooth monotone ramp from 0 at `s = 0` to 1 at `s = 1`.
pub(crate) fn cosine_ramp(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    0.5 * (1.0 - (std::f64::consts::PI * s).cos())
}

fn radial_samples(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.nodes.iter().map(|&x| f(x.abs())).collect()
}

/// First Dirichlet eigenvalue of the Laplacian on the unit ball in `R^n`.
///
/// n = 1: (pi/2)^2; n = 2: square of the first zero of the Bessel function
/// J_0; n = 3: pi^2.  Higher dimensions are not supported.
pub fn principal_eigenvalue(n: u32) -> Result<f64> {
    use std::f64::consts::PI;
    // First positive zero of J_0, to double precision.
    const J0_ZERO: f64 = 2.404825557695773;
    match n {
        1 => Ok((PI / 2.0) * (PI / 2.0)),
        2 => Ok(J0_ZERO * J0_ZERO),
        3 => Ok(PI * PI),
        _ => Err(Error::UnsupportedDimension(n)),
    }
}

/// Critical source level for the unit ball: a profile that stays above
/// `quench_threshold(p, n) / r^2` on some ball of radius `r` inside the
/// domain forces touchdown in finite time.
///
/// Equals `p^p / (p+1)^{p+1}` times the principal eigenvalue, which is the
/// same as `lambda_1 * max_{0 <= s < 1} s (1-s)^p`.
pub fn quench_threshold(p: f64, n: u32) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let lambda1 = principal_eigenvalue(n)?;
    Ok(lambda1 * p.powf(p) / (p + 1.0).powf(p + 1.0))
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Geometry(msg.into()))
    }
}

/// M-shaped profile: value `f0` at the origin, rising to the maximum
/// `f_max` at `|x| = l` over a ramp of width `ramp_width`, then falling
/// back to `f0` over the same width.  Nondecreasing on `[0, l]`,
/// nonincreasing on `[l, R]`.
pub fn make_m_shaped(grid: &Grid, f0: f64, f_max: f64, l: f64, ramp_width: f64) -> Result<Profile> {
    let r_dom = grid.domain.radius();
    require(
        0.0 < l && l < r_dom,
        format!("peak location l = {l} must lie strictly inside (0, {r_dom})"),
    )?;
    require(ramp_width > 0.0, "ramp width must be positive")?;
    require(
        0.0 <= f0 && f0 <= f_max,
        format!("need 0 <= f0 <= f_max, got f0 = {f0}, f_max = {f_max}"),
    )?;
    let rise_start = (l - ramp_width).max(0.0);
    let fall_end = (l + ramp_width).min(r_dom);
    let values = radial_samples(grid, |s| {
        let t = if s <= l {
            cosine_ramp((s - rise_start) / (l - rise_start))
        } else {
            cosine_ramp((fall_end - s) / (fall_end - l))
        };
        f0 + (f_max - f0) * t
    });
    let mut params = BTreeMap::new();
    params.insert("f0".into(), f0);
    params.insert("f_max".into(), f_max);
    params.insert("l".into(), l);
    params.insert("ramp_width".into(), ramp_width);
    Profile::new(grid.clone(), values, ProfileFamily::MShaped, params)
}

/// Plateau profile with a narrow well at the origin: `f0` at 0, rising to
/// `f_max` by `|x| = well_width`, flat until `|x| = l`, then descending to
/// `f_boundary` at the outer boundary.
pub fn make_one_well(
    grid: &Grid,
    f0: f64,
    f_max: f64,
    well_width: f64,
    l: f64,
    f_boundary: f64,
) -> Result<Profile> {
    let r_dom = grid.domain.radius();
    require(
        0.0 < well_width && well_width < l && l < r_dom,
        format!("need 0 < well_width < l < R, got well_width = {well_width}, l = {l}, R = {r_dom}"),
    )?;
    require(
        0.0 <= f0 && f0 <= f_max && 0.0 <= f_boundary && f_boundary <= f_max,
        "need 0 <= f0, f_boundary <= f_max",
    )?;
    let values = radial_samples(grid, |s| {
        if s <= well_width {
            f0 + (f_max - f0) * cosine_ramp(s / well_width)
        } else if s <= l {
            f_max
        } else {
            f_boundary + (f_max - f_boundary) * cosine_ramp((r_dom - s) / (r_dom - l))
        }
    });
    let mut params = BTreeMap::new();
    params.insert("f0".into(), f0);
    params.insert("f_max".into(), f_max);
    params.insert("well_width".into(), well_width);
    params.insert("l".into(), l);
    params.insert("f_boundary".into(), f_boundary);
    Profile::new(grid.clone(), values, ProfileFamily::OneWell, params)
}

/// Ring profile: plateau of height `a` on `{ r - eps/2 <= |x| <= r + eps/2 }`,
/// background `eta` outside `{ r - eps <= |x| <= r + eps }`, cosine ramps in
/// between.
pub fn make_two_bump(grid: &Grid, r: f64, eps: f64, a: f64, eta: f64) -> Result<Profile> {
    let r_dom = grid.domain.radius();
    require(
        0.0 < r && r < r_dom,
        format!("ring radius r = {r} must lie strictly inside (0, {r_dom})"),
    )?;
    require(
        0.0 < eps && eps < r.min(r_dom - r),
        format!("need 0 < eps < min(r, R - r), got eps = {eps}"),
    )?;
    require(
        0.0 < eta && eta <= a,
        format!("need 0 < eta <= a, got eta = {eta}, a = {a}"),
    )?;
    let values = radial_samples(grid, |s| {
        let d = (s - r).abs();
        if d <= 0.5 * eps {
            a
        } else if d >= eps {
            eta
        } else {
            eta + (a - eta) * cosine_ramp((eps - d) / (0.5 * eps))
        }
    });
    let mut params = BTreeMap::new();
    params.insert("r".into(), r);
    params.insert("eps".into(), eps);
    params.insert("a".into(), a);
    params.insert("eta".into(), eta);
    Profile::new(grid.clone(), values, ProfileFamily::TwoBump, params)
}

/// Convex radial profile `mu + lambda |x|^2 / R^2`.
pub fn make_convex(grid: &Grid, mu: f64, lambda: f64) -> Result<Profile> {
    require(mu > 0.0, format!("need mu > 0, got {mu}"))?;
    require(lambda >= 0.0, format!("need lambda >= 0, got {lambda}"))?;
    let r_dom = grid.domain.radius();
    let values = radial_samples(grid, |s| mu + lambda * s * s / (r_dom * r_dom));
    let mut params = BTreeMap::new();
    params.insert("mu".into(), mu);
    params.insert("lambda".into(), lambda);
    Profile::new(grid.clone(), values, ProfileFamily::Convex, params)
}

/// Geometry of a pair of competing plateaus (annuli in `|x|`) whose heights
/// trade off against each other.
///
/// Plateau 1 sits on `{ |s - r1| <= half_width }`, plateau 2 on
/// `{ |s - r2| <= half_width }`; both decay to the background `eta` over a
/// further `half_width`.  Supports must be separated from each other, from
/// the origin and from the boundary by more than `half_width`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAnnulusGeometry {
    pub r1: f64,
    pub r2: f64,
    pub half_width: f64,
    pub mu: f64,
    pub eta: f64,
}

impl TwoAnnulusGeometry {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let r_dom = grid.domain.radius();
        let w = self.half_width;
        require(w > 0.0, "half_width must be positive")?;
        require(
            self.eta > 0.0 && self.mu > self.eta,
            format!(
                "need 0 < eta < mu, got eta = {}, mu = {}",
                self.eta, self.mu
            ),
        )?;
        require(
            self.r1 - 2.0 * w > 0.0,
            "inner annulus support must stay away from the origin",
        )?;
        require(
            self.r2 - self.r1 > 5.0 * w,
            "annulus supports must be separated by more than half_width",
        )?;
        require(
            r_dom - (self.r2 + 2.0 * w) > w,
            "outer annulus support must be separated from the boundary by more than half_width",
        )?;
        Ok(())
    }

    /// Height of the second plateau when the first is `h`.
    pub fn partner_height(&self, h: f64) -> f64 {
        2.0 * self.mu + self.eta - h
    }

    /// Support of plateau `i` (1 or 2) in `|x|`, padded with the ramp.
    pub fn support(&self, i: usize) -> (f64, f64) {
        let c = if i == 1 { self.r1 } else { self.r2 };
        (c - 2.0 * self.half_width, c + 2.0 * self.half_width)
    }
}

/// Member `f_h` of the two-annulus family: plateau heights `h` and
/// `2 mu + eta - h`, so that the sum of a member and its mirror
/// `f_{2 mu + eta - h}` is constant on both plateaus.
pub fn make_two_annulus(grid: &Grid, h: f64, geom: &TwoAnnulusGeometry) -> Result<Profile> {
    geom.validate(grid)?;
    if !(geom.eta <= h && h <= 2.0 * geom.mu) {
        return Err(Error::InvalidParameter(format!(
            "plateau height h = {h} outside [eta, 2 mu] = [{}, {}]",
            geom.eta,
            2.0 * geom.mu
        )));
    }
    let h2 = geom.partner_height(h);
    let w = geom.half_width;
    let eta = geom.eta;
    let values = radial_samples(grid, |s| {
        let d1 = (s - geom.r1).abs();
        let d2 = (s - geom.r2).abs();
        if d1 <= w {
            h
        } else if d2 <= w {
            h2
        } else if d1 <= 2.0 * w {
            eta + (h - eta) * cosine_ramp((2.0 * w - d1) / w)
        } else if d2 <= 2.0 * w {
            eta + (h2 - eta) * cosine_ramp((2.0 * w - d2) / w)
        } else {
            eta
        }
    });
    let mut params = BTreeMap::new();
    params.insert("h".into(), h);
    params.insert("r1".into(), geom.r1);
    params.insert("r2".into(), geom.r2);
    params.insert("half_width".into(), geom.half_width);
    params.insert("mu".into(), geom.mu);
    params.insert("eta".into(), geom.eta);
    Profile::new(grid.clone(), values, ProfileFamily::TwoAnnulus, params)
}

/// Discrete L^q distance between two profiles on the same grid, taken with
/// the domain's measure (plain `dx` on the interval, `omega_n r^{n-1} dr`
/// radially).  `q = f64::INFINITY` gives the max norm over nodes.
pub fn lq_distance(f: &Profile, g: &Profile, q: f64) -> Result<f64> {
    if f.grid != g.grid {
        return Err(Error::GridMismatch);
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "norm exponent q = {q} must satisfy q >= 1"
        )));
    }
    let diff = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs());
    if q.is_infinite() {
        return Ok(diff.fold(0.0, f64::max));
    }
    let w = f.grid.measure_weights();
    let total: f64 = diff.zip(w).map(|(d, wi)| wi * d.powf(q)).sum();
    Ok(total.powf(1.0 / q))
}

/// The region on which a profile floor is certified.
#[derive(Debug, Clone, PartialEq)]
pub enum FloorRegion {
    /// Ball of the given radius; on interval domains its center may be any
    /// interior point, on radial domains it must be the origin.
    Ball { center: f64, radius: f64 },
    /// `{ |x| (or r) in [center - half_width, center + half_width] }`.
    /// An annulus of half-width `w` contains balls of radius `w`, so the
    /// same ball criterion applies; this is the variant to use for
    /// off-center regions on radial grids.
    Annulus { center: f64, half_width: f64 },
}

impl FloorRegion {
    /// Radius of the comparison ball contained in the region.
    pub fn ball_radius(&self) -> f64 {
        match *self {
            FloorRegion::Ball { radius, .. } => radius,
            FloorRegion::Annulus { half_width, .. } => half_width,
        }
    }

    pub fn node_indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        let r_dom = grid.domain.radius();
        let radial = matches!(grid.domain, Domain::RadialBall { .. });
        match *self {
            FloorRegion::Ball { center, radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                if radial && center != 0.0 {
                    return Err(Error::UnsupportedGeometry(format!(
                        "off-center ball (center = {center}) on a radial grid; use an annulus region"
                    )));
                }
                if center.abs() + radius > r_dom {
                    return Err(Error::Geometry(format!(
                        "ball B({center}, {radius}) is not contained in the domain"
                    )));
                }
                Ok(grid
                    .nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| {
                        if radial {
                            x <= radius
                        } else {
                            (x - center).abs() <= radius
                        }
                    })
                    .map(|(i, _)| i)
                    .collect())
            }
            FloorRegion::Annulus { center, half_width } => {
                if !(half_width.is_finite() && half_width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "annulus half-width must be positive, got {half_width}"
                    )));
                }
                if center - half_width < 0.0 || center + half_width > r_dom {
                    return Err(Error::Geometry(format!(
                        "annulus [{} , {}] is not contained in [0, {r_dom}]",
                        center - half_width,
                        center + half_width
                    )));
                }
                Ok(grid
                    .nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| (x.abs() - center).abs() <= half_width)
                    .map(|(i, _)| i)
                    .collect())
            }
        }
    }
}

/// Outcome of a floor check; `margin = mu - quench_threshold(p, n) / r^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorCheck {
    pub holds: bool,
    pub margin: f64,
    pub min_on_region: f64,
    pub threshold: f64,
}

/// Check that the profile stays at or above `mu` on the region and that
/// `mu` clears the quench threshold for the region's inscribed ball radius.
/// A passing check certifies finite-time touchdown.
pub fn profile_floor_check(
    f: &Profile,
    region: &FloorRegion,
    mu: f64,
    p: f64,
) -> Result<FloorCheck> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "floor level mu = {mu} must be positive"
        )));
    }
    let r = region.ball_radius();
    let min_on_region = f.min_on(region)?;
    let threshold = quench_threshold(p, f.grid.domain.dim())? / (r * r);
    let margin = mu - threshold;
    Ok(FloorCheck {
        holds: min_on_region >= mu && margin > 0.0,
        margin,
        min_on_region,
        threshold,
    })
}
