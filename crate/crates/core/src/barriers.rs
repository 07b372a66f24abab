//! Shrinking tori and spheres used as barriers, clearance measurements
//! against evolving graphs, and height bounds on the complement of the tori.

use std::fmt;

use thiserror::Error;

use crate::grid::ScalarField;
use crate::shrinker::{torus_cross_section, ProfileCurve};
use crate::solver::Observer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("barrier is extinct at t = {t} (extinction time {t_star})")]
    Extinct { t: f64, t_star: f64 },
    #[error("sphere radius {rho0} must be positive")]
    Radius { rho0: f64 },
    #[error("sphere radius {rho0} is not below the torus outer radius {outer}")]
    SphereTooLarge { rho0: f64, outer: f64 },
}

/// Self-similarly shrinking torus about the fixed point `(center, height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusBarrier {
    pub profile: ProfileCurve,
    pub center: [f64; 2],
    pub height: f64,
    pub t_star: f64,
}

/// The torus at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSlice {
    pub lambda: f64,
    pub inner: f64,
    pub outer: f64,
}

impl TorusBarrier {
    /// Torus centred at `(m, delta_0)` for the lattice point `m`.
    pub fn at_lattice_point(profile: &ProfileCurve, m: [f64; 2]) -> Self {
        Self {
            center: m,
            height: profile.max_height,
            t_star: profile.extinction_time,
            profile: profile.clone(),
        }
    }

    pub fn lambda(&self, t: f64) -> f64 {
        (1.0 - t / self.t_star).max(0.0).sqrt()
    }

    pub fn slice(&self, t: f64) -> Result<TorusSlice, BarrierError> {
        if t >= self.t_star {
            return Err(BarrierError::Extinct {
                t,
                t_star: self.t_star,
            });
        }
        let lambda = self.lambda(t);
        Ok(TorusSlice {
            lambda,
            inner: lambda * self.profile.inner_radius,
            outer: lambda * self.profile.outer_radius,
        })
    }

    /// Absolute heights `(z_minus, z_plus)` of the torus above base radius
    /// `rho`, or `None` outside the annulus.
    pub fn band(&self, slice: &TorusSlice, rho: f64) -> Option<(f64, f64)> {
        if rho < slice.inner || rho > slice.outer || slice.lambda == 0.0 {
            return None;
        }
        let (lo, hi) = torus_cross_section(&self.profile, rho / slice.lambda).ok()?;
        Some((self.height + slice.lambda * lo, self.height + slice.lambda * hi))
    }
}

/// Inner radius, outer radius and the cross-section at time `t`.
pub fn torus_at_time(
    barrier: &TorusBarrier,
    t: f64,
) -> Result<(f64, f64, impl Fn(f64) -> Option<(f64, f64)> + '_), BarrierError> {
    let slice = barrier.slice(t)?;
    Ok((slice.inner, slice.outer, move |rho| barrier.band(&slice, rho)))
}

fn offset(field: &ScalarField, idx: usize, c: [f64; 2]) -> [f64; 2] {
    let g = field.grid();
    let p = g.node(idx);
    let dx = g.wrap_delta(0, p[0] - c[0]);
    let dy = if g.dim() == 2 {
        g.wrap_delta(1, p[1] - c[1])
    } else {
        0.0
    };
    [dx, dy]
}

/// Visits the nodes within distance `r` of `c` (periodic images included).
fn for_nodes_near(field: &ScalarField, c: [f64; 2], r: f64, mut f: impl FnMut(usize, f64)) {
    let g = field.grid();
    let range = |axis: usize, centre: f64| -> Vec<usize> {
        let n = g.counts()[axis];
        let h = g.spacing(axis);
        let k = (r / h).ceil() as i64 + 1;
        let mid = g.nearest_index(axis, centre) as i64;
        let mut idx: Vec<usize> = (-k..=k)
            .map(|d| (mid + d).rem_euclid(n as i64) as usize)
            .collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    };
    let rows = range(0, c[0]);
    let cols = if g.dim() == 2 { range(1, c[1]) } else { vec![0] };
    for &i in &rows {
        for &j in &cols {
            let idx = g.flat(i, j);
            let d = offset(field, idx, c);
            let rho = d[0].hypot(d[1]);
            if rho <= r {
                f(idx, rho);
            }
        }
    }
}

/// Signed gap between the graph and the torus band over the annulus
/// `inner <= |x - m| <= outer`: positive outside the band, negative inside.
/// Returns `+inf` when no node lies in the annulus.
pub fn clearance_graph_torus(
    field: &ScalarField,
    barrier: &TorusBarrier,
    t: f64,
) -> Result<f64, BarrierError> {
    let slice = barrier.slice(t)?;
    let mut worst = f64::INFINITY;
    for_nodes_near(field, barrier.center, slice.outer, |idx, rho| {
        if let Some((lo, hi)) = barrier.band(&slice, rho) {
            let u = field.values[idx];
            let gap = if u < lo {
                lo - u
            } else if u > hi {
                u - hi
            } else {
                -(u - lo).min(hi - u)
            };
            worst = worst.min(gap);
        }
    });
    Ok(worst)
}

/// Round sphere of initial radius `rho0` centred at `(center, height)`,
/// shrinking by mean curvature flow in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereBarrier {
    pub center: [f64; 2],
    pub height: f64,
    pub rho0: f64,
    pub n: usize,
}

impl SphereBarrier {
    pub fn new(center: [f64; 2], height: f64, rho0: f64, n: usize) -> Result<Self, BarrierError> {
        if !(rho0 > 0.0) {
            return Err(BarrierError::Radius { rho0 });
        }
        Ok(Self {
            center,
            height,
            rho0,
            n,
        })
    }

    /// Sphere of radius `rho0` resting on the plane at `level` above `center`.
    pub fn resting_on(center: [f64; 2], level: f64, rho0: f64) -> Result<Self, BarrierError> {
        Self::new(center, level + rho0, rho0, 2)
    }

    /// Checks the pairing condition `rho0 < r0` with a torus.
    pub fn paired_with(self, torus: &ProfileCurve) -> Result<Self, BarrierError> {
        if !(self.rho0 < torus.outer_radius) {
            return Err(BarrierError::SphereTooLarge {
                rho0: self.rho0,
                outer: torus.outer_radius,
            });
        }
        Ok(self)
    }

    pub fn extinction_time(&self) -> f64 {
        self.rho0 * self.rho0 / (2.0 * self.n as f64)
    }

    pub fn radius(&self, t: f64) -> Result<f64, BarrierError> {
        let r2 = self.rho0 * self.rho0 - 2.0 * self.n as f64 * t;
        if r2 <= 0.0 {
            return Err(BarrierError::Extinct {
                t,
                t_star: self.extinction_time(),
            });
        }
        Ok(r2.sqrt())
    }
}

/// Minimum over nodes in the sphere's shadow of the distance from the graph
/// point to the centre, minus the radius. `+inf` if the shadow has no nodes.
pub fn clearance_graph_sphere(
    field: &ScalarField,
    sphere: &SphereBarrier,
    t: f64,
) -> Result<f64, BarrierError> {
    let radius = sphere.radius(t)?;
    let mut worst = f64::INFINITY;
    for_nodes_near(field, sphere.center, radius, |idx, rho| {
        let dz = field.values[idx] - sphere.height;
        worst = worst.min(rho.hypot(dz) - radius);
    });
    Ok(worst)
}

/// Complement of the balls `B_{r_t}(m)` around integer lattice points,
/// optionally restricted to `|x1|` in a band.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOmega {
    pub label: String,
    pub t: f64,
    pub inner: f64,
    pub outer: f64,
    /// Lattice period (1 for the unit lattice).
    pub period: f64,
    pub x1_band: Option<(f64, f64)>,
}

impl RegionOmega {
    /// `Omega_t` of the lattice of tori; the whole plane once they are gone.
    pub fn from_torus(barrier: &TorusBarrier, t: f64) -> Self {
        let (inner, outer, label) = match barrier.slice(t) {
            Ok(s) => (s.inner, s.outer, "omega"),
            Err(_) => (0.0, 0.0, "all"),
        };
        Self {
            label: label.into(),
            t,
            inner,
            outer,
            period: 1.0,
            x1_band: None,
        }
    }

    pub fn whole(t: f64) -> Self {
        Self {
            label: "all".into(),
            t,
            inner: 0.0,
            outer: 0.0,
            period: 1.0,
            x1_band: None,
        }
    }

    pub fn within(mut self, band: (f64, f64), label: &str) -> Self {
        self.x1_band = Some(band);
        self.label = label.into();
        self
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        if let Some((lo, hi)) = self.x1_band {
            let a = p[0].abs();
            if a < lo || a > hi {
                return false;
            }
        }
        if self.outer <= 0.0 {
            return true;
        }
        let q = self.period;
        let dx = p[0] - q * (p[0] / q).round();
        let dy = p[1] - q * (p[1] / q).round();
        dx.hypot(dy) >= self.outer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCheck {
    pub t: f64,
    pub region: String,
    pub bound: f64,
    pub pass: bool,
    pub max: f64,
    pub at: [f64; 2],
    pub nodes: usize,
}

impl fmt::Display for RegionCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={}, region={}, bound={}, pass={}, max={}, at=({}, {})",
            self.t, self.region, self.bound, self.pass, self.max, self.at[0], self.at[1]
        )
    }
}

/// Largest value of `field` over the nodes of `region` and whether it stays
/// strictly below `bound`. An empty region passes.
pub fn check_region_bound(field: &ScalarField, region: &RegionOmega, bound: f64) -> RegionCheck {
    let g = field.grid();
    let mut max = f64::NEG_INFINITY;
    let mut at = [f64::NAN, f64::NAN];
    let mut nodes = 0;
    for (idx, &v) in field.values.iter().enumerate() {
        let p = g.node(idx);
        if region.contains(p) {
            nodes += 1;
            if v > max {
                max = v;
                at = p;
            }
        }
    }
    RegionCheck {
        t: region.t,
        region: region.label.clone(),
        bound,
        pass: nodes == 0 || max < bound,
        max,
        at,
        nodes,
    }
}

/// Records `clr_torus_<k>` for each torus; NaN once it is extinct.
#[derive(Debug, Clone)]
pub struct TorusClearanceObserver {
    pub barriers: Vec<TorusBarrier>,
}

impl Observer for TorusClearanceObserver {
    fn columns(&self) -> Vec<String> {
        (0..self.barriers.len()).map(|k| format!("clr_torus_{k}")).collect()
    }

    fn observe(&mut self, t: f64, field: &ScalarField, out: &mut Vec<f64>) {
        for b in &self.barriers {
            out.push(clearance_graph_torus(field, b, t).unwrap_or(f64::NAN));
        }
    }
}

/// Records `clr_sphere_<i>` for each sphere; NaN once it is extinct.
#[derive(Debug, Clone)]
pub struct SphereClearanceObserver {
    pub spheres: Vec<SphereBarrier>,
}

impl Observer for SphereClearanceObserver {
    fn columns(&self) -> Vec<String> {
        (0..self.spheres.len()).map(|i| format!("clr_sphere_{i}")).collect()
    }

    fn observe(&mut self, t: f64, field: &ScalarField, out: &mut Vec<f64>) {
        for s in &self.spheres {
            out.push(clearance_graph_sphere(field, s, t).unwrap_or(f64::NAN));
        }
    }
}

/// Height bound on the complement of the tori: before extinction the region
/// is `Omega_t`, afterwards every node. Keeps the full log.
#[derive(Debug, Clone)]
pub struct RegionBoundObserver {
    pub torus: TorusBarrier,
    pub bound: f64,
    pub x1_band: Option<(f64, f64)>,
    pub name: String,
    pub log: Vec<RegionCheck>,
}

impl RegionBoundObserver {
    pub fn new(torus: TorusBarrier, bound: f64) -> Self {
        Self {
            torus,
            bound,
            x1_band: None,
            name: "region_max".into(),
            log: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.log.iter().all(|c| c.pass)
    }
}

impl Observer for RegionBoundObserver {
    fn columns(&self) -> Vec<String> {
        vec![self.name.clone()]
    }

    fn observe(&mut self, t: f64, field: &ScalarField, out: &mut Vec<f64>) {
        let mut region = RegionOmega::from_torus(&self.torus, t);
        if let Some(band) = self.x1_band {
            let label = format!("{}_band", region.label);
            region = region.within(band, &label);
        }
        let check = check_region_bound(field, &region, self.bound);
        out.push(check.max);
        self.log.push(check);
    }
}
