//! Rotationally symmetric self-shrinkers.
//!
//! A hypersurface of revolution in `R^{n+1}` is described by its profile curve
//! in the half-plane `{(r, z) : r > 0}`, parametrized by arclength with tangent
//! angle `theta`. The shrinker condition `H = -X^perp / 2` reduces to
//!
//! ```text
//! r' = cos(theta),  z' = sin(theta),
//! theta' = (r sin(theta) - z cos(theta)) / 2 - (n - 1) sin(theta) / r.
//! ```
//!
//! The cylinder of radius `sqrt(2(n-1))` and the sphere of radius `sqrt(2n)`
//! are exact solutions; the embedded torus is found by shooting from the
//! inner equator and asking the curve to come back to `z = 0` perpendicularly.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

/// Default floor below which a trajectory counts as hitting the rotation axis.
pub const DEFAULT_AXIS_FLOOR: f64 = 1e-3;
/// Default arclength budget for a single shot.
pub const DEFAULT_MAX_ARCLENGTH: f64 = 50.0;
/// Arclength step for final profiles.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Shooting tolerance on the miss angle.
pub const DEFAULT_SHOOT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShrinkerError {
    #[error("axis singularity: profile ODE evaluated at r = {r}")]
    AxisSingularity { r: f64 },
    #[error("axis collision at arclength {s:.6} (r = {r:.3e})")]
    AxisCollision { s: f64, r: f64 },
    #[error("no return to z = 0 within arclength {max_arclength}")]
    NoReturn { max_arclength: f64 },
    #[error("bracket failure: miss has no sign change on [{lo}, {hi}] ({detail})")]
    BracketFailure { lo: f64, hi: f64, detail: String },
    #[error(
        "degenerate branch: every shot in [{lo}, {hi}] collapses onto the axis \
         (sphere-like profile with inner radius 0)"
    )]
    DegenerateBranch { lo: f64, hi: f64 },
    #[error("bisection stalled at r_start = {r_start} with miss {miss:.3e}")]
    Stalled { r_start: f64, miss: f64 },
    #[error("profile is not a valid torus: {0}")]
    InvalidProfile(String),
    #[error("radius {rho} outside [{inner}, {outer}]")]
    OutOfRange { rho: f64, inner: f64, outer: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

type Result<T> = std::result::Result<T, ShrinkerError>;

/// A point of the profile curve together with its tangent angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    pub r: f64,
    pub z: f64,
    pub theta: f64,
}

impl ProfileState {
    pub fn new(r: f64, z: f64, theta: f64) -> Self {
        Self { r, z, theta }
    }

    fn axpy(&self, h: f64, d: [f64; 3]) -> Self {
        Self::new(self.r + h * d[0], self.z + h * d[1], self.theta + h * d[2])
    }
}

/// Arclength derivative `(dr, dz, dtheta)` of the shrinker profile ODE in
/// ambient graph dimension `n` (the surface lives in `R^{n+1}`).
pub fn shrinker_ode_rhs(state: &ProfileState, n: usize) -> Result<[f64; 3]> {
    if !(state.r > 0.0) {
        return Err(ShrinkerError::AxisSingularity { r: state.r });
    }
    let (s, c) = state.theta.sin_cos();
    let dtheta = 0.5 * (state.r * s - state.z * c) - (n as f64 - 1.0) * s / state.r;
    Ok([c, s, dtheta])
}

fn rk4_step(state: &ProfileState, n: usize, h: f64) -> Result<ProfileState> {
    let k1 = shrinker_ode_rhs(state, n)?;
    let k2 = shrinker_ode_rhs(&state.axpy(0.5 * h, k1), n)?;
    let k3 = shrinker_ode_rhs(&state.axpy(0.5 * h, k2), n)?;
    let k4 = shrinker_ode_rhs(&state.axpy(h, k3), n)?;
    let mut d = [0.0; 3];
    for i in 0..3 {
        d[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    Ok(state.axpy(h, d))
}

/// Settings for a single shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step: f64,
    pub max_arclength: f64,
    pub axis_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: DEFAULT_STEP,
            max_arclength: DEFAULT_MAX_ARCLENGTH,
            axis_floor: DEFAULT_AXIS_FLOOR,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

/// Samples of an integrated profile with their arclength coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub s: Vec<f64>,
    pub states: Vec<ProfileState>,
}

impl Trajectory {
    pub fn last(&self) -> &ProfileState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Integrates a fixed arclength `length` with classical RK4 and no event
/// detection. Used by the cylinder and sphere oracles.
pub fn integrate_arclength(
    start: ProfileState,
    n: usize,
    step: f64,
    length: f64,
    axis_floor: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !(length >= 0.0) {
        return Err(ShrinkerError::InvalidInput(format!(
            "step {step} and length {length} must be positive"
        )));
    }
    let steps = (length / step).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { length / steps as f64 };
    let mut s = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    s.push(0.0);
    states.push(start);
    let mut cur = start;
    for k in 0..steps {
        cur = rk4_step(&cur, n, h)?;
        if cur.r <= axis_floor {
            return Err(ShrinkerError::AxisCollision {
                s: (k + 1) as f64 * h,
                r: cur.r,
            });
        }
        s.push((k + 1) as f64 * h);
        states.push(cur);
    }
    Ok(Trajectory { s, states })
}

/// Integrates from `start` until the first return to `z = 0` from above.
///
/// The crossing is bracketed by a cubic Hermite guess on `z` and then pinned
/// down with partial RK4 steps, so the final sample sits on `z = 0` to
/// round-off. Its arclength spacing to the previous sample is the partial step.
pub fn integrate_profile(
    start: ProfileState,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(start.r > 0.0) {
        return Err(ShrinkerError::AxisSingularity { r: start.r });
    }
    if !(cfg.step > 0.0) {
        return Err(ShrinkerError::InvalidInput(format!(
            "step must be positive, got {}",
            cfg.step
        )));
    }
    let h = cfg.step;
    let max_steps = (cfg.max_arclength / h).ceil() as usize;
    let mut s = vec![0.0];
    let mut states = vec![start];
    let mut cur = start;
    for k in 0..max_steps {
        let next = rk4_step(&cur, n, h)?;
        if next.r <= cfg.axis_floor {
            return Err(ShrinkerError::AxisCollision {
                s: (k + 1) as f64 * h,
                r: next.r,
            });
        }
        if cur.z > 0.0 && next.z <= 0.0 {
            let end = locate_crossing(&cur, &next, n, h)?;
            s.push(k as f64 * h + end.0);
            states.push(end.1);
            return Ok(Trajectory { s, states });
        }
        cur = next;
        s.push((k + 1) as f64 * h);
        states.push(cur);
    }
    Err(ShrinkerError::NoReturn {
        max_arclength: cfg.max_arclength,
    })
}

fn locate_crossing(
    a: &ProfileState,
    b: &ProfileState,
    n: usize,
    h: f64,
) -> Result<(f64, ProfileState)> {
    // Hermite cubic for z on [0, 1] with derivatives h*sin(theta).
    let (z0, z1) = (a.z, b.z);
    let (m0, m1) = (h * a.theta.sin(), h * b.theta.sin());
    let hermite = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * z0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * z1
            + (t3 - t2) * m1
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hermite(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Refine against the integrator itself, keeping a bracket.
    let guess = 0.5 * (lo + hi);
    let z_at = |t: f64| rk4_step(a, n, t * h).map(|st| st.z);
    let (mut lo, mut hi) = (
        (guess - 1e-3).max(0.0),
        (guess + 1e-3).min(1.0),
    );
    if z_at(lo)? <= 0.0 {
        lo = 0.0;
    }
    if z_at(hi)? > 0.0 {
        hi = 1.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if z_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    let t = hi;
    Ok((t * h, rk4_step(a, n, t * h)?))
}

/// Upper half of a closed, reflection-symmetric profile, traversed from the
/// inner equator `(inner_radius, 0)` over the top to `(outer_radius, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    /// Ambient graph dimension: the surface lives in `R^{n+1}`.
    pub n: usize,
    pub samples: Vec<ProfileState>,
    /// Arclength coordinate of each sample.
    pub arclength: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub max_height: f64,
    /// Extinction time of the surface under mean curvature flow.
    pub extinction_time: f64,
    /// Homothety factor relative to the normalized shrinker (which has
    /// extinction time 1).
    pub scale: f64,
    /// Integration step used for the normalized curve.
    pub step: f64,
    /// Shooting tolerance the curve was produced with.
    pub tol: f64,
}

impl ProfileCurve {
    fn from_trajectory(traj: Trajectory, n: usize, step: f64, tol: f64) -> Self {
        let inner_radius = traj.states[0].r;
        let outer_radius = traj.last().r;
        let max_height = refined_max_height(&traj);
        Self {
            n,
            samples: traj.states,
            arclength: traj.s,
            inner_radius,
            outer_radius,
            max_height,
            extinction_time: 1.0,
            scale: 1.0,
            step,
            tol,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Total arclength of the half profile.
    pub fn half_length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    /// Pointwise homothety by `lambda`; extinction time scales by `lambda^2`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            n: self.n,
            samples: self
                .samples
                .iter()
                .map(|p| ProfileState::new(lambda * p.r, lambda * p.z, p.theta))
                .collect(),
            arclength: self.arclength.iter().map(|s| lambda * s).collect(),
            inner_radius: lambda * self.inner_radius,
            outer_radius: lambda * self.outer_radius,
            max_height: lambda * self.max_height,
            extinction_time: lambda * lambda * self.extinction_time,
            scale: lambda * self.scale,
            step: self.step,
            tol: self.tol,
        }
    }

    /// `|theta_end + pi/2| + |z_end|`: how far the end is from a
    /// perpendicular crossing of the r-axis.
    pub fn closure_residual(&self) -> f64 {
        let end = self.samples.last().expect("non-empty profile");
        (end.theta + FRAC_PI_2).abs() + (end.z / self.scale).abs()
    }

    /// Signed curvature `dtheta/ds` at interior samples (central differences
    /// over uniformly spaced neighbours).
    pub fn curvature(&self) -> Vec<f64> {
        let m = self.samples.len();
        let mut out = Vec::with_capacity(m.saturating_sub(2));
        for k in 1..m.saturating_sub(1) {
            let ds = self.arclength[k + 1] - self.arclength[k - 1];
            out.push((self.samples[k + 1].theta - self.samples[k - 1].theta) / ds);
        }
        out
    }

    /// True if the curvature of the closed (reflected) profile keeps one sign.
    /// The reflected lower arc carries the same curvature as the upper one.
    pub fn is_convex(&self) -> bool {
        let k = self.curvature();
        let max = k.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = k.iter().cloned().fold(f64::INFINITY, f64::min);
        max <= 0.0 || min >= 0.0
    }

    /// Max over interior samples of `|theta' - f_theta|`, in normalized
    /// variables, with `theta'` from second-order central differences.
    pub fn shrinker_residual(&self) -> f64 {
        let lambda = self.scale;
        let m = self.samples.len();
        let mut worst = 0.0_f64;
        for k in 1..m.saturating_sub(1) {
            let ds_back = self.arclength[k] - self.arclength[k - 1];
            let ds_fwd = self.arclength[k + 1] - self.arclength[k];
            if (ds_back - ds_fwd).abs() > 1e-9 * ds_fwd.max(ds_back) {
                continue;
            }
            let dtheta = (self.samples[k + 1].theta - self.samples[k - 1].theta)
                / ((ds_back + ds_fwd) / lambda);
            let p = &self.samples[k];
            let normalized = ProfileState::new(p.r / lambda, p.z / lambda, p.theta);
            let f = shrinker_ode_rhs(&normalized, self.n).map(|d| d[2]).unwrap_or(f64::NAN);
            worst = worst.max((dtheta - f).abs());
        }
        worst
    }

    /// The full closed curve: upper arc followed by its mirror image below the
    /// r-axis, traversed so the loop closes at the inner equator.
    pub fn closed_samples(&self) -> Vec<ProfileState> {
        let mut out = self.samples.clone();
        for p in self.samples.iter().rev().skip(1) {
            out.push(ProfileState::new(p.r, -p.z, -PI - p.theta));
        }
        out
    }

    /// Radius at which the upper arc attains its maximum height.
    pub fn apex_radius(&self) -> f64 {
        let (k, _) = self
            .samples
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, p)| {
                if p.z > acc.1 {
                    (k, p.z)
                } else {
                    acc
                }
            });
        self.samples[k].r
    }
}

fn refined_max_height(traj: &Trajectory) -> f64 {
    let z: Vec<f64> = traj.states.iter().map(|p| p.z).collect();
    let (k, zmax) = z
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
    if k == 0 || k + 1 >= z.len() {
        return zmax;
    }
    // Parabola through three equally spaced samples.
    let (a, b, c) = (z[k - 1], z[k], z[k + 1]);
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return zmax;
    }
    b - 0.125 * (c - a) * (c - a) / denom
}

fn start_state(r_start: f64) -> ProfileState {
    ProfileState::new(r_start, 0.0, FRAC_PI_2)
}

/// Miss angle `theta_end + pi/2` of the shot launched vertically from
/// `(r_start, 0)`, wrapped into `(-pi, pi]`.
pub fn miss(r_start: f64, n: usize, cfg: &IntegratorConfig) -> Result<(f64, Trajectory)> {
    let traj = integrate_profile(start_state(r_start), n, cfg)?;
    let raw = traj.last().theta + FRAC_PI_2;
    let wrapped = raw - 2.0 * PI * ((raw + PI) / (2.0 * PI)).ceil() + 2.0 * PI;
    Ok((wrapped, traj))
}

/// Scans `[lo, hi]` with `samples` shots and returns the first adjacent pair
/// on which the miss angle changes sign.
pub fn find_bracket(
    n: usize,
    lo: f64,
    hi: f64,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let samples = samples.max(2);
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..samples {
        let r = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
        let m = match miss(r, n, cfg) {
            Ok((m, _)) => m,
            Err(_) => {
                prev = None;
                continue;
            }
        };
        if let Some((rp, mp)) = prev {
            if mp.signum() != m.signum() {
                return Ok((rp, r));
            }
        }
        prev = Some((r, m));
    }
    Err(ShrinkerError::BracketFailure {
        lo,
        hi,
        detail: format!("coarse scan with {samples} shots found no sign change"),
    })
}

/// Default coarse-scan window for the inner equator: between 0.3 and the
/// cylinder radius.
pub fn default_scan_window(n: usize) -> (f64, f64) {
    (0.3, (2.0 * (n as f64 - 1.0)).sqrt())
}

/// Shoots for the embedded torus by bisection on the miss angle.
pub fn shoot_torus(
    n: usize,
    bracket: (f64, f64),
    tol: f64,
    cfg: &IntegratorConfig,
) -> Result<ProfileCurve> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(ShrinkerError::InvalidInput(format!(
            "bracket ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    let at_lo = miss(lo, n, cfg);
    let at_hi = miss(hi, n, cfg);
    let (mut m_lo, m_hi) = match (at_lo, at_hi) {
        (Ok((a, _)), Ok((b, _))) => (a, b),
        (Err(ShrinkerError::AxisCollision { .. }), Err(ShrinkerError::AxisCollision { .. })) => {
            return Err(ShrinkerError::DegenerateBranch { lo, hi });
        }
        (Err(e), _) | (_, Err(e)) => {
            return Err(ShrinkerError::BracketFailure {
                lo,
                hi,
                detail: format!("endpoint shot failed: {e}"),
            });
        }
    };
    if m_lo.signum() == m_hi.signum() {
        return Err(ShrinkerError::BracketFailure {
            lo,
            hi,
            detail: format!("miss({lo}) = {m_lo:.3e}, miss({hi}) = {m_hi:.3e}"),
        });
    }
    let mut best: Option<(f64, f64, Trajectory)> = None;
    let mut collided = false;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match miss(mid, n, cfg) {
            Ok((m, traj)) => {
                let better = best.as_ref().map_or(true, |b| m.abs() < b.1.abs());
                if m.abs() < tol {
                    best = Some((mid, m, traj));
                    break;
                }
                if better {
                    best = Some((mid, m, traj));
                }
                if m.signum() == m_lo.signum() {
                    lo = mid;
                    m_lo = m;
                } else {
                    hi = mid;
                }
            }
            // An axis collision terminates the branch toward larger r_start.
            Err(ShrinkerError::AxisCollision { .. }) => {
                collided = true;
                lo = mid;
            }
            Err(e) => return Err(e),
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let (r_start, m, traj) = best.ok_or(ShrinkerError::Stalled {
        r_start: 0.5 * (lo + hi),
        miss: f64::NAN,
    })?;
    if m.abs() >= tol {
        if collided {
            return Err(ShrinkerError::DegenerateBranch {
                lo: bracket.0,
                hi: bracket.1,
            });
        }
        return Err(ShrinkerError::Stalled { r_start, miss: m });
    }
    let curve = ProfileCurve::from_trajectory(traj, n, cfg.step, tol);
    validate_torus(&curve)?;
    Ok(curve)
}

fn validate_torus(curve: &ProfileCurve) -> Result<()> {
    if !(curve.inner_radius > 0.0) {
        return Err(ShrinkerError::InvalidProfile(format!(
            "inner radius {} is not positive",
            curve.inner_radius
        )));
    }
    if !(curve.inner_radius < curve.outer_radius) {
        return Err(ShrinkerError::InvalidProfile(format!(
            "inner radius {} not below outer radius {}",
            curve.inner_radius, curve.outer_radius
        )));
    }
    if !(curve.max_height > 0.0) {
        return Err(ShrinkerError::InvalidProfile("non-positive height".into()));
    }
    let closest = curve.samples.iter().map(|p| p.r).fold(f64::INFINITY, f64::min);
    if closest < curve.inner_radius {
        return Err(ShrinkerError::InvalidProfile(format!(
            "profile swings to r = {closest} inside its inner radius"
        )));
    }
    if !curve.is_convex() {
        return Err(ShrinkerError::InvalidProfile("curvature changes sign".into()));
    }
    Ok(())
}

/// Coarse scan over the default window followed by bisection.
pub fn angenent_torus(n: usize, tol: f64, step: f64) -> Result<ProfileCurve> {
    let cfg = IntegratorConfig::with_step(step);
    let coarse = IntegratorConfig::with_step(step.max(1e-3));
    let (lo, hi) = default_scan_window(n);
    let bracket = find_bracket(n, lo, hi, 24, &coarse)?;
    shoot_torus(n, bracket, tol, &cfg)
}

/// Rescales so that `outer_radius <= target_outer` and
/// `max_height <= target_height_cap`, with equality in the binding one.
pub fn scale_torus(
    profile: &ProfileCurve,
    target_outer: f64,
    target_height_cap: f64,
) -> Result<ProfileCurve> {
    if !(target_outer > 0.0 && target_height_cap > 0.0) {
        return Err(ShrinkerError::InvalidInput(format!(
            "scale targets must be positive, got ({target_outer}, {target_height_cap})"
        )));
    }
    let lambda = (target_outer / profile.outer_radius).min(target_height_cap / profile.max_height);
    if lambda == 1.0 {
        return Ok(profile.clone());
    }
    Ok(profile.scaled(lambda))
}

/// Lower and upper heights of the closed profile above radius `rho`.
///
/// `r` is non-decreasing along the upper arc, so the crossing is found on one
/// segment and resolved with cubic Hermite interpolation in arclength.
pub fn torus_cross_section(profile: &ProfileCurve, rho: f64) -> Result<(f64, f64)> {
    let (inner, outer) = (profile.inner_radius, profile.outer_radius);
    let slack = 1e-12 * outer;
    if !(rho >= inner - slack && rho <= outer + slack) {
        return Err(ShrinkerError::OutOfRange { rho, inner, outer });
    }
    let rho = rho.clamp(inner, outer);
    let pts = &profile.samples;
    // first index whose r is >= rho
    let k = pts.partition_point(|p| p.r < rho);
    if k == 0 {
        let z = pts[0].z;
        return Ok((-z, z));
    }
    if k >= pts.len() {
        let z = pts[pts.len() - 1].z;
        return Ok((-z, z));
    }
    let (a, b) = (&pts[k - 1], &pts[k]);
    let h = profile.arclength[k] - profile.arclength[k - 1];
    let r_of = |t: f64| hermite(t, a.r, b.r, h * a.theta.cos(), h * b.theta.cos());
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if r_of(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let z = hermite(t, a.z, b.z, h * a.theta.sin(), h * b.theta.sin()).max(0.0);
    Ok((-z, z))
}

fn hermite(t: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * m1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn cylinder_is_a_fixed_line() {
        let d = shrinker_ode_rhs(&ProfileState::new(SQRT_2, 0.7, FRAC_PI_2), 2).unwrap();
        assert!(d[2].abs() < 1e-15);
    }

    #[test]
    fn sphere_curvature_is_one_over_radius() {
        let d = shrinker_ode_rhs(&ProfileState::new(2.0, 0.0, FRAC_PI_2), 2).unwrap();
        assert!((d[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn direct_formula_evaluation() {
        let d = shrinker_ode_rhs(&ProfileState::new(1.0, 1.0, 0.0), 2).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15);
        assert!(d[1].abs() < 1e-15);
        assert!((d[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn axis_is_a_domain_error() {
        let err = shrinker_ode_rhs(&ProfileState::new(0.0, 0.0, 0.0), 2).unwrap_err();
        assert!(matches!(err, ShrinkerError::AxisSingularity { .. }));
        let err = integrate_profile(ProfileState::new(-1.0, 0.0, 0.0), 2, &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, ShrinkerError::AxisSingularity { .. }));
    }

    #[test]
    fn cylinder_never_returns() {
        let cfg = IntegratorConfig {
            step: 1e-3,
            max_arclength: 5.0,
            axis_floor: DEFAULT_AXIS_FLOOR,
        };
        let err = integrate_profile(ProfileState::new(SQRT_2, 0.0, FRAC_PI_2), 2, &cfg).unwrap_err();
        assert_eq!(err, ShrinkerError::NoReturn { max_arclength: 5.0 });
    }

    #[test]
    fn sphere_shot_runs_into_the_axis() {
        let err = integrate_profile(
            ProfileState::new(2.0, 0.0, FRAC_PI_2),
            2,
            &IntegratorConfig::with_step(1e-3),
        )
        .unwrap_err();
        assert!(matches!(err, ShrinkerError::AxisCollision { .. }));
    }

    #[test]
    fn bending_arc_converges_at_fourth_order() {
        // Return point of the shot from r = 1 at steps h, h/2, h/4.
        let end = |h: f64| {
            let t = integrate_profile(
                ProfileState::new(1.0, 0.0, FRAC_PI_2),
                2,
                &IntegratorConfig::with_step(h),
            )
            .unwrap();
            *t.last()
        };
        let (a, b, c) = (end(0.04), end(0.02), end(0.01));
        let ratio = (a.theta - b.theta).abs() / (b.theta - c.theta).abs();
        assert!((12.0..20.0).contains(&ratio), "Richardson ratio {ratio}");
        assert!(c.z.abs() < 1e-12);
    }

    #[test]
    fn constant_sign_bracket_fails() {
        let cfg = IntegratorConfig::with_step(1e-3);
        let err = shoot_torus(2, (0.6, 0.9), 1e-10, &cfg).unwrap_err();
        assert!(matches!(err, ShrinkerError::BracketFailure { .. }), "{err}");
    }

    #[test]
    fn sphere_bracket_is_degenerate() {
        let cfg = IntegratorConfig::with_step(1e-3);
        let err = shoot_torus(2, (1.9, 2.1), 1e-10, &cfg).unwrap_err();
        assert!(matches!(err, ShrinkerError::DegenerateBranch { .. }), "{err}");
    }

    #[test]
    fn identity_and_inverse_scaling() {
        let torus = angenent_torus(2, 1e-9, 1e-3).unwrap();
        let same = scale_torus(&torus, torus.outer_radius, torus.max_height).unwrap();
        assert_eq!(same, torus);
        let lambda = 0.37;
        let back = torus.scaled(lambda).scaled(1.0 / lambda);
        for (p, q) in torus.samples.iter().zip(&back.samples) {
            assert!((p.r - q.r).abs() < 1e-14 && (p.z - q.z).abs() < 1e-14);
        }
        assert!((back.extinction_time - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cross_section_endpoints() {
        let torus = angenent_torus(2, 1e-9, 1e-3).unwrap();
        let (lo, hi) = torus_cross_section(&torus, torus.inner_radius).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);
        // z grows like the square root of the distance to the outer radius
        let (lo, hi) = torus_cross_section(&torus, torus.outer_radius).unwrap();
        assert!(lo.abs() < 1e-6 && hi.abs() < 1e-6);
        let (_, top) = torus_cross_section(&torus, torus.apex_radius()).unwrap();
        assert!((top - torus.max_height).abs() < 1e-6);
        assert!(torus_cross_section(&torus, 0.5 * torus.inner_radius).is_err());
        assert!(torus_cross_section(&torus, 1.01 * torus.outer_radius).is_err());
    }
}
