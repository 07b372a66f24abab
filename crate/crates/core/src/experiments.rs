//! End-to-end pipelines: solver validation against exact solutions, the
//! periodic spiked experiment, the slab oscillation experiment and a generic
//! single-flow run.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::analysis::{
    ball_average, detect_oscillation, estimate_limit_constant, sandwich_bounds, AnalysisError,
    Extension, LimitEstimate, OscillationReport, Record, TimeSeries,
};
use crate::barriers::{
    check_region_bound, BarrierError, RegionBoundObserver, RegionCheck, RegionOmega,
    SphereBarrier, SphereClearanceObserver, TorusBarrier, TorusClearanceObserver,
};
use crate::config::{Config, ConfigError};
use crate::grid::{GridError, PeriodicGrid, ScalarField};
use crate::initial::{
    build_phi0, build_phi0_plus, build_psi0, build_spiked_u0, build_w0, smooth_plateau_bump,
    BuildError, SlabLayout, SpikeParams, SpikePlacement,
};
use crate::io::{read_snapshot, IoError};
use crate::shrinker::{angenent_torus, scale_torus, ProfileCurve, ShrinkerError};
use crate::solver::{
    run, stable_dt, FlowKind, FlowParams, Observer, ProbeObserver, SolverError, Stepper,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Shrinker(#[from] ShrinkerError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
}

type Result<T> = std::result::Result<T, ExperimentError>;

/// One named assertion and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

pub fn summary_text(title: &str, checks: &[Check], extra: &[String]) -> String {
    let mut s = format!("{title}\n");
    for line in extra {
        s.push_str(line);
        s.push('\n');
    }
    for c in checks {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    s.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    s
}

/// The normalized torus for `n = 2` at the default shooting settings.
pub fn reference_torus(step: f64, tol: f64) -> Result<ProfileCurve> {
    Ok(angenent_torus(2, tol, step)?)
}

// ---------------------------------------------------------------------------
// validation

/// Result of one exact-solution comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRun {
    /// Measured quantity (translation speed, or amplitude ratio to exact).
    pub measured: f64,
    /// Max-norm error against the exact solution at the final time.
    pub error: f64,
}

/// Grim reaper `u = t - log cos x` on a periodic cell with spacing
/// `pi / per_pi`. Nodes with `|x| > 1.2` are reset to the exact solution
/// after every step; the speed is averaged over `|x| <= 1`.
pub fn grim_reaper_run(per_pi: usize, t_end: f64, cfl: f64) -> Result<ExactRun> {
    let h = PI / per_pi as f64;
    let count = 2 * ((0.47 * per_pi as f64).floor() as usize);
    let grid = PeriodicGrid::line(count as f64 * h, count)?;
    let exact = |x: f64, t: f64| t - x.cos().ln();
    let mut u = ScalarField::from_fn(&grid, |x, _| exact(x, 0.0));
    let u0 = u.clone();
    let xs: Vec<f64> = (0..count).map(|i| grid.coord(0, i)).collect();
    let mut params = FlowParams::new(FlowKind::Mcf, t_end);
    params.cfl_safety = cfl;
    let dt = stable_dt(&u, &params);
    let mut stepper = Stepper::new(FlowKind::Mcf);
    let mut t = 0.0;
    let mut k = 0u64;
    while t < t_end * (1.0 - 1e-14) {
        let next = ((k + 1) as f64 * dt).min(t_end);
        stepper
            .step(&mut u, next - t)
            .map_err(|_| SolverError::NonFinite { last_good_t: t })?;
        t = next;
        k += 1;
        for (v, &x) in u.values.iter_mut().zip(&xs) {
            if x.abs() > 1.2 {
                *v = exact(x, t);
            }
        }
    }
    let mut speed = 0.0;
    let mut n = 0;
    let mut error = 0.0_f64;
    for i in 0..count {
        let x = xs[i];
        if x.abs() <= 1.0 {
            speed += (u.values[i] - u0.values[i]) / t_end;
            n += 1;
        }
        if x.abs() <= 1.2 {
            error = error.max((u.values[i] - exact(x, t_end)).abs());
        }
    }
    Ok(ExactRun {
        measured: speed / n as f64,
        error,
    })
}

/// Heat equation on `sin(2 pi x)` over one period with `count` nodes.
pub fn heat_mode_run(count: usize, t_end: f64) -> Result<ExactRun> {
    let grid = PeriodicGrid::line(1.0, count)?;
    let mode = |x: f64| (2.0 * PI * x).sin();
    let u = ScalarField::from_fn(&grid, |x, _| mode(x));
    let mut params = FlowParams::new(FlowKind::Heat, t_end);
    params.record_every = t_end;
    let (out, _) = run(u, &params, &mut [])?;
    let decay = (-4.0 * PI * PI * t_end).exp();
    let mut amp = 0.0;
    let mut error = 0.0_f64;
    for (i, v) in out.values.iter().enumerate() {
        let x = grid.coord(0, i);
        amp += 2.0 * v * mode(x) / count as f64;
        error = error.max((v - decay * mode(x)).abs());
    }
    Ok(ExactRun {
        measured: amp / decay,
        error,
    })
}

/// Smooth bump below a shrinking sphere; returns the smallest recorded
/// clearance over the sphere's lifetime.
pub fn sphere_comparison_run(count: usize) -> Result<f64> {
    let grid = PeriodicGrid::unit_square(count)?;
    let u = ScalarField::from_fn(&grid, |x, y| 0.3 * smooth_plateau_bump(x.hypot(y) / 0.3));
    let sphere = SphereBarrier::new([0.0, 0.0], 0.3 + 0.2 + 0.02, 0.2, 2)?;
    let t_end = 0.95 * sphere.extinction_time();
    let mut obs = SphereClearanceObserver {
        spheres: vec![sphere],
    };
    let mut params = FlowParams::new(FlowKind::Mcf, t_end);
    params.record_every = t_end / 50.0;
    let (_, series) = run(u, &params, &mut [&mut obs])?;
    let clr = series.column("clr_sphere_0")?;
    Ok(clr.into_iter().fold(f64::INFINITY, f64::min))
}

/// Exact-solution table: grim reaper speed, heat decay, refinement orders
/// and the sphere comparison.
pub fn run_validation() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let gr = grim_reaper_run(512, 0.1, 0.5)?;
    checks.push(Check::new(
        "grim reaper speed",
        (gr.measured - 1.0).abs() < 0.01,
        format!("speed {:.6} at h = pi/512 over t = 0.1 (error {:.3e})", gr.measured, gr.error),
    ));
    let gr_coarse = grim_reaper_run(256, 0.1, 0.5)?;
    let ratio = gr_coarse.error / gr.error;
    checks.push(Check::new(
        "grim reaper order",
        (3.5..=4.5).contains(&ratio),
        format!("error ratio {ratio:.3} ({:.3e} -> {:.3e})", gr_coarse.error, gr.error),
    ));
    let heat = heat_mode_run(256, 0.05)?;
    checks.push(Check::new(
        "heat mode decay",
        (heat.measured - 1.0).abs() < 0.01,
        format!("amplitude / exact = {:.6} at h = 1/256, t = 0.05", heat.measured),
    ));
    let heat_coarse = heat_mode_run(128, 0.05)?;
    let ratio = heat_coarse.error / heat.error;
    checks.push(Check::new(
        "heat mode order",
        (3.5..=4.5).contains(&ratio),
        format!("error ratio {ratio:.3} ({:.3e} -> {:.3e})", heat_coarse.error, heat.error),
    ));
    let clr = sphere_comparison_run(128)?;
    checks.push(Check::new(
        "sphere comparison",
        clr > 0.0,
        format!("min clearance {clr:.4e} below a shrinking sphere"),
    ));
    Ok(checks)
}

// ---------------------------------------------------------------------------
// configuration helpers

macro_rules! config_struct {
    ($name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }

        impl $name {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            /// Defaults overridden by any keys present in `cfg`.
            pub fn from_config(cfg: &Config) -> std::result::Result<Self, ConfigError> {
                let mut known: Vec<&str> = Self::KEYS.to_vec();
                known.extend_from_slice(&["experiment", "out_dir", "preset"]);
                cfg.check_keys(&known)?;
                let d = Self::default();
                Ok(Self { $($field: cfg.get_or(stringify!($field), d.$field)?,)* })
            }

            pub fn to_config(&self) -> Config {
                let mut c = Config::default();
                $(c.set(stringify!($field), &self.$field);)*
                c
            }
        }
    };
}

config_struct!(Theorem1Config {
    grid_n: usize = 512,
    eps: f64 = 0.1,
    scale_outer: f64 = 0.45,
    t_end: f64 = 0.3,
    cfl: f64 = 0.5,
    records_to_t_star: usize = 60,
    record_every: f64 = 0.005,
    tail_fraction: f64 = 0.2,
    margin_h: f64 = 2.0,
    c0_tol: f64 = 1e-3,
    band_tol: f64 = 1e-3,
    mean_tol: f64 = 1e-9,
    heat_tail_tol: f64 = 0.01,
    shoot_step: f64 = 1e-4,
    shoot_tol: f64 = 1e-10,
});

config_struct!(Theorem2Config {
    m_max: usize = 3,
    eps: f64 = 0.1,
    torus_outer: f64 = 0.15,
    x1_half: f64 = 26.0,
    fine_per_unit: usize = 350,
    coarse_ratio: usize = 7,
    strip_nodes: usize = 8,
    t_end: f64 = 8.0,
    cfl: f64 = 0.5,
    record_every: f64 = 0.02,
    phase1_records: usize = 20,
    tol_scale: f64 = 1.0,
    margin_h: f64 = 2.0,
    order_slack: f64 = 1e-8,
    dip: f64 = 0.2,
    rise: f64 = 0.9,
    heat_band: f64 = 0.2,
    dead_band: f64 = 0.01,
    ball_radii: String = "2,4,8".to_string(),
    ball_centres: String = "15,-15,4".to_string(),
    shoot_step: f64 = 1e-4,
    shoot_tol: f64 = 1e-10,
});

impl Theorem2Config {
    /// `default` (coarse spacing 0.02) or `coarse` (coarse spacing 0.05,
    /// doubled tolerances).
    pub fn preset(name: &str) -> std::result::Result<Self, ConfigError> {
        match name {
            "default" => Ok(Self::default()),
            "coarse" => Ok(Self {
                fine_per_unit: 340,
                coarse_ratio: 17,
                tol_scale: 2.0,
                ..Self::default()
            }),
            other => Err(ConfigError::Invalid(format!("unknown preset `{other}`"))),
        }
    }

    pub fn coarse_spacing(&self) -> f64 {
        self.coarse_ratio as f64 / self.fine_per_unit as f64
    }
}

fn parse_list(key: &str, s: &str) -> std::result::Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| ConfigError::Value {
                key: key.to_string(),
                value: s.to_string(),
            })
        })
        .collect()
}

fn min_finite(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// periodic spiked experiment

#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub torus: ProfileCurve,
    pub spike: SpikeParams,
    pub spacing: f64,
    pub bound: f64,
    pub mcf: TimeSeries,
    pub heat: TimeSeries,
    pub region_log: Vec<RegionCheck>,
    pub c0: std::result::Result<LimitEstimate, AnalysisError>,
    pub heat_limit: std::result::Result<LimitEstimate, AnalysisError>,
    pub heat_mean_drift: f64,
    pub snapshots: Vec<(f64, ScalarField)>,
    pub checks: Vec<Check>,
}

impl Theorem1Report {
    pub fn check(&self, prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }

    pub fn summary(&self) -> String {
        let t = &self.torus;
        let extra = vec![
            format!(
                "torus: ell0={} r0={} delta0={} t_star={}",
                t.inner_radius, t.outer_radius, t.max_height, t.extinction_time
            ),
            format!("spike: h0={} spacing={} bound={}", self.spike.h0, self.spacing, self.bound),
        ];
        summary_text("theorem1", &self.checks, &extra)
    }
}

fn tail_records(series: &TimeSeries, fraction: f64) -> Vec<&Record> {
    let recs = &series.records;
    let (t0, t1) = (recs[0].t, recs[recs.len() - 1].t);
    let cut = t1 - fraction * (t1 - t0);
    recs.iter().filter(|r| r.t >= cut).collect()
}

pub fn run_theorem1(cfg: &Theorem1Config, base: &ProfileCurve) -> Result<Theorem1Report> {
    let torus = scale_torus(base, cfg.scale_outer, cfg.eps)?;
    let grid = PeriodicGrid::unit_square(cfg.grid_n)?;
    let (u0, spike) = build_spiked_u0(&grid, &torus)?;
    let barrier = TorusBarrier::at_lattice_point(&torus, [0.0, 0.0]);
    let t_star = barrier.t_star;
    let delta0 = torus.max_height;
    let spacing = grid.min_spacing();
    let bound = delta0 + cfg.margin_h * spacing;

    let mut clearance = TorusClearanceObserver {
        barriers: vec![barrier.clone()],
    };
    let mut region = RegionBoundObserver::new(barrier.clone(), bound);
    let mut probe = ProbeObserver::new(vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
    let mut snapshots = vec![(0.0, u0.clone())];

    let segment = |flow: FlowKind, t0: f64, t1: f64, every: f64| FlowParams {
        flow_kind: flow,
        t_start: t0,
        t_end: t1,
        cfl_safety: cfg.cfl,
        record_every: every,
        dt_cap: None,
    };
    let early = t_star / cfg.records_to_t_star as f64;
    let (u1, mut mcf) = {
        let mut obs: [&mut dyn Observer; 3] = [&mut clearance, &mut region, &mut probe];
        run(u0.clone(), &segment(FlowKind::Mcf, 0.0, t_star, early), &mut obs)?
    };
    snapshots.push((t_star, u1.clone()));
    let (u2, late) = {
        let mut obs: [&mut dyn Observer; 3] = [&mut clearance, &mut region, &mut probe];
        run(u1, &segment(FlowKind::Mcf, t_star, cfg.t_end, cfg.record_every), &mut obs)?
    };
    mcf.extend_from(&late);
    snapshots.push((cfg.t_end, u2));

    let mut heat_probe = ProbeObserver::new(vec![vec![0.0, 0.0], vec![0.5, 0.5]]);
    let (v_end, heat) = {
        let mut obs: [&mut dyn Observer; 1] = [&mut heat_probe];
        run(u0, &segment(FlowKind::Heat, 0.0, cfg.t_end, cfg.record_every), &mut obs)?
    };
    snapshots.push((cfg.t_end, v_end));

    let c0 = estimate_limit_constant(&mcf, cfg.tail_fraction);
    let heat_limit = estimate_limit_constant(&heat, cfg.tail_fraction);
    let mean0 = heat.records[0].mean;
    let heat_mean_drift = heat
        .records
        .iter()
        .map(|r| (r.mean - mean0).abs())
        .fold(0.0, f64::max);

    let mut checks = Vec::new();
    let before: Vec<&Record> = mcf.records.iter().filter(|r| r.t < t_star).collect();
    let clr_min = min_finite(before.iter().map(|r| r.extras[0]));
    let clr_ok = before.iter().all(|r| r.extras[0] > 0.0);
    checks.push(Check::new(
        "4(a) torus clearance",
        clr_ok,
        format!("min clearance {clr_min:.4e} over {} records with t < t_star", before.len()),
    ));
    let worst = region.log.iter().map(|c| c.max - c.bound).fold(f64::NEG_INFINITY, f64::max);
    let failed: Vec<String> = region.log.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
    checks.push(Check::new(
        "4(b) region bound",
        failed.is_empty(),
        format!(
            "{} checks against delta0 + {}h = {bound:.6}; worst max - bound = {worst:.4e}{}",
            region.log.len(),
            cfg.margin_h,
            failed.first().map(|s| format!("; first failure {s}")).unwrap_or_default()
        ),
    ));
    checks.push(match &c0 {
        Ok(e) => Check::new(
            "4(c) mcf limit",
            e.value <= delta0 + cfg.c0_tol && e.band < cfg.band_tol,
            format!("c0 = {:.6e} (delta0 = {delta0:.6}), band {:.3e}", e.value, e.band),
        ),
        Err(e) => Check::new("4(c) mcf limit", false, e.to_string()),
    });
    let tail = tail_records(&heat, cfg.tail_fraction);
    let tail_dev = tail
        .iter()
        .map(|r| (r.sup - 1.0).abs().max((r.inf - 1.0).abs()))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "4(d) heat limit",
        heat_mean_drift <= cfg.mean_tol && tail_dev <= cfg.heat_tail_tol,
        format!("mean drift {heat_mean_drift:.3e}, tail max |v - 1| = {tail_dev:.3e}"),
    ));
    let sep = match (&c0, &heat_limit) {
        (Ok(a), Ok(b)) => b.value - a.value,
        _ => f64::NAN,
    };
    let need = 1.0 - delta0 - 0.011;
    checks.push(Check::new(
        "4 separation",
        sep >= need && sep >= 0.88,
        format!("heat limit - mcf limit = {sep:.6} (need {need:.4})"),
    ));

    Ok(Theorem1Report {
        torus,
        spike,
        spacing,
        bound,
        mcf,
        heat,
        region_log: region.log,
        c0,
        heat_limit,
        heat_mean_drift,
        snapshots,
        checks,
    })
}

// ---------------------------------------------------------------------------
// slab oscillation experiment

#[derive(Debug, Clone)]
pub struct Theorem2Report {
    pub torus: ProfileCurve,
    pub rho0: f64,
    pub layout: SlabLayout,
    pub placement: SpikePlacement,
    pub fine_spacing: f64,
    pub coarse_spacing: f64,
    pub spheres: Vec<SphereBarrier>,
    /// Fine-grid MCF records up to the barrier time.
    pub phase1: TimeSeries,
    /// Coarse-grid MCF records from the barrier time on, with the companion
    /// gaps.
    pub phase2: TimeSeries,
    pub heat: TimeSeries,
    pub region_log: Vec<RegionCheck>,
    pub odd_max: RegionCheck,
    pub even_max: RegionCheck,
    pub oscillation: OscillationReport,
    pub probe_t: Vec<f64>,
    pub probe: Vec<f64>,
    pub heat_probe: Vec<f64>,
    /// `(t, centre x1, r, average, lower, upper)`.
    pub ball_averages: Vec<(f64, f64, f64, f64, f64, f64)>,
    pub snapshots: Vec<(String, f64, ScalarField)>,
    pub checks: Vec<Check>,
}

impl Theorem2Report {
    pub fn check(&self, prefix: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name.starts_with(prefix))
    }

    pub fn summary(&self) -> String {
        let t = &self.torus;
        let extra = vec![
            format!(
                "torus: ell0={} r0={} delta0={} t_star={} rho0={}",
                t.inner_radius, t.outer_radius, t.max_height, t.extinction_time, self.rho0
            ),
            format!(
                "spikes: {} placed, {} skipped, h0={}",
                self.placement.centres.len(),
                self.placement.skipped.len(),
                self.placement.params.h0
            ),
            format!("spacing: fine={} coarse={}", self.fine_spacing, self.coarse_spacing),
            format!(
                "probe w(0,t): min {:.6} max {:.6} final {:.6}",
                self.probe.iter().cloned().fold(f64::INFINITY, f64::min),
                self.probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                self.probe.last().copied().unwrap_or(f64::NAN)
            ),
            format!(
                "probe v(0,t): min {:.6} max {:.6} final {:.6}",
                self.heat_probe.iter().cloned().fold(f64::INFINITY, f64::min),
                self.heat_probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                self.heat_probe.last().copied().unwrap_or(f64::NAN)
            ),
        ];
        summary_text("theorem2", &self.checks, &extra)
    }
}

/// Minimum over all nodes of `w - c` (`sign = 1`) or `c - w` (`sign = -1`)
/// for a companion `c` on a strip with the same first axis.
fn strip_gap(w: &ScalarField, strip: &ScalarField, sign: f64) -> f64 {
    let n1 = w.grid().counts()[1];
    let s1 = strip.grid().counts()[1];
    let mut gap = f64::INFINITY;
    for (row, chunk) in w.values.chunks(n1).enumerate() {
        let c = strip.values[row * s1];
        for &v in chunk {
            gap = gap.min(sign * (v - c));
        }
    }
    gap
}

fn strip_grid(full: &PeriodicGrid, nodes: usize) -> Result<PeriodicGrid> {
    let h1 = full.spacing(1);
    Ok(PeriodicGrid::plane(
        [full.extents()[0], nodes as f64 * h1],
        [full.counts()[0], nodes],
    )?)
}

fn band_max(field: &ScalarField, bands: &[(f64, f64)], t: f64, bound: f64, label: &str) -> RegionCheck {
    let mut best: Option<RegionCheck> = None;
    for &b in bands {
        let c = check_region_bound(field, &RegionOmega::whole(t).within(b, label), bound);
        if best.as_ref().map_or(true, |x| c.max > x.max) {
            best = Some(c);
        }
    }
    best.unwrap_or_else(|| check_region_bound(field, &RegionOmega::whole(t).within((1.0, 0.0), label), bound))
}

pub fn run_theorem2(cfg: &Theorem2Config, base: &ProfileCurve) -> Result<Theorem2Report> {
    let scale = cfg.tol_scale;
    let torus = scale_torus(base, cfg.torus_outer, cfg.eps)?;
    let t_star = torus.extinction_time;
    let delta0 = torus.max_height;
    // a sphere of radius rho0 in R^3 dies at rho0^2 / 4
    let rho0 = 2.0 * t_star.sqrt();
    let layout = SlabLayout::new(torus.inner_radius, cfg.m_max, 0.0, 1.0)?;
    let n = cfg.fine_per_unit;
    let cells = (2.0 * cfg.x1_half).round() as usize;
    let fine = PeriodicGrid::plane([2.0 * cfg.x1_half, 1.0], [cells * n, n])?;
    let fine_spacing = fine.min_spacing();
    let (w0, placement) = build_w0(&fine, &layout, &torus)?;
    let odd = layout.odd_slabs();
    let even = layout.even_slabs();

    let mut spheres = Vec::new();
    for &(lo, hi) in &odd {
        for x in [-hi, -lo, lo, hi] {
            spheres.push(SphereBarrier::resting_on([x, 0.0], 0.0, rho0)?.paired_with(&torus)?);
        }
    }
    for &(lo, hi) in &even {
        let m = 0.5 * (lo + hi);
        for x in [-m, m] {
            spheres.push(SphereBarrier::resting_on([x, 0.0], 1.0, rho0)?.paired_with(&torus)?);
        }
    }

    let centres = parse_list("ball_centres", &cfg.ball_centres)?;
    let radii = parse_list("ball_radii", &cfg.ball_radii)?;
    let ext = [Extension::Window, Extension::Periodic];
    let mut ball_averages = Vec::new();
    let mut balls = |field: &ScalarField, t: f64| -> Result<()> {
        for &c in &centres {
            for &r in &radii {
                let avg = ball_average(field, &[c, 0.0], r, &ext)?;
                let (lo, hi) = sandwich_bounds(r, 2);
                ball_averages.push((t, c, r, avg, lo, hi));
            }
        }
        Ok(())
    };
    balls(&w0, 0.0)?;

    // phase 1: fine grid up to the barrier time
    let barrier = TorusBarrier::at_lattice_point(&torus, [0.0, 0.0]);
    let bound = delta0 + cfg.margin_h * scale * fine_spacing;
    let mut sphere_obs = SphereClearanceObserver {
        spheres: spheres.clone(),
    };
    let mut region_obs: Vec<RegionBoundObserver> = odd
        .iter()
        .enumerate()
        .map(|(k, &band)| {
            let mut o = RegionBoundObserver::new(barrier.clone(), bound);
            o.x1_band = Some(band);
            o.name = format!("region_max_{k}");
            o
        })
        .collect();
    let mut probe = ProbeObserver::new(vec![vec![0.0, 0.0]]);
    let p1 = FlowParams {
        flow_kind: FlowKind::Mcf,
        t_start: 0.0,
        t_end: t_star,
        cfl_safety: cfg.cfl,
        record_every: t_star / cfg.phase1_records as f64,
        dt_cap: None,
    };
    let (w1, phase1) = {
        let mut obs: Vec<&mut dyn Observer> = vec![&mut sphere_obs];
        for o in region_obs.iter_mut() {
            obs.push(o);
        }
        obs.push(&mut probe);
        run(w0.clone(), &p1, &mut obs)?
    };
    let region_log: Vec<RegionCheck> = region_obs.into_iter().flat_map(|o| o.log).collect();

    let odd_bound = rho0.max(delta0) + cfg.margin_h * scale * fine_spacing;
    let even_bound = 1.0 + rho0 + cfg.margin_h * scale * fine_spacing;
    let odd_max = band_max(&w1, &odd, t_star, odd_bound, "odd_slabs");
    let even_max = band_max(&w1, &even, t_star, even_bound, "even_slabs");

    let strip_fine = strip_grid(&fine, cfg.coarse_ratio * cfg.strip_nodes)?;
    let psi0 = build_psi0(&strip_fine, &layout);
    let mut p1_quiet = p1.clone();
    p1_quiet.record_every = t_star;
    let (psi1, _) = run(psi0, &p1_quiet, &mut [])?;

    // restrict onto the coarse grid
    let ratio = cfg.coarse_ratio;
    let mut w = w1.restrict(ratio)?;
    let mut psi = psi1.restrict(ratio)?;
    drop(w1);
    let coarse_spacing = w.grid().min_spacing();
    let phi_plus = build_phi0_plus(cfg.eps, rho0, &layout)?;
    let mut phi = ScalarField::from_fn(psi.grid(), |x, _| phi_plus.eval(x));
    let mut snapshots = vec![("mcf".to_string(), t_star, w.clone())];

    // phase 2: w and both companions in lockstep
    let mut p2 = FlowParams::new(FlowKind::Mcf, cfg.t_end);
    p2.t_start = t_star;
    p2.cfl_safety = cfg.cfl;
    p2.record_every = cfg.record_every;
    p2.validate()?;
    let dt = stable_dt(&w, &p2);
    let origin = w.grid().nearest_node(&[0.0, 0.0])?;
    let mut phase2 = TimeSeries::new(vec!["probe0".into(), "psi_gap".into(), "phi_gap".into()]);
    let record = |t: f64, w: &ScalarField, psi: &ScalarField, phi: &ScalarField, s: &mut TimeSeries| {
        s.push(Record {
            t,
            sup: w.sup(),
            inf: w.inf(),
            mean: w.mean(),
            extras: vec![w.values[origin], strip_gap(w, psi, 1.0), strip_gap(w, phi, -1.0)],
        });
    };
    record(t_star, &w, &psi, &phi, &mut phase2);
    let (mut sw, mut sp, mut sf) = (
        Stepper::new(FlowKind::Mcf),
        Stepper::new(FlowKind::Mcf),
        Stepper::new(FlowKind::Mcf),
    );
    let mut t = t_star;
    let mut k = 0u64;
    let mut next = t_star + cfg.record_every;
    let eps_t = 1e-12 * cfg.t_end;
    while t < cfg.t_end - eps_t {
        let t_next = (t_star + (k + 1) as f64 * dt).min(cfg.t_end);
        let h = t_next - t;
        for (s, f) in [(&mut sw, &mut w), (&mut sp, &mut psi), (&mut sf, &mut phi)] {
            s.step(f, h)
                .map_err(|_| SolverError::NonFinite { last_good_t: t })?;
        }
        t = t_next;
        k += 1;
        if t >= next - eps_t || t >= cfg.t_end - eps_t {
            record(t, &w, &psi, &phi, &mut phase2);
            while next <= t + eps_t {
                next += cfg.record_every;
            }
        }
    }
    snapshots.push(("mcf".to_string(), cfg.t_end, w.clone()));

    // heat on the same data and grids
    let mut hp1 = ProbeObserver::new(vec![vec![0.0, 0.0]]);
    let mut ph1 = p1.clone();
    ph1.flow_kind = FlowKind::Heat;
    let (v1, mut heat) = run(w0, &ph1, &mut [&mut hp1])?;
    balls(&v1, t_star)?;
    let v1c = v1.restrict(ratio)?;
    drop(v1);
    let mut ph2 = p2.clone();
    ph2.flow_kind = FlowKind::Heat;
    let mut hp2 = ProbeObserver::new(vec![vec![0.0, 0.0]]);
    let (v2, heat2) = run(v1c, &ph2, &mut [&mut hp2])?;
    heat.extend_from(&heat2);
    balls(&v2, cfg.t_end)?;
    snapshots.push(("heat".to_string(), cfg.t_end, v2));

    // probe series over the whole window
    let mut probe_t = phase1.times();
    let mut probe_v = phase1.column("probe0")?;
    for r in &phase2.records {
        if r.t > *probe_t.last().unwrap_or(&f64::NEG_INFINITY) {
            probe_t.push(r.t);
            probe_v.push(r.extras[0]);
        }
    }
    let oscillation = detect_oscillation(&probe_t, &probe_v, cfg.dead_band);
    let heat_probe = heat.column("probe0")?;

    let mut checks = Vec::new();
    checks.push(Check::new(
        "5(a) barrier bounds at t_star",
        odd_max.pass && even_max.pass,
        format!(
            "odd slabs max {:.6} < {:.6} at ({:.3}, {:.3}); even slabs max {:.6} < {:.6}",
            odd_max.max, odd_bound, odd_max.at[0], odd_max.at[1], even_max.max, even_bound
        ),
    ));
    let slack = -cfg.order_slack * scale;
    let psi_gap = min_finite(phase2.column("psi_gap")?);
    let phi_gap = min_finite(phase2.column("phi_gap")?);
    checks.push(Check::new(
        "5(b) companion ordering",
        psi_gap >= slack && phi_gap >= slack,
        format!(
            "min(w - psi) = {psi_gap:.3e}, min(phi+ - w) = {phi_gap:.3e} over {} records (slack {slack:.1e})",
            phase2.len()
        ),
    ));
    let dip = cfg.dip * scale;
    let rise = 1.0 - (1.0 - cfg.rise) * scale;
    let found = oscillation.dip_then_rise(dip, rise);
    checks.push(Check::new(
        "5(c) probe oscillation",
        found.is_some(),
        match found {
            Some((a, b)) => format!(
                "min {:.4} at t = {:.3}, then max {:.4} at t = {:.3}",
                a.value, a.t, b.value, b.t
            ),
            None => format!(
                "no local min <= {dip} followed by a local max >= {rise}; {} extrema, w(0,t) in [{:.4}, {:.4}], final {:.4}",
                oscillation.extrema.len(),
                probe_v.iter().cloned().fold(f64::INFINITY, f64::min),
                probe_v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                probe_v.last().copied().unwrap_or(f64::NAN)
            ),
        },
    ));
    let (lo, hi) = (1.0 - cfg.heat_band * scale, 1.0 + cfg.heat_band * scale);
    let vmin = heat_probe.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = heat_probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let probe_ok = vmin >= lo && vmax <= hi;
    let balls_ok = ball_averages.iter().all(|b| b.3 >= b.4 && b.3 <= b.5);
    let worst_ball = ball_averages
        .iter()
        .map(|b| (b.3 - b.4).min(b.5 - b.3))
        .fold(f64::INFINITY, f64::min);
    let vmin_t = heat
        .records
        .iter()
        .zip(&heat_probe)
        .find(|(_, &v)| v == vmin)
        .map(|(r, _)| r.t)
        .unwrap_or(f64::NAN);
    checks.push(Check::new(
        "5(d) heat probe and ball averages",
        probe_ok && balls_ok,
        format!(
            "v(0,t) in [{vmin:.4}, {vmax:.4}] (min at t = {vmin_t:.3}), allowed [{lo}, {hi}]; {} ball averages, smallest margin to sandwich bounds {worst_ball:.3}",
            ball_averages.len()
        ),
    ));
    let sphere_cols: Vec<String> = (0..spheres.len()).map(|i| format!("clr_sphere_{i}")).collect();
    let mut sphere_min = f64::INFINITY;
    let mut sphere_ok = true;
    for name in &sphere_cols {
        for (r, v) in phase1.records.iter().zip(phase1.column(name)?) {
            if r.t > 0.0 && r.t < t_star {
                sphere_ok &= v > 0.0;
                sphere_min = sphere_min.min(v);
            }
        }
    }
    checks.push(Check::new(
        "sphere clearance",
        sphere_ok,
        format!("min over {} spheres for 0 < t < t_star: {sphere_min:.4e}", spheres.len()),
    ));
    let failed: Vec<&RegionCheck> = region_log.iter().filter(|c| !c.pass).collect();
    checks.push(Check::new(
        "punctured slab bound",
        failed.is_empty(),
        format!(
            "{} checks against {bound:.6}{}",
            region_log.len(),
            failed.first().map(|c| format!("; first failure {c}")).unwrap_or_default()
        ),
    ));
    let m0 = heat.records[0].mean;
    let drift = heat
        .records
        .iter()
        .map(|r| (r.mean - m0).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "heat mean",
        drift <= 1e-9,
        format!("mean {m0:.12} drifts by {drift:.3e}"),
    ));

    Ok(Theorem2Report {
        torus,
        rho0,
        layout,
        placement,
        fine_spacing,
        coarse_spacing,
        spheres,
        phase1,
        phase2,
        heat,
        region_log,
        odd_max,
        even_max,
        oscillation,
        probe_t,
        probe: probe_v,
        heat_probe,
        ball_averages,
        snapshots,
        checks,
    })
}

// ---------------------------------------------------------------------------
// generic run

config_struct!(RunConfig {
    flow: String = "heat".to_string(),
    builder: String = "sine".to_string(),
    snapshot: String = String::new(),
    dim: usize = 1,
    count: usize = 128,
    extent: f64 = 1.0,
    t_end: f64 = 0.05,
    cfl: f64 = 0.5,
    record_every: f64 = 0.005,
    probes: String = "0".to_string(),
    ell: f64 = 0.1,
    m_max: usize = 3,
});

/// Builds the initial field named by `builder`: `sine`, `phi0`, `spiked`,
/// or `snapshot` (read from `snapshot`).
pub fn build_named(cfg: &RunConfig) -> Result<(ScalarField, f64)> {
    let grid = || -> Result<PeriodicGrid> {
        Ok(match cfg.dim {
            1 => PeriodicGrid::line(cfg.extent, cfg.count)?,
            _ => PeriodicGrid::plane([cfg.extent, cfg.extent], [cfg.count, cfg.count])?,
        })
    };
    match cfg.builder.as_str() {
        "sine" => {
            let l = cfg.extent;
            Ok((ScalarField::from_fn(&grid()?, |x, _| (2.0 * PI * x / l).sin()), 0.0))
        }
        "phi0" => {
            let layout = SlabLayout::new(cfg.ell, cfg.m_max, 0.0, 1.0)?;
            Ok((ScalarField::from_fn(&grid()?, |x, _| build_phi0(&layout, x)), 0.0))
        }
        "spiked" => {
            let torus = scale_torus(&reference_torus(1e-3, 1e-9)?, 0.45, 0.1)?;
            let g = PeriodicGrid::plane([cfg.extent, cfg.extent], [cfg.count, cfg.count])?;
            Ok((build_spiked_u0(&g, &torus)?.0, 0.0))
        }
        "snapshot" => Ok(read_snapshot(std::path::Path::new(&cfg.snapshot))?),
        other => Err(ConfigError::Invalid(format!("unknown builder `{other}`")).into()),
    }
}

pub fn run_generic(cfg: &RunConfig) -> Result<(ScalarField, TimeSeries, f64)> {
    let (field, t0) = build_named(cfg)?;
    let flow: FlowKind = cfg.flow.parse()?;
    let probes = parse_list("probes", &cfg.probes)?;
    let dim = field.grid().dim();
    if probes.len() % dim != 0 {
        return Err(ConfigError::Invalid(format!(
            "probes must list {dim} coordinates per point"
        ))
        .into());
    }
    let mut probe = ProbeObserver::new(probes.chunks(dim).map(|c| c.to_vec()).collect());
    let params = FlowParams {
        flow_kind: flow,
        t_start: t0,
        t_end: cfg.t_end,
        cfl_safety: cfg.cfl,
        record_every: cfg.record_every,
        dt_cap: None,
    };
    let (out, series) = run(field, &params, &mut [&mut probe])?;
    Ok((out, series, cfg.t_end))
}
