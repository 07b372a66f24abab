//! Initial graphs: the periodic spiked field, the slab oscillator and its
//! two-dimensional extension with spikes, and the upper barrier profile.

use thiserror::Error;

use crate::grid::{GridError, PeriodicGrid, ScalarField};
use crate::shrinker::ProfileCurve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("unresolved spike: support radius {ell} needs spacing below {max_spacing}, grid has {spacing}")]
    UnresolvedSpike { ell: f64, spacing: f64, max_spacing: f64 },
    #[error("incompatible torus scale: spike height {h0} does not exceed twice the torus height {delta}")]
    IncompatibleTorus { h0: f64, delta: f64 },
    #[error("grid extents must be whole unit cells: {0:?}")]
    NotUnitCells(Vec<f64>),
    #[error("grid dimension {0} not supported here")]
    Dimension(usize),
    #[error("invalid slab layout: {0}")]
    Layout(String),
    #[error("x1 window half-width {half} too small for m_max = {m_max} (need at least {need})")]
    WindowTooSmall { half: f64, m_max: usize, need: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Quintic smoothstep going from 1 at `s <= 0` to 0 at `s >= 1`, with
/// vanishing first and second derivatives at both ends.
pub fn smoothstep_down(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Radial spike profile in units of the support radius: 1 up to 1/3, 0 from
/// 2/3 on.
pub fn smooth_plateau_bump(x: f64) -> f64 {
    smoothstep_down(3.0 * (x - 1.0 / 3.0))
}

/// Blend from `from` to `to` across `[lo, hi]`.
fn blend(x: f64, lo: f64, hi: f64, from: f64, to: f64) -> f64 {
    let w = smoothstep_down((x - lo) / (hi - lo));
    to + (from - to) * w
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeParams {
    pub ell0: f64,
    pub h0: f64,
    pub plateau_fraction: f64,
    pub zero_fraction: f64,
}

impl SpikeParams {
    /// Height of a spike centred at the origin at distance `rho`.
    pub fn profile(&self, rho: f64) -> f64 {
        self.h0 * smooth_plateau_bump(rho / self.ell0)
    }
}

fn is_whole(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9 && x.round() >= 1.0
}

/// Spike height making the discrete integral of one spike equal to 1 on a
/// grid with spacings `hx`, `hy`, for a spike centred on a node.
pub fn normalized_spike_height(ell0: f64, hx: f64, hy: f64) -> f64 {
    let kx = (ell0 / hx).ceil() as i64 + 1;
    let ky = (ell0 / hy).ceil() as i64 + 1;
    let mut sum = 0.0;
    for i in -kx..=kx {
        for j in -ky..=ky {
            let rho = ((i as f64 * hx).powi(2) + (j as f64 * hy).powi(2)).sqrt();
            sum += smooth_plateau_bump(rho / ell0);
        }
    }
    1.0 / (sum * hx * hy)
}

fn check_resolution(ell: f64, grid: &PeriodicGrid) -> Result<(), BuildError> {
    let h = grid.spacings().into_iter().fold(0.0, f64::max);
    // at least three nodes across the plateau radius ell/3
    let max_spacing = ell / 6.0;
    if !(h < max_spacing) {
        return Err(BuildError::UnresolvedSpike {
            ell,
            spacing: h,
            max_spacing,
        });
    }
    Ok(())
}

fn spike_params(grid: &PeriodicGrid, torus: &ProfileCurve) -> Result<SpikeParams, BuildError> {
    let ell0 = torus.inner_radius;
    check_resolution(ell0, grid)?;
    let h0 = normalized_spike_height(ell0, grid.spacing(0), grid.spacing(1));
    if !(h0 > 2.0 * torus.max_height) {
        return Err(BuildError::IncompatibleTorus {
            h0,
            delta: torus.max_height,
        });
    }
    Ok(SpikeParams {
        ell0,
        h0,
        plateau_fraction: 1.0 / 3.0,
        zero_fraction: 2.0 / 3.0,
    })
}

/// One unit-mass spike per unit cell, centred on the integer lattice.
pub fn build_spiked_u0(
    grid: &PeriodicGrid,
    torus: &ProfileCurve,
) -> Result<(ScalarField, SpikeParams), BuildError> {
    if grid.dim() != 2 {
        return Err(BuildError::Dimension(grid.dim()));
    }
    if !grid.extents().iter().all(|&e| is_whole(e)) {
        return Err(BuildError::NotUnitCells(grid.extents().to_vec()));
    }
    let params = spike_params(grid, torus)?;
    let field = ScalarField::from_fn(grid, |x, y| {
        let rho = (x - x.round()).hypot(y - y.round());
        params.profile(rho)
    });
    Ok((field, params))
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Factorially spaced plateau layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabLayout {
    /// Transition half-width, `0 < ell < 1/4`.
    pub ell: f64,
    pub m_max: usize,
    /// Level on odd intervals.
    pub a: f64,
    /// Level on even intervals.
    pub b: f64,
}

impl SlabLayout {
    pub fn new(ell: f64, m_max: usize, a: f64, b: f64) -> Result<Self, BuildError> {
        if !(ell > 0.0 && ell < 0.25) {
            return Err(BuildError::Layout(format!("ell = {ell} must lie in (0, 1/4)")));
        }
        if m_max < 2 {
            return Err(BuildError::Layout(format!("m_max = {m_max} must be at least 2")));
        }
        if !(a < b) {
            return Err(BuildError::Layout(format!("need a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { ell, m_max, a, b })
    }

    /// `I_m`: `[0, 1 - ell]` for `m = 0`, else `[m! + ell, (m+1)! - ell]`.
    pub fn interval(&self, m: usize) -> (f64, f64) {
        if m == 0 {
            (0.0, 1.0 - self.ell)
        } else {
            (factorial(m) + self.ell, factorial(m + 1) - self.ell)
        }
    }

    /// Slab `S_j` in `|x1|`: `[j! - 1/4, (j+1)! + 1/4]` for even `j`,
    /// `[j! + 1/4, (j+1)! - 1/4]` for odd `j`.
    pub fn slab(&self, j: usize) -> (f64, f64) {
        let (lo, hi) = (factorial(j), factorial(j + 1));
        if j % 2 == 0 {
            (lo - 0.25, hi + 0.25)
        } else {
            (lo + 0.25, hi - 0.25)
        }
    }

    /// Spiked slabs `S_{2k+1}`, `k >= 1`, up to the truncation.
    pub fn odd_slabs(&self) -> Vec<(f64, f64)> {
        (3..=self.m_max).step_by(2).map(|j| self.slab(j)).collect()
    }

    /// Plateau-1 slabs `S_{2k}`, `k >= 1`, up to the truncation.
    pub fn even_slabs(&self) -> Vec<(f64, f64)> {
        (2..=self.m_max).step_by(2).map(|j| self.slab(j)).collect()
    }

    /// Outer end of the truncated structure, `(m_max + 1)!`.
    pub fn reach(&self) -> f64 {
        factorial(self.m_max + 1)
    }

    fn level(&self, m: usize) -> f64 {
        if m % 2 == 0 {
            self.b
        } else {
            self.a
        }
    }
}

/// Even oscillator in `x1`: level `b` on even `I_m`, `a` on odd `I_m`, C2
/// transitions of half-width `ell` around every `m!`, and the last level
/// continued past the truncation.
pub fn build_phi0(layout: &SlabLayout, x1: f64) -> f64 {
    let x = x1.abs();
    for m in 1..=layout.m_max {
        let c = factorial(m);
        if x < c - layout.ell {
            return layout.level(m - 1);
        }
        if x <= c + layout.ell {
            return blend(x, c - layout.ell, c + layout.ell, layout.level(m - 1), layout.level(m));
        }
    }
    layout.level(layout.m_max)
}

/// `x2`-invariant extension `psi0(x1, x2) = phi0(x1)`.
pub fn build_psi0(grid: &PeriodicGrid, layout: &SlabLayout) -> ScalarField {
    ScalarField::from_fn(grid, |x, _| build_phi0(layout, x))
}

/// Spike placement and height chosen by [`build_w0`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpikePlacement {
    pub params: SpikeParams,
    pub centres: Vec<[f64; 2]>,
    /// Lattice points in an odd slab whose support would leave the zero
    /// plateau.
    pub skipped: Vec<[f64; 2]>,
}

/// The oscillator plus one unit-mass spike on each lattice point of the odd
/// slabs whose whole support sits on the `a` plateau inside the slab.
pub fn build_w0(
    grid: &PeriodicGrid,
    layout: &SlabLayout,
    torus: &ProfileCurve,
) -> Result<(ScalarField, SpikePlacement), BuildError> {
    if grid.dim() != 2 {
        return Err(BuildError::Dimension(grid.dim()));
    }
    if (grid.extents()[1] - 1.0).abs() > 1e-12 {
        return Err(BuildError::Layout(format!(
            "x2 period must be 1, got {}",
            grid.extents()[1]
        )));
    }
    let half = 0.5 * grid.extents()[0];
    let need = layout.reach() + 1.0;
    if half < need {
        return Err(BuildError::WindowTooSmall {
            half,
            m_max: layout.m_max,
            need,
        });
    }
    if layout.a != 0.0 || layout.b != 1.0 {
        return Err(BuildError::Layout("spiked data needs a = 0, b = 1".into()));
    }
    let params = spike_params(grid, torus)?;
    let ell0 = params.ell0;
    let mut centres = Vec::new();
    let mut skipped = Vec::new();
    let odd: Vec<(usize, (f64, f64))> = (3..=layout.m_max)
        .step_by(2)
        .map(|j| (j, layout.slab(j)))
        .collect();
    for &(j, (lo, hi)) in &odd {
        let (plo, phi) = layout.interval(j);
        for m in (lo.ceil() as i64)..=(hi.floor() as i64) {
            let x = m as f64;
            let inside = x - ell0 >= lo.max(plo) && x + ell0 <= hi.min(phi);
            for sign in [-1.0, 1.0] {
                let c = [sign * x, 0.0];
                if inside {
                    centres.push(c);
                } else {
                    skipped.push(c);
                }
            }
        }
    }
    centres.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let is_centre = |m: f64| centres.iter().any(|c| c[0] == m);
    let field = ScalarField::from_fn(grid, |x, y| {
        let base = build_phi0(layout, x);
        let m = x.round();
        let rho = (x - m).hypot(y - y.round());
        if rho < ell0 && is_centre(m) {
            base + params.profile(rho)
        } else {
            base
        }
    });
    Ok((
        field,
        SpikePlacement {
            params,
            centres,
            skipped,
        },
    ))
}

/// Upper barrier profile: `1 + rho0` on the even slabs (and the centre),
/// `eps` on the gaps inside the odd slabs, C2 transitions of width 1/4.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi0Plus {
    pub eps: f64,
    pub rho0: f64,
    /// Plateaus `(start, end, level)` in `|x1|`, increasing.
    pub plateaus: Vec<(f64, f64, f64)>,
}

impl Phi0Plus {
    pub fn eval(&self, x1: f64) -> f64 {
        let x = x1.abs();
        let p = &self.plateaus;
        for k in 0..p.len() {
            if x <= p[k].1 {
                return p[k].2;
            }
            if k + 1 < p.len() && x < p[k + 1].0 {
                return blend(x, p[k].1, p[k + 1].0, p[k].2, p[k + 1].2);
            }
        }
        p[p.len() - 1].2
    }

    pub fn upper(&self) -> f64 {
        1.0 + self.rho0
    }
}

pub fn build_phi0_plus(eps: f64, rho0: f64, layout: &SlabLayout) -> Result<Phi0Plus, BuildError> {
    if !(eps > 0.0 && rho0 > 0.0 && eps < 1.0 + rho0) {
        return Err(BuildError::Layout(format!(
            "need 0 < eps < 1 + rho0, got eps = {eps}, rho0 = {rho0}"
        )));
    }
    let up = 1.0 + rho0;
    let mut plateaus = Vec::new();
    for j in 0..=layout.m_max {
        let (lo, hi) = (factorial(j), factorial(j + 1));
        if j % 2 == 0 {
            let start = if j == 0 { 0.0 } else { lo - 0.25 };
            plateaus.push((start, hi + 0.25, up));
        } else {
            plateaus.push((lo + 0.5, hi - 0.5, eps));
        }
    }
    Ok(Phi0Plus {
        eps,
        rho0,
        plateaus,
    })
}
