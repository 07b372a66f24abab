//! Time series records and diagnostics: limits, flatness, curvature, ball
//! averages and oscillation detection.

use std::fmt::Write as _;

use thiserror::Error;

use crate::grid::{GridError, ScalarField};
use crate::solver::gradient;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("ball of radius {r} about {center:?} leaves the sampled window on axis {axis}")]
    BallOutsideWindow { center: Vec<f64>, r: f64, axis: usize },
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("tail band grew from {start} to {end}: not stabilized")]
    NotStabilized { start: f64, end: f64 },
    #[error("series has too few records ({0})")]
    TooShort(usize),
    #[error("no column named `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub sup: f64,
    pub inf: f64,
    pub mean: f64,
    /// Observer columns in the order of [`TimeSeries::columns`].
    pub extras: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub records: Vec<Record>,
}

impl TimeSeries {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, record: Record) {
        debug_assert_eq!(record.extras.len(), self.columns.len());
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Any column by name, including `t`, `sup`, `inf` and `mean`.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, AnalysisError> {
        let pick: Box<dyn Fn(&Record) -> f64> = match name {
            "t" => Box::new(|r| r.t),
            "sup" => Box::new(|r| r.sup),
            "inf" => Box::new(|r| r.inf),
            "mean" => Box::new(|r| r.mean),
            other => {
                let k = self
                    .columns
                    .iter()
                    .position(|c| c == other)
                    .ok_or_else(|| AnalysisError::MissingColumn(other.to_string()))?;
                Box::new(move |r| r.extras[k])
            }
        };
        Ok(self.records.iter().map(pick).collect())
    }

    /// Appends the records of `other`, which must have the same columns,
    /// skipping any that do not advance in time.
    pub fn extend_from(&mut self, other: &TimeSeries) {
        for r in &other.records {
            if self.records.last().map_or(true, |l| r.t > l.t) {
                self.records.push(r.clone());
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup,inf,mean");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for r in &self.records {
            let _ = write!(s, "{},{},{},{}", r.t, r.sup, r.inf, r.mean);
            for v in &r.extras {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }
}

/// Tail-window estimate of the constant a run stabilizes to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    /// `max sup - min inf` over the tail.
    pub band: f64,
}

/// Midpoint and width of `[min inf, max sup]` over the last `tail_fraction`
/// of the time window. Fails when the oscillation `sup - inf` at the end of
/// the tail exceeds its value at the start.
pub fn estimate_limit_constant(
    series: &TimeSeries,
    tail_fraction: f64,
) -> Result<LimitEstimate, AnalysisError> {
    let recs = &series.records;
    if recs.len() < 2 {
        return Err(AnalysisError::TooShort(recs.len()));
    }
    let (t0, t1) = (recs[0].t, recs[recs.len() - 1].t);
    let cut = t1 - tail_fraction.clamp(0.0, 1.0) * (t1 - t0);
    let tail: Vec<&Record> = recs.iter().filter(|r| r.t >= cut).collect();
    let tail = if tail.len() < 2 {
        recs[recs.len() - 2..].iter().collect()
    } else {
        tail
    };
    let hi = tail.iter().map(|r| r.sup).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|r| r.inf).fold(f64::INFINITY, f64::min);
    let start = tail[0].sup - tail[0].inf;
    let end = tail[tail.len() - 1].sup - tail[tail.len() - 1].inf;
    if end > start + 1e-12 {
        return Err(AnalysisError::NotStabilized { start, end });
    }
    Ok(LimitEstimate {
        value: 0.5 * (hi + lo),
        band: hi - lo,
    })
}

/// `(sup - inf, max |Du|)`.
pub fn flatness(field: &ScalarField) -> (f64, f64) {
    let grads = gradient(field);
    let mut g = 0.0_f64;
    for k in 0..field.values.len() {
        let s: f64 = grads.iter().map(|d| d.values[k] * d.values[k]).sum();
        g = g.max(s.sqrt());
    }
    (field.sup() - field.inf(), g)
}

/// Norm of the second fundamental form of the graph at every node, from
/// central differences: `|A|^2 = tr(G M G M)` with `G = I - p p^T / W^2`,
/// `M = D^2 u / W`.
pub fn curvature_norms(field: &ScalarField) -> Vec<f64> {
    let grid = field.grid();
    let u = &field.values;
    let mut out = vec![0.0; u.len()];
    match grid.dim() {
        1 => {
            let n = u.len();
            let h = grid.spacing(0);
            for i in 0..n {
                let (up, um) = (u[(i + 1) % n], u[(i + n - 1) % n]);
                let ux = (up - um) / (2.0 * h);
                let uxx = (up - 2.0 * u[i] + um) / (h * h);
                out[i] = uxx.abs() / (1.0 + ux * ux).powf(1.5);
            }
        }
        _ => {
            let (n0, n1) = (grid.counts()[0], grid.counts()[1]);
            let (hx, hy) = (grid.spacing(0), grid.spacing(1));
            for i in 0..n0 {
                let (r, rp, rm) = (i * n1, ((i + 1) % n0) * n1, ((i + n0 - 1) % n0) * n1);
                for j in 0..n1 {
                    let (jp, jm) = ((j + 1) % n1, (j + n1 - 1) % n1);
                    let c = u[r + j];
                    let p = [
                        (u[rp + j] - u[rm + j]) / (2.0 * hx),
                        (u[r + jp] - u[r + jm]) / (2.0 * hy),
                    ];
                    let uxx = (u[rp + j] - 2.0 * c + u[rm + j]) / (hx * hx);
                    let uyy = (u[r + jp] - 2.0 * c + u[r + jm]) / (hy * hy);
                    let uxy = (u[rp + jp] - u[rp + jm] - u[rm + jp] + u[rm + jm]) / (4.0 * hx * hy);
                    let w2 = 1.0 + p[0] * p[0] + p[1] * p[1];
                    let w = w2.sqrt();
                    let m = [[uxx / w, uxy / w], [uxy / w, uyy / w]];
                    let g = [
                        [1.0 - p[0] * p[0] / w2, -p[0] * p[1] / w2],
                        [-p[0] * p[1] / w2, 1.0 - p[1] * p[1] / w2],
                    ];
                    let mut gm = [[0.0; 2]; 2];
                    for a in 0..2 {
                        for b in 0..2 {
                            gm[a][b] = g[a][0] * m[0][b] + g[a][1] * m[1][b];
                        }
                    }
                    let mut a2 = 0.0;
                    for a in 0..2 {
                        for b in 0..2 {
                            a2 += gm[a][b] * gm[b][a];
                        }
                    }
                    out[r + j] = a2.max(0.0).sqrt();
                }
            }
        }
    }
    out
}

/// Largest `|A|` over all nodes.
pub fn curvature_monitor(field: &ScalarField) -> f64 {
    curvature_norms(field).into_iter().fold(0.0, f64::max)
}

/// How an axis is continued beyond the sampled window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Repeat the window periodically.
    Periodic,
    /// No data outside the window.
    Window,
}

fn lattice_range(
    grid: &crate::grid::PeriodicGrid,
    axis: usize,
    c: f64,
    r: f64,
    ext: Extension,
    center: &[f64],
) -> Result<(i64, i64), AnalysisError> {
    let h = grid.spacing(axis);
    let origin = -0.5 * grid.extents()[axis];
    let lo = ((c - r - origin) / h).ceil() as i64;
    let hi = ((c + r - origin) / h).floor() as i64;
    if ext == Extension::Window && (lo < 0 || hi >= grid.counts()[axis] as i64) {
        return Err(AnalysisError::BallOutsideWindow {
            center: center.to_vec(),
            r,
            axis,
        });
    }
    Ok((lo, hi))
}

/// Mean of the node values inside the closed ball `B_r(center)`, with each
/// axis continued as given by `extension`.
pub fn ball_average(
    field: &ScalarField,
    center: &[f64],
    r: f64,
    extension: &[Extension],
) -> Result<f64, AnalysisError> {
    let grid = field.grid();
    let dim = grid.dim();
    if center.len() != dim {
        return Err(GridError::PointDim(center.len(), dim).into());
    }
    if !(r > 0.0) {
        return Err(AnalysisError::Radius(r));
    }
    let ext = |a: usize| extension.get(a).copied().unwrap_or(Extension::Periodic);
    let origin: Vec<f64> = (0..dim).map(|a| -0.5 * grid.extents()[a]).collect();
    let h = grid.spacings();
    let counts: Vec<i64> = grid.counts().iter().map(|&c| c as i64).collect();
    let (lo0, hi0) = lattice_range(grid, 0, center[0], r, ext(0), center)?;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut count = 0u64;
    let mut add = |v: f64| {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    };
    for i in lo0..=hi0 {
        let dx = origin[0] + i as f64 * h[0] - center[0];
        let rem = r * r - dx * dx;
        if rem < 0.0 {
            continue;
        }
        let ii = i.rem_euclid(counts[0]) as usize;
        if dim == 1 {
            add(field.values[ii]);
            count += 1;
            continue;
        }
        let span = rem.sqrt();
        let (lo1, hi1) = lattice_range(grid, 1, center[1], span, ext(1), center)?;
        let row = ii * counts[1] as usize;
        for j in lo1..=hi1 {
            let dy = origin[1] + j as f64 * h[1] - center[1];
            if dx * dx + dy * dy <= r * r {
                add(field.values[row + j.rem_euclid(counts[1]) as usize]);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(AnalysisError::Radius(r));
    }
    Ok((sum + comp) / count as f64)
}

/// Volume-ratio bounds `((r - sqrt n)/r)^n` and `((r + sqrt n)/r)^n` for the
/// ball average of data with unit mass in every unit cell.
pub fn sandwich_bounds(r: f64, n: usize) -> (f64, f64) {
    let s = (n as f64).sqrt();
    let lo = ((r - s).max(0.0) / r).powi(n as i32);
    let hi = ((r + s) / r).powi(n as i32);
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub index: usize,
    pub t: f64,
    pub value: f64,
    pub is_max: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OscillationReport {
    /// Alternating interior extrema in time order.
    pub extrema: Vec<Extremum>,
    pub running_min: Vec<f64>,
    pub running_max: Vec<f64>,
}

impl OscillationReport {
    pub fn minima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| !e.is_max)
    }

    pub fn maxima(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.is_max)
    }

    pub fn min_of_minima(&self) -> Option<f64> {
        self.minima().map(|e| e.value).reduce(f64::min)
    }

    pub fn max_of_maxima(&self) -> Option<f64> {
        self.maxima().map(|e| e.value).reduce(f64::max)
    }

    pub fn is_alternating(&self) -> bool {
        self.extrema.windows(2).all(|w| w[0].is_max != w[1].is_max)
    }

    /// First local minimum `<= low` that is later followed by a local
    /// maximum `>= high`.
    pub fn dip_then_rise(&self, low: f64, high: f64) -> Option<(Extremum, Extremum)> {
        let dip = self.minima().find(|e| e.value <= low)?;
        let rise = self
            .maxima()
            .find(|e| e.index > dip.index && e.value >= high)?;
        Some((*dip, *rise))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,t,value\n");
        for e in &self.extrema {
            let _ = writeln!(s, "{},{},{}", if e.is_max { "max" } else { "min" }, e.t, e.value);
        }
        s
    }
}

/// Zigzag peak detection: an extremum is confirmed once the series has moved
/// `dead_band` away from it. Extrema sitting on the first or last sample are
/// not reported.
pub fn detect_oscillation(times: &[f64], values: &[f64], dead_band: f64) -> OscillationReport {
    let n = values.len().min(times.len());
    let mut report = OscillationReport::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &values[..n] {
        lo = lo.min(v);
        hi = hi.max(v);
        report.running_min.push(lo);
        report.running_max.push(hi);
    }
    if n < 3 {
        return report;
    }
    // None: no trend yet; Some(true): rising, looking for a max.
    let mut trend: Option<bool> = None;
    let (mut lo_i, mut hi_i) = (0usize, 0usize);
    let mut found: Vec<Extremum> = Vec::new();
    let confirm = |i: usize, is_max: bool, found: &mut Vec<Extremum>| {
        found.push(Extremum {
            index: i,
            t: times[i],
            value: values[i],
            is_max,
        });
    };
    for i in 1..n {
        let v = values[i];
        match trend {
            None => {
                if v < values[lo_i] {
                    lo_i = i;
                }
                if v > values[hi_i] {
                    hi_i = i;
                }
                if v - values[lo_i] >= dead_band && lo_i < i {
                    confirm(lo_i, false, &mut found);
                    trend = Some(true);
                    hi_i = i;
                } else if values[hi_i] - v >= dead_band && hi_i < i {
                    confirm(hi_i, true, &mut found);
                    trend = Some(false);
                    lo_i = i;
                }
            }
            Some(true) => {
                if v > values[hi_i] {
                    hi_i = i;
                } else if values[hi_i] - v >= dead_band {
                    confirm(hi_i, true, &mut found);
                    trend = Some(false);
                    lo_i = i;
                }
            }
            Some(false) => {
                if v < values[lo_i] {
                    lo_i = i;
                } else if v - values[lo_i] >= dead_band {
                    confirm(lo_i, false, &mut found);
                    trend = Some(true);
                    hi_i = i;
                }
            }
        }
    }
    report.extrema = found
        .into_iter()
        .filter(|e| e.index != 0 && e.index != n - 1)
        .collect();
    report
}
