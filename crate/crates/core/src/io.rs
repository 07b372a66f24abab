//! Plain-text file formats: grid snapshots, profile CSV with a metadata
//! sidecar, and time series.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::grid::{GridError, PeriodicGrid, ScalarField};
use crate::shrinker::ProfileCurve;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|source| IoError::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Header lines `dim=`, `extents=`, `counts=`, `t=`, then one CSV row per
/// first-axis index.
pub fn snapshot_to_string(field: &ScalarField, t: f64) -> String {
    let g = field.grid();
    let mut s = String::new();
    let _ = writeln!(s, "dim={}", g.dim());
    let _ = writeln!(s, "extents={}", join(g.extents()));
    let _ = writeln!(s, "counts={}", join(g.counts()));
    let _ = writeln!(s, "t={t}");
    let row = if g.dim() == 1 { g.len() } else { g.counts()[1] };
    for chunk in field.values.chunks(row) {
        s.push_str(&join(chunk));
        s.push('\n');
    }
    s
}

pub fn snapshot_from_str(text: &str) -> Result<(ScalarField, f64), IoError> {
    let mut lines = text.lines().enumerate();
    let mut header = |key: &str| -> Result<String, IoError> {
        let (i, line) = lines.next().ok_or(IoError::Parse {
            line: 0,
            msg: format!("missing `{key}` header"),
        })?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or(IoError::Parse {
                line: i + 1,
                msg: format!("expected `{key}=`"),
            })
    };
    let num = |s: &str, line: usize| -> Result<f64, IoError> {
        s.trim().parse::<f64>().map_err(|e| IoError::Parse {
            line,
            msg: format!("`{s}`: {e}"),
        })
    };
    let dim: usize = header("dim")?.trim().parse().map_err(|_| IoError::Parse {
        line: 1,
        msg: "bad dim".into(),
    })?;
    let extents = header("extents")?
        .split(',')
        .map(|s| num(s, 2))
        .collect::<Result<Vec<_>, _>>()?;
    let counts = header("counts")?
        .split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|e| IoError::Parse {
                line: 3,
                msg: format!("`{s}`: {e}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let t = num(&header("t")?, 4)?;
    if extents.len() != dim {
        return Err(IoError::Parse {
            line: 2,
            msg: format!("{} extents for dimension {dim}", extents.len()),
        });
    }
    let grid = PeriodicGrid::new(&extents, &counts)?;
    let mut values = Vec::with_capacity(grid.len());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        for s in line.split(',') {
            values.push(num(s, i + 1)?);
        }
    }
    Ok((ScalarField::new(grid, values)?, t))
}

pub fn write_snapshot(path: &Path, field: &ScalarField, t: f64) -> Result<(), IoError> {
    write_text(path, &snapshot_to_string(field, t))
}

pub fn read_snapshot(path: &Path) -> Result<(ScalarField, f64), IoError> {
    snapshot_from_str(&read_text(path)?)
}

/// `snapshot_t0.0118.txt` style file name.
pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t:.4}.txt")
}

/// Upper half profile as CSV `s,r,z,theta`.
pub fn profile_csv(profile: &ProfileCurve) -> String {
    let mut s = String::from("s,r,z,theta\n");
    for (p, a) in profile.samples.iter().zip(&profile.arclength) {
        let _ = writeln!(s, "{a},{},{},{}", p.r, p.z, p.theta);
    }
    s
}

/// Sidecar `key=value` lines: n, ell, r_out, delta, t_star, step, tol.
pub fn profile_meta(profile: &ProfileCurve) -> String {
    format!(
        "n={}\nell={}\nr_out={}\ndelta={}\nt_star={}\nstep={}\ntol={}\n",
        profile.n,
        profile.inner_radius,
        profile.outer_radius,
        profile.max_height,
        profile.extinction_time,
        profile.step,
        profile.tol
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let g = PeriodicGrid::plane([2.0, 1.0], [10, 8]).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| x.sin() * 1e-7 + y / 3.0);
        let (back, t) = snapshot_from_str(&snapshot_to_string(&f, 0.25)).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(back, f);
        let g1 = PeriodicGrid::line(1.0, 8).unwrap();
        let f1 = ScalarField::from_fn(&g1, |x, _| x);
        assert_eq!(snapshot_from_str(&snapshot_to_string(&f1, 0.0)).unwrap().0, f1);
    }

    #[test]
    fn bad_snapshots() {
        assert!(snapshot_from_str("dim=2\n").is_err());
        assert!(snapshot_from_str("dim=1\nextents=1\ncounts=8\nt=0\n1,2,3\n").is_err());
    }

    #[test]
    fn names() {
        assert_eq!(snapshot_name(0.011769), "snapshot_t0.0118.txt");
    }
}
