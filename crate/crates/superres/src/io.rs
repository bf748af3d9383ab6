//! Text formats for sampled PSFs and mode measurements.
//!
//! PSF files hold two or three columns `x re [im]` on a uniform grid,
//! separated by whitespace or commas. Measurement files look like
//!
//! ```text
//! # bucket: true
//! x HG0 HG1
//! -16 1.2e-28 -3.4e-27
//! ...
//! ```
//!
//! with one column of samples per mode. `#` starts a comment everywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use superres_core::cfi::Measurement;
use superres_core::spline::UniformGrid;
use superres_core::PsfModel;

use crate::error::CliError;

/// Relative deviation from uniform spacing tolerated in sample files.
const SPACING_TOL: f64 = 1e-6;

/// Shortest text that parses back to exactly `x`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Data rows of a numeric text file: `(line number, fields)`.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("").trim();
        (!body.is_empty()).then(|| {
            (
                i + 1,
                body.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|f| !f.is_empty())
                    .collect(),
            )
        })
    })
}

fn grid_from(xs: &[f64], path: &Path) -> Result<UniformGrid, CliError> {
    let bad = |msg: &str| CliError::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: msg.to_string(),
    };
    if xs.len() < 4 {
        return Err(bad("need at least four samples"));
    }
    let n = xs.len();
    let step = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(bad("sample positions must increase"));
    }
    for (i, &x) in xs.iter().enumerate() {
        if ((x - xs[0]) - step * i as f64).abs() > SPACING_TOL * step {
            return Err(bad("sample positions are not uniformly spaced"));
        }
    }
    Ok(UniformGrid::new(xs[0], step, n)?)
}

fn parse_num(field: &str, path: &Path, line: usize) -> Result<f64, CliError> {
    field.parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("not a number: {field:?}"),
    })
}

/// Loads a sampled PSF amplitude. Returns the model and the factor the
/// samples were multiplied by to normalize the intensity.
pub fn load_psf(path: &Path) -> Result<(PsfModel, f64), CliError> {
    let text = read(path)?;
    let (mut xs, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
    let mut columns = None;
    for (line, fields) in rows(&text) {
        if fields.len() != 2 && fields.len() != 3 {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected 2 or 3 columns, found {}", fields.len()),
            });
        }
        if *columns.get_or_insert(fields.len()) != fields.len() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                msg: "inconsistent column count".into(),
            });
        }
        xs.push(parse_num(fields[0], path, line)?);
        re.push(parse_num(fields[1], path, line)?);
        if let Some(f) = fields.get(2) {
            im.push(parse_num(f, path, line)?);
        }
    }
    let grid = grid_from(&xs, path)?;
    let imag = (columns == Some(3)).then_some(im);
    Ok(PsfModel::from_samples(grid, re, imag)?)
}

/// Serializes a mode measurement.
pub fn measurement_to_string(m: &Measurement) -> Result<String, CliError> {
    let (grid, modes) = m
        .modes()
        .ok_or_else(|| CliError::usage("only mode-projection measurements can be exported"))?;
    let mut out = String::new();
    writeln!(out, "# bucket: {}", m.has_bucket()).unwrap();
    let labels: Vec<String> = m.labels().iter().map(|l| l.replace(char::is_whitespace, "_")).collect();
    writeln!(out, "x {}", labels.join(" ")).unwrap();
    for (i, x) in grid.points().enumerate() {
        out.push_str(&fmt_num(x));
        for mode in modes {
            out.push(' ');
            out.push_str(&fmt_num(mode[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn save_measurement(m: &Measurement, path: &Path) -> Result<(), CliError> {
    fs::write(path, measurement_to_string(m)?).map_err(|e| CliError::io(path, e))
}

/// Parses the measurement text format; `path` is only used in messages.
pub fn parse_measurement(text: &str, path: &Path) -> Result<Measurement, CliError> {
    let err = |line: usize, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut bucket = None;
    for line in text.lines() {
        if let Some(v) = line
            .trim()
            .strip_prefix('#')
            .and_then(|c| c.trim().strip_prefix("bucket:"))
        {
            bucket = Some(match v.trim() {
                "true" => true,
                "false" => false,
                other => return Err(err(0, format!("bad bucket flag {other:?}"))),
            });
        }
    }
    let mut it = rows(text);
    let (hline, header) = it.next().ok_or_else(|| err(0, "empty measurement file".into()))?;
    if header.first() != Some(&"x") || header.len() < 2 {
        return Err(err(hline, "header must be `x label...`".into()));
    }
    let labels: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    let mut xs = Vec::new();
    let mut modes = vec![Vec::new(); labels.len()];
    for (line, fields) in it {
        if fields.len() != labels.len() + 1 {
            return Err(err(line, format!("expected {} columns", labels.len() + 1)));
        }
        xs.push(parse_num(fields[0], path, line)?);
        for (mode, f) in modes.iter_mut().zip(&fields[1..]) {
            mode.push(parse_num(f, path, line)?);
        }
    }
    let grid = grid_from(&xs, path)?;
    Ok(Measurement::from_modes(grid, modes, labels, bucket.unwrap_or(true))?)
}

pub fn load_measurement(path: &Path) -> Result<Measurement, CliError> {
    parse_measurement(&read(path)?, path)
}
