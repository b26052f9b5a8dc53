//! Plain-text storage for fields and trajectories.
//!
//! A field file lists one mode per line as `k re im`, ascending in `k` from `−K`
//! to `K`. Lines starting with `#` are comments; writers use them for metadata
//! such as the resolved run configuration. A trajectory directory holds
//! `times.csv` (`index,t`, after the same `#` header) and one `t_<index>.field` file per node.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{FourierField, Trajectory};

/// Renders a field, with each header line prefixed by `# `.
pub fn format_field(field: &FourierField, header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        for part in line.lines() {
            let _ = writeln!(out, "# {part}");
        }
    }
    for (k, c) in field.modes() {
        let _ = writeln!(out, "{k} {:e} {:e}", c.re, c.im);
    }
    out
}

/// Parses the format written by [`format_field`].
pub fn parse_field(text: &str) -> Result<FourierField> {
    let mut modes: Vec<(i64, Complex64)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: i + 1, message };
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(format!("expected `k re im`, got {line:?}")));
        }
        let k: i64 = parts[0]
            .parse()
            .map_err(|_| parse_err(format!("bad mode index {:?}", parts[0])))?;
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("bad number {s:?}")))
        };
        let c = Complex64::new(num(parts[1])?, num(parts[2])?);
        if let Some(&(prev, _)) = modes.last() {
            if k != prev + 1 {
                return Err(parse_err(format!("mode {k} follows {prev}; modes must be consecutive")));
            }
        }
        modes.push((k, c));
    }
    let first = modes.first().map(|m| m.0).ok_or(Error::Parse {
        line: 0,
        message: "no modes".into(),
    })?;
    let max_mode = (-first) as usize;
    if first > 0 || modes.last().map(|m| m.0) != Some(-first) {
        return Err(Error::Parse {
            line: 0,
            message: format!("modes must run from -K to K, got {first}..{}", modes.last().unwrap().0),
        });
    }
    FourierField::from_coeffs(max_mode, modes.into_iter().map(|m| m.1).collect())
}

pub fn read_field(path: &Path) -> Result<FourierField> {
    parse_field(&fs::read_to_string(path)?)
}

pub fn write_field(path: &Path, field: &FourierField, header: &[String]) -> Result<()> {
    fs::write(path, format_field(field, header))?;
    Ok(())
}

/// Writes `times.csv` and `t_<index>.field` files into `dir`, creating it if needed.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, header: &[String]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut times = String::new();
    for line in header {
        for part in line.lines() {
            let _ = writeln!(times, "# {part}");
        }
    }
    times.push_str("index,t\n");
    for (i, (t, u)) in traj.times().iter().zip(traj.states()).enumerate() {
        let _ = writeln!(times, "{i},{t:e}");
        let mut h = header.to_vec();
        h.push(format!("t = {t:e}"));
        write_field(&dir.join(format!("t_{i}.field")), u, &h)?;
    }
    fs::write(dir.join("times.csv"), times)?;
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(dir.join("times.csv"))?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .skip(1);
    for (i, line) in rows {
        let (idx, t) = line.split_once(',').ok_or(Error::Parse {
            line: i + 1,
            message: format!("expected `index,t`, got {line:?}"),
        })?;
        let t: f64 = t.trim().parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("bad time {t:?}"),
        })?;
        times.push(t);
        states.push(read_field(&dir.join(format!("t_{}.field", idx.trim())))?);
    }
    Trajectory::new(times, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let f = FourierField::real_from_fn(3, |k| Complex64::new(1.0 / (k as f64 + 3.0), 0.1 * k as f64 / 7.0));
        let text = format_field(&f, &["beta = 1".into(), "eta = 2\nK = 3".into()]);
        assert!(text.starts_with("# beta = 1\n# eta = 2\n# K = 3\n-3 "));
        assert_eq!(parse_field(&text).unwrap(), f);
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(parse_field("0 1 0\n1 x 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_field("-1 1 0\n1 1 0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_field("# only comments\n").is_err());
        assert!(parse_field("-1 1 0\n0 1 0\n").is_err());
        assert!(parse_field("0 1 0 4\n").is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = FourierField::real_from_fn(2, |k| Complex64::new(k as f64, 0.5));
        let traj = Trajectory::new(vec![0.0, 0.25, 0.5], vec![f.clone(), f.scaled(0.5), f.scaled(0.25)]).unwrap();
        write_trajectory(dir.path(), &traj, &["seed = 1".into()]).unwrap();
        let times = std::fs::read_to_string(dir.path().join("times.csv")).unwrap();
        assert!(times.starts_with("# seed = 1\nindex,t\n0,"));
        assert_eq!(read_trajectory(dir.path()).unwrap(), traj);
    }
}
