//! Result rows and their CSV encoding.
//!
//! Floats are written with 17 significant digits, absent values as empty
//! fields and errors of unstable runs as `inf`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 17] = [
    "experiment",
    "scheme",
    "tau",
    "h_min",
    "h_max",
    "ell",
    "n_x",
    "n_y",
    "err_exact",
    "err_vs_cn",
    "cn_norm",
    "lambda",
    "delta",
    "ratio",
    "stable",
    "steps",
    "wall_ms",
];

/// One run of one scheme. For CFL scans `tau` holds the largest stable step;
/// decay rows use `lambda`, `delta` and `ratio` instead of the error fields.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub experiment: String,
    pub scheme: String,
    pub tau: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub ell: Option<usize>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    /// Energy-norm error against the exact solution at the final time.
    pub err_exact: Option<f64>,
    /// Discrete energy norm of the difference to Crank–Nicolson at the final time.
    pub err_vs_cn: Option<f64>,
    /// Discrete energy norm of the Crank–Nicolson state at the final time.
    pub cn_norm: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub ratio: Option<f64>,
    pub stable: bool,
    pub steps: usize,
    pub wall_ms: f64,
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt_f(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

fn fmt_opt_u(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl ResultRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.scheme.clone(),
            fmt_f(self.tau),
            fmt_f(self.h_min),
            fmt_f(self.h_max),
            fmt_opt_u(self.ell),
            fmt_opt_u(self.n_x),
            fmt_opt_u(self.n_y),
            fmt_opt_f(self.err_exact),
            fmt_opt_f(self.err_vs_cn),
            fmt_opt_f(self.cn_norm),
            fmt_opt_f(self.lambda),
            fmt_opt_f(self.delta),
            fmt_opt_f(self.ratio),
            self.stable.to_string(),
            self.steps.to_string(),
            fmt_f(self.wall_ms),
        ]
    }

    fn from_record(r: &csv::StringRecord) -> Result<Self> {
        if r.len() != CSV_HEADER.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} fields, got {}",
                CSV_HEADER.len(),
                r.len()
            )));
        }
        let bad = |i: usize| Error::InvalidInput(format!("cannot parse {} = '{}'", CSV_HEADER[i], &r[i]));
        let f = |i: usize| r[i].parse::<f64>().map_err(|_| bad(i));
        let of = |i: usize| if r[i].is_empty() { Ok(None) } else { f(i).map(Some) };
        let ou = |i: usize| {
            if r[i].is_empty() {
                Ok(None)
            } else {
                r[i].parse::<usize>().map(Some).map_err(|_| bad(i))
            }
        };
        Ok(ResultRow {
            experiment: r[0].to_string(),
            scheme: r[1].to_string(),
            tau: f(2)?,
            h_min: f(3)?,
            h_max: f(4)?,
            ell: ou(5)?,
            n_x: ou(6)?,
            n_y: ou(7)?,
            err_exact: of(8)?,
            err_vs_cn: of(9)?,
            cn_norm: of(10)?,
            lambda: of(11)?,
            delta: of(12)?,
            ratio: of(13)?,
            stable: r[14].parse::<bool>().map_err(|_| bad(14))?,
            steps: r[15].parse::<usize>().map_err(|_| bad(15))?,
            wall_ms: f(16)?,
        })
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_rows(rows, std::io::BufWriter::new(file))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::InvalidInput(format!("unexpected header in {}", path.display())));
    }
    r.records().map(|rec| ResultRow::from_record(&rec?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRow {
        ResultRow {
            experiment: "x".into(),
            scheme: "DS".into(),
            tau: 0.1 + 0.2,
            h_min: 1.0 / 3.0,
            h_max: std::f64::consts::PI,
            ell: Some(8),
            n_x: Some(2),
            n_y: Some(1),
            err_exact: Some(1e-300),
            err_vs_cn: Some(2.5e-11),
            cn_norm: Some(7.0),
            lambda: None,
            delta: None,
            ratio: None,
            stable: true,
            steps: 17,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn header_only_for_no_rows() {
        let mut buf = Vec::new();
        write_rows(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), CSV_HEADER.join(",") + "\n");
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut unstable = sample();
        unstable.stable = false;
        unstable.err_exact = Some(f64::INFINITY);
        unstable.err_vs_cn = Some(f64::INFINITY);
        let rows = vec![sample(), unstable];
        write_csv(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.lines().nth(2).unwrap().contains(",inf,inf,"));
        assert!(text.lines().nth(2).unwrap().contains(",false,"));
        assert_eq!(read_csv(&path).unwrap(), rows);
    }

    #[test]
    fn write_to_missing_directory_fails() {
        let dir = tempfile::tempdir().unwrap();
        let r = write_csv(&[sample()], &dir.path().join("no/such/dir.csv"));
        assert!(matches!(r, Err(Error::Io(_))));
    }
}
