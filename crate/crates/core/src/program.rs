//! Load programs: applied voltage and electrode temperature histories.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROGRAM_HEADER: [&str; 4] = ["t_s", "U_V", "T_inner_K", "T_outer_K"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSample {
    pub t: f64,
    pub voltage: f64,
    pub t_inner: f64,
    pub t_outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBoundary {
    pub t_start: f64,
    pub t_end: f64,
    pub label: String,
}

/// Piecewise-linear history of voltage and electrode temperatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    samples: Vec<LoadSample>,
    cycles: Vec<CycleBoundary>,
}

/// Conditions at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub voltage: f64,
    pub t_inner: f64,
    pub t_outer: f64,
}

impl LoadProgram {
    pub fn new(samples: Vec<LoadSample>, cycles: Vec<CycleBoundary>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("load program has no samples"));
        }
        if samples[0].t != 0.0 {
            return Err(Error::validation(format!(
                "load program must start at t = 0, starts at {}",
                samples[0].t
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::validation(format!(
                    "sample times not strictly increasing at sample {}",
                    i + 1
                )));
            }
        }
        for s in &samples {
            if !(s.voltage >= 0.0) || !s.voltage.is_finite() {
                return Err(Error::validation(format!(
                    "negative or non-finite voltage at t = {}",
                    s.t
                )));
            }
            if !(s.t_inner > 0.0 && s.t_outer > 0.0) {
                return Err(Error::validation(format!("non-positive temperature at t = {}", s.t)));
            }
        }
        Ok(Self { samples, cycles })
    }

    /// Constant voltage and temperatures over `[0, duration]`.
    pub fn constant(duration: f64, voltage: f64, t_inner: f64, t_outer: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::invalid("program duration must be positive"));
        }
        let s = |t| LoadSample {
            t,
            voltage,
            t_inner,
            t_outer,
        };
        Self::new(
            vec![s(0.0), s(duration)],
            vec![CycleBoundary {
                t_start: 0.0,
                t_end: duration,
                label: "constant".into(),
            }],
        )
    }

    pub fn samples(&self) -> &[LoadSample] {
        &self.samples
    }

    pub fn cycles(&self) -> &[CycleBoundary] {
        &self.cycles
    }

    pub fn with_cycles(mut self, cycles: Vec<CycleBoundary>) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    /// Linear interpolation; times outside the program hold the end values.
    pub fn at(&self, t: f64) -> LoadPoint {
        let s = &self.samples;
        let point = |x: &LoadSample| LoadPoint {
            voltage: x.voltage,
            t_inner: x.t_inner,
            t_outer: x.t_outer,
        };
        if t <= s[0].t {
            return point(&s[0]);
        }
        let last = s.len() - 1;
        if t >= s[last].t {
            return point(&s[last]);
        }
        let k = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[k - 1], &s[k]);
        let w = (t - a.t) / (b.t - a.t);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        LoadPoint {
            voltage: lerp(a.voltage, b.voltage),
            t_inner: lerp(a.t_inner, b.t_inner),
            t_outer: lerp(a.t_outer, b.t_outer),
        }
    }

    /// First sample time strictly after `t`, if any.
    pub fn next_knot_after(&self, t: f64) -> Option<f64> {
        let k = self.samples.partition_point(|x| x.t <= t);
        self.samples.get(k).map(|s| s.t)
    }

    /// Same program with the voltage multiplied by `factor`.
    pub fn scaled_voltage(&self, factor: f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| LoadSample {
                voltage: s.voltage * factor,
                ..*s
            })
            .collect();
        Self::new(samples, self.cycles.clone())
    }

    /// The part of the program over `[t0, t1]`, shifted to start at zero.
    pub fn window(&self, t0: f64, t1: f64, label: &str) -> Result<Self> {
        if !(t0 >= 0.0 && t1 > t0 && t1 <= self.duration() + 1e-9) {
            return Err(Error::invalid(format!(
                "window [{t0}, {t1}] s lies outside the program [0, {}] s",
                self.duration()
            )));
        }
        let sample = |t: f64| {
            let p = self.at(t);
            LoadSample {
                t: t - t0,
                voltage: p.voltage,
                t_inner: p.t_inner,
                t_outer: p.t_outer,
            }
        };
        let tol = 1e-9 * (1.0 + t1);
        let mut samples = vec![sample(t0)];
        samples.extend(
            self.samples
                .iter()
                .filter(|s| s.t > t0 + tol && s.t < t1 - tol)
                .map(|s| sample(s.t)),
        );
        samples.push(sample(t1));
        Self::new(
            samples,
            vec![CycleBoundary {
                t_start: 0.0,
                t_end: t1 - t0,
                label: label.into(),
            }],
        )
    }

    /// Appends `other` shifted to start where `self` ends. A leading sample of
    /// `other` that coincides with the join is merged into the join point.
    pub fn append(&mut self, other: &LoadProgram) {
        let offset = self.duration();
        for (i, s) in other.samples.iter().enumerate() {
            if i == 0 && s.t == 0.0 {
                // replace the join sample so the later program's initial state wins
                let last = self.samples.last_mut().expect("non-empty program");
                *last = LoadSample { t: offset, ..*s };
                continue;
            }
            self.samples.push(LoadSample { t: s.t + offset, ..*s });
        }
        for c in &other.cycles {
            self.cycles.push(CycleBoundary {
                t_start: c.t_start + offset,
                t_end: c.t_end + offset,
                label: c.label.clone(),
            });
        }
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        let got: Vec<&str> = headers.iter().collect();
        if got != PROGRAM_HEADER {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!(
                    "expected header {:?}, found {:?}",
                    PROGRAM_HEADER.join(","),
                    got.join(",")
                ),
            });
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let mut vals = [0.0; 4];
            for (j, v) in vals.iter_mut().enumerate() {
                let field = rec.get(j).ok_or_else(|| Error::Parse {
                    line,
                    column: j as u64 + 1,
                    message: "missing field".into(),
                })?;
                *v = field.parse().map_err(|_| Error::Parse {
                    line,
                    column: j as u64 + 1,
                    message: format!("not a number: {field:?}"),
                })?;
            }
            samples.push(LoadSample {
                t: vals[0],
                voltage: vals[1],
                t_inner: vals[2],
                t_outer: vals[3],
            });
        }
        let duration = samples.last().map(|s| s.t).unwrap_or(0.0);
        Self::new(
            samples,
            vec![CycleBoundary {
                t_start: 0.0,
                t_end: duration,
                label: "cycle".into(),
            }],
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PROGRAM_HEADER).map_err(csv_error)?;
        for s in &self.samples {
            w.write_record(&[
                s.t.to_string(),
                s.voltage.to_string(),
                s.t_inner.to_string(),
                s.t_outer.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let (line, message) = match e.position() {
        Some(p) => (p.line(), e.to_string()),
        None => (0, e.to_string()),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Parse {
            line,
            column: 0,
            message,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, u: f64) -> LoadSample {
        LoadSample {
            t,
            voltage: u,
            t_inner: 330.0,
            t_outer: 310.0,
        }
    }

    #[test]
    fn interpolates_linearly() {
        let p = LoadProgram::new(vec![sample(0.0, 0.0), sample(10.0, 100.0)], vec![]).unwrap();
        assert_eq!(p.at(2.5).voltage, 25.0);
        assert_eq!(p.at(-1.0).voltage, 0.0);
        assert_eq!(p.at(20.0).voltage, 100.0);
        assert_eq!(p.next_knot_after(0.0), Some(10.0));
        assert_eq!(p.next_knot_after(10.0), None);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(LoadProgram::new(vec![sample(1.0, 0.0)], vec![]).is_err());
        assert!(LoadProgram::new(vec![sample(0.0, 0.0), sample(0.0, 1.0)], vec![]).is_err());
        assert!(LoadProgram::new(vec![sample(0.0, -1.0)], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let text = "t_s,U_V,T_inner_K,T_outer_K\n0,1000,330,310\n3600,1000,340,315\n";
        let p = LoadProgram::read_csv(text.as_bytes()).unwrap();
        assert_eq!(p.samples().len(), 2);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = LoadProgram::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p.samples(), q.samples());

        let bad = "t_s,U_V,T_inner_K,T_outer_K\n0,1000,330,310\n3600,abc,340,315\n";
        match LoadProgram::read_csv(bad.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(LoadProgram::read_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn append_shifts_time() {
        let mut a = LoadProgram::constant(10.0, 5.0, 300.0, 300.0).unwrap();
        let b = LoadProgram::constant(20.0, 7.0, 300.0, 300.0).unwrap();
        a.append(&b);
        assert_eq!(a.duration(), 30.0);
        assert_eq!(a.samples().len(), 3);
        assert_eq!(a.cycles()[1].t_start, 10.0);
        assert_eq!(a.at(20.0).voltage, 7.0);
    }

    #[test]
    fn window_extracts_and_shifts() {
        let p = LoadProgram::new(vec![sample(0.0, 0.0), sample(10.0, 100.0), sample(20.0, 0.0)], vec![]).unwrap();
        let w = p.window(5.0, 15.0, "mid").unwrap();
        assert_eq!(w.duration(), 10.0);
        assert_eq!(w.samples().len(), 3);
        assert_eq!(w.at(0.0).voltage, 50.0);
        assert_eq!(w.at(5.0).voltage, 100.0);
        assert_eq!(w.cycles()[0].label, "mid");
        assert!(p.window(5.0, 25.0, "x").is_err());
    }
}
