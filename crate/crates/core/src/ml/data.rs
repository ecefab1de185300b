//! Labelled datasets and their CSV form.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point1D {
    pub x: f64,
    pub label: i8,
    /// Outcome the point is encoded into.
    pub outcome: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset1D {
    pub points: Vec<Point1D>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset2D {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<i8>,
}

fn check_label(label: i8) -> Result<i8> {
    if label == 1 || label == -1 {
        Ok(label)
    } else {
        Err(Error::Parse(format!("label {label} is not ±1")))
    }
}

fn parse_field<T: std::str::FromStr>(value: Option<&str>, name: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = value.ok_or_else(|| Error::Parse(format!("line {line}: missing `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("line {line}: bad `{name}` value `{raw}`: {e}")))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

impl Dataset1D {
    /// x_p = p/(D−1); +1 for 4 ≤ p ≤ 10, −1 otherwise; point p uses outcome p.
    pub fn default_preset(d: usize) -> Self {
        let scale = (d.max(2) - 1) as f64;
        let points = (0..d)
            .map(|p| Point1D {
                x: p as f64 / scale,
                label: if (4..=10).contains(&p) { 1 } else { -1 },
                outcome: p,
            })
            .collect();
        Dataset1D { points }
    }

    pub fn labels(&self) -> Vec<i8> {
        self.points.iter().map(|p| p.label).collect()
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.outcome).collect()
    }

    /// Header `x,y,label,outcome`; `y` is written as 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label,outcome\n");
        for p in &self.points {
            out.push_str(&format!("{},0,{},{}\n", p.x, p.label, p.outcome));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (line, row) in data_lines(text) {
            let mut f = row.split(',');
            let x = parse_field(f.next(), "x", line)?;
            let _y: f64 = parse_field(f.next(), "y", line)?;
            let label = check_label(parse_field(f.next(), "label", line)?)?;
            let outcome = parse_field(f.next(), "outcome", line)?;
            points.push(Point1D { x, label, outcome });
        }
        Ok(Dataset1D { points })
    }
}

impl Dataset2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label\n");
        for (p, l) in self.points.iter().zip(&self.labels) {
            out.push_str(&format!("{},{},{}\n", p[0], p[1], l));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (line, row) in data_lines(text) {
            let mut f = row.split(',');
            let x = parse_field(f.next(), "x", line)?;
            let y = parse_field(f.next(), "y", line)?;
            points.push([x, y]);
            labels.push(check_label(parse_field(f.next(), "label", line)?)?);
        }
        let data = Dataset2D { points, labels };
        if !(data.labels.contains(&1) && data.labels.contains(&-1)) {
            return Err(Error::DegenerateLabels);
        }
        Ok(data)
    }
}

fn linspace(n: usize, end: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.0
        } else {
            end * i as f64 / (n - 1) as f64
        }
    })
}

/// Two interleaved half circles: the upper arc (cos t, sin t) labelled −1
/// and the lower arc (1 − cos t, 0.5 − sin t) labelled +1, t evenly spaced
/// on [0, π], plus Gaussian noise of width `noise_sigma` on each coordinate.
pub fn make_moons(count: usize, noise_sigma: f64, seed_root: u64) -> Result<Dataset2D> {
    if count == 0 || count % 2 != 0 {
        return Err(Error::Size(format!(
            "make_moons needs a positive even count, got {count}"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise sigma {noise_sigma} is negative"
        )));
    }
    let half = count / 2;
    let pi = std::f64::consts::PI;
    let mut points: Vec<[f64; 2]> = linspace(half, pi).map(|t| [t.cos(), t.sin()]).collect();
    points.extend(linspace(half, pi).map(|t| [1.0 - t.cos(), 0.5 - t.sin()]));
    let labels = std::iter::repeat_n(-1, half)
        .chain(std::iter::repeat_n(1, half))
        .collect();
    if noise_sigma > 0.0 {
        let normal =
            Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut rng = seed::stream_rng(seed_root, seed::STREAM_MOONS, count as u64);
        for p in points.iter_mut() {
            p[0] += normal.sample(&mut rng);
            p[1] += normal.sample(&mut rng);
        }
    }
    Ok(Dataset2D { points, labels })
}
