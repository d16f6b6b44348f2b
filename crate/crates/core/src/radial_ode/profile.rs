//! Radial profiles on nonuniform nodes: quintic Hermite interior, series
//! near the origin, exponential (or algebraic) tail beyond the last node.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::OdeSpec;
use crate::error::{Error, Result};

/// u(r) ≈ c·e^{−κr}·r^{−ν} beyond the last node.
///
/// ν = 1 for the three-dimensional radial equations, ν = 0 for the
/// half-line singular equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub c: f64,
    pub kappa: f64,
    pub nu: f64,
}

impl TailModel {
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let u = self.c * (-self.kappa * r).exp() * r.powf(-self.nu);
        (u, u * (-self.kappa - self.nu / r))
    }

    pub fn log_eval(&self, r: f64) -> f64 {
        self.c.ln() - self.kappa * r - self.nu * r.ln()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileHeader {
    pub spec: OdeSpec,
    pub central: f64,
    pub tail: Option<TailModel>,
    pub series_end: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Debug, Clone)]
pub struct Profile {
    pub spec: OdeSpec,
    pub central: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub tail: Option<TailModel>,
    /// Below this radius values come from the start series.
    pub series_end: f64,
    pub rtol: f64,
    pub atol: f64,
    d2u: Vec<f64>,
}

impl Profile {
    pub fn new(
        spec: OdeSpec,
        central: f64,
        r: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        tail: Option<TailModel>,
        series_end: f64,
        (rtol, atol): (f64, f64),
    ) -> Result<Self> {
        if r.len() < 2 || r.len() != u.len() || r.len() != du.len() {
            return Err(Error::InvalidInput("profile arrays must have equal length ≥ 2".into()));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("profile nodes must start at 0 and increase strictly".into()));
        }
        let d2u = r.iter().zip(u.iter().zip(&du)).map(|(&r, (&u, &du))| spec.second_derivative(central, r, u, du)).collect();
        Ok(Profile { spec, central, r, u, du, tail, series_end, rtol, atol, d2u })
    }

    pub fn last_r(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn d2u(&self) -> &[f64] {
        &self.d2u
    }

    /// Value and derivative at r ≥ 0. Beyond the last node the tail model is
    /// used; without one the profile is treated as zero there.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.series_end {
            return self.spec.series(self.central, r);
        }
        let n = self.r.len();
        if r >= self.r[n - 1] {
            if r == self.r[n - 1] {
                return (self.u[n - 1], self.du[n - 1]);
            }
            return match &self.tail {
                Some(t) => t.eval(r),
                None => (0.0, 0.0),
            };
        }
        let i = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return (self.u[i], self.du[i]),
            Err(i) => i - 1,
        };
        self.hermite(i, r)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Quintic Hermite on [r_i, r_{i+1}] using u, u', u'' at both ends.
    pub fn hermite(&self, i: usize, r: f64) -> (f64, f64) {
        let a = (self.u[i], self.du[i], self.d2u[i]);
        let b = (self.u[i + 1], self.du[i + 1], self.d2u[i + 1]);
        hermite5(self.r[i], self.r[i + 1], a, b, r)
    }

    /// u(r) − ref(r), interpolating the difference itself so that a small
    /// deviation from a known reference keeps its relative accuracy.
    /// `reference` returns (value, first, second derivative).
    pub fn deviation_from(&self, r: f64, reference: impl Fn(f64) -> (f64, f64, f64)) -> f64 {
        let n = self.r.len();
        if r <= self.series_end || r >= self.r[n - 1] {
            return self.value(r) - reference(r).0;
        }
        let i = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => return self.u[i] - reference(r).0,
            Err(i) => i - 1,
        };
        let side = |j: usize| {
            let (f, d, s) = reference(self.r[j]);
            (self.u[j] - f, self.du[j] - d, self.d2u[j] - s)
        };
        hermite5(self.r[i], self.r[i + 1], side(i), side(i + 1), r).0
    }

    /// Positive everywhere and strictly decreasing at interior nodes.
    pub fn is_positive_decreasing(&self) -> bool {
        self.u.iter().all(|&u| u > 0.0) && self.du.iter().skip(1).all(|&d| d < 0.0)
    }

    pub fn header(&self) -> ProfileHeader {
        ProfileHeader {
            spec: self.spec.clone(),
            central: self.central,
            tail: self.tail,
            series_end: self.series_end,
            rtol: self.rtol,
            atol: self.atol,
        }
    }

    /// CSV with a one-line JSON header comment, then `r,u,du`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", serde_json::to_string(&self.header())?)?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["r", "u", "du"])?;
        for i in 0..self.r.len() {
            cw.write_record([fmt17(self.r[i]), fmt17(self.u[i]), fmt17(self.du[i])])?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut rd: R) -> Result<Self> {
        let mut first = String::new();
        rd.read_line(&mut first)?;
        let json = first.trim().strip_prefix('#').ok_or_else(|| Error::InvalidInput("missing profile header".into()))?;
        let hdr: ProfileHeader = serde_json::from_str(json.trim())?;
        let mut cr = csv::Reader::from_reader(rd);
        let (mut r, mut u, mut du) = (vec![], vec![], vec![]);
        for rec in cr.records() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| Error::InvalidInput("bad profile row".into()))
            };
            r.push(num(0)?);
            u.push(num(1)?);
            du.push(num(2)?);
        }
        Profile::new(hdr.spec, hdr.central, r, u, du, hdr.tail, hdr.series_end, (hdr.rtol, hdr.atol))
    }
}

/// Quintic Hermite through (f, f', f'') at x0 and x1; value and slope at r.
fn hermite5(x0: f64, x1: f64, a: (f64, f64, f64), b: (f64, f64, f64), r: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (r - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let (f0, d0, s0) = (a.0, a.1 * h, a.2 * h * h);
    let (f1, d1, s1) = (b.0, b.1 * h, b.2 * h * h);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let g3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let g5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let u = h0 * f0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * f1;
    let du = (g0 * f0 + g1 * d0 + g2 * s0 + g3 * s1 + g4 * d1 + g5 * f1) / h;
    (u, du)
}

/// Shortest round-trip formatting with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}
