//! Gridded constitutive data.
//!
//! Tables are piecewise-cubic Hermite in (T, p) with finite-difference knot
//! slopes, and barycentric-linear in composition: values are stored per
//! simplex corner (pure species) and mixed linearly by mole fraction. Grids
//! hard-fail outside their hull rather than extrapolating.

use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;
use serde::Serialize;

use super::VolumeEval;

/// Monotone-knot cubic Hermite interpolant in one variable, C¹, with
/// analytic first and (piecewise-linear) second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve1D {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Curve1D {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() {
            return Err(Error::TableFormat(
                "knot and value counts differ or are empty".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::TableFormat("knots must be strictly increasing".into()));
        }
        let n = knots.len();
        let mut slopes = vec![0.0; n];
        if n >= 2 {
            for i in 0..n {
                slopes[i] = if i == 0 {
                    (values[1] - values[0]) / (knots[1] - knots[0])
                } else if i == n - 1 {
                    (values[n - 1] - values[n - 2]) / (knots[n - 1] - knots[n - 2])
                } else {
                    // slope of the parabola through the three neighbors
                    let h0 = knots[i] - knots[i - 1];
                    let h1 = knots[i + 1] - knots[i];
                    let d0 = (values[i] - values[i - 1]) / h0;
                    let d1 = (values[i + 1] - values[i]) / h1;
                    (h1 * d0 + h0 * d1) / (h0 + h1)
                };
            }
        }
        Ok(Curve1D {
            knots,
            values,
            slopes,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn cell(&self, t: f64) -> usize {
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.knots.len() - 2),
        }
    }

    fn hermite(&self, t: f64) -> (f64, f64, f64) {
        let n = self.knots.len();
        if n == 1 {
            return (self.values[0], 0.0, 0.0);
        }
        let i = self.cell(t);
        let h = self.knots[i + 1] - self.knots[i];
        let s = (t - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let dh00 = 6.0 * s * s - 6.0 * s;
        let dh10 = 3.0 * s * s - 4.0 * s + 1.0;
        let dh01 = -6.0 * s * s + 6.0 * s;
        let dh11 = 3.0 * s * s - 2.0 * s;
        let d = (dh00 * y0 + dh10 * m0 + dh01 * y1 + dh11 * m1) / h;
        let d2h00 = 12.0 * s - 6.0;
        let d2h10 = 6.0 * s - 4.0;
        let d2h01 = -12.0 * s + 6.0;
        let d2h11 = 6.0 * s - 2.0;
        let dd = (d2h00 * y0 + d2h10 * m0 + d2h01 * y1 + d2h11 * m1) / (h * h);
        (v, d, dd)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.hermite(t).0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.hermite(t).1
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.hermite(t).2
    }
}

/// Tensor-product cubic Hermite surface over (T, p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2D {
    t_knots: Vec<f64>,
    p_knots: Vec<f64>,
    /// row-major values[t_index][p_index]
    values: Vec<Vec<f64>>,
}

impl Table2D {
    pub fn new(t_knots: Vec<f64>, p_knots: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != t_knots.len() || values.iter().any(|row| row.len() != p_knots.len()) {
            return Err(Error::TableFormat("value grid shape mismatch".into()));
        }
        if t_knots.windows(2).any(|w| w[1] <= w[0]) || p_knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::TableFormat("knots must be strictly increasing".into()));
        }
        Ok(Table2D {
            t_knots,
            p_knots,
            values,
        })
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t_knots[0], *self.t_knots.last().unwrap())
    }

    pub fn p_range(&self) -> (f64, f64) {
        (self.p_knots[0], *self.p_knots.last().unwrap())
    }

    /// (value, d/dp, d/dT, d²/dT²) at (t, p).
    pub fn eval(&self, t: f64, p: f64) -> (f64, f64, f64, f64) {
        // interpolate each T-row in p, then a Hermite pass in T
        let nt = self.t_knots.len();
        let mut row_vals = Vec::with_capacity(nt);
        let mut row_dp = Vec::with_capacity(nt);
        for row in &self.values {
            let c = Curve1D::new(self.p_knots.clone(), row.clone()).expect("validated grid");
            let (v, d, _) = c.hermite(p);
            row_vals.push(v);
            row_dp.push(d);
        }
        if nt == 1 {
            return (row_vals[0], row_dp[0], 0.0, 0.0);
        }
        let cv = Curve1D::new(self.t_knots.clone(), row_vals).expect("validated grid");
        let (v, dt, dtt) = cv.hermite(t);
        let cd = Curve1D::new(self.t_knots.clone(), row_dp).expect("validated grid");
        let dp = cd.value(t);
        (v, dp, dt, dtt)
    }
}

/// Molar volume from corner tables: υ̂(T, p, x) = Σ x_c table_c(T, p).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabulatedVolume {
    corners: Vec<Table2D>,
}

impl TabulatedVolume {
    pub fn new(corners: Vec<Table2D>) -> Result<Self> {
        if corners.is_empty() {
            return Err(Error::TableFormat("need at least one corner table".into()));
        }
        let t0 = corners[0].t_range();
        let p0 = corners[0].p_range();
        for c in &corners[1..] {
            if c.t_range() != t0 || c.p_range() != p0 {
                return Err(Error::TableFormat(
                    "corner tables must share one (T, p) grid hull".into(),
                ));
            }
        }
        Ok(TabulatedVolume { corners })
    }

    /// Parses CSV rows `T, p, x_1..x_N, value`. Rows must sit at simplex
    /// corners (one x_i equal to 1) and fill a full (T, p) tensor grid per
    /// corner; interior-composition rows are rejected since the composition
    /// interpolation is barycentric-linear from the corners.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) => {
                    if *width.get_or_insert(v.len()) != v.len() {
                        return Err(Error::TableFormat(format!(
                            "line {}: inconsistent column count",
                            lineno + 1
                        )));
                    }
                    rows.push(v);
                }
                Err(_) if rows.is_empty() => continue, // header line
                Err(e) => {
                    return Err(Error::TableFormat(format!(
                        "line {}: {e}",
                        lineno + 1
                    )))
                }
            }
        }
        let width = width.ok_or_else(|| Error::TableFormat("empty table".into()))?;
        if width < 4 {
            return Err(Error::TableFormat(
                "need at least columns T, p, x_1, value".into(),
            ));
        }
        let n_species = width - 3;
        let mut t_knots: Vec<f64> = Vec::new();
        let mut p_knots: Vec<f64> = Vec::new();
        for r in &rows {
            push_unique(&mut t_knots, r[0]);
            push_unique(&mut p_knots, r[1]);
        }
        t_knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        p_knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut grids =
            vec![vec![vec![f64::NAN; p_knots.len()]; t_knots.len()]; n_species];
        for r in &rows {
            let ti = index_of(&t_knots, r[0]);
            let pi = index_of(&p_knots, r[1]);
            let x = &r[2..2 + n_species];
            let corner = x
                .iter()
                .position(|&v| (v - 1.0).abs() < 1e-9)
                .ok_or_else(|| {
                    Error::TableFormat(
                        "composition rows must be simplex corners (one x_i = 1)".into(),
                    )
                })?;
            if x.iter()
                .enumerate()
                .any(|(i, &v)| i != corner && v.abs() > 1e-9)
            {
                return Err(Error::TableFormat(
                    "composition rows must be simplex corners (other x_i = 0)".into(),
                ));
            }
            grids[corner][ti][pi] = *r.last().unwrap();
        }
        let mut corners = Vec::with_capacity(n_species);
        for (c, g) in grids.into_iter().enumerate() {
            if g.iter().flatten().any(|v| v.is_nan()) {
                return Err(Error::TableFormat(format!(
                    "corner {c} does not fill the full (T, p) grid"
                )));
            }
            corners.push(Table2D::new(t_knots.clone(), p_knots.clone(), g)?);
        }
        TabulatedVolume::new(corners)
    }

    pub fn n_species(&self) -> usize {
        self.corners.len()
    }

    pub fn temperature_range(&self) -> (f64, f64) {
        self.corners[0].t_range()
    }

    pub fn pressure_range(&self) -> (f64, f64) {
        self.corners[0].p_range()
    }

    pub fn corner_value(&self, corner: usize, t: f64, p: f64) -> f64 {
        self.corners[corner].eval(t, p).0
    }

    pub fn value_fast(&self, t: f64, p: f64, x: &[f64]) -> f64 {
        self.corners
            .iter()
            .zip(x)
            .map(|(c, xi)| xi * c.eval(t, p).0)
            .sum()
    }

    pub fn d_t_fast(&self, t: f64, p: f64, x: &[f64]) -> f64 {
        self.corners
            .iter()
            .zip(x)
            .map(|(c, xi)| xi * c.eval(t, p).2)
            .sum()
    }

    pub fn d_tt_fast(&self, t: f64, p: f64, x: &[f64]) -> f64 {
        self.corners
            .iter()
            .zip(x)
            .map(|(c, xi)| xi * c.eval(t, p).3)
            .sum()
    }

    pub fn volume_eval(&self, t: f64, p: f64, x: &[f64]) -> Result<VolumeEval> {
        let (tlo, thi) = self.temperature_range();
        if !(t >= tlo && t <= thi) {
            return Err(Error::OutOfDomain {
                quantity: "temperature",
                value: t,
                min: tlo,
                max: thi,
            });
        }
        let (plo, phi) = self.pressure_range();
        if !(p >= plo && p <= phi) {
            return Err(Error::OutOfDomain {
                quantity: "pressure",
                value: p,
                min: plo,
                max: phi,
            });
        }
        let n = self.corners.len();
        let mut value = 0.0;
        let mut d_p = 0.0;
        let mut d_t = 0.0;
        let mut d_tt = 0.0;
        let mut grad_x = vec![0.0; n];
        for (c, table) in self.corners.iter().enumerate() {
            let (v, dp, dt, dtt) = table.eval(t, p);
            value += x[c] * v;
            d_p += x[c] * dp;
            d_t += x[c] * dt;
            d_tt += x[c] * dtt;
            grad_x[c] = v;
        }
        Ok(VolumeEval {
            value,
            d_p,
            d_t,
            d_tt,
            grad_x,
            hess_x: SquareMatrix::zeros(n),
        })
    }
}

fn push_unique(v: &mut Vec<f64>, x: f64) {
    if !v.iter().any(|&k| (k - x).abs() <= 1e-12 * x.abs().max(1.0)) {
        v.push(x);
    }
}

fn index_of(v: &[f64], x: f64) -> usize {
    v.iter()
        .position(|&k| (k - x).abs() <= 1e-12 * x.abs().max(1.0))
        .expect("knot collected in first pass")
}
