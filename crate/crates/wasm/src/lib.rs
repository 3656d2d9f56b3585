//! Browser bindings for three interactive explorations:
//!
//! * the excess-volume curve of the cluster-reaction mixing model,
//! * the convergence of compressible free energies toward the singular
//!   incompressible limit,
//! * the thermal-expansion/compressibility inequality margin of liquid
//!   water under stiffening.
//!
//! Curves come back as flat `Vec<f64>` row blocks for plotting from plain
//! JavaScript.

use helmix::constitutive::presets;
use helmix::limits::{self, ModelFamily};
use helmix::mixing::MixingModel;
use helmix::numerics::ls_slope;
use helmix::potentials;
use helmix::regimes::{self, ReferenceScales};
use helmix::stability;
use helmix::state::{Composition, ThermoStateTPX};
use wasm_bindgen::prelude::*;

/// Rows of (x, extent, excess volume) for the mixing model.
/// `dg` in J/mol, `dv` in m³/mol, `p` in Pa, `t` in K.
#[wasm_bindgen]
pub fn excess_volume_curve(dg: f64, dv: f64, t: f64, p: f64, points: usize) -> Vec<f64> {
    let mut model = match MixingModel::normal_conditions(dv, dg) {
        Ok(m) => m,
        Err(_) => return vec![],
    };
    model.temperature = t.max(1.0);
    match model.curve(p, points.max(2)) {
        Ok(rows) => rows
            .into_iter()
            .flat_map(|(x, g, v)| [x, g, v])
            .collect(),
        Err(_) => vec![],
    }
}

/// Rows of (log10 K, log10 |f^K - f^∞|) for an on-constraint probe of the
/// drifting volume-additive family, or (log10 K, log10 |f^K|) for a probe
/// scaled off the constraint surface by `offset`.
#[wasm_bindgen]
pub fn limit_gap_curve(drift: f64, offset: f64, seed: u32) -> Vec<f64> {
    let fam = ModelFamily::volume_additive_drift(drift);
    let t = 298.0;
    let Ok(mut probes) = limits::probe_states(&fam, t, 1, 0, seed as u64) else {
        return vec![];
    };
    let mut rho = probes.remove(0);
    if offset != 0.0 {
        rho = rho.scale(1.0 + offset);
    }
    let limit = limits::limit_free_energy_global(&fam, t, &rho)
        .ok()
        .and_then(|v| v.finite());
    let mut out = Vec::new();
    for &k in &fam.schedule {
        let Ok(member) = fam.member(k) else { continue };
        let Ok(f) = potentials::free_energy(&member, t, &rho) else {
            continue;
        };
        let gap = match limit {
            Some(fl) => (f - fl).abs(),
            None => f.abs(),
        };
        if gap > 0.0 {
            out.push(k.log10());
            out.push(gap.log10());
        }
    }
    out
}

/// Least-squares slope of the last four points of [`limit_gap_curve`].
#[wasm_bindgen]
pub fn limit_gap_slope(curve: Vec<f64>) -> f64 {
    let n = curve.len() / 2;
    if n < 2 {
        return f64::NAN;
    }
    let take = n.min(4);
    let xs: Vec<f64> = (n - take..n).map(|i| curve[2 * i]).collect();
    let ys: Vec<f64> = (n - take..n).map(|i| curve[2 * i + 1]).collect();
    ls_slope(&xs, &ys)
}

/// Rows of (T, margin) of the expansion/compressibility inequality for
/// water with the expansion coefficient scaled by `beta_scale` and the bulk
/// modulus by `10^log10_k_scale`. The margin is normalized by its value at
/// the reference state of the unscaled fluid.
#[wasm_bindgen]
pub fn mueller_margin_curve(beta_scale: f64, log10_k_scale: f64, points: usize) -> Vec<f64> {
    let mut model = presets::water_simple_law();
    if let helmix::constitutive::VolumeLaw::SimpleLaw { beta, modulus, .. } = &mut model.volume {
        *beta *= beta_scale;
        *modulus *= 10f64.powf(log10_k_scale);
    }
    let reference = {
        let base = presets::water_simple_law();
        let x = Composition::pure(1, 0);
        let st = ThermoStateTPX::new(293.0, 1e5, x).unwrap();
        stability::mueller_margin(&base, &st).unwrap().margin
    };
    let x = Composition::pure(1, 0);
    let mut out = Vec::new();
    let n = points.max(2);
    for i in 0..n {
        let t = 253.0 + (353.0 - 253.0) * i as f64 / (n - 1) as f64;
        let Ok(st) = ThermoStateTPX::new(t, 1e5, x.clone()) else {
            continue;
        };
        if let Ok(em) = stability::mueller_margin(&model, &st) {
            out.push(t);
            out.push(em.margin / reference);
        }
    }
    out
}

/// The order-one scaling parameters and inequality sides for water.
#[wasm_bindgen]
pub struct RegimeNumbers {
    pub epsilon: f64,
    pub beta0: f64,
    pub alpha0: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub mach_squared: f64,
    pub reynolds: f64,
    pub fourier: f64,
}

#[wasm_bindgen]
pub fn regime_numbers(epsilon: f64) -> Option<RegimeNumbers> {
    let scales = ReferenceScales::water(1.0, 1e3);
    let es = regimes::epsilon_scaling(&scales, epsilon).ok()?;
    let ineq =
        regimes::leading_order_inequality(&scales, epsilon, scales.t_ref, &[], &[], &[]).ok()?;
    let nums = regimes::characteristic_numbers(&scales).ok()?;
    Some(RegimeNumbers {
        epsilon,
        beta0: es.beta0,
        alpha0: es.alpha0,
        lhs: ineq.lhs,
        rhs: ineq.rhs,
        mach_squared: nums.mach_squared,
        reynolds: nums.reynolds,
        fourier: nums.fourier,
    })
}
