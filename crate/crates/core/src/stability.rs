//! Second-law consistency audits: convexity of ρ ↦ f, concavity of T ↦ f,
//! the thermal-expansion/compressibility inequality, and the pressure-sweep
//! definiteness analysis that forces a composition-linear volume in the
//! globally stable incompressible limit.
//!
//! The Hessian in the (T, p, x) chart splits into three matrices
//!
//!   Â  — pressure-integrated composition curvature of υ̂,
//!   B̂  — the rank-one compressibility term λ ξ ⊗ ξ with λ = -υ̂/∂_p υ̂,
//!   Ĉ  — curvature of the thermal data,
//!
//! and B̂ is the only unbounded piece as ∂_p υ̂ → 0. On the complement of ξ
//! the remaining operator must stay positive definite, which fails at a
//! finite pressure whenever υ̂ has composition curvature.

use crate::constitutive::{ConstitutiveModel, SampleRegion};
use crate::error::{Error, Result};
use crate::numerics::{householder_complement, SquareMatrix};
use crate::potentials;
use crate::state::{
    densities_from_tpx, mean_molar_mass, tangential_gradient, tangential_hessian, ThermoStateTPX,
};
use serde::Serialize;

/// Definiteness margin below which an eigenvalue counts as marginal rather
/// than a hard pass/fail: homogeneous directions produce legitimate zeros.
pub const DEFINITENESS_FLOOR: f64 = 1e-10;

/// The three-matrix split of the chart Hessian.
#[derive(Debug, Clone, Serialize)]
pub struct HessianDecomposition {
    pub a: SquareMatrix,
    pub b: SquareMatrix,
    pub c: SquareMatrix,
    /// λ = -υ̂ / ∂_p υ̂, Pa·(m³/mol)-free scale of the rank-one term
    pub lambda: f64,
    /// ξ_i = (υ̂ + ∂ᵗ_{x_i} υ̂)/M_i, the rank-one direction
    pub xi: Vec<f64>,
    /// true when ∂_p υ̂ vanished and λ was flagged +∞ (B omitted)
    pub incompressible_point: bool,
}

impl HessianDecomposition {
    pub fn total(&self) -> SquareMatrix {
        self.a.add(&self.b).add(&self.c)
    }
}

/// Â, B̂, Ĉ at a chart state.
pub fn hessian_decomposition(
    model: &ConstitutiveModel,
    state: &ThermoStateTPX,
) -> Result<HessianDecomposition> {
    let t = state.temperature;
    let p = state.pressure;
    let x = &state.composition;
    let xs = x.as_slice();
    let n = xs.len();
    let masses = model.molar_masses.as_slice();
    let m_mean = mean_molar_mass(x, &model.molar_masses);

    let vol = model.volume_eval(t, p, xs)?;
    let prim = model.volume_primitive(t, p, xs)?;
    let v = vol.value;

    // Â from the pressure integral of the tangential Hessian of υ̂
    let prim_tang = tangential_hessian(&prim.hess_x, x);
    let a = SquareMatrix::from_fn(n, |i, j| v / (masses[i] * masses[j]) * prim_tang.get(i, j));

    // B̂ = λ ξ ⊗ ξ
    let tg = tangential_gradient(&vol.grad_x, x);
    let xi: Vec<f64> = (0..n).map(|i| (v + tg[i]) / masses[i]).collect();
    let incompressible_point = vol.d_p.abs() < crate::eos::INCOMPRESSIBLE_GUARD * v.abs();
    let (lambda, b) = if incompressible_point {
        (f64::INFINITY, SquareMatrix::zeros(n))
    } else {
        let lambda = -v / vol.d_p;
        (lambda, SquareMatrix::outer(&xi, lambda))
    };

    // Ĉ from F(T, x) = -I₂ - T ŝ⁰⁰ + ĥ⁰⁰
    let i2 = model.cp_double_integral(t, xs)?;
    let s00 = model.s00(xs)?;
    let h00 = model.h00(xs)?;
    let mut f_field = crate::constitutive::FieldEval::zero(n);
    f_field.axpy(-1.0, &i2);
    f_field.axpy(-t, &s00);
    f_field.axpy(1.0, &h00);
    let f_tg = tangential_gradient(&f_field.grad, x);
    let f_th = tangential_hessian(&f_field.hess, x);
    let c = SquareMatrix::from_fn(n, |i, j| {
        m_mean * v / (masses[i] * masses[j]) * f_th.get(i, j)
            + v / masses[i] * (1.0 - m_mean / masses[j]) * f_tg[i]
            + v / masses[j] * (1.0 - m_mean / masses[i]) * f_tg[j]
    });

    Ok(HessianDecomposition {
        a,
        b,
        c,
        lambda,
        xi,
        incompressible_point,
    })
}

/// Margins of the thermal-expansion/compressibility inequality at one state.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionMargin {
    /// -(∂_T υ̂)² - (ĉ_p M/T) ∂_p υ̂; nonnegative for a consistent model
    pub margin: f64,
    /// ∂_p (M û) = -T ∂_T υ̂ - p ∂_p υ̂ (molar internal-energy slope)
    pub du_dp_molar: f64,
}

/// The inequality (∂_T υ̂)² ≤ -(ĉ_p M/T) ∂_p υ̂ as a signed margin, with the
/// specific heat taken at the state's own pressure (its pressure dependence
/// is fixed by the volume law). This makes the margin chart-invariant:
/// it equals (M/T)(-∂_p υ̂) c_v through the heat-capacity difference.
pub fn mueller_margin(model: &ConstitutiveModel, state: &ThermoStateTPX) -> Result<ExpansionMargin> {
    let t = state.temperature;
    let xs = state.composition.as_slice();
    let vol = model.volume_eval(t, state.pressure, xs)?;
    let m_mean = mean_molar_mass(&state.composition, &model.molar_masses);
    let cp0 = model.cp(t, xs)?.value;
    let prim = model.volume_primitive(t, state.pressure, xs)?;
    let cp = cp0 - t / m_mean * prim.d_tt;
    Ok(ExpansionMargin {
        margin: -vol.d_t * vol.d_t - cp * m_mean / t * vol.d_p,
        du_dp_molar: -t * vol.d_t - state.pressure * vol.d_p,
    })
}

/// One sampled state in a stability report. Hessian-derived fields are
/// `None` at (near-)incompressible states where the rank-one term blows up;
/// the inequality margins remain meaningful there.
#[derive(Debug, Clone, Serialize)]
pub struct StabilitySample {
    pub temperature: f64,
    pub pressure: f64,
    pub composition: Vec<f64>,
    /// smallest eigenvalue of the full Hessian
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    /// smallest eigenvalue of the Hessian restricted to {ξ}⊥
    pub lambda_min_perp: Option<f64>,
    /// ∂²f/∂T² (negative required)
    pub d2f_dt2: f64,
    /// thermal-expansion/compressibility margin (nonnegative required)
    pub mueller_margin: f64,
    /// (∂_Tυ̂)²/∂_pυ̂ - ∫∂²_TTυ̂ + (M/T)ĉ_p (positive required; equivalent to
    /// -υ̂ ∂²_TT f > 0)
    pub compat_margin: f64,
    pub verdict: SampleVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleVerdict {
    Stable,
    Marginal,
    Unstable,
}

/// Region verdicts with worst offenders.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub samples: Vec<StabilitySample>,
    pub stable: bool,
    pub worst_lambda_min: f64,
    pub worst_d2f_dt2: f64,
    pub worst_mueller: f64,
    /// states that failed, most negative eigenvalue first
    pub offenders: Vec<StabilitySample>,
}

/// Sweeps a sampled region and audits convexity in ρ, concavity in T and the
/// expansion inequality. Reporting only; broken states land in `offenders`.
pub fn stability_report(model: &ConstitutiveModel, region: &SampleRegion) -> StabilityReport {
    let mut samples = Vec::new();
    for t in region.temperatures() {
        for p in region.pressures() {
            for x in region.compositions(model.n_species()) {
                let Ok(state) = ThermoStateTPX::new(t, p, x) else {
                    continue;
                };
                if let Ok(sample) = stability_sample(model, &state) {
                    samples.push(sample);
                }
            }
        }
    }
    let stable = !samples.is_empty()
        && samples
            .iter()
            .all(|s| s.verdict == SampleVerdict::Stable);
    let worst_lambda_min = samples
        .iter()
        .filter_map(|s| s.lambda_min)
        .fold(f64::INFINITY, f64::min);
    let worst_d2f_dt2 = samples
        .iter()
        .map(|s| s.d2f_dt2)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_mueller = samples
        .iter()
        .map(|s| s.mueller_margin)
        .fold(f64::INFINITY, f64::min);
    let mut offenders: Vec<StabilitySample> = samples
        .iter()
        .filter(|s| s.verdict == SampleVerdict::Unstable)
        .cloned()
        .collect();
    offenders.sort_by(|a, b| {
        let ka = a.lambda_min.unwrap_or(f64::INFINITY).min(a.mueller_margin);
        let kb = b.lambda_min.unwrap_or(f64::INFINITY).min(b.mueller_margin);
        ka.partial_cmp(&kb).unwrap()
    });
    offenders.truncate(16);
    StabilityReport {
        samples,
        stable,
        worst_lambda_min,
        worst_d2f_dt2,
        worst_mueller,
        offenders,
    }
}

fn stability_sample(model: &ConstitutiveModel, state: &ThermoStateTPX) -> Result<StabilitySample> {
    let t = state.temperature;
    let xs = state.composition.as_slice();
    let em = mueller_margin(model, state)?;

    let vol = model.volume_eval(t, state.pressure, xs)?;
    let prim = model.volume_primitive(t, state.pressure, xs)?;
    let cp = model.cp(t, xs)?.value;
    let m_mean = mean_molar_mass(&state.composition, &model.molar_masses);
    let compat_margin = vol.d_t * vol.d_t / vol.d_p - prim.d_tt + m_mean / t * cp;
    // -υ̂ ∂²_TT f in the chart: sign information survives even where the
    // compressibility term diverges
    let d2f_dt2 = if vol.d_p < 0.0 {
        (-vol.d_t * vol.d_t / vol.d_p + prim.d_tt - m_mean / t * cp) / vol.value
    } else {
        f64::INFINITY
    };

    // Hessian pieces are only defined away from the incompressible blow-up
    let rho = densities_from_tpx(state, model)?;
    let hessian_part = potentials::hessian_at(model, t, &rho, state.pressure).ok();
    let (lambda_min, lambda_max, lambda_min_perp) = match &hessian_part {
        Some(h) => {
            let eig = h.sym_eigenvalues();
            let perp = if state.composition.n_species() > 1 {
                let deco = hessian_decomposition(model, state)?;
                let basis = householder_complement(&deco.xi);
                h.restrict(&basis).min_eigenvalue()
            } else {
                eig[0]
            };
            (Some(eig[0]), Some(*eig.last().unwrap()), Some(perp))
        }
        None => (None, None, None),
    };

    let hessian_bad = match (lambda_min, lambda_max) {
        (Some(lo), Some(hi)) => lo < -DEFINITENESS_FLOOR * hi.abs().max(1.0),
        _ => false,
    };
    let hessian_good = match (lambda_min, lambda_max) {
        (Some(lo), Some(hi)) => lo > DEFINITENESS_FLOOR * hi.abs().max(1.0),
        _ => false,
    };
    let verdict = if hessian_bad || d2f_dt2 > 0.0 || em.margin < 0.0 {
        SampleVerdict::Unstable
    } else if hessian_good && d2f_dt2 < 0.0 && em.margin >= 0.0 {
        SampleVerdict::Stable
    } else {
        SampleVerdict::Marginal
    };
    Ok(StabilitySample {
        temperature: state.temperature,
        pressure: state.pressure,
        composition: xs.to_vec(),
        lambda_min,
        lambda_max,
        lambda_min_perp,
        d2f_dt2,
        mueller_margin: em.margin,
        compat_margin,
        verdict,
    })
}

/// Outcome of scanning the ξ-complement operator over pressure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PressureSweepOutcome {
    /// positive definite over the whole scanned range
    Pass,
    /// first pressure (smallest |p - p⁰|) where λ_min ≤ 0
    FailsAt { pressure: f64 },
}

/// Scans the pressure-affine operator Â(p) + Ĉ restricted to {ξ}⊥ over a
/// range around p⁰ and reports the first definiteness failure. Â(p) uses the
/// frozen reference-isobar curvature (p - p⁰) D²ᵗυ̂(T, p⁰, x), which is the
/// only pressure-varying contribution once the compressibility term is
/// removed; a composition-curved volume therefore always fails at some
/// finite pressure.
pub fn pressure_sweep_definiteness(
    model: &ConstitutiveModel,
    t: f64,
    x: &crate::state::Composition,
    max_offset: f64,
) -> Result<PressureSweepOutcome> {
    let xs = x.as_slice();
    let n = xs.len();
    if n < 2 {
        return Ok(PressureSweepOutcome::Pass);
    }
    let p0 = model.reference_pressure();
    let masses = model.molar_masses.as_slice();
    let m_mean = mean_molar_mass(x, &model.molar_masses);

    let vol0 = model.volume_eval(t, p0, xs)?;
    let v0 = vol0.value;
    let hess_tang = tangential_hessian(&vol0.hess_x, x);
    // slope matrix S: Â(p) = (p - p⁰) S
    let slope = SquareMatrix::from_fn(n, |i, j| v0 / (masses[i] * masses[j]) * hess_tang.get(i, j));

    let i2 = model.cp_double_integral(t, xs)?;
    let s00 = model.s00(xs)?;
    let h00 = model.h00(xs)?;
    let mut f_field = crate::constitutive::FieldEval::zero(n);
    f_field.axpy(-1.0, &i2);
    f_field.axpy(-t, &s00);
    f_field.axpy(1.0, &h00);
    let f_tg = tangential_gradient(&f_field.grad, x);
    let f_th = tangential_hessian(&f_field.hess, x);
    let c = SquareMatrix::from_fn(n, |i, j| {
        m_mean * v0 / (masses[i] * masses[j]) * f_th.get(i, j)
            + v0 / masses[i] * (1.0 - m_mean / masses[j]) * f_tg[i]
            + v0 / masses[j] * (1.0 - m_mean / masses[i]) * f_tg[j]
    });

    let tg = tangential_gradient(&vol0.grad_x, x);
    let xi: Vec<f64> = (0..n).map(|i| (v0 + tg[i]) / masses[i]).collect();
    let basis = householder_complement(&xi);

    let lambda_min_at = |offset: f64| -> f64 {
        let op = c.add(&slope.scale(offset));
        op.restrict(&basis).min_eigenvalue()
    };

    if lambda_min_at(0.0) <= 0.0 {
        return Ok(PressureSweepOutcome::FailsAt { pressure: p0 });
    }

    // geometric scan on both sides, then bisection on the crossing
    let mut first: Option<(f64, f64)> = None; // (|p - p⁰|, side)
    for side in [1.0, -1.0] {
        let mut prev = 0.0;
        let mut offset = max_offset * 1e-12;
        while offset <= max_offset {
            let lm = lambda_min_at(side * offset);
            if lm <= 0.0 {
                let mut lo = prev;
                let mut hi = offset;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if lambda_min_at(side * mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if first.map_or(true, |(f, _)| hi < f) {
                    first = Some((hi, side));
                }
                break;
            }
            prev = offset;
            offset *= 2.0;
        }
    }
    Ok(match first {
        Some((offset, side)) => PressureSweepOutcome::FailsAt {
            pressure: p0 + side * offset,
        },
        None => PressureSweepOutcome::Pass,
    })
}

/// Flat worst-offender table.
pub fn offenders_to_csv(report: &StabilityReport) -> String {
    let mut out = String::from(
        "T[K],p[Pa],lambda_min[Pa*(m3/kg)^2],d2f_dt2[Pa/K^2],mueller_margin[m6/(mol2*Pa)]\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::from("nan"), |x| format!("{x:e}"));
    for s in &report.offenders {
        out.push_str(&format!(
            "{},{},{},{:e},{:e}\n",
            s.temperature,
            s.pressure,
            opt(s.lambda_min),
            s.d2f_dt2,
            s.mueller_margin
        ));
    }
    out
}

/// Flat per-sample CSV block for a report.
pub fn report_to_csv(report: &StabilityReport) -> String {
    let mut out = String::from(
        "T[K],p[Pa],lambda_min[Pa*(m3/kg)^2],lambda_min_perp[Pa*(m3/kg)^2],d2f_dt2[Pa/K^2],mueller_margin[m6/(mol2*Pa)],verdict\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::from("nan"), |x| format!("{x:e}"));
    for s in &report.samples {
        out.push_str(&format!(
            "{},{},{},{},{:e},{:e},{:?}\n",
            s.temperature,
            s.pressure,
            opt(s.lambda_min),
            opt(s.lambda_min_perp),
            s.d2f_dt2,
            s.mueller_margin,
            s.verdict
        ));
    }
    out
}

/// Appendix inequality suite at one state: ∂_υ p̄ < 0 and ĉ_p > c̄_υ > 0.
/// Returns (dp_dv, cp, cv).
pub fn appendix_inequalities(
    model: &ConstitutiveModel,
    state: &ThermoStateTPX,
) -> Result<(f64, f64, f64)> {
    let vol = model.volume_eval(state.temperature, state.pressure, state.composition.as_slice())?;
    if vol.d_p >= 0.0 {
        return Err(Error::NonMonotone { p: state.pressure });
    }
    let dp_dv = 1.0 / vol.d_p;
    let (cp, cv, _) = potentials::heat_capacities(model, state)?;
    Ok((dp_dv, cp, cv))
}
