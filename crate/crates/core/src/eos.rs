//! The volume potential V(T, π, ρ) = n(ρ) υ̂(T, π, x(ρ)), its pressure
//! primitive, and inversion of the thermal equation of state V(T, p, ρ) = 1.
//!
//! V is positively homogeneous of degree one in ρ, so ρ · ∇_ρ V = V (Euler
//! identity) and ∂_{ρ_i} V = (υ̂ + ∂ᵗ_{x_i} υ̂)/M_i are the partial volumes
//! per unit mass.

use crate::constitutive::ConstitutiveModel;
use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;
use crate::state::{mole_data_from_densities, tangential_gradient, tangential_hessian, MassDensities, MoleData};
use serde::Serialize;

/// Relative tolerance on |V - 1| for the pressure solve.
pub const PRESSURE_TOL: f64 = 1e-10;

/// Below this |dV/dp| across the bracket the inversion is reported as
/// ill-posed instead of producing a pseudo-root.
pub const INCOMPRESSIBLE_GUARD: f64 = 1e-14;

/// The volume potential and its pressure primitive at one (T, π, ρ).
#[derive(Debug, Clone, Serialize)]
pub struct VolumePotentialEval {
    /// V = n υ̂, dimensionless
    pub v: f64,
    /// ∂V/∂π
    pub v_p: f64,
    /// ∂V/∂ρ_i, m³/kg
    pub v_rho: Vec<f64>,
    /// V̄ = ∫_{p⁰}^{π} V dp', Pa
    pub vbar: f64,
    /// ∂V̄/∂ρ_i, J/kg
    pub vbar_rho: Vec<f64>,
}

/// Extended evaluation used by the free-energy assembly.
#[derive(Debug, Clone)]
pub(crate) struct VolumePotentialFull {
    pub v: f64,
    pub v_p: f64,
    pub v_t: f64,
    pub v_tt: f64,
    pub v_rho: Vec<f64>,
    pub v_rho_rho: SquareMatrix,
    pub vbar: f64,
    pub vbar_tt: f64,
    pub vbar_rho: Vec<f64>,
    pub vbar_rho_rho: SquareMatrix,
}

/// Degree-one homogeneous lift of a chart field φ(x) to n(ρ) φ(x(ρ)):
/// value n φ, gradient (φ + ∂ᵗφ)/M_i, Hessian D²ᵗφ/(n M_i M_j).
pub(crate) fn homogeneous_lift(
    value: f64,
    grad_x: &[f64],
    hess_x: &SquareMatrix,
    mole: &MoleData,
    masses: &[f64],
) -> (f64, Vec<f64>, SquareMatrix) {
    let x = &mole.composition;
    let n = mole.total_mole_density;
    let tg = tangential_gradient(grad_x, x);
    let th = tangential_hessian(hess_x, x);
    let grad: Vec<f64> = (0..masses.len())
        .map(|i| (value + tg[i]) / masses[i])
        .collect();
    // divide by the commutative product M_i M_j first so the result stays
    // bitwise symmetric
    let hess = SquareMatrix::from_fn(masses.len(), |i, j| {
        th.get(i, j) / (masses[i] * masses[j]) / n
    });
    (n * value, grad, hess)
}

/// Evaluates V and V̄ at a free pressure variable π.
pub fn eval_v(
    model: &ConstitutiveModel,
    t: f64,
    pi: f64,
    rho: &MassDensities,
) -> Result<VolumePotentialEval> {
    let full = eval_v_full(model, t, pi, rho)?;
    Ok(VolumePotentialEval {
        v: full.v,
        v_p: full.v_p,
        v_rho: full.v_rho,
        vbar: full.vbar,
        vbar_rho: full.vbar_rho,
    })
}

pub(crate) fn eval_v_full(
    model: &ConstitutiveModel,
    t: f64,
    pi: f64,
    rho: &MassDensities,
) -> Result<VolumePotentialFull> {
    let mole = mole_data_from_densities(rho, &model.molar_masses)?;
    let x = mole.composition.as_slice();
    let masses = model.molar_masses.as_slice();
    let n = mole.total_mole_density;

    let vol = model.volume_eval(t, pi, x)?;
    let (v, v_rho, v_rho_rho) = homogeneous_lift(vol.value, &vol.grad_x, &vol.hess_x, &mole, masses);

    let prim = model.volume_primitive(t, pi, x)?;
    let (vbar, vbar_rho, vbar_rho_rho) =
        homogeneous_lift(prim.value, &prim.grad_x, &prim.hess_x, &mole, masses);

    Ok(VolumePotentialFull {
        v,
        v_p: n * vol.d_p,
        v_t: n * vol.d_t,
        v_tt: n * vol.d_tt,
        v_rho,
        v_rho_rho,
        vbar,
        vbar_tt: n * prim.d_tt,
        vbar_rho,
        vbar_rho_rho,
    })
}

/// Result of inverting V(T, p, ρ) = 1 for p.
#[derive(Debug, Clone, Serialize)]
pub struct PressureSolution {
    pub pressure: f64,
    /// |V(T, p, ρ) - 1| at the returned pressure
    pub residual: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Solves V(T, p, ρ) = 1 by geometric bracket expansion from p⁰ followed by
/// safeguarded Newton. Strict decrease of V in p makes the root unique.
pub fn solve_pressure(
    model: &ConstitutiveModel,
    t: f64,
    rho: &MassDensities,
) -> Result<PressureSolution> {
    let mole = mole_data_from_densities(rho, &model.molar_masses)?;
    let x = mole.composition.as_slice();
    let p0 = model.reference_pressure();
    let (p_inf, p_sup) = model.volume.pressure_thresholds(t, x);

    let v_at = |p: f64| -> Result<(f64, f64)> {
        let ev = model.volume_eval(t, p, x)?;
        Ok((
            mole.total_mole_density * ev.value - 1.0,
            mole.total_mole_density * ev.d_p,
        ))
    };

    let (f0, d0) = v_at(p0)?;
    if f0.abs() <= PRESSURE_TOL {
        return Ok(PressureSolution {
            pressure: p0,
            residual: f0.abs(),
            iterations: 0,
            bracket: (p0, p0),
        });
    }
    if d0 > 0.0 {
        return Err(Error::NonMonotone { p: p0 });
    }

    // V decreasing: V > 1 at p⁰ means the root lies above p⁰, else below.
    let upward = f0 > 0.0;
    let mut step = p0.abs().max(1.0);
    let mut lo = p0;
    let mut flo = f0;
    let mut hi = p0;
    let mut max_slope: f64 = d0.abs();
    let mut found = false;
    for _ in 0..200 {
        let cand = if upward {
            (hi + step).min(if p_sup.is_finite() {
                hi + 0.5 * (p_sup - hi)
            } else {
                hi + step
            })
        } else {
            let floor = if p_inf.is_finite() {
                lo - 0.5 * (lo - p_inf)
            } else {
                lo - step
            };
            (lo - step).max(floor)
        };
        let Ok((fc, dc)) = v_at(cand) else {
            break; // ran out of evaluable domain without a sign change
        };
        if dc > 0.0 {
            return Err(Error::NonMonotone { p: cand });
        }
        max_slope = max_slope.max(dc.abs());
        if upward {
            if fc <= 0.0 {
                lo = hi;
                hi = cand;
                found = true;
                break;
            }
            lo = cand;
            flo = fc;
            hi = cand;
        } else {
            if fc >= 0.0 {
                hi = lo;
                lo = cand;
                found = true;
                break;
            }
            hi = cand;
            lo = cand;
            flo = fc;
        }
        step *= 2.0;
    }
    let _ = flo;
    if max_slope < INCOMPRESSIBLE_GUARD {
        return Err(Error::IllPosed {
            threshold: INCOMPRESSIBLE_GUARD,
        });
    }
    if !found {
        return Err(Error::NoBracket {
            lo: if upward { p0 } else { p_inf },
            hi: if upward { p_sup } else { p0 },
        });
    }
    let (blo, bhi) = if lo < hi { (lo, hi) } else { (hi, lo) };

    let f = |p: f64| v_at(p).map(|(v, _)| v).unwrap_or(f64::NAN);
    let df = |p: f64| v_at(p).map(|(_, d)| d).unwrap_or(f64::NAN);
    // iterate well past the contract tolerance: a residual of 1e-10 in V
    // maps to a pressure error of 1e-10/|V_p|, which contaminates stiff
    // free-energy differences; Newton reaches f64 noise in a step or two
    let (pressure, iterations) =
        crate::numerics::solve_bracketed(f, Some(df), blo, bhi, 1e-15)?;
    let residual = f(pressure).abs();
    Ok(PressureSolution {
        pressure,
        residual,
        iterations,
        bracket: (blo, bhi),
    })
}

/// Verdict of a monotonicity sweep over a sampled region.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub pass: bool,
    /// min |∂V/∂p| over the sample set
    pub worst_margin: f64,
    /// states where ∂V/∂p >= 0, as (T, p)
    pub violations: Vec<(f64, f64)>,
}

/// Samples ∂_p V over a region of (T, p) at fixed composition direction.
pub fn check_monotonicity(
    model: &ConstitutiveModel,
    temperatures: &[f64],
    pressures: &[f64],
    rho: &MassDensities,
) -> MonotonicityReport {
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for &t in temperatures {
        for &p in pressures {
            let Ok(full) = eval_v_full(model, t, p, rho) else {
                continue;
            };
            if full.v_p >= 0.0 {
                violations.push((t, p));
            }
            worst = worst.min(full.v_p.abs());
        }
    }
    MonotonicityReport {
        pass: violations.is_empty(),
        worst_margin: worst,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{presets, GAS_CONSTANT};
    use crate::numerics;
    use crate::state::{densities_from_tpx, Composition, ThermoStateTPX};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ideal_mixture_volume_potential_matches_gibbs_slopes() {
        // V = Σ ∂_π g_i ρ_i and ∂_{ρ_i} V = ∂_π g_i for an ideal mixture
        let m = presets::ideal_gas_binary();
        let rho = MassDensities::new(vec![0.7, 0.4]).unwrap();
        let (t, pi) = (320.0, 2.1e5);
        let ev = eval_v(&m, t, pi, &rho).unwrap();
        let mut v_expect = 0.0;
        for i in 0..2 {
            let dg = numerics::central_diff(|p| m.ideal_gas_gibbs(i, t, p).unwrap(), pi);
            assert_relative_eq!(ev.v_rho[i], dg, max_relative = 1e-8);
            v_expect += dg * rho.get(i);
        }
        assert_relative_eq!(ev.v, v_expect, max_relative = 1e-8);
    }

    #[test]
    fn volume_potential_is_homogeneous() {
        let m = presets::volume_additive_binary();
        let rho = MassDensities::new(vec![300.0, 500.0]).unwrap();
        let doubled = rho.scale(2.0);
        let a = eval_v(&m, 300.0, 3e5, &rho).unwrap();
        let b = eval_v(&m, 300.0, 3e5, &doubled).unwrap();
        assert_relative_eq!(b.v, 2.0 * a.v, max_relative = 1e-14);
        assert_relative_eq!(b.vbar, 2.0 * a.vbar, max_relative = 1e-14);
    }

    #[test]
    fn euler_identity_for_v() {
        let m = presets::nonideal_binary();
        let rho = MassDensities::new(vec![250.0, 410.0]).unwrap();
        let ev = eval_v(&m, 305.0, 2e5, &rho).unwrap();
        let dot: f64 = ev
            .v_rho
            .iter()
            .zip(rho.as_slice())
            .map(|(g, r)| g * r)
            .sum();
        assert_relative_eq!(dot, ev.v, max_relative = 1e-12);
    }

    #[test]
    fn volume_additive_primitive_closed_form() {
        // V̄ = K s ln s at the solved pressure p = p⁰ + K(s-1),
        // with s = Σ (υ⁰⁰_i/M_i) ρ_i
        let m = presets::volume_additive_ideal_binary();
        let rho = MassDensities::new(vec![400.0, 380.0]).unwrap();
        let s: f64 = 1.8e-5 / 0.018015 * 400.0 + 5.8e-5 / 0.046068 * 380.0;
        let k = 2.0e9;
        let p = 1e5 + k * (s - 1.0);
        let ev = eval_v(&m, 298.0, p, &rho).unwrap();
        assert_relative_eq!(ev.vbar, k * s * s.ln(), max_relative = 1e-12);
    }

    #[test]
    fn pressure_solve_reference_isobar() {
        // s = 1 exactly: the root is p⁰
        let m = presets::volume_additive_ideal_binary();
        let x = Composition::new(&[0.3, 0.7]).unwrap();
        let state = ThermoStateTPX::new(298.0, 1e5, x).unwrap();
        let rho = densities_from_tpx(&state, &m).unwrap();
        let sol = solve_pressure(&m, 298.0, &rho).unwrap();
        assert_relative_eq!(sol.pressure, 1e5, max_relative = 1e-9);
    }

    #[test]
    fn pressure_solve_volume_additive_closed_form() {
        // p = p⁰ + K (Σ υ⁰⁰_i n_i - 1)
        let m = presets::volume_additive_ideal_binary();
        let rho = MassDensities::new(vec![520.0, 260.0]).unwrap();
        let s: f64 = 1.8e-5 / 0.018015 * 520.0 + 5.8e-5 / 0.046068 * 260.0;
        let sol = solve_pressure(&m, 298.0, &rho).unwrap();
        assert_relative_eq!(sol.pressure, 1e5 + 2.0e9 * (s - 1.0), max_relative = 1e-9);
        assert!(sol.residual <= PRESSURE_TOL);
    }

    #[test]
    fn pressure_solve_ideal_gas() {
        let m = presets::ideal_gas_binary();
        let rho = MassDensities::new(vec![0.9, 0.35]).unwrap();
        let t = 310.0;
        let n = 0.9 / 0.0280134 + 0.35 / 0.0319988;
        let sol = solve_pressure(&m, t, &rho).unwrap();
        assert_relative_eq!(sol.pressure, n * GAS_CONSTANT * t, max_relative = 1e-9);
    }

    #[test]
    fn primitive_derivative_recovers_v() {
        let m = presets::water_simple_law();
        let rho = MassDensities::new(vec![997.0]).unwrap();
        let t = 298.0;
        let pi = 4e5;
        let ev = eval_v(&m, t, pi, &rho).unwrap();
        let dvbar = numerics::central_diff_h(
            |p| eval_v(&m, t, p, &rho).unwrap().vbar,
            pi,
            1e-2 * pi,
        );
        assert_relative_eq!(dvbar, ev.v, max_relative = 1e-8);
    }

    #[test]
    fn solve_after_density_conversion_is_identity_on_pressure() {
        for m in [
            presets::volume_additive_binary(),
            presets::water_simple_law(),
            presets::nonideal_binary(),
            presets::ideal_gas_binary(),
        ] {
            let n = m.n_species();
            let x = Composition::equimolar(n);
            let (t, p) = (303.0, 7.3e5);
            let state = ThermoStateTPX::new(t, p, x).unwrap();
            let rho = densities_from_tpx(&state, &m).unwrap();
            let sol = solve_pressure(&m, t, &rho).unwrap();
            assert_relative_eq!(sol.pressure, p, max_relative = 1e-8);
        }
    }

    #[test]
    fn monotonicity_sweep_passes_nonideal_and_flags_flat_table() {
        let m = presets::nonideal_binary();
        let rho = MassDensities::new(vec![300.0, 300.0]).unwrap();
        let rep = check_monotonicity(
            &m,
            &[290.0, 310.0],
            &[5e4, 1e5, 1e6, 1e8],
            &rho,
        );
        assert!(rep.pass);
        assert!(rep.worst_margin > 0.0);

        // piecewise-constant in p: zero slope everywhere, flagged
        let csv = "T,p,x_1,value\n290,1e5,1,2e-5\n290,2e5,1,2e-5\n310,1e5,1,2e-5\n310,2e5,1,2e-5\n";
        let flat = crate::constitutive::ConstitutiveModel::new(
            crate::state::MolarMasses::new(vec![0.018]).unwrap(),
            crate::constitutive::VolumeLaw::Tabulated(
                crate::constitutive::TabulatedVolume::from_csv(csv).unwrap(),
            ),
            crate::constitutive::CaloricLaw::Uniform(crate::numerics::Polynomial::constant(4e3)),
            crate::constitutive::ReferenceData {
                t0: 300.0,
                p0: 1.5e5,
                s00: crate::constitutive::CompositionFn::mass_weighted(vec![0.0]),
                h00: crate::constitutive::CompositionFn::mass_weighted(vec![0.0]),
            },
        )
        .unwrap();
        let rho1 = MassDensities::new(vec![500.0]).unwrap();
        let rep = check_monotonicity(&flat, &[295.0, 305.0], &[1.2e5, 1.8e5], &rho1);
        assert!(!rep.pass);
    }

    #[test]
    fn near_incompressible_guard_reports_ill_posed() {
        // rigid band with no in-band modulus: dV/dp = 0 around p⁰
        let a = crate::constitutive::AFunction::isothermal(
            1.0,
            vec![0.0],
            SquareMatrix::zeros(1),
        );
        let m = crate::constitutive::ConstitutiveModel::new(
            crate::state::MolarMasses::new(vec![0.018]).unwrap(),
            crate::constitutive::VolumeLaw::Nonideal {
                n0: 5.0e4,
                p0: 1e5,
                a,
                comp: crate::constitutive::Compressibility::Banded {
                    lo: f64::NEG_INFINITY,
                    hi: f64::INFINITY,
                    softness: 1e14,
                    modulus: None,
                },
            },
            crate::constitutive::CaloricLaw::Uniform(crate::numerics::Polynomial::constant(4e3)),
            crate::constitutive::ReferenceData {
                t0: 300.0,
                p0: 1e5,
                s00: crate::constitutive::CompositionFn::mass_weighted(vec![0.0]),
                h00: crate::constitutive::CompositionFn::mass_weighted(vec![0.0]),
            },
        )
        .unwrap();
        // off the constraint surface so p⁰ is not already the root
        let rho = MassDensities::new(vec![0.018 * 5.2e4]).unwrap();
        let err = solve_pressure(&m, 300.0, &rho);
        assert!(
            matches!(err, Err(Error::IllPosed { .. })) || matches!(err, Err(Error::NoBracket { .. })),
            "expected ill-posed/no-bracket, got {err:?}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn euler_identity_random_states(
            r0 in 50.0f64..800.0, r1 in 50.0f64..800.0,
            t in 285.0f64..315.0,
        ) {
            let m = presets::volume_additive_binary();
            let rho = MassDensities::new(vec![r0, r1]).unwrap();
            let ev = eval_v(&m, t, 2e5, &rho).unwrap();
            let dot: f64 = ev.v_rho.iter().zip(rho.as_slice()).map(|(g, r)| g * r).sum();
            prop_assert!((dot - ev.v).abs() <= 1e-12 * ev.v.abs().max(1.0));
        }
    }
}
