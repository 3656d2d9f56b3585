//! Assembly of the Helmholtz free energy density from constitutive data and
//! every derived thermodynamic function.
//!
//! The free energy splits into a mechanically neutral part k(T, ρ) (degree-one
//! homogeneous, no pressure contribution) plus the mechanical part built from
//! the volume potential:
//!
//! f(T, ρ) = k(T, ρ) + p⁰ V(T, p⁰, ρ) + V̄(T, p(T, ρ), ρ) - p(T, ρ)
//!
//! Its gradient gives the chemical potentials and its Hessian carries the
//! rank-one compressibility term -V_ρ ⊗ V_ρ / V_p.

use crate::constitutive::{ConstitutiveModel, FieldEval};
use crate::eos::{self, homogeneous_lift, PressureSolution};
use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;
use crate::state::{mole_data_from_densities, MassDensities, ThermoStateTPX};
use serde::Serialize;

/// The mechanically neutral contribution k(T, ρ) with derivatives.
///
/// k = -ϱ (I₂(T,x) + T ŝ⁰⁰(x) - ĥ⁰⁰(x)) - p⁰ n υ̂(T, p⁰, x), positively
/// homogeneous of degree one in ρ, hence -k + ρ·∇k = 0.
#[derive(Debug, Clone, Serialize)]
pub struct MechanicallyNeutralPart {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SquareMatrix,
    pub d_tt: f64,
}

/// F(T, x) = -I₂ - T ŝ⁰⁰ + ĥ⁰⁰ with extension derivatives, plus F_T and F_TT.
struct ThermalField {
    f: FieldEval,
    f_tt: f64,
}

fn thermal_field(model: &ConstitutiveModel, t: f64, x: &[f64]) -> Result<ThermalField> {
    let n = x.len();
    let i2 = model.cp_double_integral(t, x)?;
    let cp = model.cp(t, x)?;
    let s00 = model.s00(x)?;
    let h00 = model.h00(x)?;
    let mut f = FieldEval::zero(n);
    f.axpy(-1.0, &i2);
    f.axpy(-t, &s00);
    f.axpy(1.0, &h00);
    Ok(ThermalField {
        f,
        f_tt: -cp.value / t,
    })
}

/// Evaluates k(T, ρ): the homogeneous lift of ϱ/n-weighted thermal data
/// minus the reference-isobar volume term.
pub fn mechanically_neutral_k(
    model: &ConstitutiveModel,
    t: f64,
    rho: &MassDensities,
) -> Result<MechanicallyNeutralPart> {
    let mole = mole_data_from_densities(rho, &model.molar_masses)?;
    let x = mole.composition.as_slice();
    let masses = model.molar_masses.as_slice();
    let p0 = model.reference_pressure();

    let th = thermal_field(model, t, x)?;
    // ϱ F(T, x(ρ)) = n · (M(x) F), a degree-one homogeneous lift of M F
    let m_mean: f64 = masses.iter().zip(x).map(|(mi, xi)| mi * xi).sum();
    let mf_value = m_mean * th.f.value;
    let mf_grad: Vec<f64> = (0..x.len())
        .map(|i| masses[i] * th.f.value + m_mean * th.f.grad[i])
        .collect();
    let mf_hess = SquareMatrix::from_fn(x.len(), |i, j| {
        masses[i] * th.f.grad[j] + masses[j] * th.f.grad[i] + m_mean * th.f.hess.get(i, j)
    });
    let (rho_f, rho_f_grad, rho_f_hess) =
        homogeneous_lift(mf_value, &mf_grad, &mf_hess, &mole, masses);

    let vol0 = model.volume_eval(t, p0, x)?;
    let (nv0, nv0_grad, nv0_hess) =
        homogeneous_lift(vol0.value, &vol0.grad_x, &vol0.hess_x, &mole, masses);

    let value = rho_f - p0 * nv0;
    let grad: Vec<f64> = rho_f_grad
        .iter()
        .zip(&nv0_grad)
        .map(|(a, b)| a - p0 * b)
        .collect();
    let hess = rho_f_hess.sub(&nv0_hess.scale(p0));
    let rho_total = rho.total();
    let n = mole.total_mole_density;
    let d_tt = rho_total * th.f_tt - p0 * n * vol0.d_tt;
    Ok(MechanicallyNeutralPart {
        value,
        grad,
        hess,
        d_tt,
    })
}

/// Everything at one (T, ρ) state, sharing a single pressure solve.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialBundle {
    /// free energy density, Pa
    pub f: f64,
    /// mass-based chemical potentials, J/kg
    pub mu: Vec<f64>,
    /// Hessian D²_ρρ f
    pub hessian: SquareMatrix,
    /// pressure from the equation of state, Pa
    pub pressure: f64,
    /// specific entropy, J/(kg K)
    pub entropy: f64,
    /// specific enthalpy, J/kg
    pub enthalpy: f64,
    /// specific internal energy, J/kg
    pub internal_energy: f64,
    /// specific Gibbs energy, J/kg
    pub gibbs: f64,
    /// specific heats, J/(kg K)
    pub cp: f64,
    pub cv: f64,
    /// ∂²f/∂T², Pa/K²
    pub d2f_dt2: f64,
    pub solver: PressureSolution,
}

/// f(T, ρ) alone.
pub fn free_energy(model: &ConstitutiveModel, t: f64, rho: &MassDensities) -> Result<f64> {
    let sol = eos::solve_pressure(model, t, rho)?;
    free_energy_at(model, t, rho, sol.pressure)
}

fn free_energy_at(model: &ConstitutiveModel, t: f64, rho: &MassDensities, p: f64) -> Result<f64> {
    let k = mechanically_neutral_k(model, t, rho)?;
    let at_ref = eos::eval_v(model, t, model.reference_pressure(), rho)?;
    let at_p = eos::eval_v(model, t, p, rho)?;
    Ok(k.value + model.reference_pressure() * at_ref.v + at_p.vbar - p)
}

/// μ_i = ∂f/∂ρ_i = p⁰ V_{ρ_i}(p⁰) + k_{ρ_i} + V̄_{ρ_i}(p(ρ)).
pub fn chemical_potentials(
    model: &ConstitutiveModel,
    t: f64,
    rho: &MassDensities,
) -> Result<Vec<f64>> {
    let sol = eos::solve_pressure(model, t, rho)?;
    let k = mechanically_neutral_k(model, t, rho)?;
    let at_ref = eos::eval_v(model, t, model.reference_pressure(), rho)?;
    let at_p = eos::eval_v(model, t, sol.pressure, rho)?;
    Ok((0..rho.n_species())
        .map(|i| model.reference_pressure() * at_ref.v_rho[i] + k.grad[i] + at_p.vbar_rho[i])
        .collect())
}

/// D²_ρρ f, symmetric by construction. Errors at incompressible points where
/// the rank-one term blows up.
pub fn hessian(model: &ConstitutiveModel, t: f64, rho: &MassDensities) -> Result<SquareMatrix> {
    let sol = eos::solve_pressure(model, t, rho)?;
    hessian_at(model, t, rho, sol.pressure)
}

pub(crate) fn hessian_at(
    model: &ConstitutiveModel,
    t: f64,
    rho: &MassDensities,
    p: f64,
) -> Result<SquareMatrix> {
    let k = mechanically_neutral_k(model, t, rho)?;
    let at_ref = eos::eval_v_full(model, t, model.reference_pressure(), rho)?;
    let at_p = eos::eval_v_full(model, t, p, rho)?;
    if at_p.v_p.abs() < eos::INCOMPRESSIBLE_GUARD {
        return Err(Error::RankOneBlowup {
            lambda: -at_p.v / at_p.v_p,
        });
    }
    let rank_one = SquareMatrix::outer(&at_p.v_rho, -1.0 / at_p.v_p);
    Ok(at_ref
        .v_rho_rho
        .scale(model.reference_pressure())
        .add(&k.hess)
        .add(&at_p.vbar_rho_rho)
        .add(&rank_one))
}

/// Full bundle at a (T, ρ) state.
pub fn evaluate(model: &ConstitutiveModel, t: f64, rho: &MassDensities) -> Result<PotentialBundle> {
    let sol = eos::solve_pressure(model, t, rho)?;
    let p = sol.pressure;
    let p0 = model.reference_pressure();
    let mole = mole_data_from_densities(rho, &model.molar_masses)?;
    let x = mole.composition.as_slice();
    let m_mean: f64 = model
        .molar_masses
        .as_slice()
        .iter()
        .zip(x)
        .map(|(mi, xi)| mi * xi)
        .sum();

    let k = mechanically_neutral_k(model, t, rho)?;
    let at_ref = eos::eval_v_full(model, t, p0, rho)?;
    let at_p = eos::eval_v_full(model, t, p, rho)?;

    let f = k.value + p0 * at_ref.v + at_p.vbar - p;
    let mu: Vec<f64> = (0..rho.n_species())
        .map(|i| p0 * at_ref.v_rho[i] + k.grad[i] + at_p.vbar_rho[i])
        .collect();
    let hessian = hessian_at(model, t, rho, p)?;

    let state = ThermoStateTPX::new(t, p, mole.composition.clone())?;
    let sf = state_functions(model, &state)?;
    let (cp, cv, _) = heat_capacities(model, &state)?;

    // ∂²_TT f = k_TT + p⁰ V_TT(p⁰) + ∫ V_TT dp' - V_T(p)²/V_p(p)
    let d2f_dt2 = k.d_tt + p0 * at_ref.v_tt + at_p.vbar_tt - at_p.v_t * at_p.v_t / at_p.v_p;

    let rho_total = rho.total();
    let _ = m_mean;
    Ok(PotentialBundle {
        f,
        mu,
        hessian,
        pressure: p,
        entropy: sf.entropy,
        enthalpy: sf.enthalpy,
        internal_energy: sf.internal_energy,
        gibbs: (f + p) / rho_total,
        cp,
        cv,
        d2f_dt2,
        solver: sol,
    })
}

/// Specific state functions in the (T, p, x) chart.
#[derive(Debug, Clone, Serialize)]
pub struct StateFunctions {
    pub gibbs: f64,
    pub enthalpy: f64,
    pub entropy: f64,
    pub internal_energy: f64,
    pub molar_volume: f64,
}

/// g, h, s, u, υ per the Gibbs representation:
/// M g = ∫ υ̂ dp' - M (I₂ + T ŝ⁰⁰ - ĥ⁰⁰),
/// M h = ∫ (υ̂ - T ∂_T υ̂) dp' + M (∫ ĉ_p dθ + ĥ⁰⁰),
/// ŝ = -(1/M) ∫ ∂_T υ̂ dp' + ∫ ĉ_p/θ dθ + ŝ⁰⁰.
pub fn state_functions(model: &ConstitutiveModel, state: &ThermoStateTPX) -> Result<StateFunctions> {
    let t = state.temperature;
    let p = state.pressure;
    let x = state.composition.as_slice();
    let m: f64 = model
        .molar_masses
        .as_slice()
        .iter()
        .zip(x)
        .map(|(mi, xi)| mi * xi)
        .sum();
    let prim = model.volume_primitive(t, p, x)?;
    let vol = model.volume_eval(t, p, x)?;
    let i2 = model.cp_double_integral(t, x)?.value;
    let i1 = model.cp_over_theta_integral(t, x)?.value;
    let ih = model.cp_integral(t, x)?.value;
    let s00 = model.s00(x)?.value;
    let h00 = model.h00(x)?.value;

    let gibbs = prim.value / m - (i2 + t * s00 - h00);
    let enthalpy = (prim.value - t * prim.d_t) / m + ih + h00;
    let entropy = -prim.d_t / m + i1 + s00;
    let internal_energy = enthalpy - p * vol.value / m;
    Ok(StateFunctions {
        gibbs,
        enthalpy,
        entropy,
        internal_energy,
        molar_volume: vol.value,
    })
}

/// (c_p, c_v, c_p - c_v) at a chart state.
///
/// c_p = ĉ_p(T, p⁰, x) - (T/M) ∫ ∂²_TT υ̂ dp' (the pressure dependence of the
/// specific heat is fixed by the volume law); the difference uses
/// c_p - c_v = -(T/M) (∂_T υ̂)² / ∂_p υ̂.
pub fn heat_capacities(
    model: &ConstitutiveModel,
    state: &ThermoStateTPX,
) -> Result<(f64, f64, f64)> {
    let t = state.temperature;
    let p = state.pressure;
    let x = state.composition.as_slice();
    let m: f64 = model
        .molar_masses
        .as_slice()
        .iter()
        .zip(x)
        .map(|(mi, xi)| mi * xi)
        .sum();
    let cp0 = model.cp(t, x)?.value;
    let prim = model.volume_primitive(t, p, x)?;
    let vol = model.volume_eval(t, p, x)?;
    let cp = cp0 - t / m * prim.d_tt;
    if vol.d_p >= 0.0 {
        return Err(Error::NonMonotone { p });
    }
    if vol.d_p.abs() < eos::INCOMPRESSIBLE_GUARD * vol.value.abs() {
        return Err(Error::CvUndefined);
    }
    let diff = -t / m * vol.d_t * vol.d_t / vol.d_p;
    Ok((cp, cp - diff, diff))
}

/// A user-supplied mechanically neutral part; homogeneity is validated by
/// sampling since nothing stronger is available for a black-box callback.
pub trait NeutralPartSource {
    fn value(&self, t: f64, rho: &MassDensities) -> Result<f64>;

    fn grad(&self, t: f64, rho: &MassDensities) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rho.n_species());
        for i in 0..rho.n_species() {
            let h = crate::numerics::fd_step(rho.get(i));
            let mut up = rho.as_slice().to_vec();
            let mut dn = up.clone();
            up[i] += h;
            dn[i] -= h;
            let fu = self.value(t, &MassDensities::new(up)?)?;
            let fd = self.value(t, &MassDensities::new(dn)?)?;
            out.push((fu - fd) / (2.0 * h));
        }
        Ok(out)
    }
}

/// Max relative homogeneity defect |k(λρ) - λ k(ρ)| / |λ k(ρ)| over sampled
/// scalings.
pub fn homogeneity_defect<S: NeutralPartSource>(
    source: &S,
    t: f64,
    rho: &MassDensities,
    scales: &[f64],
) -> Result<f64> {
    let base = source.value(t, rho)?;
    let mut worst: f64 = 0.0;
    for &lambda in scales {
        let scaled = source.value(t, &rho.scale(lambda))?;
        let expect = lambda * base;
        worst = worst.max((scaled - expect).abs() / expect.abs().max(1e-300));
    }
    Ok(worst)
}

/// f assembled from a user-supplied neutral part instead of the caloric data.
pub fn free_energy_with_neutral_part<S: NeutralPartSource>(
    model: &ConstitutiveModel,
    source: &S,
    t: f64,
    rho: &MassDensities,
) -> Result<f64> {
    let sol = eos::solve_pressure(model, t, rho)?;
    let at_ref = eos::eval_v(model, t, model.reference_pressure(), rho)?;
    let at_p = eos::eval_v(model, t, sol.pressure, rho)?;
    Ok(source.value(t, rho)? + model.reference_pressure() * at_ref.v + at_p.vbar - sol.pressure)
}
