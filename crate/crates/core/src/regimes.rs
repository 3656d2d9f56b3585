//! Nondimensionalization, characteristic numbers and the small-compressibility
//! scaling: β Tᴿ = β₀ √ε and pᴿ/K = α₀ ε with β₀, α₀ of order one. The
//! leading-order expansion-versus-compressibility inequality, the
//! leading-order divergence constraint and the coefficients of the buoyancy
//! limit system all follow from these two parameters.

use crate::error::{Error, Result};
use serde::Serialize;

/// Reference scales for nondimensionalization. Defaults are liquid water
/// near (293 K, 1 bar).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceScales {
    /// length scale, m
    pub length: f64,
    /// time scale, s
    pub time: f64,
    /// reference temperature, K
    pub t_ref: f64,
    /// reference pressure, Pa
    pub p_ref: f64,
    /// solvent molar volume, m³/mol
    pub v_solvent: f64,
    /// solvent molar mass, kg/mol
    pub m_solvent: f64,
    /// viscosity, Pa s
    pub viscosity: f64,
    /// heat conductivity, W/(K m)
    pub conductivity: f64,
    /// specific heat, J/(kg K)
    pub cp: f64,
    /// gravity, m/s²
    pub gravity: f64,
    /// thermal expansion coefficient, 1/K
    pub beta: f64,
    /// bulk modulus, Pa
    pub modulus: f64,
}

impl ReferenceScales {
    pub fn water(length: f64, time: f64) -> Self {
        ReferenceScales {
            length,
            time,
            t_ref: 293.0,
            p_ref: 1e5,
            v_solvent: 1e-3 / 55.4,
            m_solvent: 0.0180153,
            viscosity: 1e-3,
            conductivity: 0.6,
            cp: 4.18e3,
            gravity: 9.81,
            beta: 2.07e-4,
            modulus: 2.18e9,
        }
    }

    pub fn velocity(&self) -> f64 {
        self.length / self.time
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.length,
            self.time,
            self.t_ref,
            self.p_ref,
            self.v_solvent,
            self.m_solvent,
            self.viscosity,
            self.conductivity,
            self.cp,
            self.gravity,
            self.beta,
            self.modulus,
        ];
        if fields.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidParameter(
                "all reference scales must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mach², Reynolds, Froude², Fourier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicNumbers {
    pub mach_squared: f64,
    pub reynolds: f64,
    pub froude_squared: f64,
    pub fourier: f64,
}

/// Ma² = L₀² M_S/(pᴿ υ_Sᴿ t₀²), Re = M_S L₀²/(ηᴿ υ_Sᴿ t₀),
/// Fr² = v₀²/(b L₀), Fo = κᴿ υ_Sᴿ t₀/(M_S c_pᴿ L₀²).
pub fn characteristic_numbers(scales: &ReferenceScales) -> Result<CharacteristicNumbers> {
    scales.validate()?;
    let l = scales.length;
    let t = scales.time;
    Ok(CharacteristicNumbers {
        mach_squared: l * l * scales.m_solvent / (scales.p_ref * scales.v_solvent * t * t),
        reynolds: scales.m_solvent * l * l / (scales.viscosity * scales.v_solvent * t),
        froude_squared: scales.velocity() * scales.velocity() / (scales.gravity * l),
        fourier: scales.conductivity * scales.v_solvent * t
            / (scales.m_solvent * scales.cp * l * l),
    })
}

/// The order-one parameters of the small-compressibility scaling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonScaling {
    pub epsilon: f64,
    /// β₀ = β Tᴿ / √ε
    pub beta0: f64,
    /// α₀ = pᴿ/(K ε)
    pub alpha0: f64,
}

pub fn epsilon_scaling(scales: &ReferenceScales, epsilon: f64) -> Result<EpsilonScaling> {
    scales.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    Ok(EpsilonScaling {
        epsilon,
        beta0: scales.beta * scales.t_ref / epsilon.sqrt(),
        alpha0: scales.p_ref / (scales.modulus * epsilon),
    })
}

/// Both sides of the leading-order inequality; ε cancels, so the numbers are
/// scale-free.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityMargin {
    /// β₀²
    pub lhs: f64,
    /// (c_p Tᴿ M_S/(pᴿ υ_Sᴿ)) α₀ (Tᴿ/T) · composition bracket
    pub rhs: f64,
    pub margin: f64,
}

/// Leading order of the expansion/compressibility inequality for a mixture:
/// solute species are indexed 1..N-1 with the solvent last. `x` holds the
/// solute mole fractions, `m_ratio[i] = M_i/M_S`, `v_ratio[i] = υᴿ_i/υ_Sᴿ`.
pub fn leading_order_inequality(
    scales: &ReferenceScales,
    epsilon: f64,
    temperature: f64,
    solute_x: &[f64],
    m_ratio: &[f64],
    v_ratio: &[f64],
) -> Result<InequalityMargin> {
    if solute_x.len() != m_ratio.len() || solute_x.len() != v_ratio.len() {
        return Err(Error::InvalidParameter(
            "solute fraction/ratio lengths differ".into(),
        ));
    }
    let es = epsilon_scaling(scales, epsilon)?;
    let mass_bracket: f64 = 1.0
        + solute_x
            .iter()
            .zip(m_ratio)
            .map(|(x, m)| (m - 1.0) * x)
            .sum::<f64>();
    let vol_bracket: f64 = 1.0
        + solute_x
            .iter()
            .zip(v_ratio)
            .map(|(x, v)| (v - 1.0) * x)
            .sum::<f64>();
    if vol_bracket <= 0.0 || mass_bracket <= 0.0 {
        return Err(Error::UnphysicalComposition(format!(
            "bracket ratio not positive (mass {mass_bracket}, volume {vol_bracket})"
        )));
    }
    let lhs = es.beta0 * es.beta0;
    let rhs = scales.cp * scales.t_ref * scales.m_solvent / (scales.p_ref * scales.v_solvent)
        * es.alpha0
        * (scales.t_ref / temperature)
        * mass_bracket
        / vol_bracket;
    Ok(InequalityMargin {
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// Leading-order velocity divergence from composition rates:
/// -div v₀ = Σ (M_j/M_S - 1) ẋ_j / (1 + Σ (M_j/M_S - 1) x_j)
///           - Σ (υᴿ_j/υ_Sᴿ - 1) ẋ_j / (1 + Σ (υᴿ_j/υ_Sᴿ - 1) x_j).
///
/// Returns (div v₀, dilute flag): the flag is set when every solute fraction
/// is below √ε, the regime where div v₀ = 0 is exactly enforceable.
pub fn divergence_leading_order(
    solute_x: &[f64],
    solute_x_rates: &[f64],
    m_ratio: &[f64],
    v_ratio: &[f64],
    epsilon: f64,
) -> Result<(f64, bool)> {
    if solute_x.len() != solute_x_rates.len()
        || solute_x.len() != m_ratio.len()
        || solute_x.len() != v_ratio.len()
    {
        return Err(Error::InvalidParameter("length mismatch".into()));
    }
    let mass_den: f64 = 1.0
        + solute_x
            .iter()
            .zip(m_ratio)
            .map(|(x, m)| (m - 1.0) * x)
            .sum::<f64>();
    let vol_den: f64 = 1.0
        + solute_x
            .iter()
            .zip(v_ratio)
            .map(|(x, v)| (v - 1.0) * x)
            .sum::<f64>();
    if mass_den <= 0.0 || vol_den <= 0.0 {
        return Err(Error::UnphysicalComposition(
            "denominator not positive".into(),
        ));
    }
    let mass_num: f64 = solute_x_rates
        .iter()
        .zip(m_ratio)
        .map(|(r, m)| (m - 1.0) * r)
        .sum();
    let vol_num: f64 = solute_x_rates
        .iter()
        .zip(v_ratio)
        .map(|(r, v)| (v - 1.0) * r)
        .sum();
    let neg_div = mass_num / mass_den - vol_num / vol_den;
    let dilute = solute_x.iter().all(|x| *x <= epsilon.sqrt());
    Ok((-neg_div, dilute))
}

/// Coefficients of the buoyancy-limit momentum/energy system and the
/// expanded volume law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoussinesqReport {
    pub numbers: CharacteristicNumbers,
    pub scaling: EpsilonScaling,
    /// buoyancy forcing is -β₀ (T₀ - 1) in the momentum equation
    pub buoyancy_coefficient: f64,
    /// viscous coefficient 1/Re
    pub viscous_coefficient: f64,
    /// heat-flux coefficient Fo
    pub heat_coefficient: f64,
    /// the fixed ratio Fr²/Ma carried by the limit (reported, not constrained)
    pub froude_mach_ratio: f64,
    /// order of the pressure term acting as the constraint multiplier
    pub lagrange_multiplier_order: usize,
    /// expanded volume law coefficients: υ = Σ υᴿ_i x_i (1 + c₁ √ε (T'-1)
    /// + [c₂ (T'-1)² - c₃ (p'-1)] ε)
    pub volume_order_sqrt_eps: f64,
    pub volume_order_eps_thermal: f64,
    pub volume_order_eps_pressure: f64,
    /// solute fractions below this are "dilute" (div v = 0 regime)
    pub dilute_threshold: f64,
}

pub fn boussinesq_report(scales: &ReferenceScales, epsilon: f64) -> Result<BoussinesqReport> {
    let numbers = characteristic_numbers(scales)?;
    let scaling = epsilon_scaling(scales, epsilon)?;
    Ok(BoussinesqReport {
        buoyancy_coefficient: scaling.beta0,
        viscous_coefficient: 1.0 / numbers.reynolds,
        heat_coefficient: numbers.fourier,
        froude_mach_ratio: numbers.froude_squared / numbers.mach_squared.sqrt(),
        lagrange_multiplier_order: 2,
        volume_order_sqrt_eps: scaling.beta0,
        volume_order_eps_thermal: scaling.beta0 * scaling.beta0,
        volume_order_eps_pressure: scaling.alpha0,
        dilute_threshold: epsilon.sqrt(),
        numbers,
        scaling,
    })
}

/// The expanded volume law at (T', p') = (T/Tᴿ, p/pᴿ), per unit Σ υᴿ_i x_i.
pub fn expanded_volume_factor(scaling: &EpsilonScaling, t_prime: f64, p_prime: f64) -> f64 {
    let e = scaling.epsilon;
    1.0 + scaling.beta0 * (t_prime - 1.0) * e.sqrt()
        + (scaling.beta0 * scaling.beta0 * (t_prime - 1.0) * (t_prime - 1.0)
            - scaling.alpha0 * (p_prime - 1.0))
            * e
}

/// The exact law under the ε-scaling, same normalization.
pub fn exact_volume_factor(scaling: &EpsilonScaling, t_prime: f64, p_prime: f64) -> f64 {
    let e = scaling.epsilon;
    1.0 / (1.0 - scaling.beta0 * e.sqrt() * (t_prime - 1.0) + scaling.alpha0 * e * (p_prime - 1.0))
}
