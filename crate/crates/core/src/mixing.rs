//! Equilibrium cluster-formation model for binary mixing: a linear volume
//! law plus the association reaction W + E ⇌ C reproduces the nonlinear
//! excess-volume curve observed when mixing two fluids.
//!
//! The reaction extent has the closed form
//! γ = ½ (1 - sqrt(1 - 4 x (1 - x)/(1 + K(p)))) and the molar excess volume
//! is υᴱ = -Δυ γ.

use crate::constitutive::GAS_CONSTANT;
use crate::error::{Error, Result};
use serde::Serialize;

/// Constants of the cluster model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingModel {
    /// molar volume of the solvent (water), m³/mol
    pub v_water: f64,
    /// molar volume of the solute (ethanol), m³/mol
    pub v_ethanol: f64,
    /// molar volume of the cluster, m³/mol
    pub v_cluster: f64,
    /// reaction Gibbs energy Δgᴿ = gᴿ_W + gᴿ_E - gᴿ_C, J/mol
    pub dg_reaction: f64,
    pub temperature: f64,
    pub p_ref: f64,
}

impl MixingModel {
    pub fn new(
        v_water: f64,
        v_ethanol: f64,
        v_cluster: f64,
        dg_reaction: f64,
        temperature: f64,
        p_ref: f64,
    ) -> Result<Self> {
        if !(v_water > 0.0 && v_ethanol > 0.0 && v_cluster > 0.0) {
            return Err(Error::InvalidParameter(
                "molar volumes must be positive".into(),
            ));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter("temperature must be positive".into()));
        }
        Ok(MixingModel {
            v_water,
            v_ethanol,
            v_cluster,
            dg_reaction,
            temperature,
            p_ref,
        })
    }

    /// Normal conditions with user-chosen volume change and reaction energy.
    pub fn normal_conditions(dv: f64, dg_reaction: f64) -> Result<Self> {
        // water 18.07 mL/mol, ethanol 58.37 mL/mol at 298 K
        let v_water = 1.807e-5;
        let v_ethanol = 5.837e-5;
        Self::new(
            v_water,
            v_ethanol,
            v_water + v_ethanol - dv,
            dg_reaction,
            298.0,
            1e5,
        )
    }

    /// Δυ = υ_W + υ_E - υ_C; a negative excess volume requires Δυ > 0.
    pub fn dv(&self) -> f64 {
        self.v_water + self.v_ethanol - self.v_cluster
    }

    /// K(p) = exp(-(Δgᴿ + Δυ (p - pᴿ))/(R T)).
    pub fn equilibrium_constant(&self, p: f64) -> f64 {
        (-(self.dg_reaction + self.dv() * (p - self.p_ref)) / (GAS_CONSTANT * self.temperature))
            .exp()
    }

    /// Reaction extent γ(x, p) for initial ethanol fraction x ∈ [0, 1].
    ///
    /// Solves (x - γ)(1 - x - γ) = K γ (1 - γ) on the physical branch
    /// γ ≤ min{x, 1-x} ≤ ½; the discriminant 1 - 4x(1-x)/(1+K) is
    /// nonnegative for every x and K ≥ 0.
    pub fn reaction_extent(&self, x: f64, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "initial mole fraction must lie in [0, 1], got {x}"
            )));
        }
        let k = self.equilibrium_constant(p);
        let q = 4.0 * x * (1.0 - x) / (1.0 + k);
        // ½(1 - sqrt(1-q)) written cancellation-free for small q
        Ok(0.5 * q / (1.0 + (1.0 - q).max(0.0).sqrt()))
    }

    /// Molar excess volume υᴱ(x, p) = -Δυ γ(x, p).
    pub fn excess_volume(&self, x: f64, p: f64) -> Result<f64> {
        // + 0.0 folds the -0.0 of boundary compositions into plain zero
        Ok(-self.dv() * self.reaction_extent(x, p)? + 0.0)
    }

    /// Reaction extent for the generalized reaction κ_a W + κ_s E ⇌ C,
    /// solved numerically from the mass-action residual
    /// x_Wᵏᵃ x_Eᵏˢ = K' x_C. The (1, 1) closed form remains the
    /// authoritative path; this exists for stoichiometry exploration.
    pub fn reaction_extent_general(
        &self,
        kappa_a: f64,
        kappa_s: f64,
        x: f64,
        p: f64,
    ) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "initial mole fraction must lie in [0, 1], got {x}"
            )));
        }
        if kappa_a <= 0.0 || kappa_s <= 0.0 {
            return Err(Error::InvalidParameter(
                "stoichiometric coefficients must be positive".into(),
            ));
        }
        let dv = kappa_a * self.v_water + kappa_s * self.v_ethanol - self.v_cluster;
        let k = (-(self.dg_reaction + dv * (p - self.p_ref))
            / (GAS_CONSTANT * self.temperature))
            .exp();
        // moles per initial mole: W = 1-x-κa γ, E = x-κs γ, C = γ,
        // total B(γ) = 1 - (κa + κs - 1) γ
        let gamma_max = ((1.0 - x) / kappa_a).min(x / kappa_s);
        if gamma_max <= 0.0 {
            return Ok(0.0);
        }
        let residual = |g: f64| {
            let total = 1.0 - (kappa_a + kappa_s - 1.0) * g;
            let xw = (1.0 - x - kappa_a * g) / total;
            let xe = (x - kappa_s * g) / total;
            let xc = g / total;
            xw.powf(kappa_a) * xe.powf(kappa_s) - k * xc
        };
        // residual > 0 at γ = 0⁺ and < 0 at γ = γ_max⁻: bisect
        let mut lo = 0.0;
        let mut hi = gamma_max * (1.0 - 1e-15);
        if residual(hi) > 0.0 {
            return Ok(hi);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// (x, γ, υᴱ) rows over a uniform x grid.
    pub fn curve(&self, p: f64, points: usize) -> Result<Vec<(f64, f64, f64)>> {
        let mut rows = Vec::with_capacity(points);
        for i in 0..points {
            let x = i as f64 / (points - 1).max(1) as f64;
            let g = self.reaction_extent(x, p)?;
            rows.push((x, g, -self.dv() * g + 0.0));
        }
        Ok(rows)
    }
}
