//! State types and composition-simplex bookkeeping.
//!
//! Compositions live on the unit simplex { x : x_i >= 0, Σ x_i = 1 }. Fields
//! of composition only possess tangential derivatives; the tangential
//! calculus helpers at the bottom apply that projection to ordinary
//! (extension) gradients and Hessians, and the result is independent of the
//! extension.

use crate::constitutive::ConstitutiveModel;
use crate::error::{Error, Result};
use crate::numerics::SquareMatrix;
use serde::Serialize;

/// Mole fractions below this floor flag a state as "boundary"; models with
/// logarithmic terms reject boundary states rather than clamping them.
pub const X_FLOOR: f64 = 1e-12;

/// Tolerance on |Σ x_i - 1| accepted by the [`Composition`] constructor.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Molar masses of the constituents, kg/mol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MolarMasses(Vec<f64>);

impl MolarMasses {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParameter("need at least one species".into()));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "molar masses must be positive, got {m}"
            )));
        }
        Ok(MolarMasses(masses))
    }

    pub fn n_species(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Mean molar mass M(x) = Σ M_i x_i. Affine in x.
    pub fn mean(&self, x: &Composition) -> f64 {
        self.0
            .iter()
            .zip(x.as_slice())
            .map(|(m, xi)| m * xi)
            .sum()
    }
}

/// A point on the composition simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composition {
    x: Vec<f64>,
    interior: bool,
}

impl Composition {
    /// Accepts fractions whose sum is within [`SIMPLEX_TOL`] of one and
    /// renormalizes; anything further off is rejected to prevent silent
    /// simplex drift in sweeps.
    pub fn new(x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("empty composition".into()));
        }
        for (i, &v) in x.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::CompositionNegative { index: i, value: v });
            }
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::CompositionSum { sum });
        }
        Ok(Self::normalized(x, sum))
    }

    /// Builds a composition from arbitrary nonnegative weights (e.g. mole
    /// densities), normalizing whatever their sum is.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        for (i, &v) in w.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::CompositionNegative { index: i, value: v });
            }
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateState);
        }
        Ok(Self::normalized(w, sum))
    }

    fn normalized(x: &[f64], sum: f64) -> Self {
        let x: Vec<f64> = x.iter().map(|v| v / sum).collect();
        let interior = x.iter().all(|&v| v > X_FLOOR);
        Composition { x, interior }
    }

    pub fn pure(n: usize, species: usize) -> Self {
        let mut x = vec![0.0; n];
        x[species] = 1.0;
        Composition { x, interior: n == 1 }
    }

    pub fn equimolar(n: usize) -> Self {
        Composition {
            x: vec![1.0 / n as f64; n],
            interior: true,
        }
    }

    pub fn n_species(&self) -> usize {
        self.x.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.x[i]
    }

    /// True iff min x_i > [`X_FLOOR`].
    pub fn is_interior(&self) -> bool {
        self.interior
    }
}

/// Partial mass densities, kg/m³.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassDensities(Vec<f64>);

impl MassDensities {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::InvalidParameter("empty density vector".into()));
        }
        for (i, &v) in rho.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::CompositionNegative { index: i, value: v });
            }
        }
        Ok(MassDensities(rho))
    }

    pub fn n_species(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Total mass density ϱ = Σ ρ_i.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scale(&self, s: f64) -> MassDensities {
        MassDensities(self.0.iter().map(|r| r * s).collect())
    }
}

/// State in the measurable chart: temperature, pressure, composition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoStateTPX {
    pub temperature: f64,
    pub pressure: f64,
    pub composition: Composition,
}

impl ThermoStateTPX {
    pub fn new(temperature: f64, pressure: f64, composition: Composition) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(ThermoStateTPX {
            temperature,
            pressure,
            composition,
        })
    }
}

/// State in the main variables: temperature and partial mass densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoStateTRho {
    pub temperature: f64,
    pub densities: MassDensities,
}

impl ThermoStateTRho {
    pub fn new(temperature: f64, densities: MassDensities) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(ThermoStateTRho {
            temperature,
            densities,
        })
    }
}

/// Mole densities, total mole density and composition derived from partial
/// mass densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoleData {
    /// n_i = ρ_i / M_i, mol/m³
    pub mole_densities: Vec<f64>,
    /// n = Σ n_i, mol/m³
    pub total_mole_density: f64,
    /// x_i = n_i / n
    pub composition: Composition,
    /// υ = 1/n, m³/mol
    pub molar_volume: f64,
}

/// n_i = ρ_i / M_i, n = Σ n_i, x_i = n_i / n.
pub fn mole_data_from_densities(rho: &MassDensities, masses: &MolarMasses) -> Result<MoleData> {
    if rho.n_species() != masses.n_species() {
        return Err(Error::InvalidParameter(
            "density and molar-mass lengths differ".into(),
        ));
    }
    if rho.total() <= 0.0 {
        return Err(Error::DegenerateState);
    }
    let mole_densities: Vec<f64> = rho
        .as_slice()
        .iter()
        .zip(masses.as_slice())
        .map(|(r, m)| r / m)
        .collect();
    let total: f64 = mole_densities.iter().sum();
    let composition = Composition::from_weights(&mole_densities)?;
    Ok(MoleData {
        mole_densities,
        total_mole_density: total,
        composition,
        molar_volume: 1.0 / total,
    })
}

/// Mean molar mass M(x) = Σ M_i x_i; satisfies υ = M(x)/ϱ.
pub fn mean_molar_mass(x: &Composition, masses: &MolarMasses) -> f64 {
    masses.mean(x)
}

/// ρ_i = M_i x_i / υ̂(T, p, x) for a state in the measurable chart.
pub fn densities_from_tpx(state: &ThermoStateTPX, model: &ConstitutiveModel) -> Result<MassDensities> {
    let v = model.molar_volume(state)?;
    let rho = state
        .composition
        .as_slice()
        .iter()
        .zip(model.molar_masses.as_slice())
        .map(|(xi, mi)| mi * xi / v)
        .collect();
    MassDensities::new(rho)
}

/// Tangential derivative of a field on the simplex from an extension
/// gradient: (∂ᵗ_i φ) = φ_{x_i} - Σ_j x_j φ_{x_j} = D_x φ · [eⁱ - x].
pub fn tangential_gradient(grad: &[f64], x: &Composition) -> Vec<f64> {
    let dot: f64 = grad
        .iter()
        .zip(x.as_slice())
        .map(|(g, xi)| g * xi)
        .sum();
    grad.iter().map(|g| g - dot).collect()
}

/// Tangential Hessian form from a (symmetric) extension Hessian:
/// H_{ij} = D²φ [eⁱ - x] · [eʲ - x].
pub fn tangential_hessian(hess: &SquareMatrix, x: &Composition) -> SquareMatrix {
    let n = x.n_species();
    let xs = x.as_slice();
    // D²φ[eⁱ-x]·[eʲ-x] = H_ij - Σ_k x_k H_kj - Σ_l x_l H_il + Σ_kl x_k x_l H_kl;
    // grouped so the output stays bitwise symmetric
    let dots: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| xs[k] * hess.get(k, j)).sum())
        .collect();
    let full: f64 = (0..n).map(|k| xs[k] * dots[k]).sum();
    SquareMatrix::from_fn(n, |i, j| hess.get(i, j) - (dots[j] + dots[i]) + full)
}
