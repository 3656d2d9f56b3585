//! Constitutive data: molar-volume laws, heat capacity at the reference
//! isobar, and reference entropy/enthalpy, bundled into a model.
//!
//! A model supplies everything the free-energy representation needs:
//!
//! * the thermal equation of state υ = υ̂(T, p, x) with its partials,
//! * the specific heat ĉ_p(T, p⁰, x) at a single reference pressure,
//! * ŝ⁰⁰(x) and ĥ⁰⁰(x) at the reference state (T⁰, p⁰).
//!
//! Built-in families carry analytic partials and closed-form pressure
//! primitives; tabulated data fall back to interpolant derivatives and
//! adaptive quadrature.

pub mod config;
pub mod presets;
mod tabulated;

pub use tabulated::{Curve1D, Table2D, TabulatedVolume};

use crate::error::{Error, Result};
use crate::numerics::{self, Polynomial, SquareMatrix};
use crate::state::{Composition, MolarMasses, ThermoStateTPX};
use serde::Serialize;

/// Universal gas constant, J/(mol K).
pub const GAS_CONSTANT: f64 = 8.31446261815324;

/// Molar volume together with every derivative the representation formulas
/// consume. Composition derivatives are extension derivatives; callers apply
/// the tangential projection where needed.
#[derive(Debug, Clone)]
pub struct VolumeEval {
    pub value: f64,
    pub d_p: f64,
    pub d_t: f64,
    pub d_tt: f64,
    pub grad_x: Vec<f64>,
    pub hess_x: SquareMatrix,
}

/// Pressure primitive W(T, p, x) = ∫_{p⁰}^{p} υ̂(T, p', x) dp' and its
/// derivatives under the integral sign.
#[derive(Debug, Clone)]
pub struct VolumePrimitive {
    pub value: f64,
    pub d_t: f64,
    pub d_tt: f64,
    pub grad_x: Vec<f64>,
    pub hess_x: SquareMatrix,
}

/// Tangential partials of the molar volume at one state.
#[derive(Debug, Clone)]
pub struct VolumePartials {
    pub d_p: f64,
    pub d_t: f64,
    pub tangential_grad: Vec<f64>,
    pub tangential_hess: SquareMatrix,
    /// step used when a finite-difference fallback produced the values
    pub fd_step: Option<f64>,
}

/// Composition dependence a(T, x) of the nonideal volume law: a low-order
/// polynomial in x with an optional temperature dependence.
///
/// a(T, x) = a₀ + g·x + ½ x·Q x + τ₁ u + ½ τ₂ u²  with u = (T - T_a)/T_a.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AFunction {
    pub constant: f64,
    pub linear: Vec<f64>,
    pub quadratic: SquareMatrix,
    pub t_linear: f64,
    pub t_quadratic: f64,
    pub t_anchor: f64,
}

impl AFunction {
    pub fn isothermal(constant: f64, linear: Vec<f64>, quadratic: SquareMatrix) -> Self {
        AFunction {
            constant,
            linear,
            quadratic,
            t_linear: 0.0,
            t_quadratic: 0.0,
            t_anchor: 1.0,
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let u = (t - self.t_anchor) / self.t_anchor;
        let lin: f64 = self.linear.iter().zip(x).map(|(g, xi)| g * xi).sum();
        self.constant
            + lin
            + 0.5 * self.quadratic.quadratic_form(x)
            + self.t_linear * u
            + 0.5 * self.t_quadratic * u * u
    }

    pub fn d_t(&self, t: f64) -> f64 {
        let u = (t - self.t_anchor) / self.t_anchor;
        (self.t_linear + self.t_quadratic * u) / self.t_anchor
    }

    pub fn d_tt(&self) -> f64 {
        self.t_quadratic / (self.t_anchor * self.t_anchor)
    }

    pub fn grad_x(&self, x: &[f64]) -> Vec<f64> {
        let qx = self.quadratic.mul_vec(x);
        self.linear.iter().zip(qx).map(|(g, q)| g + q).collect()
    }

    pub fn hess_x(&self) -> SquareMatrix {
        self.quadratic.clone()
    }
}

/// Pressure dependence of the nonideal law: either uniformly elastic or
/// elastic only outside a pressure band (the band becomes rigid in the
/// infinite-modulus limit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Compressibility {
    Linear {
        modulus: f64,
    },
    Banded {
        lo: f64,
        hi: f64,
        /// curvature scale of the out-of-band response, Pa²; smaller is stiffer
        softness: f64,
        /// in-band modulus; `None` means rigid in the band (the limit law)
        modulus: Option<f64>,
    },
}

impl Compressibility {
    /// c(p), the accumulated compression offset (dimensionless).
    pub fn offset(&self, p: f64, p0: f64) -> f64 {
        match self {
            Compressibility::Linear { modulus } => (p - p0) / modulus,
            Compressibility::Banded {
                lo,
                hi,
                softness,
                modulus,
            } => {
                let band = if p > *hi {
                    (p - hi) * (p - hi) / (2.0 * softness)
                } else if p < *lo {
                    -(p - lo) * (p - lo) / (2.0 * softness)
                } else {
                    0.0
                };
                band + modulus.map_or(0.0, |k| (p - p0) / k)
            }
        }
    }

    /// c'(p) >= 0.
    pub fn slope(&self, p: f64) -> f64 {
        match self {
            Compressibility::Linear { modulus } => 1.0 / modulus,
            Compressibility::Banded {
                lo,
                hi,
                softness,
                modulus,
            } => {
                let band = if p > *hi {
                    (p - hi) / softness
                } else if p < *lo {
                    (lo - p) / softness
                } else {
                    0.0
                };
                band + modulus.map_or(0.0, |k| 1.0 / k)
            }
        }
    }
}

/// The thermal equation of state family.
#[derive(Debug, Clone, Serialize)]
pub enum VolumeLaw {
    /// υ̂ = K/(p - p⁰ + K) · Σ υ⁰⁰_i x_i
    VolumeAdditive {
        modulus: f64,
        p0: f64,
        v00: Vec<f64>,
    },
    /// Σ υᴿ_i x_i / υ̂ = 1 - β(T - Tᴿ) + (p - pᴿ)/K
    SimpleLaw {
        v_ref: Vec<f64>,
        beta: f64,
        modulus: f64,
        t_ref: f64,
        p_ref: f64,
    },
    /// υ̂ = 1/(n⁰ (a(T,x) + c(p)))
    Nonideal {
        n0: f64,
        p0: f64,
        a: AFunction,
        comp: Compressibility,
    },
    /// υ̂ = R T / p with per-species statistical Gibbs functions
    IdealGas {
        z: Vec<f64>,
        h_ref: Vec<f64>,
        s_ref: Vec<f64>,
        t0: f64,
        p0: f64,
    },
    /// corner tables over (T, p), barycentric-linear in x
    Tabulated(TabulatedVolume),
}

impl VolumeLaw {
    pub fn n_species_hint(&self) -> Option<usize> {
        match self {
            VolumeLaw::VolumeAdditive { v00, .. } => Some(v00.len()),
            VolumeLaw::SimpleLaw { v_ref, .. } => Some(v_ref.len()),
            VolumeLaw::Nonideal { a, .. } => Some(a.linear.len()),
            VolumeLaw::IdealGas { z, .. } => Some(z.len()),
            VolumeLaw::Tabulated(t) => Some(t.n_species()),
        }
    }

    /// Pressure thresholds (p_inf, p_sup) of the declared domain at fixed
    /// temperature and composition. p_sup defaults to +∞.
    pub fn pressure_thresholds(&self, t: f64, x: &[f64]) -> (f64, f64) {
        match self {
            VolumeLaw::VolumeAdditive { modulus, p0, .. } => {
                if *modulus > 0.0 {
                    (p0 - modulus, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, p0 - modulus)
                }
            }
            VolumeLaw::SimpleLaw {
                beta,
                modulus,
                t_ref,
                p_ref,
                ..
            } => {
                // D(T, p) > 0  <=>  p > pᴿ - K (1 - β (T - Tᴿ)) for K > 0
                let lim = p_ref - modulus * (1.0 - beta * (t - t_ref));
                if *modulus > 0.0 {
                    (lim, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, lim)
                }
            }
            VolumeLaw::Nonideal { p0, a, comp, .. } => {
                let av = a.value(t, x);
                match comp {
                    Compressibility::Linear { modulus } => {
                        if *modulus > 0.0 {
                            (p0 - modulus * av, f64::INFINITY)
                        } else {
                            (f64::NEG_INFINITY, p0 - modulus * av)
                        }
                    }
                    Compressibility::Banded { lo, softness, .. } => {
                        // a + w(p) > 0 below the band: p > lo - sqrt(2 s a)
                        ((lo - (2.0 * softness * av).sqrt()).min(*p0), f64::INFINITY)
                    }
                }
            }
            VolumeLaw::IdealGas { .. } => (0.0, f64::INFINITY),
            VolumeLaw::Tabulated(t) => t.pressure_range(),
        }
    }

    pub fn temperature_thresholds(&self) -> (f64, f64) {
        match self {
            VolumeLaw::Tabulated(t) => t.temperature_range(),
            _ => (0.0, f64::INFINITY),
        }
    }
}

/// Specific heat ĉ_p(T, p⁰, x), J/(kg K).
#[derive(Debug, Clone, Serialize)]
pub enum CaloricLaw {
    /// composition-independent polynomial in T
    Uniform(Polynomial),
    /// per-species specific heats c_i(T), combined as Σ x_i M_i c_i / M(x)
    MassWeighted(Vec<Polynomial>),
    /// composition-independent values on a temperature grid
    TabulatedUniform { t_knots: Vec<f64>, values: Vec<f64> },
}

/// Value, extension gradient and extension Hessian of a scalar field of x.
#[derive(Debug, Clone)]
pub struct FieldEval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SquareMatrix,
}

impl FieldEval {
    pub fn zero(n: usize) -> Self {
        FieldEval {
            value: 0.0,
            grad: vec![0.0; n],
            hess: SquareMatrix::zeros(n),
        }
    }

    pub fn constant(n: usize, v: f64) -> Self {
        FieldEval {
            value: v,
            grad: vec![0.0; n],
            hess: SquareMatrix::zeros(n),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &FieldEval) {
        self.value += s * other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += s * o;
        }
        for (h, o) in self.hess.data.iter_mut().zip(&other.hess.data) {
            *h += s * o;
        }
    }
}

/// (Σ x_i u_i) / M(x) with constant per-species numerators: the quotient
/// pattern shared by every mass-weighted specific quantity.
fn mass_weighted_field(u: &[f64], masses: &MolarMasses, x: &[f64]) -> FieldEval {
    let n = x.len();
    let m: f64 = masses.as_slice().iter().zip(x).map(|(mi, xi)| mi * xi).sum();
    let uval: f64 = u.iter().zip(x).map(|(ui, xi)| ui * xi).sum();
    let value = uval / m;
    let grad: Vec<f64> = (0..n)
        .map(|i| u[i] / m - uval * masses.get(i) / (m * m))
        .collect();
    let hess = SquareMatrix::from_fn(n, |i, j| {
        let mi = masses.get(i);
        let mj = masses.get(j);
        -(u[i] * mj + mi * u[j]) / (m * m) + 2.0 * uval * (mi * mj) / (m * m * m)
    });
    FieldEval { value, grad, hess }
}

/// -(R/M(x)) Σ x_i ln x_i, the ideal mixing entropy per unit mass.
fn mixing_entropy_field(masses: &MolarMasses, x: &[f64]) -> Result<FieldEval> {
    let n = x.len();
    let m: f64 = masses.as_slice().iter().zip(x).map(|(mi, xi)| mi * xi).sum();
    for &xi in x {
        if xi <= crate::state::X_FLOOR {
            return Err(Error::BoundaryComposition("ideal mixing entropy"));
        }
    }
    let u: f64 = -GAS_CONSTANT * x.iter().map(|xi| xi * xi.ln()).sum::<f64>();
    let ugrad: Vec<f64> = x.iter().map(|xi| -GAS_CONSTANT * (xi.ln() + 1.0)).collect();
    let value = u / m;
    let grad: Vec<f64> = (0..n)
        .map(|i| ugrad[i] / m - u * masses.get(i) / (m * m))
        .collect();
    let hess = SquareMatrix::from_fn(n, |i, j| {
        let mi = masses.get(i);
        let mj = masses.get(j);
        let uij = if i == j { -GAS_CONSTANT / x[i] } else { 0.0 };
        uij / m - (ugrad[i] * mj + mi * ugrad[j]) / (m * m) + 2.0 * u * (mi * mj) / (m * m * m)
    });
    Ok(FieldEval { value, grad, hess })
}

/// Composition dependence of a specific reference quantity (entropy or
/// enthalpy at the reference state): per-species values combined by mass
/// fraction, optionally with the ideal mixing entropy added.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionFn {
    pub species_values: Vec<f64>,
    pub ideal_mixing: bool,
}

impl CompositionFn {
    pub fn mass_weighted(values: Vec<f64>) -> Self {
        CompositionFn {
            species_values: values,
            ideal_mixing: false,
        }
    }

    pub fn with_mixing(values: Vec<f64>) -> Self {
        CompositionFn {
            species_values: values,
            ideal_mixing: true,
        }
    }

    pub fn zero(n: usize) -> Self {
        CompositionFn {
            species_values: vec![0.0; n],
            ideal_mixing: false,
        }
    }

    pub fn eval(&self, masses: &MolarMasses, x: &[f64]) -> Result<FieldEval> {
        let u: Vec<f64> = self
            .species_values
            .iter()
            .zip(masses.as_slice())
            .map(|(c, m)| c * m)
            .collect();
        let mut f = mass_weighted_field(&u, masses, x);
        if self.ideal_mixing {
            let mix = mixing_entropy_field(masses, x)?;
            f.axpy(1.0, &mix);
        }
        Ok(f)
    }
}

/// Reference-state data: (T⁰, p⁰), ŝ⁰⁰(x) and ĥ⁰⁰(x).
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceData {
    pub t0: f64,
    pub p0: f64,
    pub s00: CompositionFn,
    pub h00: CompositionFn,
}

/// Everything needed to assemble the free energy of one fluid mixture.
#[derive(Debug, Clone, Serialize)]
pub struct ConstitutiveModel {
    pub molar_masses: MolarMasses,
    pub volume: VolumeLaw,
    pub caloric: CaloricLaw,
    pub reference: ReferenceData,
}

impl ConstitutiveModel {
    pub fn new(
        molar_masses: MolarMasses,
        volume: VolumeLaw,
        caloric: CaloricLaw,
        reference: ReferenceData,
    ) -> Result<Self> {
        let n = molar_masses.n_species();
        if let Some(nv) = volume.n_species_hint() {
            if nv != n {
                return Err(Error::InvalidParameter(format!(
                    "volume law is for {nv} species, molar masses for {n}"
                )));
            }
        }
        if !(reference.t0 > 0.0) {
            return Err(Error::InvalidParameter("reference temperature must be positive".into()));
        }
        let (p_inf, p_sup) =
            volume.pressure_thresholds(reference.t0, Composition::equimolar(n).as_slice());
        if !(reference.p0 > p_inf && reference.p0 < p_sup) {
            return Err(Error::InvalidParameter(format!(
                "reference pressure {} outside volume domain ({p_inf}, {p_sup})",
                reference.p0
            )));
        }
        Ok(ConstitutiveModel {
            molar_masses,
            volume,
            caloric,
            reference,
        })
    }

    pub fn n_species(&self) -> usize {
        self.molar_masses.n_species()
    }

    pub fn reference_pressure(&self) -> f64 {
        self.reference.p0
    }

    pub fn reference_temperature(&self) -> f64 {
        self.reference.t0
    }

    fn check_domain(&self, t: f64, p: f64, x: &[f64]) -> Result<()> {
        let (t_inf, t_sup) = self.volume.temperature_thresholds();
        if !(t > t_inf && t < t_sup) {
            return Err(Error::OutOfDomain {
                quantity: "temperature",
                value: t,
                min: t_inf,
                max: t_sup,
            });
        }
        let (p_inf, p_sup) = self.volume.pressure_thresholds(t, x);
        if !(p > p_inf && p < p_sup) {
            return Err(Error::OutOfDomain {
                quantity: "pressure",
                value: p,
                min: p_inf,
                max: p_sup,
            });
        }
        Ok(())
    }

    /// υ̂(T, p, x). Errors identify the violated domain threshold.
    pub fn molar_volume(&self, state: &ThermoStateTPX) -> Result<f64> {
        Ok(self
            .volume_eval(state.temperature, state.pressure, state.composition.as_slice())?
            .value)
    }

    /// Tangential partials of υ̂ at an interior state.
    pub fn volume_partials(&self, state: &ThermoStateTPX) -> Result<VolumePartials> {
        let x = &state.composition;
        let ev = self.volume_eval(state.temperature, state.pressure, x.as_slice())?;
        Ok(VolumePartials {
            d_p: ev.d_p,
            d_t: ev.d_t,
            tangential_grad: crate::state::tangential_gradient(&ev.grad_x, x),
            tangential_hess: crate::state::tangential_hessian(&ev.hess_x, x),
            fd_step: None,
        })
    }

    /// Full volume evaluation with extension derivatives.
    pub fn volume_eval(&self, t: f64, p: f64, x: &[f64]) -> Result<VolumeEval> {
        self.check_domain(t, p, x)?;
        let n = x.len();
        let ev = match &self.volume {
            VolumeLaw::VolumeAdditive { modulus, p0, v00 } => {
                let s: f64 = v00.iter().zip(x).map(|(v, xi)| v * xi).sum();
                let phi = modulus / (p - p0 + modulus);
                let dphi = -modulus / ((p - p0 + modulus) * (p - p0 + modulus));
                VolumeEval {
                    value: s * phi,
                    d_p: s * dphi,
                    d_t: 0.0,
                    d_tt: 0.0,
                    grad_x: v00.iter().map(|v| v * phi).collect(),
                    hess_x: SquareMatrix::zeros(n),
                }
            }
            VolumeLaw::SimpleLaw {
                v_ref,
                beta,
                modulus,
                t_ref,
                p_ref,
            } => {
                let s: f64 = v_ref.iter().zip(x).map(|(v, xi)| v * xi).sum();
                let d = 1.0 - beta * (t - t_ref) + (p - p_ref) / modulus;
                VolumeEval {
                    value: s / d,
                    d_p: -s / (modulus * d * d),
                    d_t: s * beta / (d * d),
                    d_tt: 2.0 * s * beta * beta / (d * d * d),
                    grad_x: v_ref.iter().map(|v| v / d).collect(),
                    hess_x: SquareMatrix::zeros(n),
                }
            }
            VolumeLaw::Nonideal { n0, p0, a, comp } => {
                let av = a.value(t, x);
                let w = av + comp.offset(p, *p0);
                if !(w > 0.0) {
                    return Err(Error::OutOfDomain {
                        quantity: "pressure",
                        value: p,
                        min: self.volume.pressure_thresholds(t, x).0,
                        max: f64::INFINITY,
                    });
                }
                let v = 1.0 / (n0 * w);
                let at = a.d_t(t);
                let ax = a.grad_x(x);
                let axx = a.hess_x();
                let w2 = n0 * w * w;
                let w3 = n0 * w * w * w;
                let hess = SquareMatrix::from_fn(n, |i, j| {
                    -axx.get(i, j) / w2 + 2.0 * (ax[i] * ax[j]) / w3
                });
                VolumeEval {
                    value: v,
                    d_p: -comp.slope(p) / w2,
                    d_t: -at / w2,
                    d_tt: -a.d_tt() / w2 + 2.0 * at * at / w3,
                    grad_x: ax.iter().map(|g| -g / w2).collect(),
                    hess_x: hess,
                }
            }
            VolumeLaw::IdealGas { .. } => VolumeEval {
                value: GAS_CONSTANT * t / p,
                d_p: -GAS_CONSTANT * t / (p * p),
                d_t: GAS_CONSTANT / p,
                d_tt: 0.0,
                grad_x: vec![0.0; n],
                hess_x: SquareMatrix::zeros(n),
            },
            VolumeLaw::Tabulated(tab) => tab.volume_eval(t, p, x)?,
        };
        if !(ev.value > 0.0) {
            return Err(Error::OutOfDomain {
                quantity: "molar volume",
                value: ev.value,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(ev)
    }

    /// W(T, p, x) = ∫_{p⁰}^{p} υ̂ dp' with all derivatives. Closed forms for
    /// the analytic families, adaptive quadrature otherwise.
    pub fn volume_primitive(&self, t: f64, p: f64, x: &[f64]) -> Result<VolumePrimitive> {
        self.check_domain(t, p, x)?;
        let n = x.len();
        let p0ref = self.reference.p0;
        let prim = match &self.volume {
            VolumeLaw::VolumeAdditive { modulus, p0, v00 } => {
                let s: f64 = v00.iter().zip(x).map(|(v, xi)| v * xi).sum();
                // ln((p - p0 + K)/(p0ref - p0 + K)) without cancellation at
                // large K, where the ratio sits next to one
                let phi = modulus * ((p - p0ref) / (p0ref - p0 + modulus)).ln_1p();
                VolumePrimitive {
                    value: s * phi,
                    d_t: 0.0,
                    d_tt: 0.0,
                    grad_x: v00.iter().map(|v| v * phi).collect(),
                    hess_x: SquareMatrix::zeros(n),
                }
            }
            VolumeLaw::SimpleLaw {
                v_ref,
                beta,
                modulus,
                t_ref,
                p_ref,
            } => {
                let s: f64 = v_ref.iter().zip(x).map(|(v, xi)| v * xi).sum();
                let d_at = |pp: f64| 1.0 - beta * (t - t_ref) + (pp - p_ref) / modulus;
                let da = d_at(p);
                let db = d_at(p0ref);
                // da - db = (p - p0ref)/K exactly; keep all differences in
                // that cancellation-free form
                let diff = (p - p0ref) / modulus;
                let phi = modulus * (diff / db).ln_1p();
                let phi_t = modulus * beta * diff / (da * db);
                let phi_tt = modulus * beta * beta * diff * (da + db) / (da * da * db * db);
                VolumePrimitive {
                    value: s * phi,
                    d_t: s * phi_t,
                    d_tt: s * phi_tt,
                    grad_x: v_ref.iter().map(|v| v * phi).collect(),
                    hess_x: SquareMatrix::zeros(n),
                }
            }
            VolumeLaw::Nonideal { n0, p0, a, comp } => {
                let av = a.value(t, x);
                let at = a.d_t(t);
                let att = a.d_tt();
                let ax = a.grad_x(x);
                let axx = a.hess_x();
                // base integrals over p': 1/(n0 w), 1/(n0 w²), 1/(n0 w³)
                let (w_int, a2, a3) = match comp {
                    Compressibility::Linear { modulus } => {
                        let w_hi = av + comp.offset(p, *p0);
                        let w_lo = av + comp.offset(p0ref, *p0);
                        if !(w_hi > 0.0 && w_lo > 0.0) {
                            return Err(Error::OutOfDomain {
                                quantity: "pressure",
                                value: p,
                                min: self.volume.pressure_thresholds(t, x).0,
                                max: f64::INFINITY,
                            });
                        }
                        {
                            // w_hi - w_lo = (p - p0ref)/K exactly
                            let diff = (p - p0ref) / modulus;
                            (
                                modulus / n0 * (diff / w_lo).ln_1p(),
                                modulus / n0 * diff / (w_lo * w_hi),
                                modulus / (2.0 * n0) * diff * (w_hi + w_lo)
                                    / (w_lo * w_lo * w_hi * w_hi),
                            )
                        }
                    }
                    _ => {
                        let vol0 = 1.0 / (n0 * (av + comp.offset(p0ref, *p0)));
                        let tol = 1e-12 * (1.0 + (p - p0ref).abs()) * vol0;
                        let wi = numerics::integrate(
                            |pp| 1.0 / (n0 * (av + comp.offset(pp, *p0))),
                            p0ref,
                            p,
                            tol,
                        );
                        let a2 = numerics::integrate(
                            |pp| {
                                let w = av + comp.offset(pp, *p0);
                                1.0 / (n0 * w * w)
                            },
                            p0ref,
                            p,
                            tol,
                        );
                        let a3 = numerics::integrate(
                            |pp| {
                                let w = av + comp.offset(pp, *p0);
                                1.0 / (n0 * w * w * w)
                            },
                            p0ref,
                            p,
                            tol,
                        );
                        (wi, a2, a3)
                    }
                };
                let hess = SquareMatrix::from_fn(n, |i, j| {
                    -axx.get(i, j) * a2 + 2.0 * (ax[i] * ax[j]) * a3
                });
                VolumePrimitive {
                    value: w_int,
                    d_t: -at * a2,
                    d_tt: -att * a2 + 2.0 * at * at * a3,
                    grad_x: ax.iter().map(|g| -g * a2).collect(),
                    hess_x: hess,
                }
            }
            VolumeLaw::IdealGas { .. } => VolumePrimitive {
                value: GAS_CONSTANT * t * (p / p0ref).ln(),
                d_t: GAS_CONSTANT * (p / p0ref).ln(),
                d_tt: 0.0,
                grad_x: vec![0.0; n],
                hess_x: SquareMatrix::zeros(n),
            },
            VolumeLaw::Tabulated(tab) => {
                let vol0 = tab.volume_eval(t, p0ref, x)?.value;
                let tol = 1e-12 * (1.0 + (p - p0ref).abs()) * vol0;
                let value = numerics::integrate(
                    |pp| tab.value_fast(t, pp, x),
                    p0ref,
                    p,
                    tol,
                );
                let d_t = numerics::integrate(|pp| tab.d_t_fast(t, pp, x), p0ref, p, tol);
                let d_tt = numerics::integrate(|pp| tab.d_tt_fast(t, pp, x), p0ref, p, tol);
                let mut grad_x = vec![0.0; n];
                for (c, g) in grad_x.iter_mut().enumerate() {
                    *g = numerics::integrate(|pp| tab.corner_value(c, t, pp), p0ref, p, tol);
                }
                VolumePrimitive {
                    value,
                    d_t,
                    d_tt,
                    grad_x,
                    hess_x: SquareMatrix::zeros(n),
                }
            }
        };
        Ok(prim)
    }

    /// ĉ_p(T, p⁰, x) with extension derivatives in x.
    pub fn cp(&self, t: f64, x: &[f64]) -> Result<FieldEval> {
        self.caloric_field(t, x, CalKind::Value)
    }

    /// ∫_{T⁰}^{T} ĉ_p(θ)/θ dθ
    pub fn cp_over_theta_integral(&self, t: f64, x: &[f64]) -> Result<FieldEval> {
        self.caloric_field(t, x, CalKind::OverTheta)
    }

    /// ∫_{T⁰}^{T} ∫_{T⁰}^{θ} ĉ_p(θ')/θ' dθ' dθ
    pub fn cp_double_integral(&self, t: f64, x: &[f64]) -> Result<FieldEval> {
        self.caloric_field(t, x, CalKind::Double)
    }

    /// ∫_{T⁰}^{T} ĉ_p(θ) dθ
    pub fn cp_integral(&self, t: f64, x: &[f64]) -> Result<FieldEval> {
        self.caloric_field(t, x, CalKind::Plain)
    }

    fn caloric_field(&self, t: f64, x: &[f64], kind: CalKind) -> Result<FieldEval> {
        let n = x.len();
        let t0 = self.reference.t0;
        match &self.caloric {
            CaloricLaw::Uniform(poly) => {
                let v = match kind {
                    CalKind::Value => poly.eval(t),
                    CalKind::OverTheta => poly.integral_over_theta(t0, t),
                    CalKind::Double => poly.double_integral_over_theta(t0, t),
                    CalKind::Plain => poly.integral(t0, t),
                };
                Ok(FieldEval::constant(n, v))
            }
            CaloricLaw::MassWeighted(polys) => {
                let u: Vec<f64> = polys
                    .iter()
                    .zip(self.molar_masses.as_slice())
                    .map(|(p, m)| {
                        m * match kind {
                            CalKind::Value => p.eval(t),
                            CalKind::OverTheta => p.integral_over_theta(t0, t),
                            CalKind::Double => p.double_integral_over_theta(t0, t),
                            CalKind::Plain => p.integral(t0, t),
                        }
                    })
                    .collect();
                Ok(mass_weighted_field_raw(&u, &self.molar_masses, x))
            }
            CaloricLaw::TabulatedUniform { t_knots, values } => {
                let interp = tabulated::Curve1D::new(t_knots.clone(), values.clone())?;
                // inner 1e-12, outer 1e-10, relative to the integrand scale
                let scale =
                    (1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()))) * (1.0 + (t - t0).abs());
                let v = match kind {
                    CalKind::Value => interp.value(t),
                    CalKind::OverTheta => {
                        numerics::integrate(|th| interp.value(th) / th, t0, t, 1e-12 * scale)
                    }
                    CalKind::Double => numerics::integrate(
                        |th| numerics::integrate(|s| interp.value(s) / s, t0, th, 1e-12 * scale),
                        t0,
                        t,
                        1e-10 * scale * (1.0 + (t - t0).abs()),
                    ),
                    CalKind::Plain => {
                        numerics::integrate(|th| interp.value(th), t0, t, 1e-12 * scale)
                    }
                };
                Ok(FieldEval::constant(n, v))
            }
        }
    }

    /// ŝ⁰⁰(x) with extension derivatives.
    pub fn s00(&self, x: &[f64]) -> Result<FieldEval> {
        self.reference.s00.eval(&self.molar_masses, x)
    }

    /// ĥ⁰⁰(x) with extension derivatives.
    pub fn h00(&self, x: &[f64]) -> Result<FieldEval> {
        self.reference.h00.eval(&self.molar_masses, x)
    }

    /// Pure-species specific Gibbs energy g_i(T, p) for the ideal-gas family.
    pub fn ideal_gas_gibbs(&self, i: usize, t: f64, p: f64) -> Option<f64> {
        match &self.volume {
            VolumeLaw::IdealGas {
                z,
                h_ref,
                s_ref,
                t0,
                p0,
            } => {
                let rm = GAS_CONSTANT / self.molar_masses.get(i);
                let zi = z[i];
                Some(
                    h_ref[i] - t * s_ref[i]
                        + rm * t
                            * ((zi + 1.0) * (1.0 - t0 / t)
                                - ((t / t0).powf(zi + 1.0) * p0 / p).ln()),
                )
            }
            _ => None,
        }
    }
}

enum CalKind {
    Value,
    OverTheta,
    Double,
    Plain,
}

fn mass_weighted_field_raw(u: &[f64], masses: &MolarMasses, x: &[f64]) -> FieldEval {
    mass_weighted_field(u, masses, x)
}

/// Sampling region for validation and stability sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRegion {
    pub t_range: (f64, f64),
    pub t_count: usize,
    pub p_range: (f64, f64),
    pub p_count: usize,
    pub log_p: bool,
    /// lattice resolution per simplex edge
    pub x_per_edge: usize,
}

impl SampleRegion {
    pub fn temperatures(&self) -> Vec<f64> {
        linspace(self.t_range.0, self.t_range.1, self.t_count)
    }

    pub fn pressures(&self) -> Vec<f64> {
        if self.log_p {
            let (a, b) = self.p_range;
            assert!(a > 0.0 && b > 0.0);
            linspace(a.ln(), b.ln(), self.p_count)
                .into_iter()
                .map(f64::exp)
                .collect()
        } else {
            linspace(self.p_range.0, self.p_range.1, self.p_count)
        }
    }

    pub fn compositions(&self, n_species: usize) -> Vec<Composition> {
        simplex_grid(n_species, self.x_per_edge)
    }
}

pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![a];
    }
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Interior lattice points of the composition simplex: x = k/m with k_i >= 1.
pub fn simplex_grid(n_species: usize, per_edge: usize) -> Vec<Composition> {
    let m = per_edge.max(n_species);
    let mut out = Vec::new();
    let mut parts = vec![1usize; n_species];
    fill_simplex(&mut out, &mut parts, 0, m, n_species, m);
    out
}

fn fill_simplex(
    out: &mut Vec<Composition>,
    parts: &mut Vec<usize>,
    idx: usize,
    remaining: usize,
    n: usize,
    m: usize,
) {
    if idx == n - 1 {
        parts[idx] = remaining;
        let x: Vec<f64> = parts.iter().map(|&k| k as f64 / m as f64).collect();
        out.push(Composition::new(&x).expect("lattice point is a valid composition"));
        return;
    }
    let later = n - 1 - idx;
    for k in 1..=(remaining - later) {
        parts[idx] = k;
        fill_simplex(out, parts, idx + 1, remaining - k, n, m);
    }
}

/// One observation from `validate_model`.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub temperature: Option<f64>,
    pub pressure: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Note,
    Violation,
}

/// Samples the declared domain and reports violations of positivity,
/// strict pressure-monotonicity and the asymptotic threshold conditions.
/// Diagnostics, not exceptions: a broken model yields a non-empty list.
pub fn validate_model(model: &ConstitutiveModel, region: &SampleRegion) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = model.n_species();
    let xs = region.compositions(n);
    for t in region.temperatures() {
        for x in &xs {
            let (p_inf, p_sup) = model.volume.pressure_thresholds(t, x.as_slice());
            for p in region.pressures() {
                if !(p > p_inf && p < p_sup) {
                    continue;
                }
                match model.volume_eval(t, p, x.as_slice()) {
                    Ok(ev) => {
                        if !(ev.value > 0.0) {
                            out.push(Diagnostic {
                                severity: Severity::Violation,
                                message: format!("molar volume not positive: {}", ev.value),
                                temperature: Some(t),
                                pressure: Some(p),
                            });
                        }
                        if !(ev.d_p < 0.0) {
                            out.push(Diagnostic {
                                severity: Severity::Violation,
                                message: format!(
                                    "volume not strictly decreasing in pressure (dv/dp = {:e})",
                                    ev.d_p
                                ),
                                temperature: Some(t),
                                pressure: Some(p),
                            });
                        }
                    }
                    Err(e) => out.push(Diagnostic {
                        severity: Severity::Violation,
                        message: format!("evaluation failed inside declared domain: {e}"),
                        temperature: Some(t),
                        pressure: Some(p),
                    }),
                }
            }
            match model.cp(region.t_range.0, x.as_slice()) {
                Ok(c) if !(c.value > 0.0) => out.push(Diagnostic {
                    severity: Severity::Violation,
                    message: format!("specific heat not positive: {}", c.value),
                    temperature: Some(region.t_range.0),
                    pressure: None,
                }),
                Err(e) => out.push(Diagnostic {
                    severity: Severity::Violation,
                    message: format!("specific heat evaluation failed: {e}"),
                    temperature: Some(region.t_range.0),
                    pressure: None,
                }),
                _ => {}
            }
        }
    }
    // asymptotic behavior at the declared thresholds, sampled at mid T / x
    let t_mid = 0.5 * (region.t_range.0 + region.t_range.1);
    let x_mid = Composition::equimolar(n);
    let (p_inf, p_sup) = model.volume.pressure_thresholds(t_mid, x_mid.as_slice());
    let p0 = model.reference.p0;
    if p_sup.is_finite() {
        out.push(Diagnostic {
            severity: Severity::Note,
            message: format!(
                "finite upper pressure threshold p_sup = {p_sup:e}: volume reaches zero at finite pressure; limit diagnostics require p_sup = +inf"
            ),
            temperature: Some(t_mid),
            pressure: Some(p_sup),
        });
        if let (Ok(near), Ok(mid)) = (
            model.volume_eval(t_mid, p_sup - 1e-6 * (p_sup - p0).abs(), x_mid.as_slice()),
            model.volume_eval(t_mid, 0.5 * (p0 + p_sup), x_mid.as_slice()),
        ) {
            if near.value > 0.5 * mid.value {
                out.push(Diagnostic {
                    severity: Severity::Violation,
                    message: "volume does not vanish toward the finite p_sup threshold".into(),
                    temperature: Some(t_mid),
                    pressure: Some(p_sup),
                });
            }
        }
    } else {
        out.push(Diagnostic {
            severity: Severity::Note,
            message: "p_sup = +inf".into(),
            temperature: None,
            pressure: None,
        });
    }
    if p_inf.is_finite() {
        let span = (p0 - p_inf).abs().max(1.0);
        if let (Ok(near), Ok(mid)) = (
            model.volume_eval(t_mid, p_inf + 1e-8 * span, x_mid.as_slice()),
            model.volume_eval(t_mid, p0, x_mid.as_slice()),
        ) {
            if near.value < 10.0 * mid.value {
                out.push(Diagnostic {
                    severity: Severity::Note,
                    message: "volume grows slowly toward p_inf; check the consistency condition V -> +inf".into(),
                    temperature: Some(t_mid),
                    pressure: Some(p_inf),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::tangential_hessian;
    use approx::assert_relative_eq;

    fn fd_partials(model: &ConstitutiveModel, t: f64, p: f64, x: &[f64]) -> (f64, f64) {
        let hp = numerics::fd_step(p);
        let dv_dp = (model.volume_eval(t, p + hp, x).unwrap().value
            - model.volume_eval(t, p - hp, x).unwrap().value)
            / (2.0 * hp);
        let ht = numerics::fd_step(t);
        let dv_dt = (model.volume_eval(t + ht, p, x).unwrap().value
            - model.volume_eval(t - ht, p, x).unwrap().value)
            / (2.0 * ht);
        (dv_dp, dv_dt)
    }

    #[test]
    fn volume_additive_at_reference_pressure() {
        let m = presets::volume_additive_binary();
        let x = Composition::new(&[0.4, 0.6]).unwrap();
        let s = ThermoStateTPX::new(298.0, m.reference.p0, x).unwrap();
        let v = m.molar_volume(&s).unwrap();
        assert_relative_eq!(v, 0.4 * 1.8e-5 + 0.6 * 5.8e-5, epsilon = 1e-20);
    }

    #[test]
    fn volume_additive_exact_identity() {
        // υ̂ (p - p⁰ + K) = K Σ υ⁰⁰ x, exactly as written
        let m = presets::volume_additive_binary();
        let (k, p0) = match m.volume {
            VolumeLaw::VolumeAdditive { modulus, p0, .. } => (modulus, p0),
            _ => unreachable!(),
        };
        let x = Composition::new(&[0.25, 0.75]).unwrap();
        for p in [p0 - 0.5 * k, p0, p0 + 3.0 * k, p0 + 1e3 * k] {
            let v = m.volume_eval(330.0, p, x.as_slice()).unwrap().value;
            let s = 0.25 * 1.8e-5 + 0.75 * 5.8e-5;
            assert_relative_eq!(v * (p - p0 + k), k * s, max_relative = 1e-15);
        }
    }

    #[test]
    fn simple_law_at_reference_state() {
        let m = presets::water_simple_law();
        let x = Composition::pure(1, 0);
        let s = ThermoStateTPX::new(293.0, 1e5, x).unwrap();
        assert_relative_eq!(m.molar_volume(&s).unwrap(), 1e-3 / 55.4, max_relative = 1e-15);
    }

    #[test]
    fn simple_law_thermal_expansion_ten_kelvin() {
        // D = 1 - β ΔT at p = pᴿ, so υ = υᴿ / (1 - 2.07e-3)
        let m = presets::water_simple_law();
        let x = Composition::pure(1, 0);
        let s = ThermoStateTPX::new(303.0, 1e5, x).unwrap();
        let expect = (1e-3 / 55.4) / (1.0 - 2.07e-4 * 10.0);
        assert_relative_eq!(m.molar_volume(&s).unwrap(), expect, max_relative = 1e-14);
    }

    #[test]
    fn volume_additive_pressure_slope_at_reference() {
        let m = presets::volume_additive_binary();
        let x = Composition::new(&[0.4, 0.6]).unwrap();
        let ev = m.volume_eval(298.0, m.reference.p0, x.as_slice()).unwrap();
        let s = 0.4 * 1.8e-5 + 0.6 * 5.8e-5;
        let k = 2.0e9;
        assert_relative_eq!(ev.d_p, -s / k, max_relative = 1e-14);
        // linear in x: tangential Hessian vanishes identically
        assert_eq!(tangential_hessian(&ev.hess_x, &x).max_abs(), 0.0);
    }

    #[test]
    fn nonideal_temperature_slope_sign() {
        // ∂_T υ̂ = -n⁰ a_T υ̂²; the sign matches -a_T
        let m = presets::nonideal_binary();
        let x = Composition::new(&[0.5, 0.5]).unwrap();
        let t = 310.0;
        let ev = m.volume_eval(t, 1.3e5, x.as_slice()).unwrap();
        let (n0, a) = match &m.volume {
            VolumeLaw::Nonideal { n0, a, .. } => (*n0, a.clone()),
            _ => unreachable!(),
        };
        let expect = -n0 * a.d_t(t) * ev.value * ev.value;
        assert_relative_eq!(ev.d_t, expect, max_relative = 1e-12);
        assert!(ev.d_t.signum() == -a.d_t(t).signum());
    }

    #[test]
    fn ideal_gas_law_is_exact() {
        let m = presets::ideal_gas_binary();
        let x = Composition::new(&[0.7, 0.3]).unwrap();
        for (t, p) in [(250.0, 3e4), (300.0, 1e5), (700.0, 5e6)] {
            let v = m.volume_eval(t, p, x.as_slice()).unwrap().value;
            assert_relative_eq!(p * v, GAS_CONSTANT * t, max_relative = 1e-15);
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let models = [
            presets::volume_additive_binary(),
            presets::water_simple_law(),
            presets::nonideal_binary(),
            presets::ideal_gas_binary(),
            presets::simple_law_binary(),
        ];
        for m in &models {
            let n = m.n_species();
            let x = Composition::equimolar(n);
            let (t, p) = (305.0, 1.7e5);
            let ev = m.volume_eval(t, p, x.as_slice()).unwrap();
            let (fp, ft) = fd_partials(m, t, p, x.as_slice());
            assert_relative_eq!(ev.d_p, fp, max_relative = 1e-6);
            if ev.d_t != 0.0 || ft.abs() > 1e-18 {
                assert_relative_eq!(ev.d_t, ft, max_relative = 1e-6, epsilon = 1e-18);
            }
            // composition slope against FD along a simplex chord
            if n == 2 {
                let h = 1e-6;
                let xp = Composition::new(&[x.get(0) + h, x.get(1) - h]).unwrap();
                let xm = Composition::new(&[x.get(0) - h, x.get(1) + h]).unwrap();
                let fd = (m.volume_eval(t, p, xp.as_slice()).unwrap().value
                    - m.volume_eval(t, p, xm.as_slice()).unwrap().value)
                    / (2.0 * h);
                let analytic = ev.grad_x[0] - ev.grad_x[1];
                assert_relative_eq!(analytic, fd, max_relative = 1e-6, epsilon = 1e-18);
            }
        }
    }

    #[test]
    fn primitive_matches_quadrature_of_volume() {
        let models = [
            presets::volume_additive_binary(),
            presets::water_simple_law(),
            presets::nonideal_binary(),
            presets::ideal_gas_binary(),
        ];
        for m in &models {
            let n = m.n_species();
            let x = Composition::equimolar(n);
            let (t, p) = (300.0, 6e5);
            let prim = m.volume_primitive(t, p, x.as_slice()).unwrap();
            let quad = numerics::integrate(
                |pp| m.volume_eval(t, pp, x.as_slice()).unwrap().value,
                m.reference.p0,
                p,
                1e-11,
            );
            assert_relative_eq!(prim.value, quad, max_relative = 1e-10);
        }
    }

    #[test]
    fn validate_flags_wrong_modulus_sign() {
        let m = presets::simple_law_with_modulus(-2.18e9);
        let region = SampleRegion {
            t_range: (280.0, 320.0),
            t_count: 3,
            p_range: (5e4, 5e5),
            p_count: 5,
            log_p: false,
            x_per_edge: 4,
        };
        let d = validate_model(&m, &region);
        assert!(d
            .iter()
            .any(|d| d.severity == Severity::Violation && d.message.contains("decreasing")));
    }

    #[test]
    fn validate_passes_volume_additive_and_notes_psup() {
        let m = presets::volume_additive_binary();
        let region = SampleRegion {
            t_range: (280.0, 320.0),
            t_count: 3,
            p_range: (5e4, 5e6),
            p_count: 7,
            log_p: true,
            x_per_edge: 5,
        };
        let d = validate_model(&m, &region);
        assert!(d.iter().all(|d| d.severity != Severity::Violation));
        assert!(d.iter().any(|d| d.message.contains("p_sup = +inf")));
    }

    #[test]
    fn simplex_grid_is_interior() {
        let pts = simplex_grid(3, 11);
        assert!(!pts.is_empty());
        for p in &pts {
            assert!(p.is_interior());
            let s: f64 = p.as_slice().iter().sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixing_entropy_rejects_boundary() {
        let masses = MolarMasses::new(vec![0.018, 0.046]).unwrap();
        let err = mixing_entropy_field(&masses, &[1.0, 0.0]);
        assert!(matches!(err, Err(Error::BoundaryComposition(_))));
    }
}
