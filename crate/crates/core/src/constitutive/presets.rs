//! Ready-made model instances used by the CLI presets and throughout the
//! test suites.

use super::{
    AFunction, CaloricLaw, CompositionFn, Compressibility, ConstitutiveModel, ReferenceData,
    VolumeLaw,
};
use crate::numerics::{Polynomial, SquareMatrix};
use crate::state::MolarMasses;

/// Reference molar volume of water, m³/mol (1/55.4 L/mol).
pub const WATER_V_REF: f64 = 1e-3 / 55.4;
/// Thermal expansion coefficient of water near 293 K, 1/K.
pub const WATER_BETA: f64 = 2.07e-4;
/// Bulk modulus of water, Pa.
pub const WATER_MODULUS: f64 = 2.18e9;
/// Specific heat of water, J/(kg K).
pub const WATER_CP: f64 = 4.18e3;
/// Molar mass of water, kg/mol (an external constant, not set by the volume data).
pub const WATER_MOLAR_MASS: f64 = 0.0180153;

/// Single-species water model with the elastic volume law at (293 K, 1 bar).
pub fn water_simple_law() -> ConstitutiveModel {
    ConstitutiveModel::new(
        MolarMasses::new(vec![WATER_MOLAR_MASS]).unwrap(),
        VolumeLaw::SimpleLaw {
            v_ref: vec![WATER_V_REF],
            beta: WATER_BETA,
            modulus: WATER_MODULUS,
            t_ref: 293.0,
            p_ref: 1e5,
        },
        CaloricLaw::Uniform(Polynomial::constant(WATER_CP)),
        ReferenceData {
            t0: 293.0,
            p0: 1e5,
            s00: CompositionFn::mass_weighted(vec![0.0]),
            h00: CompositionFn::mass_weighted(vec![0.0]),
        },
    )
    .unwrap()
}

/// Binary elastic law with water-like solvent and a heavier solute.
pub fn simple_law_binary() -> ConstitutiveModel {
    ConstitutiveModel::new(
        MolarMasses::new(vec![WATER_MOLAR_MASS, 0.046068]).unwrap(),
        VolumeLaw::SimpleLaw {
            v_ref: vec![WATER_V_REF, 5.8e-5],
            beta: WATER_BETA,
            modulus: WATER_MODULUS,
            t_ref: 293.0,
            p_ref: 1e5,
        },
        CaloricLaw::MassWeighted(vec![
            Polynomial::constant(4.18e3),
            Polynomial::constant(2.44e3),
        ]),
        ReferenceData {
            t0: 293.0,
            p0: 1e5,
            s00: CompositionFn::with_mixing(vec![150.0, 260.0]),
            h00: CompositionFn::mass_weighted(vec![0.0, 4.0e4]),
        },
    )
    .unwrap()
}

/// `simple_law_binary` with the bulk modulus replaced (e.g. a wrong sign for
/// validation tests).
pub fn simple_law_with_modulus(modulus: f64) -> ConstitutiveModel {
    let mut m = simple_law_binary();
    if let VolumeLaw::SimpleLaw { modulus: k, .. } = &mut m.volume {
        *k = modulus;
    }
    m
}

/// Binary volume-additive model with nontrivial caloric data.
pub fn volume_additive_binary() -> ConstitutiveModel {
    ConstitutiveModel::new(
        MolarMasses::new(vec![0.018015, 0.046068]).unwrap(),
        VolumeLaw::VolumeAdditive {
            modulus: 2.0e9,
            p0: 1e5,
            v00: vec![1.8e-5, 5.8e-5],
        },
        CaloricLaw::MassWeighted(vec![
            Polynomial::constant(4.0e3),
            Polynomial::constant(2.4e3),
        ]),
        ReferenceData {
            t0: 298.0,
            p0: 1e5,
            s00: CompositionFn::with_mixing(vec![200.0, 340.0]),
            h00: CompositionFn::mass_weighted(vec![1.0e4, 6.0e4]),
        },
    )
    .unwrap()
}

/// The ideal volume-additive mixture: mixing entropy only, reference
/// enthalpy chosen so the mechanically neutral part reduces to
/// R T n Σ x ln x, making the closed-form free energy exact at every
/// temperature. Isothermal-context model, so the specific heat is zero.
pub fn volume_additive_ideal(
    masses: Vec<f64>,
    v00: Vec<f64>,
    modulus: f64,
    p0: f64,
    t0: f64,
) -> ConstitutiveModel {
    let h00: Vec<f64> = v00
        .iter()
        .zip(&masses)
        .map(|(v, m)| p0 * v / m)
        .collect();
    ConstitutiveModel::new(
        MolarMasses::new(masses).unwrap(),
        VolumeLaw::VolumeAdditive { modulus, p0, v00 },
        CaloricLaw::Uniform(Polynomial::constant(0.0)),
        ReferenceData {
            t0,
            p0,
            s00: CompositionFn::with_mixing(vec![0.0; h00.len()]),
            h00: CompositionFn::mass_weighted(h00),
        },
    )
    .unwrap()
}

/// Standard ideal volume-additive binary.
pub fn volume_additive_ideal_binary() -> ConstitutiveModel {
    volume_additive_ideal(
        vec![0.018015, 0.046068],
        vec![1.8e-5, 5.8e-5],
        2.0e9,
        1e5,
        298.0,
    )
}

/// Nonideal binary with a composition-quadratic volume law.
pub fn nonideal_binary() -> ConstitutiveModel {
    nonideal_binary_quadratic(0.08, 0.02)
}

/// Nonideal binary whose composition dependence is purely quadratic,
/// a(x) = a₀ + ½ q |x|²: the curvature scale q is the only composition
/// effect, which keeps definiteness-failure pressures proportional to 1/q.
pub fn nonideal_pure_quadratic(quad: f64) -> ConstitutiveModel {
    let a = AFunction::isothermal(
        1.0,
        vec![0.0, 0.0],
        SquareMatrix {
            n: 2,
            data: vec![quad, 0.0, 0.0, quad],
        },
    );
    ConstitutiveModel::new(
        MolarMasses::new(vec![0.018015, 0.046068]).unwrap(),
        VolumeLaw::Nonideal {
            n0: 5.0e4,
            p0: 1e5,
            a,
            comp: Compressibility::Linear { modulus: 1.0e9 },
        },
        CaloricLaw::Uniform(Polynomial::constant(3.0e3)),
        ReferenceData {
            t0: 300.0,
            p0: 1e5,
            s00: CompositionFn::with_mixing(vec![0.0, 0.0]),
            h00: CompositionFn::mass_weighted(vec![0.0, 0.0]),
        },
    )
    .unwrap()
}

/// Nonideal binary; `quad` scales the composition curvature of a(T, x) and
/// `t_lin` its temperature slope.
pub fn nonideal_binary_quadratic(quad: f64, t_lin: f64) -> ConstitutiveModel {
    let a = AFunction {
        constant: 0.9,
        linear: vec![0.0, 0.2],
        quadratic: SquareMatrix {
            n: 2,
            data: vec![quad, 0.0, 0.0, quad],
        },
        t_linear: t_lin,
        t_quadratic: 0.0,
        t_anchor: 300.0,
    };
    ConstitutiveModel::new(
        MolarMasses::new(vec![0.018015, 0.046068]).unwrap(),
        VolumeLaw::Nonideal {
            n0: 5.0e4,
            p0: 1e5,
            a,
            comp: Compressibility::Linear { modulus: 1.0e9 },
        },
        CaloricLaw::Uniform(Polynomial::constant(3.0e3)),
        ReferenceData {
            t0: 300.0,
            p0: 1e5,
            s00: CompositionFn::with_mixing(vec![120.0, 200.0]),
            h00: CompositionFn::mass_weighted(vec![0.0, 2.0e4]),
        },
    )
    .unwrap()
}

/// Two-species ideal-gas mixture (N₂/O₂-like).
pub fn ideal_gas_binary() -> ConstitutiveModel {
    ConstitutiveModel::new(
        MolarMasses::new(vec![0.0280134, 0.0319988]).unwrap(),
        VolumeLaw::IdealGas {
            z: vec![2.5, 2.5],
            h_ref: vec![0.0, 0.0],
            s_ref: vec![6.84e3, 6.41e3],
            t0: 298.15,
            p0: 1e5,
        },
        // c_p,i = (z_i + 1) R / M_i, calorically perfect
        CaloricLaw::MassWeighted(vec![
            Polynomial::constant(3.5 * super::GAS_CONSTANT / 0.0280134),
            Polynomial::constant(3.5 * super::GAS_CONSTANT / 0.0319988),
        ]),
        ReferenceData {
            t0: 298.15,
            p0: 1e5,
            s00: CompositionFn::with_mixing(vec![6.84e3, 6.41e3]),
            h00: CompositionFn::mass_weighted(vec![0.0, 0.0]),
        },
    )
    .unwrap()
}

/// Single-species monatomic ideal gas (z = 3/2).
pub fn ideal_gas_single() -> ConstitutiveModel {
    let m = 0.039948; // argon
    ConstitutiveModel::new(
        MolarMasses::new(vec![m]).unwrap(),
        VolumeLaw::IdealGas {
            z: vec![1.5],
            h_ref: vec![0.0],
            s_ref: vec![3.87e3],
            t0: 298.15,
            p0: 1e5,
        },
        CaloricLaw::MassWeighted(vec![Polynomial::constant(2.5 * super::GAS_CONSTANT / m)]),
        ReferenceData {
            t0: 298.15,
            p0: 1e5,
            s00: CompositionFn::mass_weighted(vec![3.87e3]),
            h00: CompositionFn::mass_weighted(vec![0.0]),
        },
    )
    .unwrap()
}

/// Single-species volume-additive fluid.
pub fn volume_additive_single() -> ConstitutiveModel {
    volume_additive_ideal(vec![WATER_MOLAR_MASS], vec![WATER_V_REF], 2.18e9, 1e5, 293.0)
}
