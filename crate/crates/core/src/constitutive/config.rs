//! Declarative model definition files.
//!
//! Flat key/value text with `[section]` headers, `#` comments and
//! comma-separated lists. `dump` re-emits the parsed content in canonical
//! form so a run can be reproduced bit-exactly from its own output.

use std::collections::BTreeMap;
use std::path::Path;

use super::{
    AFunction, CaloricLaw, CompositionFn, Compressibility, ConstitutiveModel, ReferenceData,
    TabulatedVolume, VolumeLaw,
};
use crate::error::{Error, Result};
use crate::numerics::{Polynomial, SquareMatrix};
use crate::state::MolarMasses;

/// Parsed key/value file: section -> key -> raw value string.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValueFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("model");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config(format!(
                        "line {}: malformed section header `{raw}`",
                        lineno + 1
                    )));
                }
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(KeyValueFile { sections })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str> {
        self.get(section, key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}` in section [{section}]")))
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.to_string());
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for ov in overrides {
            let Some((path, value)) = ov.split_once('=') else {
                return Err(Error::Config(format!(
                    "override `{ov}` must look like section.key=value"
                )));
            };
            let Some((section, key)) = path.split_once('.') else {
                return Err(Error::Config(format!(
                    "override `{ov}` must look like section.key=value"
                )));
            };
            self.set(section.trim(), key.trim(), value.trim());
        }
        Ok(())
    }

    /// Canonical text form: sections and keys sorted, one key per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn number(&self, section: &str, key: &str) -> Result<f64> {
        parse_number(self.require(section, key)?)
    }

    pub fn number_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            Some(v) => parse_number(v),
            None => Ok(default),
        }
    }

    pub fn list(&self, section: &str, key: &str) -> Result<Vec<f64>> {
        parse_list(self.require(section, key)?)
    }

    pub fn list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(section, key) {
            Some(v) => parse_list(v),
            None => Ok(default.to_vec()),
        }
    }

    pub fn flag_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Error::Config(format!("expected boolean, got `{v}`"))),
            None => Ok(default),
        }
    }
}

pub fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("bad number `{s}`: {e}")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|f| parse_number(f))
        .collect::<Result<Vec<f64>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::Config("empty list".into()))
            } else {
                Ok(v)
            }
        })
}

/// Builds a [`ConstitutiveModel`] from a parsed file. `base_dir` resolves
/// relative table paths.
pub fn model_from_config(cfg: &KeyValueFile, base_dir: &Path) -> Result<ConstitutiveModel> {
    let masses = MolarMasses::new(cfg.list("model", "molar_masses")?)?;
    let n = masses.n_species();
    let family = cfg.require("model", "family")?;
    let volume = match family {
        "volume_additive" => VolumeLaw::VolumeAdditive {
            modulus: cfg.number("volume", "modulus")?,
            p0: cfg.number("volume", "p0")?,
            v00: cfg.list("volume", "v00")?,
        },
        "simple_law" => VolumeLaw::SimpleLaw {
            v_ref: cfg.list("volume", "v_ref")?,
            beta: cfg.number("volume", "beta")?,
            modulus: cfg.number("volume", "modulus")?,
            t_ref: cfg.number("volume", "t_ref")?,
            p_ref: cfg.number("volume", "p_ref")?,
        },
        "nonideal" => {
            let quad = cfg.list_or("volume", "a_quad", &vec![0.0; n * n])?;
            if quad.len() != n * n {
                return Err(Error::Config(format!(
                    "a_quad needs {} entries (row-major {n}x{n})",
                    n * n
                )));
            }
            let a = AFunction {
                constant: cfg.number("volume", "a0")?,
                linear: cfg.list_or("volume", "a_lin", &vec![0.0; n])?,
                quadratic: SquareMatrix { n, data: quad },
                t_linear: cfg.number_or("volume", "a_t", 0.0)?,
                t_quadratic: cfg.number_or("volume", "a_tt", 0.0)?,
                t_anchor: cfg.number_or("volume", "t_anchor", 300.0)?,
            };
            let comp = match cfg.get("volume", "band") {
                Some(band) => {
                    let b = parse_list(band)?;
                    if b.len() != 3 {
                        return Err(Error::Config(
                            "band needs three entries: lo, hi, softness".into(),
                        ));
                    }
                    let modulus = match cfg.get("volume", "modulus") {
                        Some(v) => Some(parse_number(v)?),
                        None => None,
                    };
                    Compressibility::Banded {
                        lo: b[0],
                        hi: b[1],
                        softness: b[2],
                        modulus,
                    }
                }
                None => Compressibility::Linear {
                    modulus: cfg.number("volume", "modulus")?,
                },
            };
            VolumeLaw::Nonideal {
                n0: cfg.number("volume", "n0")?,
                p0: cfg.number("volume", "p0")?,
                a,
                comp,
            }
        }
        "ideal_gas" => VolumeLaw::IdealGas {
            z: cfg.list("volume", "z")?,
            h_ref: cfg.list_or("volume", "h_ref", &vec![0.0; n])?,
            s_ref: cfg.list_or("volume", "s_ref", &vec![0.0; n])?,
            t0: cfg.number("reference", "t0")?,
            p0: cfg.number("reference", "p0")?,
        },
        "tabulated" => {
            let rel = cfg.require("volume", "table")?;
            let path = base_dir.join(rel);
            let text = std::fs::read_to_string(&path)?;
            VolumeLaw::Tabulated(TabulatedVolume::from_csv(&text)?)
        }
        other => {
            return Err(Error::Config(format!(
                "unknown volume family `{other}`"
            )))
        }
    };

    let caloric = if let Some(v) = cfg.get("caloric", "cp") {
        CaloricLaw::Uniform(Polynomial::constant(parse_number(v)?))
    } else if let Some(v) = cfg.get("caloric", "cp_poly") {
        CaloricLaw::Uniform(Polynomial(parse_list(v)?))
    } else if let Some(v) = cfg.get("caloric", "cp_species") {
        let vals = parse_list(v)?;
        if vals.len() != n {
            return Err(Error::Config(format!(
                "cp_species needs {n} entries"
            )));
        }
        CaloricLaw::MassWeighted(vals.into_iter().map(Polynomial::constant).collect())
    } else if let (Some(tk), Some(tv)) = (
        cfg.get("caloric", "cp_t_knots"),
        cfg.get("caloric", "cp_values"),
    ) {
        CaloricLaw::TabulatedUniform {
            t_knots: parse_list(tk)?,
            values: parse_list(tv)?,
        }
    } else {
        return Err(Error::Config(
            "caloric section needs one of cp, cp_poly, cp_species, cp_t_knots+cp_values".into(),
        ));
    };

    let reference = ReferenceData {
        t0: cfg.number("reference", "t0")?,
        p0: cfg.number("reference", "p0")?,
        s00: CompositionFn {
            species_values: cfg.list_or("reference", "s00", &vec![0.0; n])?,
            ideal_mixing: cfg.flag_or("reference", "mixing_entropy", n > 1)?,
        },
        h00: CompositionFn {
            species_values: cfg.list_or("reference", "h00", &vec![0.0; n])?,
            ideal_mixing: false,
        },
    };

    ConstitutiveModel::new(masses, volume, caloric, reference)
}

#[cfg(test)]
mod tests {
    use super::*;

    const WATER: &str = "\
[model]
family = simple_law
molar_masses = 0.0180153

[volume]
v_ref = 1.805054151624549e-5
beta = 2.07e-4
modulus = 2.18e9
t_ref = 293.0
p_ref = 1.0e5

[caloric]
cp = 4180.0

[reference]
t0 = 293.0
p0 = 1.0e5
";

    #[test]
    fn parses_and_builds_water() {
        let cfg = KeyValueFile::parse(WATER).unwrap();
        let model = model_from_config(&cfg, Path::new(".")).unwrap();
        assert_eq!(model.n_species(), 1);
        let x = crate::state::Composition::pure(1, 0);
        let s = crate::state::ThermoStateTPX::new(293.0, 1e5, x).unwrap();
        let v = model.molar_volume(&s).unwrap();
        assert!((v - 1e-3 / 55.4).abs() < 1e-12);
    }

    #[test]
    fn dump_round_trips() {
        let cfg = KeyValueFile::parse(WATER).unwrap();
        let dumped = cfg.dump();
        let reparsed = KeyValueFile::parse(&dumped).unwrap();
        assert_eq!(cfg, reparsed);
        assert_eq!(dumped, reparsed.dump());
    }

    #[test]
    fn overrides_take_effect() {
        let mut cfg = KeyValueFile::parse(WATER).unwrap();
        cfg.apply_overrides(&["caloric.cp=5000".to_string()]).unwrap();
        assert_eq!(cfg.get("caloric", "cp"), Some("5000"));
    }

    #[test]
    fn missing_key_is_a_config_error() {
        let cfg = KeyValueFile::parse("[model]\nfamily = simple_law\n").unwrap();
        let err = model_from_config(&cfg, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
