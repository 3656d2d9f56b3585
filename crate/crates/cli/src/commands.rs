//! Command implementations. Every command resolves a key/value config
//! (embedded default, then file, then `--set` overrides), runs the library,
//! and writes deterministic artifacts into the output directory.

use std::path::{Path, PathBuf};

use helmix::constitutive::config::{model_from_config, KeyValueFile};
use helmix::constitutive::{ConstitutiveModel, SampleRegion};
use helmix::limits::{self, LimitMode, ModelFamily};
use helmix::mixing::MixingModel;
use helmix::potentials;
use helmix::regimes::{self, ReferenceScales};
use helmix::stability;
use helmix::state::{densities_from_tpx, Composition, ThermoStateTPX};
use helmix::Error;

use crate::output::{config_hash, header, num, write_atomic};

/// Default single-species water model at (293 K, 1 bar).
pub const DEFAULT_MODEL: &str = "\
[model]
family = simple_law
species = H2O
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

/// Default limit family: drifting volume-additive binary, global mode.
pub const DEFAULT_FAMILY: &str = "\
[family]
kind = volume_additive_drift
drift = 0.3
t = 298.0
schedule_min_exp = 2
schedule_max_exp = 9

[probes]
on = 10
off = 10
";

pub struct Ctx {
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub dump_config: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn resolve_config(
    default_text: &str,
    path: Option<&Path>,
    overrides: &[String],
) -> Result<(KeyValueFile, PathBuf), Error> {
    let mut cfg = KeyValueFile::parse(default_text)?;
    let mut base = PathBuf::from(".");
    if let Some(p) = path {
        cfg = KeyValueFile::load(p)?;
        base = p.parent().map(Path::to_path_buf).unwrap_or(base);
    }
    cfg.apply_overrides(overrides)?;
    Ok((cfg, base))
}

fn emit(ctx: &Ctx, name: &str, hash: u64, body: String) -> Result<PathBuf, Error> {
    let content = format!("{}{}", header(hash, ctx.seed), body);
    Ok(write_atomic(&ctx.out_dir, name, &content)?)
}

fn maybe_dump(ctx: &Ctx, cfg: &KeyValueFile) {
    if ctx.dump_config {
        print!("{}", cfg.dump());
    }
}

/// `eval`: potential bundles at a list of chart states.
pub fn run_eval(
    ctx: &Ctx,
    model_path: Option<&Path>,
    states_path: Option<&Path>,
    overrides: &[String],
) -> Result<Vec<PathBuf>, Error> {
    let (cfg, base) = resolve_config(DEFAULT_MODEL, model_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let model = model_from_config(&cfg, &base)?;
    let n = model.n_species();

    let states = match states_path {
        Some(p) => parse_states(&std::fs::read_to_string(p)?, n)?,
        None => default_states(&model),
    };

    let mut rows = Vec::new();
    for (t, p, x) in &states {
        let comp = Composition::new(x)?;
        let st = ThermoStateTPX::new(*t, *p, comp)?;
        let rho = densities_from_tpx(&st, &model)?;
        let bundle = potentials::evaluate(&model, *t, &rho)?;
        rows.push((st, bundle));
    }

    let mut outputs = Vec::new();
    match ctx.format {
        Format::Csv => {
            let mut body = String::from("T[K],p_in[Pa]");
            for i in 0..n {
                body.push_str(&format!(",x_{}[-]", i + 1));
            }
            body.push_str(",f[Pa],p[Pa]");
            for i in 0..n {
                body.push_str(&format!(",mu_{}[J/kg]", i + 1));
            }
            body.push_str(
                ",s[J/(kg K)],h[J/kg],u[J/kg],g[J/kg],cp[J/(kg K)],cv[J/(kg K)],d2f_dt2[Pa/K^2]\n",
            );
            for (st, b) in &rows {
                body.push_str(&num(st.temperature));
                body.push(',');
                body.push_str(&num(st.pressure));
                for xi in st.composition.as_slice() {
                    body.push(',');
                    body.push_str(&num(*xi));
                }
                body.push(',');
                body.push_str(&num(b.f));
                body.push(',');
                body.push_str(&num(b.pressure));
                for m in &b.mu {
                    body.push(',');
                    body.push_str(&num(*m));
                }
                for v in [
                    b.entropy,
                    b.enthalpy,
                    b.internal_energy,
                    b.gibbs,
                    b.cp,
                    b.cv,
                    b.d2f_dt2,
                ] {
                    body.push(',');
                    body.push_str(&num(v));
                }
                body.push('\n');
            }
            outputs.push(emit(ctx, "eval.csv", hash, body)?);
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(st, b)| {
                    serde_json::json!({
                        "state": st,
                        "bundle": b,
                    })
                })
                .collect();
            let body = serde_json::to_string_pretty(&items).expect("serializable");
            outputs.push(emit(ctx, "eval.json", hash, body)?);
        }
    }
    Ok(outputs)
}

fn parse_states(text: &str, n: usize) -> Result<Vec<(f64, f64, Vec<f64>)>, Error> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(vals) = parsed else {
            if out.is_empty() {
                continue; // header row
            }
            return Err(Error::Config(format!(
                "states file line {}: expected numbers",
                lineno + 1
            )));
        };
        if vals.len() != 2 + n {
            return Err(Error::Config(format!(
                "states file line {}: expected T,p,x_1..x_{n}",
                lineno + 1
            )));
        }
        out.push((vals[0], vals[1], vals[2..].to_vec()));
    }
    if out.is_empty() {
        return Err(Error::Config("states file holds no states".into()));
    }
    Ok(out)
}

fn default_states(model: &ConstitutiveModel) -> Vec<(f64, f64, Vec<f64>)> {
    let t0 = model.reference_temperature();
    let p0 = model.reference_pressure();
    let x = Composition::equimolar(model.n_species());
    let mut out = Vec::new();
    for tf in [0.95, 1.0, 1.05] {
        for pf in [0.8, 1.0, 1.25] {
            out.push((t0 * tf, p0 * pf, x.as_slice().to_vec()));
        }
    }
    out
}

fn region_from_config(cfg: &KeyValueFile, model: &ConstitutiveModel) -> Result<SampleRegion, Error> {
    let t0 = model.reference_temperature();
    let p0 = model.reference_pressure();
    Ok(SampleRegion {
        t_range: (
            cfg.number_or("grid", "t_min", 0.93 * t0)?,
            cfg.number_or("grid", "t_max", 1.07 * t0)?,
        ),
        t_count: cfg.number_or("grid", "t_count", 21.0)? as usize,
        p_range: (
            cfg.number_or("grid", "p_min", 0.5 * p0)?,
            cfg.number_or("grid", "p_max", 5.0 * p0)?,
        ),
        p_count: cfg.number_or("grid", "p_count", 21.0)? as usize,
        log_p: cfg.flag_or("grid", "log_p", false)?,
        x_per_edge: cfg.number_or("grid", "x_per_edge", 11.0)? as usize,
    })
}

/// `consistency`: stability report over a sampled region.
pub fn run_consistency(
    ctx: &Ctx,
    model_path: Option<&Path>,
    overrides: &[String],
) -> Result<(Vec<PathBuf>, bool), Error> {
    let (cfg, base) = resolve_config(DEFAULT_MODEL, model_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let model = model_from_config(&cfg, &base)?;
    let region = region_from_config(&cfg, &model)?;
    let report = stability::stability_report(&model, &region);
    let mut outputs = Vec::new();
    match ctx.format {
        Format::Csv => {
            outputs.push(emit(ctx, "consistency.csv", hash, stability::report_to_csv(&report))?);
            outputs.push(emit(
                ctx,
                "consistency_offenders.csv",
                hash,
                stability::offenders_to_csv(&report),
            )?);
        }
        Format::Json => {
            let body = serde_json::to_string_pretty(&report).expect("serializable");
            outputs.push(emit(ctx, "consistency.json", hash, body)?);
        }
    }
    Ok((outputs, report.stable))
}

fn family_from_config(cfg: &KeyValueFile, seed: u64) -> Result<(ModelFamily, Vec<helmix::state::MassDensities>, f64), Error> {
    let kind_name = cfg.require("family", "kind")?;
    let t = cfg.number_or("family", "t", 298.0)?;
    let lo = cfg.number_or("family", "schedule_min_exp", 2.0)? as i32;
    let hi = cfg.number_or("family", "schedule_max_exp", 9.0)? as i32;
    let mut family = match kind_name {
        "volume_additive_drift" => {
            ModelFamily::volume_additive_drift(cfg.number_or("family", "drift", 0.3)?)
        }
        "simple_law_fixed_beta" => ModelFamily::simple_law_fixed_beta(),
        "simple_law_scaled_beta" => ModelFamily::simple_law_scaled_beta(
            cfg.number_or("family", "beta0", 6.07)?,
            cfg.number_or("family", "alpha0", 0.46)?,
        ),
        "nonideal_banded" => {
            ModelFamily::nonideal_banded(cfg.number_or("family", "a_quad", 0.05)?)
        }
        other => return Err(Error::Config(format!("unknown family kind `{other}`"))),
    };
    let p_ref = family.reference_pressure();
    family.schedule = (lo..=hi).map(|e| 10f64.powi(e) * p_ref).collect();
    // explicit probe states win over generated ones; rows of partial mass
    // densities separated by semicolons
    let probes = match cfg.get("probes", "list") {
        Some(list) => {
            let mut out = Vec::new();
            for row in list.split(';') {
                let vals = helmix::constitutive::config::parse_list(row)?;
                if vals.len() != family.n_species() {
                    return Err(Error::Config(format!(
                        "probe row `{row}` needs {} densities",
                        family.n_species()
                    )));
                }
                out.push(helmix::state::MassDensities::new(vals)?);
            }
            out
        }
        None => {
            let on = cfg.number_or("probes", "on", 10.0)? as usize;
            let off = cfg.number_or("probes", "off", 10.0)? as usize;
            limits::probe_states(&family, t, on, off, seed)?
        }
    };
    Ok((family, probes, t))
}

/// `limit-sweep`: drive a family through its schedule and report trends.
pub fn run_limit_sweep(
    ctx: &Ctx,
    family_path: Option<&Path>,
    overrides: &[String],
) -> Result<Vec<PathBuf>, Error> {
    let (cfg, _) = resolve_config(DEFAULT_FAMILY, family_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let (family, probes, t) = family_from_config(&cfg, ctx.seed)?;
    let report = limits::family_sweep(&family, t, &probes)?;
    let mut outputs = Vec::new();
    match ctx.format {
        Format::Csv => {
            let mut body = String::from(
                "probe[-],on_constraint[-],index[-],modulus[Pa],f[Pa],pressure[Pa],dv_dt[m3/(mol K)],gap_to_limit[Pa]\n",
            );
            for (pi, rec) in report.probes.iter().enumerate() {
                for (i, k) in report.schedule.iter().enumerate() {
                    let gap = rec
                        .limit_value
                        .map(|fl| (rec.f_values[i] - fl).abs());
                    body.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        pi,
                        rec.on_constraint,
                        i,
                        num(*k),
                        num(rec.f_values[i]),
                        num(rec.p_values[i]),
                        num(rec.dv_dt_values[i]),
                        gap.map_or(String::from("nan"), num),
                    ));
                }
            }
            outputs.push(emit(ctx, "limit_sweep.csv", hash, body)?);
        }
        Format::Json => {
            let body = serde_json::to_string_pretty(&report).expect("serializable");
            outputs.push(emit(ctx, "limit_sweep.json", hash, body)?);
        }
    }
    // mode assumptions worth surfacing as a hard error (exit code 4)
    if matches!(family.mode, LimitMode::Local { .. }) {
        let worst = limits::local_threshold_check(&family, t, 7)?;
        if worst < 0.0 {
            return Err(Error::AssumptionViolation(format!(
                "local thresholds fail the positivity condition (worst eigenvalue {worst:e})"
            )));
        }
    }
    Ok(outputs)
}

/// Default mixing parameters: symmetric reaction at normal conditions.
pub const DEFAULT_MIXING: &str = "\
[mixing]
dg = 0.0
dv = 1.0e-5
t = 298.0
p = 1.0e5
points = 101
";

/// Default scaling-report parameters.
pub const DEFAULT_REGIME: &str = "\
[regime]
eps = 1.0e-4
t_min_factor = 0.8
t_max_factor = 1.2
t_count = 21
";

/// `excess-volume`: mixing curve (x, extent, excess volume). Flags arrive
/// as overrides on top of the (optional) config file.
pub fn run_excess_volume(
    ctx: &Ctx,
    model_path: Option<&Path>,
    overrides: &[String],
) -> Result<Vec<PathBuf>, Error> {
    let (cfg, _) = resolve_config(DEFAULT_MIXING, model_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let dg = cfg.number_or("mixing", "dg", 0.0)?;
    let dv = cfg.number_or("mixing", "dv", 1e-5)?;
    let temperature = cfg.number_or("mixing", "t", 298.0)?;
    let pressure = cfg.number_or("mixing", "p", 1e5)?;
    let points = cfg.number_or("mixing", "points", 101.0)? as usize;
    let mut model = MixingModel::normal_conditions(dv, dg)?;
    model.temperature = temperature;
    let rows = model.curve(pressure, points)?;
    let mut outputs = Vec::new();
    match ctx.format {
        Format::Csv => {
            let mut body = String::from("x[-],gamma[-],excess_volume[m3/mol]\n");
            for (x, g, v) in &rows {
                body.push_str(&format!("{},{},{}\n", num(*x), num(*g), num(*v)));
            }
            outputs.push(emit(ctx, "excess_volume.csv", hash, body)?);
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|(x, g, v)| serde_json::json!({"x": x, "gamma": g, "excess_volume": v}))
                .collect();
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "model": model,
                "pressure": pressure,
                "rows": items,
            }))
            .expect("serializable");
            outputs.push(emit(ctx, "excess_volume.json", hash, body)?);
        }
    }
    Ok(outputs)
}

/// `regime`: characteristic numbers, scaling parameters, inequality margins
/// and buoyancy-limit coefficients, plus a temperature sweep.
pub fn run_regime(
    ctx: &Ctx,
    model_path: Option<&Path>,
    overrides: &[String],
) -> Result<Vec<PathBuf>, Error> {
    let (cfg, _) = resolve_config(DEFAULT_REGIME, model_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let scales = ReferenceScales::water(1.0, 1e3);
    let epsilon = cfg.number_or("regime", "eps", 1e-4)?;
    let t_range = (
        cfg.number_or("regime", "t_min_factor", 0.8)? * scales.t_ref,
        cfg.number_or("regime", "t_max_factor", 1.2)? * scales.t_ref,
    );
    let t_count = cfg.number_or("regime", "t_count", 21.0)? as usize;
    let report = regimes::boussinesq_report(&scales, epsilon)?;
    let pure = regimes::leading_order_inequality(&scales, epsilon, scales.t_ref, &[], &[], &[])?;
    let mut outputs = Vec::new();
    match ctx.format {
        Format::Json => {
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "scales": scales,
                "report": report,
                "inequality_at_reference": pure,
            }))
            .expect("serializable");
            outputs.push(emit(ctx, "regime.json", hash, body)?);
        }
        Format::Csv => {
            let mut body = String::from("T[K],lhs[-],rhs[-],margin[-]\n");
            for i in 0..t_count {
                let t = t_range.0
                    + (t_range.1 - t_range.0) * i as f64 / (t_count.max(2) - 1) as f64;
                let m =
                    regimes::leading_order_inequality(&scales, epsilon, t, &[], &[], &[])?;
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    num(t),
                    num(m.lhs),
                    num(m.rhs),
                    num(m.margin)
                ));
            }
            outputs.push(emit(ctx, "regime.csv", hash, body)?);
        }
    }
    Ok(outputs)
}

/// `validate`: constitutive diagnostics. Violations leave exit code 4 with
/// the diagnostic file still written.
pub fn run_validate(
    ctx: &Ctx,
    model_path: Option<&Path>,
    overrides: &[String],
) -> Result<(Vec<PathBuf>, bool), Error> {
    let (cfg, base) = resolve_config(DEFAULT_MODEL, model_path, overrides)?;
    maybe_dump(ctx, &cfg);
    let hash = config_hash(&cfg.dump());
    let model = model_from_config(&cfg, &base)?;
    let region = region_from_config(&cfg, &model)?;
    let diags = helmix::constitutive::validate_model(&model, &region);
    let has_violations = diags
        .iter()
        .any(|d| d.severity == helmix::constitutive::Severity::Violation);
    let mut outputs = Vec::new();
    match ctx.format {
        Format::Json => {
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "model_config": cfg.dump(),
                "diagnostics": diags,
            }))
            .expect("serializable");
            outputs.push(emit(ctx, "validate.json", hash, body)?);
        }
        Format::Csv => {
            let mut body = String::from("severity[-],T[K],p[Pa],message[-]\n");
            for d in &diags {
                body.push_str(&format!(
                    "{:?},{},{},\"{}\"\n",
                    d.severity,
                    d.temperature.map_or(String::from(""), num),
                    d.pressure.map_or(String::from(""), num),
                    d.message.replace('"', "'"),
                ));
            }
            outputs.push(emit(ctx, "validate.csv", hash, body)?);
        }
    }
    Ok((outputs, has_violations))
}
