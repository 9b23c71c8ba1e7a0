//! Model and auxiliary-scheme files (TOML, `schema_version = 1`).

use anyhow::{bail, Context, Result};
use secreg_core::gaussian::GaussianModel;
use secreg_core::region::{AuxScheme, DistortionMetric, ReconstructionMap};
use secreg_core::{Alphabets, Pmf, SourceModel, StochasticMatrix};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ModelSpec {
    Discrete {
        model: SourceModel<f64>,
        distortion: Option<DistortionMetric<f64>>,
    },
    Gaussian(GaussianModel<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlphabets {
    x: Vec<String>,
    x_tilde: Vec<String>,
    y: Vec<String>,
    z: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    schema_version: u32,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_xtilde_given_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_yz_given_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_y_given_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_z_given_x: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distortion: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphabets: Option<RawAlphabets>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAux {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_u_given_xtilde: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_v_given_u: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p_q_given_v: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reconstruction: Option<Vec<Vec<usize>>>,
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        bail!("unsupported schema_version {v}, expected {SCHEMA_VERSION}");
    }
    Ok(())
}

fn matrix(name: &str, rows: Vec<Vec<f64>>) -> Result<StochasticMatrix<f64>> {
    StochasticMatrix::from_rows(rows).with_context(|| format!("invalid {name}"))
}

fn require<T>(name: &str, v: Option<T>) -> Result<T> {
    v.with_context(|| format!("missing field `{name}`"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Parses a model file of either kind.
pub fn parse_model_str(text: &str) -> Result<ModelSpec> {
    let raw: RawModel = toml::from_str(text).context("malformed model file")?;
    check_version(raw.schema_version)?;
    match raw.kind.as_str() {
        "discrete" => {
            if raw.rho_x.is_some() || raw.rho_y.is_some() || raw.rho_z.is_some() {
                bail!("correlation fields are only valid for kind = \"gaussian\"");
            }
            let px = Pmf::new(require("p_x", raw.p_x)?).context("invalid p_x")?;
            let enc = matrix("p_xtilde_given_x", require("p_xtilde_given_x", raw.p_xtilde_given_x)?)?;
            let model = match (raw.p_yz_given_x, raw.p_y_given_x, raw.p_z_given_x) {
                (Some(yz), None, None) => {
                    let a = raw.alphabets.context("`p_yz_given_x` requires an [alphabets] table")?;
                    let alphabets = Alphabets {
                        x: a.x,
                        x_tilde: a.x_tilde,
                        y: a.y,
                        z: a.z,
                    };
                    SourceModel::new(px, enc, matrix("p_yz_given_x", yz)?, alphabets)?
                }
                (None, Some(y), Some(z)) => {
                    let py = matrix("p_y_given_x", y)?;
                    let pz = matrix("p_z_given_x", z)?;
                    let m = SourceModel::with_independent_channels(px, enc, &py, &pz)?;
                    match raw.alphabets {
                        Some(a) => SourceModel::new(
                            m.px().clone(),
                            m.meas_enc().clone(),
                            m.meas_dec_eve().clone(),
                            Alphabets {
                                x: a.x,
                                x_tilde: a.x_tilde,
                                y: a.y,
                                z: a.z,
                            },
                        )?,
                        None => m,
                    }
                }
                _ => bail!("give either `p_yz_given_x` or both `p_y_given_x` and `p_z_given_x`"),
            };
            let distortion = raw
                .distortion
                .map(|rows| DistortionMetric::from_rows(rows).context("invalid distortion"))
                .transpose()?;
            if let Some(d) = &distortion {
                if d.source_size() != model.x_tilde_size() {
                    bail!(
                        "distortion has {} rows but |X~| = {}",
                        d.source_size(),
                        model.x_tilde_size()
                    );
                }
            }
            Ok(ModelSpec::Discrete { model, distortion })
        }
        "gaussian" => {
            if raw.p_x.is_some() || raw.p_xtilde_given_x.is_some() || raw.p_yz_given_x.is_some() {
                bail!("pmf fields are only valid for kind = \"discrete\"");
            }
            let m = GaussianModel::new(
                require("rho_x", raw.rho_x)?,
                require("rho_y", raw.rho_y)?,
                require("rho_z", raw.rho_z)?,
            )?;
            Ok(ModelSpec::Gaussian(m))
        }
        other => bail!("unknown model kind `{other}` (expected \"discrete\" or \"gaussian\")"),
    }
}

pub fn parse_model_spec(path: &Path) -> Result<ModelSpec> {
    parse_model_str(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Parses a discrete model file.
pub fn parse_model(path: &Path) -> Result<SourceModel<f64>> {
    match parse_model_spec(path)? {
        ModelSpec::Discrete { model, .. } => Ok(model),
        ModelSpec::Gaussian(_) => bail!("{} is a Gaussian model; a discrete model is required", path.display()),
    }
}

/// Canonical text of a model, which parses back to the same model.
pub fn write_model(spec: &ModelSpec) -> Result<String> {
    let raw = match spec {
        ModelSpec::Discrete { model, distortion } => {
            let a = model.alphabets();
            RawModel {
                schema_version: SCHEMA_VERSION,
                kind: "discrete".into(),
                p_x: Some(model.px().probs().to_vec()),
                p_xtilde_given_x: Some(model.meas_enc().to_rows()),
                p_yz_given_x: Some(model.meas_dec_eve().to_rows()),
                p_y_given_x: None,
                p_z_given_x: None,
                distortion: distortion.as_ref().map(DistortionMetric::to_rows),
                rho_x: None,
                rho_y: None,
                rho_z: None,
                alphabets: Some(RawAlphabets {
                    x: a.x.clone(),
                    x_tilde: a.x_tilde.clone(),
                    y: a.y.clone(),
                    z: a.z.clone(),
                }),
            }
        }
        ModelSpec::Gaussian(g) => RawModel {
            schema_version: SCHEMA_VERSION,
            kind: "gaussian".into(),
            p_x: None,
            p_xtilde_given_x: None,
            p_yz_given_x: None,
            p_y_given_x: None,
            p_z_given_x: None,
            distortion: None,
            rho_x: Some(g.rho_x),
            rho_y: Some(g.rho_y),
            rho_z: Some(g.rho_z),
            alphabets: None,
        },
    };
    Ok(toml::to_string(&raw)?)
}

fn parse_reconstruction(rows: Option<Vec<Vec<usize>>>) -> Result<Option<ReconstructionMap>> {
    rows.map(|r| ReconstructionMap::from_rows(r).context("invalid reconstruction"))
        .transpose()
}

/// Parses an auxiliary scheme for the lossy region and the simulator.
pub fn parse_aux_str(text: &str) -> Result<AuxScheme<f64>> {
    let raw: RawAux = toml::from_str(text).context("malformed aux file")?;
    check_version(raw.schema_version)?;
    let pu = matrix("p_u_given_xtilde", require("p_u_given_xtilde", raw.p_u_given_xtilde)?)?;
    let nu = pu.outputs();
    let pv = match raw.p_v_given_u {
        Some(r) => matrix("p_v_given_u", r)?,
        None => StochasticMatrix::trivial(nu),
    };
    let pq = match raw.p_q_given_v {
        Some(r) => matrix("p_q_given_v", r)?,
        None => StochasticMatrix::trivial(pv.outputs()),
    };
    let mut aux = AuxScheme::new(pu, pv, pq)?;
    aux.reconstruction = parse_reconstruction(raw.reconstruction)?;
    if let Some(m) = &aux.reconstruction {
        if m.u_size() != nu {
            bail!("reconstruction has {} rows but |U| = {nu}", m.u_size());
        }
    }
    Ok(aux)
}

pub fn parse_aux(path: &Path) -> Result<AuxScheme<f64>> {
    parse_aux_str(&read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Parses the `V`, `Q` channels of a lossless scheme, where `U = X̃`.
pub fn parse_lossless_aux(path: &Path, x_tilde: usize) -> Result<(StochasticMatrix<f64>, StochasticMatrix<f64>)> {
    let text = read(path)?;
    let raw: RawAux = toml::from_str(&text).with_context(|| format!("malformed aux file {}", path.display()))?;
    check_version(raw.schema_version)?;
    if raw.p_u_given_xtilde.is_some() || raw.reconstruction.is_some() {
        bail!("lossless schemes fix U = X~; omit `p_u_given_xtilde` and `reconstruction`");
    }
    let pv = match raw.p_v_given_u {
        Some(r) => matrix("p_v_given_u", r)?,
        None => StochasticMatrix::trivial(x_tilde),
    };
    if pv.inputs() != x_tilde {
        bail!("p_v_given_u has {} rows but |X~| = {x_tilde}", pv.inputs());
    }
    let pq = match raw.p_q_given_v {
        Some(r) => matrix("p_q_given_v", r)?,
        None => StochasticMatrix::trivial(pv.outputs()),
    };
    if pq.inputs() != pv.outputs() {
        bail!("p_q_given_v has {} rows but |V| = {}", pq.inputs(), pv.outputs());
    }
    Ok((pv, pq))
}

/// Canonical text of an auxiliary scheme.
pub fn write_aux(aux: &AuxScheme<f64>) -> Result<String> {
    let raw = RawAux {
        schema_version: SCHEMA_VERSION,
        p_u_given_xtilde: Some(aux.p_u_given_xtilde.to_rows()),
        p_v_given_u: Some(aux.p_v_given_u.to_rows()),
        p_q_given_v: Some(aux.p_q_given_v.to_rows()),
        reconstruction: aux.reconstruction.as_ref().map(ReconstructionMap::to_rows),
    };
    Ok(toml::to_string(&raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BINARY: &str = r#"
schema_version = 1
kind = "discrete"
p_x = [0.5, 0.5]
p_xtilde_given_x = [[0.9, 0.1], [0.1, 0.9]]
p_y_given_x = [[0.8, 0.2], [0.2, 0.8]]
p_z_given_x = [[0.7, 0.3], [0.3, 0.7]]
"#;

    #[test]
    fn parses_independent_channel_form() {
        let ModelSpec::Discrete { model, distortion } = parse_model_str(BINARY).unwrap() else {
            panic!()
        };
        assert!(distortion.is_none());
        assert_eq!((model.x_size(), model.x_tilde_size(), model.y_size(), model.z_size()), (2, 2, 2, 2));
        assert!((model.meas_dec_eve().get(0, 1) - 0.8 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn canonical_round_trip() {
        let spec = parse_model_str(BINARY).unwrap();
        let again = parse_model_str(&write_model(&spec).unwrap()).unwrap();
        assert_eq!(spec, again);
        let g = ModelSpec::Gaussian(GaussianModel::new(0.9, 0.8, 0.95).unwrap());
        assert_eq!(parse_model_str(&write_model(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn rejects_bad_rows_with_index() {
        let bad = BINARY.replace("[0.1, 0.9]]\np_y", "[0.1, 0.89]]\np_y");
        let err = format!("{:#}", parse_model_str(&bad).unwrap_err());
        assert!(err.contains("row 1") && err.contains("sum"), "{err}");
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let bad = BINARY.replace(
            "p_xtilde_given_x = [[0.9, 0.1], [0.1, 0.9]]",
            "p_xtilde_given_x = [[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.25, 0.25]]",
        );
        let err = format!("{:#}", parse_model_str(&bad).unwrap_err());
        assert!(err.contains("dimension"), "{err}");
    }

    #[test]
    fn rejects_schema_problems() {
        assert!(parse_model_str(&BINARY.replace("schema_version = 1", "schema_version = 2")).is_err());
        assert!(parse_model_str(&BINARY.replace("discrete", "mystery")).is_err());
        assert!(parse_model_str(&format!("{BINARY}\nextra = 1\n")).is_err());
    }

    #[test]
    fn aux_round_trip() {
        let text = "schema_version = 1\np_u_given_xtilde = [[0.9, 0.1], [0.2, 0.8]]\nreconstruction = [[0, 1], [1, 1]]\n";
        let aux = parse_aux_str(text).unwrap();
        assert_eq!(aux.v_size(), 1);
        assert_eq!(parse_aux_str(&write_aux(&aux).unwrap()).unwrap(), aux);
    }
}
