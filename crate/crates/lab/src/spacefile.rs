//! Space files: `{version: "ricci-lab/1", n, d, m, labels?, model?}`.
//!
//! When a `model` is present the grid is rebuilt from it on load and the
//! stored tables must agree with the rebuilt ones.

use std::path::Path;

use nalgebra::DMatrix;
use ricci_lab_core::mmspace::{
    build_circle_grid, build_interval_grid, build_torus_grid, GridSpace, MetricMeasureSpace, Model,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{io_error, json_error, AppError, Result};
use crate::json::{float, float_array, to_string, value_f64};

pub const SCHEMA: &str = "ricci-lab/1";

/// Grid description sufficient to rebuild a [`GridSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Circle { length: f64, n: usize },
    Interval { length: f64, n: usize },
    Torus { lengths: [f64; 2], shape: [usize; 2] },
}

impl ModelSpec {
    pub fn build(&self) -> Result<GridSpace> {
        Ok(match *self {
            ModelSpec::Circle { length, n } => build_circle_grid(length, n)?,
            ModelSpec::Interval { length, n } => build_interval_grid(length, n)?,
            ModelSpec::Torus { lengths, shape } => build_torus_grid(lengths[0], shape[0], lengths[1], shape[1])?,
        })
    }

    /// Recovers the description of a full lattice grid.
    pub fn of_grid(gs: &GridSpace) -> Option<Self> {
        let lattice = gs.lattice()?;
        Some(match gs.model() {
            Model::Circle { length } => ModelSpec::Circle { length, n: gs.n() },
            Model::Interval { length } => ModelSpec::Interval { length, n: gs.n() },
            Model::Torus { lengths } => ModelSpec::Torus { lengths, shape: lattice },
        })
    }
}

/// A loaded space, with its grid when the file names a model.
#[derive(Clone, Debug)]
pub struct LoadedSpace {
    pub space: MetricMeasureSpace,
    pub grid: Option<GridSpace>,
}

pub fn space_to_value(space: &MetricMeasureSpace, model: Option<&ModelSpec>) -> Value {
    let n = space.n();
    let d: Vec<Value> = (0..n).map(|i| Value::Array((0..n).map(|j| float(space.d(i, j))).collect())).collect();
    let mut v = json!({
        "version": SCHEMA,
        "n": n,
        "d": d,
        "m": float_array(space.m()),
    });
    if let Some(labels) = space.labels() {
        v["labels"] = json!(labels);
    }
    if let Some(model) = model {
        v["model"] = serde_json::to_value(model).expect("model serializes");
    }
    v
}

pub fn space_to_string(space: &MetricMeasureSpace, model: Option<&ModelSpec>) -> String {
    to_string(&space_to_value(space, model))
}

pub fn grid_to_string(gs: &GridSpace) -> String {
    space_to_string(gs.base(), ModelSpec::of_grid(gs).as_ref())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| AppError::Format(format!("space file lacks field `{key}`")))
}

fn floats(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| AppError::Format(format!("`{what}` must be an array")))?
        .iter()
        .map(|x| value_f64(x).ok_or_else(|| AppError::Format(format!("`{what}` holds a non-number"))))
        .collect()
}

fn parse_tables(v: &Value, checked: bool) -> Result<MetricMeasureSpace> {
    let obj = v.as_object().ok_or_else(|| AppError::Format("space file must hold an object".into()))?;
    for key in obj.keys() {
        if !["version", "n", "d", "m", "labels", "model"].contains(&key.as_str()) {
            return Err(AppError::Format(format!("unknown field `{key}` in space file")));
        }
    }
    let version = field(v, "version")?.as_str().unwrap_or_default();
    if version != SCHEMA {
        return Err(AppError::Format(format!("unsupported version `{version}`")));
    }
    let n =
        field(v, "n")?.as_u64().ok_or_else(|| AppError::Format("`n` must be a nonnegative integer".into()))? as usize;
    let rows = field(v, "d")?.as_array().ok_or_else(|| AppError::Format("`d` must be an array of rows".into()))?;
    if rows.len() != n {
        return Err(AppError::Format(format!("`d` has {} rows, expected {n}", rows.len())));
    }
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let r = floats(row, "d")?;
        if r.len() != n {
            return Err(AppError::Format(format!("row {i} of `d` has {} entries, expected {n}", r.len())));
        }
        for (j, x) in r.into_iter().enumerate() {
            d[(i, j)] = x;
        }
    }
    let m = floats(field(v, "m")?, "m")?;
    let mut space = if checked { MetricMeasureSpace::new(d, m)? } else { MetricMeasureSpace::from_parts(d, m)? };
    if let Some(labels) = v.get("labels") {
        let labels: Vec<String> = serde_json::from_value(labels.clone()).map_err(json_error("labels"))?;
        space = space.with_labels(labels)?;
    }
    Ok(space)
}

/// Parses the tables without enforcing the metric and probability axioms,
/// so that `validate` can report on broken files.
pub fn raw_space_from_str(s: &str) -> Result<MetricMeasureSpace> {
    let v: Value = serde_json::from_str(s).map_err(json_error("space file"))?;
    parse_tables(&v, false)
}

pub fn space_from_value(v: &Value) -> Result<LoadedSpace> {
    let space = parse_tables(v, true)?;
    let n = space.n();
    let grid = match v.get("model") {
        None => None,
        Some(mv) => {
            let spec: ModelSpec = serde_json::from_value(mv.clone()).map_err(json_error("model"))?;
            let gs = spec.build()?;
            if gs.n() != n {
                return Err(AppError::Format("model size differs from `n`".into()));
            }
            for i in 0..n {
                for j in 0..n {
                    if (gs.base().d(i, j) - space.d(i, j)).abs() > 1e-12 {
                        return Err(AppError::Format(format!("distance ({i},{j}) disagrees with the model")));
                    }
                }
            }
            Some(gs.with_space(space.clone())?)
        }
    };
    Ok(LoadedSpace { space, grid })
}

pub fn space_from_str(s: &str) -> Result<LoadedSpace> {
    let v: Value = serde_json::from_str(s).map_err(json_error("space file"))?;
    space_from_value(&v)
}

pub fn load_space(path: &Path) -> Result<LoadedSpace> {
    let s = std::fs::read_to_string(path).map_err(io_error(path))?;
    space_from_str(&s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        }
    }
    std::fs::write(path, text).map_err(io_error(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_is_bit_exact() {
        let gs = build_circle_grid(2.0 * std::f64::consts::PI, 7).unwrap();
        let text = grid_to_string(&gs);
        let back = space_from_str(&text).unwrap();
        assert_eq!(back.space.distances(), gs.base().distances());
        assert_eq!(back.space.m(), gs.base().m());
        assert!(back.grid.is_some());
        assert_eq!(grid_to_string(back.grid.as_ref().unwrap()), text);
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let s = MetricMeasureSpace::two_point(1.0, 0.5).unwrap();
        let mut v = space_to_value(&s, None);
        v["extra"] = json!(1);
        assert!(space_from_value(&v).is_err());
        let mut v = space_to_value(&s, None);
        v["version"] = json!("ricci-lab/0");
        assert!(space_from_value(&v).is_err());
    }
}
