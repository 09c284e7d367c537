//! CSV and JSON exports of plans, trajectories, kernels, Hopf–Lax surfaces,
//! sample paths and Dirichlet structures.

use std::io::Write;

use nalgebra::DMatrix;
use ricci_lab_core::dirichlet::DirichletStructure;
use ricci_lab_core::entropy_geo::GeodesicPlan;
use ricci_lab_core::evi_lab::FlowTrajectory;
use ricci_lab_core::hopflax::HopfLaxState;
use ricci_lab_core::kernel_sim::{HeatKernel, SamplePath};
use ricci_lab_core::mmspace::MetricMeasureSpace;
use ricci_lab_core::transport::{DualPotentials, TransportPlan};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{AppError, Result};
use crate::json::{float, float_array, fmt_f64, parse_f64, to_string};
use crate::spacefile::{space_to_value, SCHEMA};

/// Entries below this mass are left out of sparse plan exports.
pub const PLAN_THRESHOLD: f64 = 0.0;

#[derive(Debug, Serialize, Deserialize)]
struct PlanRow {
    x_index: usize,
    y_index: usize,
    mass: String,
}

/// Plan as CSV triples `x_index,y_index,mass` in row-major order.
pub fn plan_to_csv(plan: &TransportPlan) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (x, y, mass) in plan.support(PLAN_THRESHOLD) {
        w.serialize(PlanRow { x_index: x, y_index: y, mass: fmt_f64(mass) })?;
    }
    let bytes = w.into_inner().map_err(|e| AppError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads CSV triples back into a dense `rows × cols` coupling.
pub fn plan_from_csv(text: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut gamma = DMatrix::zeros(rows, cols);
    for rec in r.deserialize::<PlanRow>() {
        let rec = rec?;
        if rec.x_index >= rows || rec.y_index >= cols {
            return Err(AppError::Format(format!("plan entry ({}, {}) out of range", rec.x_index, rec.y_index)));
        }
        gamma[(rec.x_index, rec.y_index)] =
            parse_f64(&rec.mass).ok_or_else(|| AppError::Format(format!("bad mass `{}`", rec.mass)))?;
    }
    Ok(gamma)
}

pub fn plan_to_json(plan: &TransportPlan, potentials: Option<&DualPotentials>) -> String {
    let entries: Vec<Value> =
        plan.support(PLAN_THRESHOLD).into_iter().map(|(x, y, m)| json!([x, y, float(m)])).collect();
    let mut v = json!({
        "version": SCHEMA,
        "rows": plan.gamma.nrows(),
        "cols": plan.gamma.ncols(),
        "source": float_array(&plan.source),
        "target": float_array(&plan.target),
        "cost": float(plan.cost),
        "entries": entries,
    });
    if let Some(p) = potentials {
        v["potentials"] = json!({"phi": float_array(&p.phi), "phi_c": float_array(&p.phi_c), "anchor": p.anchor});
    }
    to_string(&v)
}

/// Dense coupling from [`plan_to_json`] output.
pub fn plan_from_json(text: &str) -> Result<DMatrix<f64>> {
    let v: Value = serde_json::from_str(text).map_err(crate::error::json_error("plan"))?;
    let dim = |k: &str| {
        v.get(k)
            .and_then(Value::as_u64)
            .map(|x| x as usize)
            .ok_or_else(|| AppError::Format(format!("plan lacks `{k}`")))
    };
    let (rows, cols) = (dim("rows")?, dim("cols")?);
    let mut gamma = DMatrix::zeros(rows, cols);
    for e in v.get("entries").and_then(Value::as_array).into_iter().flatten() {
        let x = e.get(0).and_then(Value::as_u64);
        let y = e.get(1).and_then(Value::as_u64);
        let m = e.get(2).and_then(crate::json::value_f64);
        match (x, y, m) {
            (Some(x), Some(y), Some(m)) if (x as usize) < rows && (y as usize) < cols => {
                gamma[(x as usize, y as usize)] = m
            }
            _ => return Err(AppError::Format(format!("bad plan entry {e}"))),
        }
    }
    Ok(gamma)
}

/// Measures along a flow as `t,point_index,mass`.
pub fn trajectory_csv(traj: &FlowTrajectory, m: &[f64]) -> String {
    let mut out = String::from("t,point_index,mass\n");
    for (t, rho) in traj.times.iter().zip(&traj.densities) {
        for (i, (r, mi)) in rho.iter().zip(m).enumerate() {
            out.push_str(&format!("{},{i},{}\n", fmt_f64(*t), fmt_f64(r * mi)));
        }
    }
    out
}

/// Displacement interpolation as `t,point_index,mass`.
pub fn interpolation_csv(plan: &GeodesicPlan) -> String {
    let mut out = String::from("t,point_index,mass\n");
    for (k, t) in plan.times().iter().enumerate() {
        for (i, mass) in plan.measure_at(k).iter().enumerate() {
            out.push_str(&format!("{},{i},{}\n", fmt_f64(*t), fmt_f64(*mass)));
        }
    }
    out
}

pub fn kernel_csv(kernel: &HeatKernel) -> String {
    let mut out = String::from("x,y,p\n");
    let n = kernel.p.nrows();
    for x in 0..n {
        for y in 0..n {
            out.push_str(&format!("{x},{y},{}\n", fmt_f64(kernel.p[(x, y)])));
        }
    }
    out
}

pub fn kernel_json(kernel: &HeatKernel) -> String {
    let n = kernel.p.nrows();
    let rows: Vec<Value> = (0..n).map(|x| Value::Array((0..n).map(|y| float(kernel.p[(x, y)])).collect())).collect();
    to_string(&json!({"version": SCHEMA, "t": float(kernel.t), "clip_mass": float(kernel.clip_mass), "p": rows}))
}

/// `x,value,Dplus,Dminus`.
pub fn hopf_lax_csv(state: &HopfLaxState, dplus: &[f64], dminus: &[f64]) -> String {
    let mut out = String::from("x,value,Dplus,Dminus\n");
    for x in 0..state.value.len() {
        out.push_str(&format!("{x},{},{},{}\n", fmt_f64(state.value[x]), fmt_f64(dplus[x]), fmt_f64(dminus[x])));
    }
    out
}

/// `path,t_jump,state`.
pub fn paths_csv<W: Write>(mut out: W, paths: &[SamplePath]) -> std::io::Result<()> {
    writeln!(out, "path,t_jump,state")?;
    for (p, path) in paths.iter().enumerate() {
        for (t, s) in path.jump_times.iter().zip(&path.states) {
            writeln!(out, "{p},{},{s}", fmt_f64(*t))?;
        }
    }
    Ok(())
}

/// Structure as `{w, ...space fields}`.
pub fn structure_json(ds: &DirichletStructure) -> String {
    let n = ds.n();
    let w = ds.weights();
    let mut v = space_to_value(ds.space(), None);
    v["w"] = Value::Array((0..n).map(|i| Value::Array((0..n).map(|j| float(w[(i, j)])).collect())).collect());
    to_string(&v)
}

pub fn spectrum_json(spectrum: &[f64]) -> String {
    to_string(&json!({"version": SCHEMA, "spectrum": float_array(spectrum)}))
}

/// Reads a vector `[...]` or `{"values": [...]}` of floats.
pub fn vector_from_json(text: &str) -> Result<Vec<f64>> {
    let v: Value = serde_json::from_str(text).map_err(crate::error::json_error("vector"))?;
    let arr = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| AppError::Format("expected `values` array".into()))?,
        _ => return Err(AppError::Format("expected an array".into())),
    };
    arr.iter()
        .map(|x| crate::json::value_f64(x).ok_or_else(|| AppError::Format("non-numeric vector entry".into())))
        .collect()
}

pub fn space_summary(space: &MetricMeasureSpace) -> Value {
    let v = space.validate();
    json!({
        "n": space.n(),
        "diameter": float(space.diameter()),
        "support": space.support().len(),
        "pass": v.pass,
        "max_triangle_violation": float(v.max_triangle_violation),
        "worst_triple": v.worst_triple.map(|(a, b, c)| vec![a, b, c]),
        "mass_defect": float(v.mass_defect),
        "max_asymmetry": float(v.max_asymmetry),
        "max_diagonal": float(v.max_diagonal),
        "max_negative": float(v.max_negative),
    })
}
