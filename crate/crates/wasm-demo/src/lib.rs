//! Browser bindings: each export takes plain numbers and returns a JSON string.

use fano_core::dims::{self, FanoParams, MultiDegree};
use fano_core::exactla::PrimeField;
use fano_core::fano::{fano_points_fq, stratify, tangent_dim};
use fano_core::forms::{random_vanishing_form, PolySystem};
use fano_core::grass::{random_plane, subspace_distance};
use fano_core::ssa::{generate_instance, identifiability_report, recover_from_epochs, InstanceOptions, RecoveryOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const CENSUS_BUDGET: u128 = 2_000_000;
const COEFF_BOUND: i64 = 3;

fn parse_degrees(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| format!("bad degree {t:?}")))
        .collect()
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn dims_report(n: i64, k: i64, degrees: &str) -> Result<Value, String> {
    let degrees = parse_degrees(degrees)?;
    let p = FanoParams::new(n, k, MultiDegree::new(degrees.clone()).map_err(err)?).map_err(err)?;
    let thresholds = if degrees.iter().all(|&d| d == 2) {
        let th = dims::min_epoch_differences(n, k).map_err(err)?;
        json!({ "delta_based": th.delta_based, "sharp_closed_form": th.sharp_closed_form, "upper_bound": th.upper_bound })
    } else {
        Value::Null
    };
    Ok(json!({
        "n": n,
        "k": k,
        "degrees": degrees,
        "grassmannian_dim": p.grassmannian_dim().map_err(err)? as i64,
        "delta": dims::delta(&p).map_err(err)? as i64,
        "identifiable": dims::identifiable(&p).map_err(err)?,
        "epoch_thresholds": thresholds,
        "stratification": dims::stratification_table(&p).map_err(err)?,
    }))
}

pub fn census_report(q: u64, n: usize, k: usize, degrees: &str, seed: u64) -> Result<Value, String> {
    let degrees = parse_degrees(degrees)?;
    let field = PrimeField::new(q).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plane = random_plane(&field, n, k, COEFF_BOUND, &mut rng).map_err(err)?;
    let forms = degrees
        .iter()
        .map(|&d| random_vanishing_form(&field, n, d, &plane, COEFF_BOUND, &mut rng))
        .collect::<fano_core::Result<Vec<_>>>()
        .map_err(err)?;
    let sys = PolySystem::new(forms).map_err(err)?;
    let points = fano_points_fq(&sys, k, CENSUS_BUDGET).map_err(err)?;
    let strata = stratify(&points, &plane).map_err(err)?;
    let planes = points
        .iter()
        .map(|pt| {
            Ok(json!({
                "basis": pt.basis().to_rows(),
                "tangent_dim": tangent_dim(&sys, pt).map_err(err)?,
                "is_fixed_plane": *pt == plane,
            }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({
        "q": q,
        "n": n,
        "k": k,
        "degrees": degrees,
        "fixed_plane": plane.basis().to_rows(),
        "count": points.len(),
        "strata": strata.iter().map(|(kp, c)| (kp.to_string(), json!(c))).collect::<serde_json::Map<_, _>>(),
        "planes": planes,
    }))
}

pub fn ssa_report(n: usize, k: usize, s: usize, seed: u64) -> Result<Value, String> {
    let report = identifiability_report(n as i64, k as i64, s as i64, None).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = generate_instance(&InstanceOptions::new(n, k, s), &mut rng).map_err(err)?;
    let truth = inst.ground_truth.as_ref().ok_or("instance has no ground truth")?;
    let opts = RecoveryOptions { restarts: 30, ..RecoveryOptions::default() };
    let rec = recover_from_epochs(&inst.epochs, k, &opts, &mut rng).map_err(err)?;
    let planes = rec
        .planes
        .iter()
        .map(|p| {
            let d = subspace_distance(&p.plane, truth).map_err(err)?;
            Ok(json!({ "residual": p.residual, "hits": p.hits, "angle_to_truth": d.max_principal_angle }))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(json!({ "report": report, "clusters": planes }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Expected dimension, identifiability and the stratification by `dim(L ∩ L')`.
#[wasm_bindgen(js_name = dimsReport)]
pub fn dims_report_js(n: i32, k: i32, degrees: &str) -> Result<String, JsError> {
    to_js(dims_report(n.into(), k.into(), degrees))
}

/// All `F_q`-rational k-planes on a random system vanishing on a random k-plane.
#[wasm_bindgen(js_name = censusReport)]
pub fn census_report_js(q: u32, n: u32, k: u32, degrees: &str, seed: u32) -> Result<String, JsError> {
    to_js(census_report(q.into(), n as usize, k as usize, degrees, seed.into()))
}

/// Identifiability report and multi-start recovery on a planted population instance.
#[wasm_bindgen(js_name = ssaReport)]
pub fn ssa_report_js(n: u32, k: u32, s: u32, seed: u32) -> Result<String, JsError> {
    to_js(ssa_report(n as usize, k as usize, s as usize, seed.into()))
}
