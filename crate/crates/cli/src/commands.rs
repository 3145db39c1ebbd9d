//! Subcommand implementations. Each returns the artifacts it produced; the first one is the
//! primary output.

use std::f64::consts::PI;
use std::sync::Arc;

use besselpot::convolution::Convolver;
use besselpot::eigen::{
    calibrate_thresholds, cube_bounds, cube_table, direct_eigenpair, BetaStrategy, CubeFunctional, CubeValue,
    EigenSettings,
};
use besselpot::geometry::{
    ball_mass, bessel_distance, comparison_constant, distance_gap, gap_bound, sharp_comparison_constant,
    DoublingSweep,
};
use besselpot::hankel::{hankel_transform, XI_CELLS};
use besselpot::measure::{DensityMeasure, Factor, Shape};
use besselpot::specfun::{bessel_kernel_profile, tent_profile, Radial, RadialProfile};
use besselpot::trace::{estimate_constants, TraceProblem};
use besselpot::translation::{translate_point, Translatable, TranslationPlan};
use besselpot::{Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::{KernelSpec, MeasureSpec, ProblemSpec, Thresholds};

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn csv(name: &str, header: &str, rows: &[Vec<f64>]) -> Self {
        let mut s = String::with_capacity(rows.len() * 48);
        s.push_str(header);
        s.push('\n');
        for r in rows {
            let line: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        Self {
            name: name.to_string(),
            contents: s,
        }
    }

    fn json(name: &str, value: &Value) -> Self {
        let mut contents = serde_json::to_string_pretty(value).expect("json value serialises");
        contents.push('\n');
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

fn header(spec: &ProblemSpec) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("version".into(), json!(besselpot::VERSION));
    m.insert("spec_digest".into(), json!(spec.digest()));
    m
}

fn required<'a>(m: &'a Option<MeasureSpec>, field: &str, cmd: &str) -> Result<&'a MeasureSpec, CliError> {
    m.as_ref()
        .ok_or_else(|| CliError::Spec(vec![format!("{field}: required by `{cmd}`")]))
}

/// Tensor product of the per-axis points, last axis fastest.
fn tensor_points(axis: &[f64], n: usize) -> Vec<Vec<f64>> {
    let total = axis.len().pow(n as u32);
    (0..total)
        .map(|mut k| {
            let mut x = vec![0.0; n];
            for c in x.iter_mut().rev() {
                *c = axis[k % axis.len()];
                k /= axis.len();
            }
            x
        })
        .collect()
}

fn coord_header(n: usize, name: &str) -> String {
    if n == 1 {
        name.to_string()
    } else {
        (1..=n).map(|i| format!("{name}{i}")).collect::<Vec<_>>().join(",")
    }
}

fn row(x: &[f64], v: f64) -> Vec<f64> {
    let mut r = x.to_vec();
    r.push(v);
    r
}

pub fn kernel(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let g = bessel_kernel_profile(&params, spec.nu)?;
    let radii = spec.eval.clone().unwrap_or_else(|| {
        let m = spec.grid.m;
        (1..=m).map(|k| spec.grid.x_max * k as f64 / m as f64).collect()
    });
    let rows: Vec<Vec<f64>> = radii
        .iter()
        .map(|&r| vec![r, g.value(r), g.neg_derivative(r).unwrap_or(f64::NAN)])
        .collect();
    Ok(vec![Artifact::csv("kernel.csv", "r,G,negGprime", &rows)])
}

pub fn translate(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let f = required(&spec.function, "function", "translate")?.build(spec.n(), &grid)?;
    let t = spec
        .t
        .clone()
        .ok_or_else(|| CliError::Spec(vec!["t: required by `translate`".into()]))?;
    let plan = TranslationPlan::new(&params, 64)?;
    let density = |z: &[f64]| f.density(z);
    let points = tensor_points(&spec.axis_points(), spec.n());
    let rows = points
        .par_iter()
        .map(|x| Ok(row(x, translate_point(Translatable::Fn(&density), &t, x, &plan)?)))
        .collect::<Result<Vec<_>, besselpot::Error>>()?;
    let head = format!("{},Ttf", coord_header(spec.n(), "x"));
    Ok(vec![Artifact::csv("translate.csv", &head, &rows)])
}

enum Kernel {
    Profile(RadialProfile<f64>),
    Custom(Factor<f64>),
}

pub fn convolve(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let gamma = required(&spec.measure, "measure", "convolve")?.build(spec.n(), &grid)?;
    let kernel = match &spec.kernel {
        KernelSpec::Bessel => Kernel::Profile(bessel_kernel_profile(&params, spec.nu)?),
        KernelSpec::Tent => Kernel::Profile(tent_profile(&params)),
        KernelSpec::Custom { nodes, values } => Kernel::Custom(Factor::new(
            1.0,
            Shape::Linear {
                nodes: nodes.clone(),
                values: values.clone(),
                extend: false,
            },
        )),
    };
    let conv = Convolver::new(&params)?;
    let points = tensor_points(&spec.axis_points(), spec.n());
    let rows = points
        .par_iter()
        .map(|x| {
            let v = match (&kernel, spec.n()) {
                (Kernel::Profile(g), 1) => conv.direct(g, &gamma, x)?,
                (Kernel::Custom(g), 1) => conv.direct(g, &gamma, x)?,
                (Kernel::Profile(g), _) => conv.layer_cake(g, &gamma, x)?,
                (Kernel::Custom(_), _) => {
                    return Err(besselpot::Error::Unsupported(
                        "custom kernels are one-dimensional".into(),
                    ))
                }
            };
            Ok(row(x, v))
        })
        .collect::<Result<Vec<_>, besselpot::Error>>()?;
    let head = format!("{},value", coord_header(spec.n(), "x"));
    Ok(vec![Artifact::csv("convolve.csv", &head, &rows)])
}

pub fn hankel(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let f = required(&spec.function, "function", "hankel")?.build(spec.n(), &grid)?;
    let fg = GridFunction::from_cell_average(grid, |x: &[f64]| f.density(x));
    let xi = Grid::new(&params, spec.xi_max, XI_CELLS)?;
    let pair = hankel_transform(&fg, &xi, &params)?;
    let rows: Vec<Vec<f64>> = pair
        .forward()
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| row(&xi.point(k), v))
        .collect();
    let head = format!("{},fhat", coord_header(spec.n(), "xi"));
    Ok(vec![Artifact::csv("hankel.csv", &head, &rows)])
}

pub fn measure_check(spec: &ProblemSpec, seed: u64) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let gamma = required(&spec.measure, "measure", "measure-check")?.build(spec.n(), &grid)?;
    let sweep = DoublingSweep::new(&gamma, spec.grid.x_max.min(8.0), 17, 1e-2, 4.0, 25)?;
    // per radius: worst ratio over centres with positive mass, plain and x^a-weighted
    let table = sweep
        .radii
        .par_iter()
        .map(|&r| {
            let mut worst = [(f64::NAN, 0usize); 2];
            let mut skipped = 0usize;
            for (c, x) in sweep.centers.iter().enumerate() {
                for (slot, weighted) in [false, true].into_iter().enumerate() {
                    let small = ball_mass(&gamma, x, r, &params, weighted)?;
                    if !(small > 0.0) {
                        skipped += 1;
                        continue;
                    }
                    let ratio = ball_mass(&gamma, x, 2.0 * r, &params, weighted)? / small;
                    if !(ratio <= worst[slot].0) {
                        worst[slot] = (ratio, c);
                    }
                }
            }
            Ok((r, worst, skipped))
        })
        .collect::<Result<Vec<_>, besselpot::Error>>()?;
    let rows: Vec<Vec<f64>> = table.iter().map(|(r, w, _)| vec![*r, w[0].0, w[1].0]).collect();
    let worst = |slot: usize| {
        table
            .iter()
            .filter(|t| t.1[slot].0.is_finite())
            .fold(None, |acc: Option<(f64, f64, usize)>, t| match acc {
                Some(a) if a.0 >= t.1[slot].0 => Some(a),
                _ => Some((t.1[slot].0, t.0, t.1[slot].1)),
            })
            .map(|(ratio, r, c)| json!({"ratio": ratio, "radius": r, "center": sweep.centers[c]}))
            .unwrap_or(Value::Null)
    };
    let mut out = header(spec);
    out.insert("doubling".into(), worst(0));
    out.insert("doubling_weighted".into(), worst(1));
    out.insert(
        "skipped_zero_mass_balls".into(),
        json!(table.iter().map(|t| t.2).sum::<usize>()),
    );
    out.insert("inequalities".into(), inequality_sweep(seed, 10_000)?);
    Ok(vec![
        Artifact::csv("measure_check.csv", "r,ratio,ratio_weighted", &rows),
        Artifact::json("measure_check.json", &Value::Object(out)),
    ])
}

/// Randomised check of the distance gap bound and the comparison constants on `tuples`
/// random configurations in dimensions 1 to 3.
fn inequality_sweep(seed: u64, tuples: usize) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gap_bad = 0usize;
    let mut gap_worst: f64 = 0.0;
    for k in 0..tuples {
        let n = 1 + k % 3;
        let mut pt = || (0..n).map(|_| rng.gen_range(0.0..3.0)).collect::<Vec<f64>>();
        let (x, y, t, u) = (pt(), pt(), pt(), pt());
        let th: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..PI)).collect();
        let (d, _) = distance_gap(&x, &y, &t, &u, &th);
        let b = gap_bound(&x, &y, &t, &u, &th);
        if d > b * (1.0 + 1e-12) + 1e-14 {
            gap_bad += 1;
        }
        if b > 0.0 {
            gap_worst = gap_worst.max(d / b);
        }
    }
    let (aa, bb) = (2.0, 2.0);
    let c = comparison_constant(aa, bb)?;
    let sharp = sharp_comparison_constant(bb)?;
    let (mut c_bad, mut sharp_bad, mut worst) = (0usize, 0usize, 0.0f64);
    let mut k = 0;
    while k < tuples {
        let n = 1 + k % 3;
        let mut pt = || (0..n).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>();
        let (x, y, z) = (pt(), pt(), pt());
        let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist(&z, &y) > bb * dist(&x, &y) {
            continue;
        }
        k += 1;
        let th: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..PI)).collect();
        let lhs = bessel_distance(&z, &y, &th);
        let rhs = bessel_distance(&x, &y, &th);
        if lhs > c * rhs * (1.0 + 1e-12) {
            c_bad += 1;
        }
        if lhs > sharp * rhs * (1.0 + 1e-12) {
            sharp_bad += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok(json!({
        "seed": seed,
        "tuples": tuples,
        "gap_violations": gap_bad,
        "gap_worst_ratio": gap_worst,
        "comparison": {"A": aa, "B": bb, "constant": c, "violations": c_bad},
        "sharp_comparison": {"B": bb, "constant": sharp, "violations": sharp_bad},
        "comparison_worst_ratio": worst,
    }))
}

pub fn trace_check(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let gamma = required(&spec.measure, "measure", "trace-check")?.build(spec.n(), &grid)?;
    let prob = TraceProblem::new(&params, spec.p, spec.nu, gamma)?.with_default_families(
        &grid,
        spec.cubes.depth,
        spec.points_per_axis,
    )?;
    let est = estimate_constants(&prob)?;
    let mut out = header(spec);
    out.insert("A1_lower".into(), json!(est.a1_lower));
    out.insert("A2_hat".into(), json!(est.a2_hat));
    out.insert("A3_hat".into(), json!(est.a3_hat));
    out.insert(
        "per_cube".into(),
        est.per_cube
            .iter()
            .map(|(q, v)| json!({"center": q.center(), "half_side": q.half(), "value": v}))
            .collect(),
    );
    out.insert(
        "per_point".into(),
        est.per_point.iter().map(|(x, v)| json!({"x": x, "value": v})).collect(),
    );
    out.insert("per_test".into(), json!(est.per_test));
    let rows: Vec<Vec<f64>> = est
        .per_cube
        .iter()
        .map(|(q, v)| {
            let mut r = q.center().to_vec();
            r.push(q.half());
            r.push(*v);
            r
        })
        .collect();
    let head = format!("{},half_side,value", coord_header(spec.n(), "center"));
    Ok(vec![
        Artifact::json("trace_check.json", &Value::Object(out)),
        Artifact::csv("trace_cubes.csv", &head, &rows),
    ])
}

fn settings(spec: &ProblemSpec) -> EigenSettings<f64> {
    EigenSettings {
        x_max: spec.grid.x_max,
        m: spec.grid.m,
        tol: spec.tol,
    }
}

fn cube_json(c: &CubeValue<f64>) -> Value {
    json!({"center": c.cube.center(), "half_side": c.cube.half(), "phi2": c.phi})
}

/// Family description stored with calibrated thresholds.
fn family_json(spec: &ProblemSpec) -> Value {
    let mut cubes = spec.cubes.clone();
    cubes.x_max = Some(cubes.x_max.unwrap_or(spec.grid.x_max));
    json!({"alphas": spec.alphas, "cubes": cubes})
}

/// Thresholds from a calibration document; its family must match the spec.
pub fn read_thresholds(text: &str, spec: &ProblemSpec) -> Result<Thresholds, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Spec(vec![format!("thresholds: {e}")]))?;
    let num = |k: &str| {
        doc.get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| CliError::Spec(vec![format!("thresholds.{k}: missing or not a number")]))
    };
    let t = Thresholds {
        a: num("A")?,
        b: num("B")?,
    };
    if let Some(fam) = doc.get("family") {
        if *fam != family_json(spec) {
            return Err(CliError::Spec(vec![format!(
                "thresholds: calibrated for {fam}, but the spec uses {}",
                family_json(spec)
            )]));
        }
    }
    Ok(t)
}

pub fn eigen(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    let params = spec.params()?;
    let grid = spec.grid()?;
    let v = required(&spec.potential, "potential", "eigen")?.build(spec.n(), &grid)?;
    let pair = direct_eigenpair(&v, &params, &settings(spec))?;
    let family = spec.family();
    let mut out = header(spec);
    out.insert("lambda1".into(), json!(pair.value));
    out.insert("residual".into(), json!(pair.residual));
    out.insert("iterations".into(), json!(pair.iterations));
    match &spec.thresholds {
        Some(t) => {
            let r = cube_bounds(&v, t.a, t.b, &family, &params)?.with_lambda1(pair.value);
            out.insert("L".into(), json!(r.lower));
            out.insert("U".into(), json!(r.upper));
            out.insert("U_restricted".into(), json!(r.upper_restricted));
            out.insert("A".into(), json!(t.a));
            out.insert("B".into(), json!(t.b));
            out.insert("brackets".into(), json!(r.brackets()));
            out.insert("cubes".into(), r.cubes.iter().map(cube_json).collect());
        }
        None => {
            let table = if v.is_zero() {
                Vec::new()
            } else {
                cube_table(&v, &family, &CubeFunctional::new(&params, BetaStrategy::PerCube)?)?
            };
            for k in ["L", "U", "U_restricted", "A", "B", "brackets"] {
                out.insert(k.into(), Value::Null);
            }
            out.insert("cubes".into(), table.iter().map(cube_json).collect());
        }
    }
    Ok(vec![Artifact::json("eigen.json", &Value::Object(out))])
}

pub fn calibrate(spec: &ProblemSpec) -> Result<Vec<Artifact>, CliError> {
    if spec.train.is_empty() {
        return Err(CliError::Spec(vec!["train: `calibrate` needs at least one training potential".into()]));
    }
    let params = spec.params()?;
    let grid: Arc<Grid<f64>> = spec.grid()?;
    let training = spec
        .train
        .iter()
        .map(|m| m.build(spec.n(), &grid))
        .collect::<Result<Vec<DensityMeasure<f64>>, CliError>>()?;
    let cal = calibrate_thresholds(&training, &spec.family(), &params, &settings(spec))?;
    let mut out = header(spec);
    out.insert("A".into(), json!(cal.a));
    out.insert("B".into(), json!(cal.b));
    out.insert("family".into(), family_json(spec));
    out.insert(
        "training_report".into(),
        cal.report
            .iter()
            .map(|(l, need, allow)| json!({"lambda1": l, "lower_need": need, "upper_allow": allow}))
            .collect(),
    );
    Ok(vec![Artifact::json("calib.json", &Value::Object(out))])
}
