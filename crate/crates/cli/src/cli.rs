use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::commands::{self, Artifact};
use crate::error::CliError;
use crate::spec::{MeasureSpec, ProblemSpec};

#[derive(Debug, Parser)]
#[command(name = "besselpot", version, about = "Bessel potentials, translations and eigenvalue brackets on the positive orthant")]
pub struct Cli {
    /// Problem spec (JSON); command-line options override its fields.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Directory for output files; without it the primary output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "BESSELPOT_THREADS")]
    pub threads: Option<usize>,
    /// Seed for randomised sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by all subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Comma-separated α_i.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Grid extent X.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Grid cells per axis.
    #[arg(long)]
    pub m: Option<usize>,
    /// Cube family depth.
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate G(r) and -G'(r).
    Kernel {
        #[command(flatten)]
        common: Common,
        /// Comma-separated radii.
        #[arg(long, value_delimiter = ',')]
        eval: Option<Vec<f64>>,
    },
    /// Evaluate T^t f on a grid of points.
    Translate {
        #[command(flatten)]
        common: Common,
        /// gaussian, square, one, a measure JSON file or a grid file.
        #[arg(long)]
        f: Option<String>,
        /// Comma-separated translation parameter.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        /// lo:hi:count per axis.
        #[arg(long)]
        x_grid: Option<String>,
    },
    /// Convolve a kernel with a measure.
    Convolve {
        #[command(flatten)]
        common: Common,
        /// bessel or tent (custom kernels come from the spec).
        #[arg(long)]
        kernel: Option<String>,
        /// Measure JSON file.
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long)]
        x_grid: Option<String>,
    },
    /// Hankel transform of a function.
    Hankel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        xi_max: Option<f64>,
    },
    /// Doubling ratios and the distance inequalities.
    MeasureCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Trace-inequality constants for a measure.
    TraceCheck {
        #[command(flatten)]
        common: Common,
        /// Problem spec (same as --spec).
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Least eigenvalue and cube bracket for a potential.
    Eigen {
        #[command(flatten)]
        common: Common,
        /// Potential JSON file.
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Calibration file from `calibrate`.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Calibrate thresholds on training potentials.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Potential JSON files.
        #[arg(long, num_args = 1..)]
        train: Vec<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Spec(vec![format!("{}: {e}", path.display())]))
}

fn measure_value(path: &Path) -> Result<Value, CliError> {
    let m = MeasureSpec::parse(&read(path)?)?;
    Ok(serde_json::to_value(m).expect("measure serialises"))
}

fn parse_range(s: &str) -> Result<Value, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Spec(vec![format!("x_grid: expected lo:hi:count, got `{s}`")]);
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(json!({"lo": lo, "hi": hi, "count": count}))
}

fn function_value(f: &str, n: usize) -> Result<Value, CliError> {
    Ok(match f {
        "gaussian" => json!({"kind": "gaussian", "coef": 1.0, "center": vec![0.0; n], "width": 0.5f64.sqrt()}),
        "square" => json!({"kind": "squared_norm"}),
        "one" => json!({"kind": "constant", "value": 1.0}),
        path if path.ends_with(".json") => measure_value(Path::new(path))?,
        path => json!({"kind": "grid_file", "path": path}),
    })
}

fn obj(v: &mut Value) -> &mut Map<String, Value> {
    v.as_object_mut().expect("spec is an object")
}

fn apply_common(v: &mut Value, c: &Common) {
    let o = obj(v);
    if let Some(a) = &c.alphas {
        o.insert("alphas".into(), json!(a));
    }
    if let Some(nu) = c.nu {
        o.insert("nu".into(), json!(nu));
    }
    if let Some(p) = c.p {
        o.insert("p".into(), json!(p));
    }
    for (key, parent, val) in [
        ("x_max", "grid", c.x_max.map(|x| json!(x))),
        ("m", "grid", c.m.map(|m| json!(m))),
        ("depth", "cubes", c.depth.map(|d| json!(d))),
    ] {
        if let Some(val) = val {
            let entry = o.entry(parent).or_insert_with(|| json!({}));
            if let Some(inner) = entry.as_object_mut() {
                inner.insert(key.into(), val);
            }
        }
    }
}

fn axes(v: &Value) -> usize {
    v.get("alphas").and_then(Value::as_array).map_or(1, |a| a.len().max(1))
}

/// Spec document (file plus overrides) for the chosen subcommand.
fn spec_value(cli: &Cli) -> Result<Value, CliError> {
    let file = match &cli.command {
        Command::TraceCheck { problem: Some(p), .. } => Some(p.clone()),
        _ => cli.spec.clone(),
    };
    let mut v = match file {
        Some(path) => serde_json::from_str(&read(&path)?).map_err(|e| CliError::Spec(vec![format!("{}: {e}", path.display())]))?,
        None => json!({}),
    };
    if !v.is_object() {
        return Err(CliError::Spec(vec!["spec: expected a JSON object".into()]));
    }
    match &cli.command {
        Command::Kernel { common, eval } => {
            apply_common(&mut v, common);
            if let Some(e) = eval {
                obj(&mut v).insert("eval".into(), json!(e));
            }
        }
        Command::Translate { common, f, t, x_grid } => {
            apply_common(&mut v, common);
            let n = axes(&v);
            if let Some(f) = f {
                let fv = function_value(f, n)?;
                obj(&mut v).insert("function".into(), fv);
            }
            if let Some(t) = t {
                obj(&mut v).insert("t".into(), json!(t));
            }
            if let Some(x) = x_grid {
                obj(&mut v).insert("x_grid".into(), parse_range(x)?);
            }
        }
        Command::Convolve {
            common,
            kernel,
            measure,
            x_grid,
        } => {
            apply_common(&mut v, common);
            if let Some(k) = kernel {
                let kv = match k.as_str() {
                    "bessel" | "tent" => json!({"kind": k}),
                    "custom" if v.get("kernel").is_some() => v["kernel"].clone(),
                    other => {
                        return Err(CliError::Spec(vec![format!(
                            "kernel: `{other}` needs a custom kernel in the spec, or use bessel or tent"
                        )]))
                    }
                };
                obj(&mut v).insert("kernel".into(), kv);
            }
            if let Some(m) = measure {
                let mv = measure_value(m)?;
                obj(&mut v).insert("measure".into(), mv);
            }
            if let Some(x) = x_grid {
                obj(&mut v).insert("x_grid".into(), parse_range(x)?);
            }
        }
        Command::Hankel { common, f, xi_max } => {
            apply_common(&mut v, common);
            let n = axes(&v);
            if let Some(f) = f {
                let fv = function_value(f, n)?;
                obj(&mut v).insert("function".into(), fv);
            }
            if let Some(x) = xi_max {
                obj(&mut v).insert("xi_max".into(), json!(x));
            }
        }
        Command::MeasureCheck { common, measure } | Command::TraceCheck { common, measure, .. } => {
            apply_common(&mut v, common);
            if let Some(m) = measure {
                let mv = measure_value(m)?;
                obj(&mut v).insert("measure".into(), mv);
            }
        }
        Command::Eigen {
            common, potential, ..
        } => {
            apply_common(&mut v, common);
            if let Some(p) = potential {
                let pv = measure_value(p)?;
                obj(&mut v).insert("potential".into(), pv);
            }
        }
        Command::Calibrate { common, train } => {
            apply_common(&mut v, common);
            if !train.is_empty() {
                let tv = train.iter().map(|p| measure_value(p)).collect::<Result<Vec<_>, _>>()?;
                obj(&mut v).insert("train".into(), Value::Array(tv));
            }
        }
    }
    Ok(v)
}

/// Parses, validates and runs the subcommand.
pub fn run(cli: &Cli) -> Result<Vec<Artifact>, CliError> {
    let mut spec = ProblemSpec::from_value(spec_value(cli)?)?;
    if let Command::Eigen {
        thresholds: Some(path), ..
    } = &cli.command
    {
        spec.thresholds = Some(commands::read_thresholds(&read(path)?, &spec)?);
        spec.validate()?;
    }
    let go = || match &cli.command {
        Command::Kernel { .. } => commands::kernel(&spec),
        Command::Translate { .. } => commands::translate(&spec),
        Command::Convolve { .. } => commands::convolve(&spec),
        Command::Hankel { .. } => commands::hankel(&spec),
        Command::MeasureCheck { .. } => commands::measure_check(&spec, cli.seed),
        Command::TraceCheck { .. } => commands::trace_check(&spec),
        Command::Eigen { .. } => commands::eigen(&spec),
        Command::Calibrate { .. } => commands::calibrate(&spec),
    };
    match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Spec(vec![format!("threads: {e}")]))?
            .install(go),
        None => go(),
    }
}

/// Writes artifacts to `out`, or the primary one to stdout.
pub fn emit(artifacts: &[Artifact], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for a in artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.contents)?;
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            if let Some(a) = artifacts.first() {
                std::io::stdout().lock().write_all(a.contents.as_bytes())?;
            }
        }
    }
    Ok(())
}
