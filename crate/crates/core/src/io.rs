//! Trace CSV, result documents and length-vector parsing.
//!
//! All floating-point output uses 17 significant digits so runs can be
//! compared bit for bit across implementations.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::assembly::EdgeLengths;
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowResult, FlowTrace};

/// Version of the trace and result document layout.
pub const FORMAT_VERSION: u32 = 1;

pub const TRACE_HEADER: [&str; 6] = ["t", "knorm_inf", "knorm_2", "energy", "volume", "degenerate_tets"];

/// A float with 17 significant digits, in scientific notation.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // not representable in JSON; callers only hit this on aborted runs
        format!("\"{x}\"")
    }
}

pub fn write_trace_csv<W: Write>(trace: &FlowTrace, mut out: W, full: bool) -> std::io::Result<()> {
    let width = trace
        .rows
        .iter()
        .find_map(|r| r.lengths.as_ref().map(Vec::len))
        .unwrap_or(0);
    let mut header = TRACE_HEADER.join(",");
    if full {
        for i in 0..width {
            write!(header, ",l{i}").unwrap();
        }
    }
    writeln!(out, "{header}")?;
    for r in &trace.rows {
        let mut line = format!(
            "{},{},{},{},{},{}",
            fmt17(r.t),
            fmt17(r.knorm_inf),
            fmt17(r.knorm_2),
            fmt17(r.energy),
            fmt17(r.volume),
            r.degenerate_tets
        );
        if full {
            if let Some(l) = &r.lengths {
                for x in l {
                    line.push(',');
                    line.push_str(&fmt17(*x));
                }
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reproducibility metadata stored next to every result.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub input: String,
    pub config: FlowConfig,
    pub seed: Option<u64>,
    pub init_range: Option<f64>,
    pub tool_version: String,
    pub started_at_unix: u64,
}

impl RunManifest {
    pub fn new(input: impl Into<String>, config: FlowConfig) -> Self {
        let started_at_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            input: input.into(),
            config,
            seed: None,
            init_range: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at_unix,
        }
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_floats(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt17(x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Result document: the fields of [`FlowResult`] plus the manifest.
pub fn result_document(result: &FlowResult, manifest: &RunManifest) -> String {
    let cfg = &manifest.config;
    let mut s = String::from("{\n");
    let mut field = |k: &str, v: String| {
        writeln!(s, "  {}: {},", json_str(k), v).unwrap();
    };
    field("format_version", FORMAT_VERSION.to_string());
    field("converged", result.converged.to_string());
    field("steps_taken", result.steps_taken.to_string());
    field("newton_steps", result.newton_steps.to_string());
    field("final_curvature_norm", fmt17(result.final_curvature_norm));
    field("final_volume", fmt17(result.final_volume));
    field("final_energy", fmt17(result.final_energy));
    field("max_gauge_drift", fmt17(result.max_gauge_drift));
    field("initial_l", json_floats(&result.initial_l));
    field("final_l", json_floats(&result.final_l));
    field("trace_rows", result.trace.len().to_string());
    s.push_str("  \"manifest\": {\n");
    let seed = manifest.seed.map_or("null".to_string(), |x| x.to_string());
    let range = manifest.init_range.map_or("null".to_string(), fmt17);
    let entries = [
        ("input", json_str(&manifest.input)),
        ("tool_version", json_str(&manifest.tool_version)),
        ("seed", seed),
        ("init_range", range),
        ("scheme", json_str(cfg.scheme.name())),
        ("step", fmt17(cfg.step)),
        ("tol", fmt17(cfg.tol)),
        ("max_steps", cfg.max_steps.to_string()),
        ("trace_every", cfg.trace_every.to_string()),
        ("gauge_fix", cfg.gauge_fix.to_string()),
        ("adaptive", cfg.adaptive.to_string()),
        ("newton_switch", fmt17(cfg.newton_switch)),
        ("started_at_unix", manifest.started_at_unix.to_string()),
    ];
    let body: Vec<String> = entries
        .iter()
        .map(|(k, v)| format!("    {}: {}", json_str(k), v))
        .collect();
    s.push_str(&body.join(",\n"));
    s.push_str("\n  }\n}\n");
    s
}

/// Parse a length vector from comma, whitespace or newline separated text.
pub fn parse_lengths(text: &str) -> Result<EdgeLengths> {
    let values: std::result::Result<Vec<f64>, _> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse::<f64>)
        .collect();
    let values = values.map_err(|e| Error::Malformed(format!("length list: {e}")))?;
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Malformed("length list contains non-finite values".into()));
    }
    Ok(EdgeLengths::from(values))
}

/// `--lengths` accepts either an inline list or the path of a file holding one.
pub fn read_lengths_arg(arg: &str) -> Result<EdgeLengths> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: arg.to_string(),
            source,
        })?;
        parse_lengths(&text)
    } else {
        parse_lengths(arg)
    }
}
