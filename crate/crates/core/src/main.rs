use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cusp_ricci::assembly::{self, EdgeLengths};
use cusp_ricci::flow::{self, FlowConfig, Scheme};
use cusp_ricci::io::{self, fmt17, RunManifest, FORMAT_VERSION};
use cusp_ricci::tetra;
use cusp_ricci::triangulation::SLOT_LABELS;
use cusp_ricci::{CuspedTriangulation, Error};

#[derive(Parser)]
#[command(name = "cusp-ricci", about = "Extended combinatorial Ricci flow on cusped 3-manifolds")]
#[command(version = concat!(env!("CARGO_PKG_VERSION"), " (document format 1)"))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a triangulation file and print its combinatorics.
    Validate { file: PathBuf },
    /// Print per-tet angles, region class and volume at a metric.
    Angles {
        file: PathBuf,
        #[arg(long)]
        lengths: String,
    },
    /// Curvature, energy, volume and Laplacian spectrum as JSON.
    Report {
        file: PathBuf,
        #[arg(long)]
        lengths: String,
    },
    /// Run the flow and write the trace and result documents.
    Flow(FlowArgs),
}

#[derive(Args)]
struct FlowArgs {
    file: PathBuf,
    /// Initial metric, inline (`0.5,-0.5`) or a file.
    #[arg(long, conflicts_with = "random_init")]
    lengths: Option<String>,
    /// Seed for a uniform random initial metric in [-range, range]^N.
    #[arg(long)]
    random_init: Option<u64>,
    #[arg(long, default_value_t = 1.0, requires = "random_init")]
    range: f64,
    #[arg(long, default_value = "newton-hybrid", value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1)]
    trace_every: usize,
    /// Halve the step when the energy rises beyond the slack bound.
    #[arg(long)]
    adaptive: bool,
    /// Keep the initial metric off the gauge slice.
    #[arg(long)]
    no_gauge_fix: bool,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Append the full metric to every trace row.
    #[arg(long, requires = "trace")]
    trace_full: bool,
    #[arg(long)]
    result: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(path: &Path) -> Result<CuspedTriangulation, Error> {
    CuspedTriangulation::load(path)
}

fn lengths_for(t: &CuspedTriangulation, arg: &str) -> Result<EdgeLengths, Error> {
    let l = io::read_lengths_arg(arg)?;
    if l.len() != t.num_edges {
        return Err(Error::LengthMismatch {
            got: l.len(),
            expected: t.num_edges,
        });
    }
    Ok(l)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn validate(file: &Path) -> Result<bool, Error> {
    let t = CuspedTriangulation::from_path(file)?;
    println!("file: {}", file.display());
    println!("tets: {}", t.num_tets());
    println!("N: {}", t.num_edges);
    println!("s: {}", t.num_cusps);
    println!("edge degrees: {:?}", t.edge_degrees());
    match t.cusp_matrix() {
        Ok(c) => println!("rank(C): {}", c.rank()),
        Err(e) => println!("rank(C): unavailable ({e})"),
    }
    match t.validate() {
        Ok(()) => {
            println!("status: pass");
            Ok(true)
        }
        Err(e) => {
            println!("status: fail ({e})");
            Ok(false)
        }
    }
}

fn angles(file: &Path, lengths: &str) -> Result<(), Error> {
    let t = load(file)?;
    let l = lengths_for(&t, lengths)?;
    println!("tet,class,{},volume", SLOT_LABELS.map(|s| format!("a{s}")).join(","));
    for j in 0..t.num_tets() {
        let m = assembly::tet_metric(&t, &l, j);
        let (class, a) = tetra::classify_and_angles(&m);
        let angles: Vec<String> = a.0.iter().map(|&x| fmt17(x)).collect();
        println!("{},{},{},{}", t.tets[j].id, class, angles.join(","), fmt17(tetra::tet_volume(&m)));
    }
    Ok(())
}

fn report(file: &Path, lengths: &str) -> Result<(), Error> {
    let t = load(file)?;
    let l = lengths_for(&t, lengths)?;
    let c = t.cusp_matrix()?;
    let state = assembly::curvature_with_laplacian(&t, &l)?;
    let floats = |v: &[f64]| format!("[{}]", v.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(", "));
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"format_version\": {FORMAT_VERSION},\n"));
    out.push_str(&format!("  \"lengths\": {},\n", floats(l.as_slice())));
    out.push_str(&format!("  \"curvature\": {},\n", floats(state.k.as_slice())));
    out.push_str(&format!("  \"knorm_inf\": {},\n", fmt17(state.knorm_inf())));
    out.push_str(&format!("  \"energy\": {},\n", fmt17(state.energy)));
    out.push_str(&format!("  \"total_volume\": {},\n", fmt17(state.total_volume)));
    out.push_str(&format!("  \"degenerate_tets\": {:?},\n", state.degenerate_tets));
    match &state.laplacian {
        Some(lap) => {
            let s = assembly::laplacian_summary(lap, &c);
            out.push_str("  \"laplacian\": {\n");
            out.push_str(&format!("    \"eigenvalues\": {},\n", floats(&s.eigenvalues)));
            out.push_str(&format!(
                "    \"kernel_restricted_eigenvalues\": {},\n",
                floats(&s.kernel_restricted_eigenvalues)
            ));
            out.push_str(&format!("    \"asymmetry\": {},\n", fmt17(s.asymmetry)));
            out.push_str(&format!("    \"gauge_residual\": {}\n", fmt17(s.gauge_residual)));
            out.push_str("  }\n");
        }
        None => out.push_str("  \"laplacian\": null\n"),
    }
    out.push_str("}\n");
    print!("{out}");
    Ok(())
}

fn run(args: &FlowArgs) -> Result<bool, Error> {
    let t = load(&args.file)?;
    let cfg = FlowConfig {
        scheme: args.scheme,
        step: args.step,
        tol: args.tol,
        max_steps: args.max_steps,
        trace_every: args.trace_every,
        gauge_fix: !args.no_gauge_fix,
        adaptive: args.adaptive,
        record_lengths: args.trace_full,
        ..FlowConfig::default()
    };
    cfg.validate()?;
    let mut manifest = RunManifest::new(args.file.display().to_string(), cfg.clone());
    let l0 = if let Some(seed) = args.random_init {
        if !(args.range > 0.0) {
            return Err(Error::InvalidConfig("--range must be positive".into()));
        }
        manifest.seed = Some(seed);
        manifest.init_range = Some(args.range);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        EdgeLengths::from(
            (0..t.num_edges)
                .map(|_| rng.gen_range(-args.range..=args.range))
                .collect::<Vec<_>>(),
        )
    } else if let Some(arg) = &args.lengths {
        lengths_for(&t, arg)?
    } else {
        EdgeLengths::zeros(t.num_edges)
    };

    let result = flow::run_flow(&t, &l0, &cfg)?;
    if let Some(path) = &args.trace {
        let f = File::create(path).map_err(io_err(path))?;
        io::write_trace_csv(&result.trace, BufWriter::new(f), args.trace_full).map_err(io_err(path))?;
    }
    let doc = io::result_document(&result, &manifest);
    match &args.result {
        Some(path) => {
            std::fs::write(path, &doc).map_err(io_err(path))?;
            println!(
                "converged={} steps={} knorm_inf={} volume={}",
                result.converged,
                result.steps_taken,
                fmt17(result.final_curvature_norm),
                fmt17(result.final_volume)
            );
        }
        None => print!("{doc}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Angles { file, lengths } => angles(file, lengths).map(|_| true),
        Command::Report { file, lengths } => report(file, lengths).map(|_| true),
        Command::Flow(args) => run(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
