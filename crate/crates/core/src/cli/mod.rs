//! Command-line front end.
//!
//! Settings come from flags, then an optional `key = value` config file, then defaults.

mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::diagnostics::{run_diagnostics, DiagnosticsOptions, DiagnosticsReport};
use crate::error::PlateError;
use crate::mesh::{alfeld_split, boundary_topology, format_mesh, read_mesh_file, refine_uniform_times, Mesh};
use crate::meshes;
use crate::study::{run_convergence_with, ConvergenceReport, StudyConfig};
use crate::system::{Discretization, MaterialParams, Scheme};

pub use svg::error_plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CONDITION: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "plate", version, about = "Reissner-Mindlin plate discretizations: studies and diagnostics")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized diagnostics.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Young's modulus.
    #[arg(long = "E", global = true)]
    pub e: Option<f64>,
    /// Poisson ratio.
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    /// Shear correction factor.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct SchemeArgs {
    /// Mesh file, or one of the bundled names (holey, holey_study, square_clamped, annulus_clamped, fig1).
    #[arg(long)]
    pub mesh: Option<String>,
    /// rt, bdm, macro, standard or plain.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of meshes (the start mesh and its uniform refinements).
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Refinement study with the manufactured solution.
    Convergence {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Comma separated thicknesses.
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
    },
    /// Checks the structural conditions of a scheme.
    Verify {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Random trial fields per operator check.
        #[arg(long)]
        trials: Option<usize>,
        /// Test hook: `drop-interior-dof`.
        #[arg(long)]
        inject_defect: Option<String>,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Plain Lagrange P1 at small thickness against RT p=2 on the same meshes.
    LockingDemo {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MeshAction {
    /// Counts and boundary topology.
    Info { mesh: String },
    /// Uniform refinement.
    Refine {
        mesh: String,
        #[arg(long, default_value_t = 1)]
        times: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Barycentric split of every triangle.
    Alfeld {
        mesh: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: msg.into() }
    }
}

impl From<PlateError> for CliError {
    fn from(e: PlateError) -> Self {
        let code = match e {
            PlateError::Solver(_) | PlateError::RankAmbiguous { .. } | PlateError::Eigen(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

const KNOWN_KEYS: &[&str] = &["mesh", "family", "p", "levels", "t", "out", "seed", "svg", "E", "nu", "kappa", "trials"];

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub mesh: String,
    pub family: String,
    pub p: usize,
    pub levels: usize,
    pub ts: Vec<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub svg: bool,
    pub material: MaterialParams,
    pub trials: usize,
}

impl Settings {
    /// Canonical text used for the config hash.
    pub fn canonical(&self, command: &str) -> String {
        let ts: Vec<String> = self.ts.iter().map(|t| format!("{t:e}")).collect();
        format!(
            "command={command}\nmesh={}\nfamily={}\np={}\nlevels={}\nt={}\nseed={}\nE={:e}\nnu={:e}\nkappa={:e}\ntrials={}\n",
            self.mesh,
            self.family,
            self.p,
            self.levels,
            ts.join(","),
            self.seed,
            self.material.e,
            self.material.nu,
            self.material.kappa,
            self.trials
        )
    }

    pub fn hash(&self, command: &str) -> String {
        let d = Sha256::digest(self.canonical(command).as_bytes());
        d.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// First line of every output file.
    pub fn header(&self, command: &str) -> String {
        format!("# plate-fem {} config={} seed={}\n", env!("CARGO_PKG_VERSION"), self.hash(command), self.seed)
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_ts(v: &str) -> CliResult<Vec<f64>> {
    v.split(',').map(|s| parse_value("t", s.trim())).collect()
}

/// Merges flags over the config file over the defaults.
pub fn resolve(cli: &Cli) -> CliResult<Settings> {
    let file = match &cli.config {
        Some(p) => parse_config_file(&std::fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };
    if let Some(k) = file.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(CliError::config(format!("unknown config key `{k}`")));
    }
    let get = |k: &str| file.get(k).map(String::as_str);
    let mut s = Settings {
        mesh: get("mesh").unwrap_or("holey").to_string(),
        family: get("family").unwrap_or("rt").to_string(),
        p: get("p").map(|v| parse_value("p", v)).transpose()?.unwrap_or(2),
        levels: get("levels").map(|v| parse_value("levels", v)).transpose()?.unwrap_or(4),
        ts: get("t").map(parse_ts).transpose()?.unwrap_or_else(|| vec![1.0, 1e-1, 1e-2, 1e-3]),
        out: PathBuf::from(get("out").unwrap_or(".")),
        seed: get("seed").map(|v| parse_value("seed", v)).transpose()?.unwrap_or(0),
        svg: get("svg").map(|v| parse_value("svg", v)).transpose()?.unwrap_or(false),
        material: MaterialParams::default(),
        trials: get("trials").map(|v| parse_value("trials", v)).transpose()?.unwrap_or(20),
    };
    if let Some(v) = get("E") {
        s.material.e = parse_value("E", v)?;
    }
    if let Some(v) = get("nu") {
        s.material.nu = parse_value("nu", v)?;
    }
    if let Some(v) = get("kappa") {
        s.material.kappa = parse_value("kappa", v)?;
    }
    if let Some(o) = &cli.out {
        s.out = o.clone();
    }
    if let Some(v) = cli.seed {
        s.seed = v;
    }
    s.svg |= cli.svg;
    if let Some(v) = cli.e {
        s.material.e = v;
    }
    if let Some(v) = cli.nu {
        s.material.nu = v;
    }
    if let Some(v) = cli.kappa {
        s.material.kappa = v;
    }
    let scheme = match &cli.command {
        Command::Convergence { scheme, t } => {
            if let Some(t) = t {
                s.ts = t.clone();
            }
            Some(scheme)
        }
        Command::Verify { scheme, trials, .. } => {
            if let Some(n) = trials {
                s.trials = *n;
            }
            Some(scheme)
        }
        Command::LockingDemo { mesh, levels, t } => {
            if let Some(m) = mesh {
                s.mesh = m.clone();
            }
            if let Some(l) = levels {
                s.levels = *l;
            }
            if let Some(t) = t {
                s.ts = vec![*t];
            } else if get("t").is_none() {
                s.ts = vec![1e-3];
            }
            s.family = "plain".into();
            s.p = 1;
            None
        }
        Command::Mesh { .. } => None,
    };
    if let Some(a) = scheme {
        if let Some(m) = &a.mesh {
            s.mesh = m.clone();
        }
        if let Some(f) = &a.family {
            s.family = f.clone();
        }
        if let Some(p) = a.p {
            s.p = p;
        }
        if let Some(l) = a.levels {
            s.levels = l;
        }
    }
    s.material.validate().map_err(CliError::from)?;
    Ok(s)
}

/// A bundled mesh name or a mesh file path.
pub fn load_mesh_arg(arg: &str) -> CliResult<Mesh> {
    if let Some(m) = meshes::by_name(arg) {
        return Ok(m);
    }
    Ok(read_mesh_file(arg)?)
}

fn write_output(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn study_config(s: &Settings) -> CliResult<StudyConfig> {
    let cfg = StudyConfig {
        scheme: Scheme::parse(&s.family, s.p)?,
        ts: s.ts.clone(),
        levels: s.levels,
        material: s.material,
        mesh: load_mesh_arg(&s.mesh)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a study, writing the CSV (partial on numerical failure) and the optional plot.
fn run_study(s: &Settings, command: &str, cfg: &StudyConfig, csv_name: &str) -> CliResult<ConvergenceReport> {
    let result = run_convergence_with(cfg, |r| {
        eprintln!("level {} t={:e} total={:.4e}", r.level, r.t, r.errors.total);
    });
    let (report, err) = match result {
        Ok(r) => (r, None),
        Err((r, e)) => (r, Some(e)),
    };
    let path = write_output(&s.out, csv_name, &(s.header(command) + &report.to_csv()))?;
    println!("wrote {}", path.display());
    if let Some(e) = err {
        return Err(e.into());
    }
    if s.svg {
        let stem = csv_name.trim_end_matches(".csv");
        let name = if stem == "convergence" { "total_error.svg".to_string() } else { format!("{stem}.svg") };
        let plot = error_plot(&report, cfg.scheme.degree() as f64, &s.header(command));
        let path = write_output(&s.out, &name, &plot)?;
        println!("wrote {}", path.display());
    }
    Ok(report)
}

fn cmd_convergence(s: &Settings) -> CliResult<()> {
    let cfg = study_config(s)?;
    let report = run_study(s, "convergence", &cfg, "convergence.csv")?;
    for &t in &s.ts {
        if let (Some(rate), Some(row)) = (report.final_rate(t, |e| e.total), report.finest(t)) {
            println!("t={t:e} finest total error {:.4e} final rate {rate:.3}", row.errors.total);
        }
    }
    Ok(())
}

fn cmd_verify(s: &Settings, defect: Option<&str>) -> CliResult<()> {
    let drop_interior_dof = match defect {
        None => false,
        Some("drop-interior-dof") => true,
        Some(other) => return Err(CliError::config(format!("unknown defect `{other}`"))),
    };
    let scheme = Scheme::parse(&s.family, s.p)?;
    let mut mesh = load_mesh_arg(&s.mesh)?;
    let opts = DiagnosticsOptions { trials: s.trials, seed: s.seed, drop_interior_dof };
    let mut csv = s.header("verify") + DiagnosticsReport::CSV_HEADER + "\n";
    let mut ok = true;
    let levels = s.levels.max(1);
    for level in 0..levels {
        if level > 0 {
            mesh = crate::mesh::refine_uniform(&mesh);
        }
        let d = Discretization::new(&mesh, scheme)?;
        let rep = run_diagnostics(&d, level, opts)?;
        println!("{} level {} {}", rep.scheme, level, rep.topology);
        for (name, status, detail) in rep.conditions() {
            println!("{status} {name}: {detail}");
        }
        println!("dim_harmonic {} (formula {})", rep.dim.computed, rep.dim.formula);
        println!("C_R {:.6e} beta_R bound {:.6e} (unquantified constant taken as 1)", rep.c_r, rep.beta_r_bound());
        ok &= rep.all_pass();
        csv.push_str(&rep.csv_rows());
    }
    let path = write_output(&s.out, "diagnostics.csv", &csv)?;
    println!("wrote {}", path.display());
    if ok {
        Ok(())
    } else {
        Err(CliError { code: EXIT_CONDITION, message: "condition check failed".into() })
    }
}

fn cmd_mesh(action: &MeshAction) -> CliResult<()> {
    match action {
        MeshAction::Info { mesh } => {
            let m = load_mesh_arg(mesh)?;
            println!("V={} T={} E={} h={:.6e}", m.num_vertices(), m.num_triangles(), m.num_edges(), m.h());
            println!("{}", boundary_topology(&m));
        }
        MeshAction::Refine { mesh, times, output } => {
            let m = refine_uniform_times(&load_mesh_arg(mesh)?, *times);
            std::fs::write(output, format_mesh(&m))?;
            println!("wrote {} ({} triangles)", output.display(), m.num_triangles());
        }
        MeshAction::Alfeld { mesh, output } => {
            let m = alfeld_split(&load_mesh_arg(mesh)?);
            std::fs::write(output, format_mesh(&m))?;
            println!("wrote {} ({} triangles)", output.display(), m.num_triangles());
        }
    }
    Ok(())
}

fn cmd_locking(s: &Settings) -> CliResult<()> {
    if s.ts.iter().any(|&t| t > 1e-2) {
        return Err(CliError::config("the locking demo needs t <= 1e-2"));
    }
    let plain = study_config(s)?;
    let plain_rep = run_study(s, "locking-demo", &plain, "locking_plain.csv")?;
    let rt = StudyConfig { scheme: Scheme::RtMitc(2), ..plain.clone() };
    let rt_rep = run_study(s, "locking-demo", &rt, "locking_rt.csv")?;
    for &t in &s.ts {
        let worst = plain_rep.rows_for_t(t).map(|r| r.errors.w_ratio).fold(0.0, f64::max);
        let (Some(p), Some(r)) = (plain_rep.finest(t), rt_rep.finest(t)) else { continue };
        println!("t={t:e} plain |w_h|_1/|w|_1 <= {worst:.4e}");
        println!(
            "t={t:e} finest total error plain {:.4e} rt {:.4e} ratio {:.4e}",
            p.errors.total,
            r.errors.total,
            r.errors.total / p.errors.total
        );
    }
    Ok(())
}

/// Runs one parsed command line.
pub fn execute(cli: &Cli) -> CliResult<()> {
    if let Command::Mesh { action } = &cli.command {
        return cmd_mesh(action);
    }
    let s = resolve(cli)?;
    match &cli.command {
        Command::Convergence { .. } => cmd_convergence(&s),
        Command::Verify { inject_defect, .. } => cmd_verify(&s, inject_defect.as_deref()),
        Command::LockingDemo { .. } => cmd_locking(&s),
        Command::Mesh { .. } => unreachable!(),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("plate").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "# study\nfamily = bdm\np = 3\nnu = 0.25\nt = 1, 0.5\n").unwrap();
        let cli = parse(&["--config", cfg.to_str().unwrap(), "--nu", "0.2", "convergence", "--p", "2"]);
        let s = resolve(&cli).unwrap();
        assert_eq!(s.family, "bdm");
        assert_eq!(s.p, 2);
        assert_eq!(s.material.nu, 0.2);
        assert_eq!(s.ts, vec![1.0, 0.5]);
        assert_eq!(s.levels, 4);
        assert_eq!(s.material.kappa, 5.0 / 6.0);
    }

    #[test]
    fn bad_config_is_a_config_error() {
        assert!(parse_config_file("no equals sign").is_err());
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        std::fs::write(&cfg, "colour = red\n").unwrap();
        let cli = parse(&["--config", cfg.to_str().unwrap(), "convergence"]);
        assert_eq!(resolve(&cli).unwrap_err().code, EXIT_CONFIG);
    }

    #[test]
    fn invalid_degree_is_rejected_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = run(["plate", "--out", out, "convergence", "--family", "rt", "--p", "1", "--levels", "2"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(!dir.path().join("convergence.csv").exists());
        assert_eq!(run(["plate", "convergence", "--levels", "x"]), EXIT_CONFIG);
    }

    #[test]
    fn hash_depends_on_settings() {
        let s = resolve(&parse(&["convergence"])).unwrap();
        let mut t = s.clone();
        t.seed = 7;
        assert_ne!(s.hash("convergence"), t.hash("convergence"));
        assert_eq!(s.hash("convergence"), s.clone().hash("convergence"));
        assert!(s.header("convergence").starts_with("# plate-fem "));
    }
}
