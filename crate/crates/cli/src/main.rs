//! `dislo`: validate, decompose and evaluate lattice-valued polyhedral
//! currents, and sweep envelope quantities over tangent angles.
//!
//! Exit status: 0 success, 1 usage error, 2 invalid data, 3 a solver did
//! not converge.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dislocation_relax::energy::{energy, CrystalIntegrand, CubicIntegrand, Integrand, IsotropicElasticParams};
use dislocation_relax::io::{loops_to_json, read_current};
use dislocation_relax::sweep::{plot_script, run_sweep, to_csv, AngleGrid, SweepConfig};
use dislocation_relax::{Region, SolverOptions};

#[derive(Parser)]
#[command(name = "dislo", version, about = "Polyhedral dislocation currents and relaxed line energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a current file and report its dimensions, mass and boundary.
    Validate { path: PathBuf },
    /// Split a closed current into polygonal loops.
    Decompose {
        path: PathBuf,
        /// Write the loops as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Line energy of a current, optionally restricted to a ball or box.
    Energy {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = IntegrandKind::Cubic)]
        integrand: IntegrandKind,
        /// Anisotropy of the cubic integrand, in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Shear modulus (crystal integrand).
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Poisson ratio (crystal integrand).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        nu: f64,
        /// Lattice spacing (crystal integrand).
        #[arg(long, default_value_t = 1.0)]
        a0: f64,
        /// Ball: center coordinates followed by the radius.
        #[arg(long, num_args = 2.., allow_negative_numbers = true, value_name = "CX CY R", conflicts_with = "box")]
        ball: Option<Vec<f64>>,
        /// Box: lower corner followed by upper corner.
        #[arg(long = "box", num_args = 2.., allow_negative_numbers = true, value_name = "LO.. HI..")]
        r#box: Option<Vec<f64>>,
    },
    /// Tabulate envelope quantities over t = (cos α, sin α) into a CSV.
    RelaxSweep {
        /// Planar Burgers vector, e.g. `1,1` or `2,1`.
        #[arg(long, value_parser = parse_burgers, allow_hyphen_values = true)]
        b: [i64; 2],
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Angles in degrees as `start:stop:step`, both ends included.
        #[arg(long, default_value = "0:360:1")]
        angles: AngleGrid,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of multistart starting points per solve.
        #[arg(long)]
        restarts: Option<usize>,
        /// Refuse Burgers vectors without a closed-form envelope.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandKind {
    Cubic,
    Crystal,
}

fn parse_burgers(s: &str) -> Result<[i64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [i, j] = parts.as_slice() else {
        return Err(format!("expected two integers `i,j`, got {s:?}"));
    };
    let int = |x: &str| x.parse::<i64>().map_err(|e| format!("{x:?}: {e}"));
    Ok([int(i)?, int(j)?])
}

enum Failure {
    Data(anyhow::Error),
    Solver(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { path } => validate(&path),
        Command::Decompose { path, out } => decompose(&path, out.as_deref()),
        Command::Energy {
            path,
            integrand,
            eta,
            mu,
            nu,
            a0,
            ball,
            r#box,
        } => {
            let current = read_current(&path)?;
            let integrand: Box<dyn Integrand> = match integrand {
                IntegrandKind::Cubic => Box::new(CubicIntegrand::new(eta)?),
                IntegrandKind::Crystal => {
                    if current.ambient_dim() != 2 || current.lattice_dim() != 2 {
                        return Err(anyhow!("the crystal integrand needs planar currents with planar Burgers vectors").into());
                    }
                    Box::new(CrystalIntegrand(IsotropicElasticParams::new(mu, nu, a0)?))
                }
            };
            let region = region(current.ambient_dim(), ball, r#box)?;
            let e = energy(&current.normalize(), integrand.as_ref(), region.as_ref())?;
            println!("integrand: {}", integrand.name());
            match &region {
                Some(Region::Ball { center, radius }) => println!("region: ball, center {center:?}, radius {radius}"),
                Some(Region::Box { lower, upper }) => println!("region: box {lower:?} .. {upper:?}"),
                None => println!("region: whole space"),
            }
            println!("energy: {e}");
            Ok(())
        }
        Command::RelaxSweep {
            b,
            eta,
            angles,
            out,
            seed,
            restarts,
            strict,
        } => {
            let mut solver = SolverOptions::default();
            if let Some(seed) = seed {
                solver.seed = seed;
            }
            if let Some(k) = restarts {
                if k == 0 {
                    return Err(anyhow!("--restarts must be positive").into());
                }
                solver.starts = k;
            }
            relax_sweep(
                SweepConfig {
                    b,
                    eta,
                    angles,
                    solver,
                    strict,
                },
                &out,
            )
        }
    }
}

fn region(n: usize, ball: Option<Vec<f64>>, boxed: Option<Vec<f64>>) -> anyhow::Result<Option<Region>> {
    if let Some(v) = ball {
        if v.len() != n + 1 {
            return Err(anyhow!("--ball needs {n} center coordinates and a radius, got {} values", v.len()));
        }
        let r = v[n];
        if !(r > 0.0) {
            return Err(anyhow!("--ball radius must be positive, got {r}"));
        }
        return Ok(Some(Region::ball(v[..n].to_vec(), r)));
    }
    if let Some(v) = boxed {
        if v.len() != 2 * n {
            return Err(anyhow!("--box needs {n} lower and {n} upper coordinates, got {} values", v.len()));
        }
        if v[..n].iter().zip(&v[n..]).any(|(lo, hi)| lo > hi) {
            return Err(anyhow!("--box lower corner exceeds upper corner"));
        }
        return Ok(Some(Region::boxed(v[..n].to_vec(), v[n..].to_vec())));
    }
    Ok(None)
}

fn validate(path: &Path) -> Result<(), Failure> {
    let current = read_current(path)?;
    let normalized = current.normalize();
    let boundary = normalized.boundary();
    println!("file: {}", path.display());
    println!("ambient dimension: {}", current.ambient_dim());
    println!("lattice dimension: {}", current.lattice_dim());
    println!("pieces: {} ({} after normalization)", current.pieces().len(), normalized.pieces().len());
    println!("mass: {}", normalized.mass());
    println!("closed: {}", boundary.is_empty());
    if !boundary.is_empty() {
        println!("boundary atoms:");
        for (p, w) in boundary.atoms() {
            println!("  {w} at {p}");
        }
    }
    Ok(())
}

fn decompose(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let current = read_current(path)?;
    let loops = current.decompose_loops()?;
    let mass = current.normalize().mass();
    let total: f64 = loops.iter().map(|l| l.weighted_length()).sum();
    let bound = (current.lattice_dim() as f64).sqrt() * mass;

    println!("loops: {}", loops.len());
    for (k, l) in loops.iter().enumerate() {
        let vertices: Vec<String> = l.vertices.iter().map(ToString::to_string).collect();
        println!("  [{k}] multiplicity {}: {}", l.multiplicity, vertices.join(" -> "));
    }
    println!("weighted length: {total} (bound sqrt(m) * mass = {bound})");
    if total > bound * (1.0 + 1e-12) + 1e-12 {
        return Err(anyhow!("weighted length {total} exceeds sqrt(m) * mass = {bound}").into());
    }
    let rebuilt = dislocation_relax::currents::loops_to_current(current.ambient_dim(), current.lattice_dim(), &loops)?;
    if !rebuilt.same_measure(&current) {
        return Err(anyhow!("loops do not reproduce the input current").into());
    }
    if let Some(out) = out {
        std::fs::write(out, loops_to_json(current.ambient_dim(), current.lattice_dim(), &loops))
            .with_context(|| format!("writing {}", out.display()))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn relax_sweep(config: SweepConfig, out: &Path) -> Result<(), Failure> {
    let outcome = run_sweep(&config)?;
    std::fs::write(out, to_csv(&outcome.rows)).with_context(|| format!("writing {}", out.display()))?;
    let script = out.with_extension("gp");
    let csv_name = out.file_name().map_or_else(|| out.display().to_string(), |n| n.to_string_lossy().into_owned());
    std::fs::write(&script, plot_script(&csv_name, config.b, config.eta))
        .with_context(|| format!("writing {}", script.display()))?;

    println!("b = ({},{}), eta = {}: {} angles", config.b[0], config.b[1], config.eta, outcome.rows.len());
    println!("wrote {} and {}", out.display(), script.display());
    if outcome.flagged.is_empty() {
        println!("no angle with lower bound below psi* by more than 1e-4");
    } else {
        let max = outcome.rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "lower bound below psi* at {} angles ({}° .. {}°), largest gap {max:.6}",
            outcome.flagged.len(),
            outcome.flagged[0],
            outcome.flagged[outcome.flagged.len() - 1],
        );
    }
    if !outcome.unconverged.is_empty() {
        return Err(Failure::Solver(anyhow!(
            "solver did not converge at {} angles, first at {}°",
            outcome.unconverged.len(),
            outcome.unconverged[0]
        )));
    }
    Ok(())
}
