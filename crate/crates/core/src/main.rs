use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use kinetic_eikonal::hamiltonian::{self, HamiltonianModel};
use kinetic_eikonal::hj::{self, HJRunConfig, InitialCondition};
use kinetic_eikonal::kinetic::{self, KineticConfig};
use kinetic_eikonal::model_spec::{self, ModelSpec};
use kinetic_eikonal::output::{self, OutputDir};
use kinetic_eikonal::{Error, Result};

/// Experiments for the kinetic eikonal equation and its Hamilton-Jacobi limit.
///
/// Exit status: 0 on success, 2 on invalid input, 3 on numerical failure.
#[derive(Parser, Debug)]
#[command(name = "kinetic-eikonal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate H, H' and H'' (h_table.csv) and the Legendre transform (legendre.csv).
    Hamiltonian(HamiltonianArgs),
    /// Tabulate the Legendre transform L(q) (legendre.csv).
    Legendre(LegendreArgs),
    /// Solve phi_t + H(phi_x) = 0 (hj_series.csv).
    Hj(HjArgs),
    /// Solve the scaled kinetic phase equation (kinetic_final.csv, macro_series.csv, bounds.csv).
    Kinetic(KineticArgs),
    /// Distance to the Hamilton-Jacobi limit over a decreasing eps sequence (converge.csv).
    Converge(ConvergeArgs),
    /// Paired HJ runs for a kinetic model and its classical eikonal twin.
    Compare(CompareArgs),
    /// Uniform-estimate monitors for one kinetic run (bounds.csv).
    Bounds(KineticArgs),
}

#[derive(Args, Debug)]
struct LegendreFlags {
    /// Number of q points.
    #[arg(long, default_value_t = 201)]
    nq: usize,
    /// The sup over p runs over [-p_span/2, p_span/2].
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    p_span: f64,
    /// Number of p points in the sup.
    #[arg(long = "np", default_value_t = 4001)]
    np: usize,
}

#[derive(Args, Debug)]
struct HamiltonianArgs {
    #[arg(long, default_value = "uniform:vmax=1,n=64")]
    model: String,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    p_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    p_max: f64,
    #[arg(long = "np", default_value_t = 401)]
    np: usize,
    /// Legendre table points.
    #[arg(long, default_value_t = 201)]
    nq: usize,
    #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
    p_span: f64,
    /// p points for the Legendre sup.
    #[arg(long, default_value_t = 4001)]
    legendre_np: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LegendreArgs {
    #[arg(long, default_value = "uniform:vmax=1,n=64")]
    model: String,
    #[command(flatten)]
    grid: LegendreFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Domain {
    #[arg(long, default_value_t = -4.0, allow_negative_numbers = true)]
    xmin: f64,
    #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
    xmax: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    cfl: f64,
}

#[derive(Args, Debug)]
struct HjArgs {
    #[arg(long, default_value = "coth:vmax=1")]
    model: String,
    #[arg(long, default_value = "parabola:a=1")]
    init: String,
    #[arg(long, default_value_t = 400)]
    nx: usize,
    #[arg(long, default_value_t = 5)]
    snapshots: usize,
    /// Global Lax-Friedrichs dissipation; local dissipation when omitted.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KineticArgs {
    #[arg(long, default_value = "uniform:vmax=1,n=32")]
    model: String,
    #[arg(long, default_value_t = 0.125, allow_negative_numbers = true)]
    eps: f64,
    #[arg(long, default_value = "cosine:amp=1")]
    init: String,
    #[arg(long, default_value_t = 200)]
    nx: usize,
    #[arg(long, default_value_t = 11)]
    snapshots: usize,
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long, default_value = "uniform:vmax=1,n=32")]
    model: String,
    /// Strictly decreasing, at least three values.
    #[arg(long, default_value = "0.5,0.25,0.125,0.0625")]
    eps: String,
    #[arg(long, default_value = "cosine:amp=1")]
    init: String,
    #[arg(long, default_value_t = 200)]
    nx: usize,
    #[arg(long, default_value_t = 11)]
    snapshots: usize,
    /// Limit Hamiltonian; defaults to the exact one of --model.
    #[arg(long)]
    reference: Option<String>,
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, default_value = "coth:vmax=1")]
    model: String,
    /// theta^2 of the classical twin; defaults to that of --model.
    #[arg(long, allow_negative_numbers = true)]
    theta2: Option<f64>,
    #[arg(long, default_value = "parabola:a=1")]
    init: String,
    #[arg(long, default_value_t = 400)]
    nx: usize,
    #[arg(long, default_value_t = 5)]
    snapshots: usize,
    #[command(flatten)]
    domain: Domain,
    #[arg(long)]
    out: PathBuf,
}

fn linspace(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !a.is_finite() || !b.is_finite() || a > b || (n == 1 && a != b) {
        return Err(Error::Invalid(format!("bad grid [{a}, {b}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|k| if k == n - 1 { b } else { a + k as f64 * step })
        .collect())
}

fn one_dimensional(model: &ModelSpec) -> Result<HamiltonianModel> {
    let h = model.hamiltonian()?;
    if let Some(d) = h.dim() {
        if d != 1 {
            return Err(Error::Invalid(format!("this command needs a 1-D model, got dimension {d}")));
        }
    }
    Ok(h)
}

fn hj_config(h: HamiltonianModel, init: InitialCondition, nx: usize, snapshots: usize, d: &Domain) -> HJRunConfig {
    let mut c = HJRunConfig::new(h, init);
    c.x_min = d.xmin;
    c.x_max = d.xmax;
    c.n_x = nx;
    c.t_final = d.t;
    c.cfl = d.cfl;
    c.snapshots = snapshots;
    c
}

fn kinetic_config(
    model: &str,
    eps: f64,
    init: &str,
    nx: usize,
    snapshots: usize,
    d: &Domain,
) -> Result<KineticConfig> {
    let velocity = model.parse::<ModelSpec>()?.velocity()?;
    let mut c = KineticConfig::new(velocity, eps, model_spec::parse_initial(init)?);
    c.x_min = d.xmin;
    c.x_max = d.xmax;
    c.n_x = nx;
    c.t_final = d.t;
    c.cfl = d.cfl;
    c.snapshots = snapshots;
    c.validate()?;
    Ok(c)
}

fn report_violations(report: &kinetic::BoundsReport) {
    for v in &report.violations {
        eprintln!(
            "bound violated at t = {}: {} measured {} > allowed {} + {}",
            v.t, v.bound, v.measured, v.allowed, v.tolerance
        );
    }
}

fn run(command: Command, out: &mut Option<OutputDir>) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Hamiltonian(a) => {
            let h = one_dimensional(&a.model.parse()?)?;
            let ps = linspace(a.p_min, a.p_max, a.np)?;
            let rows = ps
                .iter()
                .map(|&p| h.derivatives(&[p]))
                .collect::<Result<Vec<_>>>()?;
            let table = hamiltonian::legendre(&h, a.nq, a.p_span, a.legendre_np)?;
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("h_table.csv", &output::h_table(&ps, &rows))?;
            dir.write("legendre.csv", &output::legendre_table(&table))?;
        }
        Command::Legendre(a) => {
            let h = one_dimensional(&a.model.parse()?)?;
            let table = hamiltonian::legendre(&h, a.grid.nq, a.grid.p_span, a.grid.np)?;
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("legendre.csv", &output::legendre_table(&table))?;
        }
        Command::Hj(a) => {
            let h = one_dimensional(&a.model.parse()?)?;
            let mut c = hj_config(h, model_spec::parse_initial(&a.init)?, a.nx, a.snapshots, &a.domain);
            c.alpha = a.alpha;
            let series = hj::solve_hj(&c)?;
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("hj_series.csv", &output::hj_series(&series))?;
        }
        Command::Kinetic(a) => {
            let c = kinetic_config(&a.model, a.eps, &a.init, a.nx, a.snapshots, &a.domain)?;
            let series = kinetic::solve_kinetic(&c)?;
            let report = kinetic::check_bounds(&series, &c.initial_field()?);
            let macros: Vec<_> = series.iter().map(kinetic::macro_phase).collect();
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("kinetic_final.csv", &output::kinetic_final(series.last().expect("snapshots")))?;
            dir.write("macro_series.csv", &output::macro_phase_series(&macros))?;
            dir.write("bounds.csv", &output::bounds(&report))?;
            report_violations(&report);
        }
        Command::Bounds(a) => {
            let c = kinetic_config(&a.model, a.eps, &a.init, a.nx, a.snapshots, &a.domain)?;
            let series = kinetic::solve_kinetic(&c)?;
            let report = kinetic::check_bounds(&series, &c.initial_field()?);
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("bounds.csv", &output::bounds(&report))?;
            report_violations(&report);
            eprintln!("{} violation(s), tolerance {}", report.violations.len(), report.tolerance);
        }
        Command::Converge(a) => {
            let eps = model_spec::parse_list(&a.eps)?;
            let first = *eps.first().ok_or_else(|| Error::Invalid("empty eps list".into()))?;
            let c = kinetic_config(&a.model, first, &a.init, a.nx, a.snapshots, &a.domain)?;
            let reference = match &a.reference {
                Some(s) => Some(one_dimensional(&s.parse()?)?),
                None => None,
            };
            let study = kinetic::converge_study(&eps, &c, reference.as_ref())?;
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("converge.csv", &output::converge(&study.rows))?;
            for (k, report) in study.bounds.iter().enumerate() {
                dir.write(&format!("bounds_eps{k}.csv"), &output::bounds(report))?;
                report_violations(report);
            }
            for r in &study.rows {
                eprintln!("eps = {:<10} sup error = {:e}", r.epsilon, r.sup_error);
            }
            if !study.strictly_decreasing {
                eprintln!("warning: the error sequence is not strictly decreasing");
            }
        }
        Command::Compare(a) => {
            let spec: ModelSpec = a.model.parse()?;
            let h = one_dimensional(&spec)?;
            let theta2 = a.theta2.unwrap_or_else(|| h.theta2());
            let classical = HamiltonianModel::classical(theta2)?;
            let init = model_spec::parse_initial(&a.init)?;
            let kin = hj::solve_hj(&hj_config(h, init, a.nx, a.snapshots, &a.domain))?;
            let cls = hj::solve_hj(&hj_config(classical, init, a.nx, a.snapshots, &a.domain))?;
            let dir = out.insert(OutputDir::create(&a.out)?);
            dir.write("hj_series_kinetic.csv", &output::hj_series(&kin))?;
            dir.write("hj_series_classical.csv", &output::hj_series(&cls))?;
        }
    }
    if let Some(dir) = out {
        for p in dir.written() {
            eprintln!("wrote {}", p.display());
        }
    }
    eprintln!("done in {:.2?}", started.elapsed());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = None;
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(dir) = out {
                dir.discard();
            }
            eprintln!("error: {e}");
            // an unwritable output directory is a bad argument, not a numerical failure
            if e.is_validation() || matches!(e, Error::Io(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
