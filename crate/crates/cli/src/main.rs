use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use layerdg::{
    build_mesh, grid_dump, run_convergence_with, run_projection_rates, run_regime_study, run_robustness,
    solve_manufactured, DgSpace, Error, ManufacturedSolution, MeshFamily, RateTable, StudyConfig,
};

#[derive(Parser)]
#[command(name = "layerdg", version, about = "LDG solver for convection-diffusion on layer-adapted meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the manufactured problem once and report its errors.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write U, u and u - U on an M x M grid (CSV) instead of the error table.
        #[arg(long = "dump-grid", value_name = "M")]
        dump_grid: Option<usize>,
    },
    /// Errors and rates over a sequence of N.
    Convergence(Common),
    /// Errors at fixed N over a range of epsilon.
    Robustness(Common),
    /// Rates on a general N sequence for several values of sqrt(epsilon).
    Regime(Common),
    /// Projection errors of the exact solution and their rates.
    ProjRates(Common),
    /// Print mesh nodes.
    MeshDump(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshArg {
    Shishkin,
    Bs,
    Bakhvalov,
}

impl From<MeshArg> for MeshFamily {
    fn from(m: MeshArg) -> Self {
        match m {
            MeshArg::Shishkin => MeshFamily::Shishkin,
            MeshArg::Bs => MeshFamily::BakhvalovShishkin,
            MeshArg::Bakhvalov => MeshFamily::Bakhvalov,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// Diffusion parameter; repeatable.
    #[arg(long = "epsilon")]
    epsilon: Vec<f64>,
    /// sqrt(epsilon), for the regime study; repeatable.
    #[arg(long = "sqrt-epsilon")]
    sqrt_epsilon: Vec<f64>,
    /// Elements per direction; repeatable.
    #[arg(long = "N")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum)]
    mesh: Option<MeshArg>,
    /// Transition parameter; defaults to k + 2.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.4)]
    delta: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda1: f64,
    /// Defaults to epsilon.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Gauss points per direction.
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "allow-lambda2-below-eps")]
    allow_lambda2_below_eps: bool,
}

impl Common {
    fn config(&self, family: MeshFamily, n_default: &[usize], eps_default: &[f64]) -> StudyConfig {
        let mut cfg = StudyConfig {
            family: self.mesh.map(Into::into).unwrap_or(family),
            k: self.k,
            sigma: self.sigma,
            alpha: self.alpha,
            delta: self.delta,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            allow_lambda2_below_eps: self.allow_lambda2_below_eps,
            n_list: pick(&self.n, n_default),
            epsilons: pick(&self.epsilon, eps_default),
            ..StudyConfig::default()
        };
        if let Some(q) = self.quad_order {
            cfg.quad_order = q;
        }
        cfg
    }

    fn emit_table(&self, table: &RateTable) -> Result<(), Error> {
        let text = match self.format {
            Format::Csv => table.to_csv(),
            Format::Markdown => table.to_markdown(),
        };
        self.emit(&text)
    }

    fn emit(&self, text: &str) -> Result<(), Error> {
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

fn pick<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn single<T: Copy>(v: &[T], name: &str) -> Result<T, Error> {
    match v {
        [x] => Ok(*x),
        _ => Err(Error::InvalidParameter(format!("expected exactly one {name}, got {}", v.len()))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let shishkin = MeshFamily::Shishkin;
    let progress = |s: &layerdg::Solved| {
        eprintln!(
            "N={} eps={:e}: {} unknowns, {:.2?}",
            s.report.n, s.report.epsilon, s.stats.n, s.total_time
        )
    };
    match cli.command {
        Command::Solve { common, dump_grid } => {
            let cfg = common.config(shishkin, &[16], &[1e-8]);
            cfg.validate()?;
            let eps = single(&cfg.epsilons, "--epsilon")?;
            let n = single(&cfg.n_list, "--N")?;
            if let Some(m) = dump_grid {
                if m < 2 {
                    return Err(Error::InvalidParameter(format!("--dump-grid needs M >= 2, got {m}")));
                }
            }
            let s = solve_manufactured(&cfg, eps, n)?;
            eprintln!(
                "{} unknowns, {} nonzeros, assembly {:.2?}, factor {:.2?}, total {:.2?}",
                s.stats.n, s.stats.nnz, s.assembly_time, s.stats.factor_time, s.total_time
            );
            match dump_grid {
                Some(m) => {
                    let space = DgSpace::with_quadrature(&s.mesh, cfg.k, cfg.quad_order)?;
                    let exact = ManufacturedSolution::new(eps)?;
                    eprintln!("l2 {:e}  sc {:e}  energy {:e}", s.report.l2, s.report.sc, s.report.energy);
                    common.emit(&grid_dump(&space, &s.solution, &exact, m)?)
                }
                None => {
                    let r = &s.report;
                    let mut t = RateTable::new(&["l2", "sc", "energy", "u_l2"]);
                    t.push(cfg.family.as_str(), cfg.k, eps, n, vec![r.l2, r.sc, r.energy, r.u_l2]);
                    common.emit_table(&t)
                }
            }
        }
        Command::Convergence(common) => {
            let cfg = common.config(shishkin, &[4, 8, 16, 32, 64], &[1e-8]);
            let t = run_convergence_with(&cfg, progress)?;
            common.emit_table(&t)
        }
        Command::Robustness(common) => {
            let cfg = common.config(shishkin, &[128], &[1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10]);
            common.emit_table(&run_robustness(&cfg)?)
        }
        Command::Regime(common) => {
            if !common.epsilon.is_empty() {
                return Err(Error::InvalidParameter("regime takes --sqrt-epsilon, not --epsilon".into()));
            }
            let n_default: Vec<usize> = (60..=220).step_by(20).collect();
            let mut cfg = common.config(MeshFamily::BakhvalovShishkin, &n_default, &[]);
            let roots = pick(&common.sqrt_epsilon, &[0.02, 0.01, 0.0025]);
            if let Some(r) = roots.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
                return Err(Error::InvalidParameter(format!("sqrt(epsilon) must lie in (0, 1], got {r}")));
            }
            cfg.epsilons = roots.iter().map(|r| r * r).collect();
            cfg.validate()?;
            common.emit_table(&run_regime_study(&cfg, &roots)?)
        }
        Command::ProjRates(common) => {
            let cfg = common.config(shishkin, &[8, 16, 32, 64], &[1e-8]);
            common.emit_table(&run_projection_rates(&cfg)?)
        }
        Command::MeshDump(common) => {
            let cfg = common.config(shishkin, &[16], &[1e-8]);
            cfg.validate()?;
            let eps = single(&cfg.epsilons, "--epsilon")?;
            let n = single(&cfg.n_list, "--N")?;
            common.emit(&build_mesh(&cfg.mesh_params(eps, n))?.dump())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
