use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use twocentre::fringe::{self, BetaForm};
use twocentre::scan::{self, OutputFormat, ScanSpec};

#[derive(Parser)]
#[command(
    name = "twocentre",
    about = "Two-centre interference spectra for pump-probe dissociative ionization of H2+",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    BoExact,
    BoApprox,
    Nonbo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormArg {
    Exact,
    Asymptotic,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a probability grid from a JSON spec or a named preset
    Scan {
        /// Path to the JSON scan spec (optional when --preset is given)
        spec: Option<PathBuf>,
        /// Built-in parameter set: fig3, fig4, fig5 or fig6
        #[arg(long)]
        preset: Option<String>,
        /// Output path (overrides the spec)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format (overrides the spec)
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Number of worker threads (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
        /// Amplitude model (overrides the spec)
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Locate interference minima in a delay trace and invert them to R_N(t_c)
    Minima {
        /// CSV trace produced by `scan` with t_c as the first column
        trace: PathBuf,
        /// Electron momentum magnitude in a.u.
        #[arg(long)]
        pe: f64,
        /// Angle between the electron momentum and the nuclear axis, in rad
        #[arg(long)]
        theta: f64,
        /// Absolute fringe order assigned to the first detected minimum
        #[arg(long, default_value_t = 1)]
        first_order: u32,
    },
    /// Tabulate angular Legendre coefficients over a range of separations
    Betas {
        /// Electron momentum magnitude in a.u.
        #[arg(long)]
        pe: f64,
        /// Separation range as start:stop:count, in bohr
        #[arg(long, value_name = "a:b:n")]
        rn_range: String,
        #[arg(long, value_enum, default_value_t = FormArg::Exact)]
        form: FormArg,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Scan {
            spec,
            preset,
            out,
            format,
            workers,
            model,
        } => {
            let mut scan_spec = match (&spec, &preset) {
                (Some(path), None) => ScanSpec::load(path)?,
                (None, Some(name)) => ScanSpec::preset(name)?,
                (Some(path), Some(name)) => {
                    let mut s = ScanSpec::preset(name)?;
                    let overlay = ScanSpec::load(path)?;
                    s.axes = overlay.axes;
                    s.fixed.extend(overlay.fixed);
                    s.output = overlay.output;
                    s.validate()?;
                    s
                }
                (None, None) => {
                    return Err("provide a spec file or --preset".into());
                }
            };
            if let Some(m) = model {
                scan_spec.model = match m {
                    ModelArg::BoExact => scan::Model::BoExact,
                    ModelArg::BoApprox => scan::Model::BoApprox,
                    ModelArg::Nonbo => scan::Model::Nonbo,
                };
                scan_spec.validate()?;
            }
            let out_format = match format {
                Some(FormatArg::Csv) => OutputFormat::Csv,
                Some(FormatArg::Json) => OutputFormat::Json,
                None => scan_spec.output.format,
            };
            let out_path = out.unwrap_or_else(|| PathBuf::from(&scan_spec.output.path));

            let result = match workers {
                Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()?
                    .install(|| scan::run_scan(&scan_spec))?,
                _ => scan::run_scan(&scan_spec)?,
            };
            let written = scan::write_result(&result, out_format, &out_path)?;
            eprintln!(
                "{} rows in {} ms",
                result.rows.len(),
                result.metadata.elapsed_ms
            );
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Minima {
            trace,
            pe,
            theta,
            first_order,
        } => {
            let (header, rows) = scan::read_csv(&trace)?;
            if header.len() < 2 || header[0] != "t_c" {
                return Err("trace must have t_c as its first column".into());
            }
            let value_col = header
                .iter()
                .position(|h| h == "total")
                .unwrap_or(header.len() - 1);
            let series: Vec<(f64, f64)> =
                rows.iter().map(|r| (r[0], r[value_col])).collect();
            let minima: Vec<(f64, u32)> = fringe::find_minima(&series)?
                .into_iter()
                .map(|(t, n)| (t, n - 1 + first_order))
                .collect();
            let points = fringe::infer_trajectory(&minima, pe, theta)?;
            println!("t_c_au,order,r_n_bohr");
            for ((t, n), pt) in minima.iter().zip(&points) {
                println!("{t:.16e},{n},{:.16e}", pt.r_n);
            }
            Ok(())
        }
        Command::Betas { pe, rn_range, form } => {
            let parts: Vec<&str> = rn_range.split(':').collect();
            if parts.len() != 3 {
                return Err("--rn-range must be start:stop:count".into());
            }
            let a: f64 = parts[0].trim().parse()?;
            let b: f64 = parts[1].trim().parse()?;
            let n: usize = parts[2].trim().parse()?;
            if n < 2 {
                return Err("--rn-range count must be >= 2".into());
            }
            let form = match form {
                FormArg::Exact => BetaForm::Exact,
                FormArg::Asymptotic => BetaForm::Asymptotic,
            };
            println!("r_n,x,beta0,beta2,beta4");
            for i in 0..n {
                let r = a + (b - a) * i as f64 / (n - 1) as f64;
                let (b0, b2, b4) = fringe::beta_coefficients(pe, r, form)?;
                println!(
                    "{r:.16e},{:.16e},{b0:.16e},{b2:.16e},{b4:.16e}",
                    pe * r
                );
            }
            Ok(())
        }
    }
}
