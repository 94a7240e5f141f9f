use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kdv_delay::certificates::{certify, critical_lengths_below, CertificateReport, CertificateRequest};
use kdv_delay::config::{parse_config, RunConfig};
use kdv_delay::output::{
    format_float, write_report_csv, write_samples_csv, write_svg_plot, write_sweep_csv, Series,
};
use kdv_delay::run::{run, sweep, SweepAxis};
use kdv_delay::{Error, Result};

#[derive(Parser)]
#[command(name = "kdv-delay", version, about = "KdV with delayed boundary feedback: simulate and certify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write series.csv, report.csv (and plot.svg).
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
    /// Run one simulation per value of a parameter and write sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
    /// Evaluate the closed-form stability conditions.
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long = "L")]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Norm of the initial data, for the nonlinear decay rate.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// List the critical lengths up to a bound.
    CriticalLengths {
        #[arg(long, default_value_t = 100.0)]
        max: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(path: &Path, output_dir: Option<PathBuf>) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            output_dir,
            plot,
        } => {
            let config = load(&config, output_dir)?;
            let out = run(&config)?;
            for n in out.notices.iter().chain(&out.report.notes) {
                eprintln!("note: {n}");
            }
            let dir = &config.output_dir;
            write_samples_csv(&out.samples, &dir.join("series.csv"))?;
            write_report_csv(&out.report, &dir.join("report.csv"))?;
            if plot {
                let warnings = write_svg_plot(&[Series::log_energy("ln E", &out.samples)], &dir.join("plot.svg"))?;
                warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            }
            println!(
                "nu = {:.6}  kappa = {:.6}  r2 = {:.6}  E(0) = {:.6e}  E(T) = {:.6e}",
                out.fit.nu,
                out.fit.kappa,
                out.fit.r2,
                out.samples[0].energy,
                out.samples.last().map_or(f64::NAN, |s| s.energy)
            );
            print_report(&out.report);
            Ok(())
        }
        Command::Sweep {
            config,
            axis,
            values,
            output_dir,
            plot,
        } => {
            let config = load(&config, output_dir)?;
            let rows = sweep(&config, axis, &values);
            let dir = &config.output_dir;
            write_sweep_csv(&rows, &dir.join("sweep.csv"))?;
            let mut series = Vec::new();
            for row in &rows {
                match &row.outcome {
                    Ok(out) => {
                        println!("{axis} = {}: nu = {:.6}, r2 = {:.6}", row.value, out.fit.nu, out.fit.r2);
                        series.push(Series::log_energy(format!("{axis}={}", row.value), &out.samples));
                    }
                    Err(e) => eprintln!("{axis} = {}: {e}", row.value),
                }
            }
            if plot && !series.is_empty() {
                let warnings = write_svg_plot(&series, &dir.join("sweep.svg"))?;
                warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            }
            Ok(())
        }
        Command::Certify {
            alpha,
            beta,
            length,
            h,
            r,
            output_dir,
        } => {
            if !(length > 0.0) || !(h > 0.0) {
                return Err(Error::Validation(vec![format!("L and h must be positive (L = {length}, h = {h})")]));
            }
            let report = certify(&CertificateRequest {
                alpha,
                beta,
                length,
                delay: h,
                weights: None,
                radius: r,
            });
            report.notes.iter().for_each(|n| eprintln!("note: {n}"));
            print_report(&report);
            if let Some(dir) = output_dir {
                write_report_csv(&report, &dir.join("report.csv"))?;
            }
            Ok(())
        }
        Command::CriticalLengths { max } => {
            println!("L,k,l");
            for (value, k, l) in critical_lengths_below(max) {
                println!("{},{k},{l}", format_float(value));
            }
            Ok(())
        }
    }
}

fn print_report(report: &CertificateReport) {
    for (key, value) in report.entries() {
        match value {
            Some(v) => println!("{key:>26} = {v}"),
            None => println!("{key:>26} = -"),
        }
    }
}
