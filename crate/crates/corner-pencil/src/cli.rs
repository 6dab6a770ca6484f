use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use corner_pencil_core::spectrum::locate_eigenvalues;
use corner_pencil_core::tangential::{
    admissible_vectors, constant_vector_consistency, rhs_membership, tangential_system,
};
use corner_pencil_core::verdict::{decide, RhsMode, TangentialEvidence};
use corner_pencil_core::verify::{
    corroborate, nonlocal_bc_residual, pde_residual, sobolev_probe, Corroboration, SingularField,
};
use corner_pencil_core::{BandQuery, BandResult, DiscretizedPencil, ValidatedConfig, C64};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::load_config;
use crate::error::CliError;
use crate::report;
use crate::traces::load_trace_set;

/// Quasi-random points per angle when corroborating eigenpairs.
const CORROBORATION_SAMPLES: usize = 50;

#[derive(Debug, Parser)]
#[command(
    name = "corner-pencil",
    version,
    about = "Eigenvalues of the corner operator pencil of a nonlocal elliptic problem and the W2 regularity verdict"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Configuration file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Band {
    /// Band `c1 <= Im λ < c2`.
    #[arg(long, value_parser = parse_pair::<f64>, allow_hyphen_values = true, default_value = "-1,0")]
    pub band: (f64, f64),
    /// Search `|Re λ| <= R`.
    #[arg(long = "re-range", default_value_t = 10.0)]
    pub re_range: f64,
    /// Collocation points per angle (even, at least 8).
    #[arg(long, default_value_t = 48)]
    pub n: usize,
    /// Seed for the quasi-random residual samples.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Band {
    fn query(&self) -> BandQuery {
        BandQuery::default()
            .with_band(self.band.0, self.band.1)
            .with_re_half_width(self.re_range)
            .with_n(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Homogeneous,
    Nonhomogeneous,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Band eigenvalues with their classification.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        band: Band,
        /// CSV of eigenfunction samples (eigenvalue, member, angle, omega, re, im).
        #[arg(long)]
        eigenfunctions: Option<PathBuf>,
    },
    /// Tangential operators, pivots and β.
    Tangential {
        #[command(flatten)]
        common: Common,
    },
    /// Consistency of a trace set and membership of the right-hand side.
    Consistency {
        #[command(flatten)]
        common: Common,
        /// Trace-set file (JSON).
        #[arg(long)]
        traces: PathBuf,
    },
    /// The full regularity verdict.
    Decide {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        band: Band,
        #[arg(long, value_enum, default_value = "nonhomogeneous")]
        mode: Mode,
        /// Trace sets for sampled `v`, comma separated.
        #[arg(long = "v-traces", value_delimiter = ',')]
        v_traces: Vec<PathBuf>,
    },
    /// Singular solution of one band eigenpair: residuals and Sobolev probes.
    Singular {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        band: Band,
        /// 1-based position of the eigenvalue in the `spectrum` output.
        #[arg(long, default_value_t = 1)]
        index: usize,
        /// 1-based eigenbasis member.
        #[arg(long, default_value_t = 1)]
        member: usize,
        /// Residual sample points per angle.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Number of dyadic levels `δ = ε 2^{-5}, ε 2^{-6}, …`.
        #[arg(long, default_value_t = 7)]
        levels: usize,
        /// CSV of field samples (angle, r, omega, re, im).
        #[arg(long = "field-csv")]
        field_csv: Option<PathBuf>,
        /// CSV of probe values (delta, I1, I2).
        #[arg(long = "probe-csv")]
        probe_csv: Option<PathBuf>,
    },
    /// log|det M_n(λ)| on a rectangular λ grid, as CSV.
    Detgrid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        band: Band,
        /// Grid points along Re λ and Im λ.
        #[arg(long, value_parser = parse_pair::<usize>, default_value = "81,41")]
        grid: (usize, usize),
    },
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated values, got {s:?}"))?;
    let p = |x: &str| x.trim().parse::<T>().map_err(|_| format!("cannot parse {x:?}"));
    Ok((p(a)?, p(b)?))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn emit_json(out: Option<&Path>, v: Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&report::document(v)).expect("serializable");
    text.push('\n');
    emit(out, &text)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))
}

fn search(config: &ValidatedConfig, band: &Band) -> Result<(BandResult, Vec<Corroboration>), CliError> {
    let mut result = locate_eigenvalues(config, &band.query())?;
    let checks = corroborate(config, &mut result, CORROBORATION_SAMPLES, band.seed)?;
    Ok((result, checks))
}

fn write_eigenfunctions(path: &Path, result: &BandResult, pencil: &DiscretizedPencil) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let err = |e| CliError::csv(path, e);
    w.write_record(["eigenvalue", "member", "angle", "omega", "re", "im"]).map_err(err)?;
    for (i, rec) in result.records.iter().enumerate() {
        for (m, member) in rec.eigenbasis.vectors.iter().enumerate() {
            for (j, phi) in member.iter().enumerate() {
                for (w_, z) in pencil.grid(j).nodes().iter().zip(phi) {
                    w.serialize((i + 1, m + 1, j + 1, w_, z.re, z.im)).map_err(err)?;
                }
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn singular_field_csv(path: &Path, field: &SingularField, config: &ValidatedConfig) -> Result<(), CliError> {
    const RADII: usize = 17;
    const ANGLES: usize = 33;
    let mut w = csv_writer(path)?;
    let err = |e| CliError::csv(path, e);
    w.write_record(["angle", "r", "omega", "re", "im"]).map_err(err)?;
    for (j, &wj) in config.angles.iter().enumerate() {
        for i in 0..RADII {
            let r = config.epsilon * (-(i as f64) * 0.5 * std::f64::consts::LN_2).exp();
            for a in 0..ANGLES {
                let omega = wj * (-1.0 + 2.0 * (a + 1) as f64 / (ANGLES + 1) as f64);
                let u = field.eval(j, r, omega);
                w.serialize((j + 1, r, omega, u.re, u.im)).map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Validate { common } => {
            let config = load_config(&common.config)?;
            emit_json(common.out.as_deref(), report::config_summary(&config))?;
            Ok(0)
        }
        Command::Spectrum {
            common,
            band,
            eigenfunctions,
        } => {
            let config = load_config(&common.config)?;
            let (result, checks) = search(&config, &band)?;
            if let Some(path) = eigenfunctions {
                let pencil = DiscretizedPencil::new(&config, band.n)?;
                write_eigenfunctions(&path, &result, &pencil)?;
            }
            emit_json(common.out.as_deref(), report::band(&result, &checks))?;
            Ok(0)
        }
        Command::Tangential { common } => {
            let config = load_config(&common.config)?;
            let sys = tangential_system(&config);
            let mut v = report::tangential(&sys);
            v["constant_vector"] = report::constant_vector(&constant_vector_consistency(&config, &sys));
            emit_json(common.out.as_deref(), v)?;
            Ok(0)
        }
        Command::Consistency { common, traces } => {
            let config = load_config(&common.config)?;
            let sys = tangential_system(&config);
            let set = load_trace_set(&traces, &config)?;
            let (membership, rep) = rhs_membership(&sys, &set.traces, config.epsilon)?;
            let bv0: Vec<C64> = match &set.bv0 {
                Some(b) => b.clone(),
                None => set.traces.iter().map(|t| t.value_at_zero()).collect(),
            };
            let v = json!({
                "consistency": report::consistency(&rep, membership),
                "constant_vector": report::constant_vector(&constant_vector_consistency(&config, &sys)),
                "admissible": report::admissible(&admissible_vectors(&config, &bv0)),
            });
            emit_json(common.out.as_deref(), v)?;
            Ok(0)
        }
        Command::Decide {
            common,
            band,
            mode,
            v_traces,
        } => {
            let config = load_config(&common.config)?;
            let mut evidence = TangentialEvidence::new(tangential_system(&config));
            let mode = match mode {
                Mode::Homogeneous => RhsMode::Homogeneous,
                Mode::Nonhomogeneous => RhsMode::Nonhomogeneous,
            };
            for path in &v_traces {
                let set = load_trace_set(path, &config)?;
                match mode {
                    RhsMode::Nonhomogeneous => evidence.v_samples.push(set.traces),
                    RhsMode::Homogeneous => evidence.admissible_samples.push(set.into_admissible()),
                }
            }
            let (result, checks) = search(&config, &band)?;
            let verdict = decide(&config, &result, Some(&evidence), mode)?;
            emit_json(common.out.as_deref(), report::verdict(&verdict, &checks))?;
            Ok(verdict.outcome.exit_code())
        }
        Command::Singular {
            common,
            band,
            index,
            member,
            samples,
            levels,
            field_csv,
            probe_csv,
        } => {
            let config = load_config(&common.config)?;
            let result = locate_eigenvalues(&config, &band.query())?;
            let rec = index
                .checked_sub(1)
                .and_then(|i| result.records.get(i))
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "eigenvalue {index} requested but the band holds {}",
                        result.records.len()
                    ))
                })?;
            if member == 0 || member > rec.eigenbasis.multiplicity() {
                return Err(CliError::Usage(format!(
                    "member {member} requested but the eigenbasis has {}",
                    rec.eigenbasis.multiplicity()
                )));
            }
            let field = SingularField::from_record(&config, rec, member - 1)?;
            let pde = pde_residual(&field, &config, samples, band.seed)?;
            let bc = nonlocal_bc_residual(&field, &config, samples, band.seed)?;
            let deltas: Vec<f64> = (0..levels).map(|k| config.epsilon * 0.5f64.powi(5 + k as i32)).collect();
            let p1 = sobolev_probe(&field, 1, &deltas)?;
            let p2 = sobolev_probe(&field, 2, &deltas)?;
            if let Some(path) = field_csv {
                singular_field_csv(&path, &field, &config)?;
            }
            if let Some(path) = probe_csv {
                let mut w = csv_writer(&path)?;
                let err = |e| CliError::csv(&path, e);
                w.write_record(["delta", "I1", "I2"]).map_err(err)?;
                for ((d, a), b) in deltas.iter().zip(&p1.values).zip(&p2.values) {
                    w.serialize((d, a, b)).map_err(err)?;
                }
                w.flush().map_err(|e| CliError::io(&path, e))?;
            }
            let v = json!({
                "eigenvalue": report::eigenvalue_record(rec),
                "member": member,
                "pde_residual": pde,
                "bc_residual": bc,
                "probes": [report::probe(&p1), report::probe(&p2)],
            });
            emit_json(common.out.as_deref(), v)?;
            Ok(0)
        }
        Command::Detgrid { common, band, grid } => {
            let config = load_config(&common.config)?;
            let (nre, nim) = grid;
            if nre < 2 || nim < 2 {
                return Err(CliError::Usage("--grid needs at least 2 points in each direction".into()));
            }
            let pencil = DiscretizedPencil::new(&config, band.n)?;
            let (c1, c2) = band.band;
            let r = band.re_range;
            let points: Vec<C64> = (0..nim)
                .flat_map(|b| {
                    (0..nre).map(move |a| {
                        C64::new(
                            -r + 2.0 * r * a as f64 / (nre - 1) as f64,
                            c1 + (c2 - c1) * b as f64 / (nim - 1) as f64,
                        )
                    })
                })
                .collect();
            let values: Vec<f64> = points
                .par_iter()
                .map(|&z| pencil.det_log(z).map(|v| v.0).unwrap_or(f64::NEG_INFINITY))
                .collect();
            let mut text = String::from("re,im,log_abs_det\n");
            for (z, v) in points.iter().zip(values) {
                text.push_str(&format!("{:?},{:?},{:?}\n", z.re, z.im, v));
            }
            emit(common.out.as_deref(), &text)?;
            Ok(0)
        }
    }
}

/// Parses the arguments, runs and returns the process exit code. Errors
/// are reported as a JSON object on standard error with code 1.
pub fn main() -> i32 {
    if let Some(threads) = std::env::var("CORNER_PENCIL_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return 1;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}
