//! Batch front-end: parse a scenario (JSON file and/or inline flags), run one
//! of the fit/pdf/outage/ber/simulate/compare pipelines, and emit tabular
//! curve data as CSV (12 significant digits, `# key = value` footer lines) or
//! a single JSON object. SNR and threshold axes are expressed in dB at this
//! boundary only; the library is linear-domain throughout.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Deserialize;

use crate::approx::{fit, pdf_envelope, ApproxParams};
use crate::egc::{
    ber_coherent_bpsk, ber_noncoherent_bfsk, branch_powers_from_profile, outage, to_egc_params,
};
use crate::error::{Error, Result};
use crate::hyperfn;
use crate::mcsim::{empirical_stats, generate, ks_distance, Modulation};
use crate::moments::{exact_moments, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Print the fitted parameters and the exact moments.
    Fit,
    /// Emit the fitted envelope density over a grid (optionally with an
    /// empirical histogram column).
    Pdf,
    /// Emit outage probability over a threshold sweep.
    Outage,
    /// Emit average bit error probability over a sweep.
    Ber,
    /// Emit empirical statistics of a simulated batch.
    Simulate,
    /// Emit analytic and empirical densities side by side with a KS footer.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModulationArg {
    CoherentBpsk,
    NoncoherentBfsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "nakagami-sum",
    version,
    about = "Fitted statistics and EGC performance for sums of equally correlated Nakagami-m envelopes"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: CommandKind,

    /// JSON scenario file; inline flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Branch count.
    #[arg(long = "L")]
    pub branches: Option<usize>,

    /// Nakagami fading parameter (positive integer).
    #[arg(long = "m")]
    pub m_z: Option<u32>,

    /// Common power correlation in [0, 0.999].
    #[arg(long)]
    pub rho: Option<f64>,

    /// First branch power of the exponential decay profile.
    #[arg(long)]
    pub omega1: Option<f64>,

    /// Decay exponent of the power profile.
    #[arg(long)]
    pub delta: Option<f64>,

    /// Noise density N0.
    #[arg(long)]
    pub n0: Option<f64>,

    /// Sweep axis as var:min:max:points with var one of snr_db, threshold,
    /// rho, L.
    #[arg(long)]
    pub sweep: Option<String>,

    #[arg(long, value_enum, default_value = "coherent-bpsk")]
    pub modulation: ModulationArg,

    /// Monte-Carlo sample / bit count where a command simulates.
    #[arg(long)]
    pub n: Option<u64>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    SnrDb,
    Threshold,
    Rho,
    Branches,
}

#[derive(Debug, Clone, Copy)]
pub struct Sweep {
    pub var: SweepVar,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Sweep {
    fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!(
                "sweep must be var:min:max:points, got {text:?}"
            )));
        }
        let var = match parts[0] {
            "snr_db" => SweepVar::SnrDb,
            "threshold" => SweepVar::Threshold,
            "rho" => SweepVar::Rho,
            "L" => SweepVar::Branches,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep variable {other:?} (expected snr_db, threshold, rho or L)"
                )))
            }
        };
        let min: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Config(format!("bad sweep minimum {:?}", parts[1])))?;
        let max: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Config(format!("bad sweep maximum {:?}", parts[2])))?;
        let points: usize = parts[3]
            .parse()
            .map_err(|_| Error::Config(format!("bad sweep point count {:?}", parts[3])))?;
        if points == 0 || max < min || (points > 1 && max == min) {
            return Err(Error::Config(
                "sweep range must be ordered and non-empty".into(),
            ));
        }
        Ok(Self {
            var,
            min,
            max,
            points,
        })
    }

    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

/// Everything one invocation needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: CommandKind,
    pub scenario: ScenarioConfig,
    /// The (omega1, delta) profile when powers came from one; required by
    /// branch-count sweeps.
    pub profile: Option<(f64, f64)>,
    pub sweep: Option<Sweep>,
    pub modulation: Modulation,
    pub n: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Scenario file schema: flat keys mirroring the scenario, with either an
/// explicit power vector or an (omega1, delta) profile — never both.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(rename = "L")]
    branches: Option<usize>,
    m_z: Option<u32>,
    rho: Option<f64>,
    powers: Option<Vec<f64>>,
    omega1: Option<f64>,
    delta: Option<f64>,
    n0: Option<f64>,
}

impl Cli {
    pub fn into_run_spec(self) -> Result<RunSpec> {
        let file: ScenarioFile = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("bad scenario file: {e}")))?
            }
            None => ScenarioFile::default(),
        };

        let branches = self
            .branches
            .or(file.branches)
            .ok_or_else(|| Error::Config("branch count is required (--L or config)".into()))?;
        let m_z = self
            .m_z
            .or(file.m_z)
            .ok_or_else(|| Error::Config("fading parameter is required (--m or config)".into()))?;
        let rho = self
            .rho
            .or(file.rho)
            .ok_or_else(|| Error::Config("correlation is required (--rho or config)".into()))?;
        let n0 = self.n0.or(file.n0).unwrap_or(1.0);

        let explicit_powers = file.powers.clone();
        let profile_requested =
            self.omega1.is_some() || self.delta.is_some() || file.omega1.is_some() || file.delta.is_some();
        if explicit_powers.is_some() && profile_requested {
            return Err(Error::Config(
                "give either explicit powers or an omega1/delta profile, not both".into(),
            ));
        }
        let (powers, profile) = match explicit_powers {
            Some(p) => (p, None),
            None => {
                let omega1 = self.omega1.or(file.omega1).unwrap_or(1.0);
                let delta = self.delta.or(file.delta).unwrap_or(0.0);
                (
                    branch_powers_from_profile(omega1, delta, branches)?,
                    Some((omega1, delta)),
                )
            }
        };
        let scenario = ScenarioConfig::new(branches, m_z, rho, powers, n0)?;

        let sweep = self.sweep.as_deref().map(Sweep::parse).transpose()?;
        let n = self.n.unwrap_or(match self.command {
            CommandKind::Simulate | CommandKind::Compare => 100_000,
            _ => 0,
        });
        Ok(RunSpec {
            command: self.command,
            scenario,
            profile,
            sweep,
            modulation: match self.modulation {
                ModulationArg::CoherentBpsk => Modulation::CoherentBpsk,
                ModulationArg::NoncoherentBfsk => Modulation::NoncoherentBfsk,
            },
            n,
            seed: self.seed,
            out: self.out,
            format: self.format,
        })
    }
}

/// A finished table: column names, rows, and footer key/value records.
struct Table {
    command: &'static str,
    columns: Vec<&'static str>,
    rows: Vec<Vec<CellValue>>,
    footer: Vec<(&'static str, CellValue)>,
}

#[derive(Debug, Clone)]
enum CellValue {
    Num(f64),
    Flag(bool),
}

/// 12 significant digits, locale-free.
fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

impl CellValue {
    fn csv(&self) -> String {
        match self {
            CellValue::Num(x) => fmt_num(*x),
            CellValue::Flag(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            CellValue::Num(x) => serde_json::json!(x),
            CellValue::Flag(b) => serde_json::json!(b),
        }
    }
}

impl Table {
    fn render(&self, format: Format, scenario: &ScenarioConfig) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                let _ = writeln!(out, "{}", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(CellValue::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                for (key, value) in &self.footer {
                    let _ = writeln!(out, "# {key} = {}", value.csv());
                }
                out
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (name, cell) in self.columns.iter().zip(row) {
                            obj.insert((*name).to_string(), cell.json());
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let mut footer = serde_json::Map::new();
                for (key, value) in &self.footer {
                    footer.insert((*key).to_string(), value.json());
                }
                let doc = serde_json::json!({
                    "command": self.command,
                    "scenario": scenario,
                    "rows": rows,
                    "footer": footer,
                });
                let mut text = serde_json::to_string_pretty(&doc).expect("serializable output");
                text.push('\n');
                text
            }
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Execute the run and return the rendered artifact (also written to
/// `spec.out` when set).
pub fn run(spec: &RunSpec) -> Result<String> {
    if let Ok(tol) = std::env::var("NAKSUM_TOL") {
        let parsed: f64 = tol
            .parse()
            .map_err(|_| Error::Config(format!("bad NAKSUM_TOL value {tol:?}")))?;
        hyperfn::set_default_rel_tol(parsed)?;
    }
    let table = match spec.command {
        CommandKind::Fit => run_fit(spec)?,
        CommandKind::Pdf => run_pdf(spec)?,
        CommandKind::Outage => run_outage(spec)?,
        CommandKind::Ber => run_ber(spec)?,
        CommandKind::Simulate => run_simulate(spec)?,
        CommandKind::Compare => run_compare(spec)?,
    };
    let text = table.render(spec.format, &spec.scenario);
    if let Some(path) = &spec.out {
        std::fs::write(path, &text)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(text)
}

fn run_fit(spec: &RunSpec) -> Result<Table> {
    let pair = exact_moments(&spec.scenario)?;
    let p = fit(&spec.scenario)?;
    Ok(Table {
        command: "fit",
        columns: vec!["omega_R", "m_R", "ez2", "ez4"],
        rows: vec![vec![
            CellValue::Num(p.omega_r),
            CellValue::Num(p.m_r),
            CellValue::Num(pair.ez2),
            CellValue::Num(pair.ez4),
        ]],
        footer: vec![],
    })
}

fn pdf_grid(p: &ApproxParams, points: usize) -> Vec<f64> {
    // r in [0, 4 sqrt(E[Z^2])]
    let rmax = 4.0 * (p.omega_r * p.branches as f64).sqrt();
    (0..points)
        .map(|i| rmax * i as f64 / (points - 1) as f64)
        .collect()
}

fn run_pdf(spec: &RunSpec) -> Result<Table> {
    let p = fit(&spec.scenario)?;
    let grid = pdf_grid(&p, 200);
    let empirical = if spec.n > 0 {
        let batch = generate(&spec.scenario, spec.n as usize, spec.seed)?;
        Some(empirical_stats(&batch, 200)?.histogram)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &r in &grid {
        let mut row = vec![CellValue::Num(r), CellValue::Num(pdf_envelope(r, &p)?)];
        if let Some(hist) = &empirical {
            row.push(CellValue::Num(hist.density_at(r)));
        }
        rows.push(row);
    }
    Ok(Table {
        command: "pdf",
        columns: if empirical.is_some() {
            vec!["r", "pdf_approx", "pdf_empirical"]
        } else {
            vec!["r", "pdf_approx"]
        },
        rows,
        footer: vec![],
    })
}

fn run_outage(spec: &RunSpec) -> Result<Table> {
    let sweep = spec.sweep.unwrap_or(Sweep {
        var: SweepVar::Threshold,
        min: -10.0,
        max: 20.0,
        points: 31,
    });
    if sweep.var != SweepVar::Threshold {
        return Err(Error::Config(
            "the outage command sweeps the threshold axis only".into(),
        ));
    }
    let p = fit(&spec.scenario)?;
    let e = to_egc_params(&p, spec.scenario.noise_density)?;
    let rows = sweep
        .values()
        .iter()
        .map(|&db| {
            Ok(vec![
                CellValue::Num(db),
                CellValue::Num(outage(db_to_linear(db), &e)?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        command: "outage",
        columns: vec!["threshold_db", "p_out"],
        rows,
        footer: vec![],
    })
}

fn run_ber(spec: &RunSpec) -> Result<Table> {
    let sweep = spec.sweep.unwrap_or(Sweep {
        var: SweepVar::SnrDb,
        min: 0.0,
        max: 20.0,
        points: 21,
    });
    let omega1 = spec.scenario.powers[0];
    let mut rows = Vec::with_capacity(sweep.points);
    let (axis_name, values) = match sweep.var {
        SweepVar::SnrDb => ("snr_db", sweep.values()),
        SweepVar::Rho => ("rho", sweep.values()),
        SweepVar::Branches => ("L", sweep.values()),
        SweepVar::Threshold => {
            return Err(Error::Config(
                "the ber command sweeps snr_db, rho or L, not threshold".into(),
            ))
        }
    };
    for &value in &values {
        let scenario = match sweep.var {
            // gamma_1 = omega_1 / N0 is the swept branch-1 SNR.
            SweepVar::SnrDb => {
                let mut s = spec.scenario.clone();
                s.noise_density = omega1 / db_to_linear(value);
                s
            }
            SweepVar::Rho => {
                let mut s = spec.scenario.clone();
                s.rho = value;
                s
            }
            SweepVar::Branches => {
                let (omega1, delta) = spec.profile.ok_or_else(|| {
                    Error::Config(
                        "a branch-count sweep needs an omega1/delta profile, not explicit powers"
                            .into(),
                    )
                })?;
                let branches = value.round() as usize;
                let mut s = spec.scenario.clone();
                s.branches = branches;
                s.powers = branch_powers_from_profile(omega1, delta, branches)?;
                s
            }
            SweepVar::Threshold => unreachable!(),
        };
        scenario.validate()?;
        let e = to_egc_params(&fit(&scenario)?, scenario.noise_density)?;
        let (ber, fallback) = match spec.modulation {
            Modulation::CoherentBpsk => {
                let r = ber_coherent_bpsk(&e)?;
                (r.value, r.fallback)
            }
            Modulation::NoncoherentBfsk => (ber_noncoherent_bfsk(&e)?, false),
        };
        rows.push(vec![
            CellValue::Num(value),
            CellValue::Num(ber),
            CellValue::Flag(fallback),
        ]);
    }
    Ok(Table {
        command: "ber",
        columns: vec![axis_name, "ber", "fallback"],
        rows,
        footer: vec![],
    })
}

fn run_simulate(spec: &RunSpec) -> Result<Table> {
    let batch = generate(&spec.scenario, spec.n as usize, spec.seed)?;
    let stats = empirical_stats(&batch, 200)?;
    let width = stats.histogram.bin_width();
    let rows = stats
        .histogram
        .densities
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            vec![
                CellValue::Num(stats.histogram.lo + i as f64 * width),
                CellValue::Num(stats.histogram.lo + (i + 1) as f64 * width),
                CellValue::Num(d),
            ]
        })
        .collect();
    Ok(Table {
        command: "simulate",
        columns: vec!["bin_lo", "bin_hi", "density"],
        rows,
        footer: vec![
            ("ez2_hat", CellValue::Num(stats.ez2_hat)),
            ("ez2_se", CellValue::Num(stats.ez2_se)),
            ("ez4_hat", CellValue::Num(stats.ez4_hat)),
            ("ez4_se", CellValue::Num(stats.ez4_se)),
            ("rho_hat", CellValue::Num(stats.rho_hat)),
            ("n", CellValue::Num(spec.n as f64)),
            ("seed", CellValue::Num(spec.seed as f64)),
        ],
    })
}

fn run_compare(spec: &RunSpec) -> Result<Table> {
    let pair = exact_moments(&spec.scenario)?;
    let p = fit(&spec.scenario)?;
    let batch = generate(&spec.scenario, spec.n as usize, spec.seed)?;
    let stats = empirical_stats(&batch, 200)?;
    let ks = ks_distance(&batch, &p)?;
    let grid = pdf_grid(&p, 200);
    let rows = grid
        .iter()
        .map(|&r| {
            Ok(vec![
                CellValue::Num(r),
                CellValue::Num(pdf_envelope(r, &p)?),
                CellValue::Num(stats.histogram.density_at(r)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table {
        command: "compare",
        columns: vec!["r", "pdf_approx", "pdf_empirical"],
        rows,
        footer: vec![
            ("ez2_analytic", CellValue::Num(pair.ez2)),
            ("ez2_hat", CellValue::Num(stats.ez2_hat)),
            ("ez2_se", CellValue::Num(stats.ez2_se)),
            ("ez4_analytic", CellValue::Num(pair.ez4)),
            ("ez4_hat", CellValue::Num(stats.ez4_hat)),
            ("ez4_se", CellValue::Num(stats.ez4_se)),
            ("rho_hat", CellValue::Num(stats.rho_hat)),
            ("ks_distance", CellValue::Num(ks)),
            ("n", CellValue::Num(spec.n as f64)),
            ("seed", CellValue::Num(spec.seed as f64)),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("nakagami-sum").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("snr_db:0:20:21").unwrap();
        assert_eq!(s.points, 21);
        assert_eq!(s.values().len(), 21);
        assert_eq!(s.values()[20], 20.0);
        assert!(Sweep::parse("bogus:0:1:2").is_err());
        assert!(Sweep::parse("rho:1:0:2").is_err());
        assert!(Sweep::parse("rho:0:1:0").is_err());
        assert!(Sweep::parse("rho:0:1").is_err());
    }

    #[test]
    fn inline_flags_build_a_profile_scenario() {
        let spec = cli(&[
            "fit", "--L", "3", "--m", "2", "--rho", "0.4", "--omega1", "1.0", "--delta", "0.5",
        ])
        .into_run_spec()
        .unwrap();
        assert_eq!(spec.scenario.branches, 3);
        assert_eq!(spec.scenario.powers.len(), 3);
        assert!(spec.profile.is_some());
        assert_eq!(spec.scenario.noise_density, 1.0);
    }

    #[test]
    fn missing_required_fields_error() {
        assert!(cli(&["fit", "--L", "2"]).into_run_spec().is_err());
        assert!(cli(&["fit"]).into_run_spec().is_err());
    }

    #[test]
    fn fit_identity_through_the_pipeline() {
        let spec = cli(&["fit", "--L", "1", "--m", "2", "--rho", "0"])
            .into_run_spec()
            .unwrap();
        let text = run(&spec).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "omega_R,m_R,ez2,ez4");
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert!((row[0] - 1.0).abs() < 1e-12);
        assert!((row[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ber_single_point_matches_classical_value() {
        let spec = cli(&[
            "ber", "--L", "1", "--m", "1", "--rho", "0", "--sweep", "snr_db:10:10:1",
        ])
        .into_run_spec()
        .unwrap();
        let text = run(&spec).unwrap();
        let row = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        let ber: f64 = fields[1].parse().unwrap();
        assert!((ber - 0.023_268_705_377_203_824).abs() < 1e-8);
        assert_eq!(fields[2], "false");
    }

    #[test]
    fn json_output_is_wellformed() {
        let spec = cli(&[
            "fit", "--L", "2", "--m", "1", "--rho", "0.2", "--format", "json",
        ])
        .into_run_spec()
        .unwrap();
        let text = run(&spec).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["command"], "fit");
        assert!(doc["rows"][0]["m_R"].is_number());
    }

    #[test]
    fn powers_and_profile_conflict_is_rejected() {
        let dir = std::env::temp_dir().join("naksum-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("conflict.json");
        std::fs::write(
            &path,
            r#"{"L": 2, "m_z": 1, "rho": 0.2, "powers": [1.0, 0.5], "omega1": 1.0}"#,
        )
        .unwrap();
        let c = cli(&["fit", "--config", path.to_str().unwrap()]);
        assert!(c.into_run_spec().is_err());
    }

    #[test]
    fn scenario_file_round_trip() {
        let dir = std::env::temp_dir().join("naksum-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scenario.json");
        std::fs::write(
            &path,
            r#"{"L": 4, "m_z": 2, "rho": 0.5, "omega1": 1.0, "delta": 0.0, "n0": 0.1}"#,
        )
        .unwrap();
        let spec = cli(&["fit", "--config", path.to_str().unwrap()])
            .into_run_spec()
            .unwrap();
        assert_eq!(spec.scenario.branches, 4);
        assert_eq!(spec.scenario.noise_density, 0.1);
        // Inline flags override file fields.
        let spec = cli(&["fit", "--config", path.to_str().unwrap(), "--rho", "0.2"])
            .into_run_spec()
            .unwrap();
        assert_eq!(spec.scenario.rho, 0.2);
    }
}
