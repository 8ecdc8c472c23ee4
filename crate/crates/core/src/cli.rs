//! Command-line front end: one subcommand per experiment.
//!
//! Every subcommand resolves a typed config from its defaults, the flags and
//! an optional `--config` JSON file (file keys win), hashes the resolved
//! config and stamps the hash and crate version into every report it writes.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::exponents::{compute_exponents, compute_transfer, degiorgi_exponents, fmt_rat, parse_rat, to_f64, ProblemParams, Rational};
use crate::field::{Box3, Field};
use crate::geometry::PhasePoint;
use crate::mollify::{kernel_integral, kernel_lp_norm, KernelFamily, KernelKind, Quadrature};
use crate::numerics::{fmt_f64, loglog_slope, logspace};
use crate::solver::{solve, transport_decomposition, Nonlinearity, SolverConfig};
use crate::suite::{gn_pair, representation_suite, DeGiorgiSetup, EnergySetup};
use crate::trajectory::{check_m1, check_m2_m3_m4, TrajectoryParams};
use crate::verify::{
    self, dyadic_h_set, end_to_end, energy_experiment, fast_convergence_lemma, gn_experiment, localized_gain_experiment,
    subsolution_gain_experiment, transfer_experiment, InputKind, Report, StartValue,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kinetic", version, about = "Kinetic p-Laplace numerical workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config; its keys override the flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory for reports and artifacts; without it the main report goes to stdout.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact exponent table for (d, p, mu) and optionally the transfer exponent q.
    Exponents(Run<ExponentsFlags>),
    /// Measured trajectory constants M1 to M4 over a log grid of r.
    TrajectoryCheck(Run<TrajectoryFlags>),
    /// Kernel norm scaling laws.
    KernelNorms(Run<KernelNormsFlags>),
    /// Unit mass, m-space vs kernel-space consistency, representation identity, Young.
    MollifyCheck(Run<MollifyFlags>),
    /// Run the splitting solver.
    Solve(Run<SolveFlags>),
    /// Gagliardo-Nirenberg ratio and its scaling spread.
    VerifyGn(Run<GnFlags>),
    /// Caccioppoli constant on solver output across theta.
    VerifyEnergy(Run<EnergyFlags>),
    /// Localized and global gain of integrability on solver output.
    VerifyLocalGain(Run<LocalGainFlags>),
    /// Besov quotients of the transfer of regularity.
    VerifyTransfer(Run<TransferFlags>),
    /// End-to-end De Giorgi iteration on solver output.
    Degiorgi(Run<DegiorgiFlags>),
    /// Iterate Y_{m+1} = C1 b^m Y_m^{1+delta}.
    FastLemma(Run<FastLemmaFlags>),
}

#[derive(Debug, Args)]
pub struct Run<F: Args> {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub flags: F,
}

/// Why a run stopped before producing a verdict.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Cfl { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let name = subcommand_name(&cli.command);
    let result = match &cli.command {
        Command::Exponents(r) => drive::<ExponentsConfig>(r, stdout),
        Command::TrajectoryCheck(r) => drive::<TrajectoryConfig>(r, stdout),
        Command::KernelNorms(r) => drive::<KernelNormsConfig>(r, stdout),
        Command::MollifyCheck(r) => drive::<MollifyConfig>(r, stdout),
        Command::Solve(r) => drive::<SolveConfig>(r, stdout),
        Command::VerifyGn(r) => drive::<GnConfig>(r, stdout),
        Command::VerifyEnergy(r) => drive::<EnergyConfig>(r, stdout),
        Command::VerifyLocalGain(r) => drive::<LocalGainConfig>(r, stdout),
        Command::VerifyTransfer(r) => drive::<TransferConfig>(r, stdout),
        Command::Degiorgi(r) => drive::<DegiorgiConfig>(r, stdout),
        Command::FastLemma(r) => drive::<FastLemmaConfig>(r, stdout),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => EXIT_FAILED,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(stderr, "{name}: config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(msg)) => {
            let diag = json!({ "subcommand": name, "error": "numerical", "message": msg, "version": VERSION });
            let _ = writeln!(stderr, "{diag}");
            EXIT_NUMERICAL
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Exponents(_) => ExponentsConfig::NAME,
        Command::TrajectoryCheck(_) => TrajectoryConfig::NAME,
        Command::KernelNorms(_) => KernelNormsConfig::NAME,
        Command::MollifyCheck(_) => MollifyConfig::NAME,
        Command::Solve(_) => SolveConfig::NAME,
        Command::VerifyGn(_) => GnConfig::NAME,
        Command::VerifyEnergy(_) => EnergyConfig::NAME,
        Command::VerifyLocalGain(_) => LocalGainConfig::NAME,
        Command::VerifyTransfer(_) => TransferConfig::NAME,
        Command::Degiorgi(_) => DegiorgiConfig::NAME,
        Command::FastLemma(_) => FastLemmaConfig::NAME,
    }
}

/// A resolved experiment configuration.
pub trait Experiment: Serialize + DeserializeOwned + Default {
    const NAME: &'static str;
    fn execute(&self, out: &mut Sink) -> Outcome;
}

/// Where a run's artifacts go.
pub struct Sink<'a> {
    pub dir: Option<PathBuf>,
    pub stdout: &'a mut dyn Write,
    pub config_hash: String,
}

impl Sink<'_> {
    /// The main report: a file under `--out`, otherwise stdout.
    pub fn primary(&mut self, file: &str, content: &str) -> std::io::Result<()> {
        match &self.dir {
            Some(d) => fs::write(d.join(file), content),
            None => self.stdout.write_all(content.as_bytes()),
        }
    }

    /// Secondary artifacts are only written under `--out`.
    pub fn artifact(&mut self, file: &str, content: &[u8]) -> std::io::Result<()> {
        match &self.dir {
            Some(d) => fs::write(d.join(file), content),
            None => Ok(()),
        }
    }

    pub fn report(&mut self, name: &str, rep: &Report) -> std::io::Result<()> {
        let csv = rep.to_csv(&self.config_hash, VERSION);
        self.primary(&format!("{name}.csv"), &csv)
    }

    /// `{name}.json` with the typed result next to the config stamp.
    pub fn details(&mut self, name: &str, result: &impl Serialize) -> std::result::Result<(), Failure> {
        if self.dir.is_none() {
            return Ok(());
        }
        let doc = json!({ "experiment": name, "config_hash": self.config_hash, "version": VERSION, "result": result });
        self.artifact(&format!("{name}.json"), serde_json::to_string_pretty(&doc)?.as_bytes())?;
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(
            m.into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, strip_nulls(v)))
                .filter(|(_, v)| !matches!(v, Value::Object(m) if m.is_empty()))
                .collect(),
        ),
        other => other,
    }
}

/// Defaults, then flags, then the config file.
pub fn resolve<C: Experiment>(flags: &impl Serialize, file: Option<&Path>) -> std::result::Result<C, Failure> {
    let mut v = serde_json::to_value(C::default())?;
    merge(&mut v, strip_nulls(serde_json::to_value(flags)?));
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let over: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if !over.is_object() {
            return Err(Failure::Config("config file must hold a JSON object".into()));
        }
        merge(&mut v, over);
    }
    Ok(serde_json::from_value(v)?)
}

/// sha256 over the subcommand name and the canonical JSON of the config.
pub fn config_hash<C: Experiment>(cfg: &C) -> std::result::Result<String, Failure> {
    let mut h = Sha256::new();
    h.update(C::NAME.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(cfg)?.as_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn drive<C: Experiment>(r: &Run<impl Args + Serialize>, stdout: &mut dyn Write) -> Outcome {
    let cfg: C = resolve(&r.flags, r.common.config.as_deref())?;
    let config_hash = config_hash(&cfg)?;
    if let Some(d) = &r.common.out {
        fs::create_dir_all(d)?;
        fs::write(d.join(format!("{}.config.json", C::NAME)), serde_json::to_string_pretty(&cfg)?)?;
    }
    let mut sink = Sink {
        dir: r.common.out.clone(),
        stdout,
        config_hash,
    };
    cfg.execute(&mut sink)
}

fn rational(name: &str, s: &str) -> std::result::Result<Rational, Failure> {
    parse_rat(s).map_err(|e| Failure::Config(format!("{name}: {e}")))
}

/// `num/den`, an integer or a decimal.
fn number(name: &str, s: &str) -> std::result::Result<f64, Failure> {
    parse_rat(s)
        .map(|r| to_f64(&r))
        .or_else(|_| s.trim().parse::<f64>())
        .map_err(|_| Failure::Config(format!("{name}: expected a number, got `{s}`")))
}

fn rat_entry(m: &mut Map<String, Value>, key: &str, r: Option<&Rational>) {
    m.insert(key.into(), r.map_or(Value::Null, |r| Value::String(fmt_rat(r))));
    m.insert(format!("{key}_decimal"), r.map_or(Value::Null, |r| json!(to_f64(r))));
}

fn flag(b: bool) -> f64 {
    f64::from(b as u8)
}

fn box3(b: [(f64, f64); 3]) -> std::result::Result<Box3, Failure> {
    Ok(Box3::from_ranges(b)?)
}

// exponents

#[derive(Debug, Args, Serialize)]
pub struct ExponentsFlags {
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub d: u32,
    pub p: String,
    /// Defaults to the dual exponent p′.
    pub mu: Option<String>,
    pub q: Option<String>,
    pub seed: u64,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        Self {
            d: 1,
            p: "2/1".into(),
            mu: None,
            q: None,
            seed: 0,
        }
    }
}

impl Experiment for ExponentsConfig {
    const NAME: &'static str = "exponents";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let p = rational("p", &self.p)?;
        let params = match &self.mu {
            Some(mu) => ProblemParams::new(self.d, p.clone(), rational("mu", mu)?)?,
            None => ProblemParams::dual(self.d, p.clone())?,
        };
        let tab = compute_exponents(&params);
        let mut m = Map::new();
        m.insert("config_hash".into(), json!(out.config_hash));
        m.insert("version".into(), json!(VERSION));
        m.insert("d".into(), json!(self.d));
        rat_entry(&mut m, "p", Some(&params.p));
        rat_entry(&mut m, "mu", Some(&params.mu));
        rat_entry(&mut m, "inv_q", Some(&tab.inv_q));
        rat_entry(&mut m, "q", tab.q.as_ref());
        rat_entry(&mut m, "a", Some(&tab.a));
        rat_entry(&mut m, "beta", tab.beta.as_ref());
        rat_entry(&mut m, "qdim", tab.qdim.as_ref());
        rat_entry(&mut m, "theta0", tab.theta0.as_ref());
        rat_entry(&mut m, "theta1", tab.theta1.as_ref());
        rat_entry(&mut m, "thetav", tab.thetav.as_ref());
        rat_entry(&mut m, "r_source", tab.r_source.as_ref());
        rat_entry(&mut m, "qbar", Some(&tab.qbar));
        rat_entry(&mut m, "alpha", Some(&tab.alpha));
        rat_entry(&mut m, "delta_dg", tab.delta_dg.as_ref());
        m.insert("admissible".into(), json!(tab.admissible));
        m.insert("reasons".into(), json!(tab.reasons));
        let dg = degiorgi_exponents(self.d, &params.p);
        rat_entry(&mut m, "degiorgi_delta", Some(&dg.delta));
        rat_entry(&mut m, "degiorgi_s_singular", Some(&dg.s_sing));
        let agree = [tab.inv_q_from_gradient(), tab.inv_q_from_drift()]
            .iter()
            .all(|f| f.as_ref().is_none_or(|x| *x == tab.inv_q));
        m.insert("identities_agree".into(), json!(agree));
        let mut ok = agree;
        if let Some(q) = &self.q {
            let tt = compute_transfer(self.d, &params.p, &rational("q", q)?);
            let mut t = Map::new();
            rat_entry(&mut t, "q", Some(&tt.q));
            rat_entry(&mut t, "s", Some(&tt.s));
            rat_entry(&mut t, "alpha_s", Some(&tt.alpha_s));
            rat_entry(&mut t, "alpha_s_direct", Some(&tt.alpha_s_direct));
            rat_entry(&mut t, "beta", tt.beta.as_ref());
            rat_entry(&mut t, "qdim", tt.qdim.as_ref());
            rat_entry(&mut t, "theta0_s", tt.theta0_s.as_ref());
            rat_entry(&mut t, "theta1_s", tt.theta1_s.as_ref());
            rat_entry(&mut t, "thetav_s", tt.thetav_s.as_ref());
            rat_entry(&mut t, "qbar", Some(&tt.qbar));
            t.insert("valid".into(), json!(tt.valid));
            t.insert("reasons".into(), json!(tt.reasons));
            ok &= tt.alpha_s == tt.alpha_s_direct;
            m.insert("transfer".into(), Value::Object(t));
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(m))?;
        text.push('\n');
        out.primary("exponents.json", &text)?;
        Ok(ok)
    }
}

// trajectory-check

#[derive(Debug, Args, Serialize)]
pub struct TrajectoryFlags {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub beta: String,
    pub samples: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub det_tol: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            beta: "3/2".into(),
            samples: 25,
            r_min: 1e-3,
            r_max: 1e3,
            m0: -1.5,
            m1: 0.6,
            m2: -0.8,
            det_tol: 1e-10,
            seed: 0,
        }
    }
}

impl Experiment for TrajectoryConfig {
    const NAME: &'static str = "trajectory-check";

    fn execute(&self, out: &mut Sink) -> Outcome {
        if self.samples < 2 {
            return Err(Failure::Config("samples: need at least 2".into()));
        }
        let beta = number("beta", &self.beta)?;
        let params = TrajectoryParams::d1(beta, self.m0, self.m1, self.m2)?;
        let rs = logspace(self.r_min, self.r_max, self.samples);
        let rep = check_m2_m3_m4(&params, &rs)?;
        let z = PhasePoint::d1(0.1, 0.2, 0.3);
        let mut csv =
            String::from("r,det_ratio,m3_col1,m3_col2,inverse_defect,m4_vdot,m4_v,m4_x,m1_residual,m1_order,config_hash,version\n");
        for row in &rep.rows {
            let h = 0.02 * row.r;
            let (a, b) = (check_m1(&params, row.r, &z, h)?, check_m1(&params, row.r, &z, h / 2.0)?);
            let order = if a > 0.0 && b > 0.0 { (a / b).log2() } else { f64::NAN };
            let cols = [
                row.r,
                row.det_ratio,
                row.m3_col1,
                row.m3_col2,
                row.inverse_defect,
                row.m4_vdot,
                row.m4_v,
                row.m4_x,
                a,
                order,
            ];
            for c in cols {
                csv.push_str(&fmt_f64(c));
                csv.push(',');
            }
            csv.push_str(&format!("{},{VERSION}\n", out.config_hash));
        }
        out.primary("trajectory-check.csv", &csv)?;
        out.details(Self::NAME, &rep)?;
        Ok(rep.max_det_error <= self.det_tol)
    }
}

// kernel-norms

#[derive(Debug, Args, Serialize)]
pub struct KernelNormsFlags {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelNormsConfig {
    pub beta: String,
    /// Scales r for ‖K_r‖_θ.
    pub rs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub n: usize,
    /// Horizons τ for the weak norm of ∫₀^τ G⁰_r dr.
    pub taus: Vec<f64>,
    pub weak_n: usize,
    /// (p, q) fixing s and the kernel exponents of the difference rows.
    pub p: String,
    pub q: String,
    pub hs: Vec<f64>,
    pub window: f64,
    pub diff_n: usize,
    pub slope_tol: f64,
    pub weak_spread_tol: f64,
    pub seed: u64,
}

impl Default for KernelNormsConfig {
    fn default() -> Self {
        Self {
            beta: "3/2".into(),
            rs: logspace(0.1, 10.0, 5),
            thetas: vec![1.0, 1.5, 2.0],
            n: 48,
            taus: vec![0.25, 1.0, 4.0],
            weak_n: 32,
            p: "2/1".into(),
            q: "5/2".into(),
            hs: vec![0.01, 0.1, 1.0],
            window: 2.0,
            diff_n: 24,
            slope_tol: 0.05,
            weak_spread_tol: 1.2,
            seed: 0,
        }
    }
}

/// One group of rows sharing a kind and an exponent.
#[derive(Clone, Debug, Serialize)]
pub struct NormSeries {
    pub kind: String,
    pub theta: f64,
    pub scales: Vec<f64>,
    pub norms: Vec<f64>,
    pub predicted_slope: f64,
    pub measured_slope: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// Rows of the `kernel-norms` report.
pub fn kernel_norm_series(cfg: &KernelNormsConfig) -> std::result::Result<Vec<NormSeries>, Failure> {
    let beta = number("beta", &cfg.beta)?;
    let fam = KernelFamily::new(beta, 1.0)?;
    let qdim = fam.qdim;
    let mut out = Vec::new();
    for &th in &cfg.thetas {
        let norms = cfg
            .rs
            .iter()
            .map(|&r| kernel_lp_norm(&fam.at(KernelKind::K, r), th, cfg.n))
            .collect::<crate::Result<Vec<_>>>()?;
        let predicted = qdim * (1.0 / th - 1.0);
        let measured = loglog_slope(&cfg.rs, &norms);
        out.push(NormSeries {
            kind: "K".into(),
            theta: th,
            scales: cfg.rs.clone(),
            norms,
            predicted_slope: predicted,
            measured_slope: measured,
            pass: (measured - predicted).abs() <= cfg.slope_tol,
            tolerance: cfg.slope_tol,
        });
    }
    let p = rational("p", &cfg.p)?;
    let theta0 = compute_exponents(&ProblemParams::dual(1, p.clone())?)
        .theta0
        .map(|t| to_f64(&t))
        .ok_or_else(|| Failure::Config("theta0 undefined for this p".into()))?;
    let weak = cfg
        .taus
        .iter()
        .map(|&tau| fam.integrated_weak_norm(KernelKind::G0, tau, theta0, cfg.weak_n))
        .collect::<crate::Result<Vec<_>>>()?;
    let spread = verify::spread(&weak).unwrap_or(f64::INFINITY);
    out.push(NormSeries {
        kind: "int_G0_weak".into(),
        theta: theta0,
        scales: cfg.taus.clone(),
        measured_slope: loglog_slope(&cfg.taus, &weak),
        norms: weak,
        predicted_slope: 0.0,
        pass: spread <= cfg.weak_spread_tol,
        tolerance: cfg.weak_spread_tol - 1.0,
    });
    let tt = compute_transfer(1, &p, &rational("q", &cfg.q)?);
    if !tt.valid {
        return Err(Failure::Config(format!("q outside the transfer window: {:?}", tt.reasons)));
    }
    let tbeta = tt
        .beta
        .as_ref()
        .map(to_f64)
        .ok_or_else(|| Failure::Config("beta undefined".into()))?;
    let tfam = KernelFamily::new(tbeta, 1.0)?;
    let s = to_f64(&tt.s);
    for (kind, th, name) in [
        (KernelKind::G0, &tt.theta0_s, "diff_int_G0_weak"),
        (KernelKind::G1, &tt.theta1_s, "diff_int_G1_weak"),
        (KernelKind::Gv, &tt.thetav_s, "diff_int_Gv_weak"),
    ] {
        let th = th
            .as_ref()
            .map(to_f64)
            .ok_or_else(|| Failure::Config("kernel exponent undefined".into()))?;
        let norms = cfg
            .hs
            .iter()
            .map(|&h| tfam.integrated_difference_weak_norm(kind, h, th, cfg.window, cfg.diff_n))
            .collect::<crate::Result<Vec<_>>>()?;
        let measured = loglog_slope(&cfg.hs, &norms);
        out.push(NormSeries {
            kind: name.into(),
            theta: th,
            scales: cfg.hs.clone(),
            norms,
            predicted_slope: s,
            measured_slope: measured,
            pass: (measured - s).abs() <= cfg.slope_tol,
            tolerance: cfg.slope_tol,
        });
    }
    Ok(out)
}

impl Experiment for KernelNormsConfig {
    const NAME: &'static str = "kernel-norms";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let series = kernel_norm_series(self)?;
        let mut csv = String::from("kind,theta,scale,norm,predicted_slope,measured_slope,pass,tolerance,config_hash,version\n");
        for s in &series {
            for (x, n) in s.scales.iter().zip(&s.norms) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{VERSION}\n",
                    s.kind,
                    fmt_f64(s.theta),
                    fmt_f64(*x),
                    fmt_f64(*n),
                    fmt_f64(s.predicted_slope),
                    fmt_f64(s.measured_slope),
                    s.pass,
                    fmt_f64(s.tolerance),
                    out.config_hash
                ));
            }
        }
        out.primary("kernel-norms.csv", &csv)?;
        out.details(Self::NAME, &series)?;
        Ok(series.iter().all(|s| s.pass))
    }
}

// mollify-check

#[derive(Debug, Args, Serialize)]
pub struct MollifyFlags {
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub young: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifyConfig {
    pub beta: String,
    pub tau: f64,
    pub quadrature: Quadrature,
    /// Random evaluation points drawn in [−½, ½]³.
    pub samples: usize,
    pub mass_n: usize,
    pub consistency_tol: f64,
    pub representation_tol: f64,
    pub young: bool,
    pub young_n: usize,
    pub young_slack: f64,
    pub seed: u64,
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self {
            beta: "3/2".into(),
            tau: 1.0,
            quadrature: Quadrature::default(),
            samples: 3,
            mass_n: 96,
            consistency_tol: 1e-3,
            representation_tol: 1e-2,
            young: true,
            young_n: 24,
            young_slack: 1.05,
            seed: 0,
        }
    }
}

/// Smooth non-Gaussian member of the regression suite.
fn wave(t: f64, x: f64, v: f64) -> f64 {
    (0.7 * t - 0.4 * x + v).cos() + 0.3 * v * v
}

/// Input of the Young checks: a smooth bump with an oscillating factor.
pub fn young_field(n: usize) -> crate::Result<Field> {
    let b = Box3::new((-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0))?;
    Field::from_fn(b, [n, n, n], |t, x, v| {
        (-(t * t + 2.0 * (x - 0.3) * (x - 0.3) + v * v)).exp() * (1.0 + 0.3 * (2.0 * x + v).sin())
    })
}

/// (θ, p_in, q) with 1/q + 1 = 1/θ + 1/p_in.
pub const YOUNG_TRIPLES: [(f64, f64, f64); 3] = [(1.0, 2.0, 2.0), (4.0 / 3.0, 2.0, 4.0), (1.5, 1.5, 3.0)];

impl Experiment for MollifyConfig {
    const NAME: &'static str = "mollify-check";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let beta = number("beta", &self.beta)?;
        let fam = KernelFamily::with_quadrature(beta, self.tau, self.quadrature)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let zs: Vec<[f64; 3]> = (0..self.samples.max(1)).map(|_| [0; 3].map(|_| rng.gen_range(-0.5..0.5))).collect();
        let mut rep = Report::new(Self::NAME);
        let one = |_: f64, _: f64, _: f64| 1.0;
        let m = (fam.apply_tk_mspace(&one, zs[0])? - 1.0).abs();
        rep.check("unit_mass_mspace", m, "0", m, m <= 1e-6, 1e-6);
        let m = (kernel_integral(&fam.at(KernelKind::K, self.tau), self.mass_n) - 1.0).abs();
        rep.check("unit_mass_kernel", m, "0", m, m <= 1e-6, 1e-6);
        let suite = representation_suite();
        let mut fields: Vec<(&str, &dyn crate::field::PhaseFn)> = suite.iter().map(|c| (c.name, &c.f as _)).collect();
        fields.push(("wave", &wave));
        for (name, f) in fields {
            for (i, &z) in zs.iter().enumerate() {
                let a = fam.apply_tk_mspace(f, z)?;
                let b = fam.apply_tk_kernel(f, z)?;
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
                rep.check(
                    format!("consistency[{name};z{i}]"),
                    rel,
                    format!("<= {}", self.consistency_tol),
                    rel,
                    rel <= self.consistency_tol,
                    self.consistency_tol,
                );
            }
        }
        let finer = fam.refined();
        for case in &suite {
            let src = case.decomposed();
            let scale = case.sup_f(Box3::new((-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0))?, [48, 48, 48])?;
            let a = fam.representation_residual(&src, &zs)?.residual;
            let b = finer.representation_residual(&src, &zs)?.residual;
            let tol = self.representation_tol * scale;
            rep.check(format!("representation[{}]", case.name), a, format!("<= {tol}"), a, a <= tol, tol);
            rep.check(
                format!("representation_refined[{}]", case.name),
                b,
                format!("< {a}"),
                b,
                b < a || a == 0.0,
                0.0,
            );
        }
        if self.young {
            let f = young_field(self.young_n)?;
            let shape = [self.young_n; 3];
            for (th, p_in, q) in YOUNG_TRIPLES {
                let y = fam.young_check(KernelKind::K, 0.5, th, &f, p_in, q, shape)?;
                let ratio = y.lhs / y.rhs;
                rep.check(
                    format!("young[theta={th};p={p_in};q={q}]"),
                    ratio,
                    format!("<= {}", self.young_slack),
                    ratio,
                    ratio <= self.young_slack,
                    self.young_slack - 1.0,
                );
            }
        }
        out.report(Self::NAME, &rep)?;
        Ok(rep.passed())
    }
}

// solve

#[derive(Debug, Args, Serialize)]
pub struct SolveFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub flux: Option<FluxKind>,
    #[arg(long)]
    pub amp: Option<f64>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverFlags {
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub nv: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub slices: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FluxKind {
    PLaplace,
    Modulated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDatum {
    /// e^{−c(x²+v²)}
    Gaussian { concentration: f64 },
    /// (1 + a cos(2πx/L)) e^{−2v²} with L the x-period.
    Cosine { amplitude: f64 },
}

impl InitialDatum {
    pub fn sample(&self, cfg: &SolverConfig) -> crate::Result<Field> {
        match *self {
            InitialDatum::Gaussian { concentration } => cfg.initial_slice(|x, v| (-concentration * (x * x + v * v)).exp()),
            InitialDatum::Cosine { amplitude } => {
                let l = cfg.x.1 - cfg.x.0;
                cfg.initial_slice(|x, v| (1.0 + amplitude * (2.0 * std::f64::consts::PI * x / l).cos()) * (-2.0 * v * v).exp())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub p: String,
    pub flux: FluxKind,
    pub amp: f64,
    pub initial: InitialDatum,
    pub solver: SolverConfig,
    pub growth_samples: usize,
    pub mass_tol: f64,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            p: "2/1".into(),
            flux: FluxKind::PLaplace,
            amp: 0.5,
            initial: InitialDatum::Gaussian { concentration: 4.0 },
            solver: SolverConfig::new((-4.0, 4.0), (-3.0, 3.0), 64, 64, 1.0, 16),
            growth_samples: 1000,
            mass_tol: 1e-10,
            seed: 0,
        }
    }
}

impl Experiment for SolveConfig {
    const NAME: &'static str = "solve";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let p = number("p", &self.p)?;
        let nl = match self.flux {
            FluxKind::PLaplace => Nonlinearity::p_laplace(p)?,
            FluxKind::Modulated => Nonlinearity::modulated(p, self.amp)?,
        }
        .with_eps(self.solver.eps_reg);
        let f0 = self.initial.sample(&self.solver)?;
        let sol = solve(&f0, &nl, &self.solver)?;
        let d = &sol.diagnostics;
        let (m0, l0) = (d[0].mass, d[0].l2);
        let drift = d.iter().map(|s| (s.mass - m0).abs()).fold(0.0, f64::max) / m0.abs().max(f64::MIN_POSITIVE);
        let mut rep = Report::new(Self::NAME);
        rep.record("steps", d.len().saturating_sub(1) as f64);
        rep.check(
            "mass_drift",
            drift,
            format!("<= {}", self.mass_tol),
            drift,
            drift <= self.mass_tol,
            self.mass_tol,
        );
        let monotone = d.windows(2).all(|w| w[1].l2 <= w[0].l2 * (1.0 + 1e-12));
        rep.check("l2_monotone", flag(monotone), "1", flag(monotone), monotone, 0.0);
        rep.record("l2_ratio", d.last().map_or(1.0, |s| s.l2) / l0);
        let g = nl.clone().with_eps(0.0).check_growth_bounds(self.growth_samples, self.seed);
        rep.check(
            "coercivity",
            g.coercivity,
            format!(">= {}", nl.lambda),
            g.coercivity,
            g.holds,
            1e-12,
        );
        rep.check("growth", g.growth, format!("<= {}", nl.big_lambda), g.growth, g.holds, 1e-12);
        let (mn, mx) = (sol.field.min(), sol.field.max());
        rep.record("min", mn);
        rep.record("max", mx);
        if let Some(dir) = &out.dir {
            sol.field.save(dir.join("field.bin"))?;
        }
        let mut diag = String::new();
        for (i, line) in sol.diagnostics_csv().lines().enumerate() {
            let tail = if i == 0 {
                "config_hash,version".to_string()
            } else {
                format!("{},{VERSION}", out.config_hash)
            };
            diag.push_str(&format!("{line},{tail}\n"));
        }
        out.primary("diagnostics.csv", &diag)?;
        let csv = rep.to_csv(&out.config_hash, VERSION);
        out.artifact("solve.csv", csv.as_bytes())?;
        Ok(rep.passed())
    }
}

// verify-gn

#[derive(Debug, Args, Serialize)]
pub struct GnFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub refine_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnConfig {
    pub p: String,
    pub mu: Option<String>,
    pub bbox: [(f64, f64); 3],
    pub n: usize,
    /// Second resolution for the stability check of the measured constant.
    pub refine_n: Option<usize>,
    pub spread_tol: f64,
    pub stability_tol: f64,
    pub seed: u64,
}

impl Default for GnConfig {
    fn default() -> Self {
        let b = crate::suite::gn_box();
        Self {
            p: "2/1".into(),
            mu: None,
            bbox: [0, 1, 2].map(|i| (b.lo[i], b.hi[i])),
            n: 64,
            refine_n: Some(96),
            spread_tol: 1.02,
            stability_tol: 0.1,
            seed: 0,
        }
    }
}

fn stability(rep: &mut Report, name: &str, a: f64, b: f64, tol: f64) {
    let rel = (b / a - 1.0).abs();
    rep.check(format!("{name}_refinement"), rel, format!("<= {tol}"), rel, rel <= tol, tol);
}

impl Experiment for GnConfig {
    const NAME: &'static str = "verify-gn";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let p = rational("p", &self.p)?;
        let params = match &self.mu {
            Some(mu) => ProblemParams::new(1, p, rational("mu", mu)?)?,
            None => ProblemParams::dual(1, p)?,
        };
        let pair = gn_pair();
        let grid = box3(self.bbox)?;
        let r = gn_experiment(&pair.decomposed(), &params, grid, [self.n; 3])?;
        let mut rep = r.report(self.spread_tol);
        let mut runs = vec![r];
        if let Some(n2) = self.refine_n {
            let r2 = gn_experiment(&pair.decomposed(), &params, grid, [n2; 3])?;
            if let (Some(a), Some(b)) = (runs[0].ratio, r2.ratio) {
                rep.record(format!("ratio[n={n2}]"), b);
                stability(&mut rep, "ratio", a, b, self.stability_tol);
            }
            runs.push(r2);
        }
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &runs)?;
        Ok(rep.passed())
    }
}

// verify-energy

#[derive(Debug, Args, Serialize)]
pub struct EnergyFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
    #[arg(long = "R1")]
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[arg(long = "R2")]
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub refine_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub p: String,
    pub thetas: Vec<f64>,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub n: usize,
    pub refine_n: Option<usize>,
    /// Largest accepted max/min of the measured constant over θ.
    pub theta_spread_tol: f64,
    pub stability_tol: f64,
    pub seed: u64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            p: "2/1".into(),
            thetas: vec![0.25, 1.0, 4.0],
            r1: EnergySetup::R1,
            r2: EnergySetup::R2,
            n: 32,
            refine_n: None,
            theta_spread_tol: 10.0,
            stability_tol: 0.2,
            seed: 0,
        }
    }
}

impl Experiment for EnergyConfig {
    const NAME: &'static str = "verify-energy";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let p = number("p", &self.p)?;
        let mut rep = Report::new(Self::NAME);
        let mut runs = Vec::new();
        let mut cs = Vec::new();
        for &theta in &self.thetas {
            let run = |n: usize| -> std::result::Result<verify::EnergyReport, Failure> {
                let s = EnergySetup::with_radii(p, theta, self.r1, self.r2, n)?;
                Ok(energy_experiment(&s.solve()?.field, p, &s.z0, theta, self.r1, self.r2)?)
            };
            let e = run(self.n)?;
            for row in e.report().rows {
                rep.check(
                    format!("{}[theta={theta}]", row.quantity),
                    row.value,
                    row.predicted,
                    row.measured,
                    row.pass,
                    row.tolerance,
                );
            }
            cs.push(e.c_meas);
            if let Some(n2) = self.refine_n {
                let e2 = run(n2)?;
                rep.record(format!("c_meas[theta={theta};n={n2}]"), e2.c_meas);
                stability(&mut rep, &format!("c_meas[theta={theta}]"), e.c_meas, e2.c_meas, self.stability_tol);
                runs.push(e2);
            }
            runs.push(e);
        }
        if let Some(s) = verify::spread(&cs) {
            rep.check(
                "theta_spread",
                s,
                format!("<= {}", self.theta_spread_tol),
                s,
                s <= self.theta_spread_tol,
                self.theta_spread_tol,
            );
        }
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &runs)?;
        Ok(rep.passed())
    }
}

// verify-local-gain

#[derive(Debug, Args, Serialize)]
pub struct LocalGainFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long = "R1")]
    #[serde(rename = "R1")]
    pub r1: Option<f64>,
    #[arg(long = "R2")]
    #[serde(rename = "R2")]
    pub r2: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalGainConfig {
    pub p: String,
    pub theta: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub n: usize,
    /// Truncation level, as a fraction of sup f, for the global gain input.
    pub truncation: f64,
    pub seed: u64,
}

impl Default for LocalGainConfig {
    fn default() -> Self {
        Self {
            p: "2/1".into(),
            theta: 1.0,
            r1: 1.0,
            r2: 2.0,
            n: 32,
            truncation: 0.25,
            seed: 0,
        }
    }
}

impl Experiment for LocalGainConfig {
    const NAME: &'static str = "verify-local-gain";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let pr = rational("p", &self.p)?;
        let p = to_f64(&pr);
        let setup = EnergySetup::with_radii(p, self.theta, self.r1, self.r2, self.n)?;
        let f = setup.solve()?.field;
        let local = localized_gain_experiment(&f, p, &setup.z0, self.theta, self.r1, self.r2)?;
        let mut rep = local.report();
        let k = self.truncation * f.max();
        let trunc = f.truncate(k);
        let src = transport_decomposition(&trunc, &Nonlinearity::p_laplace(p)?)?;
        let gain = subsolution_gain_experiment(&trunc, &src, &pr, InputKind::SolverTruncation)?;
        rep.extend_prefixed("subsolution", gain.report());
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &json!({ "local": local, "global": gain }))?;
        Ok(rep.passed())
    }
}

// verify-transfer

#[derive(Debug, Args, Serialize)]
pub struct TransferFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub refine_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub p: String,
    pub q: String,
    pub bbox: [(f64, f64); 3],
    pub n: usize,
    pub refine_n: Option<usize>,
    /// Largest shift; the set is h0·2^{−j}, j < h_levels.
    pub h0: f64,
    pub h_levels: usize,
    pub stability_tol: f64,
    pub seed: u64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            p: "2/1".into(),
            q: "5/2".into(),
            bbox: [(-5.0, 5.0), (-7.0, 7.0), (-5.0, 5.0)],
            n: 48,
            refine_n: None,
            h0: 2.0,
            h_levels: 10,
            stability_tol: 0.2,
            seed: 0,
        }
    }
}

impl Experiment for TransferConfig {
    const NAME: &'static str = "verify-transfer";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let (p, q) = (rational("p", &self.p)?, rational("q", &self.q)?);
        let pair = gn_pair();
        let grid = box3(self.bbox)?;
        let hs = dyadic_h_set(self.h0, self.h_levels);
        let r = transfer_experiment(&pair.decomposed(), &p, &q, grid, [self.n; 3], &hs)?;
        let mut rep = r.report();
        let decades = (hs[0] / hs[hs.len() - 1]).log10();
        rep.check("h_decades", decades, ">= 2", decades, decades >= 2.0, 0.0);
        let mut runs = vec![r];
        if let Some(n2) = self.refine_n {
            let r2 = transfer_experiment(&pair.decomposed(), &p, &q, grid, [n2; 3], &hs)?;
            rep.record(format!("c_meas[n={n2}]"), r2.c_meas);
            stability(&mut rep, "c_meas", runs[0].c_meas, r2.c_meas, self.stability_tol);
            runs.push(r2);
        }
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &runs)?;
        Ok(rep.passed())
    }
}

// degiorgi

#[derive(Debug, Args, Serialize)]
pub struct DegiorgiFlags {
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegiorgiConfig {
    pub p: String,
    /// Solver cells per axis.
    pub n: usize,
    /// Scale R of the rescaling about z₀ = (1, 0, 0); mode default when absent.
    pub radius: Option<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub k_count: usize,
    pub shape: [usize; 3],
    pub n_max: usize,
    pub seed: u64,
}

impl Default for DegiorgiConfig {
    fn default() -> Self {
        let s = DeGiorgiSetup::new(3.0, 64);
        Self {
            p: "3/1".into(),
            n: 64,
            radius: None,
            k_min: 0.02,
            k_max: 2.0,
            k_count: 12,
            shape: s.shape,
            n_max: s.n_max,
            seed: 0,
        }
    }
}

impl Experiment for DegiorgiConfig {
    const NAME: &'static str = "degiorgi";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let p = number("p", &self.p)?;
        let mut s = DeGiorgiSetup::new(p, self.n);
        if let Some(r) = self.radius {
            s.radius = r;
        }
        let sol = s.solve()?;
        let ks = logspace(self.k_min, self.k_max, self.k_count);
        let r = end_to_end(&sol.field, p, &s.z0, s.radius, &ks, self.shape, self.n_max)?;
        let rep = r.report();
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &r)?;
        Ok(rep.passed())
    }
}

// fast-lemma

#[derive(Debug, Args, Serialize)]
pub struct FastLemmaFlags {
    #[arg(long = "C1")]
    #[serde(rename = "C1")]
    pub c1: Option<String>,
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long = "Y0")]
    #[serde(rename = "Y0")]
    pub y0: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FastLemmaConfig {
    #[serde(rename = "C1")]
    pub c1: String,
    pub b: String,
    pub delta: String,
    /// Absolute start value; `"delta0"` starts exactly at the threshold.
    #[serde(rename = "Y0")]
    pub y0: String,
    pub seed: u64,
}

impl Default for FastLemmaConfig {
    fn default() -> Self {
        Self {
            c1: "1".into(),
            b: "2".into(),
            delta: "1".into(),
            y0: "delta0".into(),
            seed: 0,
        }
    }
}

impl Experiment for FastLemmaConfig {
    const NAME: &'static str = "fast-lemma";

    fn execute(&self, out: &mut Sink) -> Outcome {
        let (c1, b, delta) = (number("C1", &self.c1)?, number("b", &self.b)?, number("delta", &self.delta)?);
        let start = if self.y0.trim() == "delta0" {
            StartValue::Relative(1.0)
        } else {
            StartValue::Absolute(number("Y0", &self.y0)?)
        };
        let r = fast_convergence_lemma(c1, b, delta, start)?;
        let mut rep = r.report();
        rep.record("iterations_to_tol", r.iterations_to_tol.map_or(f64::NAN, |m| m as f64));
        rep.record("strictly_decreasing", flag(r.strictly_decreasing));
        out.report(Self::NAME, &rep)?;
        out.details(Self::NAME, &r)?;
        Ok(rep.passed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("kinetic").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn exponents_quadratic() {
        let (code, out, _) = run_str(&["exponents", "--d", "1", "--p", "2/1", "--mu", "2/1"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["q"], "3/1");
        assert_eq!(v["beta"], "3/2");
        assert_eq!(v["q_decimal"], 3.0);
        assert_eq!(v["identities_agree"], true);
    }

    #[test]
    fn fast_lemma_example_converges() {
        let (code, out, _) = run_str(&["fast-lemma", "--C1", "1", "--b", "2", "--delta", "1", "--Y0", "1/2"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.lines().any(|l| l.starts_with("converged,1.0,")));
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let (code, _, err) = run_str(&["fast-lemma", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("config error"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"C1": "2", "bogus": 1}"#).unwrap();
        let (code, _, _) = run_str(&["fast-lemma", "--config", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn file_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"C1": "10"}"#).unwrap();
        let flags = FastLemmaFlags {
            c1: Some("3".into()),
            b: Some("4".into()),
            delta: None,
            y0: None,
            seed: None,
        };
        let cfg: FastLemmaConfig = resolve(&flags, Some(&path)).unwrap();
        assert_eq!((cfg.c1.as_str(), cfg.b.as_str(), cfg.delta.as_str()), ("10", "4", "1"));
    }

    #[test]
    fn configs_round_trip() {
        fn check<C: Experiment + PartialEq + std::fmt::Debug>() {
            let c = C::default();
            let s = serde_json::to_string(&c).unwrap();
            let back: C = serde_json::from_str(&s).unwrap();
            assert_eq!(serde_json::to_string(&back).unwrap(), s);
            assert_eq!(back, c);
        }
        check::<ExponentsConfig>();
        check::<TrajectoryConfig>();
        check::<KernelNormsConfig>();
        check::<MollifyConfig>();
        check::<SolveConfig>();
        check::<GnConfig>();
        check::<EnergyConfig>();
        check::<LocalGainConfig>();
        check::<TransferConfig>();
        check::<DegiorgiConfig>();
        check::<FastLemmaConfig>();
    }

    #[test]
    fn numerical_failure_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"solver": {"dt": 10.0, "nx": 8, "nv": 8, "slices": 8}}"#).unwrap();
        let (code, _, err) = run_str(&["solve", "--config", path.to_str().unwrap()]);
        assert_eq!(code, EXIT_NUMERICAL);
        let v: Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"], "numerical");
    }
}
