//! Command-line front end: configuration, dispatch and CSV output.

pub mod model_io;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use model_io::{parse_aux, parse_lossless_aux, parse_model, parse_model_spec, ModelSpec};
use secreg_core::channel::{check_stochastic_degraded, less_noisy_falsify, LessNoisyVerdict};
use secreg_core::gaussian::{gaussian_trace, GaussianModel};
use secreg_core::region::{
    extend_with_auxiliaries, lossless_point, lossy_point_with_reconstruction, optimal_reconstruction,
    trace_region, AuxScheme, Cardinalities, DistortionMetric, Scalarization, SearchConfig, SearchMode,
    DEFAULT_SEED,
};
use secreg_core::{build_joint, SourceModel, StochasticMatrix};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Parser)]
#[command(name = "secreg", version, about = "Rate regions and binning simulation for keyed secure source coding")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Lossy region: evaluate an auxiliary scheme or trace the boundary over distortion targets.
    ComputeRegion(RegionArgs),
    /// Lossless region with U = X~ for one or more key rates.
    LosslessRegion(LosslessArgs),
    /// Closed-form Gaussian region over an alpha grid.
    Gaussian(GaussianArgs),
    /// Random-binning codec simulation.
    Simulate(SimulateArgs),
    /// Degradedness and less-noisy checks of the decoder/eavesdropper channels.
    CheckChannel(ChannelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Descent,
    Grid,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Discrete model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Auxiliary scheme to evaluate instead of searching.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Private key rate in bits/symbol.
    #[arg(long, default_value_t = 0.0)]
    pub r0: f64,
    /// Distortion targets, comma separated (search mode).
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<f64>,
    /// Auxiliary cardinalities |U|,|V|,|Q|.
    #[arg(long, value_delimiter = ',')]
    pub cardinalities: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = ModeArg::Descent)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long, default_value_t = 400)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Objective weights on rw,rs,rl.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Report the lower convex envelope over the targets.
    #[arg(long)]
    pub convexify: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LosslessArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Optional `V`, `Q` channels (U = X~ is implied).
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Key rates, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub r0: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    /// Gaussian model file; alternatively give all three correlations.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub rho_x: Option<f64>,
    #[arg(long)]
    pub rho_y: Option<f64>,
    #[arg(long)]
    pub rho_z: Option<f64>,
    /// Values of alpha in (0, 1], comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alphas: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Auxiliary scheme; defaults to U = X~ with constant V.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Blocklengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r0: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Random trials of the less-noisy falsification search.
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Alphabet size of the falsifying input `L`; defaults to |X|.
    #[arg(long)]
    pub l_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Optional report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        bail!("{name} must be finite and non-negative, got {v}");
    }
    Ok(())
}

impl RunConfig {
    /// Range checks that do not need the input files.
    pub fn validate(&self) -> Result<()> {
        match &self.command {
            Command::ComputeRegion(a) => {
                check_rate("--r0", a.r0)?;
                if a.aux.is_none() && a.targets.is_empty() {
                    bail!("--targets is required unless --aux is given");
                }
                if a.aux.is_some() && !a.targets.is_empty() {
                    bail!("--targets and --aux are mutually exclusive");
                }
                for &t in &a.targets {
                    check_rate("distortion target", t)?;
                }
                if let Some(c) = &a.cardinalities {
                    if c.len() != 3 || c.contains(&0) {
                        bail!("--cardinalities takes three positive sizes |U|,|V|,|Q|");
                    }
                }
                if let Some(w) = &a.weights {
                    if w.len() != 3 {
                        bail!("--weights takes three values rw,rs,rl");
                    }
                    for &x in w {
                        check_rate("objective weight", x)?;
                    }
                }
            }
            Command::LosslessRegion(a) => {
                for &r in &a.r0 {
                    check_rate("--r0", r)?;
                }
            }
            Command::Gaussian(a) => {
                for &x in &a.alphas {
                    if !(x > 0.0 && x <= 1.0) {
                        bail!("alpha must lie in (0, 1], got {x}");
                    }
                }
                let rhos = [a.rho_x, a.rho_y, a.rho_z];
                match (&a.model, rhos.iter().filter(|r| r.is_some()).count()) {
                    (Some(_), 0) | (None, 3) => {}
                    _ => bail!("give either --model or all of --rho-x, --rho-y, --rho-z"),
                }
            }
            Command::Simulate(a) => {
                if a.n.contains(&0) {
                    bail!("blocklengths must be at least 1");
                }
                if !(a.epsilon.is_finite() && a.epsilon > 0.0) {
                    bail!("--epsilon must be positive, got {}", a.epsilon);
                }
                check_rate("--r0", a.r0)?;
                if a.trials == 0 {
                    bail!("--trials must be at least 1");
                }
            }
            Command::CheckChannel(a) => {
                if a.trials == 0 {
                    bail!("--trials must be at least 1");
                }
                if a.l_size.is_some_and(|l| l < 2) {
                    bail!("--l-size must be at least 2");
                }
            }
        }
        Ok(())
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn write_output(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        v.to_string()
    }
}

fn discrete(path: &Path) -> Result<(SourceModel<f64>, DistortionMetric<f64>)> {
    match parse_model_spec(path)? {
        ModelSpec::Discrete { model, distortion } => {
            let metric = distortion.unwrap_or_else(|| DistortionMetric::hamming(model.x_tilde_size()));
            Ok((model, metric))
        }
        ModelSpec::Gaussian(_) => bail!("{} is a Gaussian model; a discrete model is required", path.display()),
    }
}

pub const REGION_HEADER: [&str; 5] = ["d", "rw_bits", "rs_bits", "rl_bits", "regime"];
pub const GAUSSIAN_HEADER: [&str; 5] = ["alpha", "rw_bits", "rs_bits", "rl_bits", "d"];
pub const SIMULATE_HEADER: [&str; 5] = ["n", "error_rate", "distortion", "leak_secrecy_bits", "leak_privacy_bits"];

/// Runs the command, writes its artifact and returns the one-line summary.
pub fn dispatch(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    match &cfg.command {
        Command::ComputeRegion(a) => compute_region(a).context("compute-region"),
        Command::LosslessRegion(a) => lossless_region(a).context("lossless-region"),
        Command::Gaussian(a) => gaussian(a).context("gaussian"),
        Command::Simulate(a) => simulate(a).context("simulate"),
        Command::CheckChannel(a) => check_channel(a).context("check-channel"),
    }
}

fn compute_region(a: &RegionArgs) -> Result<String> {
    let (model, metric) = discrete(&a.model)?;
    let rows: Vec<Vec<String>> = if let Some(aux_path) = &a.aux {
        let aux = parse_aux(aux_path)?;
        let full = extend_with_auxiliaries(&build_joint(&model)?, &aux)?;
        let map = match &aux.reconstruction {
            Some(m) => m.clone(),
            None => optimal_reconstruction(&full, &metric)?.0,
        };
        let rep = lossy_point_with_reconstruction(&full, a.r0, &metric, &map)?;
        let b = rep.bounds;
        vec![vec![num(b.d), num(b.rw), num(b.rs), num(b.rl), rep.regime.to_string()]]
    } else {
        let mut cfg = SearchConfig {
            restarts: a.restarts,
            max_iters: a.max_iters,
            grid_step: a.grid_step,
            seed: a.seed,
            convexify: a.convexify,
            mode: match a.mode {
                ModeArg::Descent => SearchMode::Descent,
                ModeArg::Grid => SearchMode::Grid,
            },
            ..SearchConfig::default()
        };
        if let Some(c) = &a.cardinalities {
            cfg.cardinalities = Some(Cardinalities { u: c[0], v: c[1], q: c[2] });
        }
        if let Some(w) = &a.weights {
            cfg.scalarization = Scalarization { rw: w[0], rs: w[1], rl: w[2] };
        }
        trace_region(&model, a.r0, &metric, &a.targets, &cfg)?
            .iter()
            .map(|p| {
                let b = p.report.bounds;
                vec![num(p.target), num(b.rw), num(b.rs), num(b.rl), p.report.regime.to_string()]
            })
            .collect()
    };
    write_output(&a.out, &csv_text(&REGION_HEADER, &rows)?)?;
    Ok(format!(
        "compute-region: {} row(s) at r0 = {} written to {}",
        rows.len(),
        a.r0,
        a.out.display()
    ))
}

fn lossless_region(a: &LosslessArgs) -> Result<String> {
    let model = parse_model(&a.model)?;
    let nt = model.x_tilde_size();
    let (pv, pq) = match &a.aux {
        Some(p) => parse_lossless_aux(p, nt)?,
        None => (StochasticMatrix::trivial(nt), StochasticMatrix::trivial(1)),
    };
    let joint = build_joint(&model)?;
    let mut rows = Vec::new();
    for &r0 in &a.r0 {
        let rep = lossless_point(&joint, &pv, &pq, r0)?;
        let b = rep.bounds;
        rows.push(vec![num(b.d), num(b.rw), num(b.rs), num(b.rl), rep.regime.to_string()]);
    }
    write_output(&a.out, &csv_text(&REGION_HEADER, &rows)?)?;
    Ok(format!("lossless-region: {} row(s) written to {}", rows.len(), a.out.display()))
}

fn gaussian(a: &GaussianArgs) -> Result<String> {
    let model = match &a.model {
        Some(p) => match parse_model_spec(p)? {
            ModelSpec::Gaussian(g) => g,
            ModelSpec::Discrete { .. } => bail!("{} is a discrete model; a Gaussian model is required", p.display()),
        },
        None => GaussianModel::new(a.rho_x.unwrap(), a.rho_y.unwrap(), a.rho_z.unwrap())?,
    };
    let rows: Vec<Vec<String>> = gaussian_trace(&model, &a.alphas)?
        .into_iter()
        .map(|(alpha, t)| vec![num(alpha), num(t.rw), num(t.rs), num(t.rl), num(t.d)])
        .collect();
    write_output(&a.out, &csv_text(&GAUSSIAN_HEADER, &rows)?)?;
    Ok(format!(
        "gaussian: {} alpha value(s) for (rho_x, rho_y, rho_z) = ({}, {}, {}) written to {}",
        rows.len(),
        model.rho_x,
        model.rho_y,
        model.rho_z,
        a.out.display()
    ))
}

fn simulate(a: &SimulateArgs) -> Result<String> {
    let (model, metric) = discrete(&a.model)?;
    let aux = match &a.aux {
        Some(p) => parse_aux(p)?,
        None => {
            if metric.reconstruction_size() < model.x_tilde_size() {
                bail!("the default U = X~ scheme needs a reconstruction alphabet covering X~");
            }
            AuxScheme::lossless(model.x_tilde_size(), model.y_size())
        }
    };
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &n in &a.n {
        let code = secreg_sim::design_from_scheme(&model, &aux, &metric, n, a.epsilon, a.r0, a.seed)?;
        let r = secreg_sim::run_experiment(&code, &model, a.trials, a.seed)?;
        worst = worst.max(r.error_rate);
        rows.push(vec![
            n.to_string(),
            num(r.error_rate),
            num(r.distortion),
            num(r.leakage_secrecy),
            num(r.leakage_privacy),
        ]);
    }
    write_output(&a.out, &csv_text(&SIMULATE_HEADER, &rows)?)?;
    Ok(format!(
        "simulate: {} configuration(s), {} trials each, worst error rate {worst}, written to {}",
        rows.len(),
        a.trials,
        a.out.display()
    ))
}

fn format_matrix(m: &StochasticMatrix<f64>) -> String {
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn check_channel(a: &ChannelArgs) -> Result<String> {
    let model = parse_model(&a.model)?;
    let (py, pz) = (model.p_y_given_x(), model.p_z_given_x());
    let cert = check_stochastic_degraded(&py, &pz)?;
    let mut lines = Vec::new();
    let summary = if cert.feasible {
        let w = cert.witness.as_ref().expect("feasible certificates carry a witness");
        lines.push(format!("witness P_Y|Z = {}", format_matrix(w)));
        lines.push(format!("residual = {:e}", cert.residual));
        format!(
            "check-channel: feasible: Y is stochastically degraded w.r.t. Z (eavesdropper less noisy), residual {:e}",
            cert.residual
        )
    } else {
        let l = a.l_size.unwrap_or(model.x_size()).max(2);
        match less_noisy_falsify(&py, &pz, a.trials, l, a.seed)? {
            LessNoisyVerdict::Falsified(w) => {
                lines.push(format!("P_X = {:?}", w.p_x.probs()));
                lines.push(format!("P_L|X = {}", format_matrix(&w.p_l_given_x)));
                lines.push(format!("I(L;Y) = {}, I(L;Z) = {}", w.i_l_y, w.i_l_z));
                format!(
                    "check-channel: infeasible: not degraded; Z is not less noisy than Y (I(L;Y) = {:.6} > I(L;Z) = {:.6})",
                    w.i_l_y, w.i_l_z
                )
            }
            LessNoisyVerdict::NotFalsified { .. } => format!(
                "check-channel: infeasible: not degraded; no less-noisy violation found in {} trials",
                a.trials
            ),
        }
    };
    if let Some(out) = &a.out {
        let mut text = summary.clone();
        for l in &lines {
            text.push('\n');
            text.push_str(l);
        }
        text.push('\n');
        write_output(out, &text)?;
    }
    let mut full = summary;
    for l in lines {
        full.push_str("\n  ");
        full.push_str(&l);
    }
    Ok(full)
}
