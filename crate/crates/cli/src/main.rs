mod config;

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use pufkit::adversary::{
    build_clone, clone_fidelity, fidelity_grid_minimum, AttackModel, CloneDevice, CloneModel,
    Transcript,
};
use pufkit::classical_puf::{sample_classical_puf, ClassicalDevice};
use pufkit::devices::{
    ConstantClassicalDevice, ConstantQuantumDevice, RngClassicalDevice, RngQuantumDevice,
};
use pufkit::fuzzy::canetti_correctness;
use pufkit::metrics::{
    analytic_robustness, binomial_cdf, estimate_clonability, estimate_clonability_on_table,
    estimate_robustness, security_tuple, table1_monte_carlo, AttackSetup, SecurityReport,
};
use pufkit::protocol::{
    crt_load, crt_save, enroll_detailed, verify, Crt, CrtDims, DeviceRef, NoiseModel, PufKind,
    Verdict,
};
use pufkit::qrpuf::{sample_qrpuf, wrong_state_error, QuantumDevice};
use pufkit::rng::derive_rng;

use config::{AttackSection, ClassicalModel, RunConfig};

#[derive(Parser)]
#[command(name = "pufkit", version, about = "Seeded PUF and QR-PUF authentication experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (falls back to the config, then PUFKIT_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit timestamps so output is byte-reproducible.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Let verification reuse consumed entries (attack demonstrations only).
    #[arg(long = "allow-crp-reuse", global = true)]
    allow_crp_reuse: bool,
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<PufKind>,
    #[arg(long, global = true)]
    lambda: Option<usize>,
    #[arg(long, global = true)]
    phi: Option<f64>,
    /// Noise parameter.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long = "n-target", global = true)]
    n_target: Option<usize>,
    #[arg(long, global = true)]
    model: Option<CloneModel>,
    #[arg(long, global = true)]
    q: Option<usize>,
    #[arg(long = "q-star", global = true)]
    q_star: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Enroll a device and write its challenge-response table.
    Enroll,
    /// Run one verification against a stored table and consume the entry.
    Verify {
        #[arg(long)]
        crt: PathBuf,
        /// Entry id, or "random" for a random unused entry.
        #[arg(long, default_value = "random")]
        id: String,
        #[arg(long, value_enum, default_value_t = DeviceChoice::Genuine)]
        device: DeviceChoice,
    },
    /// Estimate clone success against a stored table.
    Attack {
        #[arg(long)]
        crt: PathBuf,
    },
    /// Full robustness and unclonability report.
    Metrics {
        /// Also write sweep rows as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Error probabilities of each shifter against each challenge state.
    Table1,
    /// Cloning fidelity for a list of register sizes.
    Fidelity {
        #[arg(long, value_delimiter = ',', default_value = "1,10,20")]
        lambdas: Vec<usize>,
        /// Points in the φ grid searched for the minimum.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DeviceChoice {
    Genuine,
    Constant,
    Rng,
    /// Clone built without observations.
    Clone,
}

fn parse_kind(s: &str) -> Result<PufKind, String> {
    match s {
        "qr" => Ok(PufKind::Qr),
        "classical" => Ok(PufKind::Classical),
        _ => Err(format!("expected qr or classical, got {s:?}")),
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<pufkit::Error> for Failure {
    fn from(e: pufkit::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let (cfg, seed) = resolve(&cli.common)?;
    let c = &cli.common;
    match cli.command {
        Command::Enroll => cmd_enroll(&cfg, seed, c.deterministic),
        Command::Verify { crt, id, device } => cmd_verify(&cfg, seed, &crt, &id, device, c.p),
        Command::Attack { crt } => cmd_attack(&cfg, seed, &crt),
        Command::Metrics { tsv } => cmd_metrics(&cfg, seed, tsv.as_deref(), c.deterministic),
        Command::Table1 => cmd_table1(&cfg, seed, c.trials.unwrap_or(100_000)),
        Command::Fidelity { lambdas, grid } => cmd_fidelity(&cfg, &lambdas, grid),
    }
}

fn resolve(c: &Common) -> Result<(RunConfig, u64), Failure> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.trials {
        cfg.trials = v;
    }
    if let Some(v) = &c.out {
        cfg.out = Some(v.clone());
    }
    cfg.allow_crp_reuse |= c.allow_crp_reuse;
    if let Some(v) = c.kind {
        cfg.puf_kind = v;
    }
    if let Some(v) = c.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = c.phi {
        cfg.phi = v;
    }
    if let Some(v) = c.p {
        cfg.noise.p = v;
    }
    if let Some(v) = c.n_target {
        cfg.n_target = v;
    }
    if let Some(v) = c.model {
        cfg.attack.model = v;
    }
    if let Some(v) = c.q {
        cfg.attack.q = v;
    }
    if let Some(v) = c.q_star {
        cfg.attack.q_star = v;
    }
    cfg.validate().map_err(Failure::Usage)?;
    let seed = match c.seed.or(cfg.seed) {
        Some(s) => s,
        None => match env::var("PUFKIT_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("PUFKIT_SEED is not an unsigned integer: {v:?}")))?,
            Err(_) => 0,
        },
    };
    Ok((cfg, seed))
}

enum Device {
    Qr(Box<dyn QuantumDevice>),
    Classical(Box<dyn ClassicalDevice>),
    Clone(CloneDevice),
}

impl Device {
    fn as_ref(&self) -> DeviceRef<'_> {
        match self {
            Device::Qr(d) => DeviceRef::Qr(d.as_ref()),
            Device::Classical(d) => DeviceRef::Classical(d.as_ref()),
            Device::Clone(d) => d.as_device(),
        }
    }
}

/// The genuine device is a pure function of the master seed and its shape.
fn genuine(dims: &CrtDims, model: ClassicalModel, seed: u64) -> Result<Device, Failure> {
    let mut rng = derive_rng(seed, "device", 0);
    Ok(match dims {
        CrtDims::Qr(enc) => Device::Qr(Box::new(sample_qrpuf(enc.lambda(), &mut rng)?)),
        CrtDims::Classical {
            challenge_len,
            out_len,
        } => Device::Classical(Box::new(sample_classical_puf(
            model.into(),
            *challenge_len,
            *out_len,
            &mut rng,
        )?)),
    })
}

fn config_dims(cfg: &RunConfig) -> Result<CrtDims, Failure> {
    Ok(match cfg.puf_kind {
        PufKind::Qr => CrtDims::Qr(
            pufkit::qrpuf::ChallengeEncoding::new(cfg.phi, cfg.lambda)
                .map_err(|e| Failure::Usage(e.to_string()))?,
        ),
        PufKind::Classical => CrtDims::Classical {
            challenge_len: cfg.challenge_len,
            out_len: cfg.out_len,
        },
    })
}

fn attack_for(model: CloneModel, kind: PufKind, phi: f64, a: &AttackSection) -> AttackModel {
    match model.default_attack(kind, phi) {
        AttackModel::InterceptResend { .. } => AttackModel::InterceptResend {
            basis: a.basis,
            legs: a.legs,
        },
        AttackModel::OptimalCloner { phi, .. } => AttackModel::OptimalCloner {
            phi,
            basis: a.basis,
            legs: a.legs,
        },
        other => other,
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn load(path: &Path) -> Result<Crt, Failure> {
    crt_load(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn cmd_enroll(cfg: &RunConfig, seed: u64, deterministic: bool) -> Outcome {
    let enroll_cfg = cfg.enroll_config().map_err(Failure::Usage)?;
    let device = genuine(&config_dims(cfg)?, cfg.classical_model, seed)?;
    let (crt, summary) = enroll_detailed(
        device.as_ref(),
        &enroll_cfg,
        &mut derive_rng(seed, "enroll", 0),
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("crt.json"));
    crt_save(&crt, &out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;

    println!("entries:     {}", summary.entries);
    println!("selected:    {}", summary.selected);
    println!("pruned:      {}", summary.pruned);
    println!("t:           {}", summary.t.t);
    println!("code:        {}", crt.fe().code());
    println!("noise_mean:  {:.4}", summary.noise_mean);
    println!("min_error:   {:.4}", summary.t.min_error);
    println!("w_entropy:   {:.4}", summary.w_entropy);
    if !crt.fe().within_extractor_budget() {
        println!(
            "warning:     m = {} exceeds the extractor budget {:.2}",
            crt.fe().m(),
            crt.fe().extractor_budget()
        );
    }
    if summary.t.collision_warning {
        println!("warning:     challenges closer than one expected error; t forced to 0");
    }
    println!("seed:        {seed}");
    if !deterministic {
        println!("generated:   {}", timestamp());
    }
    println!("wrote:       {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    cfg: &RunConfig,
    seed: u64,
    path: &Path,
    id: &str,
    choice: DeviceChoice,
    p: Option<f64>,
) -> Outcome {
    let mut crt = load(path)?;
    let id = match id {
        "random" => crt
            .random_live_id(&mut derive_rng(seed, "verify/select", crt.live_count() as u64))
            .ok_or_else(|| Failure::Data("no unused entries left".into()))?,
        s => s
            .parse()
            .map_err(|_| Failure::Usage(format!("--id expects an integer or \"random\", got {s:?}")))?,
    };
    let noise = match p {
        None => *crt.noise(),
        Some(p) => match crt.noise() {
            NoiseModel::Depolarizing(q) => NoiseModel::depolarizing(p, q.insertion),
            NoiseModel::BitFlip(_) => NoiseModel::bitflip(p),
        }
        .map_err(|e| Failure::Usage(e.to_string()))?,
    };
    let device = match choice {
        DeviceChoice::Genuine => genuine(crt.dims(), cfg.classical_model, seed)?,
        DeviceChoice::Constant => match crt.dims() {
            CrtDims::Qr(enc) => Device::Qr(Box::new(ConstantQuantumDevice::new(enc.lambda())?)),
            CrtDims::Classical {
                challenge_len,
                out_len,
            } => Device::Classical(Box::new(ConstantClassicalDevice::new(*challenge_len, *out_len)?)),
        },
        DeviceChoice::Rng => {
            let mut rng = derive_rng(seed, "verify/rng-device", 0);
            let (size, min_distance) = (crt.len().max(2), 2 * crt.t() + 1);
            match crt.dims() {
                CrtDims::Qr(enc) => Device::Qr(Box::new(RngQuantumDevice::sample(
                    enc.lambda(),
                    size,
                    min_distance,
                    &mut rng,
                )?)),
                CrtDims::Classical {
                    challenge_len,
                    out_len,
                } => Device::Classical(Box::new(RngClassicalDevice::sample(
                    *challenge_len,
                    *out_len,
                    size,
                    min_distance,
                    &mut rng,
                )?)),
            }
        }
        DeviceChoice::Clone => {
            let empty = Transcript {
                dims: crt.dims().clone(),
                attack: AttackModel::Passive,
                rounds: Vec::new(),
            };
            Device::Clone(build_clone(&empty, CloneModel::RandomGuess)?)
        }
    };
    let result = verify(
        &mut crt,
        device.as_ref(),
        id,
        &noise,
        &mut derive_rng(seed, "verify", id),
    );
    let v = match result {
        Err(pufkit::Error::EntryConsumed(id)) => {
            return Err(Failure::Data(format!("entry consumed: {id}")))
        }
        other => other?,
    };
    crt_save(&crt, path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    match v.verdict {
        Verdict::Accept => {
            println!("ACCEPT entry {id}");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Reject => {
            println!("REJECT entry {id}");
            Ok(ExitCode::from(1))
        }
        Verdict::Uncorrectable => {
            println!("REJECT entry {id} (uncorrectable)");
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_attack(cfg: &RunConfig, seed: u64, path: &Path) -> Outcome {
    let crt = load(path)?;
    let device = genuine(crt.dims(), cfg.classical_model, seed)?;
    let phi = match crt.dims() {
        CrtDims::Qr(enc) => enc.phi(),
        CrtDims::Classical { .. } => cfg.phi,
    };
    let model = cfg.attack.model;
    let setup = AttackSetup {
        attack: attack_for(model, crt.kind(), phi, &cfg.attack),
        model,
        q: cfg.attack.q,
        allow_reuse: cfg.allow_crp_reuse,
    };
    let est = estimate_clonability_on_table(
        &crt,
        device.as_ref(),
        &crt.noise().clone(),
        &setup,
        cfg.trials,
        seed,
    )?;
    emit(&to_json(&est.report(model)), cfg.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(cfg: &RunConfig, seed: u64, tsv: Option<&Path>, deterministic: bool) -> Outcome {
    let enroll_cfg = cfg.enroll_config().map_err(Failure::Usage)?;
    let device = genuine(&config_dims(cfg)?, cfg.classical_model, seed)?;
    let device = device.as_ref();
    let noise = enroll_cfg.noise;

    let (reference, _) = enroll_detailed(device, &enroll_cfg, &mut derive_rng(seed, "metrics/reference", 0))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let t = reference.t();
    let rho = estimate_robustness(device, &enroll_cfg, &noise, cfg.trials, seed)?;
    let rho_analytic = match cfg.puf_kind {
        PufKind::Qr => analytic_robustness(cfg.lambda, cfg.noise.p, t)?,
        PufKind::Classical => binomial_cdf(cfg.out_len, cfg.noise.p, t),
    };
    let canetti = canetti_correctness(t, reference.fe().l(), cfg.fe.m, cfg.fe.xi1, cfg.fe.xi2)?;

    let model = cfg.attack.model;
    let attack = attack_for(model, cfg.puf_kind, cfg.phi, &cfg.attack);
    let curve = (0..=cfg.attack.q_star)
        .map(|q| {
            let setup = AttackSetup {
                attack,
                model,
                q,
                allow_reuse: cfg.allow_crp_reuse,
            };
            estimate_clonability(device, &enroll_cfg, &noise, &setup, cfg.trials, seed)
        })
        .collect::<pufkit::Result<Vec<_>>>()?;
    let mut report = security_tuple(model, &rho, Some(rho_analytic), &curve, cfg.attack.q_star, seed)?;
    report.canetti_robustness = Some(canetti.robustness);

    if let Some(path) = tsv {
        let mut text = String::from(SecurityReport::TSV_HEADER);
        text.push('\n');
        for row in report.tsv_rows(cfg.phi, cfg.lambda, cfg.noise.p, t) {
            text.push_str(&row);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    }

    let mut summary = format!(
        "rho_hat:      {:.4} [{:.4}, {:.4}]\nrho_analytic: {:.4}\ncanetti:      {:.4} (1 - rho_tilde, raw rho_tilde {:.4})\n",
        report.rho_hat, report.rho_ci95[0], report.rho_ci95[1], rho_analytic, canetti.robustness, canetti.raw
    );
    for g in &report.gamma {
        summary.push_str(&format!(
            "gamma(q={}):  {:.4} [{:.4}, {:.4}] disturbance {:.4}\n",
            g.q, g.gamma_hat, g.ci95[0], g.ci95[1], g.disturbance_rate
        ));
    }
    summary.push_str(&format!(
        "tuple:        ({:.4}, {:.4}, {})\nmodel:        {}\nt:            {t}\ntrials:       {}\nseed:         {seed}\n",
        report.tuple.0, report.tuple.1, report.tuple.2, report.model, report.trials
    ));
    if !reference.fe().within_extractor_budget() {
        summary.push_str(&format!(
            "warning:      m = {} exceeds the extractor budget {:.2}\n",
            cfg.fe.m,
            reference.fe().extractor_budget()
        ));
    }
    if !deterministic {
        summary.push_str(&format!("generated:    {}\n", timestamp()));
    }
    match &cfg.out {
        Some(path) => {
            emit(&report.to_json(), Some(path))?;
            print!("{summary}");
        }
        None => {
            print!("{}", report.to_json());
            eprint!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_table1(cfg: &RunConfig, seed: u64, shots: usize) -> Outcome {
    if shots == 0 {
        return Err(Failure::Usage("trials must be at least 1".into()));
    }
    let mc = table1_monte_carlo(cfg.phi, shots, seed)?;
    let mut text = format!("# phi = {:.6}, {shots} shots per cell\n", cfg.phi);
    text.push_str("l\ta1\ta2\ta3\ta4\tmc1\tmc2\tmc3\tmc4\n");
    for l in 1..=4u8 {
        text.push_str(&l.to_string());
        for lp in 1..=4u8 {
            text.push_str(&format!("\t{:.6}", wrong_state_error(l, lp, cfg.phi)?));
        }
        for e in &mc[l as usize - 1] {
            text.push_str(&format!("\t{:.6}", e.value));
        }
        text.push('\n');
    }
    emit(&text, cfg.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fidelity(cfg: &RunConfig, lambdas: &[usize], grid: usize) -> Outcome {
    let mut text = format!("# phi = {:.6}\nlambda\tfidelity\n", cfg.phi);
    for &lambda in lambdas {
        let f = clone_fidelity(cfg.phi, lambda).map_err(|e| Failure::Usage(e.to_string()))?;
        text.push_str(&format!("{lambda}\t{f:.6}\n"));
    }
    let (phi_min, f_min) = fidelity_grid_minimum(grid).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push_str(&format!("# grid minimum ({grid} points on [0, pi/2]): phi = {phi_min:.6}, F = {f_min:.6}\n"));
    emit(&text, cfg.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
