use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::atoms::{build_atom, certify_unit_sup, AtomSpec};
use crate::exactlin::{build_normalization, validate_family, verify_projections};
use crate::kernelops::KernelParams;
use crate::quadrature::QuadOptions;
use crate::Exec;

use super::config::{ExperimentConfig, FamilyConfig};
use super::experiments::{
    atom_moment_table, conjugation_experiment, join, negative_control_experiment, reproduce_example,
    scaling_exponent_experiment, uniform_atom_experiment,
};
use super::{apply_tr, critical_q, lq_norm_tr, NormOptions, OplabError, Report, SmoothBump};

#[derive(Debug, Parser)]
#[command(name = "fracop", version, about = "Fractional integrals with rank-deficient kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the family hypotheses exactly.
    Check(FamilyArg),
    /// Print B, C, B^-1 and the projections B^-1 A_j C.
    Normalize(FamilyArg),
    /// Build an atom and print its moments and sup certificate.
    Atom(AtomArgs),
    /// Evaluate T_r f(x) for an atom or a bump.
    Apply(ApplyArgs),
    /// Estimate ||T_r a||_q for one atom.
    Norms(NormArgs),
    /// Run a verification experiment.
    Experiment(ExperimentArgs),
    /// Recompute the 3x3 example and compare every displayed value.
    ReproduceExample {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FamilyArg {
    /// paper-example, canonical:1,1 or random:1,2:SEED
    #[arg(long, default_value = "paper-example")]
    pub family: String,
}

#[derive(Debug, Args)]
pub struct AtomArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Comma separated; the origin when omitted.
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Print the atom as JSON instead.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceKind {
    Atom,
    Bump,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Comma separated evaluation point.
    #[arg(long)]
    pub x: String,
    #[arg(long, value_enum, default_value_t = SourceKind::Bump)]
    pub source: SourceKind,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct NormArgs {
    #[arg(long, default_value = "canonical:1,1")]
    pub family: String,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Defaults to the critical index 1/q = 1/p - r.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub center: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentKind {
    Uniform,
    Scaling,
    NegativeControl,
    Conjugation,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    /// TOML configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dilations: Option<Vec<f64>>,
    #[arg(long)]
    pub q_perturbed: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

impl ExperimentArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, OplabError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(f) = &self.family {
            cfg.family = FamilyConfig::parse(f)?;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = &self.p {
            cfg.p = v.clone();
        }
        if let Some(v) = self.atoms {
            cfg.atoms = v;
        }
        if let Some(v) = &self.dilations {
            cfg.dilations = v.clone();
        }
        if self.q_perturbed.is_some() {
            cfg.q_perturbed = self.q_perturbed;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.threshold {
            cfg.threshold = v;
        }
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if self.sequential {
            cfg.exec = Exec::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_point(text: &str, n: usize) -> Result<Vec<f64>, OplabError> {
    let v = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| OplabError::Config(format!("bad coordinate '{}' in '{text}'", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(OplabError::Dimension { expected: n, got: v.len() });
    }
    Ok(v)
}

fn center_or_origin(text: &Option<String>, n: usize) -> Result<Vec<f64>, OplabError> {
    match text {
        Some(t) => parse_point(t, n),
        None => Ok(vec![0.0; n]),
    }
}

fn write_output(report: &Report, path: &Option<PathBuf>) -> Result<(), OplabError> {
    if let Some(path) = path {
        report.write_csv(std::fs::File::create(path)?)?;
        println!("wrote {} rows to {}", report.records.len(), path.display());
    }
    Ok(())
}

/// Runs one command; `Ok(true)` when every check passed.
pub fn run(cli: Cli) -> Result<bool, OplabError> {
    match cli.command {
        Command::Check(a) => {
            let family = FamilyConfig::parse(&a.family)?.resolve()?;
            let report = validate_family(&family);
            println!("{report}");
            Ok(report.passed())
        }
        Command::Normalize(a) => {
            let family = FamilyConfig::parse(&a.family)?.resolve()?;
            let norm = build_normalization(&family, None)?;
            println!("C =\n{}\nB =\n{}\nB^-1 =\n{}", norm.c, norm.b, norm.b_inv);
            for (j, p) in norm.projections.iter().enumerate() {
                println!("B^-1 A_{} C =\n{p}", j + 1);
            }
            let ok = verify_projections(&norm, &family);
            println!("projections verified: {ok}");
            Ok(ok)
        }
        Command::Atom(a) => {
            let spec = AtomSpec::new(a.n, a.p, center_or_origin(&a.center, a.n)?, a.radius, a.seed)?;
            let atom = build_atom(&spec)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&atom).map_err(|e| OplabError::Numerical(e.to_string()))?);
                return Ok(true);
            }
            println!("N = {}, degree {}", spec.order(), atom.polynomial_degree());
            let mut ok = true;
            for (beta, value, scale) in atom_moment_table(&atom, 1) {
                let vanishing = beta.iter().sum::<u32>() as usize <= spec.moment_degree();
                let pass = !vanishing || value.abs() <= 1e-10 * scale;
                ok &= pass;
                let tag = if vanishing { if pass { "PASS" } else { "FAIL" } } else { "    " };
                println!("  [{tag}] moment {beta:?} = {value:.3e} (scale {scale:.3e})");
            }
            let cert = certify_unit_sup(&atom);
            let limit = spec.sup_limit();
            let pass = cert <= limit;
            ok &= pass;
            println!("sup certificate {cert:.6e} <= |B|^(-1/p) = {limit:.6e}: {pass}");
            Ok(ok)
        }
        Command::Apply(a) => {
            let family = FamilyConfig::parse(&a.family.family)?.resolve()?;
            let params = KernelParams::new(family, a.r)?;
            let n = params.n();
            let x = parse_point(&a.x, n)?;
            let center = center_or_origin(&a.center, n)?;
            let opts = QuadOptions::rel(a.tol).with_max_evals(50_000_000);
            let res = match a.source {
                SourceKind::Bump => apply_tr(&params, &SmoothBump::new(center, a.radius), &x, &opts)?,
                SourceKind::Atom => {
                    let atom = build_atom(&AtomSpec::new(n, a.p, center, a.radius, a.seed)?)?;
                    apply_tr(&params, &atom, &x, &opts)?
                }
            };
            println!(
                "T_r f({}) = {:.12e} +- {:.1e} ({} evals{})",
                join(&x),
                res.value,
                res.error_estimate,
                res.evals,
                if res.flagged() { ", unconverged" } else { "" }
            );
            Ok(!res.flagged())
        }
        Command::Norms(a) => {
            let family = FamilyConfig::parse(&a.family)?.resolve()?;
            let params = KernelParams::new(family, a.r)?;
            let n = params.n();
            let q = match a.q {
                Some(q) => q,
                None => critical_q(a.p, a.r)?,
            };
            let atom = build_atom(&AtomSpec::new(n, a.p, center_or_origin(&a.center, n)?, a.radius, a.seed)?)?;
            let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
            let e = lq_norm_tr(&params, &atom, q, &NormOptions::default().with_tol(a.tol).with_exec(exec))?;
            println!("q = {q}");
            println!("near  {:.8e} +- {:.1e}", e.near_value, e.near_error);
            println!("tail <= {:.8e} (R = {}, C_fit = {:.4})", e.tail_bound, e.r_max, e.c_fit);
            println!("total <= {:.8e}", e.total_upper);
            if e.is_flagged() {
                println!("{} inner integrals did not converge", e.flagged);
            }
            Ok(!e.is_flagged())
        }
        Command::Experiment(a) => {
            let cfg = a.resolve()?;
            let report = match a.kind {
                ExperimentKind::Uniform => uniform_atom_experiment(&cfg)?,
                ExperimentKind::Scaling => scaling_exponent_experiment(&cfg)?,
                ExperimentKind::NegativeControl => negative_control_experiment(&cfg)?,
                ExperimentKind::Conjugation => {
                    conjugation_experiment(&cfg.family.resolve()?, cfg.r, 20, cfg.seed, 1e-7, cfg.exec)?
                }
            };
            println!("{report}");
            write_output(&report, &cfg.output)?;
            Ok(report.passed())
        }
        Command::ReproduceExample { output } => {
            let report = reproduce_example()?;
            println!("{report}");
            write_output(&report, &output)?;
            Ok(report.passed())
        }
    }
}
