use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mcflab::config::Config;
use mcflab::experiments::{
    reference_torus, run_generic, run_theorem1, run_theorem2, run_validation, summary_text,
    Check, RunConfig, Theorem1Config, Theorem2Config,
};
use mcflab::io::{profile_csv, profile_meta, read_text, snapshot_name, write_snapshot, write_text};

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Graphical mean curvature flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key=value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set grid_n=256` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Shoot the self-shrinking torus profile and write it as CSV
    ShootTorus {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the solvers with exact solutions
    Validate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Periodic spiked graph: MCF limit vs heat limit
    Theorem1(Common),
    /// Slab layout: oscillating MCF probe vs bounded heat flow
    Theorem2 {
        /// `default` or `coarse`
        #[arg(long, default_value = "default")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Single flow from a named initial field
    Run(Common),
}

fn load(common: &Common) -> Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::parse(&read_text(p)?).with_context(|| p.display().to_string())?,
        None => Config::default(),
    };
    let flags = Config::parse(&common.set.join("\n")).context("--set")?;
    cfg.merge(&flags);
    Ok(cfg)
}

fn finish(out: &Path, summary: String, checks: &[Check]) -> Result<ExitCode> {
    write_text(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    println!("wrote {}", out.display());
    Ok(if checks.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::ShootTorus { n, step, tol, out } => {
            let p = mcflab::shrinker::angenent_torus(n, tol, step)?;
            write_text(&out.join("profile.csv"), &profile_csv(&p))?;
            write_text(&out.join("profile.meta"), &profile_meta(&p))?;
            print!("{}", profile_meta(&p));
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { out } => {
            let checks = run_validation()?;
            let summary = summary_text("validation", &checks, &[]);
            finish(&out, summary, &checks)
        }
        Command::Theorem1(common) => {
            let cfg = Theorem1Config::from_config(&load(&common)?)?;
            let out = &common.out;
            write_text(&out.join("resolved.config"), &cfg.to_config().to_text())?;
            let base = reference_torus(cfg.shoot_step, cfg.shoot_tol)?;
            let report = run_theorem1(&cfg, &base)?;
            write_text(&out.join("profile.csv"), &profile_csv(&report.torus))?;
            write_text(&out.join("profile.meta"), &profile_meta(&report.torus))?;
            write_text(&out.join("series_mcf.csv"), &report.mcf.to_csv())?;
            write_text(&out.join("series_heat.csv"), &report.heat.to_csv())?;
            let log: String = report.region_log.iter().map(|c| format!("{c}\n")).collect();
            write_text(&out.join("region_checks.txt"), &log)?;
            for (i, (t, f)) in report.snapshots.iter().enumerate() {
                let flow = if i + 1 == report.snapshots.len() { "heat" } else { "mcf" };
                write_snapshot(&out.join(format!("{flow}_{}", snapshot_name(*t))), f, *t)?;
            }
            finish(out, report.summary(), &report.checks)
        }
        Command::Theorem2 { preset, common } => {
            let mut base_cfg = Theorem2Config::preset(&preset)?.to_config();
            base_cfg.merge(&load(&common)?);
            let cfg = Theorem2Config::from_config(&base_cfg)?;
            let out = &common.out;
            write_text(&out.join("resolved.config"), &cfg.to_config().to_text())?;
            let base = reference_torus(cfg.shoot_step, cfg.shoot_tol)?;
            let report = run_theorem2(&cfg, &base)?;
            write_text(&out.join("profile.csv"), &profile_csv(&report.torus))?;
            write_text(&out.join("profile.meta"), &profile_meta(&report.torus))?;
            write_text(&out.join("series_phase1.csv"), &report.phase1.to_csv())?;
            write_text(&out.join("series_phase2.csv"), &report.phase2.to_csv())?;
            write_text(&out.join("series_heat.csv"), &report.heat.to_csv())?;
            write_text(&out.join("extrema.csv"), &report.oscillation.to_csv())?;
            let mut balls = String::from("t,x1,r,average,lower,upper\n");
            for b in &report.ball_averages {
                balls.push_str(&format!("{},{},{},{},{},{}\n", b.0, b.1, b.2, b.3, b.4, b.5));
            }
            write_text(&out.join("ball_averages.csv"), &balls)?;
            for (flow, t, f) in &report.snapshots {
                write_snapshot(&out.join(format!("{flow}_{}", snapshot_name(*t))), f, *t)?;
            }
            finish(out, report.summary(), &report.checks)
        }
        Command::Run(common) => {
            let cfg = RunConfig::from_config(&load(&common)?)?;
            let out = &common.out;
            write_text(&out.join("resolved.config"), &cfg.to_config().to_text())?;
            let (field, series, t) = run_generic(&cfg)?;
            write_text(&out.join("series.csv"), &series.to_csv())?;
            write_snapshot(&out.join(snapshot_name(t)), &field, t)?;
            println!(
                "{} from `{}`: t={t} sup={} inf={} mean={}",
                cfg.flow,
                cfg.builder,
                field.sup(),
                field.inf(),
                field.mean()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
