use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use pedbrake_core::analysis::{ramp_error_bound, stability_report};
use pedbrake_core::config::RunConfig;
use pedbrake_core::scenarios::{
    run_braking_scenario, run_detection_characterization, run_kp_sweep, run_lateral_scenario,
    RangeStats, TrajectorySummary,
};
use serde::Serialize;

use crate::args::{Cli, Command};

/// How a successful invocation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    NotConverged,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    tool_version: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    output_dir: String,
    wall_clock_seconds: f64,
    /// Identical to `config.toml`; pass that file back with `--config` to
    /// reproduce the run.
    config: &'a RunConfig,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let started = Instant::now();
    let mut cfg = match (&cli.config, cli.defaults) {
        (Some(path), false) => RunConfig::load(path)?,
        _ => RunConfig::default(),
    };
    let name = cli.command.name();
    let out_dir = cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(name));

    let seed = cli.seed;
    let (outcome, effective_seed) = match &cli.command {
        Command::Brake(args) => {
            args.apply(&mut cfg, seed)?;
            prepare(&out_dir)?;
            (brake(&cfg, &out_dir)?, Some(cfg.brake.seed))
        }
        Command::SweepKp(args) => {
            args.apply(&mut cfg, seed)?;
            prepare(&out_dir)?;
            (sweep(&cfg, &out_dir)?, Some(cfg.brake.seed))
        }
        Command::Lateral(args) => {
            args.apply(&mut cfg)?;
            prepare(&out_dir)?;
            (lateral(&cfg, &out_dir)?, seed)
        }
        Command::Characterize(args) => {
            args.apply(&mut cfg, seed)?;
            prepare(&out_dir)?;
            (
                characterize(&cfg, &out_dir)?,
                Some(cfg.characterize.noise.seed),
            )
        }
        Command::Analyze(args) => {
            args.apply(&mut cfg)?;
            prepare(&out_dir)?;
            (analyze(&cfg, &out_dir)?, seed)
        }
    };

    let snapshot = cfg.to_toml_string()?;
    fs::write(out_dir.join("config.toml"), &snapshot)?;
    let manifest = RunManifest {
        subcommand: name,
        tool_version: env!("CARGO_PKG_VERSION"),
        seed: effective_seed,
        output_dir: out_dir.display().to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        config: &cfg,
    };
    write_toml(&out_dir.join("manifest.toml"), &manifest)?;
    Ok(outcome)
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_summary(s: &TrajectorySummary) {
    println!(
        "{:<12} converged={:<5} final_gap={:.3} m  peak_decel={:.3} m/s^2  stop_time={}",
        s.label,
        s.converged,
        s.final_gap,
        s.peak_decel,
        s.stop_time.map_or("-".into(), |t| format!("{t:.2} s")),
    );
}

fn brake(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let log = run_braking_scenario(&cfg.brake)?;
    log.write_csv(create(&out.join("trajectory.csv"))?)?;
    write_toml(&out.join("summary.toml"), &log.summary)?;
    print_summary(&log.summary);
    Ok(if log.summary.converged {
        Outcome::Done
    } else {
        Outcome::NotConverged
    })
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    k_p: f64,
    file: String,
    #[serde(flatten)]
    summary: &'a TrajectorySummary,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    runs: Vec<SweepEntry<'a>>,
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let logs = run_kp_sweep(&cfg.sweep.base(&cfg.brake), &cfg.sweep.kp_values)?;
    let mut runs = Vec::with_capacity(logs.len());
    for (log, &k_p) in logs.iter().zip(&cfg.sweep.kp_values) {
        let file = format!("{}.csv", log.summary.label);
        log.write_csv(create(&out.join(&file))?)?;
        print_summary(&log.summary);
        runs.push(SweepEntry {
            k_p,
            file,
            summary: &log.summary,
        });
    }
    write_toml(&out.join("summary.toml"), &SweepSummary { runs })?;
    Ok(if logs.iter().all(|l| l.summary.converged) {
        Outcome::Done
    } else {
        Outcome::NotConverged
    })
}

fn lateral(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let log = run_lateral_scenario(&cfg.lateral)?;
    log.write_csv(create(&out.join("lateral.csv"))?)?;
    write_toml(&out.join("summary.toml"), &log.summary)?;
    let s = &log.summary;
    println!(
        "{}: converged={} diverged={} overshoot={:.1}% settling_time={} final_error={:.2e} m",
        s.label,
        s.converged,
        s.diverged,
        100.0 * s.overshoot,
        s.settling_time.map_or("-".into(), |t| format!("{t:.2} s")),
        s.final_error,
    );
    Ok(if s.converged {
        Outcome::Done
    } else {
        Outcome::NotConverged
    })
}

#[derive(Serialize)]
struct CharacterizationSummary<'a> {
    label: &'a str,
    seed: u64,
    ranges: &'a [RangeStats],
}

fn characterize(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let log = run_detection_characterization(&cfg.characterize)?;
    log.write_csv(create(&out.join("detection.csv"))?)?;
    write_toml(
        &out.join("summary.toml"),
        &CharacterizationSummary {
            label: &cfg.characterize.label,
            seed: cfg.characterize.noise.seed,
            ranges: &log.summary,
        },
    )?;
    println!(
        "{:>8} {:>8} {:>8} {:>10} {:>8}",
        "range", "samples", "dropouts", "mean", "std"
    );
    for r in &log.summary {
        println!(
            "{:>8.2} {:>8} {:>8} {:>10.4} {:>8.4}",
            r.range, r.samples, r.dropouts, r.mean, r.std
        );
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct StabilityRecord {
    k_p: f64,
    k_d: f64,
    k_inner: f64,
    mass: f64,
    coefficients: [f64; 3],
    stable: bool,
    /// `[re, im]` pairs, 1/s.
    poles: [[f64; 2]; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    natural_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    damping_ratio: Option<f64>,
    ramp_slope: f64,
    ramp_velocity_error: f64,
}

/// `x` rounded to `digits` significant figures.
pub fn sig_figs(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn analyze(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let an = &cfg.analyze;
    let report = stability_report(&an.gains, an.mass)?;
    let ramp = ramp_error_bound(an.mass, an.gains.k_inner, an.ramp_slope)?;
    let c = report.coefficients;
    let [p1, p2] = report.poles;

    println!(
        "gains: K_p={} K_d={} K={}  mass={} kg",
        an.gains.k_p, an.gains.k_d, an.gains.k_inner, an.mass
    );
    println!("denominator: ({}, {}, {})", c.a2, c.a1, c.a0);
    println!(
        "routh-hurwitz: {}",
        if report.stable {
            "stable"
        } else {
            "not stable"
        }
    );
    if p1.im != 0.0 {
        println!(
            "poles: {} ± {}i 1/s",
            sig_figs(p1.re, 4),
            sig_figs(p1.im.abs(), 4)
        );
    } else {
        println!("poles: {}, {} 1/s", sig_figs(p1.re, 4), sig_figs(p2.re, 4));
    }
    if let (Some(wn), Some(zeta)) = (report.natural_frequency, report.damping_ratio) {
        println!("natural frequency: {} rad/s", sig_figs(wn, 4));
        println!("damping ratio: {}", sig_figs(zeta, 4));
    }
    println!(
        "ramp velocity error (slope {} m/s^2): {} m/s",
        an.ramp_slope,
        sig_figs(ramp, 4)
    );

    let record = StabilityRecord {
        k_p: an.gains.k_p,
        k_d: an.gains.k_d,
        k_inner: an.gains.k_inner,
        mass: an.mass,
        coefficients: [c.a2, c.a1, c.a0],
        stable: report.stable,
        poles: [[p1.re, p1.im], [p2.re, p2.im]],
        natural_frequency: report.natural_frequency,
        damping_ratio: report.damping_ratio,
        ramp_slope: an.ramp_slope,
        ramp_velocity_error: ramp,
    };
    write_toml(&out.join("stability.toml"), &record)?;
    Ok(Outcome::Done)
}

#[cfg(test)]
mod tests {
    use super::sig_figs;

    #[test]
    fn significant_figures() {
        assert_eq!(sig_figs(-0.289855, 4), "-0.2899");
        assert_eq!(sig_figs(3.2172607, 4), "3.217");
        assert_eq!(sig_figs(18000.0, 4), "18000");
        assert_eq!(sig_figs(0.0, 4), "0");
    }
}
