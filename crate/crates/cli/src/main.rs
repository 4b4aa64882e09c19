//! Command-line front end: simulate scenarios to CSV telemetry, certify
//! gain configurations, sweep the thrust-scaling strategies, and audit the
//! force/filter inequalities along a run.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical abort
//! (non-finite state or near-antipodal attitude pair), 3 monitor violations
//! during simulate, 4 failed gain certificate, 5 negative audit slack.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Vector3;

use geotrack_core::analysis::{compute_constants, CertificateReport, MonitorId, MONITOR_SLACK};
use geotrack_core::controller::{thrust, ThrustStrategy};
use geotrack_core::sim::{run, RunMode, RunSummary, SimError};
use geotrack_core::so3::{exp_so3, RotationMatrix};
use geotrack_core::telemetry::CsvWriter;
use geotrack_core::ScenarioConfig;

#[derive(Parser)]
#[command(name = "geotrack", version, about = "Geometric multirotor tracking workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-step telemetry as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the gain certificate for a scenario.
    CheckGains {
        #[arg(long)]
        config: PathBuf,
        /// Optional machine-readable key=value report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the thrust-scaling strategies over tilt error.
    ThrustSweep {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario with monitors forced on and report worst-case slacks.
    LemmaAudit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::CheckGains { config, out } => cmd_check_gains(&config, out.as_deref()),
        Command::ThrustSweep { out } => cmd_thrust_sweep(&out),
        Command::LemmaAudit { config, out } => cmd_lemma_audit(&config, &out),
    };
    ExitCode::from(code)
}

fn fail(msg: impl std::fmt::Display, code: u8) -> u8 {
    eprintln!("error: {msg}");
    code
}

fn load_setup(path: &std::path::Path) -> Result<geotrack_core::SimSetup, u8> {
    let cfg = ScenarioConfig::load(path).map_err(|e| fail(e, 1))?;
    cfg.build().map_err(|e| fail(e, 1))
}

fn print_certificate(cert: &CertificateReport) {
    println!("derived constants");
    println!("  alpha1      = {:>14.6}   alpha2      = {:>14.6}", cert.alpha1, cert.alpha2);
    println!(
        "  alpha1_proj = {:>14.6}   alpha2_proj = {:>14.6}",
        cert.alpha1_proj, cert.alpha2_proj
    );
    println!("  alpha3      = {:>14.6}   alpha4      = {:>14.6}", cert.alpha3, cert.alpha4);
    println!("  alpha5      = {:>14.6}   alpha6      = {:>14.6}", cert.alpha5, cert.alpha6);
    println!("  alpha7      = {:>14.6}   rho03       = {:>14.6}", cert.alpha7, cert.rho03);
    for (i, l) in cert.lambda.iter().enumerate() {
        print!("  lambda{}     = {:>14.6}", i + 1, l);
        if i % 2 == 1 || i == 6 {
            println!();
        } else {
            print!("   ");
        }
    }
    println!("  lambda_V    = {:>14.6}   D           = {:>14.6}", cert.lambda_v, cert.d);
    println!(
        "  D/lambda_V  = {:>14.6}   beta_bar    = {:>14.6}",
        cert.ultimate_bound, cert.beta_bar
    );
    println!(
        "  attraction region: Psi(0) < {} with |e_Omega(0)|^2 < {:.4}*(2 - Psi(0))",
        cert.roa.psi_max,
        cert.roa.omega_err_max * cert.roa.omega_err_max / 2.0
    );
    println!("gain conditions");
    for c in &cert.conditions {
        println!(
            "  [{}] {:<14} margin {:>14.6}   {}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.description
        );
    }
}

fn write_certificate_kv(cert: &CertificateReport, path: &std::path::Path) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    let kv = |name: &str, v: f64| format!("{name} = {v:.16e}\n");
    let mut s = String::new();
    s += &kv("alpha1", cert.alpha1);
    s += &kv("alpha2", cert.alpha2);
    s += &kv("alpha1_proj", cert.alpha1_proj);
    s += &kv("alpha2_proj", cert.alpha2_proj);
    s += &kv("alpha3", cert.alpha3);
    s += &kv("alpha4", cert.alpha4);
    s += &kv("alpha5", cert.alpha5);
    s += &kv("alpha6", cert.alpha6);
    s += &kv("alpha7", cert.alpha7);
    s += &kv("rho03", cert.rho03);
    for (i, l) in cert.lambda.iter().enumerate() {
        s += &kv(&format!("lambda{}", i + 1), *l);
    }
    s += &kv("lambda_v", cert.lambda_v);
    s += &kv("d", cert.d);
    s += &kv("ultimate_bound", cert.ultimate_bound);
    s += &kv("beta_bar", cert.beta_bar);
    s += &kv("e_alpha_bar_required", cert.e_alpha_bar_required);
    for c in &cert.conditions {
        s += &format!("{}_pass = {}\n", c.name, c.pass);
        s += &kv(&format!("{}_margin", c.name), c.value);
    }
    s += &format!("all_pass = {}\n", cert.all_pass());
    f.write_all(s.as_bytes())
}

fn print_summary(summary: &RunSummary) {
    println!("steps               {}", summary.steps);
    println!("final |e_x|         {:.6e}", summary.final_e_x);
    println!("max |e_x|           {:.6e}", summary.max_e_x);
    println!("max Psi(R, R_d)     {:.6e}", summary.max_psi_r_rd);
    println!("max Psi(R_d, R_c)   {:.6e}", summary.max_psi_rd_rc);
    println!("min thrust          {:.6e}", summary.min_thrust);
    println!("monitor violations  {}", summary.violation_count);
}

fn cmd_simulate(config: &std::path::Path, out: &std::path::Path) -> u8 {
    let setup = match load_setup(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let cert = compute_constants(&setup.certificate_inputs);
    if !cert.all_pass() {
        eprintln!("warning: gain certificate failed; run proceeds");
        for c in cert.failing() {
            eprintln!("  {}: margin {:.6} ({})", c.name, c.value, c.description);
        }
    }
    let file = match File::create(out) {
        Ok(f) => f,
        Err(e) => return fail(e, 1),
    };
    let mut writer = match CsvWriter::new(BufWriter::new(file)) {
        Ok(w) => w,
        Err(e) => return fail(e, 1),
    };
    let mut write_err = None;
    let result = run(&setup, |rec| {
        if write_err.is_none() {
            if let Err(e) = writer.write_record(rec) {
                write_err = Some(e);
            }
        }
    });
    if let Some(e) = write_err {
        return fail(e, 1);
    }
    match result {
        Ok(summary) => {
            print_summary(&summary);
            if setup.monitors_on && summary.violation_count > 0 {
                3
            } else {
                0
            }
        }
        Err(e @ SimError::Aborted { .. }) => fail(e, 2),
        Err(e) => fail(e, 1),
    }
}

fn cmd_check_gains(config: &std::path::Path, out: Option<&std::path::Path>) -> u8 {
    let setup = match load_setup(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let cert = compute_constants(&setup.certificate_inputs);
    print_certificate(&cert);
    if let Some(path) = out {
        if let Err(e) = write_certificate_kv(&cert, path) {
            return fail(e, 1);
        }
    }
    if cert.all_pass() {
        println!("certificate: PASS");
        0
    } else {
        let names: Vec<&str> = cert.failing().iter().map(|c| c.name).collect();
        println!("certificate: FAIL ({})", names.join(", "));
        4
    }
}

fn cmd_thrust_sweep(out: &std::path::Path) -> u8 {
    let file = match File::create(out) {
        Ok(f) => f,
        Err(e) => return fail(e, 1),
    };
    let mut w = BufWriter::new(file);
    if let Err(e) = writeln!(w, "theta_deg,lee_ratio,kar_ratio,proposed_ratio") {
        return fail(e, 1);
    }
    let f_d = Vector3::new(0.0, 0.0, 1.0);
    let r_c = RotationMatrix::identity();
    for deg in 0..=180u32 {
        let theta = (deg as f64).to_radians();
        let r = exp_so3(&Vector3::new(theta, 0.0, 0.0));
        let lee = thrust(&f_d, &r_c, &r, ThrustStrategy::Lee2010);
        let kar = thrust(&f_d, &r_c, &r, ThrustStrategy::KarMagnitude);
        let proposed = thrust(&f_d, &r_c, &r, ThrustStrategy::ProposedHalfAngle);
        if let Err(e) = writeln!(w, "{deg},{lee:.16e},{kar:.16e},{proposed:.16e}") {
            return fail(e, 1);
        }
    }
    if let Err(e) = w.flush() {
        return fail(e, 1);
    }
    0
}

fn cmd_lemma_audit(config: &std::path::Path, out: &std::path::Path) -> u8 {
    let mut setup = match load_setup(config) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if setup.run_mode != RunMode::Oracle {
        return fail("lemma-audit requires run_mode = \"oracle\"", 1);
    }
    setup.monitors_on = true;
    let summary = match run(&setup, |_| {}) {
        Ok(s) => s,
        Err(e @ SimError::Aborted { .. }) => return fail(e, 2),
        Err(e) => return fail(e, 1),
    };

    let slack = |id: MonitorId| -> f64 {
        summary
            .monitor_slacks
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, s)| *s)
            .unwrap_or(f64::INFINITY)
    };
    let lemma1 = slack(MonitorId::ForceLower).min(slack(MonitorId::ForceUpper));
    let lemma2 = slack(MonitorId::ForceGap);
    let lemma4 = slack(MonitorId::FilterVelocity)
        .min(slack(MonitorId::FilterAccelRaw))
        .min(slack(MonitorId::FilterAccelSmoothed))
        .min(slack(MonitorId::FilterAccelProjected));
    let pass = lemma1 >= -MONITOR_SLACK && lemma2 >= -MONITOR_SLACK && lemma4 >= -MONITOR_SLACK;

    let file = match File::create(out) {
        Ok(f) => f,
        Err(e) => return fail(e, 1),
    };
    let mut w = BufWriter::new(file);
    let mut report = String::new();
    report += "# minimum slack (rhs - lhs) of each audited inequality over the run\n";
    for (id, s) in &summary.monitor_slacks {
        if *id == MonitorId::LyapunovDecrease {
            continue; // not part of the force/filter audit
        }
        report += &format!("{} = {:.16e}\n", id.label(), s);
    }
    report += &format!("lemma1_worst = {lemma1:.16e}\n");
    report += &format!("lemma2_worst = {lemma2:.16e}\n");
    report += &format!("lemma4_worst = {lemma4:.16e}\n");
    report += &format!("result = {}\n", if pass { "pass" } else { "fail" });
    if let Err(e) = w.write_all(report.as_bytes()) {
        return fail(e, 1);
    }
    print!("{report}");
    if pass {
        0
    } else {
        5
    }
}
