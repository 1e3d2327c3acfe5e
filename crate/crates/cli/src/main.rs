#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gridmodel::config::GridConfig;
use gridmodel::emtsim::{measure_admittance, simulate, InjectionSpec, MeasureFrame, MeasureTarget, SimScenario};
use gridmodel::sysmodel::{
    build_default_model, bus_spectrum, linspace, mode_near_frequency, parameter_sweep, participation, system_poles,
    FrequencySample, PoleRecord,
};
use gridmodel::system::System;
use gridmodel::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gridmodel", version, about = "Small-signal and time-domain analysis of generator-converter grids")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the power flow and write bus phasors and the resolved configuration as JSON.
    Powerflow {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Closed-loop poles with mode-group labels.
    Poles {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Bus admittance spectrum of the closed loop.
    Spectrum {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long)]
        bus: usize,
        #[arg(long, allow_negative_numbers = true)]
        fmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        fmax: f64,
        #[arg(long)]
        points: usize,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Per-bus participation in the least damped mode near a frequency.
    Participation {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long = "freq-hz")]
        freq_hz: f64,
        /// Search half-width around the frequency.
        #[arg(long = "tol-hz", default_value_t = 5.0)]
        tol_hz: f64,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Poles over a linear sweep of one or more parameters (comma-separated JSON pointers).
    Sweep {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Time-domain simulation of a scenario.
    Simulate {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(short = 's', long = "scenario")]
        scenario: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Admittance measurement by small-signal injection in the simulator.
    Measure {
        #[arg(short = 'c', long = "config")]
        config: PathBuf,
        #[arg(long)]
        bus: usize,
        #[arg(long, value_enum)]
        frame: Frame,
        #[arg(long, default_value_t = 1e-3)]
        amp: f64,
        /// Comma-separated signed frequencies in Hz.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        freqs: Vec<f64>,
        /// What to measure. Defaults to the closed-loop bus for the steady
        /// frame and to the machine alone for the swing frame.
        #[arg(long, value_enum)]
        target: Option<Target>,
        #[arg(long = "settle-cycles", default_value_t = 10)]
        settle_cycles: u32,
        #[arg(long = "measure-cycles", default_value_t = 10)]
        measure_cycles: u32,
        /// Remove the one-step lag of the sampled current.
        #[arg(long = "compensate-delay")]
        compensate_delay: bool,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Frame {
    Steady,
    Swing,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Bus,
    Machine,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = json!({ "code": e.code(), "message": e.to_string(), "path": e.path() });
            eprintln!("{obj}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<GridConfig, Error> {
    GridConfig::load(path)
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn num(x: f64) -> String {
    // shortest representation that round-trips
    format!("{x:?}")
}

const SPECTRUM_HEADER: [&str; 9] =
    ["freq_hz", "ypp_re", "ypp_im", "ypm_re", "ypm_im", "ymp_re", "ymp_im", "ymm_re", "ymm_im"];

fn spectrum_rows(samples: &[FrequencySample]) -> Vec<Vec<String>> {
    samples
        .iter()
        .map(|s| {
            let mut r = vec![num(s.freq_hz)];
            for y in s.y {
                r.push(num(y.re));
                r.push(num(y.im));
            }
            r
        })
        .collect()
}

const POLE_HEADER: [&str; 5] = ["re_rad_s", "im_rad_s", "freq_hz", "damping_ratio", "group"];

fn pole_fields(p: &PoleRecord) -> Vec<String> {
    vec![
        num(p.value.re),
        num(p.value.im),
        num(p.frequency_hz),
        num(p.damping_ratio),
        p.group.map(|g| g.as_str().to_string()).unwrap_or_default(),
    ]
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Powerflow { config, out } => {
            let cfg = load(&config)?;
            let sys = System::build(&cfg)?;
            let buses: Vec<_> = (0..sys.n_buses())
                .map(|k| {
                    let v = sys.op.v[k];
                    let s = sys.op.power(k);
                    json!({
                        "bus": k + 1,
                        "v_re": v.re, "v_im": v.im,
                        "v_abs": v.norm(), "theta_deg": v.arg().to_degrees(),
                        "p": s.re, "q": s.im,
                    })
                })
                .collect();
            let doc = json!({
                "iterations": sys.op.iterations,
                "mismatch": sys.op.mismatch,
                "buses": buses,
                "config": cfg.to_value(),
            });
            let text = serde_json::to_string_pretty(&doc).map_err(io)? + "\n";
            std::fs::write(&out, text).map_err(io)
        }
        Command::Poles { config, out } => {
            let cfg = load(&config)?;
            let model = build_default_model(&System::build(&cfg)?)?;
            let poles = system_poles(&model, &cfg.solver.bands)?;
            let rows: Vec<Vec<String>> = poles
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut r = vec![i.to_string()];
                    r.extend(pole_fields(p));
                    r
                })
                .collect();
            let mut header = vec!["index"];
            header.extend(POLE_HEADER);
            write_csv(&out, &header, &rows)
        }
        Command::Spectrum { config, bus, fmin, fmax, points, out } => {
            if points == 0 || !(fmax >= fmin) {
                return Err(Error::InvalidParameter("need points > 0 and fmax >= fmin".into()));
            }
            let cfg = load(&config)?;
            let model = build_default_model(&System::build(&cfg)?)?;
            let samples = bus_spectrum(&model, bus, &linspace(fmin, fmax, points))?;
            write_csv(&out, &SPECTRUM_HEADER, &spectrum_rows(&samples))
        }
        Command::Participation { config, freq_hz, tol_hz, out } => {
            let cfg = load(&config)?;
            let model = build_default_model(&System::build(&cfg)?)?;
            let mode = mode_near_frequency(&model.eigenvalues()?, freq_hz, tol_hz)?;
            let parts = participation(&model, mode, cfg.solver.eig_tol)?;
            let rows: Vec<Vec<String>> =
                parts.iter().map(|(bus, p)| vec![bus.to_string(), num(*p), num(mode.re), num(mode.im)]).collect();
            write_csv(&out, &["bus", "participation", "mode_re_rad_s", "mode_im_rad_s"], &rows)
        }
        Command::Sweep { config, param, from, to, points, out } => {
            if points == 0 {
                return Err(Error::InvalidParameter("need points > 0".into()));
            }
            let cfg = load(&config)?;
            // reject a bad path before sweeping
            cfg.with_parameter(&param, cfg.parameter(param.split(',').next().unwrap_or(""))?)?;
            let pts = parameter_sweep(&cfg, &param, &linspace(from, to, points), None);
            let mut rows = Vec::new();
            for pt in &pts {
                match &pt.poles {
                    Ok(poles) => {
                        for (i, p) in poles.iter().enumerate() {
                            let mut r = vec![num(pt.value), i.to_string()];
                            r.extend(pole_fields(p));
                            r.push(String::new());
                            rows.push(r);
                        }
                    }
                    Err(e) => {
                        let mut r = vec![num(pt.value), String::new()];
                        r.extend(std::iter::repeat_n(String::new(), POLE_HEADER.len()));
                        r.push(e.code().to_string());
                        rows.push(r);
                    }
                }
            }
            let mut header = vec!["value", "index"];
            header.extend(POLE_HEADER);
            header.push("error");
            write_csv(&out, &header, &rows)
        }
        Command::Simulate { config, scenario, out } => {
            let cfg = load(&config)?;
            let text = std::fs::read_to_string(&scenario).map_err(io)?;
            let sc = SimScenario::from_json_str(&text)?;
            let ts = simulate(&cfg, &sc)?;
            let header: Vec<&str> = ts.columns.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = ts.rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()).collect();
            write_csv(&out, &header, &rows)
        }
        Command::Measure {
            config,
            bus,
            frame,
            amp,
            freqs,
            target,
            settle_cycles,
            measure_cycles,
            compensate_delay,
            out,
        } => {
            let cfg = load(&config)?;
            let frame = match frame {
                Frame::Steady => MeasureFrame::Steady,
                Frame::Swing => MeasureFrame::Swing,
            };
            let target = match (target, frame) {
                (Some(Target::Bus), _) | (None, MeasureFrame::Steady) => MeasureTarget::Bus,
                (Some(Target::Machine), _) | (None, MeasureFrame::Swing) => MeasureTarget::Machine,
            };
            let mut spec = InjectionSpec::new(bus, target, frame, freqs);
            spec.amplitude = amp;
            spec.settle_cycles = settle_cycles as f64;
            spec.measure_cycles = measure_cycles as f64;
            spec.compensate_delay = compensate_delay;
            let samples = measure_admittance(&cfg, &spec)?;
            write_csv(&out, &SPECTRUM_HEADER, &spectrum_rows(&samples))
        }
    }
}
