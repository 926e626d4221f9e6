use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use inspect_core::fleet::MissionLog;
use inspect_core::registration::decode_map;
use inspect_station::gateway::{self, GatewayConfig};
use inspect_station::render::{render_map, trajectories_from_log, RenderStyle};
use inspect_station::replay::replay;
use inspect_station::{exit, load_scenario, run_scenario, Outcome, RunOptions};

#[derive(Parser)]
#[command(name = "inspect-sim", version, about = "Multi-robot inspection mission simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario headless with its operator script.
    Run {
        /// Scenario JSON file, or `demo_site` for the bundled site.
        #[arg(long, default_value = "demo_site")]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 900.0)]
        time_cap: f64,
        #[arg(long)]
        no_render: bool,
    },
    /// Serve a live scenario to operator consoles over a websocket at /ws.
    Serve {
        #[arg(long, default_value = "demo_site")]
        scenario: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Sim seconds per wall second; 0 runs unthrottled.
        #[arg(long, default_value_t = 1.0)]
        realtime_factor: f64,
        /// Also execute the scenario's operator script.
        #[arg(long)]
        run_script: bool,
    },
    /// Render an exported map (and optionally trajectories) to PNG.
    Render {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value = "map.png")]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        pixels_per_meter: f64,
    },
    /// Re-execute a mission log and check it reproduces byte for byte.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Write the regenerated log here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Run {
            scenario,
            seed,
            out,
            time_cap,
            no_render,
        } => run(scenario, seed, out, time_cap, !no_render),
        Command::Serve {
            scenario,
            addr,
            realtime_factor,
            run_script,
        } => serve(scenario, addr, realtime_factor, run_script),
        Command::Render {
            map,
            log,
            out,
            pixels_per_meter,
        } => render(map, log, out, pixels_per_meter),
        Command::Replay { log, out } => replay_log(log, out),
    };
    ExitCode::from(code as u8)
}

fn run(scenario: PathBuf, seed: Option<u64>, out: PathBuf, time_cap: f64, render: bool) -> i32 {
    let scenario = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::INVALID_SCENARIO;
        }
    };
    let options = RunOptions {
        seed,
        time_cap,
        out_dir: Some(out),
        render,
        ..RunOptions::default()
    };
    let result = match run_scenario(scenario, &options, |_| {}) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let sim = &result.simulation;
    println!("outcome: {:?}", result.outcome);
    println!("phase: {} at t={:.2}s", sim.phase(), sim.time());
    for (robot, d) in &result.metrics.distance_per_robot {
        println!("distance {robot}: {d:.1} m");
    }
    println!("collisions: {}", result.metrics.collisions);
    println!("map points: {}", sim.unified_map().len());
    for r in &result.rejections {
        println!("rejected: {r}");
    }
    for a in &result.artifacts {
        println!("wrote {}", a.display());
    }
    println!("digest: {}", result.digest);
    if let Outcome::Failed(reason) = &result.outcome {
        eprintln!("mission failed: {reason}");
    }
    result.outcome.exit_code()
}

fn serve(scenario: PathBuf, addr: SocketAddr, realtime_factor: f64, run_script: bool) -> i32 {
    let scenario = match load_scenario(&scenario) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::INVALID_SCENARIO;
        }
    };
    let config = GatewayConfig {
        realtime_factor,
        run_script,
        ..GatewayConfig::default()
    };
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    let result = rt.block_on(async move {
        let (local, server) = gateway::bind(addr, scenario, config).await?;
        println!("listening on ws://{local}/ws");
        tokio::select! {
            r = server => r,
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    });
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn render(map: PathBuf, log: Option<PathBuf>, out: PathBuf, pixels_per_meter: f64) -> i32 {
    let go = || -> Result<(), String> {
        let bytes = std::fs::read(&map).map_err(|e| format!("{}: {e}", map.display()))?;
        let map = decode_map(&bytes).map_err(|e| e.to_string())?;
        let trajectories = match log {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                trajectories_from_log(&MissionLog::from_ndjson(&text).map_err(|e| e.to_string())?)
            }
            None => Vec::new(),
        };
        let style = RenderStyle {
            pixels_per_meter,
            ..RenderStyle::default()
        };
        render_map(&map, &trajectories, &style).save(&out).map_err(|e| e.to_string())
    };
    match go() {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit::MISSION_FAILURE
        }
    }
}

fn replay_log(log: PathBuf, out: Option<PathBuf>) -> i32 {
    let text = match std::fs::read_to_string(&log) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", log.display());
            return exit::INVALID_SCENARIO;
        }
    };
    match replay(&text) {
        Ok(r) => {
            if let Some(p) = out {
                if let Err(e) = std::fs::write(&p, &r.log_ndjson) {
                    eprintln!("error: {}: {e}", p.display());
                    return exit::MISSION_FAILURE;
                }
            }
            println!("digest: {}", r.digest);
            println!("identical: {}", r.identical);
            if r.identical {
                exit::OK
            } else {
                exit::MISSION_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::INVALID_SCENARIO
        }
    }
}
