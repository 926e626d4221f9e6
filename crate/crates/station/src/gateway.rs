//! Live websocket gateway: the simulation runs in its own task, snapshots
//! are broadcast to every client and commands flow back through a channel.

use std::net::SocketAddr;
use std::time::Duration;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use inspect_core::fleet::{OperatorCommand, Simulation};
use inspect_core::scenario::Scenario;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};

use crate::protocol::{parse_client_text, Hello, ServerFrame, PROTOCOL_VERSION};
use crate::runner::RunError;
use crate::script::{OperatorScript, ScriptRunner, ScriptStatus};
use crate::snapshot::SnapshotStream;

#[derive(Clone, Debug)]
pub struct GatewayConfig {
    /// Sim seconds per wall second; 0 runs as fast as possible.
    pub realtime_factor: f64,
    pub snapshot_period: f64,
    /// Stop stepping at this sim time; clients stay connected.
    pub time_cap: f64,
    /// Drive the scenario's operator script alongside live commands.
    pub run_script: bool,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            realtime_factor: 1.0,
            snapshot_period: 0.1,
            time_cap: f64::INFINITY,
            run_script: false,
        }
    }
}

enum Request {
    Command(OperatorCommand, oneshot::Sender<Result<(), String>>),
    Join(oneshot::Sender<(Hello, String)>),
}

#[derive(Clone)]
struct AppState {
    requests: mpsc::Sender<Request>,
    frames: broadcast::Sender<String>,
}

/// Serves `/ws` on `listener` until the process ends.
pub async fn serve(listener: TcpListener, scenario: Scenario, config: GatewayConfig) -> Result<(), RunError> {
    let app = router(scenario, config)?;
    axum::serve(listener, app).await?;
    Ok(())
}

/// Binds `addr`, returning the bound address and the server future.
pub async fn bind(
    addr: SocketAddr,
    scenario: Scenario,
    config: GatewayConfig,
) -> Result<(SocketAddr, impl std::future::Future<Output = Result<(), RunError>>), RunError> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((local, serve(listener, scenario, config)))
}

pub fn router(scenario: Scenario, config: GatewayConfig) -> Result<Router, RunError> {
    let script = if config.run_script {
        Some(OperatorScript::parse(scenario.operator_script.as_deref().unwrap_or(&[]))?)
    } else {
        None
    };
    let sim = Simulation::new(scenario)?;
    let (req_tx, req_rx) = mpsc::channel(64);
    let (frames, _) = broadcast::channel(256);
    tokio::spawn(sim_loop(sim, script.map(ScriptRunner::new), config, req_rx, frames.clone()));
    let state = AppState {
        requests: req_tx,
        frames,
    };
    Ok(Router::new().route("/ws", get(upgrade)).with_state(state))
}

fn hello(sim: &Simulation) -> Hello {
    Hello {
        schema_version: PROTOCOL_VERSION,
        scenario: sim.scenario().name.clone(),
        robots: sim.robots().iter().map(|r| r.id().to_string()).collect(),
        base_station: sim.scenario().base_station.id.clone(),
    }
}

async fn sim_loop(
    mut sim: Simulation,
    mut script: Option<ScriptRunner>,
    config: GatewayConfig,
    mut requests: mpsc::Receiver<Request>,
    frames: broadcast::Sender<String>,
) {
    let mut stream = SnapshotStream::new();
    let snapshot_every = (config.snapshot_period / sim.dt()).round().max(1.0) as u64;
    let tick = (config.realtime_factor > 0.0).then(|| Duration::from_secs_f64(sim.dt() / config.realtime_factor));
    let mut interval = tick.map(|d| {
        let mut i = tokio::time::interval(d);
        i.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        i
    });
    loop {
        while let Ok(req) = requests.try_recv() {
            handle(&mut sim, &stream, req);
        }
        let running = sim.time() < config.time_cap - 1e-9 && sim.failure().is_none();
        if !running {
            match requests.recv().await {
                Some(req) => handle(&mut sim, &stream, req),
                None => return,
            }
            continue;
        }
        if let Some(runner) = script.as_mut() {
            runner.before_step(&mut sim);
            if !matches!(runner.status(&sim, false), ScriptStatus::Running) {
                script = None;
            }
        }
        let events = sim.step();
        if let Some(runner) = script.as_mut() {
            runner.observe(&events);
        }
        for e in &events {
            let _ = frames.send(ServerFrame::Event(e.clone()).to_text());
        }
        stream.record_events(&events);
        if sim.step_index() % snapshot_every == 0 {
            let _ = frames.send(ServerFrame::Snapshot(Box::new(stream.snapshot(&sim))).to_text());
        }
        match interval.as_mut() {
            Some(i) => {
                i.tick().await;
            }
            None => tokio::task::yield_now().await,
        }
    }
}

fn handle(sim: &mut Simulation, stream: &SnapshotStream, req: Request) {
    match req {
        Request::Command(cmd, reply) => {
            let _ = reply.send(sim.submit(cmd).map_err(|e| e.to_string()));
        }
        Request::Join(reply) => {
            let full = ServerFrame::Snapshot(Box::new(stream.full_snapshot(sim))).to_text();
            let _ = reply.send((hello(sim), full));
        }
    }
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state))
}

async fn client(socket: WebSocket, state: AppState) {
    let (mut tx, mut rx) = socket.split();
    // Subscribe before joining so no delta after the full snapshot is lost.
    let mut frames = state.frames.subscribe();
    let (join_tx, join_rx) = oneshot::channel();
    if state.requests.send(Request::Join(join_tx)).await.is_err() {
        return;
    }
    let Ok((hello, full)) = join_rx.await else {
        return;
    };
    if tx.send(WsMessage::text(ServerFrame::Hello(hello).to_text())).await.is_err()
        || tx.send(WsMessage::text(full)).await.is_err()
    {
        return;
    }
    loop {
        tokio::select! {
            frame = frames.recv() => match frame {
                Ok(text) => {
                    if tx.send(WsMessage::text(text)).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    let msg = ServerFrame::error(format!("client lagged; {n} frames dropped"), None);
                    if tx.send(WsMessage::text(msg.to_text())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = rx.next() => {
                let reply = match incoming {
                    Some(Ok(WsMessage::Text(text))) => match parse_client_text(text.as_str()) {
                        Ok(cmd) => {
                            let (r_tx, r_rx) = oneshot::channel();
                            if state.requests.send(Request::Command(cmd, r_tx)).await.is_err() {
                                return;
                            }
                            match r_rx.await {
                                Ok(Ok(())) => None,
                                Ok(Err(reason)) => Some(ServerFrame::error(reason, Some(text.as_str()))),
                                Err(_) => return,
                            }
                        }
                        Err(e) => Some(ServerFrame::error(e.to_string(), Some(text.as_str()))),
                    },
                    Some(Ok(WsMessage::Binary(_))) => Some(ServerFrame::error("binary frames are not accepted", None)),
                    Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => None,
                };
                if let Some(frame) = reply {
                    if tx.send(WsMessage::text(frame.to_text())).await.is_err() {
                        return;
                    }
                }
            }
        }
    }
}
