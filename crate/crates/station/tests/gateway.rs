use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use inspect_core::fleet::{OperatorCommand, SimEvent};
use inspect_core::registration::encode_map;
use inspect_core::scenario::Scenario;
use inspect_station::gateway::{bind, GatewayConfig};
use inspect_station::protocol::{ClientFrame, ServerFrame, PROTOCOL_VERSION};
use inspect_station::snapshot::MapReplica;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(config: GatewayConfig) -> String {
    let (addr, server) = bind("127.0.0.1:0".parse().unwrap(), Scenario::demo_site(), config).await.unwrap();
    tokio::spawn(server);
    format!("ws://{addr}/ws")
}

async fn next_frame(ws: &mut Socket) -> ServerFrame {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("frame within 10 s")
            .expect("socket open")
            .unwrap();
        if let Message::Text(text) = msg {
            return serde_json::from_str(text.as_str()).expect("server frame parses");
        }
    }
}

/// Reads frames until `pick` accepts one.
async fn wait_for<T>(ws: &mut Socket, mut pick: impl FnMut(ServerFrame) -> Option<T>) -> T {
    for _ in 0..5000 {
        if let Some(v) = pick(next_frame(ws).await) {
            return v;
        }
    }
    panic!("expected frame never arrived");
}

async fn send(ws: &mut Socket, cmd: &OperatorCommand) {
    let text = serde_json::to_string(&ClientFrame::from_command(cmd)).unwrap();
    ws.send(Message::text(text)).await.unwrap();
}

fn fast() -> GatewayConfig {
    GatewayConfig {
        realtime_factor: 20.0,
        ..GatewayConfig::default()
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn join_gets_hello_then_full_snapshot() {
    let url = start(fast()).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    match next_frame(&mut ws).await {
        ServerFrame::Hello(h) => {
            assert_eq!(h.schema_version, PROTOCOL_VERSION);
            assert_eq!(h.scenario, "demo_site");
            assert_eq!(h.robots, ["warthog", "hd2"]);
            assert_eq!(h.base_station, "base");
        }
        other => panic!("expected hello, got {other:?}"),
    }
    match next_frame(&mut ws).await {
        ServerFrame::Snapshot(s) => {
            assert_eq!(s.robots.len(), 2);
            assert!(s.map_deltas.iter().all(|d| d.reset && d.start_index == 0));
        }
        other => panic!("expected snapshot, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn velocity_command_is_applied_and_moves_the_robot() {
    let url = start(fast()).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    let start_x = wait_for(&mut ws, |f| match f {
        ServerFrame::Snapshot(s) => s.robots.iter().find(|r| r.robot_id == "warthog").map(|r| r.estimate.map(|e| e.x)),
        _ => None,
    })
    .await;
    let cmd = OperatorCommand::CmdVel {
        robot_id: "warthog".into(),
        v: 1.0,
        omega: 0.0,
        goal_heading: None,
    };
    for _ in 0..10 {
        send(&mut ws, &cmd).await;
    }
    wait_for(&mut ws, |f| match f {
        ServerFrame::Event(SimEvent::CommandApplied { command }) if command == cmd => Some(()),
        _ => None,
    })
    .await;
    let moved = wait_for(&mut ws, |f| match f {
        ServerFrame::Snapshot(s) => {
            let r = s.robots.iter().find(|r| r.robot_id == "warthog")?;
            let x = r.estimate?.x;
            (x > start_x.unwrap_or(0.0) + 0.05).then_some(x)
        }
        _ => None,
    })
    .await;
    assert!(moved.is_finite());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn bad_input_gets_error_frames() {
    let url = start(fast()).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    next_frame(&mut ws).await;

    ws.send(Message::text("{not json")).await.unwrap();
    let err = wait_for(&mut ws, |f| match f {
        ServerFrame::Error(e) => Some(e),
        _ => None,
    })
    .await;
    assert_eq!(err.input.as_deref(), Some("{not json"));

    // Legal frame, wrong mission phase.
    send(
        &mut ws,
        &OperatorCommand::RelocGuess {
            robot_id: "hd2".into(),
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        },
    )
    .await;
    let err = wait_for(&mut ws, |f| match f {
        ServerFrame::Error(e) => Some(e),
        _ => None,
    })
    .await;
    assert!(err.message.contains("wrong phase"), "{}", err.message);

    ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
    let err = wait_for(&mut ws, |f| match f {
        ServerFrame::Error(e) => Some(e),
        _ => None,
    })
    .await;
    assert!(err.message.contains("binary"));

    // The session survives all of it.
    wait_for(&mut ws, |f| matches!(f, ServerFrame::Snapshot(_)).then_some(())).await;
}

/// Rebuilds maps from the stream until snapshot `seq` has been applied.
async fn replica_at(ws: &mut Socket, replica: &mut MapReplica, seq: u64) {
    loop {
        if let ServerFrame::Snapshot(s) = next_frame(ws).await {
            replica.apply_snapshot(&s).unwrap();
            if s.seq >= seq {
                assert_eq!(s.seq, seq);
                return;
            }
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn late_joiner_rebuilds_the_same_map() {
    let config = GatewayConfig {
        realtime_factor: 40.0,
        run_script: true,
        ..GatewayConfig::default()
    };
    let url = start(config).await;
    let (mut early, _) = connect_async(&url).await.unwrap();
    let mut a = MapReplica::default();
    replica_at(&mut early, &mut a, 30).await;

    let (mut late, _) = connect_async(&url).await.unwrap();
    let mut b = MapReplica::default();
    replica_at(&mut early, &mut a, 80).await;
    replica_at(&mut late, &mut b, 80).await;

    let ma = a.map("warthog").expect("early replica has the mapping robot");
    let mb = b.map("warthog").expect("late replica has the mapping robot");
    assert!(ma.len() > 100, "{} points", ma.len());
    assert_eq!(encode_map(ma), encode_map(mb));
}
