use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::radio::{link_loss, LinkState, RadioNode};
use super::routing::{compute_routes, RoutingTable};
use crate::world::WorldModel;
use crate::Point;

pub const CONTROL_MAX_BYTES: usize = 256;
pub const DEFAULT_CHUNK_SIZE: usize = 65_536;

/// Priority order is declaration order: control preempts stream preempts bulk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageClass {
    Control,
    Stream,
    Bulk,
}

impl MessageClass {
    fn rank(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SessionId(pub u64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub class: MessageClass,
    pub source: String,
    pub destination: String,
    /// Bytes on the air; may exceed `payload.len()` for synthetic traffic.
    pub payload_size: usize,
    pub payload: Vec<u8>,
    pub enqueue_time: f64,
}

impl Message {
    pub fn new(class: MessageClass, source: &str, destination: &str, payload: Vec<u8>) -> Self {
        Self {
            class,
            source: source.into(),
            destination: destination.into(),
            payload_size: payload.len(),
            payload,
            enqueue_time: 0.0,
        }
    }

    /// Traffic that only occupies airtime.
    pub fn sized(class: MessageClass, source: &str, destination: &str, payload_size: usize) -> Self {
        Self {
            payload_size,
            ..Self::new(class, source, destination, Vec::new())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub id: MessageId,
    pub message: Message,
    pub delivered_at: f64,
    pub hops: usize,
    pub session: Option<SessionId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SendError {
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("no route from '{from}' to '{to}'")]
    NoRoute { from: String, to: String },
    #[error("control payload of {0} bytes exceeds {CONTROL_MAX_BYTES}")]
    TooLarge(usize),
    #[error("source and destination are both '{0}'")]
    SelfAddressed(String),
    #[error("chunk size must be positive")]
    ZeroChunk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Active,
    Stalled,
    Complete,
    Aborted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferSession {
    pub id: SessionId,
    pub from: String,
    pub to: String,
    pub chunk_size: usize,
    pub total_bytes: usize,
    pub chunks_total: usize,
    pub chunks_acked: usize,
    pub state: SessionState,
    pub started_at: f64,
    pub completed_at: Option<f64>,
    #[serde(skip)]
    data: Arc<Vec<u8>>,
}

impl TransferSession {
    /// The reassembled bytes once every chunk has arrived.
    pub fn received(&self) -> Option<&[u8]> {
        (self.state == SessionState::Complete).then(|| self.data.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkChange {
    pub a: String,
    pub b: String,
    pub up: bool,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBytes {
    pub from: String,
    pub to: String,
    pub bytes: f64,
    pub capacity_bytes: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub start: f64,
    pub end: f64,
    pub deliveries: Vec<Delivery>,
    pub link_changes: Vec<LinkChange>,
    /// Sessions that finished during this step.
    pub completed_sessions: Vec<SessionId>,
    pub dropped_frames: Vec<MessageId>,
    pub link_bytes: Vec<LinkBytes>,
}

struct Flight {
    msg: Message,
    at: usize,
    dst: usize,
    hops: usize,
    remaining: f64,
    /// Link the remaining byte count refers to.
    progress_on: Option<(usize, usize)>,
    session: Option<SessionId>,
}

struct Busy {
    id: MessageId,
    started: f64,
    /// Bits per second in effect when the transmission started.
    rate: f64,
}

#[derive(Default)]
struct DirLink {
    queues: [VecDeque<MessageId>; 3],
    busy: Option<Busy>,
    generation: u64,
    accounted_until: f64,
    bytes: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    TxDone { link: (usize, usize), id: MessageId, generation: u64 },
    Arrive { node: usize, id: MessageId },
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Event {
    // reversed so the max-heap pops the earliest event
    fn cmp(&self, o: &Self) -> Ordering {
        o.time.total_cmp(&self.time).then(o.seq.cmp(&self.seq))
    }
}

/// Discrete-event mesh network advanced in fixed steps. Link quality and
/// routes are re-evaluated at each step boundary; inside a step messages
/// move with fractional timing.
pub struct Network {
    nodes: Vec<RadioNode>,
    index: BTreeMap<String, usize>,
    links: BTreeMap<(usize, usize), LinkState>,
    forced_down: BTreeMap<(usize, usize), bool>,
    dir: BTreeMap<(usize, usize), DirLink>,
    routes: RoutingTable,
    flights: BTreeMap<MessageId, Flight>,
    pending: BTreeMap<usize, Vec<MessageId>>,
    sessions: BTreeMap<SessionId, TransferSession>,
    events: BinaryHeap<Event>,
    time: f64,
    next_msg: u64,
    next_session: u64,
    next_seq: u64,
    evaluated: bool,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Network {
    /// Nodes are ordered by id; indices used in routes follow that order.
    pub fn new(mut nodes: Vec<RadioNode>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut dir = BTreeMap::new();
        for a in 0..nodes.len() {
            for b in 0..nodes.len() {
                if a != b {
                    dir.insert((a, b), DirLink::default());
                }
            }
        }
        Self {
            nodes,
            index,
            links: BTreeMap::new(),
            forced_down: BTreeMap::new(),
            dir,
            routes: RoutingTable::default(),
            flights: BTreeMap::new(),
            pending: BTreeMap::new(),
            sessions: BTreeMap::new(),
            events: BinaryHeap::new(),
            time: 0.0,
            next_msg: 0,
            next_session: 0,
            next_seq: 0,
            evaluated: false,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn nodes(&self) -> &[RadioNode] {
        &self.nodes
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn set_position(&mut self, id: &str, position: Point) -> Result<(), SendError> {
        let i = self.idx(id)?;
        self.nodes[i].position = position;
        Ok(())
    }

    /// Holds a link down regardless of its loss until released.
    pub fn force_link_down(&mut self, a: &str, b: &str, down: bool) -> Result<(), SendError> {
        let k = key(self.idx(a)?, self.idx(b)?);
        if down {
            self.forced_down.insert(k, true);
        } else {
            self.forced_down.remove(&k);
        }
        Ok(())
    }

    /// Re-evaluates link quality and routes against the current node
    /// positions. Called automatically at the start of every step.
    pub fn evaluate(&mut self, world: &WorldModel) -> Vec<LinkChange> {
        let mut changes = Vec::new();
        let n = self.nodes.len();
        let mut usable = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let (loss, profile) = link_loss(world, &self.nodes[a], &self.nodes[b]);
                let forced = self.forced_down.contains_key(&(a, b));
                let up = !forced && loss <= profile.link_budget;
                let state = LinkState {
                    a: self.nodes[a].id.clone(),
                    b: self.nodes[b].id.clone(),
                    loss,
                    budget: profile.link_budget,
                    up,
                    effective_capacity: if up { profile.capacity } else { 0.0 },
                    latency: profile.base_latency,
                    forced_down: forced,
                };
                let was = self.links.get(&(a, b)).map(|l| l.up);
                if was != Some(up) {
                    changes.push(LinkChange {
                        a: state.a.clone(),
                        b: state.b.clone(),
                        up,
                        loss,
                    });
                }
                if up {
                    usable.push((a, b, loss));
                }
                self.links.insert((a, b), state);
            }
        }
        self.routes = compute_routes(n, &usable);
        self.evaluated = true;
        changes
    }

    pub fn link(&self, a: &str, b: &str) -> Option<&LinkState> {
        let k = key(self.node_index(a)?, self.node_index(b)?);
        self.links.get(&k)
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkState> {
        self.links.values()
    }

    /// Node ids along the current route, source first.
    pub fn route(&self, from: &str, to: &str) -> Option<Vec<String>> {
        let r = self.routes.get(self.node_index(from)?, self.node_index(to)?)?;
        Some(r.path.iter().map(|&i| self.nodes[i].id.clone()).collect())
    }

    pub fn session(&self, id: SessionId) -> Option<&TransferSession> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &TransferSession> {
        self.sessions.values()
    }

    /// Messages not yet delivered.
    pub fn in_flight(&self) -> usize {
        self.flights.len()
    }

    fn idx(&self, id: &str) -> Result<usize, SendError> {
        self.node_index(id).ok_or_else(|| SendError::UnknownNode(id.into()))
    }

    fn check_route(&self, src: usize, dst: usize) -> Result<(), SendError> {
        if src == dst {
            return Err(SendError::SelfAddressed(self.nodes[src].id.clone()));
        }
        if self.routes.get(src, dst).is_none() {
            return Err(SendError::NoRoute {
                from: self.nodes[src].id.clone(),
                to: self.nodes[dst].id.clone(),
            });
        }
        Ok(())
    }

    /// Queues a message at its source. It starts moving at the next step.
    pub fn send(&mut self, mut msg: Message) -> Result<MessageId, SendError> {
        let src = self.idx(&msg.source)?;
        let dst = self.idx(&msg.destination)?;
        if msg.class == MessageClass::Control && msg.payload_size > CONTROL_MAX_BYTES {
            return Err(SendError::TooLarge(msg.payload_size));
        }
        self.check_route(src, dst)?;
        msg.enqueue_time = self.time;
        Ok(self.admit(msg, src, dst, None))
    }

    fn admit(&mut self, msg: Message, src: usize, dst: usize, session: Option<SessionId>) -> MessageId {
        let id = MessageId(self.next_msg);
        self.next_msg += 1;
        self.flights.insert(
            id,
            Flight {
                remaining: msg.payload_size as f64,
                msg,
                at: src,
                dst,
                hops: 0,
                progress_on: None,
                session,
            },
        );
        self.pending.entry(src).or_default().push(id);
        id
    }

    /// Splits `data` into bulk chunks addressed `from -> to`. Chunks whose
    /// path goes down wait at their current node and resume on reconnect.
    pub fn start_transfer(&mut self, from: &str, to: &str, data: Vec<u8>, chunk_size: usize) -> Result<SessionId, SendError> {
        if chunk_size == 0 {
            return Err(SendError::ZeroChunk);
        }
        let src = self.idx(from)?;
        let dst = self.idx(to)?;
        self.check_route(src, dst)?;
        let id = SessionId(self.next_session);
        self.next_session += 1;
        let data = Arc::new(data);
        let chunks_total = data.len().div_ceil(chunk_size).max(1);
        for c in 0..chunks_total {
            let lo = (c * chunk_size).min(data.len());
            let hi = ((c + 1) * chunk_size).min(data.len());
            let mut msg = Message::sized(MessageClass::Bulk, from, to, hi - lo);
            msg.enqueue_time = self.time;
            self.admit(msg, src, dst, Some(id));
        }
        self.sessions.insert(
            id,
            TransferSession {
                id,
                from: from.into(),
                to: to.into(),
                chunk_size,
                total_bytes: data.len(),
                chunks_total,
                chunks_acked: 0,
                state: SessionState::Active,
                started_at: self.time,
                completed_at: None,
                data,
            },
        );
        Ok(id)
    }

    /// Drops every undelivered chunk of the session.
    pub fn abort_transfer(&mut self, id: SessionId) -> bool {
        let Some(s) = self.sessions.get_mut(&id) else { return false };
        if s.state == SessionState::Complete || s.state == SessionState::Aborted {
            return false;
        }
        s.state = SessionState::Aborted;
        let doomed: Vec<MessageId> = self
            .flights
            .iter()
            .filter(|(_, f)| f.session == Some(id))
            .map(|(k, _)| *k)
            .collect();
        let now = self.time;
        for m in doomed {
            self.remove_flight(m, now);
        }
        true
    }

    fn remove_flight(&mut self, id: MessageId, now: f64) {
        for (_, d) in self.dir.iter_mut() {
            if d.busy.as_ref().is_some_and(|b| b.id == id) {
                d.busy = None;
                d.generation += 1;
                d.accounted_until = now;
            }
            for q in &mut d.queues {
                q.retain(|m| *m != id);
            }
        }
        for list in self.pending.values_mut() {
            list.retain(|m| *m != id);
        }
        self.flights.remove(&id);
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        self.events.push(Event {
            time,
            seq: self.next_seq,
            kind,
        });
        self.next_seq += 1;
    }

    fn capacity(&self, link: (usize, usize)) -> f64 {
        self.links.get(&key(link.0, link.1)).map_or(0.0, |l| l.effective_capacity)
    }

    fn is_up(&self, link: (usize, usize)) -> bool {
        self.links.get(&key(link.0, link.1)).is_some_and(|l| l.up)
    }

    fn account(&mut self, link: (usize, usize), until: f64) {
        let d = self.dir.get_mut(&link).unwrap();
        if let Some(b) = &d.busy {
            let from = b.started.max(d.accounted_until);
            if until > from {
                d.bytes += (until - from) * b.rate / 8.0;
            }
        }
        d.accounted_until = until;
    }

    /// Stops the current transmission, keeping the bytes already sent.
    fn pause(&mut self, link: (usize, usize), now: f64) {
        self.account(link, now);
        let d = self.dir.get_mut(&link).unwrap();
        let Some(b) = d.busy.take() else { return };
        d.generation += 1;
        let f = self.flights.get_mut(&b.id).unwrap();
        f.remaining = (f.remaining - (now - b.started) * b.rate / 8.0).max(0.0);
        let class = f.msg.class.rank();
        insert_sorted(&mut d.queues[class], b.id);
    }

    fn try_start(&mut self, link: (usize, usize), now: f64) {
        if !self.is_up(link) {
            return;
        }
        let cap = self.capacity(link);
        let d = self.dir.get_mut(&link).unwrap();
        if d.busy.is_some() {
            return;
        }
        let Some(id) = d.queues.iter_mut().find_map(|q| q.pop_front()) else { return };
        d.generation += 1;
        d.busy = Some(Busy {
            id,
            started: now,
            rate: cap,
        });
        d.accounted_until = d.accounted_until.max(now);
        let generation = d.generation;
        let f = self.flights.get_mut(&id).unwrap();
        let done = now + f.remaining * 8.0 / cap;
        self.schedule(done, EventKind::TxDone { link, id, generation });
    }

    /// Puts a message on the queue for `link`, preempting a lower-priority
    /// transmission.
    fn enqueue_on(&mut self, link: (usize, usize), id: MessageId, now: f64, dropped: &mut Vec<MessageId>) {
        let f = self.flights.get_mut(&id).unwrap();
        if f.progress_on != Some(link) {
            f.remaining = f.msg.payload_size as f64;
            f.progress_on = Some(link);
        }
        let class = f.msg.class;
        if class == MessageClass::Stream {
            let (src, dst) = (f.msg.source.clone(), f.msg.destination.clone());
            let stale: Vec<MessageId> = self.dir[&link].queues[class.rank()]
                .iter()
                .copied()
                .filter(|m| {
                    let o = &self.flights[m].msg;
                    *m < id && o.source == src && o.destination == dst
                })
                .collect();
            for m in stale {
                self.remove_flight(m, now);
                dropped.push(m);
            }
        }
        insert_sorted(&mut self.dir.get_mut(&link).unwrap().queues[class.rank()], id);
        let busy_class = self.dir[&link].busy.as_ref().map(|b| self.flights[&b.id].msg.class);
        if busy_class.is_some_and(|b| class < b) && self.is_up(link) {
            self.pause(link, now);
        }
        self.try_start(link, now);
    }

    /// Moves held and queued messages onto the links their current routes
    /// use; messages without a route wait at their node.
    fn redistribute(&mut self, now: f64, dropped: &mut Vec<MessageId>) {
        let links: Vec<(usize, usize)> = self.dir.keys().copied().collect();
        for &link in &links {
            let busy = self.dir[&link].busy.as_ref().map(|b| b.id);
            if let Some(id) = busy {
                let f = &self.flights[&id];
                if !self.is_up(link) || self.routes.next_hop(f.at, f.dst) != Some(link.1) {
                    self.pause(link, now);
                }
            }
        }
        let mut moving: Vec<MessageId> = Vec::new();
        for &link in &links {
            let d = self.dir.get_mut(&link).unwrap();
            for q in &mut d.queues {
                let keep: VecDeque<MessageId> = q
                    .iter()
                    .copied()
                    .filter(|m| {
                        let f = &self.flights[m];
                        let stay = self.routes.next_hop(f.at, f.dst) == Some(link.1);
                        if !stay {
                            moving.push(*m);
                        }
                        stay
                    })
                    .collect();
                *q = keep;
            }
        }
        for list in self.pending.values_mut() {
            moving.append(list);
        }
        moving.sort();
        for id in moving {
            if !self.flights.contains_key(&id) {
                continue;
            }
            let f = &self.flights[&id];
            match self.routes.next_hop(f.at, f.dst) {
                Some(h) => {
                    let link = (f.at, h);
                    self.enqueue_on(link, id, now, dropped);
                }
                None => {
                    let at = f.at;
                    self.pending.entry(at).or_default().push(id);
                }
            }
        }
        for link in links {
            self.try_start(link, now);
        }
    }

    /// Advances the network by `dt` seconds.
    pub fn step(&mut self, world: &WorldModel, dt: f64) -> StepReport {
        self.step_until(world, self.time + dt)
    }

    /// Advances to absolute time `t1`. Callers with a fixed step should
    /// prefer this over `step` to avoid accumulating rounding error.
    pub fn step_until(&mut self, world: &WorldModel, t1: f64) -> StepReport {
        let t0 = self.time;
        assert!(t1 >= t0, "network time cannot go backwards");
        let dt = t1 - t0;
        let mut report = StepReport {
            start: t0,
            end: t1,
            link_changes: self.evaluate(world),
            ..Default::default()
        };
        for d in self.dir.values_mut() {
            d.bytes = 0.0;
            d.accounted_until = t0;
        }
        let mut dropped = Vec::new();
        self.redistribute(t0, &mut dropped);
        while self.events.peek().is_some_and(|e| e.time <= t1) {
            let ev = self.events.pop().unwrap();
            self.handle(ev, &mut report, &mut dropped);
        }
        let links: Vec<(usize, usize)> = self.dir.keys().copied().collect();
        for link in links {
            self.account(link, t1);
            let cap = self.capacity(link);
            let d = &self.dir[&link];
            if d.bytes > 0.0 {
                report.link_bytes.push(LinkBytes {
                    from: self.nodes[link.0].id.clone(),
                    to: self.nodes[link.1].id.clone(),
                    bytes: d.bytes,
                    capacity_bytes: cap * dt / 8.0,
                });
            }
        }
        self.time = t1;
        self.refresh_sessions();
        report.dropped_frames = dropped;
        report
    }

    fn handle(&mut self, ev: Event, report: &mut StepReport, dropped: &mut Vec<MessageId>) {
        let now = ev.time;
        match ev.kind {
            EventKind::TxDone { link, id, generation } => {
                if self.dir[&link].generation != generation {
                    return;
                }
                self.account(link, now);
                let d = self.dir.get_mut(&link).unwrap();
                d.busy = None;
                let latency = self.links[&key(link.0, link.1)].latency;
                let f = self.flights.get_mut(&id).unwrap();
                f.remaining = 0.0;
                self.schedule(now + latency, EventKind::Arrive { node: link.1, id });
                self.try_start(link, now);
            }
            EventKind::Arrive { node, id } => {
                let Some(f) = self.flights.get_mut(&id) else { return };
                f.at = node;
                f.hops += 1;
                f.progress_on = None;
                if node == f.dst {
                    let f = self.flights.remove(&id).unwrap();
                    if let Some(sid) = f.session {
                        if let Some(s) = self.sessions.get_mut(&sid) {
                            s.chunks_acked += 1;
                            if s.chunks_acked == s.chunks_total {
                                s.state = SessionState::Complete;
                                s.completed_at = Some(now);
                                report.completed_sessions.push(sid);
                            }
                        }
                    }
                    report.deliveries.push(Delivery {
                        id,
                        message: f.msg,
                        delivered_at: now,
                        hops: f.hops,
                        session: f.session,
                    });
                    return;
                }
                match self.routes.next_hop(node, f.dst) {
                    Some(h) => self.enqueue_on((node, h), id, now, dropped),
                    None => self.pending.entry(node).or_default().push(id),
                }
            }
        }
    }

    fn refresh_sessions(&mut self) {
        let mut stalled: BTreeMap<SessionId, bool> = BTreeMap::new();
        for f in self.flights.values() {
            if let Some(sid) = f.session {
                let moving = f.progress_on.is_some_and(|l| self.is_up(l));
                let e = stalled.entry(sid).or_insert(true);
                *e &= !moving && self.routes.get(f.at, f.dst).is_none();
            }
        }
        for (sid, s) in &mut self.sessions {
            if matches!(s.state, SessionState::Active | SessionState::Stalled) {
                s.state = if stalled.get(sid).copied().unwrap_or(false) {
                    SessionState::Stalled
                } else {
                    SessionState::Active
                };
            }
        }
    }
}

fn insert_sorted(q: &mut VecDeque<MessageId>, id: MessageId) {
    let pos = q.partition_point(|m| *m < id);
    q.insert(pos, id);
}
