use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use auralis_core::engine::{gain_channel, stats_channel, Engine, EngineConfig, StatsReceiver};
use auralis_core::sir_model::SirSet;

use crate::backend::{spawn_audio, AudioBackend};
use crate::control::ControlPlane;
use crate::error::{Result, ServiceError};
use crate::osc::{encode, EmitMode, GainEmitter};
use crate::protocol::{CounterState, GridState, PeakState, StateSnapshot};
use crate::ws::WsHub;

pub const DEFAULT_OSC_PORT: u16 = 9000;
pub const DEFAULT_WS_PORT: u16 = 9001;
pub const SNAPSHOT_PERIOD: Duration = Duration::from_millis(50);
const RECV_TIMEOUT: Duration = Duration::from_millis(2);

pub struct ServeConfig {
    pub engine: EngineConfig,
    pub osc_addr: SocketAddr,
    pub osc_out: Option<SocketAddr>,
    pub ws_addr: SocketAddr,
    pub emit_mode: EmitMode,
    pub snapshot_period: Duration,
}

impl ServeConfig {
    pub fn new(engine: EngineConfig) -> Self {
        Self {
            engine,
            osc_addr: SocketAddr::from(([0, 0, 0, 0], DEFAULT_OSC_PORT)),
            osc_out: None,
            ws_addr: SocketAddr::from(([0, 0, 0, 0], DEFAULT_WS_PORT)),
            emit_mode: EmitMode::Native,
            snapshot_period: SNAPSHOT_PERIOD,
        }
    }
}

/// A running service: one control thread and one audio thread.
pub struct ServiceHandle {
    osc_addr: SocketAddr,
    ws_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    control: JoinHandle<()>,
    audio: JoinHandle<Engine>,
}

impl ServiceHandle {
    pub fn osc_addr(&self) -> SocketAddr {
        self.osc_addr
    }

    pub fn ws_addr(&self) -> SocketAddr {
        self.ws_addr
    }

    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    /// Stops both threads and returns the engine.
    pub fn shutdown(self) -> Engine {
        self.stop.store(true, Ordering::Relaxed);
        self.wait()
    }

    /// Waits until the stop flag is set elsewhere.
    pub fn wait(self) -> Engine {
        let _ = self.control.join();
        self.audio.join().expect("audio thread panicked")
    }
}

/// Binds the control ports, builds the graph and starts both threads.
pub fn start(sirset: &SirSet, cfg: ServeConfig, backend: Box<dyn AudioBackend>) -> Result<ServiceHandle> {
    let udp = UdpSocket::bind(cfg.osc_addr).map_err(|source| ServiceError::Bind {
        what: "OSC",
        addr: cfg.osc_addr,
        source,
    })?;
    udp.set_read_timeout(Some(RECV_TIMEOUT))?;
    let hub = WsHub::bind(cfg.ws_addr).map_err(|source| ServiceError::Bind {
        what: "WebSocket",
        addr: cfg.ws_addr,
        source,
    })?;
    let osc_addr = udp.local_addr()?;
    let ws_addr = hub.local_addr()?;

    let mut engine = Engine::build(sirset, &cfg.engine)?;
    let positions = sirset.grid().position_count();
    let (gains_tx, gains_rx) = gain_channel(positions);
    let (stats_tx, stats_rx) = stats_channel();
    engine.connect_control(gains_rx)?;
    engine.connect_stats(stats_tx);
    let emitter = cfg.osc_out.map(|_| GainEmitter::new(cfg.emit_mode, positions));
    let control = ControlPlane::new(*sirset.grid(), cfg.engine.activation, gains_tx, emitter)?;

    let stop = Arc::new(AtomicBool::new(false));
    let audio = spawn_audio(engine, backend, stop.clone())?;
    let loop_state = ControlLoop {
        udp,
        hub,
        control,
        stats: stats_rx,
        osc_out: cfg.osc_out,
        snapshot_period: cfg.snapshot_period,
        stop: stop.clone(),
    };
    let control = std::thread::Builder::new()
        .name("auralis-control".into())
        .spawn(move || loop_state.run())?;
    tracing::info!(%osc_addr, %ws_addr, "service started");
    Ok(ServiceHandle {
        osc_addr,
        ws_addr,
        stop,
        control,
        audio,
    })
}

struct ControlLoop {
    udp: UdpSocket,
    hub: WsHub,
    control: ControlPlane,
    stats: StatsReceiver,
    osc_out: Option<SocketAddr>,
    snapshot_period: Duration,
    stop: Arc<AtomicBool>,
}

impl ControlLoop {
    fn run(mut self) {
        let mut buf = vec![0u8; rosc::decoder::MTU];
        let mut next_snapshot = Instant::now();
        while !self.stop.load(Ordering::Relaxed) {
            match self.udp.recv_from(&mut buf) {
                Ok((n, _)) => {
                    self.control.handle_datagram(&buf[..n]);
                }
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
                Err(e) => tracing::warn!(%e, "OSC receive failed"),
            }
            for pose in self.hub.poll() {
                self.control.apply_message(pose);
            }
            self.send_outbound();
            if Instant::now() >= next_snapshot {
                let text = self.snapshot().to_json();
                self.hub.broadcast(&text);
                next_snapshot += self.snapshot_period;
            }
        }
    }

    fn send_outbound(&mut self) {
        let msgs = self.control.take_outbound();
        let Some(peer) = self.osc_out else { return };
        for msg in msgs {
            let bytes = encode(&rosc::OscPacket::Message(msg));
            if let Err(e) = self.udp.send_to(&bytes, peer) {
                tracing::warn!(%e, %peer, "OSC send failed");
            }
        }
    }

    fn snapshot(&mut self) -> StateSnapshot {
        let stats = self.stats.latest();
        StateSnapshot {
            pose: self.control.pose().into(),
            active: self.control.active(),
            gains: StateSnapshot::gain_entries(self.control.gains()),
            peak: PeakState {
                left: stats.peak_l,
                right: stats.peak_r,
            },
            blocks: stats.blocks,
            grid: GridState::from(self.control.grid()),
            counters: CounterState::new(self.control.counters(), self.hub.invalid_count()),
        }
    }
}
