//! Minimal WebSocket broadcast hub driven from the control loop.

use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::time::Duration;

use tungstenite::{Message, WebSocket};

use crate::osc::PoseMessage;
use crate::protocol::ClientMessage;

const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(2);

pub struct WsHub {
    listener: TcpListener,
    clients: Vec<WebSocket<TcpStream>>,
    invalid: u64,
}

fn would_block(err: &tungstenite::Error) -> bool {
    matches!(err, tungstenite::Error::Io(e) if e.kind() == ErrorKind::WouldBlock)
}

impl WsHub {
    pub fn bind(addr: SocketAddr) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(Self {
            listener,
            clients: Vec::new(),
            invalid: 0,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    /// Text frames that were not valid pose messages.
    pub fn invalid_count(&self) -> u64 {
        self.invalid
    }

    /// Accepts pending connections and drains inbound frames. Returns the
    /// valid poses in arrival order.
    pub fn poll(&mut self) -> Vec<PoseMessage> {
        self.accept_pending();
        let mut poses = Vec::new();
        let mut invalid = 0;
        self.clients.retain_mut(|ws| loop {
            match ws.read() {
                Ok(Message::Text(text)) => match ClientMessage::parse(text.as_str()) {
                    Some(p) => poses.push(p),
                    None => invalid += 1,
                },
                Ok(Message::Close(_)) => return false,
                Ok(_) => {}
                Err(e) if would_block(&e) => return true,
                Err(e) => {
                    tracing::debug!(%e, "dropping websocket client");
                    return false;
                }
            }
        });
        self.invalid += invalid;
        poses
    }

    pub fn broadcast(&mut self, text: &str) {
        self.clients.retain_mut(|ws| match ws.send(Message::text(text)) {
            Ok(()) => true,
            Err(e) if would_block(&e) => true,
            Err(e) => {
                tracing::debug!(%e, "dropping websocket client");
                false
            }
        });
    }

    fn accept_pending(&mut self) {
        loop {
            match self.listener.accept() {
                Ok((stream, peer)) => match handshake(stream) {
                    Ok(ws) => {
                        tracing::info!(%peer, "websocket client connected");
                        self.clients.push(ws);
                    }
                    Err(e) => tracing::debug!(%peer, %e, "websocket handshake failed"),
                },
                Err(e) if e.kind() == ErrorKind::WouldBlock => return,
                Err(e) => {
                    tracing::warn!(%e, "websocket accept failed");
                    return;
                }
            }
        }
    }
}

fn handshake(stream: TcpStream) -> io::Result<WebSocket<TcpStream>> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(HANDSHAKE_TIMEOUT))?;
    stream.set_nodelay(true)?;
    let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    ws.get_ref().set_read_timeout(None)?;
    ws.get_ref().set_nonblocking(true)?;
    Ok(ws)
}
