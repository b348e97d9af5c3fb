//! Thread-per-connection server for wire protocol v1.
//!
//! Plain TCP clients send newline-delimited JSON. A connection whose first
//! bytes are `GET ` is treated as a WebSocket upgrade and then carries the
//! same messages as text frames. Each connection hosts at most one session,
//! which is closed (and logged) when the peer disconnects.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use tungstenite::{Message, WebSocket};

use super::protocol::{ClientMessage, ErrorCode, ServerMessage};
use super::service::{FrameMessage, ServiceError, SessionManager};

trait Transport {
    /// Next raw message, `None` at end of stream.
    fn recv(&mut self) -> io::Result<Option<String>>;
    fn send(&mut self, msg: &ServerMessage) -> io::Result<()>;
}

struct LineTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Transport for LineTransport {
    fn recv(&mut self) -> io::Result<Option<String>> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line))
    }

    fn send(&mut self, msg: &ServerMessage) -> io::Result<()> {
        self.writer.write_all(msg.to_line().as_bytes())?;
        self.writer.flush()
    }
}

struct WsTransport {
    ws: WebSocket<TcpStream>,
}

fn ws_err(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

impl Transport for WsTransport {
    fn recv(&mut self) -> io::Result<Option<String>> {
        loop {
            match self.ws.read() {
                Ok(Message::Text(t)) => return Ok(Some(t.to_string())),
                Ok(Message::Binary(b)) => return Ok(Some(String::from_utf8_lossy(&b).into_owned())),
                Ok(Message::Close(_)) => return Ok(None),
                Ok(_) => continue,
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(None),
                Err(e) => return Err(ws_err(e)),
            }
        }
    }

    fn send(&mut self, msg: &ServerMessage) -> io::Result<()> {
        let line = msg.to_line();
        self.ws
            .send(Message::Text(line.trim_end().to_string()))
            .map_err(ws_err)
    }
}

fn error_reply(e: &ServiceError, seq: Option<u64>) -> ServerMessage {
    ServerMessage::Err {
        code: e.code(),
        msg: e.to_string(),
        seq,
    }
}

/// Handles one decoded line; returns the reply.
fn dispatch(manager: &SessionManager, current: &mut Option<String>, line: &str) -> ServerMessage {
    let msg: ClientMessage = match serde_json::from_str(line) {
        Ok(m) => m,
        Err(e) => {
            return ServerMessage::Err {
                code: if line.contains("\"frame\"") {
                    ErrorCode::BadFrame
                } else {
                    ErrorCode::BadRequest
                },
                msg: format!("cannot decode message: {e}"),
                seq: None,
            }
        }
    };
    match msg {
        ClientMessage::Open { user, kind } => {
            if let Some(sid) = current {
                return error_reply(
                    &ServiceError::BadRequest(format!("connection already carries session {sid}")),
                    None,
                );
            }
            match manager.open_session(&user, kind) {
                Ok(sid) => {
                    *current = Some(sid.clone());
                    ServerMessage::Opened { sid }
                }
                Err(e) => error_reply(&e, None),
            }
        }
        ClientMessage::Frame {
            sid,
            seq,
            ts,
            handed,
            lm,
        } => {
            if current.as_deref() != Some(sid.as_str()) {
                return error_reply(&ServiceError::UnknownSession(sid), Some(seq));
            }
            let frame = FrameMessage {
                session_id: sid,
                seq,
                timestamp_ms: ts,
                handedness: handed,
                landmarks: lm,
            };
            match manager.handle_frame(&frame) {
                Ok(r) => ServerMessage::Result(r),
                Err(e) => error_reply(&e, Some(seq)),
            }
        }
        ClientMessage::Close { sid } => {
            if current.as_deref() != Some(sid.as_str()) {
                return error_reply(&ServiceError::UnknownSession(sid), None);
            }
            *current = None;
            match manager.close_session(&sid) {
                Ok(rec) => ServerMessage::Closed {
                    sid,
                    frames: rec.entries.len(),
                },
                Err(e) => error_reply(&e, None),
            }
        }
    }
}

fn serve_connection(manager: &SessionManager, transport: &mut dyn Transport) -> io::Result<()> {
    let mut current: Option<String> = None;
    let result = (|| {
        while let Some(chunk) = transport.recv()? {
            for line in chunk.lines().filter(|l| !l.trim().is_empty()) {
                let reply = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                    dispatch(manager, &mut current, line)
                }))
                .unwrap_or_else(|_| ServerMessage::Err {
                    code: ErrorCode::Internal,
                    msg: "internal error while handling message".into(),
                    seq: None,
                });
                transport.send(&reply)?;
            }
        }
        Ok(())
    })();
    if let Some(sid) = current {
        if let Err(e) = manager.close_session(&sid) {
            log::warn!("closing {sid} after disconnect: {e}");
        }
    }
    result
}

fn handle_stream(manager: &SessionManager, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut head = [0u8; 4];
    let n = stream.peek(&mut head)?;
    if n == 4 && &head == b"GET " {
        let ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
        serve_connection(manager, &mut WsTransport { ws })
    } else {
        let writer = stream.try_clone()?;
        let mut t = LineTransport {
            reader: BufReader::new(stream),
            writer,
        };
        serve_connection(manager, &mut t)
    }
}

pub struct Server {
    listener: TcpListener,
    manager: Arc<SessionManager>,
    stop: Arc<AtomicBool>,
}

/// Stops a running [`Server::run`] from another thread.
#[derive(Clone)]
pub struct ShutdownHandle {
    stop: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
    }
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, manager: Arc<SessionManager>) -> io::Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            manager,
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> io::Result<ShutdownHandle> {
        let mut addr = self.local_addr()?;
        if addr.ip().is_unspecified() {
            addr.set_ip(std::net::Ipv4Addr::LOCALHOST.into());
        }
        Ok(ShutdownHandle {
            stop: self.stop.clone(),
            addr,
        })
    }

    pub fn manager(&self) -> &Arc<SessionManager> {
        &self.manager
    }

    /// Accepts connections until shut down, then closes any open sessions.
    pub fn run(self) -> io::Result<()> {
        self.run_until(None)
    }

    /// Like [`Server::run`], but stops accepting after `max_connections`
    /// connections and returns once they have all finished.
    pub fn run_until(self, max_connections: Option<usize>) -> io::Result<()> {
        let mut workers = Vec::new();
        let mut accepted = 0;
        for stream in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let manager = self.manager.clone();
            let peer = stream.peer_addr().ok();
            workers.push(thread::spawn(move || {
                if let Err(e) = handle_stream(&manager, stream) {
                    log::debug!("connection {peer:?} ended: {e}");
                }
            }));
            workers.retain(|w| !w.is_finished());
            accepted += 1;
            if max_connections.is_some_and(|m| accepted >= m) {
                break;
            }
        }
        if max_connections.is_some() {
            for w in workers {
                let _ = w.join();
            }
        }
        self.manager.close_all();
        Ok(())
    }
}
