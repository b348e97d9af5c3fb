//! Blocking line-protocol client, used for replaying recordings.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::protocol::{ClientMessage, ServerMessage};
use crate::skeleton::{Kind, LandmarkFrame};

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

fn unexpected(msg: ServerMessage) -> io::Error {
    io::Error::other(format!("unexpected reply: {msg:?}"))
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
        })
    }

    pub fn send(&mut self, msg: &ClientMessage) -> io::Result<()> {
        self.writer.write_all(msg.to_line().as_bytes())
    }

    pub fn recv(&mut self) -> io::Result<ServerMessage> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        serde_json::from_str(&line).map_err(io::Error::other)
    }

    pub fn request(&mut self, msg: &ClientMessage) -> io::Result<ServerMessage> {
        self.send(msg)?;
        self.recv()
    }

    pub fn open(&mut self, user: &str, kind: Kind) -> io::Result<String> {
        match self.request(&ClientMessage::Open {
            user: user.to_string(),
            kind,
        })? {
            ServerMessage::Opened { sid } => Ok(sid),
            other => Err(unexpected(other)),
        }
    }

    pub fn close(&mut self, sid: &str) -> io::Result<usize> {
        match self.request(&ClientMessage::Close { sid: sid.to_string() })? {
            ServerMessage::Closed { frames, .. } => Ok(frames),
            other => Err(unexpected(other)),
        }
    }

    /// Sends every frame (seq from 1) without waiting, then collects one
    /// reply per frame.
    pub fn stream_frames(&mut self, sid: &str, frames: &[LandmarkFrame]) -> io::Result<Vec<ServerMessage>> {
        let mut out = String::new();
        for (i, f) in frames.iter().enumerate() {
            out.push_str(
                &ClientMessage::Frame {
                    sid: sid.to_string(),
                    seq: i as u64 + 1,
                    ts: f.timestamp_ms,
                    handed: f.handedness,
                    lm: f.to_flat(),
                }
                .to_line(),
            );
        }
        // a writer thread keeps large batches from filling both socket buffers
        let mut writer = self.writer.try_clone()?;
        let sender = std::thread::spawn(move || writer.write_all(out.as_bytes()));
        let replies = (0..frames.len()).map(|_| self.recv()).collect::<io::Result<Vec<_>>>();
        sender.join().map_err(|_| io::Error::other("writer thread panicked"))??;
        replies
    }
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub sid: String,
    pub replies: Vec<ServerMessage>,
    pub logged_frames: usize,
}

/// Opens a session, streams a recording through it and closes it.
pub fn replay(addr: impl ToSocketAddrs, user: &str, frames: &[LandmarkFrame]) -> io::Result<Replay> {
    let kind = frames.first().map_or(Kind::Hand, |f| f.kind);
    let mut c = Client::connect(addr)?;
    let sid = c.open(user, kind)?;
    let replies = c.stream_frames(&sid, frames)?;
    let logged_frames = c.close(&sid)?;
    Ok(Replay {
        sid,
        replies,
        logged_frames,
    })
}
