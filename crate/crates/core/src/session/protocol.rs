//! Wire protocol v1: one JSON object per line (or per WebSocket text
//! message), discriminated by `"t"`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::correction::Deviation;
use crate::skeleton::{Handedness, Kind};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum ClientMessage {
    Open {
        user: String,
        kind: Kind,
    },
    Frame {
        sid: String,
        seq: u64,
        ts: i64,
        #[serde(default)]
        handed: Handedness,
        /// Flat `x, y, confidence` triples.
        lm: Vec<f64>,
    },
    Close {
        sid: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMessage {
    pub sid: String,
    pub seq: u64,
    pub raw: String,
    /// Smoothed label, or `"unstable"`.
    pub label: String,
    pub conf: f64,
    pub fix: Vec<Deviation>,
    pub missing: Vec<usize>,
    pub lat_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "snake_case")]
pub enum ServerMessage {
    Opened {
        sid: String,
    },
    Result(ResultMessage),
    /// Acknowledges `close` once the session log has been written.
    Closed {
        sid: String,
        frames: usize,
    },
    Err {
        code: ErrorCode,
        msg: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    OutOfOrder,
    UnknownSession,
    BadFrame,
    /// Malformed or misplaced message (bad JSON, second `open`, wrong kind).
    BadRequest,
    Internal,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorCode::OutOfOrder => "out_of_order",
            ErrorCode::UnknownSession => "unknown_session",
            ErrorCode::BadFrame => "bad_frame",
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::Internal => "internal",
        })
    }
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("server messages always serialize");
        s.push('\n');
        s
    }
}

impl ClientMessage {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("client messages always serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_on_the_wire() {
        let m: ClientMessage =
            serde_json::from_str(r#"{"t":"frame","sid":"a","seq":3,"ts":100,"handed":"Left","lm":[0.1,0.2,0.9]}"#)
                .unwrap();
        assert!(matches!(m, ClientMessage::Frame { seq: 3, handed: Handedness::Left, .. }));
        let m: ClientMessage = serde_json::from_str(r#"{"t":"open","user":"u1","kind":"hand"}"#).unwrap();
        assert_eq!(m, ClientMessage::Open { user: "u1".into(), kind: Kind::Hand });

        let e = ServerMessage::Err {
            code: ErrorCode::OutOfOrder,
            msg: "seq 3 <= 3".into(),
            seq: None,
        };
        assert_eq!(e.to_line(), "{\"t\":\"err\",\"code\":\"out_of_order\",\"msg\":\"seq 3 <= 3\"}\n");
        let r = ServerMessage::Result(ResultMessage {
            sid: "a".into(),
            seq: 1,
            raw: "Prana".into(),
            label: "unstable".into(),
            conf: 0.5,
            fix: vec![],
            missing: vec![],
            lat_ms: 0.1,
        });
        let v: serde_json::Value = serde_json::from_str(&r.to_line()).unwrap();
        for k in ["t", "sid", "seq", "raw", "label", "conf", "fix", "missing", "lat_ms"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
    }
}
