use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::Utc;
use thiserror::Error;

use super::protocol::{ErrorCode, ResultMessage};
use super::smoothing::{LabelSmoother, DEFAULT_MIN_FRAMES, DEFAULT_WINDOW};
use super::store::{LogStore, SessionEntry, SessionRecord, UNSTABLE};
use crate::classifiers::TrainedModel;
use crate::correction::{evaluate_pose, ProfileSet};
use crate::geometry::extract_features;
use crate::skeleton::{Handedness, Kind, LandmarkFrame, DEFAULT_MIN_CONFIDENCE};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("seq {seq} is not after {last}")]
    OutOfOrder { seq: u64, last: u64 },
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("bad frame: {0}")]
    BadFrame(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> ErrorCode {
        match self {
            ServiceError::OutOfOrder { .. } => ErrorCode::OutOfOrder,
            ServiceError::UnknownSession(_) => ErrorCode::UnknownSession,
            ServiceError::BadFrame(_) => ErrorCode::BadFrame,
            ServiceError::BadRequest(_) => ErrorCode::BadRequest,
            ServiceError::Internal(_) => ErrorCode::Internal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub window: usize,
    pub min_frames: usize,
    pub min_confidence: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            window: DEFAULT_WINDOW,
            min_frames: DEFAULT_MIN_FRAMES,
            min_confidence: DEFAULT_MIN_CONFIDENCE,
        }
    }
}

/// One incoming frame, already decoded from the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMessage {
    pub session_id: String,
    pub seq: u64,
    pub timestamp_ms: i64,
    pub handedness: Handedness,
    pub landmarks: Vec<f64>,
}

struct SessionState {
    record: SessionRecord,
    last_seq: Option<u64>,
    smoother: LabelSmoother,
}

/// Shared state of a running service: the model, the profiles, the log
/// store and every open session. Frames of one session are serialized by
/// that session's lock; different sessions proceed in parallel.
pub struct SessionManager {
    model: Arc<TrainedModel>,
    profiles: Arc<ProfileSet>,
    store: Arc<LogStore>,
    config: SessionConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
    next_id: AtomicU64,
    id_prefix: String,
}

impl SessionManager {
    pub fn new(model: Arc<TrainedModel>, profiles: Arc<ProfileSet>, store: Arc<LogStore>, config: SessionConfig) -> Self {
        let nanos = Utc::now().timestamp_nanos_opt().unwrap_or_default();
        SessionManager {
            model,
            profiles,
            store,
            config,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            id_prefix: format!("{:x}", nanos as u64 ^ u64::from(std::process::id())),
        }
    }

    pub fn model(&self) -> &TrainedModel {
        &self.model
    }

    pub fn store(&self) -> &LogStore {
        &self.store
    }

    pub fn open_session(&self, user_id: &str, kind: Kind) -> Result<String, ServiceError> {
        if kind != self.model.kind {
            return Err(ServiceError::BadRequest(format!(
                "this service classifies {} frames, not {kind}",
                self.model.kind
            )));
        }
        let sid = format!("{}-{}", self.id_prefix, self.next_id.fetch_add(1, Ordering::Relaxed));
        let state = SessionState {
            record: SessionRecord::new(sid.clone(), user_id.to_string(), kind, Utc::now()),
            last_seq: None,
            smoother: LabelSmoother::new(self.config.window, self.config.min_frames),
        };
        self.lock_sessions().insert(sid.clone(), Arc::new(Mutex::new(state)));
        log::info!("opened session {sid} for {user_id}");
        Ok(sid)
    }

    fn lock_sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Arc<Mutex<SessionState>>>> {
        self.sessions.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn is_open(&self, sid: &str) -> bool {
        self.lock_sessions().contains_key(sid)
    }

    /// Finalizes the session, appends it to the log store and returns it.
    pub fn close_session(&self, sid: &str) -> Result<SessionRecord, ServiceError> {
        let state = self
            .lock_sessions()
            .remove(sid)
            .ok_or_else(|| ServiceError::UnknownSession(sid.to_string()))?;
        let mut state = state.lock().unwrap_or_else(|p| p.into_inner());
        let ended = Utc::now().max(state.record.started_at);
        state.record.ended_at = Some(ended);
        self.store
            .append(&state.record)
            .map_err(|e| ServiceError::Internal(format!("writing session log: {e}")))?;
        log::info!("closed session {sid} ({} frames)", state.record.entries.len());
        Ok(state.record.clone())
    }

    pub fn handle_frame(&self, msg: &FrameMessage) -> Result<ResultMessage, ServiceError> {
        let started = Instant::now();
        let state = self
            .lock_sessions()
            .get(&msg.session_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(msg.session_id.clone()))?;
        let mut state = state.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(last) = state.last_seq {
            if msg.seq <= last {
                return Err(ServiceError::OutOfOrder { seq: msg.seq, last });
            }
        }
        // the seq is consumed even if the frame turns out to be unusable
        state.last_seq = Some(msg.seq);

        let kind = state.record.kind;
        let mut frame =
            LandmarkFrame::from_flat(kind, &msg.landmarks).map_err(|e| ServiceError::BadFrame(e.to_string()))?;
        frame.handedness = msg.handedness;
        frame.timestamp_ms = msg.timestamp_ms;
        let features = extract_features(&frame, kind.topology(), self.config.min_confidence)
            .map_err(|e| ServiceError::BadFrame(e.to_string()))?;
        let prediction = self
            .model
            .predict(&features)
            .map_err(|e| ServiceError::Internal(e.to_string()))?;
        let raw = self.model.label_name(prediction.label).to_string();
        let conf = prediction.scores[prediction.label];

        let (label, fix, missing, ok) = match state.smoother.push(prediction.label) {
            None => (UNSTABLE.to_string(), Vec::new(), Vec::new(), false),
            Some(l) => {
                let name = self.model.label_name(l).to_string();
                match self.profiles.get(&name) {
                    Some(profile) => {
                        let r = evaluate_pose(&frame, profile, self.config.min_confidence)
                            .map_err(|e| ServiceError::Internal(e.to_string()))?;
                        (name, r.deviations, r.missing_joints.into_iter().collect(), r.correct)
                    }
                    None => (name, Vec::new(), Vec::new(), true),
                }
            }
        };
        state.record.entries.push(SessionEntry {
            ts: msg.timestamp_ms,
            label: label.clone(),
            ok,
        });
        Ok(ResultMessage {
            sid: msg.session_id.clone(),
            seq: msg.seq,
            raw,
            label,
            conf,
            fix,
            missing,
            lat_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }

    /// Closes every open session; used on shutdown.
    pub fn close_all(&self) {
        let ids: Vec<String> = self.lock_sessions().keys().cloned().collect();
        for sid in ids {
            if let Err(e) = self.close_session(&sid) {
                log::warn!("closing {sid}: {e}");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, Family, ModelSpec};
    use crate::dataset::{synth_mudra_dataset, synth_recording};

    fn manager(dir: &std::path::Path) -> SessionManager {
        let d = synth_mudra_dataset(20, 3.0, 7).unwrap();
        let model = train(&ModelSpec::new(Family::GaussianNb), &d).unwrap();
        SessionManager::new(
            Arc::new(model),
            Arc::new(ProfileSet::default()),
            Arc::new(LogStore::open(dir).unwrap()),
            SessionConfig::default(),
        )
    }

    fn frame_msg(sid: &str, seq: u64, f: &LandmarkFrame) -> FrameMessage {
        FrameMessage {
            session_id: sid.into(),
            seq,
            timestamp_ms: f.timestamp_ms,
            handedness: f.handedness,
            landmarks: f.to_flat(),
        }
    }

    #[test]
    fn clean_prana_stream() {
        let dir = tempfile::tempdir().unwrap();
        let m = manager(dir.path());
        let sid = m.open_session("u1", Kind::Hand).unwrap();
        let frames = synth_recording("Prana", 30, 30.0, 3.0, 11).unwrap();
        let labels: Vec<String> = frames
            .iter()
            .enumerate()
            .map(|(i, f)| m.handle_frame(&frame_msg(&sid, i as u64 + 1, f)).unwrap().label)
            .collect();
        assert_eq!(labels[0], UNSTABLE);
        assert!(labels[..7].iter().all(|l| l == UNSTABLE));
        assert!(labels[7..].iter().all(|l| l == "Prana"), "{labels:?}");
        let rec = m.close_session(&sid).unwrap();
        assert_eq!(rec.entries.len(), 30);
    }

    #[test]
    fn errors_keep_session_open() {
        let dir = tempfile::tempdir().unwrap();
        let m = manager(dir.path());
        let sid = m.open_session("u1", Kind::Hand).unwrap();
        let f = &synth_recording("Prana", 1, 30.0, 0.0, 1).unwrap()[0];
        m.handle_frame(&frame_msg(&sid, 5, f)).unwrap();
        let dup = m.handle_frame(&frame_msg(&sid, 5, f)).unwrap_err();
        assert_eq!(dup.code(), ErrorCode::OutOfOrder);
        let mut short = frame_msg(&sid, 6, f);
        short.landmarks.truncate(60);
        assert_eq!(m.handle_frame(&short).unwrap_err().code(), ErrorCode::BadFrame);
        let mut dim = frame_msg(&sid, 7, f);
        dim.landmarks[8 * 3 + 2] = 0.0;
        assert_eq!(m.handle_frame(&dim).unwrap_err().code(), ErrorCode::BadFrame);
        assert!(m.handle_frame(&frame_msg(&sid, 8, f)).is_ok());
        let ghost = frame_msg("nope", 1, f);
        assert_eq!(m.handle_frame(&ghost).unwrap_err().code(), ErrorCode::UnknownSession);
        assert_eq!(m.open_session("u1", Kind::Body).unwrap_err().code(), ErrorCode::BadRequest);
    }

    #[test]
    fn open_close_lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let m = manager(dir.path());
        let a = m.open_session("u1", Kind::Hand).unwrap();
        let b = m.open_session("u1", Kind::Hand).unwrap();
        assert_ne!(a, b);
        let rec = m.close_session(&a).unwrap();
        assert!(rec.entries.is_empty());
        assert!(rec.ended_at.unwrap() >= rec.started_at);
        assert_eq!(m.close_session(&a).unwrap_err().code(), ErrorCode::UnknownSession);
        assert_eq!(m.store().sessions().unwrap().len(), 1);
    }
}
