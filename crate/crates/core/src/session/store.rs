//! Append-only per-day session logs and the activity reports built on them.
//!
//! Each closed session is appended to `<dir>/<YYYY-MM-DD>.jsonl` (UTC day
//! it started) as one `session` line followed by one `frame` line per
//! processed frame.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::skeleton::Kind;

pub const UNSTABLE: &str = "unstable";

/// Inter-frame gaps longer than this count as this long.
pub const MAX_FRAME_GAP_MS: i64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub ts: i64,
    pub label: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub user_id: String,
    pub kind: Kind,
    pub started_at: DateTime<Utc>,
    pub ended_at: Option<DateTime<Utc>>,
    pub entries: Vec<SessionEntry>,
}

impl SessionRecord {
    pub fn new(session_id: String, user_id: String, kind: Kind, started_at: DateTime<Utc>) -> Self {
        SessionRecord {
            session_id,
            user_id,
            kind,
            started_at,
            ended_at: None,
            entries: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "rec", rename_all = "snake_case")]
enum LogLine {
    Session {
        sid: String,
        user: String,
        kind: Kind,
        started_at: DateTime<Utc>,
        ended_at: Option<DateTime<Utc>>,
        frames: usize,
    },
    Frame {
        sid: String,
        #[serde(flatten)]
        entry: SessionEntry,
    },
}

#[derive(Debug)]
pub struct LogStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl LogStore {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(LogStore {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn day_file(&self, day: NaiveDate) -> PathBuf {
        self.dir.join(format!("{}.jsonl", day.format("%Y-%m-%d")))
    }

    /// Appends a whole session in one write and syncs it to disk.
    pub fn append(&self, record: &SessionRecord) -> io::Result<()> {
        let mut buf = String::new();
        let header = LogLine::Session {
            sid: record.session_id.clone(),
            user: record.user_id.clone(),
            kind: record.kind,
            started_at: record.started_at,
            ended_at: record.ended_at,
            frames: record.entries.len(),
        };
        buf.push_str(&serde_json::to_string(&header).map_err(io::Error::other)?);
        buf.push('\n');
        for e in &record.entries {
            let line = LogLine::Frame {
                sid: record.session_id.clone(),
                entry: e.clone(),
            };
            buf.push_str(&serde_json::to_string(&line).map_err(io::Error::other)?);
            buf.push('\n');
        }
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.day_file(record.started_at.date_naive()))?;
        f.write_all(buf.as_bytes())?;
        f.sync_data()
    }

    /// Every logged session, in file (day) order then append order.
    /// Unparseable lines are skipped with a warning.
    pub fn sessions(&self) -> io::Result<Vec<SessionRecord>> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        files.sort();
        let mut out: Vec<SessionRecord> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for path in files {
            let reader = BufReader::new(fs::File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<LogLine>(&line) {
                    Ok(LogLine::Session {
                        sid,
                        user,
                        kind,
                        started_at,
                        ended_at,
                        ..
                    }) => {
                        index.insert(sid.clone(), out.len());
                        let mut r = SessionRecord::new(sid, user, kind, started_at);
                        r.ended_at = ended_at;
                        out.push(r);
                    }
                    Ok(LogLine::Frame { sid, entry }) => match index.get(&sid) {
                        Some(&i) => out[i].entries.push(entry),
                        None => log::warn!("{}:{}: frame for unknown session {sid}", path.display(), n + 1),
                    },
                    Err(e) => log::warn!("{}:{}: skipping line: {e}", path.display(), n + 1),
                }
            }
        }
        Ok(out)
    }
}

/// Inclusive range of UTC days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateRange {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Self {
        DateRange { from, to }
    }

    /// The `days` days ending with `today`.
    pub fn last_days(today: NaiveDate, days: u32) -> Self {
        let from = today - chrono::Days::new(u64::from(days.saturating_sub(1)));
        DateRange { from, to: today }
    }

    pub fn intersects(&self, record: &SessionRecord) -> bool {
        let start = record.started_at.date_naive();
        let end = record.ended_at.unwrap_or(record.started_at).date_naive();
        start <= self.to && end >= self.from
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseActivity {
    pub seconds: f64,
    pub sessions: usize,
    /// Frames whose smoothed label was this pose.
    pub frames: usize,
    pub correct_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityReport {
    pub user_id: String,
    pub window: DateRange,
    pub sessions: usize,
    pub poses: BTreeMap<String, PoseActivity>,
}

/// Pose label held during each entry: unstable stretches take the next
/// stable label (the debouncing delay), trailing ones the previous label.
/// `None` when the session never stabilized.
fn held_labels(entries: &[SessionEntry]) -> Option<Vec<&str>> {
    let mut held: Vec<Option<&str>> = vec![None; entries.len()];
    let mut next: Option<&str> = None;
    for (i, e) in entries.iter().enumerate().rev() {
        if e.label != UNSTABLE {
            next = Some(&e.label);
        }
        held[i] = next;
    }
    let mut prev = None;
    for h in held.iter_mut() {
        match h {
            Some(_) => prev = *h,
            None => *h = prev,
        }
    }
    held.into_iter().collect()
}

/// Seconds per pose for one session: each inter-frame gap (capped at
/// [`MAX_FRAME_GAP_MS`]) goes to the label held at the earlier frame.
pub fn pose_seconds(entries: &[SessionEntry]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let Some(held) = held_labels(entries) else {
        return out;
    };
    for (i, w) in entries.windows(2).enumerate() {
        let gap = (w[1].ts - w[0].ts).clamp(0, MAX_FRAME_GAP_MS);
        *out.entry(held[i].to_string()).or_insert(0.0) += gap as f64 / 1000.0;
    }
    out
}

pub fn activity_report(user_id: &str, window: DateRange, store: &LogStore) -> io::Result<ActivityReport> {
    let mut poses: BTreeMap<String, PoseActivity> = BTreeMap::new();
    let mut correct: BTreeMap<String, usize> = BTreeMap::new();
    let mut sessions = 0;
    for r in store.sessions()? {
        if r.user_id != user_id || !window.intersects(&r) {
            continue;
        }
        sessions += 1;
        let seconds = pose_seconds(&r.entries);
        let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
        for (pose, s) in &seconds {
            poses.entry(pose.clone()).or_default().seconds += s;
            seen.insert(pose, ());
        }
        for e in r.entries.iter().filter(|e| e.label != UNSTABLE) {
            poses.entry(e.label.clone()).or_default().frames += 1;
            *correct.entry(e.label.clone()).or_default() += usize::from(e.ok);
            seen.insert(&e.label, ());
        }
        for pose in seen.keys() {
            poses.get_mut(*pose).expect("inserted above").sessions += 1;
        }
    }
    for (pose, a) in poses.iter_mut() {
        let ok = correct.get(pose).copied().unwrap_or(0);
        a.correct_fraction = if a.frames == 0 { 0.0 } else { ok as f64 / a.frames as f64 };
    }
    Ok(ActivityReport {
        user_id: user_id.to_string(),
        window,
        sessions,
        poses,
    })
}

impl ActivityReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "activity for {} from {} to {}: {} session(s)\n",
            self.user_id, self.window.from, self.window.to, self.sessions
        );
        if self.poses.is_empty() {
            out.push_str("no poses recorded\n");
            return out;
        }
        let width = self.poses.keys().map(|k| k.chars().count()).max().unwrap_or(4).max(4);
        out.push_str(&format!("{:<width$}  {:>9}  {:>8}  {:>7}  {:>7}\n", "pose", "seconds", "sessions", "frames", "correct"));
        for (pose, a) in &self.poses {
            out.push_str(&format!(
                "{pose:<width$}  {:>9.1}  {:>8}  {:>7}  {:>7.3}\n",
                a.seconds, a.sessions, a.frames, a.correct_fraction
            ));
        }
        out
    }
}
