//! Message data model, wire-format parsing, identity anonymization, and
//! ingestion into per-channel time-ordered streams.
//!
//! Two wire formats are supported:
//!
//! * TSV: `ISO8601-UTC \t channel \t user \t text \n`, UTF-8, with `\t` and
//!   `\n` forbidden inside fields.
//! * JSONL: one object per line with keys `ts`, `channel`, `user`, `text`.
//!
//! Raw identifiers never flow past ingestion: [`ingest`] replaces them with
//! salted 128-bit [`AnonId`] digests before any analysis sees a message.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

use crate::hash::murmur3_x64_128;
use crate::time::{TimeDelta, Timestamp};

/// Anonymized identity: a 128-bit salted digest, rendered as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnonId(u128);

impl AnonId {
    pub fn from_digest(digest: [u8; 16]) -> Self {
        AnonId(u128::from_be_bytes(digest))
    }

    pub fn to_hex(self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for AnonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl fmt::Debug for AnonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AnonId({:032x})", self.0)
    }
}

impl FromStr for AnonId {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 32 {
            return Err(());
        }
        u128::from_str_radix(s, 16).map(AnonId).map_err(|_| ())
    }
}

/// Hashes `salt || raw_id` into an [`AnonId`]. Deterministic for a fixed
/// salt; the raw identifier is not retained anywhere downstream.
pub fn anonymize(raw_id: &str, salt: &[u8]) -> AnonId {
    anonymize_with(&mut Vec::new(), raw_id, salt)
}

fn anonymize_with(buf: &mut Vec<u8>, raw_id: &str, salt: &[u8]) -> AnonId {
    buf.clear();
    buf.extend_from_slice(salt);
    buf.extend_from_slice(raw_id.as_bytes());
    AnonId::from_digest(murmur3_x64_128(buf, 0))
}

/// One anonymized, timestamped chat line: the atomic unit of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub timestamp: Timestamp,
    pub channel_id: AnonId,
    pub user_id: AnonId,
    pub text: String,
}

/// A decoded wire record, before identities are anonymized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMessage {
    pub timestamp: Timestamp,
    pub channel: String,
    pub user: String,
    pub text: String,
}

impl RawMessage {
    pub fn into_message(self, salt: &[u8]) -> ChatMessage {
        ChatMessage {
            timestamp: self.timestamp,
            channel_id: anonymize(&self.channel, salt),
            user_id: anonymize(&self.user, salt),
            text: self.text,
        }
    }

    /// Serializes as a TSV record (without the trailing newline).
    pub fn to_tsv(&self) -> Result<String, SerializeError> {
        for (field, value) in
            [(Field::Channel, &self.channel), (Field::User, &self.user), (Field::Text, &self.text)]
        {
            if value.contains('\t') || value.contains('\n') {
                return Err(SerializeError::SeparatorInField(field));
            }
        }
        Ok(format!("{}\t{}\t{}\t{}", self.timestamp, self.channel, self.user, self.text))
    }

    /// Serializes as a JSONL record (without the trailing newline).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::with_capacity(self.text.len() + 64);
        out.push_str("{\"ts\":");
        out.push_str(&serde_json::to_string(&self.timestamp.to_string()).unwrap());
        out.push_str(",\"channel\":");
        out.push_str(&serde_json::to_string(&self.channel).unwrap());
        out.push_str(",\"user\":");
        out.push_str(&serde_json::to_string(&self.user).unwrap());
        out.push_str(",\"text\":");
        out.push_str(&serde_json::to_string(&self.text).unwrap());
        out.push('}');
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Tsv,
    Jsonl,
}

impl FromStr for LogFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(LogFormat::Tsv),
            "jsonl" => Ok(LogFormat::Jsonl),
            other => Err(format!("unknown log format {other:?} (expected tsv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Timestamp,
    Channel,
    User,
    Text,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Field::Timestamp => "timestamp",
            Field::Channel => "channel",
            Field::User => "user",
            Field::Text => "text",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed timestamp")]
    MalformedTimestamp,
    #[error("missing or empty field: {0}")]
    MissingField(Field),
    #[error("invalid utf-8 in line")]
    InvalidUtf8,
    #[error("malformed record")]
    MalformedRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("field {0} contains a separator byte")]
    SeparatorInField(Field),
}

/// Borrowed view of one parsed record; the ingest hot path avoids owning
/// fields it only hashes.
struct WireRef<'a> {
    timestamp: Timestamp,
    channel: &'a str,
    user: &'a str,
    text: &'a str,
}

/// Parses one record. `line` must not include the trailing `\n`; a single
/// trailing `\r` is tolerated. Text is preserved byte-exactly otherwise.
pub fn parse_line(line: &[u8], format: LogFormat) -> Result<RawMessage, ParseError> {
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    let s = std::str::from_utf8(line).map_err(|_| ParseError::InvalidUtf8)?;
    match format {
        LogFormat::Tsv => parse_tsv(s).map(|r| RawMessage {
            timestamp: r.timestamp,
            channel: r.channel.to_owned(),
            user: r.user.to_owned(),
            text: r.text.to_owned(),
        }),
        LogFormat::Jsonl => parse_jsonl(s),
    }
}

fn parse_tsv(s: &str) -> Result<WireRef<'_>, ParseError> {
    let mut parts = s.splitn(4, '\t');
    let ts = parts.next().unwrap_or("");
    let channel = parts.next().ok_or(ParseError::MissingField(Field::Channel))?;
    let user = parts.next().ok_or(ParseError::MissingField(Field::User))?;
    let text = parts.next().ok_or(ParseError::MissingField(Field::Text))?;

    let timestamp = Timestamp::parse_iso8601(ts).ok_or(ParseError::MalformedTimestamp)?;
    if channel.is_empty() {
        return Err(ParseError::MissingField(Field::Channel));
    }
    if user.is_empty() {
        return Err(ParseError::MissingField(Field::User));
    }
    if text.is_empty() {
        return Err(ParseError::MissingField(Field::Text));
    }
    if text.contains('\t') {
        // splitn folds surplus separators into the last field; the format
        // forbids tabs inside fields, so this is a corrupt record.
        return Err(ParseError::MalformedRecord);
    }
    Ok(WireRef { timestamp, channel, user, text })
}

fn parse_jsonl(s: &str) -> Result<RawMessage, ParseError> {
    let value: serde_json::Value =
        serde_json::from_str(s).map_err(|_| ParseError::MalformedRecord)?;
    let obj = value.as_object().ok_or(ParseError::MalformedRecord)?;

    let ts = obj
        .get("ts")
        .ok_or(ParseError::MissingField(Field::Timestamp))?
        .as_str()
        .ok_or(ParseError::MalformedTimestamp)?;
    let timestamp = Timestamp::parse_iso8601(ts).ok_or(ParseError::MalformedTimestamp)?;

    let field = |name: &str, id: Field| -> Result<&str, ParseError> {
        let v = obj.get(name).and_then(|v| v.as_str()).unwrap_or("");
        if v.is_empty() {
            Err(ParseError::MissingField(id))
        } else {
            Ok(v)
        }
    };
    Ok(RawMessage {
        timestamp,
        channel: field("channel", Field::Channel)?.to_owned(),
        user: field("user", Field::User)?.to_owned(),
        text: field("text", Field::Text)?.to_owned(),
    })
}

/// All messages of one channel, in non-decreasing timestamp order; equal
/// timestamps preserve input order.
#[derive(Debug, Clone)]
pub struct ChannelStream {
    pub channel_id: AnonId,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub accepted: u64,
    pub skipped: u64,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub format: LogFormat,
    pub salt: Vec<u8>,
    /// Maximum tolerated event-time skew; records older than the watermark
    /// minus this bound abort the run rather than silently reorder.
    pub skew_bound: TimeDelta,
    /// Optional observation window; records outside it are counted as skipped.
    pub window: Option<(Timestamp, Timestamp)>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            format: LogFormat::Tsv,
            salt: Vec::new(),
            skew_bound: TimeDelta::from_minutes(10),
            window: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error reading source: {0}")]
    Io(#[from] std::io::Error),
    #[error("timestamp skew exceeds the reorder buffer at line {line}: {timestamp} arrived after watermark {watermark}")]
    SkewExceeded { line: u64, timestamp: Timestamp, watermark: Timestamp },
}

/// Reorder-buffer entry ordered by (timestamp, arrival sequence), so equal
/// timestamps drain in input order.
struct Pending {
    timestamp: Timestamp,
    seq: u64,
    msg: ChatMessage,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.timestamp == other.timestamp && self.seq == other.seq
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.timestamp, self.seq).cmp(&(other.timestamp, other.seq))
    }
}

/// Reads records, anonymizes identities, and partitions messages into
/// per-channel streams. Malformed lines are counted and skipped; event-time
/// skew beyond `opts.skew_bound` aborts. Returned streams are sorted by
/// channel id and each stream is time-ordered (stable for equal timestamps).
pub fn ingest<R: BufRead>(
    mut reader: R,
    opts: &IngestOptions,
) -> Result<(Vec<ChannelStream>, IngestReport), IngestError> {
    let mut report = IngestReport::default();
    let mut channels: HashMap<AnonId, Vec<ChatMessage>> = HashMap::new();
    // Only records older than `watermark - skew_bound` are committed, so
    // any admissible late arrival still lands ahead of them.
    let mut pending: BinaryHeap<Reverse<Pending>> = BinaryHeap::new();

    let mut buf: Vec<u8> = Vec::with_capacity(256);
    let mut hash_buf: Vec<u8> = Vec::with_capacity(64);
    let mut line_no: u64 = 0;
    let mut seq: u64 = 0;
    let mut watermark: Option<Timestamp> = None;

    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = buf.strip_suffix(b"\n").unwrap_or(&buf);

        let msg = match decode_message(line, opts, &mut hash_buf) {
            Ok(Some(msg)) => msg,
            Ok(None) => {
                report.skipped += 1;
                continue;
            }
            Err(()) => {
                report.skipped += 1;
                continue;
            }
        };

        let ts = msg.timestamp;
        match watermark {
            None => watermark = Some(ts),
            Some(w) => {
                if ts < w - opts.skew_bound {
                    return Err(IngestError::SkewExceeded {
                        line: line_no,
                        timestamp: ts,
                        watermark: w,
                    });
                }
                if ts > w {
                    watermark = Some(ts);
                }
            }
        }

        pending.push(Reverse(Pending { timestamp: ts, seq, msg }));
        seq += 1;
        report.accepted += 1;

        let horizon = watermark.unwrap() - opts.skew_bound;
        while pending.peek().is_some_and(|entry| entry.0.timestamp <= horizon) {
            let entry = pending.pop().expect("peeked").0;
            channels.entry(entry.msg.channel_id).or_default().push(entry.msg);
        }
    }

    while let Some(Reverse(entry)) = pending.pop() {
        channels.entry(entry.msg.channel_id).or_default().push(entry.msg);
    }

    let mut streams: Vec<ChannelStream> = channels
        .into_iter()
        .map(|(channel_id, messages)| ChannelStream { channel_id, messages })
        .collect();
    streams.sort_by_key(|s| s.channel_id);
    Ok((streams, report))
}

/// Decodes and anonymizes one line. `Ok(None)` means the record fell
/// outside the observation window; `Err` means it failed to parse.
fn decode_message(
    line: &[u8],
    opts: &IngestOptions,
    hash_buf: &mut Vec<u8>,
) -> Result<Option<ChatMessage>, ()> {
    match opts.format {
        LogFormat::Tsv => {
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            let s = std::str::from_utf8(line).map_err(|_| ())?;
            let r = parse_tsv(s).map_err(|_| ())?;
            if outside_window(r.timestamp, opts) {
                return Ok(None);
            }
            Ok(Some(ChatMessage {
                timestamp: r.timestamp,
                channel_id: anonymize_with(hash_buf, r.channel, &opts.salt),
                user_id: anonymize_with(hash_buf, r.user, &opts.salt),
                text: r.text.to_owned(),
            }))
        }
        LogFormat::Jsonl => {
            let raw = parse_line(line, opts.format).map_err(|_| ())?;
            if outside_window(raw.timestamp, opts) {
                return Ok(None);
            }
            Ok(Some(raw.into_message(&opts.salt)))
        }
    }
}

fn outside_window(ts: Timestamp, opts: &IngestOptions) -> bool {
    opts.window.is_some_and(|(lo, hi)| ts < lo || ts > hi)
}
