//! Shared fixtures for the pipeline benchmarks.

use cacophony_core::chatlog::{ingest, ChannelStream, IngestOptions};
use cacophony_core::synthgen::{generate, PlanSpec, ResponseSpec, SynthConfig, TextSpec};
use cacophony_core::time::Timestamp;

/// Deterministic mid-sized corpus: a few channels with regular broadcasts,
/// some bot traffic, roughly `slots * channels * 60` messages.
pub fn corpus(slots: u64, channels: u32) -> Vec<u8> {
    let config = SynthConfig {
        seed: 4242,
        start: Timestamp::parse_iso8601("2014-09-01T00:00:00Z").unwrap(),
        dt_minutes: 5,
        slots,
        channels,
        users_per_channel: 80,
        bot_fraction: 0.1,
        bot_messages_per_slot: 2,
        off_rate: 0.2,
        volume_split: 0.4,
        volume_sub: (10, 40),
        volume_sup: (40, 180),
        response: ResponseSpec::default(),
        text: TextSpec::default(),
        plan: PlanSpec::Regular { on_slots: 30, off_slots: 10, start_offset: 0 },
    };
    let mut bytes = Vec::new();
    generate(&config, &mut bytes).expect("benchmark corpus");
    bytes
}

pub fn streams(corpus: &[u8]) -> Vec<ChannelStream> {
    let (streams, report) = ingest(corpus, &IngestOptions::default()).expect("ingest");
    assert!(report.accepted > 0);
    streams
}
