//! DEFLATE-backed compressibility measures.
//!
//! Both the per-user bot feature and the per-chunk metric use the same
//! procedure: raw DEFLATE (RFC 1951) at the encoder's default level, ratio
//! clamped into `(0, 1]` because tiny inputs expand under any encoder.

use flate2::{Compress, Compression, FlushCompress, Status};

/// Reusable raw-DEFLATE sizer. Compressor state is large, so callers on hot
/// paths hold one of these instead of building an encoder per block.
pub struct Deflater {
    compress: Compress,
    out: Vec<u8>,
}

impl Default for Deflater {
    fn default() -> Self {
        Self::new()
    }
}

impl Deflater {
    pub fn new() -> Self {
        Deflater { compress: Compress::new(Compression::default(), false), out: Vec::new() }
    }

    /// Size in bytes of `data` as a raw DEFLATE stream at the default level.
    pub fn deflate_len(&mut self, data: &[u8]) -> usize {
        self.compress.reset();
        self.out.clear();
        if self.out.capacity() < 64 {
            self.out.reserve(64);
        }
        loop {
            let before_in = self.compress.total_in();
            let status = self
                .compress
                .compress_vec(&data[before_in as usize..], &mut self.out, FlushCompress::Finish)
                .expect("in-memory deflate cannot fail");
            match status {
                Status::StreamEnd => return self.out.len(),
                Status::Ok | Status::BufError => {
                    let len = self.out.len();
                    self.out.reserve(len.max(64));
                }
            }
        }
    }

    /// Compressed-to-raw ratio clamped to `(0, 1]`; `None` for empty input.
    pub fn deflate_ratio(&mut self, data: &[u8]) -> Option<f64> {
        if data.is_empty() {
            return None;
        }
        Some((self.deflate_len(data) as f64 / data.len() as f64).min(1.0))
    }
}

/// One-shot convenience over [`Deflater`].
pub fn deflate_len(data: &[u8]) -> usize {
    Deflater::new().deflate_len(data)
}

/// Compressed-to-raw ratio clamped to `(0, 1]`; `None` for empty input.
pub fn deflate_ratio(data: &[u8]) -> Option<f64> {
    Deflater::new().deflate_ratio(data)
}
