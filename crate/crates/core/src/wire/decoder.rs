//! Incremental frame extraction from an unreliable byte stream.

use crate::telemetry::SensorFrame;

use super::codec::{decode_frame, DecodeError, FRAME_LEN, SYNC};

/// Compact the buffer once this many consumed bytes accumulate at its front.
const COMPACT_AT: usize = 4096;

/// Single-consumer parser that resynchronizes on the sync pattern.
///
/// Garbage between frames is reported once per contiguous run as
/// [`DecodeError::BadSync`]. A candidate frame that fails validation is
/// reported once; the bytes it spanned are not reported again as garbage.
/// The 16-bit wire sequence number is unwrapped into a 32-bit counter.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    start: usize,
    /// Absolute stream offset of `buf[start]`.
    offset: u64,
    /// Bytes before this absolute offset belong to an already reported candidate.
    shadow_end: u64,
    garbage_run: usize,
    last_seq: Option<u32>,
    stats: DecoderStats,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoderStats {
    pub frames: u64,
    pub errors: u64,
    pub discarded_bytes: u64,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> DecoderStats {
        self.stats
    }

    pub fn push(&mut self, bytes: &[u8]) {
        if self.start >= COMPACT_AT {
            self.buf.drain(..self.start);
            self.start = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    fn pending(&self) -> &[u8] {
        &self.buf[self.start..]
    }

    fn advance(&mut self, n: usize) {
        self.start += n;
        self.offset += n as u64;
    }

    fn discard(&mut self, n: usize) {
        let end = self.offset + n as u64;
        let shadowed = self.shadow_end.clamp(self.offset, end) - self.offset;
        self.garbage_run += n - shadowed as usize;
        self.stats.discarded_bytes += n as u64;
        self.advance(n);
    }

    fn take_garbage(&mut self) -> Option<DecodeError> {
        if self.garbage_run == 0 {
            return None;
        }
        let skipped = std::mem::take(&mut self.garbage_run);
        self.stats.errors += 1;
        Some(DecodeError::BadSync { skipped })
    }

    fn unwrap_seq(&mut self, wire_seq: u32) -> u32 {
        let seq = match self.last_seq {
            None => wire_seq,
            Some(last) => {
                let candidate = (last & !0xFFFF) | wire_seq;
                if candidate < last {
                    candidate.wrapping_add(0x1_0000)
                } else {
                    candidate
                }
            }
        };
        self.last_seq = Some(seq);
        seq
    }

    /// Next decoded frame or error, or `None` when more bytes are needed.
    pub fn next_frame(&mut self) -> Option<Result<SensorFrame, DecodeError>> {
        let pending = self.pending();
        let Some(at) = pending.windows(2).position(|w| w == SYNC) else {
            // Keep a trailing first sync byte; it may pair with the next push.
            let keep = usize::from(pending.last() == Some(&SYNC[0]));
            let drop = pending.len() - keep;
            self.discard(drop);
            return None;
        };
        if at > 0 {
            self.discard(at);
        }
        if let Some(err) = self.take_garbage() {
            return Some(Err(err));
        }
        if self.pending().len() < FRAME_LEN {
            return None;
        }
        match decode_frame(&self.pending()[..FRAME_LEN]) {
            Ok(mut frame) => {
                self.advance(FRAME_LEN);
                frame.seq = self.unwrap_seq(frame.seq);
                self.stats.frames += 1;
                Some(Ok(frame))
            }
            Err(err) => {
                self.shadow_end = self.shadow_end.max(self.offset + FRAME_LEN as u64);
                self.discard(1);
                self.stats.errors += 1;
                Some(Err(err))
            }
        }
    }

    /// Decode everything available after pushing `bytes`.
    pub fn feed(&mut self, bytes: &[u8]) -> Vec<Result<SensorFrame, DecodeError>> {
        self.push(bytes);
        std::iter::from_fn(|| self.next_frame()).collect()
    }

    /// Flush at end of stream, after draining [`Self::next_frame`]: reports a
    /// truncated trailing frame or garbage that has not been reported yet.
    pub fn finish(&mut self) -> Option<DecodeError> {
        let remaining = self.pending().len();
        if remaining >= SYNC.len() && self.pending().starts_with(&SYNC) {
            self.discard(remaining);
            self.garbage_run = 0;
            self.stats.errors += 1;
            return Some(DecodeError::BadLength { found: remaining });
        }
        self.discard(remaining);
        self.take_garbage()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::SensorFrame;
    use crate::wire::codec::encode_frame;

    fn frame(seq: u32, t: u32) -> SensorFrame {
        let mut raw = [0u16; 12];
        raw[0] = (seq % 1024) as u16;
        SensorFrame::new(seq, t, raw)
    }

    fn bytes(seq: u32, t: u32) -> Vec<u8> {
        encode_frame(&frame(seq, t)).unwrap().to_vec()
    }

    #[test]
    fn decodes_back_to_back_frames() {
        let mut stream = bytes(0, 0);
        stream.extend(bytes(1, 20));
        let out = FrameDecoder::new().feed(&stream);
        assert_eq!(out, vec![Ok(frame(0, 0)), Ok(frame(1, 20))]);
    }

    #[test]
    fn resyncs_after_garbage() {
        let mut stream = vec![0x00, 0x13, 0xA5, 0x37, 0xFF];
        stream.extend(bytes(7, 140));
        let out = FrameDecoder::new().feed(&stream);
        assert_eq!(out, vec![Err(DecodeError::BadSync { skipped: 5 }), Ok(frame(7, 140))]);
    }

    #[test]
    fn byte_at_a_time_delivery() {
        let mut stream = vec![0xA5];
        stream.extend(bytes(3, 60));
        stream.extend(bytes(4, 80));
        let mut dec = FrameDecoder::new();
        let mut out = Vec::new();
        for b in stream {
            out.extend(dec.feed(&[b]));
        }
        assert_eq!(
            out,
            vec![Err(DecodeError::BadSync { skipped: 1 }), Ok(frame(3, 60)), Ok(frame(4, 80))]
        );
        assert_eq!(dec.finish(), None);
    }

    #[test]
    fn corrupted_frame_counts_once() {
        let mut bad = bytes(1, 20);
        bad[20] ^= 0x01;
        let mut stream = bytes(0, 0);
        stream.extend(bad);
        stream.extend(bytes(2, 40));
        let mut dec = FrameDecoder::new();
        let out = dec.feed(&stream);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], Ok(frame(0, 0)));
        assert!(matches!(out[1], Err(DecodeError::BadCrc { .. })));
        assert_eq!(out[2], Ok(frame(2, 40)));
        assert_eq!(dec.stats().errors, 1);
    }

    #[test]
    fn corrupted_sync_reports_bad_sync_once() {
        let mut bad = bytes(1, 20);
        bad[1] = 0x00;
        let mut stream = bytes(0, 0);
        stream.extend(bad);
        stream.extend(bytes(2, 40));
        let out = FrameDecoder::new().feed(&stream);
        assert_eq!(
            out,
            vec![Ok(frame(0, 0)), Err(DecodeError::BadSync { skipped: 42 }), Ok(frame(2, 40))]
        );
    }

    #[test]
    fn truncated_tail_reported_on_finish() {
        let mut stream = bytes(0, 0);
        stream.extend(&bytes(1, 20)[..30]);
        let mut dec = FrameDecoder::new();
        assert_eq!(dec.feed(&stream), vec![Ok(frame(0, 0))]);
        assert_eq!(dec.finish(), Some(DecodeError::BadLength { found: 30 }));
        assert_eq!(dec.finish(), None);
    }

    #[test]
    fn sequence_unwraps_past_u16() {
        let mut dec = FrameDecoder::new();
        let mut stream = Vec::new();
        for seq in 65_534..65_539u32 {
            stream.extend(bytes(seq, seq));
        }
        let seqs: Vec<u32> = dec.feed(&stream).into_iter().map(|r| r.unwrap().seq).collect();
        assert_eq!(seqs, vec![65_534, 65_535, 65_536, 65_537, 65_538]);
    }
}
