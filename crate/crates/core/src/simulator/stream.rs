use std::io::{self, Write};
use std::thread;
use std::time::{Duration, Instant};

use crate::telemetry::Session;
use crate::wire::{encode_frame, EncodeError, FRAME_LEN};

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("frame {seq}: {source}")]
    Encode {
        seq: u32,
        #[source]
        source: EncodeError,
    },
    #[error("speed factor must be finite and nonnegative, got {0}")]
    InvalidSpeed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSummary {
    pub frames: u64,
    pub bytes: u64,
    pub elapsed: Duration,
}

/// Encode every frame of a session into one byte buffer.
pub fn encode_session(session: &Session) -> Result<Vec<u8>, StreamError> {
    let mut out = Vec::with_capacity(session.frames.len() * FRAME_LEN);
    for f in &session.frames {
        let bytes = encode_frame(f).map_err(|source| StreamError::Encode { seq: f.seq, source })?;
        out.extend_from_slice(&bytes);
    }
    Ok(out)
}

/// Write a session as wire frames. Frame `i` is due `(t_i − t_0) × speed_factor`
/// after the call starts; a factor of 0 writes as fast as possible. Deadlines
/// come from one fixed schedule so sleep overshoot does not accumulate.
pub fn stream_session<W: Write>(session: &Session, speed_factor: f64, out: &mut W) -> Result<StreamSummary, StreamError> {
    if !(speed_factor.is_finite() && speed_factor >= 0.0) {
        return Err(StreamError::InvalidSpeed(speed_factor));
    }
    let start = Instant::now();
    let t0 = session.frames.first().map_or(0, |f| f.timestamp_ms);
    let mut bytes = 0u64;
    for f in &session.frames {
        let encoded = encode_frame(f).map_err(|source| StreamError::Encode { seq: f.seq, source })?;
        if speed_factor > 0.0 {
            let due = start + Duration::from_secs_f64(f64::from(f.timestamp_ms - t0) * speed_factor / 1000.0);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        out.write_all(&encoded)?;
        if speed_factor > 0.0 {
            out.flush()?;
        }
        bytes += encoded.len() as u64;
    }
    out.flush()?;
    Ok(StreamSummary {
        frames: session.frames.len() as u64,
        bytes,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_session, Archetype, SimProfile};
    use crate::telemetry::TaskKind;
    use crate::wire::FrameDecoder;

    #[test]
    fn unpaced_stream_decodes_to_the_session() {
        let s = generate_session(&SimProfile::archetype(Archetype::IdealLiver), TaskKind::Liver, 5).unwrap();
        let mut buf = Vec::new();
        let summary = stream_session(&s, 0.0, &mut buf).unwrap();
        assert_eq!(summary.frames, s.frames.len() as u64);
        assert_eq!(buf, encode_session(&s).unwrap());
        let mut dec = FrameDecoder::new();
        let frames: Vec<_> = dec.feed(&buf).into_iter().map(Result::unwrap).collect();
        assert_eq!(frames, s.frames);
        assert!(dec.finish().is_none());
    }

    #[test]
    fn rejects_bad_speed() {
        let s = generate_session(&SimProfile::archetype(Archetype::IdealLiver), TaskKind::Liver, 5).unwrap();
        assert!(matches!(stream_session(&s, -1.0, &mut io::sink()), Err(StreamError::InvalidSpeed(_))));
        assert!(matches!(stream_session(&s, f64::NAN, &mut io::sink()), Err(StreamError::InvalidSpeed(_))));
    }
}
