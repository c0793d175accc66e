//! Binary framing for live glove streams and the text format for stored sessions.

mod codec;
mod crc;
mod decoder;
mod session_file;

pub use codec::{
    decode_frame, encode_frame, DecodeError, EncodeError, WireField, FRAME_LEN, PROTOCOL_VERSION,
    SYNC,
};
pub use crc::crc16_ccitt_false;
pub use decoder::{DecoderStats, FrameDecoder};
pub use session_file::{
    read_session, read_session_file, write_session, write_session_file, SessionFileError,
    SessionReader, SessionWriter, SESSION_FILE_EXTENSION, SESSION_FORMAT_TAG,
    SESSION_SCHEMA_VERSION,
};
