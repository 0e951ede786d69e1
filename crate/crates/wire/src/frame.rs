//! Frame layout: `"PQKA" | version | msg_type | u32 BE length | payload`.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"PQKA";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
pub const MAX_PAYLOAD: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("frame truncated")]
    Truncated,
    #[error("payload of {0} bytes exceeds the 64 MiB limit")]
    Oversize(usize),
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
    #[error("i/o: {0:?}")]
    Io(io::ErrorKind),
}

impl FrameError {
    /// Read deadline hit while waiting for (part of) a frame.
    pub fn is_timeout(&self) -> bool {
        matches!(self, FrameError::Io(io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
    }
}

impl From<io::Error> for FrameError {
    fn from(e: io::Error) -> Self {
        match e.kind() {
            io::ErrorKind::UnexpectedEof => FrameError::Truncated,
            k => FrameError::Io(k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    SessionInit = 0x01,
    Challenge = 0x02,
    Response = 0x03,
    Verdict = 0x04,
    Error = 0x7F,
}

impl MsgType {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0x01 => MsgType::SessionInit,
            0x02 => MsgType::Challenge,
            0x03 => MsgType::Response,
            0x04 => MsgType::Verdict,
            0x7F => MsgType::Error,
            _ => return None,
        })
    }
}

/// A frame. `msg_type` is kept raw so that unknown types survive decoding
/// and can be answered with an error frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

impl WireMessage {
    pub fn new(kind: MsgType, payload: Vec<u8>) -> Self {
        Self { msg_type: kind as u8, payload }
    }

    pub fn kind(&self) -> Option<MsgType> {
        MsgType::from_u8(self.msg_type)
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(FrameError::Oversize(self.payload.len()));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.msg_type);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Decodes exactly one frame.
    pub fn decode(bytes: &[u8]) -> Result<Self, FrameError> {
        let (msg, used) = Self::decode_prefix(bytes)?;
        match bytes.len() - used {
            0 => Ok(msg),
            n => Err(FrameError::Trailing(n)),
        }
    }

    /// Decodes the frame at the start of `bytes`, returning it and its size.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), FrameError> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .ok_or(FrameError::Truncated)?
            .try_into()
            .expect("header length");
        let (msg_type, len) = parse_header(header)?;
        let payload = bytes.get(HEADER_LEN..HEADER_LEN + len).ok_or(FrameError::Truncated)?;
        Ok((Self { msg_type, payload: payload.to_vec() }, HEADER_LEN + len))
    }
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(u8, usize), FrameError> {
    let magic: [u8; 4] = h[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FrameError::BadMagic(magic));
    }
    if h[4] != VERSION {
        return Err(FrameError::BadVersion(h[4]));
    }
    let len = u32::from_be_bytes(h[6..10].try_into().expect("4 bytes")) as usize;
    if len > MAX_PAYLOAD {
        return Err(FrameError::Oversize(len));
    }
    Ok((h[5], len))
}

/// Reads one frame. `Ok(None)` means the peer closed cleanly between frames.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<WireMessage>, FrameError> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(FrameError::Truncated),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (msg_type, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)?;
    Ok(Some(WireMessage { msg_type, payload }))
}

pub fn write_frame<W: Write>(w: &mut W, msg: &WireMessage) -> Result<(), FrameError> {
    w.write_all(&msg.encode()?)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_verdict_round_trips() {
        let m = WireMessage::new(MsgType::Verdict, vec![]);
        let bytes = m.encode().unwrap();
        assert_eq!(bytes, b"PQKA\x01\x04\x00\x00\x00\x00");
        assert_eq!(WireMessage::decode(&bytes).unwrap(), m);
    }

    #[test]
    fn header_faults() {
        let good = WireMessage::new(MsgType::Response, vec![1, 2, 3]).encode().unwrap();
        let mut bad = good.clone();
        bad[0] ^= 0x01;
        assert!(matches!(WireMessage::decode(&bad), Err(FrameError::BadMagic(_))));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(WireMessage::decode(&bad), Err(FrameError::BadVersion(2)));
        for cut in 0..good.len() {
            assert_eq!(WireMessage::decode(&good[..cut]), Err(FrameError::Truncated), "cut {cut}");
        }
        let mut long = good.clone();
        long.push(0);
        assert_eq!(WireMessage::decode(&long), Err(FrameError::Trailing(1)));
        let mut huge = good;
        huge[6..10].copy_from_slice(&((MAX_PAYLOAD + 1) as u32).to_be_bytes());
        assert_eq!(WireMessage::decode(&huge), Err(FrameError::Oversize(MAX_PAYLOAD + 1)));
    }

    #[test]
    fn unknown_types_decode() {
        let m = WireMessage { msg_type: 0x33, payload: vec![9] };
        let back = WireMessage::decode(&m.encode().unwrap()).unwrap();
        assert_eq!(back.kind(), None);
        assert_eq!(back, m);
    }

    #[test]
    fn stream_reads() {
        let a = WireMessage::new(MsgType::SessionInit, vec![3]);
        let b = WireMessage::new(MsgType::Error, b"x".to_vec());
        let mut buf = a.encode().unwrap();
        buf.extend(b.encode().unwrap());
        let mut cur = io::Cursor::new(buf.clone());
        assert_eq!(read_frame(&mut cur).unwrap(), Some(a));
        assert_eq!(read_frame(&mut cur).unwrap(), Some(b));
        assert_eq!(read_frame(&mut cur).unwrap(), None);
        let mut cut = io::Cursor::new(buf[..buf.len() - 1].to_vec());
        read_frame(&mut cut).unwrap();
        assert_eq!(read_frame(&mut cut), Err(FrameError::Truncated));
    }
}
