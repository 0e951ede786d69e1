//! Typed payloads carried inside frames.

use poqka_core::codec::{CodecError, Reader, Writer};
use poqka_core::protocol::{ChallengeType, ProtocolId, RejectReason, Verdict};
use thiserror::Error;

use crate::frame::{MsgType, WireMessage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("expected a {expected:?} frame, got type {got:#04x}")]
    UnexpectedType { expected: MsgType, got: u8 },
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

fn expect(msg: &WireMessage, kind: MsgType) -> Result<Reader<'_>, MessageError> {
    if msg.msg_type != kind as u8 {
        return Err(MessageError::UnexpectedType { expected: kind, got: msg.msg_type });
    }
    Ok(Reader::new(&msg.payload))
}

/// Opens a session. The client states what it expects to run so that a
/// misconfigured pair fails before any key is issued.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionInit {
    pub protocol: ProtocolId,
    pub profile: String,
}

impl SessionInit {
    pub fn to_frame(&self) -> WireMessage {
        let mut w = Writer::new();
        w.u8(self.protocol.number()).bytes(self.profile.as_bytes());
        WireMessage::new(MsgType::SessionInit, w.finish())
    }

    pub fn from_frame(msg: &WireMessage) -> Result<Self, MessageError> {
        let mut r = expect(msg, MsgType::SessionInit)?;
        let protocol = ProtocolId::from_number(r.u8()?).ok_or(MessageError::Invalid("protocol id"))?;
        let profile = std::str::from_utf8(r.bytes()?).map_err(|_| MessageError::Invalid("profile name"))?.to_string();
        r.finish()?;
        Ok(Self { protocol, profile })
    }
}

/// The issued key, with its family tag already blinded to 0x00.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChallengeMsg {
    pub session_id: [u8; 16],
    pub index: u64,
    pub key: Vec<u8>,
}

impl ChallengeMsg {
    pub fn to_frame(&self) -> WireMessage {
        let mut w = Writer::new();
        w.raw(&self.session_id).u64(self.index).bytes(&self.key);
        WireMessage::new(MsgType::Challenge, w.finish())
    }

    pub fn from_frame(msg: &WireMessage) -> Result<Self, MessageError> {
        let mut r = expect(msg, MsgType::Challenge)?;
        let session_id = r.take(16)?.try_into().expect("16 bytes");
        let index = r.u64()?;
        let key = r.bytes()?.to_vec();
        r.finish()?;
        Ok(Self { session_id, index, key })
    }
}

/// Accept bit, reason code (0 on accept) and the revealed challenge type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerdictMsg {
    pub verdict: Verdict,
    pub challenge: ChallengeType,
}

impl VerdictMsg {
    pub fn to_frame(&self) -> WireMessage {
        let reason = self.verdict.reason().map_or(0, RejectReason::code);
        WireMessage::new(MsgType::Verdict, vec![self.verdict.accepted() as u8, reason, self.challenge.code()])
    }

    pub fn from_frame(msg: &WireMessage) -> Result<Self, MessageError> {
        let mut r = expect(msg, MsgType::Verdict)?;
        let (accept, reason, ctype) = (r.u8()?, r.u8()?, r.u8()?);
        r.finish()?;
        let verdict = match (accept, reason) {
            (1, 0) => Verdict::Accept,
            (0, c) => Verdict::Reject(RejectReason::from_code(c).ok_or(MessageError::Invalid("reason code"))?),
            _ => return Err(MessageError::Invalid("accept bit")),
        };
        let challenge = ChallengeType::from_code(ctype).ok_or(MessageError::Invalid("challenge type"))?;
        Ok(Self { verdict, challenge })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    OutOfOrder = 1,
    UnknownType = 2,
    Malformed = 3,
    Mismatch = 4,
    Internal = 5,
}

impl ErrorCode {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            1 => ErrorCode::OutOfOrder,
            2 => ErrorCode::UnknownType,
            3 => ErrorCode::Malformed,
            4 => ErrorCode::Mismatch,
            5 => ErrorCode::Internal,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorMsg {
    pub code: ErrorCode,
    pub detail: String,
}

impl ErrorMsg {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        Self { code, detail: detail.into() }
    }

    pub fn to_frame(&self) -> WireMessage {
        let mut w = Writer::new();
        w.u8(self.code as u8).bytes(self.detail.as_bytes());
        WireMessage::new(MsgType::Error, w.finish())
    }

    pub fn from_frame(msg: &WireMessage) -> Result<Self, MessageError> {
        let mut r = expect(msg, MsgType::Error)?;
        let code = ErrorCode::from_u8(r.u8()?).ok_or(MessageError::Invalid("error code"))?;
        let detail = String::from_utf8_lossy(r.bytes()?).into_owned();
        r.finish()?;
        Ok(Self { code, detail })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payloads_round_trip() {
        let init = SessionInit { protocol: ProtocolId::TwoTest, profile: "toy".into() };
        assert_eq!(SessionInit::from_frame(&init.to_frame()).unwrap(), init);
        let ch = ChallengeMsg { session_id: [7; 16], index: 42, key: vec![0, 1, 2] };
        assert_eq!(ChallengeMsg::from_frame(&ch.to_frame()).unwrap(), ch);
        for v in [Verdict::Accept, Verdict::Reject(RejectReason::Timeout), Verdict::Reject(RejectReason::DZero)] {
            let m = VerdictMsg { verdict: v, challenge: ChallengeType::WIm };
            assert_eq!(VerdictMsg::from_frame(&m.to_frame()).unwrap(), m);
        }
        let e = ErrorMsg::new(ErrorCode::OutOfOrder, "response before challenge");
        assert_eq!(ErrorMsg::from_frame(&e.to_frame()).unwrap(), e);
    }

    #[test]
    fn verdict_rejects_inconsistent_bits() {
        let bad = WireMessage::new(MsgType::Verdict, vec![1, 3, 1]);
        assert_eq!(VerdictMsg::from_frame(&bad), Err(MessageError::Invalid("accept bit")));
        let bad = WireMessage::new(MsgType::Verdict, vec![0, 0, 1]);
        assert_eq!(VerdictMsg::from_frame(&bad), Err(MessageError::Invalid("reason code")));
        let wrong = WireMessage::new(MsgType::Challenge, vec![1, 0, 1]);
        assert!(matches!(VerdictMsg::from_frame(&wrong), Err(MessageError::UnexpectedType { .. })));
    }
}
