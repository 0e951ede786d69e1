use poqka_wire::{FrameError, WireMessage, MAGIC};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_frames_round_trip(msg_type in any::<u8>(), payload in proptest::collection::vec(any::<u8>(), 0..2048)) {
        let m = WireMessage { msg_type, payload };
        let bytes = m.encode().unwrap();
        let back = WireMessage::decode(&bytes).unwrap();
        prop_assert_eq!(back.encode().unwrap(), bytes);
        prop_assert_eq!(back, m);
    }

    #[test]
    fn corrupted_headers_are_named(payload in proptest::collection::vec(any::<u8>(), 0..64), pos in 0usize..5, flip in 1u8..=255) {
        let mut bytes = WireMessage { msg_type: 3, payload }.encode().unwrap();
        bytes[pos] ^= flip;
        let err = WireMessage::decode(&bytes).unwrap_err();
        if pos < MAGIC.len() {
            prop_assert!(matches!(err, FrameError::BadMagic(_)));
        } else {
            prop_assert_eq!(err, FrameError::BadVersion(1 ^ flip));
        }
    }
}
