//! Named parameter profiles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::GroupParams;
use crate::coins::derived_rng;
use crate::ddh::{DdhError, DdhParams};
use crate::lwe::{calibrate_c_t, LweError, LweParams, NoiseKind};

/// Whether a parameter set follows the paper's sizing rules or is a desk-scale toy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileKind {
    PaperFaithful,
    Toy,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("unknown profile `{0}` (expected one of toy, mid, paper)")]
    Unknown(String),
    #[error(transparent)]
    Ddh(#[from] DdhError),
    #[error(transparent)]
    Lwe(#[from] LweError),
}

/// Group orders of the built-in profiles; each `2q+1` is prime.
pub const TOY_GROUP_ORDER: u64 = 1019;
pub const MID_GROUP_ORDER: u64 = 4_294_967_291;
/// Largest 23-bit safe-prime order; `(121·23)² ≤ q` so `d = n²` fits in `Z_q`.
pub const PAPER_GROUP_ORDER: u64 = 8_388_449;

pub const TOY_LWE_MODULUS: u64 = 1_048_573;
pub const MID_LWE_MODULUS: u64 = 1_099_511_627_689;

/// A named pair of DDH and LWE parameter sets.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamProfile {
    name: String,
    ddh: DdhParams,
    lwe: LweParams,
}

/// Flat summary used in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub name: String,
    pub ddh_kind: ProfileKind,
    pub p: String,
    pub q: String,
    pub n: usize,
    pub d: u64,
    pub w: usize,
    pub lwe_kind: ProfileKind,
    pub lwe_n: usize,
    pub m: usize,
    pub lwe_q: u64,
    pub b_p: u64,
    pub b_v: u64,
    pub b_l: u64,
    pub c_t: f64,
}

/// Worst (largest) quality constant over a few seeded trapdoors, so that
/// `B_P` derived from it stays inside the radius of typical keys.
fn calibrated_c_t(name: &str, n: usize, m: usize, q: u64) -> Result<f64, LweError> {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let mut rng = derived_rng(&[0u8; 32], &format!("profile-calibration/{name}"), i);
        worst = worst.max(calibrate_c_t(n, m, q, &mut rng)?);
    }
    Ok(worst)
}

impl ParamProfile {
    pub const NAMES: [&'static str; 3] = ["toy", "mid", "paper"];

    pub fn named(name: &str) -> Result<Self, ProfileError> {
        match name {
            "toy" => Self::toy(),
            "mid" => Self::mid(),
            "paper" => Self::paper(),
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    /// Exhaustively enumerable DDH tuple (`n = 2`, `d = 4`) and a small LWE pair.
    pub fn toy() -> Result<Self, ProfileError> {
        let group = GroupParams::from_safe_prime_order(TOY_GROUP_ORDER).map_err(DdhError::from)?;
        let ddh = DdhParams::new(group, 2, 4, ProfileKind::Toy)?;
        let (n, m, q) = (2, 72, TOY_LWE_MODULUS);
        let c_t = calibrated_c_t("toy", n, m, q)?;
        let lwe = LweParams::new(n, m, q, 1024, 2, 1, c_t, NoiseKind::TruncatedGaussian, ProfileKind::Toy)?;
        Ok(Self { name: "toy".into(), ddh, lwe })
    }

    /// 32-bit group with `n = 8`, `d = 64`; 40-bit LWE with the paper's `B_P` rule.
    pub fn mid() -> Result<Self, ProfileError> {
        let group = GroupParams::from_safe_prime_order(MID_GROUP_ORDER).map_err(DdhError::from)?;
        let ddh = DdhParams::new(group, 8, 64, ProfileKind::Toy)?;
        let (n, m, q) = (4, 256, MID_LWE_MODULUS);
        let c_t = calibrated_c_t("mid", n, m, q)?;
        let lwe = paper_lwe(n, m, q, c_t)?;
        Ok(Self { name: "mid".into(), ddh, lwe })
    }

    /// Sizes that follow the paper's rules: `n = 121·⌈log q⌉`, `d = n²`, and
    /// `B_P = q/(2·C_T·m·√((n+1)·log q))`. Meant for key generation and
    /// evaluation benchmarks only.
    pub fn paper() -> Result<Self, ProfileError> {
        let group = GroupParams::from_safe_prime_order(PAPER_GROUP_ORDER).map_err(DdhError::from)?;
        let n = 121 * group.q_bits();
        let ddh = DdhParams::new(group, n, (n * n) as u64, ProfileKind::PaperFaithful)?;
        let (ln, m, q) = (8, 512, MID_LWE_MODULUS);
        let c_t = calibrated_c_t("paper", ln, m, q)?;
        let lwe = paper_lwe(ln, m, q, c_t)?;
        Ok(Self { name: "paper".into(), ddh, lwe })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ddh(&self) -> &DdhParams {
        &self.ddh
    }

    pub fn lwe(&self) -> &LweParams {
        &self.lwe
    }

    pub fn summary(&self) -> ProfileSummary {
        let g = self.ddh.group();
        ProfileSummary {
            name: self.name.clone(),
            ddh_kind: self.ddh.profile(),
            p: g.p().to_string(),
            q: g.q().to_string(),
            n: self.ddh.n(),
            d: self.ddh.d(),
            w: self.ddh.w(),
            lwe_kind: self.lwe.profile(),
            lwe_n: self.lwe.n(),
            m: self.lwe.m(),
            lwe_q: self.lwe.q(),
            b_p: self.lwe.b_p(),
            b_v: self.lwe.b_v(),
            b_l: self.lwe.b_l(),
            c_t: self.lwe.c_t(),
        }
    }
}

/// Paper-sized `B_P`, with `B_V = B_P/2^10` and `B_L = B_V/2^4` (floored at 1).
fn paper_lwe(n: usize, m: usize, q: u64, c_t: f64) -> Result<LweParams, LweError> {
    let probe = LweParams::paper_faithful(n, m, q, c_t, 1, 1)?;
    let b_v = (probe.b_p() >> 10).max(1);
    let b_l = (b_v >> 4).max(1);
    LweParams::paper_faithful(n, m, q, c_t, b_v, b_l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles_build() {
        for name in ParamProfile::NAMES {
            let p = ParamProfile::named(name).unwrap();
            assert_eq!(p.name(), name);
            assert!(p.lwe().b_p() >= 2);
        }
        assert!(matches!(ParamProfile::named("huge"), Err(ProfileError::Unknown(_))));
    }

    #[test]
    fn paper_profile_follows_sizing_rules() {
        let p = ParamProfile::paper().unwrap();
        assert_eq!(p.ddh().profile(), ProfileKind::PaperFaithful);
        assert_eq!(p.ddh().n(), 121 * 23);
        assert_eq!(p.ddh().d(), (121 * 23u64).pow(2));
        assert_eq!(p.lwe().profile(), ProfileKind::PaperFaithful);
        let s = p.summary();
        assert_eq!(s.w, 121 * 23 * 23);
    }

    #[test]
    fn toy_profile_shapes() {
        let p = ParamProfile::toy().unwrap();
        assert_eq!((p.ddh().n(), p.ddh().d()), (2, 4));
        assert_eq!(p.ddh().w(), 20);
        assert_eq!(p.lwe().m(), 72);
        assert!(p.lwe().c_t() > 0.0);
    }
}
