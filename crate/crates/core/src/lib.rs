pub mod algebra;
pub mod codec;
pub mod coins;
pub mod ddh;
pub mod family;
pub mod games;
pub mod lwe;
pub mod parallel;
pub mod profile;
pub mod protocol;
pub mod provers;
pub mod stats;
