pub mod appendix;
pub mod franks;
pub mod geodesic;
pub mod persist;
pub mod steer;
