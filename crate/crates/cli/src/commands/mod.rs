pub mod bench;
pub mod density;
pub mod fit;
pub mod profiles;
pub mod synth;
