pub mod transcribe;
pub mod oracles;
