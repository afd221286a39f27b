pub mod bench;
pub mod channels;
pub mod codec;
pub mod construction;
pub mod crossbar;
pub mod error;
pub mod estimation;
pub mod oracle;
pub mod rng;
