pub mod data;
pub mod encode;
pub mod sync;
pub mod train;
