pub mod bitio;
pub mod channel_removal;
pub mod codec;
pub mod entropy;
pub mod error;
pub mod metrics;
pub mod mode_select;
pub mod motion;
pub mod prediction;
pub mod synthetic;
pub mod transform;
pub mod video_io;
