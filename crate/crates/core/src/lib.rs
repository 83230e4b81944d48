pub mod alerts;
pub mod article;
pub mod clock;
pub mod detector;
pub mod editstream;
pub mod geo;
pub mod ldf;
pub mod media;
pub mod wikigraph;

pub use article::{ArticleKey, ClusterKey, KeyError};
pub use clock::{Clock, ManualClock, SystemClock};
