pub mod alm;
pub mod distance;
pub mod error;
pub mod extract;
pub mod grid;
pub mod levelset;
pub mod oracle;
pub mod osm;
pub mod report;
pub mod shapes;
pub mod spectral;

pub use error::{Error, Result};
