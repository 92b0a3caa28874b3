pub mod acceptance;
pub mod conditionality;
pub mod error;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod spaces;
pub mod systems;
pub mod weight;

pub use error::{Error, Result};
