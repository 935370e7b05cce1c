//! Single-writer single-reader regular register emulations.

mod auth;
mod double_write;

pub use auth::AuthRegister;
pub use double_write::DoubleWriteRegister;

use crate::error::{Error, Result};
use crate::sim::Value;

/// Value of the pair with the largest timestamp; ties go to the larger value.
pub fn highestval<'a, I>(pairs: I) -> Result<Value>
where
    I: IntoIterator<Item = (u64, &'a Value)>,
{
    pairs
        .into_iter()
        .max()
        .map(|(_, v)| v.clone())
        .ok_or_else(|| Error::InvalidArgument("highestval of an empty set".into()))
}
