use crate::error::Result;
use serde::Serialize;

/// Prints `value` as one JSON line.
pub fn json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}
