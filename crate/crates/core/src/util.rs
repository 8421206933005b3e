use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// Pretty-printed JSON with a trailing newline. Key order follows the
/// serialized struct, so output is stable across runs.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json_pretty(value))
}
