use std::io::Write;

use super::DiscretizedPath;
use crate::error::Result;
use crate::report::format_float;

/// Writes `t, x, y, discount, flags`; the flag is `stop` on the
/// termination sample and empty elsewhere.
pub fn write_path_csv<W: Write>(path: &DiscretizedPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "discount", "flags"])?;
    for i in 0..path.len() {
        w.write_record([
            format_float(path.times[i]),
            format_float(path.x[i]),
            format_float(path.y[i]),
            format_float(path.discount[i]),
            flag(path, i).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Several paths in one table, with a leading `path` index column.
pub fn write_paths_csv<W: Write>(paths: &[DiscretizedPath], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path", "t", "x", "y", "discount", "flags"])?;
    for (k, path) in paths.iter().enumerate() {
        for i in 0..path.len() {
            w.write_record([
                k.to_string(),
                format_float(path.times[i]),
                format_float(path.x[i]),
                format_float(path.y[i]),
                format_float(path.discount[i]),
                flag(path, i).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn flag(path: &DiscretizedPath, i: usize) -> &'static str {
    match (path.stopped_at == Some(i), path.hit) {
        (true, true) => "stop_hit",
        (true, false) => "stop",
        _ => "",
    }
}
