use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::OutputBlock;
use crate::error::CliResult;

/// Output directory with the enabled file formats.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    csv: bool,
    json: bool,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(block: &OutputBlock) -> CliResult<Self> {
        std::fs::create_dir_all(&block.directory)?;
        Ok(Artifacts { dir: block.directory.clone(), csv: block.csv(), json: block.json(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn open(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        if !self.json {
            return Ok(());
        }
        let text = rhcontract::report::to_json_string(value)?;
        let mut w = self.open(name)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> rhcontract::Result<()>,
    ) -> CliResult<()> {
        if !self.csv {
            return Ok(());
        }
        let mut w = self.open(name)?;
        write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}
