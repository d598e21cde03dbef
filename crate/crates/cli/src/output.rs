use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::RunError;

/// Writes `contents` to a sibling temp file, flushes it and renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("output path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Output directory of one case or command.
#[derive(Clone, Debug)]
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self, RunError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| RunError::internal(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_ref())
            .map_err(|e| RunError::internal(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write_json(&self, name: &str, value: &impl serde::Serialize) -> Result<(), RunError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| RunError::internal(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path().join("a/b")).unwrap();
        out.write("x.json", "{}").unwrap();
        out.write("x.json", "[1]").unwrap();
        let names: Vec<_> = fs::read_dir(out.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["x.json"]);
        assert_eq!(
            fs::read_to_string(out.path().join("x.json")).unwrap(),
            "[1]"
        );
    }
}
