use std::io::Write;
use std::path::{Path, PathBuf};

use gibbs_mcid::{Error, Result};

/// Flags that only choose where or how fast output is produced.
const UNRECORDED: [&str; 3] = ["--out", "--threads", "--draws-out"];

/// The command line minus the program name and the unrecorded flags.
pub fn recorded_argv(argv: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if UNRECORDED.contains(&a.as_str()) {
            it.next();
        } else if !UNRECORDED.iter().any(|f| a.starts_with(&format!("{f}="))) {
            out.push(a.clone());
        }
    }
    out
}

/// `#`-prefixed provenance block.
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(command: &str, argv: &[String]) -> Self {
        let json = serde_json::to_string(&recorded_argv(argv)).expect("strings serialize");
        Self {
            lines: vec![
                format!("# gibbs-mcid {} {command}", env!("CARGO_PKG_VERSION")),
                format!("# argv: {json}"),
            ],
        }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string().replace(['\n', '\r'], " ");
        self.lines.push(format!("# {key}: {v}"));
    }

    pub fn extend(&mut self, meta: impl IntoIterator<Item = (String, String)>) {
        for (k, v) in meta {
            self.push(&k, v);
        }
    }

    /// Header followed by `body`.
    pub fn document(&self, body: &str) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s.push_str(body);
        if !body.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

/// The argv recorded in a file written by this tool.
pub fn read_recorded_argv(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let line = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# argv: "))
        .ok_or_else(|| Error::Config {
            line: None,
            key: Some("argv".into()),
            message: format!("{} has no `# argv:` header line", path.display()),
        })?;
    serde_json::from_str(line).map_err(|e| Error::Config {
        line: None,
        key: Some("argv".into()),
        message: format!("unreadable argv header: {e}"),
    })
}

pub fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_error(path, e))?;
    tmp.write_all(content.as_bytes()).map_err(|e| io_error(path, e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, content),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// `<prefix>.<suffix>` without touching any extension already on `prefix`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn output_flags_are_not_recorded() {
        let argv = v(&["gibbs-mcid", "estimate", "--out", "a.csv", "--n", "5", "--threads=2", "--seed", "1"]);
        assert_eq!(recorded_argv(&argv), v(&["estimate", "--n", "5", "--seed", "1"]));
    }

    #[test]
    fn header_lines() {
        let mut h = Header::new("generate", &v(&["x", "generate", "--n", "3"]));
        h.push("note", "a\nb");
        let doc = h.document("x,y\n1,1");
        let lines: Vec<&str> = doc.lines().collect();
        assert!(lines[0].starts_with("# gibbs-mcid "));
        assert_eq!(lines[1], "# argv: [\"generate\",\"--n\",\"3\"]");
        assert_eq!(lines[2], "# note: a b");
        assert!(doc.ends_with("1,1\n"));
    }

    #[test]
    fn suffix_keeps_prefix() {
        assert_eq!(with_suffix(Path::new("out/res"), "table1.csv"), PathBuf::from("out/res.table1.csv"));
    }
}
