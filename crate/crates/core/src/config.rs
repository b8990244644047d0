//! TOML scenario files.
//!
//! ```toml
//! name = "shifted-normal"        # optional, defaults to the file stem
//! support_hint = [-5.0, 7.0]
//!
//! [marginal]
//! kind = "normal"                # normal | uniform | gamma | normal-mixture
//! [marginal.params]
//! mu = 1.0
//! sigma = 1.0
//!
//! [eta]
//! kind = "cdf-link"              # cdf-link | cusp | jump | table
//! ```
//!
//! Parameters per kind:
//!
//! | kind             | params                                  |
//! |------------------|-----------------------------------------|
//! | `normal`         | `mu`, `sigma`                           |
//! | `uniform`        | `a`, `b`                                |
//! | `gamma`          | `shape` and one of `rate`, `scale`      |
//! | `normal-mixture` | `weight`, `mu1`, `sigma1`, `mu2`, `sigma2` |
//! | `cdf-link`       | none                                    |
//! | `cusp`           | `alpha1`, `alpha2`                      |
//! | `jump`           | `lo`, `hi`, `theta0`                    |
//! | `table`          | `x`, `eta` (arrays of equal length)     |
//!
//! Unknown keys are rejected.

use std::collections::HashMap;
use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::scenarios::{Eta, Marginal, Scenario};

/// Line numbers (1-based) of every dotted key in a TOML document, found by a
/// line scan. Covers section headers and `key = value` lines.
fn key_lines(text: &str) -> HashMap<String, usize> {
    let mut out = HashMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = h.trim().trim_matches(|c| c == '[' || c == ']').trim().to_string();
            out.entry(section.clone()).or_insert(i + 1);
        } else if let Some((k, _)) = line.split_once('=') {
            let k = k.trim().trim_matches('"');
            let full = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            out.entry(full).or_insert(i + 1);
        }
    }
    out
}

struct Reader {
    lines: HashMap<String, usize>,
}

impl Reader {
    fn line_of(&self, key: &str) -> Option<usize> {
        let mut k = key;
        loop {
            if let Some(&l) = self.lines.get(k) {
                return Some(l);
            }
            k = k.rsplit_once('.')?.0;
        }
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            line: self.line_of(key),
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn check_keys(&self, table: &Table, prefix: &str, allowed: &[&str]) -> Result<()> {
        for k in table.keys() {
            if !allowed.contains(&k.as_str()) {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                let expected = if allowed.is_empty() {
                    "no keys are allowed here".to_string()
                } else {
                    format!("expected one of: {}", allowed.join(", "))
                };
                return Err(self.err(&key, format!("unknown key `{k}`; {expected}")));
            }
        }
        Ok(())
    }

    fn table<'a>(&self, parent: &'a Table, prefix: &str, key: &str) -> Result<Option<&'a Table>> {
        let full = join(prefix, key);
        match parent.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(self.err(&full, "expected a table")),
        }
    }

    fn string<'a>(&self, parent: &'a Table, prefix: &str, key: &str) -> Result<&'a str> {
        let full = join(prefix, key);
        match parent.get(key) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(self.err(&full, "expected a string")),
            None => Err(self.err(&full, "missing required key")),
        }
    }

    fn number(&self, v: &Value, key: &str) -> Result<f64> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.err(key, "expected a number")),
        }
    }

    fn float(&self, parent: &Table, prefix: &str, key: &str) -> Result<f64> {
        let full = join(prefix, key);
        match parent.get(key) {
            Some(v) => self.number(v, &full),
            None => Err(self.err(&full, "missing required key")),
        }
    }

    fn floats(&self, parent: &Table, prefix: &str, key: &str) -> Result<Vec<f64>> {
        let full = join(prefix, key);
        match parent.get(key) {
            Some(Value::Array(a)) => a.iter().map(|v| self.number(v, &full)).collect(),
            Some(_) => Err(self.err(&full, "expected an array of numbers")),
            None => Err(self.err(&full, "missing required key")),
        }
    }

    fn marginal(&self, root: &Table) -> Result<Marginal> {
        let t = self
            .table(root, "", "marginal")?
            .ok_or_else(|| self.err("marginal", "missing required section"))?;
        self.check_keys(t, "marginal", &["kind", "params"])?;
        let kind = self.string(t, "marginal", "kind")?;
        let empty = Table::new();
        let p = self.table(t, "marginal", "params")?.unwrap_or(&empty);
        let pre = "marginal.params";
        let m = match kind {
            "normal" => {
                self.check_keys(p, pre, &["mu", "sigma"])?;
                Marginal::Normal {
                    mu: self.float(p, pre, "mu")?,
                    sigma: self.float(p, pre, "sigma")?,
                }
            }
            "uniform" => {
                self.check_keys(p, pre, &["a", "b"])?;
                Marginal::Uniform {
                    a: self.float(p, pre, "a")?,
                    b: self.float(p, pre, "b")?,
                }
            }
            "gamma" => {
                self.check_keys(p, pre, &["shape", "rate", "scale"])?;
                let shape = self.float(p, pre, "shape")?;
                let rate = match (p.contains_key("rate"), p.contains_key("scale")) {
                    (true, false) => self.float(p, pre, "rate")?,
                    (false, true) => {
                        let scale = self.float(p, pre, "scale")?;
                        if !(scale > 0.0 && scale.is_finite()) {
                            return Err(self.err("marginal.params.scale", format!("must be > 0, got {scale}")));
                        }
                        1.0 / scale
                    }
                    _ => return Err(self.err("marginal.params.rate", "give exactly one of `rate` and `scale`")),
                };
                Marginal::Gamma { shape, rate }
            }
            "normal-mixture" => {
                self.check_keys(p, pre, &["weight", "mu1", "sigma1", "mu2", "sigma2"])?;
                Marginal::NormalMixture {
                    weight: self.float(p, pre, "weight")?,
                    mu1: self.float(p, pre, "mu1")?,
                    sigma1: self.float(p, pre, "sigma1")?,
                    mu2: self.float(p, pre, "mu2")?,
                    sigma2: self.float(p, pre, "sigma2")?,
                }
            }
            other => {
                return Err(self.err(
                    "marginal.kind",
                    format!("unknown marginal `{other}`; expected normal|uniform|gamma|normal-mixture"),
                ))
            }
        };
        m.validate().map_err(|e| self.located(e))?;
        Ok(m)
    }

    fn eta(&self, root: &Table) -> Result<Eta> {
        let t = self
            .table(root, "", "eta")?
            .ok_or_else(|| self.err("eta", "missing required section"))?;
        self.check_keys(t, "eta", &["kind", "params"])?;
        let kind = self.string(t, "eta", "kind")?;
        let empty = Table::new();
        let p = self.table(t, "eta", "params")?.unwrap_or(&empty);
        let pre = "eta.params";
        let e = match kind {
            "cdf-link" => {
                self.check_keys(p, pre, &[])?;
                Eta::CdfLink
            }
            "cusp" => {
                self.check_keys(p, pre, &["alpha1", "alpha2"])?;
                Eta::Cusp {
                    alpha1: self.float(p, pre, "alpha1")?,
                    alpha2: self.float(p, pre, "alpha2")?,
                }
            }
            "jump" => {
                self.check_keys(p, pre, &["lo", "hi", "theta0"])?;
                Eta::Jump {
                    lo: self.float(p, pre, "lo")?,
                    hi: self.float(p, pre, "hi")?,
                    theta0: self.float(p, pre, "theta0")?,
                }
            }
            "table" => {
                self.check_keys(p, pre, &["x", "eta"])?;
                Eta::Table {
                    xs: self.floats(p, pre, "x")?,
                    values: self.floats(p, pre, "eta")?,
                }
            }
            other => {
                return Err(self.err(
                    "eta.kind",
                    format!("unknown eta `{other}`; expected cdf-link|cusp|jump|table"),
                ))
            }
        };
        e.validate().map_err(|e| self.located(e))?;
        Ok(e)
    }

    /// Attaches a line number to a validation error.
    fn located(&self, e: Error) -> Error {
        match e {
            Error::Validation { field, message } => {
                let field = if field == "marginal.params.rate" && !self.lines.contains_key(&field) {
                    "marginal.params.scale".to_string()
                } else {
                    field
                };
                self.err(&field, message)
            }
            e => e,
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Parses a scenario from TOML text. `default_name` is used when the file
/// has no `name` key.
pub fn parse_scenario(text: &str, default_name: &str) -> Result<Scenario> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        Error::Config {
            line,
            key: None,
            message: e.message().to_string(),
        }
    })?;
    let r = Reader { lines: key_lines(text) };
    r.check_keys(&root, "", &["name", "support_hint", "marginal", "eta"])?;
    let name = match root.get("name") {
        None => default_name.to_string(),
        Some(_) => r.string(&root, "", "name")?.to_string(),
    };
    let hint = r.floats(&root, "", "support_hint")?;
    if hint.len() != 2 {
        return Err(r.err("support_hint", format!("expected [lo, hi], got {} values", hint.len())));
    }
    let marginal = r.marginal(&root)?;
    let eta = r.eta(&root)?;
    Scenario::new(name, marginal, eta, (hint[0], hint[1])).map_err(|e| r.located(e))
}

/// Loads a scenario file; the name defaults to the file stem.
pub fn load_scenario_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_scenario(&text, stem)
}

/// Built-in name or path to a scenario file.
pub fn resolve_scenario(spec: &str) -> Result<Scenario> {
    let looks_like_path = spec.ends_with(".toml") || spec.contains('/') || spec.contains('\\');
    if looks_like_path || (Scenario::builtin(spec).is_err() && Path::new(spec).is_file()) {
        load_scenario_config(spec)
    } else {
        Scenario::builtin(spec)
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// TOML text that [`parse_scenario`] maps back to an equal scenario.
pub fn scenario_to_toml(s: &Scenario) -> String {
    let (lo, hi) = s.support_hint();
    let mut out = format!(
        "name = {:?}\nsupport_hint = [{}, {}]\n\n[marginal]\n",
        s.name(),
        num(lo),
        num(hi)
    );
    let params: Vec<(&str, f64)> = match *s.marginal() {
        Marginal::Normal { mu, sigma } => {
            out.push_str("kind = \"normal\"\n");
            vec![("mu", mu), ("sigma", sigma)]
        }
        Marginal::Uniform { a, b } => {
            out.push_str("kind = \"uniform\"\n");
            vec![("a", a), ("b", b)]
        }
        Marginal::Gamma { shape, rate } => {
            out.push_str("kind = \"gamma\"\n");
            vec![("shape", shape), ("rate", rate)]
        }
        Marginal::NormalMixture {
            weight,
            mu1,
            sigma1,
            mu2,
            sigma2,
        } => {
            out.push_str("kind = \"normal-mixture\"\n");
            vec![
                ("weight", weight),
                ("mu1", mu1),
                ("sigma1", sigma1),
                ("mu2", mu2),
                ("sigma2", sigma2),
            ]
        }
    };
    out.push_str("[marginal.params]\n");
    for (k, v) in params {
        out.push_str(&format!("{k} = {}\n", num(v)));
    }
    out.push_str("\n[eta]\n");
    match s.eta() {
        Eta::CdfLink => out.push_str("kind = \"cdf-link\"\n"),
        Eta::Cusp { alpha1, alpha2 } => out.push_str(&format!(
            "kind = \"cusp\"\n[eta.params]\nalpha1 = {}\nalpha2 = {}\n",
            num(*alpha1),
            num(*alpha2)
        )),
        Eta::Jump { lo, hi, theta0 } => out.push_str(&format!(
            "kind = \"jump\"\n[eta.params]\nlo = {}\nhi = {}\ntheta0 = {}\n",
            num(*lo),
            num(*hi),
            num(*theta0)
        )),
        Eta::Table { xs, values } => {
            let list = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
            out.push_str(&format!(
                "kind = \"table\"\n[eta.params]\nx = [{}]\neta = [{}]\n",
                list(xs),
                list(values)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE2: &str = r#"
name = "example2"
support_hint = [-5.0, 7.0]

[marginal]
kind = "normal"
[marginal.params]
mu = 1.0
sigma = 1.0

[eta]
kind = "cdf-link"
"#;

    #[test]
    fn example2_file_equals_builtin() {
        let s = parse_scenario(EXAMPLE2, "x").unwrap();
        assert_eq!(s, Scenario::builtin("example2").unwrap());
    }

    #[test]
    fn negative_sigma_names_the_key() {
        let text = EXAMPLE2.replace("sigma = 1.0", "sigma = -1");
        match parse_scenario(&text, "x").unwrap_err() {
            Error::Config { line, key, .. } => {
                assert_eq!(key.as_deref(), Some("marginal.params.sigma"));
                assert_eq!(line, Some(9));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE2.replace("[eta]", "[etta]");
        let e = parse_scenario(&text, "x").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), line: Some(11), .. } if k == "etta"), "{e:?}");
        assert!(e.to_string().contains("etta"));

        let text = EXAMPLE2.replace("mu = 1.0", "mu = 1.0\nmean = 2.0");
        let e = parse_scenario(&text, "x").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), .. } if k == "marginal.params.mean"));

        let text = EXAMPLE2.replace("kind = \"cdf-link\"", "kind = \"cdf-link\"\n[eta.params]\nalpha1 = 0.5");
        assert!(parse_scenario(&text, "x").is_err());
    }

    #[test]
    fn missing_pieces() {
        let no_eta = &EXAMPLE2[..EXAMPLE2.find("[eta]").unwrap()];
        let e = parse_scenario(no_eta, "x").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), .. } if k == "eta"));
        let e = parse_scenario(&EXAMPLE2.replace("sigma = 1.0\n", ""), "x").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), .. } if k == "marginal.params.sigma"));
        let e = parse_scenario("support_hint = [1.0", "x").unwrap_err();
        assert!(matches!(e, Error::Config { line: Some(1), .. }));
    }

    #[test]
    fn gamma_rate_or_scale() {
        let base = "support_hint = [0.0, 8.0]\n[marginal]\nkind = \"gamma\"\n[marginal.params]\nshape = 2\n";
        let eta = "[eta]\nkind = \"cdf-link\"\n";
        let by_scale = parse_scenario(&format!("{base}scale = 0.5\n{eta}"), "g").unwrap();
        let by_rate = parse_scenario(&format!("{base}rate = 2.0\n{eta}"), "g").unwrap();
        assert_eq!(by_scale, by_rate);
        assert_eq!(by_scale.name(), "g");
        assert!(parse_scenario(&format!("{base}rate = 2.0\nscale = 0.5\n{eta}"), "g").is_err());
        let e = parse_scenario(&format!("{base}scale = -1\n{eta}"), "g").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), .. } if k == "marginal.params.scale"));
    }

    #[test]
    fn builtins_round_trip() {
        for name in crate::scenarios::BUILTIN_NAMES {
            let s = Scenario::builtin(name).unwrap();
            assert_eq!(parse_scenario(&scenario_to_toml(&s), "x").unwrap(), s, "{name}");
        }
        let table = Scenario::new(
            "t",
            Marginal::Uniform { a: 0.0, b: 1.0 },
            Eta::Table {
                xs: vec![0.0, 1.0],
                values: vec![0.1, 0.9],
            },
            (0.0, 1.0),
        )
        .unwrap();
        assert_eq!(parse_scenario(&scenario_to_toml(&table), "x").unwrap(), table);
    }

    #[test]
    fn cusp_validation_is_located() {
        let text = "support_hint = [-1, 1]\n[marginal]\nkind = \"uniform\"\n[marginal.params]\na = -1\nb = 1\n\
                    [eta]\nkind = \"cusp\"\n[eta.params]\nalpha1 = 0.5\nalpha2 = 1.5\n";
        let e = parse_scenario(text, "c").unwrap_err();
        assert!(matches!(&e, Error::Config { key: Some(k), line: Some(11), .. } if k == "eta.params.alpha2"), "{e:?}");
    }
}
