//! Instance configuration: defaults, then a `key = value` file, then flags.

use std::fmt::Write as _;
use std::path::PathBuf;

use mdswpir::field::PrimeField;
use mdswpir::scheme::SchemeKind;
use mdswpir::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Pmf {
    Uniform,
    Weights(Vec<f64>),
}

impl std::str::FromStr for Pmf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "uniform" {
            return Ok(Pmf::Uniform);
        }
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad weight {t:?}"))))
            .collect::<Result<Vec<_>>>()
            .map(Pmf::Weights)
    }
}

impl std::fmt::Display for Pmf {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pmf::Uniform => f.write_str("uniform"),
            Pmf::Weights(w) => {
                let parts: Vec<String> = w.iter().map(|v| v.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceConfig {
    pub scheme: SchemeKind,
    pub files: usize,
    pub servers: usize,
    pub dim: usize,
    pub field: Option<u32>,
    pub grid: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
    pub server: usize,
    pub plot_script: Option<PathBuf>,
    pub pmf: Pmf,
    pub file: Option<usize>,
    pub symmetry: bool,
    pub tcp: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Olr,
            files: 2,
            servers: 3,
            dim: 2,
            field: None,
            grid: mdswpir::optimizer::DEFAULT_GRID,
            seed: 1,
            out: None,
            samples: None,
            server: 1,
            plot_script: None,
            pmf: Pmf::Uniform,
            file: None,
            symmetry: true,
            tcp: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {value:?} for {key}")))
}

impl InstanceConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "scheme" => self.scheme = v.parse()?,
            "files" => self.files = parse(key, v)?,
            "servers" => self.servers = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "field" => self.field = Some(parse(key, v)?),
            "grid" => self.grid = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "samples" => self.samples = Some(parse(key, v)?),
            "server" => self.server = parse(key, v)?,
            "plot_script" => self.plot_script = Some(PathBuf::from(v)),
            "pmf" => self.pmf = v.parse()?,
            "file" => self.file = Some(parse(key, v)?),
            "symmetry" => self.symmetry = parse(key, v)?,
            "transport" => {
                self.tcp = match v {
                    "tcp" => true,
                    "inproc" => false,
                    _ => return Err(Error::Parse(format!("unknown transport {v:?}"))),
                }
            }
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Parse(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Checks everything that can be checked without building the instance.
    pub fn validate(&self) -> Result<()> {
        mdswpir::storage::effective_params(self.servers, self.dim)?;
        if self.files == 0 {
            return Err(Error::InvalidParams("need at least one file".into()));
        }
        if self.servers > 255 || self.files * self.dim > 255 * 255 {
            return Err(Error::InvalidParams("instance too large for the wire format".into()));
        }
        if let Some(q) = self.field {
            let f = PrimeField::new(q)?;
            if (f.modulus() as usize) < self.servers {
                return Err(Error::FieldTooSmall {
                    q: f.modulus(),
                    n: self.servers,
                });
            }
        }
        if self.grid == 0 {
            return Err(Error::InvalidParams("grid must be positive".into()));
        }
        if self.server == 0 || self.server > self.servers {
            return Err(Error::OutOfRange {
                what: "server index",
                value: self.server,
                lo: 1,
                hi: self.servers,
            });
        }
        if let Some(m) = self.file {
            if m == 0 || m > self.files {
                return Err(Error::OutOfRange {
                    what: "file index",
                    value: m,
                    lo: 1,
                    hi: self.files,
                });
            }
        }
        if let Pmf::Weights(w) = &self.pmf {
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidPmf("weights must be nonnegative with a positive sum".into()));
            }
        }
        Ok(())
    }

    pub fn field(&self) -> PrimeField {
        match self.field {
            Some(q) => PrimeField::new(q).expect("validated"),
            None => PrimeField::smallest_at_least(self.servers),
        }
    }

    /// The resolved configuration as `# key = value` comment lines.
    pub fn header(&self, command: &str) -> String {
        let mut h = String::new();
        let _ = writeln!(h, "# mdswpir {command}");
        let _ = writeln!(h, "# scheme = {}", self.scheme);
        let _ = writeln!(h, "# files = {}", self.files);
        let _ = writeln!(h, "# servers = {}", self.servers);
        let _ = writeln!(h, "# dim = {}", self.dim);
        let _ = writeln!(h, "# field = {}", self.field().modulus());
        let _ = writeln!(h, "# grid = {}", self.grid);
        let _ = writeln!(h, "# seed = {}", self.seed);
        let _ = writeln!(h, "# server = {}", self.server);
        let _ = writeln!(h, "# pmf = {}", self.pmf);
        let _ = writeln!(h, "# symmetry = {}", self.symmetry);
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = InstanceConfig::default();
        c.apply_file("# sweep\nscheme = ztsl\nfiles=3 # inline\n\nseed = 9\n").unwrap();
        assert_eq!((c.scheme, c.files, c.seed), (SchemeKind::Ztsl, 3, 9));
        c.set("files", "2").unwrap();
        assert_eq!(c.files, 2);
        assert!(c.apply_file("bogus = 1").is_err());
        assert!(c.apply_file("files").is_err());
        assert!(c.apply_file("files = two").is_err());
    }

    #[test]
    fn validation() {
        let mut c = InstanceConfig::default();
        assert!(c.validate().is_ok());
        c.field = Some(2);
        assert!(c.validate().is_err());
        c.field = Some(4);
        assert!(c.validate().is_err());
        c.field = Some(7);
        assert!(c.validate().is_ok());
        c.dim = 3;
        assert!(c.validate().is_err());
        c.dim = 2;
        c.pmf = "1,-1".parse().unwrap();
        assert!(c.validate().is_err());
    }
}
