//! `key = value` run configuration for `relmat train`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use relmat::sampler::NegativeDistribution;
use relmat::{LrSchedule, SamplingMode, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEntry {
    pub path: PathBuf,
    /// Overrides the alpha stored in the matrix file header.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub matrices: Vec<MatrixEntry>,
    pub train: TrainConfig,
    pub out_dir: PathBuf,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("invalid boolean `{v}` for `{key}`")),
    }
}

pub fn parse_sampling(v: &str) -> Result<SamplingMode, String> {
    match v {
        "independent" => Ok(SamplingMode::Independent),
        "global" => Ok(SamplingMode::Global),
        _ => Err(format!("sampling must be `independent` or `global`, got `{v}`")),
    }
}

fn parse_negatives(v: &str) -> Result<NegativeDistribution, String> {
    match v.split_once(':') {
        None if v == "uniform" => Ok(NegativeDistribution::Uniform),
        None if v == "unigram" => Ok(NegativeDistribution::Unigram { power: 0.75 }),
        Some(("unigram", p)) => Ok(NegativeDistribution::Unigram { power: parse_num("negatives", p)? }),
        _ => Err(format!("negatives must be `uniform`, `unigram` or `unigram:<power>`, got `{v}`")),
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Relative paths are taken from the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let base = std::path::absolute(base).map_err(|e| CliError::Data(format!("{}: {e}", base.display())))?;
        Self::parse(&text, &base).map_err(|(line, msg)| CliError::Usage(format!("{}:{line}: {msg}", path.display())))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, (usize, String)> {
        let mut train = TrainConfig::default();
        let mut matrices = Vec::new();
        let mut out_dir = base.join("run");
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| (lineno, format!("expected `key = value`, got `{line}`")))?;
            let r: Result<(), String> = (|| {
                match key {
                    "matrix" => {
                        let mut parts = value.split_whitespace();
                        let file = parts.next().ok_or("`matrix` needs a path")?;
                        let mut alpha = None;
                        for extra in parts {
                            let a = extra.strip_prefix("alpha=").ok_or(format!("unexpected `{extra}`"))?;
                            alpha = Some(parse_num::<f64>("alpha", a)?);
                        }
                        if let Some(a) = alpha {
                            if !(0.0..=1.0).contains(&a) {
                                return Err(format!("alpha must be in [0, 1], got {a}"));
                            }
                        }
                        matrices.push(MatrixEntry { path: resolve(base, file), alpha });
                    }
                    "dim" => train.dim = parse_num(key, value)?,
                    "n_iter" => train.n_iter = parse_num(key, value)?,
                    "n_neg" => train.n_neg = parse_num(key, value)?,
                    "eta" => train.eta = parse_num(key, value)?,
                    "batch_size" => train.batch_size = parse_num(key, value)?,
                    "seed" => train.seed = parse_num(key, value)?,
                    "workers" => train.workers = parse_num(key, value)?,
                    "probe_pairs" => train.probe_pairs = parse_num(key, value)?,
                    "sampling" => train.sampling = parse_sampling(value)?,
                    "lr_schedule" => {
                        train.lr_schedule = match value {
                            "constant" => LrSchedule::Constant,
                            "linear" => LrSchedule::LinearDecay,
                            _ => return Err(format!("lr_schedule must be `constant` or `linear`, got `{value}`")),
                        }
                    }
                    "negatives" => train.negatives = parse_negatives(value)?,
                    "exclude_positive" => train.exclude_positive = parse_bool(key, value)?,
                    "checkpoint_every" => {
                        train.checkpoint_every = match value {
                            "none" => None,
                            v => Some(parse_num(key, v)?),
                        }
                    }
                    "out_dir" => out_dir = resolve(base, value),
                    _ => return Err(format!("unknown key `{key}`")),
                }
                Ok(())
            })();
            r.map_err(|m| (lineno, m))?;
        }
        if matrices.is_empty() {
            return Err((0, "no `matrix` entries".into()));
        }
        train.validate().map_err(|e| (0, e.to_string()))?;
        Ok(Self { matrices, train, out_dir })
    }

    pub fn check_files(&self) -> Result<(), CliError> {
        for m in &self.matrices {
            if !m.path.is_file() {
                return Err(CliError::Data(format!("matrix file not found: {}", m.path.display())));
            }
        }
        Ok(())
    }

    /// Fully explicit form, parseable by [`RunConfig::parse`] from any directory.
    pub fn echo(&self) -> String {
        let t = &self.train;
        let mut s = String::new();
        for m in &self.matrices {
            match m.alpha {
                Some(a) => writeln!(s, "matrix = {} alpha={a}", m.path.display()),
                None => writeln!(s, "matrix = {}", m.path.display()),
            }
            .expect("write to string");
        }
        let sampling = match t.sampling {
            SamplingMode::Independent => "independent",
            SamplingMode::Global => "global",
        };
        let schedule = match t.lr_schedule {
            LrSchedule::Constant => "constant",
            LrSchedule::LinearDecay => "linear",
        };
        let negatives = match t.negatives {
            NegativeDistribution::Uniform => "uniform".to_string(),
            NegativeDistribution::Unigram { power } => format!("unigram:{power}"),
        };
        let checkpoint = t.checkpoint_every.map_or("none".to_string(), |c| c.to_string());
        for (k, v) in [
            ("dim", t.dim.to_string()),
            ("n_iter", t.n_iter.to_string()),
            ("n_neg", t.n_neg.to_string()),
            ("eta", t.eta.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("seed", t.seed.to_string()),
            ("workers", t.workers.to_string()),
            ("probe_pairs", t.probe_pairs.to_string()),
            ("sampling", sampling.to_string()),
            ("lr_schedule", schedule.to_string()),
            ("negatives", negatives),
            ("exclude_positive", t.exclude_positive.to_string()),
            ("checkpoint_every", checkpoint),
            ("out_dir", self.out_dir.display().to_string()),
        ] {
            writeln!(s, "{k} = {v}").expect("write to string");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_echoes() {
        let text = "# run\nmatrix = ab.mat\nmatrix = /abs/ac.mat alpha=0.25\ndim = 8\nsampling = global\nnegatives = unigram:0.5\ncheckpoint_every = 5 # inline\n";
        let c = RunConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.matrices[0].path, Path::new("/base/ab.mat"));
        assert_eq!(c.matrices[1], MatrixEntry { path: "/abs/ac.mat".into(), alpha: Some(0.25) });
        assert_eq!(c.train.dim, 8);
        assert_eq!(c.train.sampling, SamplingMode::Global);
        assert_eq!(c.train.checkpoint_every, Some(5));
        assert_eq!(c.out_dir, Path::new("/base/run"));
        let again = RunConfig::parse(&c.echo(), Path::new("/elsewhere")).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn reports_line_numbers() {
        let err = RunConfig::parse("matrix = a\n\nbogus = 1\n", Path::new("/")).unwrap_err();
        assert_eq!(err.0, 3);
        assert_eq!(RunConfig::parse("matrix = a\ndim = x\n", Path::new("/")).unwrap_err().0, 2);
        assert!(RunConfig::parse("matrix = a alpha=2\n", Path::new("/")).is_err());
        assert!(RunConfig::parse("dim = 3\n", Path::new("/")).is_err());
        assert!(RunConfig::parse("matrix = a\neta = 0\n", Path::new("/")).is_err());
    }
}
