//! Run configuration: command-line flags layered over an optional flat
//! `key = value` file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// config file, then to the command default.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Space dimension.
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Spherical harmonic degree of the bifurcation point.
    #[arg(long)]
    pub k: Option<u32>,
    /// Relative integrator tolerance (absolute tolerance is 1% of it).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Uniform points of the stored profile grid on [0.1, 1].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Truncation radius of the limit problem.
    #[arg(long)]
    pub r_trunc: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Skip the on-disk profile cache.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of eigenvalues.
    #[arg(long)]
    pub count: Option<usize>,
    /// Comma-separated eps values.
    #[arg(long)]
    pub eps_list: Option<String>,
    /// Comma-separated alpha values.
    #[arg(long)]
    pub alpha_grid: Option<String>,
    /// Use the limit (bubble) potential instead of a radial solution.
    #[arg(long)]
    pub limit: bool,
    /// Comma-separated criterion ids for `verify`.
    #[arg(long)]
    pub only: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "N")]
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub k: Option<u32>,
    pub tol: Option<f64>,
    pub grid_points: Option<usize>,
    pub r_trunc: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub no_cache: bool,
    pub count: Option<usize>,
    pub eps_list: Option<Vec<f64>>,
    pub alpha_grid: Option<Vec<f64>>,
    pub limit: bool,
    pub only: Option<Vec<u32>>,
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| CliError::invalid(format!("{key}: cannot parse '{x}'"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim().parse().map_err(|_| CliError::invalid(format!("{key}: cannot parse '{s}'")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool, CliError> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::invalid(format!("{key}: expected true or false, got '{other}'"))),
    }
}

impl RunConfig {
    /// Parse the flat file format: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::invalid(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().replace('-', "_");
            let v = value.trim();
            match key.as_str() {
                "N" => c.n = Some(parse_one(&key, v)?),
                "alpha" => c.alpha = Some(parse_one(&key, v)?),
                "eps" => c.eps = Some(parse_one(&key, v)?),
                "k" => c.k = Some(parse_one(&key, v)?),
                "tol" => c.tol = Some(parse_one(&key, v)?),
                "grid_points" => c.grid_points = Some(parse_one(&key, v)?),
                "r_trunc" => c.r_trunc = Some(parse_one(&key, v)?),
                "out" => c.out = Some(PathBuf::from(v)),
                "format" => {
                    c.format = Some(
                        Format::from_str(v, true).map_err(|_| CliError::invalid(format!("format: unknown '{v}'")))?,
                    )
                }
                "jobs" => c.jobs = Some(parse_one(&key, v)?),
                "no_cache" => c.no_cache = parse_bool(&key, v)?,
                "count" => c.count = Some(parse_one(&key, v)?),
                "eps_list" => c.eps_list = Some(parse_list(&key, v)?),
                "alpha_grid" => c.alpha_grid = Some(parse_list(&key, v)?),
                "limit" => c.limit = parse_bool(&key, v)?,
                "only" => c.only = Some(parse_list(&key, v)?),
                _ => return Err(CliError::invalid(format!("config line {}: unknown key '{key}'", lineno + 1))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Flags win over the file.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let flags = Self {
            n: args.n,
            alpha: args.alpha,
            eps: args.eps,
            k: args.k,
            tol: args.tol,
            grid_points: args.grid_points,
            r_trunc: args.r_trunc,
            out: args.out.clone(),
            format: args.format,
            jobs: args.jobs,
            no_cache: args.no_cache,
            count: args.count,
            eps_list: args.eps_list.as_deref().map(|s| parse_list("eps-list", s)).transpose()?,
            alpha_grid: args.alpha_grid.as_deref().map(|s| parse_list("alpha-grid", s)).transpose()?,
            limit: args.limit,
            only: args.only.as_deref().map(|s| parse_list("only", s)).transpose()?,
        };
        Ok(file.overlay(flags))
    }

    fn overlay(self, top: Self) -> Self {
        Self {
            n: top.n.or(self.n),
            alpha: top.alpha.or(self.alpha),
            eps: top.eps.or(self.eps),
            k: top.k.or(self.k),
            tol: top.tol.or(self.tol),
            grid_points: top.grid_points.or(self.grid_points),
            r_trunc: top.r_trunc.or(self.r_trunc),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
            jobs: top.jobs.or(self.jobs),
            no_cache: top.no_cache || self.no_cache,
            count: top.count.or(self.count),
            eps_list: top.eps_list.or(self.eps_list),
            alpha_grid: top.alpha_grid.or(self.alpha_grid),
            limit: top.limit || self.limit,
            only: top.only.or(self.only),
        }
    }

    pub fn require_n(&self) -> Result<u32, CliError> {
        let n = self.n.ok_or_else(|| CliError::invalid("--N is required"))?;
        if n < 3 {
            return Err(CliError::invalid(format!("--N {n}: dimension must be at least 3")));
        }
        Ok(n)
    }

    pub fn require_alpha(&self) -> Result<f64, CliError> {
        self.alpha.ok_or_else(|| CliError::invalid("--alpha is required"))
    }

    pub fn require_eps(&self) -> Result<f64, CliError> {
        self.eps.ok_or_else(|| CliError::invalid("--eps is required"))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::invalid(format!("--{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("tol", self.tol)?;
        positive("r-trunc", self.r_trunc)?;
        if let Some(r) = self.r_trunc {
            if r <= 1.0 {
                return Err(CliError::invalid(format!("--r-trunc must exceed 1, got {r}")));
            }
        }
        if let Some(g) = self.grid_points {
            if g < 2 {
                return Err(CliError::invalid("--grid-points must be at least 2"));
            }
        }
        if self.jobs == Some(0) {
            return Err(CliError::invalid("--jobs must be at least 1"));
        }
        if self.count == Some(0) {
            return Err(CliError::invalid("--count must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = RunConfig::parse("# sweep\nN = 3\nalpha-grid = 1, 2,3\neps_list=0.1,0.05 # two\nformat = csv\nno_cache = true\n").unwrap();
        assert_eq!(c.n, Some(3));
        assert_eq!(c.alpha_grid, Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(c.eps_list, Some(vec![0.1, 0.05]));
        assert_eq!(c.format, Some(Format::Csv));
        assert!(c.no_cache);
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("N 3").is_err());
        assert!(RunConfig::parse("eps = x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse("N = 4\neps = 0.1\nalpha = 2").unwrap();
        let flags = RunConfig {
            eps: Some(0.05),
            ..RunConfig::default()
        };
        let c = file.overlay(flags);
        assert_eq!((c.n, c.eps, c.alpha), (Some(4), Some(0.05), Some(2.0)));
    }
}
