//! Experiment configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! eps_list = [1e-1, 1e-2, 1e-3]
//! pairs = "auto"            # or [[16, 47], [16, 17]]
//! refinement = "fixed"      # or "joint"
//! seed = 7
//!
//! [grid]
//! kmax = 2.0
//! half_count = 32
//! scheme = "gauss-legendre" # or "uniform"
//!
//! [potential]
//! kind = "separable"        # separable | dense | random
//! lambda = 0.5
//! beta = 1.0
//! profile = "yamaguchi"     # or "gaussian"
//!
//! [output]
//! path = "scan.csv"
//! format = "csv"            # or "json"
//! ```

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use lsl_core::hilbert::{GridSpec, ModelGrid, PotentialSpec, Profile, QuadratureScheme};
use lsl_core::lsl::Route;
use lsl_core::verify::validate_eps_list;
use serde::Deserialize;
use toml::Spanned;

/// A configuration problem, located by line where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, field `{}`: {}", self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }

    pub fn from_extension(path: &Path) -> Option<Self> {
        Format::parse(&path.extension()?.to_str()?.to_ascii_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Fixed,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    Auto,
    Explicit(Vec<(usize, usize)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub eps_list: Vec<f64>,
    pub pairs: PairSelection,
    pub refinement: Refinement,
    pub route: Option<Route>,
    pub incident: Option<usize>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

/// Values given on the command line; each replaces the matching config key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub index: Option<usize>,
    pub route: Option<Route>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    eps_list: Spanned<Vec<f64>>,
    pairs: Option<Spanned<RawPairs>>,
    refinement: Option<Spanned<String>>,
    route: Option<Spanned<String>>,
    incident: Option<Spanned<usize>>,
    seed: Option<u64>,
    grid: Spanned<RawGrid>,
    potential: Spanned<RawPotential>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPairs {
    Keyword(String),
    List(Vec<[usize; 2]>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    kmax: Spanned<f64>,
    half_count: Spanned<usize>,
    scheme: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    kind: Spanned<String>,
    lambda: Spanned<f64>,
    beta: Option<Spanned<f64>>,
    sigma: Option<Spanned<f64>>,
    profile: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<Spanned<String>>,
}

struct Locator<'a> {
    source: &'a str,
}

impl Locator<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.source.len());
        self.source[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, field: &str, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.line(span)),
            field: field.into(),
            message: message.into(),
        })
    }
}

fn flag_err<T>(flag: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line: None,
        field: flag.into(),
        message: message.into(),
    })
}

pub fn parse_config(source: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| ConfigError {
        line: e
            .span()
            .map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1),
        field: "<syntax>".into(),
        message: e.message().trim().to_string(),
    })?;
    let loc = Locator { source };

    let g = raw.grid.get_ref();
    let scheme = match &g.scheme {
        None => QuadratureScheme::GaussLegendre,
        Some(s) => match s.get_ref().parse() {
            Ok(v) => v,
            Err(_) => {
                return loc.err(
                    s.span(),
                    "grid.scheme",
                    format!("unknown scheme `{}`", s.get_ref()),
                )
            }
        },
    };
    let kmax = *g.kmax.get_ref();
    if !(kmax.is_finite() && kmax > 0.0) {
        return loc.err(
            g.kmax.span(),
            "grid.kmax",
            format!("must be positive, got {kmax}"),
        );
    }
    let half_count = *g.half_count.get_ref();
    if half_count == 0 {
        return loc.err(g.half_count.span(), "grid.half_count", "must be at least 1");
    }
    let grid = GridSpec {
        kmax,
        half_count,
        scheme,
    };

    let seed = overrides.seed.or(raw.seed).unwrap_or(0);
    let p = raw.potential.get_ref();
    let lambda = overrides.lambda.unwrap_or(*p.lambda.get_ref());
    if !lambda.is_finite() {
        return match overrides.lambda {
            Some(_) => flag_err("--lambda", "must be finite"),
            None => loc.err(p.lambda.span(), "potential.lambda", "must be finite"),
        };
    }
    let positive = |v: &Option<Spanned<f64>>, field: &str| -> Result<f64, ConfigError> {
        match v {
            None => Ok(1.0),
            Some(s) if s.get_ref().is_finite() && *s.get_ref() > 0.0 => Ok(*s.get_ref()),
            Some(s) => loc.err(s.span(), field, format!("must be positive, got {}", s.get_ref())),
        }
    };
    let potential = match p.kind.get_ref().as_str() {
        "separable" => {
            let beta = positive(&p.beta, "potential.beta")?;
            let profile = match p.profile.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
                None | Some(("yamaguchi", _)) => Profile::Yamaguchi { beta },
                Some(("gaussian", _)) => Profile::Gaussian { beta },
                Some((other, span)) => {
                    return loc.err(span, "potential.profile", format!("unknown profile `{other}`"))
                }
            };
            PotentialSpec::Separable {
                coupling: lambda,
                profile,
            }
        }
        "dense" => PotentialSpec::GaussianKernel {
            coupling: lambda,
            sigma: positive(&p.sigma, "potential.sigma")?,
        },
        "random" => PotentialSpec::RandomHermitian {
            coupling: lambda,
            seed,
        },
        other => {
            return loc.err(
                p.kind.span(),
                "potential.kind",
                format!("unknown kind `{other}` (expected separable, dense or random)"),
            )
        }
    };

    let eps_list = match &overrides.eps {
        Some(list) => {
            if let Err(e) = validate_eps_list(list) {
                return flag_err("--eps", e.to_string());
            }
            list.clone()
        }
        None => {
            if let Err(e) = validate_eps_list(raw.eps_list.get_ref()) {
                return loc.err(raw.eps_list.span(), "eps_list", e.to_string());
            }
            raw.eps_list.get_ref().clone()
        }
    };

    let size = 2 * half_count;
    let pairs = match &raw.pairs {
        None => PairSelection::Auto,
        Some(s) => match s.get_ref() {
            RawPairs::Keyword(k) if k == "auto" => PairSelection::Auto,
            RawPairs::Keyword(k) => {
                return loc.err(
                    s.span(),
                    "pairs",
                    format!("expected \"auto\" or a list of [n, k], got `{k}`"),
                )
            }
            RawPairs::List(list) => {
                if list.is_empty() {
                    return loc.err(s.span(), "pairs", "list is empty");
                }
                if let Some([n, k]) = list.iter().find(|[n, k]| *n >= size || *k >= size) {
                    return loc.err(
                        s.span(),
                        "pairs",
                        format!("pair [{n}, {k}] out of range for grid of size {size}"),
                    );
                }
                PairSelection::Explicit(list.iter().map(|&[n, k]| (n, k)).collect())
            }
        },
    };
    if pairs == PairSelection::Auto && size < 8 {
        return loc.err(
            raw.grid.span(),
            "grid.half_count",
            "automatic pairs need at least 8 grid points",
        );
    }

    let refinement = match raw.refinement.as_ref().map(|s| (s.get_ref().as_str(), s.span())) {
        None | Some(("fixed", _)) => Refinement::Fixed,
        Some(("joint", _)) => Refinement::Joint,
        Some((other, span)) => {
            return loc.err(
                span,
                "refinement",
                format!("expected fixed or joint, got `{other}`"),
            )
        }
    };

    let route = match (&overrides.route, &raw.route) {
        (Some(r), _) => Some(*r),
        (None, None) => None,
        (None, Some(s)) => match s.get_ref().parse::<Route>() {
            Ok(r) => Some(r),
            Err(e) => return loc.err(s.span(), "route", e.to_string()),
        },
    };
    if route == Some(Route::SeparableClosed) && !potential.is_separable() {
        return flag_err("route", "separable-closed needs a separable potential");
    }

    let incident = match (overrides.index, &raw.incident) {
        (Some(i), _) if i >= size => {
            return flag_err("--index", format!("{i} out of range for grid of size {size}"))
        }
        (Some(i), _) => Some(i),
        (None, Some(s)) if *s.get_ref() >= size => {
            return loc.err(
                s.span(),
                "incident",
                format!("{} out of range for grid of size {size}", s.get_ref()),
            )
        }
        (None, s) => s.as_ref().map(|s| *s.get_ref()),
    };

    let (mut output_path, mut format) = (None, Format::Csv);
    if let Some(o) = &raw.output {
        output_path = o.path.clone();
        if let Some(f) = &o.format {
            format = match Format::parse(f.get_ref()) {
                Some(f) => f,
                None => {
                    return loc.err(
                        f.span(),
                        "output.format",
                        format!("expected csv or json, got `{}`", f.get_ref()),
                    )
                }
            };
        }
    }
    if let Some(out) = &overrides.out {
        if let Some(f) = Format::from_extension(out) {
            format = f;
        }
        output_path = Some(out.clone());
    }

    Ok(ExperimentConfig {
        grid,
        potential,
        eps_list,
        pairs,
        refinement,
        route,
        incident,
        seed,
        output_path,
        format,
    })
}

impl ExperimentConfig {
    pub fn build_grid(&self) -> lsl_core::Result<ModelGrid> {
        self.grid.build()
    }

    pub fn pair_list(&self, grid: &ModelGrid) -> lsl_core::Result<Vec<(usize, usize)>> {
        match &self.pairs {
            PairSelection::Auto => lsl_core::verify::auto_pairs(grid),
            PairSelection::Explicit(p) => Ok(p.clone()),
        }
    }

    /// Route for scans and dumps: the configured one, else the closed form for
    /// separable potentials and the integral-equation solve otherwise.
    pub fn solution_route(&self) -> Route {
        self.route.unwrap_or(if self.potential.is_separable() {
            Route::SeparableClosed
        } else {
            Route::LsSolve
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
eps_list = [1e-1, 1e-2]
seed = 3

[grid]
kmax = 2.0
half_count = 16

[potential]
kind = "separable"
lambda = 0.5
"#;

    #[test]
    fn parses_defaults() {
        let c = parse_config(BASE, &Overrides::default()).unwrap();
        assert_eq!(c.grid.scheme, QuadratureScheme::GaussLegendre);
        assert_eq!(c.pairs, PairSelection::Auto);
        assert_eq!(c.refinement, Refinement::Fixed);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.seed, 3);
        assert_eq!(c.solution_route(), Route::SeparableClosed);
        assert_eq!(
            c.potential,
            PotentialSpec::Separable {
                coupling: 0.5,
                profile: Profile::Yamaguchi { beta: 1.0 }
            }
        );
    }

    #[test]
    fn negative_eps_points_at_its_line() {
        let src = BASE.replace("[1e-1, 1e-2]", "[1e-1, -1.0]");
        let e = parse_config(&src, &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.field, "eps_list");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let src = BASE.replace("half_count = 16", "half_count = 16\nhalf_cout = 3");
        let e = parse_config(&src, &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(8));
        assert!(e.message.contains("half_cout"), "{}", e.message);
    }

    #[test]
    fn out_of_range_pair_rejected() {
        let src = format!("pairs = [[0, 40]]\n{BASE}");
        let e = parse_config(&src, &Overrides::default()).unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (Some(1), "pairs"));
    }

    #[test]
    fn overrides_replace_keys() {
        let o = Overrides {
            eps: Some(vec![1e-3]),
            lambda: Some(0.0),
            out: Some(PathBuf::from("x.json")),
            seed: Some(9),
            index: Some(4),
            route: Some(Route::LowSolve),
        };
        let c = parse_config(BASE, &o).unwrap();
        assert_eq!(c.eps_list, vec![1e-3]);
        assert_eq!(c.potential.coupling(), 0.0);
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.seed, 9);
        assert_eq!(c.incident, Some(4));
        assert_eq!(c.solution_route(), Route::LowSolve);
        let bad = Overrides {
            eps: Some(vec![1e-3, 1e-2]),
            ..Default::default()
        };
        assert_eq!(parse_config(BASE, &bad).unwrap_err().field, "--eps");
    }

    #[test]
    fn explicit_pairs_and_kinds() {
        let src = BASE
            .replace("kind = \"separable\"", "kind = \"dense\"\nsigma = 0.5")
            .replace(
                "seed = 3",
                "seed = 3\npairs = [[1, 2], [3, 28]]\nrefinement = \"joint\"",
            );
        let c = parse_config(&src, &Overrides::default()).unwrap();
        assert_eq!(c.pairs, PairSelection::Explicit(vec![(1, 2), (3, 28)]));
        assert_eq!(c.refinement, Refinement::Joint);
        assert_eq!(c.solution_route(), Route::LsSolve);
        let bad = BASE.replace("\"separable\"", "\"tensor\"");
        assert_eq!(
            parse_config(&bad, &Overrides::default()).unwrap_err().field,
            "potential.kind"
        );
    }
}
