use std::fs;
use std::path::Path;

use rbctrl::fem::ProblemFamily;
use rbctrl::greedy::default_tolerance;
use rbctrl::problem::DEFAULT_BETA;
use rbctrl::report::{ExperimentGrid, DEFAULT_MAX_NC};
use rbctrl::{Error, GreedyConfig, ProblemSpec, Registry, Result};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub family: ProblemFamily,
    pub nc: u32,
    #[serde(default = "default_subdomains")]
    pub n_subdomains: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub allow_fine: bool,
}

fn default_subdomains() -> usize {
    3
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfSupSection {
    /// Number of uniformly drawn parameters.
    pub samples: usize,
    /// Defaults to the greedy seed.
    pub seed: Option<u64>,
}

impl Default for InfSupSection {
    fn default() -> Self {
        Self { samples: 20, seed: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<ProblemSection>,
    greedy: Option<GreedyConfig>,
    #[serde(default)]
    infsup: InfSupSection,
    bench: Option<ExperimentGrid>,
}

/// A validated configuration file with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Option<ProblemSection>,
    pub greedy: GreedyConfig,
    pub infsup: InfSupSection,
    pub bench: ExperimentGrid,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?,
            None => String::new(),
        };
        let origin = path.map_or("<defaults>".to_string(), |p| p.display().to_string());
        Self::parse(&text, &origin, overrides)
    }

    pub fn parse(text: &str, origin: &str, overrides: Overrides) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        let tol_given = text
            .parse::<toml::Table>()
            .ok()
            .and_then(|t| t.get("greedy").and_then(|g| g.get("tol")).cloned())
            .is_some();

        let mut greedy = raw.greedy.unwrap_or_default();
        if let (Some(p), false) = (&raw.problem, tol_given) {
            greedy.tol = default_tolerance(p.family);
        }
        let mut bench = match (raw.bench, &raw.problem) {
            (Some(b), _) => b,
            (None, Some(p)) => ExperimentGrid {
                problem: p.family,
                ncs: vec![p.nc],
                n_subdomains: vec![p.n_subdomains],
                beta: p.beta,
                allow_fine: p.allow_fine,
                ..ExperimentGrid::default()
            },
            (None, None) => ExperimentGrid::default(),
        };
        if let Some(seed) = overrides.seed {
            greedy.seed = seed;
            bench.seed = seed;
        }
        if let Some(threads) = overrides.threads {
            greedy.threads = Some(threads);
            bench.threads = Some(threads);
        }
        let config = Self {
            problem: raw.problem,
            greedy,
            infsup: raw.infsup,
            bench,
        };
        config.validate(&Registry::default())?;
        Ok(config)
    }

    fn validate(&self, registry: &Registry) -> Result<()> {
        if let Some(p) = &self.problem {
            if p.nc > DEFAULT_MAX_NC && !p.allow_fine {
                return Err(Error::Config(format!(
                    "[problem] nc = {} exceeds {DEFAULT_MAX_NC}; set allow_fine = true to run fine meshes",
                    p.nc
                )));
            }
            self.spec()?.validate()?;
        }
        self.greedy.validate().map_err(|e| Error::Config(format!("[greedy] {e}")))?;
        registry.projection(&self.greedy.formulation)?;
        registry.stabilization(&self.greedy.stabilization)?;
        if self.infsup.samples == 0 {
            return Err(Error::Config("[infsup] samples must be at least 1".into()));
        }
        Ok(())
    }

    /// The `[problem]` section as a model description.
    pub fn spec(&self) -> Result<ProblemSpec> {
        let p = self
            .problem
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [problem] section".into()))?;
        let mut spec = match p.family {
            ProblemFamily::Diffusion => ProblemSpec::diffusion(p.nc, p.n_subdomains),
            ProblemFamily::Graetz => ProblemSpec::graetz(p.nc),
        };
        spec.beta = p.beta;
        Ok(spec)
    }

    pub fn infsup_seed(&self) -> u64 {
        self.infsup.seed.unwrap_or(self.greedy.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, "test.toml", Overrides::default())
    }

    #[test]
    fn minimal_config_uses_family_defaults() {
        let c = parse("[problem]\nfamily = \"graetz\"\nnc = 3\n").unwrap();
        assert_eq!(c.greedy.tol, 1e-4);
        assert_eq!(c.spec().unwrap(), ProblemSpec::graetz(3));
        assert_eq!(c.bench.problem, ProblemFamily::Graetz);
        let d = parse("[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\ntol = 1e-3\n").unwrap();
        assert_eq!(d.greedy.tol, 1e-3);
    }

    #[test]
    fn unknown_keys_are_rejected_with_context() {
        let err = parse("[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\ntolerance = 1e-3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tolerance") && msg.contains("line 5"), "{msg}");
        assert!(parse("[problem]\nfamily = \"diffusion\"\nnc = 3\ncolour = 1\n").is_err());
        assert!(parse("[extra]\n").is_err());
    }

    #[test]
    fn invalid_values_fail_before_running() {
        assert!(parse("[problem]\nfamily = \"diffusion\"\nnc = 6\n").is_err());
        assert!(parse("[problem]\nfamily = \"diffusion\"\nnc = 6\nallow_fine = true\n").is_ok());
        assert!(parse("[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\nformulation = \"magic\"\n").is_err());
        assert!(parse("[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\ntol = -1.0\n").is_err());
        assert!(parse("[problem]\nfamily = \"heat\"\nnc = 3\n").is_err());
    }

    #[test]
    fn overrides_reach_every_section() {
        let c = RunConfig::parse(
            "[problem]\nfamily = \"diffusion\"\nnc = 2\n",
            "t",
            Overrides {
                seed: Some(9),
                threads: Some(1),
            },
        )
        .unwrap();
        assert_eq!((c.greedy.seed, c.bench.seed, c.infsup_seed()), (9, 9, 9));
        assert_eq!((c.greedy.threads, c.bench.threads), (Some(1), Some(1)));
    }
}
