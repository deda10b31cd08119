//! Run configuration: TOML file, environment default and CLI overrides.

use std::path::{Path, PathBuf};

use eu_core::decision::RuleChain;
use eu_core::embed::{EmbeddingProvider, HashNgramEmbedder, PrecomputedEmbeddings, DEFAULT_HASH_DIM};
use eu_core::ingest::InputFormat;
use eu_core::model::ConstructionParams;
use eu_core::roles::TypeMap;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    HashNgram,
    Precomputed,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: Option<ProviderKind>,
    pub dim: Option<usize>,
    /// Vector file for the precomputed provider.
    pub path: Option<PathBuf>,
}

/// Contents of a config file. Every field is optional; relative paths are
/// taken relative to the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format: Option<InputFormat>,
    pub parser: Option<String>,
    pub typemap: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub protocol: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub ks: Option<Vec<usize>>,
    pub params: Option<ConstructionParams>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(p) = p.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        rebase(&mut cfg.typemap);
        rebase(&mut cfg.rules);
        rebase(&mut cfg.output_dir);
        rebase(&mut cfg.embedding.path);
        Ok(cfg)
    }
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct GlobalArgs {
    /// Config file (TOML).
    #[arg(long, env = "EU_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Parameter override `key=value`; repeatable, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Worker threads for per-page work.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub provider: Option<ProviderKind>,
    /// Hash embedder dimension.
    #[arg(long, global = true)]
    pub embedding_dim: Option<usize>,
    /// Vector file for `--provider precomputed`.
    #[arg(long, global = true)]
    pub embeddings: Option<PathBuf>,
    /// Decision rule chain (JSON).
    #[arg(long, global = true)]
    pub rules: Option<PathBuf>,
    /// Label table overrides (JSON).
    #[arg(long, global = true)]
    pub typemap: Option<PathBuf>,
}

/// Settings after applying defaults, the config file and CLI flags, in
/// increasing precedence.
pub struct Settings {
    pub config: RunConfig,
    pub params: ConstructionParams,
    pub chain: RuleChain,
    pub typemap: TypeMap,
    pub provider: Box<dyn EmbeddingProvider>,
    pub jobs: Option<usize>,
}

impl Settings {
    pub fn resolve(g: &GlobalArgs) -> Result<Self, CliError> {
        let config = match &g.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut params = config.params.clone().unwrap_or_default();
        params.validate().map_err(|e| CliError::Input(e.to_string()))?;
        let rules = g.rules.clone().or_else(|| config.rules.clone());
        let chain = match &rules {
            Some(path) => {
                let chain = RuleChain::load_json(path)?;
                params = chain.bind_params(&params)?;
                Some(chain)
            }
            None => None,
        };
        for kv in &g.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            params.set(k.trim(), v).map_err(|e| CliError::Input(e.to_string()))?;
        }
        let chain = chain.unwrap_or_else(|| RuleChain::default_chain(&params));
        let typemap = match g.typemap.as_ref().or(config.typemap.as_ref()) {
            Some(p) => TypeMap::load_overrides(p)?,
            None => TypeMap::seeded(),
        };
        let kind = g
            .provider
            .or(config.embedding.provider)
            .unwrap_or(ProviderKind::HashNgram);
        let provider: Box<dyn EmbeddingProvider> = match kind {
            ProviderKind::HashNgram => Box::new(HashNgramEmbedder::new(
                g.embedding_dim.or(config.embedding.dim).unwrap_or(DEFAULT_HASH_DIM),
            )),
            ProviderKind::Precomputed => {
                let path = g.embeddings.as_ref().or(config.embedding.path.as_ref()).ok_or_else(|| {
                    CliError::Input("the precomputed provider needs --embeddings or embedding.path".into())
                })?;
                let p = PrecomputedEmbeddings::load(path)?;
                if let Some(d) = g.embedding_dim.or(config.embedding.dim) {
                    if d != p.dim() {
                        return Err(CliError::Input(format!(
                            "{}: vectors have dimension {}, configured {d}",
                            path.display(),
                            p.dim()
                        )));
                    }
                }
                Box::new(p)
            }
        };
        if g.jobs == Some(0) {
            return Err(CliError::Input("--jobs must be at least 1".into()));
        }
        Ok(Self {
            params,
            chain,
            typemap,
            provider,
            jobs: g.jobs,
            config,
        })
    }

    pub fn out_dir(&self, flag: Option<&PathBuf>) -> PathBuf {
        flag.cloned()
            .or_else(|| self.config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn format(&self, flag: Option<InputFormat>) -> InputFormat {
        flag.or(self.config.format).unwrap_or(InputFormat::Canonical)
    }

    /// Label table used for role lookup: the flag, the config, or the
    /// format's own parser name.
    pub fn parser(&self, flag: Option<&String>, format: InputFormat) -> String {
        flag.cloned()
            .or_else(|| self.config.parser.clone())
            .unwrap_or_else(|| format.parser_name().to_string())
    }

    pub fn protocol(&self, flag: Option<&String>) -> Result<eu_core::eval::Protocol, CliError> {
        let name = flag.cloned().or_else(|| self.config.protocol.clone()).unwrap_or_else(|| "strict".into());
        eu_core::eval::Protocol::by_name(&name)
            .ok_or_else(|| CliError::Input(format!("unknown protocol `{name}` (strict or fair)")))
    }

    /// K values; an empty flag list defers to the config.
    pub fn ks(&self, flag: Vec<usize>) -> Vec<usize> {
        Some(flag)
            .filter(|k| !k.is_empty())
            .or_else(|| self.config.ks.clone())
            .unwrap_or_else(|| eu_core::eval::DEFAULT_KS.to_vec())
    }

    /// Runs `f` on a pool of `--jobs` threads, or on the global pool.
    pub fn in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        match self.jobs {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::Other(e.to_string()))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}
