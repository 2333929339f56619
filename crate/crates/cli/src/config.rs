use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use slowfast_core::cycles::MAX_EPS;
use slowfast_core::integrate::SolverOptions;
use slowfast_core::models::{catalog_model, graph_model, sine_link_model, ModelDocument, SlowFastModel, SlowVariant};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. Each one overrides the same key of
/// the `--config` file.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// JSON file with any of the keys below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog label: eq1, eq1-cosine, trefoil, solomon, odd-contact
    #[arg(long)]
    pub model: Option<String>,
    /// JSON model document with trigonometric coefficient matrices
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub l: Option<u32>,
    /// Slow component of a sine-link model
    #[arg(long)]
    pub slow: Option<String>,
    /// Graph model y = phi(x), e.g. "q=1,s1=1"
    #[arg(long)]
    pub phi: Option<String>,
    /// Comma-separated list, e.g. 0.2,0.1,0.05
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub grid: Option<usize>,
    /// Accept isolated regular contact points of finite order
    #[arg(long)]
    pub relaxed: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Extra detections from random starts per cycle (cycles command)
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Winding pairs for the knots command, e.g. "3,2;2,3"
    #[arg(long)]
    pub pairs: Option<String>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub model_file: Option<PathBuf>,
    /// Inline model document.
    pub model_doc: Option<ModelDocument>,
    pub m: Option<u32>,
    pub k: Option<u32>,
    pub l: Option<u32>,
    pub slow: Option<String>,
    pub phi: Option<String>,
    pub eps: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub relaxed: Option<bool>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub restarts: Option<usize>,
    pub pairs: Option<Vec<(i64, i64)>>,
}

#[derive(Debug, Clone, Serialize)]
pub enum ModelSpec {
    Catalog(String),
    SineLink { m: u32, k: u32, l: u32, slow: String },
    Graph(String),
    Document(ModelDocument),
}

/// Resolved experiment settings.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub model: Option<ModelSpec>,
    pub eps: Vec<f64>,
    pub grid: usize,
    pub relaxed: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub workers: Option<usize>,
    pub solver: SolverOptions,
    pub restarts: usize,
    pub pairs: Vec<(i64, i64)>,
}

fn parse_pairs(s: &str) -> Result<Vec<(i64, i64)>, Failure> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t.split_once(',').ok_or_else(|| Failure::config(format!("pair {t:?} is not \"k,l\"")))?;
            let p = |v: &str| v.trim().parse::<i64>().map_err(|e| Failure::config(format!("pair {t:?}: {e}")));
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs, default_eps: &[f64]) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let base = args.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));

        let flag_model = args.model.is_some()
            || args.model_file.is_some()
            || args.phi.is_some()
            || args.m.is_some()
            || args.k.is_some()
            || args.l.is_some();
        let model = if flag_model {
            model_spec(args.model.clone(), args.model_file.clone(), None, args.m, args.k, args.l, args.slow.clone(), args.phi.clone(), Path::new(""))?
        } else {
            model_spec(
                file.model,
                file.model_file,
                file.model_doc,
                file.m,
                file.k,
                file.l,
                args.slow.clone().or(file.slow),
                file.phi,
                base,
            )?
        };

        let eps = args.eps.clone().or(file.eps).unwrap_or_else(|| default_eps.to_vec());
        if eps.is_empty() {
            return Err(Failure::config("empty eps list"));
        }
        if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e <= MAX_EPS)) {
            return Err(Failure::config(format!("eps {e} outside (0, {MAX_EPS}]")));
        }
        let grid = args.grid.or(file.grid).unwrap_or(20);
        if grid < 4 {
            return Err(Failure::config(format!("grid must be at least 4, got {grid}")));
        }
        let mut solver = SolverOptions::default();
        if let Some(r) = args.rel_tol.or(file.rel_tol) {
            solver = solver.with_rel_tol(r);
        }
        if let Some(a) = args.abs_tol.or(file.abs_tol) {
            solver = solver.with_abs_tol(a);
        }
        solver.validate().map_err(|e| Failure::config(e.to_string()))?;
        let pairs = match &args.pairs {
            Some(s) => parse_pairs(s)?,
            None => file.pairs.unwrap_or_default(),
        };
        if args.workers == Some(0) || file.workers == Some(0) {
            return Err(Failure::config("workers must be positive"));
        }
        Ok(Self {
            model,
            eps,
            grid,
            relaxed: args.relaxed || file.relaxed.unwrap_or(false),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out.map(|o| base.join(o))).unwrap_or_else(|| PathBuf::from("out")),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            workers: args.workers.or(file.workers),
            solver,
            restarts: args.restarts.or(file.restarts).unwrap_or(0),
            pairs,
        })
    }

    pub fn build_model(&self) -> Result<SlowFastModel, Failure> {
        let spec = self.model.as_ref().ok_or_else(|| {
            Failure::config("no model given; use --model, --m/--k/--l, --phi or --model-file")
        })?;
        let model = match spec {
            ModelSpec::Catalog(label) => catalog_model(label),
            ModelSpec::SineLink { m, k, l, slow } => {
                slow.parse::<SlowVariant>().and_then(|v| sine_link_model(*m, *k, *l, v))
            }
            ModelSpec::Graph(phi) => phi.parse().and_then(|p| graph_model(p, None)),
            ModelSpec::Document(doc) => doc.to_model(),
        };
        model.map_err(|e| Failure::config(e.to_string()))
    }
}

#[allow(clippy::too_many_arguments)]
fn model_spec(
    label: Option<String>,
    file: Option<PathBuf>,
    doc: Option<ModelDocument>,
    m: Option<u32>,
    k: Option<u32>,
    l: Option<u32>,
    slow: Option<String>,
    phi: Option<String>,
    base: &Path,
) -> Result<Option<ModelSpec>, Failure> {
    let link = m.is_some() || k.is_some() || l.is_some();
    let given = [label.is_some(), file.is_some(), doc.is_some(), link, phi.is_some()];
    if given.iter().filter(|g| **g).count() > 1 {
        return Err(Failure::config("give only one of model label, model file, inline model, m/k/l or phi"));
    }
    if let Some(label) = label {
        return Ok(Some(ModelSpec::Catalog(label)));
    }
    if let Some(path) = file {
        let path = base.join(path);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let doc = ModelDocument::from_json(&text).map_err(|e| Failure::config(e.to_string()))?;
        return Ok(Some(ModelSpec::Document(doc)));
    }
    if let Some(doc) = doc {
        return Ok(Some(ModelSpec::Document(doc)));
    }
    if link {
        return Ok(Some(ModelSpec::SineLink {
            m: m.unwrap_or(1),
            k: k.unwrap_or(1),
            l: l.unwrap_or(1),
            slow: slow.unwrap_or_else(|| "unit".into()),
        }));
    }
    Ok(phi.map(ModelSpec::Graph))
}
