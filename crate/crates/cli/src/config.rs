use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ultradiff::embedding::{embed, Dendrogram, FiniteUltrametricSpace};
use ultradiff::kernel::KernelConfig;
use ultradiff::measure::MeasureFile;
use ultradiff::rational::parse_rational;
use ultradiff::spectral::Sign;
use ultradiff::{BallAddress, Base, MeasureTree, PiecewiseFunction, RateProfile, Window};

use crate::Failure;

/// Parameters of one run, as read from `--config` and overridden by flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub p: u32,
    pub gamma_min: i32,
    pub gamma_max: i32,
    pub measure: MeasureSpec,
    pub kernel: KernelConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<MeasureSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_leaf: Option<String>,
    #[serde(default = "plus")]
    pub sign: String,
    /// Largest spectral-vs-expm deviation `compare` accepts.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn plus() -> String {
    "+".into()
}

fn default_tolerance() -> f64 {
    1e-8
}

/// A nonnegative leaf table, given inline, by file, or by a generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Table {
        #[serde(alias = "U")]
        leaves: BTreeMap<String, String>,
    },
    File {
        path: PathBuf,
    },
    UniformBall {
        #[serde(default)]
        ball: String,
        #[serde(default = "one")]
        value: String,
    },
    IndicatorOfEmbedding {
        input: PathBuf,
        #[serde(default = "one")]
        density: String,
    },
}

fn one() -> String {
    "1".into()
}

/// Initial datum `f0` for `solve`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Indicator {
        ball: String,
        #[serde(default = "unit")]
        scale: f64,
    },
    Constant {
        value: f64,
    },
    Table {
        values: BTreeMap<String, f64>,
    },
}

fn unit() -> f64 {
    1.0
}

/// A config resolved against the file system.
pub struct Run {
    pub config: RunConfig,
    pub base: Base,
    pub window: Window,
    pub tree: MeasureTree,
    pub kernel: RateProfile,
    pub sign: Sign,
    dir: PathBuf,
}

impl Run {
    pub fn load(path: &Path, overrides: impl FnOnce(&mut RunConfig)) -> Result<Self, Failure> {
        let text = read(path)?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        overrides(&mut config);
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = Base::new(config.p)?;
        let window = Window::new(config.gamma_min, config.gamma_max)?;
        let tree = measure(&config.measure, base, window, &dir)?;
        let kernel = RateProfile::from_config(&config.kernel, window, base)?;
        let sign = config.sign.parse()?;
        Ok(Run {
            config,
            base,
            window,
            tree,
            kernel,
            sign,
            dir,
        })
    }

    pub fn times(&self) -> Result<&[f64], Failure> {
        if self.config.times.is_empty() {
            return Err(Failure::Config(
                "no times given (config \"times\" or --times)".into(),
            ));
        }
        Ok(&self.config.times)
    }

    pub fn initial(&self) -> Result<PiecewiseFunction, Failure> {
        let spec = self
            .config
            .initial
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no \"initial\" datum".into()))?;
        Ok(match spec {
            InitialSpec::Indicator { ball, scale } => {
                let mut f = PiecewiseFunction::indicator(&self.ball(ball)?);
                f.scale(*scale);
                f
            }
            InitialSpec::Constant { value } => {
                PiecewiseFunction::constant(self.base, self.window, *value)
            }
            InitialSpec::Table { values } => {
                let mut f = PiecewiseFunction::zeros(self.base, self.window);
                for (path, v) in values {
                    let leaf = self.leaf(path)?;
                    f.values_mut()[leaf.index()] = *v;
                }
                f
            }
        })
    }

    pub fn potential(&self) -> Result<MeasureTree, Failure> {
        let spec = self
            .config
            .potential
            .as_ref()
            .ok_or_else(|| Failure::Config("config has no \"potential\" table".into()))?;
        measure(spec, self.base, self.window, &self.dir)
    }

    /// The configured starting leaf, or the first leaf carrying measure.
    pub fn initial_leaf(&self) -> Result<BallAddress, Failure> {
        match &self.config.initial_leaf {
            Some(path) => self.leaf(path),
            None => self
                .tree
                .support_leaves()
                .into_iter()
                .next()
                .ok_or_else(|| Failure::Config("the measure is zero everywhere".into())),
        }
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.config).expect("config serializes");
        crate::output::sha256_hex(&canonical)
    }

    fn ball(&self, path: &str) -> Result<BallAddress, Failure> {
        Ok(BallAddress::parse(self.base, self.window, path)?)
    }

    fn leaf(&self, path: &str) -> Result<BallAddress, Failure> {
        let ball = self.ball(path)?;
        if !ball.is_leaf() {
            return Err(Failure::Config(format!("{path:?} is not a leaf path")));
        }
        Ok(ball)
    }
}

fn measure(
    spec: &MeasureSpec,
    base: Base,
    window: Window,
    dir: &Path,
) -> Result<MeasureTree, Failure> {
    match spec {
        MeasureSpec::Table { leaves } => Ok(MeasureTree::from_file(&MeasureFile {
            p: base.get(),
            gamma_min: window.gamma_min(),
            gamma_max: window.gamma_max(),
            leaves: leaves.clone(),
        })?),
        MeasureSpec::File { path } => {
            let path = dir.join(path);
            let file: MeasureFile = serde_json::from_str(&read(&path)?)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            if file.p != base.get()
                || file.gamma_min != window.gamma_min()
                || file.gamma_max != window.gamma_max()
            {
                return Err(Failure::Config(format!(
                    "{}: p = {}, window [{}, {}] differs from the run's p = {}, window [{}, {}]",
                    path.display(),
                    file.p,
                    file.gamma_min,
                    file.gamma_max,
                    base.get(),
                    window.gamma_min(),
                    window.gamma_max()
                )));
            }
            Ok(MeasureTree::from_file(&file)?)
        }
        MeasureSpec::UniformBall { ball, value } => {
            let ball = BallAddress::parse(base, window, ball)?;
            Ok(MeasureTree::uniform_ball(&ball, parse_rational(value)?)?)
        }
        MeasureSpec::IndicatorOfEmbedding { input, density } => {
            let space = read_space(&dir.join(input))?;
            let embedding = embed(&space, base)?;
            Ok(embedding.to_measure_tree(window, parse_rational(density)?)?)
        }
    }
}

/// A CSV distance matrix, or a dendrogram if the file starts with `(`.
pub fn read_space(path: &Path) -> Result<FiniteUltrametricSpace, Failure> {
    let text = read(path)?;
    if text.trim_start().starts_with('(') {
        Ok(Dendrogram::parse(&text)?.to_space()?)
    } else {
        Ok(FiniteUltrametricSpace::from_csv(&text)?)
    }
}

pub fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}
