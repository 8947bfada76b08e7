//! Run settings from a `key = value` file and command-line flags. Flags win
//! over the file, the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;
use stbem_core::driver::{AdaptiveConfig, UniformStudy};
use stbem_core::{DirichletDatum, ElementId, IndicatorKind, QuadConfig};

/// Every setting any command understands. Unset fields fall back to the
/// config file, then to defaults.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Command to run when none is given on the command line (config file only).
    #[arg(skip)]
    pub command: Option<String>,

    /// Example number 1 to 4 (or `example2` style).
    #[arg(long)]
    pub example: Option<String>,

    /// Incidence angle of example 3, in radians.
    #[arg(long)]
    pub angle: Option<f64>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,

    /// Number of uniform levels `N = n0 * 2^i`.
    #[arg(long)]
    pub levels: Option<usize>,

    /// Coarsest uniform mesh size.
    #[arg(long)]
    pub n0: Option<usize>,

    /// Initial spatial panels (adapt, entry-dump, mesh-export).
    #[arg(long)]
    pub nx: Option<usize>,

    /// Initial time steps (adapt, entry-dump, mesh-export).
    #[arg(long)]
    pub nt: Option<usize>,

    /// Final time.
    #[arg(long)]
    pub final_time: Option<f64>,

    /// Marking parameter in `[0, 1)`.
    #[arg(long)]
    pub theta: Option<f64>,

    /// Exit tolerance on the indicator total.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Upper bound on adaptive iterations.
    #[arg(long)]
    pub max_iterations: Option<usize>,

    /// `theoretical` or `heuristic`.
    #[arg(long)]
    pub indicator: Option<String>,

    /// Reference energy for the error column; defaults to the extrapolated
    /// energy (uniform) or the published value (adapt).
    #[arg(long)]
    pub benchmark: Option<f64>,

    /// Skip indicators in uniform studies.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_indicators: Option<bool>,

    /// Write the mesh picture as well.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,

    /// Write zero wall times so repeated runs give identical files.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub omit_timing: Option<bool>,

    /// Element ids to split before exporting (entry-dump, mesh-export).
    #[arg(long, value_delimiter = ',')]
    pub refine: Option<Vec<usize>>,

    /// Gauss points per piece for datum integrals (default 16).
    #[arg(long)]
    pub quad_order: Option<usize>,

    /// Geometric grading levels towards kinks (default 10).
    #[arg(long)]
    pub grading_levels: Option<usize>,

    /// Grading ratio in (0, 1) (default 0.15).
    #[arg(long)]
    pub grading_ratio: Option<f64>,

    /// Gauss points per direction for indicator norms (default 16).
    #[arg(long)]
    pub indicator_order: Option<usize>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: &Settings) -> Self {
        overlay!(self, flags; command, example, angle, out, threads, levels, n0, nx, nt, final_time, theta,
            epsilon, max_iterations, indicator, benchmark, no_indicators, svg, omit_timing, refine,
            quad_order, grading_levels, grading_ratio, indicator_order);
        self
    }

    pub fn datum(&self) -> Result<DirichletDatum> {
        let name = self.example.as_deref().context("no example given (use --example)")?;
        let datum: DirichletDatum = name.parse()?;
        match (datum, self.angle) {
            (DirichletDatum::Ramp { .. }, Some(angle)) => Ok(DirichletDatum::ramp_with_angle(angle)),
            (_, Some(_)) => bail!("--angle only applies to example 3"),
            (d, None) => Ok(d),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn final_time(&self) -> f64 {
        self.final_time.unwrap_or(1.0)
    }

    pub fn omit_timing(&self) -> bool {
        self.omit_timing.unwrap_or(false)
    }

    pub fn svg(&self) -> bool {
        self.svg.unwrap_or(false)
    }

    pub fn quad(&self) -> Result<QuadConfig> {
        let mut q = QuadConfig::default();
        if let Some(v) = self.quad_order {
            q.order = v;
        }
        if let Some(v) = self.grading_levels {
            q.grading_levels = v;
        }
        if let Some(v) = self.grading_ratio {
            q.grading_ratio = v;
        }
        if let Some(v) = self.indicator_order {
            q.indicator_order = v;
        }
        q.validate()?;
        Ok(q)
    }

    pub fn refine_ids(&self) -> Vec<ElementId> {
        self.refine.iter().flatten().map(|&i| ElementId(i)).collect()
    }

    pub fn uniform_study(&self) -> Result<UniformStudy> {
        let mut study = UniformStudy::new(self.datum()?, self.n0.unwrap_or(10), self.levels.unwrap_or(3));
        study.final_time = self.final_time();
        study.quad = self.quad()?;
        study.indicators = !self.no_indicators.unwrap_or(false);
        Ok(study)
    }

    pub fn adaptive_config(&self) -> Result<AdaptiveConfig> {
        let mut cfg = AdaptiveConfig::new(self.datum()?);
        if let Some(v) = self.theta {
            cfg.theta = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        if let Some(k) = &self.indicator {
            cfg.indicator_kind = k.parse::<IndicatorKind>()?;
        }
        cfg.n_x = self.nx.unwrap_or(cfg.n_x);
        cfg.n_t = self.nt.unwrap_or(cfg.n_t);
        cfg.final_time = self.final_time();
        cfg.quad = self.quad()?;
        cfg.validate()?;
        Ok(cfg)
    }
}
