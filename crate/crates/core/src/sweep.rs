//! Parameter sweeps over synthetic models: sample, cluster, score, repeat.
//!
//! A sweep walks one knob of the equal-block family (expected degree or
//! population spectral gap) across a linear grid, draws repeated graphs at
//! each point, clusters them under every requested regularizer policy, and
//! records both sides' misclustering rates in long form. Grid cells run
//! concurrently; all randomness derives from the spec seed, so reruns
//! reproduce the output byte for byte.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::misclustered;
use crate::laplacian::{default_tau, TauPolicy};
use crate::mix_seed;
use crate::model::{
    build_four_param, build_four_param_dc, four_param_rates, population_objects,
    sample_adjacency, BlockModel, Planted, PopulationObjects, POPULATION_CAP,
};
use crate::pipeline::{disim, DisimOptions};

/// Synthetic model family to sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Equal blocks, uniform node propensities.
    FourParam,
    /// Equal blocks with heterogeneous node propensities drawn fresh each
    /// repetition.
    FourParamDc,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::FourParam => write!(f, "four-param"),
            Family::FourParamDc => write!(f, "four-param-dc"),
        }
    }
}

/// Which knob the grid moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweptParam {
    ExpectedDegree,
    SpectralGap,
}

impl std::fmt::Display for SweptParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweptParam::ExpectedDegree => write!(f, "expected-degree"),
            SweptParam::SpectralGap => write!(f, "spectral-gap"),
        }
    }
}

mod tau_compact {
    use super::TauPolicy;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Name(String),
    }

    fn lift<E: serde::de::Error>(raw: Raw) -> std::result::Result<TauPolicy, E> {
        match raw {
            Raw::Num(t) => {
                if t.is_finite() && t >= 0.0 {
                    Ok(TauPolicy::Fixed(t))
                } else {
                    Err(E::custom(format!("bad regularizer {t}")))
                }
            }
            Raw::Name(s) => s.parse::<TauPolicy>().map_err(E::custom),
        }
    }

    pub fn serialize<S: Serializer>(
        v: &[TauPolicy],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for p in v {
            match p {
                TauPolicy::Auto => seq.serialize_element("auto")?,
                TauPolicy::Fixed(t) => seq.serialize_element(t)?,
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<TauPolicy>, D::Error> {
        let raw: Vec<Raw> = Vec::deserialize(d)?;
        raw.into_iter().map(lift).collect()
    }
}

mod tau_compact_one {
    use super::TauPolicy;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(
        v: &TauPolicy,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            TauPolicy::Auto => s.serialize_str("auto"),
            TauPolicy::Fixed(t) => s.serialize_f64(*t),
        }
    }
}

fn d_policies() -> Vec<TauPolicy> {
    vec![TauPolicy::Fixed(0.0), TauPolicy::Fixed(1.0), TauPolicy::Auto]
}
fn d_one() -> usize {
    1
}
fn d_k() -> usize {
    5
}
fn d_block() -> usize {
    400
}
fn d_gap() -> f64 {
    0.5
}
fn d_degree() -> f64 {
    20.0
}
fn d_planted() -> Planted {
    Planted::Identical
}
fn d_restarts() -> usize {
    10
}
fn d_svd_tol() -> f64 {
    1e-6
}
fn d_svd_iter() -> usize {
    600
}
fn d_oversample() -> usize {
    30
}

/// Declarative sweep description; the JSON the simulate command consumes.
/// Only the family, the swept knob, and the grid are mandatory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: Family,
    pub swept: SweptParam,
    pub from: f64,
    pub to: f64,
    /// Grid size; values are linearly spaced over [from, to].
    pub points: usize,
    /// Regularizer policies tried on every sampled graph; "auto" or numbers.
    #[serde(default = "d_policies", with = "tau_compact")]
    pub tau_policies: Vec<TauPolicy>,
    #[serde(default = "d_one")]
    pub repetitions: usize,
    /// Block count of the synthetic model.
    #[serde(default = "d_k")]
    pub k: usize,
    /// Nodes per block.
    #[serde(default = "d_block")]
    pub block_size: usize,
    /// Population spectral gap held fixed while degree is swept.
    #[serde(default = "d_gap")]
    pub spectral_gap: f64,
    /// Expected degree held fixed while the gap is swept.
    #[serde(default = "d_degree")]
    pub expected_degree: f64,
    #[serde(default = "d_planted")]
    pub planted: Planted,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_svd_tol")]
    pub svd_tol: f64,
    #[serde(default = "d_svd_iter")]
    pub svd_max_iter: usize,
    #[serde(default = "d_oversample")]
    pub svd_oversampling: usize,
}

/// One (grid value, policy, repetition) measurement.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub family: Family,
    pub swept_param: SweptParam,
    pub value: f64,
    #[serde(with = "tau_compact_one")]
    pub tau_policy: TauPolicy,
    pub repetition: usize,
    pub m_y_rate: f64,
    pub m_z_rate: f64,
    /// Seed the graph was sampled from; shared across policies within a
    /// repetition because they cluster the same draw.
    pub seed: u64,
}

/// Sweep result: long-form rows in deterministic (cell, policy, repetition)
/// order plus any cells or repetitions that had to be skipped.
#[derive(Clone, Debug, Serialize)]
pub struct SweepOutcome {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

fn validate(spec: &SweepSpec) -> Result<()> {
    if spec.points == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    if spec.repetitions == 0 {
        return Err(Error::InvalidArgument(
            "need at least one repetition".into(),
        ));
    }
    if spec.tau_policies.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one regularizer policy".into(),
        ));
    }
    if !spec.from.is_finite() || !spec.to.is_finite() {
        return Err(Error::InvalidArgument("grid range must be finite".into()));
    }
    if spec.k == 0 || spec.block_size == 0 {
        return Err(Error::InvalidArgument(
            "model needs at least one block and one node per block".into(),
        ));
    }
    if spec.k * spec.block_size > POPULATION_CAP {
        return Err(Error::SizeCap(format!(
            "scoring needs dense population objects; {} nodes exceeds the {} cap",
            spec.k * spec.block_size,
            POPULATION_CAP
        )));
    }
    if !(spec.spectral_gap > 0.0 && spec.spectral_gap <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "spectral gap must lie in (0, 1], got {}",
            spec.spectral_gap
        )));
    }
    if !(spec.expected_degree > 0.0) || !spec.expected_degree.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "expected degree must be positive, got {}",
            spec.expected_degree
        )));
    }
    if spec.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    if !(spec.svd_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "decomposition tolerance must be positive, got {}",
            spec.svd_tol
        )));
    }
    for p in &spec.tau_policies {
        if let TauPolicy::Fixed(t) = p {
            if !t.is_finite() || *t < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "regularizer must be finite and nonnegative, got {t}"
                )));
            }
        }
    }
    Ok(())
}

/// Scoring needs only the low-rank population objects; dropping the dense
/// matrices keeps per-cell memory flat at large sizes.
fn slim(mut po: PopulationObjects) -> PopulationObjects {
    po.script_a = Array2::zeros((0, 0));
    po.script_l = Array2::zeros((0, 0));
    po
}

fn build_pair(base: &BlockModel, tau: f64) -> Result<(BlockModel, PopulationObjects)> {
    let mt = base.clone().with_tau(tau)?;
    let po = slim(population_objects(&mt)?);
    Ok((mt, po))
}

type RepRows = std::result::Result<Vec<SweepRow>, String>;

#[allow(clippy::too_many_arguments)]
fn run_rep(
    spec: &SweepSpec,
    value: f64,
    cell_seed: u64,
    p: f64,
    r: f64,
    rep: usize,
    fixed_cache: &mut [Option<(BlockModel, PopulationObjects)>],
) -> Result<RepRows> {
    let model_seed = mix_seed(cell_seed, 0x4000_0000 + rep as u64);
    let sample_seed = mix_seed(cell_seed, rep as u64);
    let base = match spec.family {
        Family::FourParam => {
            build_four_param(spec.k, spec.block_size, p, r, model_seed, spec.planted)
        }
        Family::FourParamDc => {
            build_four_param_dc(spec.k, spec.block_size, p, r, model_seed, spec.planted)
        }
    };
    // Propensity draws can push an edge probability past one; that makes the
    // model infeasible at this cell, not the sweep broken.
    let base = match base {
        Ok(m) => m,
        Err(e) => return Ok(Err(format!("repetition {rep}: {e}"))),
    };
    let g = sample_adjacency(&base, sample_seed)?;
    let cacheable = spec.family == Family::FourParam && spec.planted == Planted::Identical;
    let mut rows = Vec::with_capacity(spec.tau_policies.len());
    for (pi, &pol) in spec.tau_policies.iter().enumerate() {
        let (opts_tau, tau_value) = match pol {
            TauPolicy::Auto => (None, default_tau(&g)),
            TauPolicy::Fixed(t) => (Some(t), t),
        };
        let (mt, po) = if cacheable && matches!(pol, TauPolicy::Fixed(_)) {
            if fixed_cache[pi].is_none() {
                fixed_cache[pi] = Some(build_pair(&base, tau_value)?);
            }
            fixed_cache[pi].clone().expect("cache was just filled")
        } else {
            build_pair(&base, tau_value)?
        };
        let opts = DisimOptions {
            tau: opts_tau,
            restarts: spec.restarts,
            seed: mix_seed(sample_seed, 0xD100 + pi as u64),
            svd_tol: spec.svd_tol,
            svd_max_iter: spec.svd_max_iter,
            svd_oversampling: spec.svd_oversampling,
            ..DisimOptions::default()
        };
        let cc = disim(&g, spec.k, spec.k, &opts)?;
        let score = misclustered(&cc, &mt, &po)?;
        rows.push(SweepRow {
            family: spec.family,
            swept_param: spec.swept,
            value,
            tau_policy: pol,
            repetition: rep,
            m_y_rate: score.m_y_rate,
            m_z_rate: score.m_z_rate,
            seed: sample_seed,
        });
    }
    Ok(Ok(rows))
}

struct CellOut {
    rows: Vec<SweepRow>,
    warnings: Vec<String>,
}

fn run_cell(spec: &SweepSpec, ci: usize, value: f64) -> Result<CellOut> {
    let cell_seed = mix_seed(spec.seed, 0xCE11_0000 + ci as u64);
    let (degree, gap) = match spec.swept {
        SweptParam::ExpectedDegree => (value, spec.spectral_gap),
        SweptParam::SpectralGap => (spec.expected_degree, value),
    };
    let (p, r) = match four_param_rates(spec.k, spec.block_size, degree, gap) {
        Ok(x) => x,
        Err(e) => {
            return Ok(CellOut {
                rows: Vec::new(),
                warnings: vec![format!("skipping {}={value}: {e}", spec.swept)],
            })
        }
    };
    let mut fixed_cache: Vec<Option<(BlockModel, PopulationObjects)>> =
        vec![None; spec.tau_policies.len()];
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for rep in 0..spec.repetitions {
        match run_rep(spec, value, cell_seed, p, r, rep, &mut fixed_cache)? {
            Ok(mut rs) => rows.append(&mut rs),
            Err(w) => warnings.push(format!("skipping {}={value} {w}", spec.swept)),
        }
    }
    Ok(CellOut { rows, warnings })
}

/// Runs the sweep. Rows come back ordered by (grid cell, repetition, policy)
/// regardless of how cells were scheduled; infeasible cells and repetitions
/// are reported in `warnings` instead of rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    validate(spec)?;
    let values = linspace(spec.from, spec.to, spec.points);
    let cells: Vec<CellOut> = values
        .par_iter()
        .enumerate()
        .map(|(ci, &v)| run_cell(spec, ci, v))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for mut c in cells {
        rows.append(&mut c.rows);
        warnings.append(&mut c.warnings);
    }
    Ok(SweepOutcome {
        spec: spec.clone(),
        rows,
        warnings,
    })
}

/// Long-form CSV with the resolved spec and any warnings embedded as comment
/// lines. Identical specs produce identical bytes.
pub fn sweep_csv(out: &SweepOutcome) -> Result<String> {
    let cfg = serde_json::to_string(&out.spec)?;
    let mut s = String::new();
    s.push_str(&format!("# config={cfg}\n"));
    for w in &out.warnings {
        s.push_str(&format!("# warning={w}\n"));
    }
    s.push_str("family,swept_param,value,tau_policy,repetition,m_y_rate,m_z_rate,seed\n");
    for row in &out.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.family,
            row.swept_param,
            row.value,
            row.tau_policy,
            row.repetition,
            row.m_y_rate,
            row.m_z_rate,
            row.seed
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            family: Family::FourParam,
            swept: SweptParam::ExpectedDegree,
            from: 8.0,
            to: 8.0,
            points: 1,
            tau_policies: d_policies(),
            repetitions: 1,
            k: 2,
            block_size: 12,
            spectral_gap: 0.5,
            expected_degree: 8.0,
            planted: Planted::Identical,
            seed: 42,
            restarts: 5,
            svd_tol: 1e-8,
            svd_max_iter: 400,
            svd_oversampling: 10,
        }
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(5.0, 16.0, 1), vec![5.0]);
        let g = linspace(5.0, 16.0, 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 5.0);
        assert_eq!(g[8], 16.0);
        assert!((g[1] - 6.375).abs() < 1e-12);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut s = tiny_spec();
        s.points = 0;
        assert!(run_sweep(&s).is_err());
        let mut s = tiny_spec();
        s.repetitions = 0;
        assert!(run_sweep(&s).is_err());
        let mut s = tiny_spec();
        s.tau_policies.clear();
        assert!(run_sweep(&s).is_err());
        let mut s = tiny_spec();
        s.spectral_gap = 0.0;
        assert!(run_sweep(&s).is_err());
        let mut s = tiny_spec();
        s.block_size = POPULATION_CAP;
        assert!(run_sweep(&s).is_err());
    }

    #[test]
    fn one_cell_one_rep_yields_one_row_per_policy() {
        let out = run_sweep(&tiny_spec()).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert!(out.warnings.is_empty());
        let seeds: Vec<u64> = out.rows.iter().map(|r| r.seed).collect();
        assert!(seeds.iter().all(|&s| s == seeds[0]), "shared draw per rep");
        for r in &out.rows {
            assert_eq!(r.value, 8.0);
            assert_eq!(r.repetition, 0);
            assert!((0.0..=1.0).contains(&r.m_y_rate));
            assert!((0.0..=1.0).contains(&r.m_z_rate));
        }
        assert_eq!(out.rows[0].tau_policy, TauPolicy::Fixed(0.0));
        assert_eq!(out.rows[1].tau_policy, TauPolicy::Fixed(1.0));
        assert_eq!(out.rows[2].tau_policy, TauPolicy::Auto);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let mut spec = tiny_spec();
        spec.points = 2;
        spec.to = 12.0;
        spec.repetitions = 2;
        let a = sweep_csv(&run_sweep(&spec).unwrap()).unwrap();
        let b = sweep_csv(&run_sweep(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("# config={"));
        assert!(a.contains(
            "family,swept_param,value,tau_policy,repetition,m_y_rate,m_z_rate,seed"
        ));
        let data_rows = a.lines().filter(|l| l.starts_with("four-param,")).count();
        assert_eq!(data_rows, 2 * 2 * 3);
    }

    #[test]
    fn infeasible_cells_warn_and_skip() {
        // At gap 0.5 and 10 nodes the within-block rate is degree/10; the
        // second grid point then needs a rate above one.
        let mut spec = tiny_spec();
        spec.k = 2;
        spec.block_size = 5;
        spec.from = 4.0;
        spec.to = 12.0;
        spec.points = 2;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 3, "only the feasible cell produced rows");
        assert!(out.rows.iter().all(|r| r.value == 4.0));
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("12"));
        let csv = sweep_csv(&out).unwrap();
        assert!(csv.contains("# warning="));
    }

    #[test]
    fn degree_corrected_family_runs() {
        // Heterogeneous propensities square the headroom a probability needs,
        // so the rates stay low here.
        let mut spec = tiny_spec();
        spec.family = Family::FourParamDc;
        spec.repetitions = 2;
        spec.block_size = 20;
        spec.from = 4.0;
        spec.to = 4.0;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 6, "warnings: {:?}", out.warnings);
        assert!(out.rows.iter().all(|r| r.m_y_rate.is_finite()));
        // Fresh propensities per repetition: different draws, same recorded
        // family tag.
        assert!(out.rows.iter().all(|r| r.family == Family::FourParamDc));
    }

    #[test]
    fn gap_sweep_records_the_swept_value() {
        let mut spec = tiny_spec();
        spec.swept = SweptParam::SpectralGap;
        spec.from = 0.4;
        spec.to = 0.6;
        spec.points = 2;
        spec.expected_degree = 8.0;
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert_eq!(out.rows[0].value, 0.4);
        assert_eq!(out.rows[5].value, 0.6);
        assert!(out
            .rows
            .iter()
            .all(|r| r.swept_param == SweptParam::SpectralGap));
    }

    #[test]
    fn spec_json_round_trips_with_defaults() {
        let j = r#"{
            "family": "four-param-dc",
            "swept": "expected-degree",
            "from": 5.0,
            "to": 16.0,
            "points": 9,
            "tau_policies": [0, 1, "auto"],
            "repetitions": 20
        }"#;
        let spec: SweepSpec = serde_json::from_str(j).unwrap();
        assert_eq!(spec.k, 5);
        assert_eq!(spec.block_size, 400);
        assert_eq!(spec.spectral_gap, 0.5);
        assert_eq!(spec.planted, Planted::Identical);
        assert_eq!(
            spec.tau_policies,
            vec![TauPolicy::Fixed(0.0), TauPolicy::Fixed(1.0), TauPolicy::Auto]
        );
        let back = serde_json::to_string(&spec).unwrap();
        assert!(back.contains("\"tau_policies\":[0.0,1.0,\"auto\"]"));
        let bad: std::result::Result<SweepSpec, _> =
            serde_json::from_str(r#"{"family":"four-param","swept":"expected-degree","from":1,"to":2,"points":2,"bogus":true}"#);
        assert!(bad.is_err(), "unknown fields are rejected");
        let bad: std::result::Result<SweepSpec, _> = serde_json::from_str(
            r#"{"family":"four-param","swept":"expected-degree","from":1,"to":2,"points":2,"tau_policies":[-1]}"#,
        );
        assert!(bad.is_err(), "negative regularizers are rejected");
    }

    #[test]
    fn csv_rows_follow_the_schema() {
        let out = run_sweep(&tiny_spec()).unwrap();
        let csv = sweep_csv(&out).unwrap();
        let data: Vec<&str> = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("family,"))
            .collect();
        assert_eq!(data.len(), 3);
        let fields: Vec<&str> = data[0].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0], "four-param");
        assert_eq!(fields[1], "expected-degree");
        assert_eq!(fields[2], "8");
        assert_eq!(fields[3], "0");
        assert_eq!(fields[4], "0");
        assert_eq!(data[2].split(',').nth(3).unwrap(), "auto");
    }
}
