//! The solver's output: curves `T_1 … T_m` on a grid of resource levels,
//! with shape-preserving interpolation, the value in both of its forms,
//! and the equilibrium residual.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accuracy::DuelParameters;
use crate::numeric::{bisect, integrate, MonotoneCubic, QuadOptions};

use super::stage2::{rhs_phi_k, LevelDiagnostics};
use super::{SolverConfig, SolverError};

const TABLE_FORMAT: &str = "noisy-duel-table/1";

const LOG_QUAD: QuadOptions = QuadOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-13,
    max_intervals: 4000,
};

/// Formats `v` with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent present");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// How the second stage went.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    /// Final `1 − u0`.
    pub delta: f64,
    pub halvings: usize,
    pub levels: Vec<LevelDiagnostics>,
    /// Largest gap between the interpolated table and the integrated
    /// curves at midpoints of the grid intervals.
    pub interp_error: f64,
    /// Same below the grid start, where the merged curve is only as good
    /// as the bracket there.
    pub head_interp_error: f64,
}

/// Product and exponential forms of the value `v_k(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueForms {
    pub k: usize,
    pub product: f64,
    pub exponential: f64,
}

impl ValueForms {
    pub fn gap(&self) -> f64 {
        (self.product - self.exponential).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub k: usize,
    pub max_residual: f64,
    pub worst_x: f64,
}

/// Equilibrium residual over the grid plus structural checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub worst_x: f64,
    pub worst_k: usize,
    pub levels: Vec<LevelReport>,
    /// Ordering and monotonicity violations on the grid.
    pub structure_violations: Vec<String>,
    pub max_value_gap: f64,
}

/// JSON companion of the CSV export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub params: DuelParameters,
    pub config: SolverConfig,
    pub values: Vec<ValueForms>,
    pub residual: ResidualReport,
    pub stage: StageReport,
    /// Nodes between `x = 0` and the grid start, at full precision.
    pub head_x: Vec<f64>,
    pub head_curves: Vec<Vec<f64>>,
}

/// Tabulated equilibrium curves in original time.
#[derive(Debug, Clone)]
pub struct TTable {
    params: DuelParameters,
    config: SolverConfig,
    x: Vec<f64>,
    curves: Vec<Vec<f64>>,
    grid_start: usize,
    stage: StageReport,
    interp: Vec<MonotoneCubic>,
    // ∫_0^{x_j} ln(1 − P₁(T_k(α))) dα per level and node
    cum_log: Vec<Vec<f64>>,
}

impl TTable {
    /// Builds a table from node values. `x` holds all nodes in increasing
    /// order; the public grid starts at index `grid_start`.
    pub fn from_parts(
        params: DuelParameters,
        config: SolverConfig,
        x: Vec<f64>,
        curves: Vec<Vec<f64>>,
        grid_start: usize,
        stage: StageReport,
    ) -> Result<Self, SolverError> {
        let bad = |m: String| Err(SolverError::Table(m));
        if x.is_empty() || grid_start >= x.len() {
            return bad("no grid nodes".into());
        }
        if !(x[0] > 0.0) || x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
            return bad("nodes must be positive and strictly increasing".into());
        }
        if curves.len() != params.m {
            return bad(format!("{} curves for m={}", curves.len(), params.m));
        }
        for (k, c) in curves.iter().enumerate() {
            if c.len() != x.len() {
                return bad(format!("curve {} has {} values for {} nodes", k + 1, c.len(), x.len()));
            }
            if let Some(v) = c.iter().find(|v| !(v.is_finite() && **v > 0.0 && **v <= 1.0)) {
                return bad(format!("curve {} has value {v} outside (0,1]", k + 1));
            }
        }
        let mut interp = Vec::with_capacity(curves.len());
        let mut ts = Vec::with_capacity(curves.len());
        for k in 0..curves.len() {
            let slopes = (0..x.len())
                .map(|j| {
                    ts.clear();
                    ts.extend(curves[..k].iter().map(|c| c[j]));
                    rhs_phi_k(&ts, curves[k][j], &params.p1, &params.p2).unwrap_or(f64::NAN)
                })
                .collect();
            interp.push(MonotoneCubic::with_slopes(x.clone(), curves[k].clone(), slopes)?);
        }
        let mut table = Self {
            params,
            config,
            x,
            curves,
            grid_start,
            stage,
            interp,
            cum_log: Vec::new(),
        };
        table.cum_log = (1..=table.m())
            .map(|k| table.cumulative_log(k))
            .collect::<Result<_, _>>()?;
        Ok(table)
    }

    fn cumulative_log(&self, k: usize) -> Result<Vec<f64>, SolverError> {
        let mut out = Vec::with_capacity(self.x.len());
        let mut acc = self.log_piece(k, 0.0, self.x[0])?;
        out.push(acc);
        for w in self.x.windows(2) {
            acc += self.log_piece(k, w[0], w[1])?;
            out.push(acc);
        }
        Ok(out)
    }

    fn log_piece(&self, k: usize, lo: f64, hi: f64) -> Result<f64, SolverError> {
        let p1 = &self.params.p1;
        integrate(|s| p1.log_survival(self.curve(k, s)), lo, hi, LOG_QUAD)
            .map(|q| q.value)
            .map_err(|source| SolverError::Quadrature { t: lo, source })
    }

    pub fn params(&self) -> &DuelParameters {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub(super) fn set_stage(&mut self, stage: StageReport) {
        self.stage = stage;
    }

    pub fn stage(&self) -> &StageReport {
        &self.stage
    }

    pub fn m(&self) -> usize {
        self.curves.len()
    }

    /// Largest tabulated resource level.
    pub fn a(&self) -> f64 {
        *self.x.last().expect("non-empty")
    }

    /// Interpolation tolerance `ε_T` promised by the table.
    pub fn interp_tol(&self) -> f64 {
        self.config.interp_tol
    }

    /// All nodes, including the extra ones below the grid.
    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn grid(&self) -> &[f64] {
        &self.x[self.grid_start..]
    }

    /// Values of curve `k` (1-based) on the grid.
    pub fn grid_curve(&self, k: usize) -> &[f64] {
        &self.curves[k - 1][self.grid_start..]
    }

    /// Values of curve `k` on all nodes.
    pub fn node_curve(&self, k: usize) -> &[f64] {
        &self.curves[k - 1]
    }

    /// `T_k(x)`; `T_k(0) = 1`, `T_0 ≡ 1`. Below the first node the curve is
    /// continued linearly to `(0, 1)`; beyond `a` it is held constant.
    pub fn curve(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let c = &self.interp[k - 1];
        let x0 = self.x[0];
        if x <= 0.0 {
            1.0
        } else if x < x0 {
            1.0 + (c.ys()[0] - 1.0) * x / x0
        } else {
            c.eval(x)
        }
    }

    /// `dT_k/dx` of the interpolant.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        let c = &self.interp[k - 1];
        let x0 = self.x[0];
        if x < x0 {
            (c.ys()[0] - 1.0) / x0
        } else {
            c.derivative(x)
        }
    }

    /// Resource level at which curve `k` passes through time `t`.
    pub fn inverse(&self, k: usize, t: f64) -> f64 {
        let a = self.a();
        if t >= 1.0 {
            return 0.0;
        }
        if t <= self.curve(k, a) {
            return a;
        }
        bisect(|x| self.curve(k, x) - t, 0.0, a, 1e-15).unwrap_or(a)
    }

    /// `π_k(x) = ∏_{i≤k} (1 − P₂(T_i(x)))`.
    pub fn survival_product(&self, k: usize, x: f64) -> f64 {
        (1..=k).map(|i| self.params.p2.survival(self.curve(i, x))).product()
    }

    /// `∫_0^x ln(1 − P₁(T_k(α))) dα` along the interpolated curve.
    pub fn log_integral(&self, k: usize, x: f64) -> Result<f64, SolverError> {
        if k == 0 || x <= 0.0 {
            return Ok(0.0);
        }
        let x = x.min(self.a());
        let cum = &self.cum_log[k - 1];
        if x < self.x[0] {
            return self.log_piece(k, 0.0, x);
        }
        let j = self.x.partition_point(|&s| s <= x) - 1;
        Ok(cum[j] + self.log_piece(k, self.x[j], x)?)
    }

    /// Value `v_k(x)` in both forms.
    pub fn game_value_at(&self, x: f64, k: usize) -> Result<ValueForms, SolverError> {
        if k > self.m() {
            return Err(SolverError::Table(format!("level {k} beyond m={}", self.m())));
        }
        let (a1, a2) = (self.params.a1, self.params.a2);
        if k == 0 {
            return Ok(ValueForms {
                k,
                product: a1,
                exponential: a1,
            });
        }
        let product = (a1 + a2) * self.survival_product(k, x) - a2;
        let exponential = a1 - (a1 + a2) * self.log_integral(k, x)?.exp();
        Ok(ValueForms {
            k,
            product,
            exponential,
        })
    }

    /// Value `v_k(a)` at the table's resource level.
    pub fn game_value(&self, k: usize) -> Result<ValueForms, SolverError> {
        self.game_value_at(self.a(), k)
    }

    /// `v_0(a) … v_m(a)`.
    pub fn values(&self) -> Result<Vec<ValueForms>, SolverError> {
        (0..=self.m()).map(|k| self.game_value(k)).collect()
    }

    /// `|exp(∫_0^x ln p(T_k)) + π_k(x) − 1|`.
    pub fn equilibrium_residual(&self, x: f64, k: usize) -> Result<f64, SolverError> {
        if k == 0 {
            return Ok(0.0);
        }
        let lhs = self.log_integral(k, x)?.exp() + self.survival_product(k, x);
        Ok((lhs - 1.0).abs())
    }

    /// Ordering `0 < T_m < … < T_1 ≤ 1` and strict decrease along the grid.
    pub fn structure_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let g = self.grid_start;
        for (j, &x) in self.grid().iter().enumerate() {
            for k in 1..=self.m() {
                let t = self.curves[k - 1][g + j];
                let above = if k == 1 { 1.0 } else { self.curves[k - 2][g + j] };
                let ok = if k == 1 { t > 0.0 && t <= 1.0 } else { t > 0.0 && t < above };
                if !ok {
                    out.push(format!("x={x}: T_{k}={t} not below {above}"));
                }
                if j > 0 {
                    let prev = self.curves[k - 1][g + j - 1];
                    if !(t < prev) {
                        out.push(format!("x={x}: T_{k}={t} not below previous node {prev}"));
                    }
                }
            }
        }
        out
    }

    /// Residual on every grid node and level, plus structural checks.
    pub fn residual_report(&self) -> Result<ResidualReport, SolverError> {
        let mut levels = Vec::with_capacity(self.m());
        let (mut max_residual, mut worst_x, mut worst_k) = (0.0, 0.0, 0);
        for k in 1..=self.m() {
            let mut lr = LevelReport {
                k,
                max_residual: 0.0,
                worst_x: 0.0,
            };
            for &x in self.grid() {
                let r = self.equilibrium_residual(x, k)?;
                if !(r <= lr.max_residual) {
                    lr.max_residual = r;
                    lr.worst_x = x;
                }
            }
            if !(lr.max_residual <= max_residual) {
                max_residual = lr.max_residual;
                worst_x = lr.worst_x;
                worst_k = k;
            }
            levels.push(lr);
        }
        let max_value_gap = self
            .values()?
            .iter()
            .map(ValueForms::gap)
            .fold(0.0, f64::max);
        Ok(ResidualReport {
            max_residual,
            worst_x,
            worst_k,
            levels,
            structure_violations: self.structure_violations(),
            max_value_gap,
        })
    }

    /// CSV of the grid: header `x,T_1,…,T_m`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x");
        for k in 1..=self.m() {
            s.push_str(&format!(",T_{k}"));
        }
        s.push('\n');
        for j in self.grid_start..self.x.len() {
            s.push_str(&fmt_sig12(self.x[j]));
            for c in &self.curves {
                s.push(',');
                s.push_str(&fmt_sig12(c[j]));
            }
            s.push('\n');
        }
        s
    }

    pub fn sidecar(&self) -> Result<Sidecar, SolverError> {
        let g = self.grid_start;
        Ok(Sidecar {
            format: TABLE_FORMAT.to_string(),
            params: self.params.clone(),
            config: self.config.clone(),
            values: self.values()?,
            residual: self.residual_report()?,
            stage: self.stage.clone(),
            head_x: self.x[..g].to_vec(),
            head_curves: self.curves.iter().map(|c| c[..g].to_vec()).collect(),
        })
    }

    /// Sidecar path paired with a CSV path.
    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("json")
    }

    /// Writes the CSV and its JSON sidecar; returns both paths.
    pub fn write(&self, csv: &Path) -> Result<(PathBuf, PathBuf), SolverError> {
        let json = Self::sidecar_path(csv);
        fs::write(csv, self.to_csv())?;
        let mut body = serde_json::to_string_pretty(&self.sidecar()?)?;
        body.push('\n');
        fs::write(&json, body)?;
        Ok((csv.to_path_buf(), json))
    }

    /// Reads a table written by [`TTable::write`]. The grid values come from
    /// the CSV, so edits to it are honoured.
    pub fn read(csv: &Path) -> Result<Self, SolverError> {
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(Self::sidecar_path(csv))?)?;
        if sidecar.format != TABLE_FORMAT {
            return Err(SolverError::Table(format!("unknown format {:?}", sidecar.format)));
        }
        let m = sidecar.params.m;
        let mut rdr = csv::Reader::from_path(csv)?;
        let header = rdr.headers()?.clone();
        let expected: Vec<String> = std::iter::once("x".to_string())
            .chain((1..=m).map(|k| format!("T_{k}")))
            .collect();
        if header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
            return Err(SolverError::Table(format!(
                "CSV header {header:?} does not match m={m}"
            )));
        }
        let mut x = sidecar.head_x.clone();
        let mut curves = sidecar.head_curves.clone();
        if curves.len() != m || curves.iter().any(|c| c.len() != x.len()) {
            return Err(SolverError::Table("sidecar head nodes malformed".into()));
        }
        let grid_start = x.len();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let vals: Result<Vec<f64>, _> = rec.iter().map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| SolverError::Table(format!("row {}: {e}", i + 1)))?;
            if vals.len() != m + 1 {
                return Err(SolverError::Table(format!("row {} has {} fields", i + 1, vals.len())));
            }
            x.push(vals[0]);
            for (c, v) in curves.iter_mut().zip(&vals[1..]) {
                c.push(*v);
            }
        }
        Self::from_parts(sidecar.params, sidecar.config, x, curves, grid_start, sidecar.stage)
    }

    /// Copy with every curve shifted by `delta` on the grid (clamped into
    /// (0, 1]); used to probe that the checks have teeth.
    pub fn perturbed(&self, delta: f64) -> Result<Self, SolverError> {
        let g = self.grid_start;
        let curves = self
            .curves
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(j, &v)| if j >= g { (v + delta).clamp(1e-12, 1.0) } else { v })
                    .collect()
            })
            .collect();
        Self::from_parts(
            self.params.clone(),
            self.config.clone(),
            self.x.clone(),
            curves,
            g,
            self.stage.clone(),
        )
    }
}
