//! Observer gain synthesis.
//!
//! Gains `(L, T, N)` come either from the tabulated sets identified for the
//! test vehicle ([`load_tabulated_gains`]) or from an L1-gain linear program over
//! the scaled variables `L̃ = Q L`, `T̃ = Q T`, `Ñ = Q N` ([`build_lp`],
//! [`solve_lp`], [`reconstruct_gains`]).
//!
//! LP encoding, for a plant `(A, B, W, C, V)` with `Q = diag(q)`:
//!
//! * `T̃ = Q - Ñ C` and `M̃x = T̃ A - L̃ C` (so `M̃x = Q Mx` exactly),
//! * every matrix `S` whose magnitude enters the bound is split as
//!   `S = S⁺ - S⁻`, `S⁺, S⁻ ≥ 0`, and `|S|` is bounded by `S⁺ + S⁻`,
//! * `Ω = M̃x^d + M̃x^{nd,+} + M̃x^{nd,-}` bounds `Q Mx^m`, and each column of
//!   `Ω` that the gains can influence must sum to at most `-1 - ε`,
//! * the width channels `Δ = |T̃ W|` (disturbance), `Γ = |Ñ V|` and
//!   `Φ = |L̃ V|` (noise) and optionally `Ψ = |T̃ B|` (command uncertainty),
//!   weighted by their channel widths, have column sums at most `γ - ε`.
//!
//! Columns of `Mx` that are identically zero for every choice of gains
//! (states that neither drive nor are seen by anything, like position here)
//! cannot be made Hurwitz and are reported as marginal instead of being
//! constrained.

pub mod simplex;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::interval_algebra::{abs_mat, metzlerize, up_down_split, AlgebraError, Matrix};
use crate::plant::{build_plant_matrices, PlantMatrices, VehicleParams};
pub use simplex::{LinearProgram, LpError, LpSolution, Relation, VarBound};

/// Margin replacing the strict inequalities of the L1 conditions.
pub const STRICT_MARGIN: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("inconsistent problem dimensions: {0}")]
    Dimensions(String),
    #[error("reconstruction check failed: {0}")]
    Reconstruction(String),
    #[error("gain file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("gain file {path}: {message}")]
    Format { path: String, message: String },
}

/// Which tabulated gain set to load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainSet {
    NoiseFree,
    Noisy,
}

impl GainSet {
    pub fn id(&self) -> &'static str {
        match self {
            GainSet::NoiseFree => "noise-free",
            GainSet::Noisy => "noisy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverGains {
    #[serde(rename = "L")]
    pub l: Matrix,
    #[serde(rename = "T")]
    pub t: Matrix,
    #[serde(rename = "N")]
    pub n: Matrix,
    /// Diagonal scaling from the LP; absent for tabulated gains.
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Matrix>,
    /// Achieved L1 bound; absent for tabulated gains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "scenario-id", default)]
    pub scenario_id: String,
}

/// Matrices the framer ODEs are written in.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedObserverMatrices {
    pub mx: Matrix,
    pub mx_up: Matrix,
    pub mx_down: Matrix,
    pub mw: Matrix,
    pub mv: Matrix,
    pub mu: Matrix,
    pub n: Matrix,
    pub nv: Matrix,
}

impl DerivedObserverMatrices {
    pub fn from_gains(gains: &ObserverGains, plant: &PlantMatrices) -> Result<Self, SynthesisError> {
        let mx = gains.t.try_mul(&plant.a)?.try_sub(&gains.l.try_mul(&plant.c)?)?;
        let (mx_up, mx_down) = up_down_split(&mx)?;
        let mw = gains.t.try_mul(&plant.w)?;
        let mv = mx.try_mul(&gains.n)?.try_add(&gains.l)?;
        let mu = gains.t.try_mul(&plant.b)?;
        let nv = gains.n.try_mul(&plant.v)?;
        Ok(Self { mx, mx_up, mx_down, mw, mv, mu, n: gains.n.clone(), nv })
    }

    pub fn n_states(&self) -> usize {
        self.mx.rows()
    }
}

/// Tabulated gains for the identified vehicle (`a = 0.1413`, `b = 6.6870`).
pub fn tabulated_gains(scenario: GainSet) -> ObserverGains {
    let (l2, t22, n2) = match scenario {
        GainSet::NoiseFree => (1.7799, -0.0002, 1.0002),
        GainSet::Noisy => (1.0933, 0.6244, 0.3756),
    };
    ObserverGains {
        l: Matrix::column(&[0.0, l2]),
        t: Matrix::diagonal(&[1.0, t22]),
        n: Matrix::column(&[0.0, n2]),
        q: None,
        gamma: None,
        scenario_id: scenario.id().to_string(),
    }
}

pub fn load_tabulated_gains(
    scenario: GainSet,
    params: &VehicleParams,
) -> Result<(ObserverGains, DerivedObserverMatrices), SynthesisError> {
    let gains = tabulated_gains(scenario);
    let derived = DerivedObserverMatrices::from_gains(&gains, &build_plant_matrices(params))?;
    Ok((gains, derived))
}

/// Data for one synthesis LP.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisProblem {
    pub plant: PlantMatrices,
    /// Disturbance width `d̄ - d̲`.
    pub disturbance_width: f64,
    /// Noise width `θ̄ - θ̲`.
    pub noise_width: f64,
    /// Width of the uncertainty on the leader command seen by the observer.
    /// Zero drops the channel.
    pub input_width: f64,
    /// Lower bound on the diagonal of `Q`; fixes the scale of the LP.
    pub q_min: f64,
    pub margin: f64,
}

impl SynthesisProblem {
    pub fn new(plant: PlantMatrices, disturbance_width: f64, noise_width: f64) -> Self {
        Self { plant, disturbance_width, noise_width, input_width: 0.0, q_min: 1.0, margin: STRICT_MARGIN }
    }

    pub fn with_input_width(mut self, width: f64) -> Self {
        self.input_width = width;
        self
    }

    fn check(&self) -> Result<(usize, usize), SynthesisError> {
        let p = &self.plant;
        let n = p.a.rows();
        let m = p.c.rows();
        let bad = |what: &str| Err(SynthesisError::Dimensions(what.to_string()));
        if !p.a.is_square() {
            return bad("A must be square");
        }
        if p.b.rows() != n || p.w.rows() != n {
            return bad("B and W need one row per state");
        }
        if p.c.cols() != n {
            return bad("C needs one column per state");
        }
        if p.v.rows() != m {
            return bad("V needs one row per output");
        }
        for (name, w) in [
            ("disturbance width", self.disturbance_width),
            ("noise width", self.noise_width),
            ("input width", self.input_width),
        ] {
            if !(w >= 0.0) {
                return Err(SynthesisError::Dimensions(format!("{name} must be nonnegative, got {w}")));
            }
        }
        if !(self.q_min > 0.0) || !(self.margin > 0.0) {
            return bad("q_min and margin must be positive");
        }
        Ok((n, m))
    }

    /// Columns `j` with `A[:, j] = 0` and `C[:, j] = 0`: `Mx[:, j]` is zero for any gains.
    pub fn marginal_columns(&self) -> Vec<usize> {
        let p = &self.plant;
        (0..p.a.cols())
            .filter(|&j| (0..p.a.rows()).all(|i| p.a[(i, j)] == 0.0) && (0..p.c.rows()).all(|i| p.c[(i, j)] == 0.0))
            .collect()
    }
}

/// Variable indices of one matrix-valued LP variable block.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub rows: usize,
    pub cols: usize,
    pub start: usize,
}

impl Block {
    pub fn at(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        self.start + i * self.cols + j
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.rows * self.cols
    }

    pub fn read(&self, x: &[f64]) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..self.rows).map(|i| (0..self.cols).map(|j| x[self.at(i, j)]).collect()).collect();
        Matrix::from_rows(&rows).expect("block has positive size")
    }
}

/// A block split into `S = S⁺ - S⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBlock {
    pub value: Block,
    pub pos: Block,
    pub neg: Block,
}

/// The synthesis LP together with where each decision variable lives.
#[derive(Debug, Clone)]
pub struct SynthesisLp {
    pub lp: LinearProgram,
    pub gamma: usize,
    pub q: Block,
    pub t: SplitBlock,
    pub n: SplitBlock,
    pub l: SplitBlock,
    pub mx: Block,
    pub mx_d: SplitBlock,
    /// Off-diagonal part of `M̃x`; its diagonal is pinned to zero.
    pub mx_nd: SplitBlock,
    pub tw: SplitBlock,
    pub lv: SplitBlock,
    pub nv: SplitBlock,
    pub tb: Option<SplitBlock>,
    pub delta: Block,
    pub gamma_block: Block,
    pub phi: Block,
    pub psi: Option<Block>,
    pub omega: Block,
    /// Columns of `Ω` carrying the stability row.
    pub stable_columns: Vec<usize>,
    pub marginal_columns: Vec<usize>,
}

struct Builder {
    lp: LinearProgram,
}

impl Builder {
    fn block(&mut self, name: &str, rows: usize, cols: usize, bound: VarBound) -> Block {
        let start = self.lp.n_vars();
        for i in 0..rows {
            for j in 0..cols {
                self.lp.add_variable(format!("{name}[{i},{j}]"), bound);
            }
        }
        Block { rows, cols, start }
    }

    fn split(&mut self, name: &str, rows: usize, cols: usize) -> SplitBlock {
        let value = self.block(name, rows, cols, VarBound::Free);
        let pos = self.block(&format!("{name}+"), rows, cols, VarBound::AtLeast(0.0));
        let neg = self.block(&format!("{name}-"), rows, cols, VarBound::AtLeast(0.0));
        for i in 0..rows {
            for j in 0..cols {
                self.lp.add_constraint(
                    vec![(value.at(i, j), 1.0), (pos.at(i, j), -1.0), (neg.at(i, j), 1.0)],
                    Relation::Eq,
                    0.0,
                    format!("split {name}[{i},{j}]"),
                );
            }
        }
        SplitBlock { value, pos, neg }
    }

    /// `out = lhs · K` for a variable block `lhs` and constant `K`.
    fn product_right(&mut self, out: &Block, lhs: &Block, k: &Matrix, label: &str) {
        for i in 0..out.rows {
            for j in 0..out.cols {
                let mut terms = vec![(out.at(i, j), 1.0)];
                for r in 0..lhs.cols {
                    if k[(r, j)] != 0.0 {
                        terms.push((lhs.at(i, r), -k[(r, j)]));
                    }
                }
                self.lp.add_constraint(terms, Relation::Eq, 0.0, format!("{label}[{i},{j}]"));
            }
        }
    }

    /// `out = S⁺ + S⁻` elementwise.
    fn magnitude(&mut self, name: &str, s: &SplitBlock) -> Block {
        let out = self.block(name, s.value.rows, s.value.cols, VarBound::Free);
        for i in 0..out.rows {
            for j in 0..out.cols {
                self.lp.add_constraint(
                    vec![(out.at(i, j), 1.0), (s.pos.at(i, j), -1.0), (s.neg.at(i, j), -1.0)],
                    Relation::Eq,
                    0.0,
                    format!("{name}[{i},{j}]"),
                );
            }
        }
        out
    }

    /// `width · 1ᵀ block[:, j] ≤ γ - ε` for each column.
    fn width_bound(&mut self, block: &Block, width: f64, gamma: usize, margin: f64, label: &str) {
        for j in 0..block.cols {
            let mut terms: Vec<(usize, f64)> = (0..block.rows).map(|i| (block.at(i, j), width)).collect();
            terms.push((gamma, -1.0));
            self.lp.add_constraint(terms, Relation::Le, -margin, format!("{label} column {j}"));
        }
    }
}

pub fn build_lp(prob: &SynthesisProblem) -> Result<SynthesisLp, SynthesisError> {
    let (n, m) = prob.check()?;
    let p = &prob.plant;
    let eps = prob.margin;
    let mut b = Builder { lp: LinearProgram::default() };

    let gamma = b.lp.add_variable("gamma", VarBound::AtLeast(eps));
    b.lp.objective[gamma] = 1.0;
    let q = b.block("q", n, 1, VarBound::AtLeast(prob.q_min));
    let t = b.split("T~", n, n);
    let nn = b.split("N~", n, m);
    let l = b.split("L~", n, m);

    // T~ = Q - N~ C
    for i in 0..n {
        for j in 0..n {
            let mut terms = vec![(t.value.at(i, j), 1.0)];
            for k in 0..m {
                if p.c[(k, j)] != 0.0 {
                    terms.push((nn.value.at(i, k), p.c[(k, j)]));
                }
            }
            if i == j {
                terms.push((q.at(i, 0), -1.0));
            }
            b.lp.add_constraint(terms, Relation::Eq, 0.0, format!("T~ = Q - N~C [{i},{j}]"));
        }
    }

    // M~x = T~ A - L~ C
    let mx = b.block("M~x", n, n, VarBound::Free);
    for i in 0..n {
        for j in 0..n {
            let mut terms = vec![(mx.at(i, j), 1.0)];
            for k in 0..n {
                if p.a[(k, j)] != 0.0 {
                    terms.push((t.value.at(i, k), -p.a[(k, j)]));
                }
            }
            for k in 0..m {
                if p.c[(k, j)] != 0.0 {
                    terms.push((l.value.at(i, k), p.c[(k, j)]));
                }
            }
            b.lp.add_constraint(terms, Relation::Eq, 0.0, format!("M~x = T~A - L~C [{i},{j}]"));
        }
    }

    let mx_d = b.split("M~x^d", n, 1);
    let mx_nd = b.split("M~x^nd", n, n);
    for i in 0..n {
        b.lp.add_constraint(
            vec![(mx_d.value.at(i, 0), 1.0), (mx.at(i, i), -1.0)],
            Relation::Eq,
            0.0,
            format!("M~x^d = diag(M~x) [{i}]"),
        );
        for j in 0..n {
            let terms = if i == j {
                vec![(mx_nd.value.at(i, j), 1.0)]
            } else {
                vec![(mx_nd.value.at(i, j), 1.0), (mx.at(i, j), -1.0)]
            };
            b.lp.add_constraint(terms, Relation::Eq, 0.0, format!("M~x^nd [{i},{j}]"));
        }
    }

    let tw = b.split("T~W", n, p.w.cols());
    b.product_right(&tw.value, &t.value, &p.w, "T~W");
    let lv = b.split("L~V", n, p.v.cols());
    b.product_right(&lv.value, &l.value, &p.v, "L~V");
    let nv = b.split("N~V", n, p.v.cols());
    b.product_right(&nv.value, &nn.value, &p.v, "N~V");
    let tb = (prob.input_width > 0.0).then(|| {
        let tb = b.split("T~B", n, p.b.cols());
        b.product_right(&tb.value, &t.value, &p.b, "T~B");
        tb
    });

    let delta = b.magnitude("Delta", &tw);
    let gamma_block = b.magnitude("Gamma", &nv);
    let phi = b.magnitude("Phi", &lv);
    let psi = tb.as_ref().map(|tb| b.magnitude("Psi", tb));

    // Ω = M~x^d + M~x^{nd,+} + M~x^{nd,-}
    let omega = b.block("Omega", n, n, VarBound::Free);
    for i in 0..n {
        for j in 0..n {
            let mut terms = vec![(omega.at(i, j), 1.0)];
            if i == j {
                terms.push((mx_d.value.at(i, 0), -1.0));
            } else {
                terms.push((mx_nd.pos.at(i, j), -1.0));
                terms.push((mx_nd.neg.at(i, j), -1.0));
            }
            b.lp.add_constraint(terms, Relation::Eq, 0.0, format!("Omega [{i},{j}]"));
        }
    }
    let marginal_columns = prob.marginal_columns();
    let stable_columns: Vec<usize> = (0..n).filter(|j| !marginal_columns.contains(j)).collect();
    for &j in &stable_columns {
        let terms = (0..n).map(|i| (omega.at(i, j), 1.0)).collect();
        b.lp.add_constraint(terms, Relation::Le, -1.0 - eps, format!("stability column {j}"));
    }

    b.width_bound(&delta, prob.disturbance_width, gamma, eps, "Delta");
    b.width_bound(&gamma_block, prob.noise_width, gamma, eps, "Gamma");
    b.width_bound(&phi, prob.noise_width, gamma, eps, "Phi");
    if let Some(psi) = &psi {
        b.width_bound(psi, prob.input_width, gamma, eps, "Psi");
    }

    Ok(SynthesisLp {
        lp: b.lp,
        gamma,
        q,
        t,
        n: nn,
        l,
        mx,
        mx_d,
        mx_nd,
        tw,
        lv,
        nv,
        tb,
        delta,
        gamma_block,
        phi,
        psi,
        omega,
        stable_columns,
        marginal_columns,
    })
}

pub fn solve_lp(lp: &SynthesisLp) -> Result<LpSolution, SynthesisError> {
    Ok(lp.lp.solve()?)
}

/// Diagnostics produced alongside reconstructed gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    /// `max |Q T + Q N C - Q|` in scaled variables.
    pub scaled_residual: f64,
    /// `‖T + N C - I‖∞` after unscaling.
    pub identity_residual: f64,
    /// Column sums of `Ω` on the constrained columns.
    pub omega_column_sums: Vec<f64>,
    pub marginal_columns: Vec<usize>,
}

pub fn reconstruct_gains(
    solution: &LpSolution,
    lp: &SynthesisLp,
    prob: &SynthesisProblem,
) -> Result<(ObserverGains, DerivedObserverMatrices, ReconstructionReport), SynthesisError> {
    let x = &solution.values;
    let q: Vec<f64> = (0..lp.q.rows).map(|i| x[lp.q.at(i, 0)]).collect();
    if q.iter().any(|&qi| !(qi > 0.0)) {
        return Err(SynthesisError::Reconstruction(format!("Q is not positive: {q:?}")));
    }
    let q_inv = Matrix::diagonal(&q.iter().map(|qi| 1.0 / qi).collect::<Vec<_>>());
    let t_s = lp.t.value.read(x);
    let n_s = lp.n.value.read(x);
    let l_s = lp.l.value.read(x);
    let q_mat = Matrix::diagonal(&q);

    let scaled_residual = (&(&t_s + &(&n_s * &prob.plant.c)) - &q_mat).max_abs();
    let gains = ObserverGains {
        l: &q_inv * &l_s,
        t: &q_inv * &t_s,
        n: &q_inv * &n_s,
        q: Some(q_mat),
        gamma: Some(x[lp.gamma]),
        scenario_id: String::from("synthesized"),
    };
    let n_states = prob.plant.n_states();
    let identity_residual = (&(&gains.t + &(&gains.n * &prob.plant.c)) - &Matrix::identity(n_states)).norm_inf();
    if identity_residual > 1e-6 {
        return Err(SynthesisError::Reconstruction(format!("T + NC deviates from I by {identity_residual:e}")));
    }
    let omega = lp.omega.read(x);
    let omega_column_sums: Vec<f64> =
        lp.stable_columns.iter().map(|&j| (0..omega.rows()).map(|i| omega[(i, j)]).sum()).collect();
    if let Some(s) = omega_column_sums.iter().find(|s| !(**s < 0.0)) {
        return Err(SynthesisError::Reconstruction(format!("stability column sum {s} is not negative")));
    }
    let derived = DerivedObserverMatrices::from_gains(&gains, &prob.plant)?;
    let report = ReconstructionReport {
        scaled_residual,
        identity_residual,
        omega_column_sums,
        marginal_columns: lp.marginal_columns.clone(),
    };
    Ok((gains, derived, report))
}

/// Builds, solves and reconstructs in one go.
pub fn synthesize(
    prob: &SynthesisProblem,
) -> Result<(ObserverGains, DerivedObserverMatrices, ReconstructionReport), SynthesisError> {
    let lp = build_lp(prob)?;
    let sol = solve_lp(&lp)?;
    reconstruct_gains(&sol, &lp, prob)
}

/// Eigenvalues of a 2x2 matrix as `(re, im)` pairs, larger real part first.
pub fn eigenvalues_2x2(m: &Matrix) -> [(f64, f64); 2] {
    assert_eq!(m.shape(), (2, 2));
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [(0.5 * tr + s, 0.0), (0.5 * tr - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [(0.5 * tr, s), (0.5 * tr, -s)]
    }
}

/// Consistency checks that any usable gain set must pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GainCheck {
    pub identity_residual: f64,
    pub mx_down_max: f64,
    pub mx_metzler_eigenvalues: Option<[(f64, f64); 2]>,
    pub mx_eigenvalues: Option<[(f64, f64); 2]>,
}

pub fn check_gains(gains: &ObserverGains, plant: &PlantMatrices) -> Result<GainCheck, SynthesisError> {
    let derived = DerivedObserverMatrices::from_gains(gains, plant)?;
    let n = plant.n_states();
    let identity_residual = (&(&gains.t + &gains.n.try_mul(&plant.c)?) - &Matrix::identity(n)).norm_inf();
    let two = n == 2;
    Ok(GainCheck {
        identity_residual,
        mx_down_max: derived.mx_down.max_abs(),
        mx_metzler_eigenvalues: two.then(|| eigenvalues_2x2(&metzlerize(&derived.mx).expect("square"))),
        mx_eigenvalues: two.then(|| eigenvalues_2x2(&derived.mx)),
    })
}

/// Worst-case width injection `|M_w| δ_w + |M_v| δ_v + |M_u| δ_u` of the `Z` framers.
pub fn width_forcing(derived: &DerivedObserverMatrices, dw: f64, dv: f64, du: f64) -> Vec<f64> {
    let w = abs_mat(&derived.mw);
    let v = abs_mat(&derived.mv);
    let u = abs_mat(&derived.mu);
    (0..derived.n_states())
        .map(|i| {
            (0..w.cols()).map(|j| w[(i, j)] * dw).sum::<f64>()
                + (0..v.cols()).map(|j| v[(i, j)] * dv).sum::<f64>()
                + (0..u.cols()).map(|j| u[(i, j)] * du).sum::<f64>()
        })
        .collect()
}

pub fn write_gains(gains: &ObserverGains, path: &Path) -> Result<(), SynthesisError> {
    let text = toml::to_string(gains)
        .map_err(|e| SynthesisError::Format { path: path.display().to_string(), message: e.to_string() })?;
    std::fs::write(path, text).map_err(|source| SynthesisError::Io { path: path.display().to_string(), source })
}

pub fn read_gains(path: &Path) -> Result<ObserverGains, SynthesisError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SynthesisError::Io { path: path.display().to_string(), source })?;
    parse_gains(&text).map_err(|message| SynthesisError::Format { path: path.display().to_string(), message })
}

pub fn parse_gains(text: &str) -> Result<ObserverGains, String> {
    let gains: ObserverGains = toml::from_str(text).map_err(|e| e.to_string())?;
    let n = gains.t.rows();
    if !gains.t.is_square() || gains.l.rows() != n || gains.n.rows() != n {
        return Err(format!(
            "T must be square with L and N of matching height (T {:?}, L {:?}, N {:?})",
            gains.t.shape(),
            gains.l.shape(),
            gains.n.shape()
        ));
    }
    Ok(gains)
}
