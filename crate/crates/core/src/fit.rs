//! Maximum-likelihood parameter estimation and decomposable BIC scores.
//!
//! Discrete families are fitted by relative frequencies. Continuous families
//! are fitted by ordinary least squares within each discrete-parent
//! configuration, with the standard deviation taken as `sqrt(RSS / n)` so
//! that the fitted parameters are the exact maximizer of the likelihood.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::data::{Column, Dataset};
use crate::graph::{Dag, GraphError, NodeId};
use crate::model::{
    config_count, config_states, CategoricalCpt, ClgCpd, ClgRow, Cpd, ModelError, Network,
    VariableKind,
};

/// Lower bound on fitted standard deviations (node units), used when the
/// residuals vanish.
pub const SD_FLOOR: f64 = 1e-6;

/// Relative pivot below which the least-squares system is declared singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("`{0}` is not a discrete column")]
    NotDiscrete(String),
    #[error("`{0}` is not a continuous column")]
    NotContinuous(String),
    #[error("no complete rows for the family of `{0}`")]
    EmptyDataset(String),
    #[error("family of `{node}`: configuration {config} has {rows} rows, needs at least {needed}")]
    InsufficientRows { node: String, config: String, rows: usize, needed: usize },
    #[error("family of `{node}`: singular design in configuration {config}")]
    SingularDesign { node: String, config: String },
    #[error("discrete node `{node}` cannot have continuous parent `{parent}`")]
    ClgRestriction { node: String, parent: String },
    #[error("`{0}` appears twice in the family")]
    RepeatedParent(String),
    #[error("data does not match the model: {0}")]
    SchemaMismatch(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Added to every cell count of a discrete table. Zero gives the plain MLE.
    pub pseudo_count: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { pseudo_count: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// No rows had this parent configuration; the row was set to uniform.
    EmptyConfiguration { node: String, config: String },
    /// Residuals vanished; the standard deviation was raised to [`SD_FLOOR`].
    SdFloored { node: String, config: String },
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitWarning::EmptyConfiguration { node, config } => {
                write!(f, "{node}: no rows for {config}, using a uniform row")
            }
            FitWarning::SdFloored { node, config } => {
                write!(f, "{node}: zero residual variance for {config}, sd floored at {SD_FLOOR:e}")
            }
        }
    }
}

/// Result of fitting one family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyFit {
    pub cpd: Cpd,
    /// Log-likelihood of the used rows at the fitted parameters.
    pub log_lik: f64,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub warnings: Vec<FitWarning>,
}

/// BIC contribution of one family: `log_lik − (param_count / 2)·ln(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyScore {
    pub node: NodeId,
    pub parents: Vec<NodeId>,
    pub log_lik: f64,
    pub param_count: usize,
    pub bic: f64,
}

pub fn bic(log_lik: f64, param_count: usize, n_rows: usize) -> f64 {
    log_lik - 0.5 * param_count as f64 * (n_rows.max(1) as f64).ln()
}

pub fn fit_categorical(
    data: &Dataset,
    node: &str,
    discrete_parents: &[&str],
    opts: &FitOptions,
) -> Result<FamilyFit, FitError> {
    let v = column(data, node)?;
    if !data.schema()[v].kind.is_discrete() {
        return Err(FitError::NotDiscrete(node.to_string()));
    }
    let parents = columns(data, discrete_parents)?;
    for (&p, name) in parents.iter().zip(discrete_parents) {
        if !data.schema()[p].kind.is_discrete() {
            return Err(FitError::NotDiscrete(name.to_string()));
        }
    }
    fit_family(data, v, &parents, opts)
}

pub fn fit_clg(
    data: &Dataset,
    node: &str,
    continuous_parents: &[&str],
    discrete_parents: &[&str],
) -> Result<FamilyFit, FitError> {
    let v = column(data, node)?;
    if data.schema()[v].kind.is_discrete() {
        return Err(FitError::NotContinuous(node.to_string()));
    }
    let dp = columns(data, discrete_parents)?;
    let cp = columns(data, continuous_parents)?;
    for (&p, name) in dp.iter().zip(discrete_parents) {
        if !data.schema()[p].kind.is_discrete() {
            return Err(FitError::NotDiscrete(name.to_string()));
        }
    }
    for (&p, name) in cp.iter().zip(continuous_parents) {
        if data.schema()[p].kind.is_discrete() {
            return Err(FitError::NotContinuous(name.to_string()));
        }
    }
    let parents: Vec<usize> = dp.into_iter().chain(cp).collect();
    fit_family(data, v, &parents, &FitOptions::default())
}

/// Fits the family `node | parents`; parents are split by column kind,
/// keeping their relative order.
pub(crate) fn fit_family(data: &Dataset, v: usize, parents: &[usize], opts: &FitOptions) -> Result<FamilyFit, FitError> {
    let schema = data.schema();
    let node = schema[v].name.to_string();
    for (i, p) in parents.iter().enumerate() {
        if parents[..i].contains(p) || *p == v {
            return Err(FitError::RepeatedParent(schema[*p].name.to_string()));
        }
    }
    let discrete: Vec<usize> = parents.iter().copied().filter(|&p| schema[p].kind.is_discrete()).collect();
    let continuous: Vec<usize> = parents.iter().copied().filter(|&p| !schema[p].kind.is_discrete()).collect();
    let cards: Vec<usize> = discrete.iter().map(|&p| schema[p].kind.cardinality().unwrap()).collect();
    let n_configs = config_count(&cards);

    let family: Vec<usize> = std::iter::once(v).chain(parents.iter().copied()).collect();
    let cols = data.columns();
    let complete: Vec<usize> =
        (0..data.n_rows()).filter(|&r| family.iter().all(|&c| !cols[c].is_missing(r))).collect();
    let rows_dropped = data.n_rows() - complete.len();
    if complete.is_empty() {
        return Err(FitError::EmptyDataset(node));
    }

    let config_of = |r: usize| -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (&p, &c) in discrete.iter().zip(&cards) {
            let Column::Discrete(col) = &cols[p] else { unreachable!() };
            idx += col[r].unwrap() * stride;
            stride *= c;
        }
        idx
    };
    let config_label = |c: usize| -> String {
        if discrete.is_empty() {
            return "(no parents)".to_string();
        }
        config_states(c, &cards)
            .iter()
            .zip(&discrete)
            .map(|(&s, &p)| format!("{}={}", schema[p].name, schema[p].kind.states()[s]))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let names = |ix: &[usize]| -> Vec<NodeId> { ix.iter().map(|&p| schema[p].name.clone()).collect() };

    let mut warnings = Vec::new();
    match (&schema[v].kind, &cols[v]) {
        (VariableKind::Discrete { states }, Column::Discrete(y)) => {
            if let Some(&p) = continuous.first() {
                return Err(FitError::ClgRestriction { node, parent: schema[p].name.to_string() });
            }
            let k = states.len();
            let mut counts = vec![vec![0usize; k]; n_configs];
            for &r in &complete {
                counts[config_of(r)][y[r].unwrap()] += 1;
            }
            let alpha = opts.pseudo_count;
            let mut log_lik = 0.0;
            let probs: Vec<Vec<f64>> = counts
                .iter()
                .enumerate()
                .map(|(c, row)| {
                    let total: usize = row.iter().sum();
                    let denom = total as f64 + alpha * k as f64;
                    if denom == 0.0 {
                        warnings.push(FitWarning::EmptyConfiguration { node: node.clone(), config: config_label(c) });
                        return vec![1.0 / k as f64; k];
                    }
                    let p: Vec<f64> = row.iter().map(|&n| (n as f64 + alpha) / denom).collect();
                    for (&n, &q) in row.iter().zip(&p) {
                        if n > 0 {
                            log_lik += n as f64 * q.ln();
                        }
                    }
                    p
                })
                .collect();
            Ok(FamilyFit {
                cpd: Cpd::Categorical(CategoricalCpt { parents: names(&discrete), parent_cards: cards, probs }),
                log_lik,
                rows_used: complete.len(),
                rows_dropped,
                warnings,
            })
        }
        (VariableKind::Continuous, Column::Continuous(y)) => {
            let xcols: Vec<&[Option<f64>]> = continuous
                .iter()
                .map(|&p| match &cols[p] {
                    Column::Continuous(c) => c.as_slice(),
                    Column::Discrete(_) => unreachable!(),
                })
                .collect();
            let mut by_config: Vec<Vec<usize>> = vec![Vec::new(); n_configs];
            for &r in &complete {
                by_config[config_of(r)].push(r);
            }
            let p = continuous.len();
            let mut rows = Vec::with_capacity(n_configs);
            let mut log_lik = 0.0;
            let mut xs = vec![0.0; p];
            for (c, members) in by_config.iter().enumerate() {
                let needed = p + 2;
                if members.len() < needed {
                    return Err(FitError::InsufficientRows {
                        node,
                        config: config_label(c),
                        rows: members.len(),
                        needed,
                    });
                }
                let design = members.iter().map(|&r| {
                    let x: Vec<f64> = xcols.iter().map(|col| col[r].unwrap()).collect();
                    (x, y[r].unwrap())
                });
                let (intercept, coefficients) = ols(design.clone(), p).ok_or_else(|| FitError::SingularDesign {
                    node: node.clone(),
                    config: config_label(c),
                })?;
                let row = ClgRow::new(intercept, coefficients, 0.0);
                let mut rss = 0.0;
                for &r in members {
                    for (x, col) in xs.iter_mut().zip(&xcols) {
                        *x = col[r].unwrap();
                    }
                    let e = y[r].unwrap() - row.mean(&xs);
                    rss += e * e;
                }
                let n_c = members.len() as f64;
                let mut sd = (rss / n_c).sqrt();
                if sd.is_nan() || sd < SD_FLOOR {
                    sd = SD_FLOOR;
                    warnings.push(FitWarning::SdFloored { node: node.clone(), config: config_label(c) });
                }
                log_lik += -n_c * (sd.ln() + LN_SQRT_2PI) - rss / (2.0 * sd * sd);
                rows.push(ClgRow { sd, ..row });
            }
            Ok(FamilyFit {
                cpd: Cpd::Clg(ClgCpd {
                    discrete_parents: names(&discrete),
                    discrete_cards: cards,
                    continuous_parents: names(&continuous),
                    rows,
                }),
                log_lik,
                rows_used: complete.len(),
                rows_dropped,
                warnings,
            })
        }
        _ => unreachable!("dataset columns match their schema"),
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Least squares with intercept on centred, unit-scaled regressors.
/// Returns `None` when a pivot falls below [`SINGULAR_PIVOT`].
#[allow(clippy::needless_range_loop)]
fn ols<I>(rows: I, p: usize) -> Option<(f64, Vec<f64>)>
where
    I: Iterator<Item = (Vec<f64>, f64)> + Clone,
{
    let mut n = 0.0;
    let mut xbar = vec![0.0; p];
    let mut ybar = 0.0;
    for (x, y) in rows.clone() {
        n += 1.0;
        ybar += y;
        for (m, xi) in xbar.iter_mut().zip(&x) {
            *m += xi;
        }
    }
    ybar /= n;
    xbar.iter_mut().for_each(|m| *m /= n);
    if p == 0 {
        return Some((ybar, Vec::new()));
    }

    let mut sxx = vec![vec![0.0; p]; p];
    let mut sxy = vec![0.0; p];
    for (x, y) in rows {
        let dy = y - ybar;
        for j in 0..p {
            let dj = x[j] - xbar[j];
            sxy[j] += dj * dy;
            for k in j..p {
                sxx[j][k] += dj * (x[k] - xbar[k]);
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            sxx[j][k] = sxx[k][j];
        }
    }
    let scale: Vec<f64> = (0..p).map(|j| sxx[j][j].sqrt()).collect();
    if scale.iter().any(|&s| s.is_nan() || s <= 0.0) {
        return None;
    }
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut row: Vec<f64> = (0..p).map(|k| sxx[j][k] / (scale[j] * scale[k])).collect();
            row.push(sxy[j] / scale[j]);
            row
        })
        .collect();
    let z = solve_augmented(&mut a)?;
    let coefficients: Vec<f64> = z.iter().zip(&scale).map(|(zi, s)| zi / s).collect();
    let intercept = ybar - coefficients.iter().zip(&xbar).map(|(b, m)| b * m).sum::<f64>();
    Some((intercept, coefficients))
}

/// Gaussian elimination with partial pivoting on an `p × (p+1)` augmented matrix.
#[allow(clippy::needless_range_loop)]
fn solve_augmented(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let p = a.len();
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].is_nan() || a[pivot][col].abs() < SINGULAR_PIVOT {
            return None;
        }
        a.swap(col, pivot);
        for r in col + 1..p {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut z = vec![0.0; p];
    for r in (0..p).rev() {
        let s: f64 = (r + 1..p).map(|c| a[r][c] * z[c]).sum();
        z[r] = (a[r][p] - s) / a[r][r];
    }
    Some(z)
}

pub(crate) fn param_count(data: &Dataset, v: usize, parents: &[usize]) -> usize {
    let schema = data.schema();
    let disc_cards: usize = parents.iter().filter_map(|&p| schema[p].kind.cardinality()).product();
    match schema[v].kind.cardinality() {
        Some(k) => (k - 1) * disc_cards,
        None => {
            let n_cont = parents.iter().filter(|&&p| !schema[p].kind.is_discrete()).count();
            disc_cards * (n_cont + 2)
        }
    }
}

pub(crate) fn score_family_idx(data: &Dataset, v: usize, parents: &[usize]) -> Result<FamilyScore, FitError> {
    let fit = fit_family(data, v, parents, &FitOptions::default())?;
    let k = param_count(data, v, parents);
    let schema = data.schema();
    Ok(FamilyScore {
        node: schema[v].name.clone(),
        parents: parents.iter().map(|&p| schema[p].name.clone()).collect(),
        log_lik: fit.log_lik,
        param_count: k,
        bic: bic(fit.log_lik, k, fit.rows_used),
    })
}

/// Maximum-likelihood fit of the family followed by its BIC term.
pub fn family_score(data: &Dataset, node: &str, parents: &[&str]) -> Result<FamilyScore, FitError> {
    let v = column(data, node)?;
    let ps = columns(data, parents)?;
    score_family_idx(data, v, &ps)
}

/// Sum of family BIC terms over the graph, in topological order. Higher is better.
pub fn bic_score(data: &Dataset, dag: &Dag) -> Result<f64, FitError> {
    family_scores(data, dag).map(|s| s.iter().map(|f| f.bic).sum())
}

/// Family scores in topological order.
pub fn family_scores(data: &Dataset, dag: &Dag) -> Result<Vec<FamilyScore>, FitError> {
    let cols: Vec<usize> = dag.nodes().iter().map(|n| column(data, n.as_str())).collect::<Result<_, _>>()?;
    dag.topological_indices()
        .into_iter()
        .map(|v| {
            let parents: Vec<usize> = dag.parent_indices(v).iter().map(|&p| cols[p]).collect();
            score_family_idx(data, cols[v], &parents)
        })
        .collect()
}

/// Per-node fit summary for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFit {
    pub node: NodeId,
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub warnings: Vec<FitWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub network: Network,
    pub nodes: Vec<NodeFit>,
}

/// Fits every family of `dag` from `data`. Columns are matched by name and
/// variable kinds come from the data schema.
pub fn fit_network(data: &Dataset, dag: &Dag, opts: &FitOptions) -> Result<FitReport, FitError> {
    let cols: Vec<usize> = dag.nodes().iter().map(|n| column(data, n.as_str())).collect::<Result<_, _>>()?;
    let mut cpds = Vec::with_capacity(cols.len());
    let mut nodes = Vec::with_capacity(cols.len());
    for (v, &c) in cols.iter().enumerate() {
        let parents: Vec<usize> = dag.parent_indices(v).iter().map(|&p| cols[p]).collect();
        let fit = fit_family(data, c, &parents, opts)?;
        cpds.push(fit.cpd);
        nodes.push(NodeFit {
            node: dag.node(v).clone(),
            rows_used: fit.rows_used,
            rows_dropped: fit.rows_dropped,
            warnings: fit.warnings,
        });
    }
    let specs = cols.iter().map(|&c| data.schema()[c].spec()).collect();
    let network = Network::new(dag.clone(), specs, cpds)?;
    Ok(FitReport { network, nodes })
}

impl FitReport {
    /// One table per node: a row per parent configuration with the mean
    /// expression and σ (continuous) or the state probabilities (discrete).
    pub fn render(&self) -> String {
        let mut out = String::new();
        for nf in &self.nodes {
            let _ = writeln!(out, "{} (rows used: {}, dropped: {})", nf.node, nf.rows_used, nf.rows_dropped);
            out.push_str(&render_cpd(&self.network, nf.node.as_str()));
            for w in &nf.warnings {
                let _ = writeln!(out, "  warning: {w}");
            }
            out.push('\n');
        }
        out
    }
}

/// Table for one node's distribution, with three decimals.
pub fn render_cpd(net: &Network, node: &str) -> String {
    let Ok(cpd) = net.cpd(node) else { return String::new() };
    let case = |parents: &[NodeId], cards: &[usize], c: usize| -> String {
        if parents.is_empty() {
            return "-".to_string();
        }
        config_states(c, cards)
            .iter()
            .zip(parents)
            .map(|(&s, p)| {
                let label = net.spec(p.as_str()).map(|sp| sp.kind.states()[s].clone()).unwrap_or_default();
                format!("{p}={label}")
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut lines: Vec<(String, String, String)> = Vec::new();
    match cpd {
        Cpd::Clg(clg) => {
            lines.push(("Case".into(), "mu".into(), "sigma".into()));
            for (c, row) in clg.rows.iter().enumerate() {
                let mut mu = format!("{:.3}", row.intercept);
                for (b, p) in row.coefficients.iter().zip(&clg.continuous_parents) {
                    let sign = if *b < 0.0 { '-' } else { '+' };
                    let _ = write!(mu, " {sign} {:.3}·{p}", b.abs());
                }
                lines.push((case(&clg.discrete_parents, &clg.discrete_cards, c), mu, format!("{:.3}", row.sd)));
            }
        }
        Cpd::Categorical(cpt) => {
            let states = net.spec(node).map(|s| s.kind.states().to_vec()).unwrap_or_default();
            let header = states.iter().map(|s| format!("P({node}={s})")).collect::<Vec<_>>().join("  ");
            lines.push(("Case".into(), header, String::new()));
            for (c, probs) in cpt.probs.iter().enumerate() {
                let ps = probs.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join("  ");
                lines.push((case(&cpt.parents, &cpt.parent_cards, c), ps, String::new()));
            }
        }
    }
    let w0 = lines.iter().map(|l| l.0.chars().count()).max().unwrap_or(0);
    let w1 = lines.iter().map(|l| l.1.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (a, b, c) in lines {
        let pad0 = w0 - a.chars().count();
        let pad1 = w1 - b.chars().count();
        let line = format!("  {a}{} | {b}{} | {c}", " ".repeat(pad0), " ".repeat(pad1));
        let _ = writeln!(out, "{}", line.trim_end().trim_end_matches('|').trim_end());
    }
    out
}

/// Σ over complete rows of the log joint density under `net`.
pub fn log_likelihood(net: &Network, data: &Dataset) -> Result<f64, FitError> {
    let cols = model_columns(net, data)?;
    let k = net.node_count();
    let mut row = vec![0.0; k];
    let mut total = 0.0;
    'rows: for r in 0..data.n_rows() {
        for (v, &c) in cols.iter().enumerate() {
            row[v] = match &data.columns()[c] {
                Column::Discrete(col) => match col[r] {
                    Some(s) => s as f64,
                    None => continue 'rows,
                },
                Column::Continuous(col) => match col[r] {
                    Some(x) => x,
                    None => continue 'rows,
                },
            };
        }
        total += net.log_density_dense(&row);
    }
    Ok(total)
}

/// Per-family log-likelihood under `net`, each over the rows complete on that
/// family, in node order.
pub fn family_log_likelihoods(net: &Network, data: &Dataset) -> Result<Vec<(NodeId, f64)>, FitError> {
    let cols = model_columns(net, data)?;
    let k = net.node_count();
    let mut out = Vec::with_capacity(k);
    let mut row = vec![0.0; k];
    for v in 0..k {
        let layout = net.layout(v);
        let family: Vec<usize> =
            std::iter::once(v).chain(layout.discrete.iter().copied()).chain(layout.continuous.iter().copied()).collect();
        let mut sum = 0.0;
        'rows: for r in 0..data.n_rows() {
            for &u in &family {
                row[u] = match &data.columns()[cols[u]] {
                    Column::Discrete(col) => match col[r] {
                        Some(s) => s as f64,
                        None => continue 'rows,
                    },
                    Column::Continuous(col) => match col[r] {
                        Some(x) => x,
                        None => continue 'rows,
                    },
                };
            }
            sum += net.log_factor(v, &row);
        }
        out.push((net.specs()[v].id.clone(), sum));
    }
    Ok(out)
}

fn model_columns(net: &Network, data: &Dataset) -> Result<Vec<usize>, FitError> {
    net.specs()
        .iter()
        .map(|s| {
            let c = data
                .column_index(s.id.as_str())
                .ok_or_else(|| FitError::SchemaMismatch(format!("missing column `{}`", s.id)))?;
            if data.schema()[c].kind != s.kind {
                return Err(FitError::SchemaMismatch(format!("column `{}` has a different kind or states", s.id)));
            }
            Ok(c)
        })
        .collect()
}

fn column(data: &Dataset, name: &str) -> Result<usize, FitError> {
    data.column_index(name).ok_or_else(|| FitError::UnknownColumn(name.to_string()))
}

fn columns(data: &Dataset, names: &[&str]) -> Result<Vec<usize>, FitError> {
    names.iter().map(|n| column(data, n)).collect()
}
