//! Problem representation: buyer-type grid, state space, instance validation,
//! elementary quantities, and generators for standard instance families.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack tolerated before probability masses are rejected outright.
/// Masses off by at most this much are silently renormalized.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("type grid must be strictly increasing (offending index {0})")]
    NonIncreasingTypes(usize),
    #[error("probability mass must be strictly positive (offending index {0})")]
    NonPositiveMass(usize),
    #[error("probability masses sum to {0}, not 1")]
    MassNotOne(f64),
    #[error("state weight v1 must be nonnegative (offending index {0})")]
    NegativeAlpha(usize),
    #[error("instance must contain at least one type and one state")]
    Empty,
    #[error("unknown instance family `{0}`")]
    UnknownFamily(String),
    #[error("bad family parameters: {0}")]
    BadParams(String),
}

/// One buyer type: location `t` and probability mass `f`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypePoint {
    pub t: f64,
    pub f: f64,
}

/// Ordered grid of buyer types with a pmf.
///
/// The last gap `t_{N+1} - t_N` is taken to be zero (`t_{N+1} := t_N`) and
/// the zeroth gap likewise (`t_0 := t_1`); both conventions show up in the
/// boundary virtual value formulas.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<TypePoint>", into = "Vec<TypePoint>")]
pub struct TypeGrid {
    points: Vec<TypePoint>,
    cum: Vec<f64>,
}

impl TryFrom<Vec<TypePoint>> for TypeGrid {
    type Error = ModelError;
    fn try_from(points: Vec<TypePoint>) -> Result<Self, ModelError> {
        TypeGrid::new(points)
    }
}

impl From<TypeGrid> for Vec<TypePoint> {
    fn from(grid: TypeGrid) -> Self {
        grid.points
    }
}

impl TypeGrid {
    pub fn new(points: Vec<TypePoint>) -> Result<Self, ModelError> {
        if points.is_empty() {
            return Err(ModelError::Empty);
        }
        for i in 1..points.len() {
            if points[i].t <= points[i - 1].t {
                return Err(ModelError::NonIncreasingTypes(i));
            }
        }
        let points = normalize_masses(points, |p| p.f, |p, m| p.f = m)?;
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for p in &points {
            acc += p.f;
            cum.push(acc.min(1.0));
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(TypeGrid { points, cum })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[TypePoint] {
        &self.points
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i].t
    }

    pub fn f(&self, i: usize) -> f64 {
        self.points[i].f
    }

    /// CDF at grid point `i`: `F(t_i) = sum_{j <= i} f(t_j)`. Clamped so the
    /// final value is exactly 1.
    pub fn cdf(&self, i: usize) -> f64 {
        self.cum[i]
    }

    /// `F(t_{i-1})`, with `F(t_0) = 0`.
    pub fn cdf_prev(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cdf(i - 1)
        }
    }

    /// Forward gap `t_{i+1} - t_i`, zero at the last index.
    pub fn gap_after(&self, i: usize) -> f64 {
        if i + 1 < self.points.len() {
            self.points[i + 1].t - self.points[i].t
        } else {
            0.0
        }
    }

    /// Backward gap `t_i - t_{i-1}`, zero at the first index.
    pub fn gap_before(&self, i: usize) -> f64 {
        if i > 0 {
            self.points[i].t - self.points[i - 1].t
        } else {
            0.0
        }
    }
}

/// One state of nature: opaque label, mass `g`, and value coefficients so
/// that `v(q,t) = v1*t + v0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub label: String,
    pub g: f64,
    pub v1: f64,
    pub v0: f64,
}

impl State {
    /// The threshold coordinate `rho = v0/v1` (beta in the continuous
    /// notation). Undefined when `v1 = 0`.
    pub fn rho(&self) -> Option<f64> {
        if self.v1 > 0.0 {
            Some(self.v0 / self.v1)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSpace {
    states: Vec<State>,
}

impl StateSpace {
    pub fn new(states: Vec<State>) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::Empty);
        }
        for (j, s) in states.iter().enumerate() {
            if s.v1 < 0.0 {
                return Err(ModelError::NegativeAlpha(j));
            }
        }
        let states = normalize_masses(states, |s| s.g, |s, m| s.g = m)?;
        Ok(StateSpace { states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &State {
        &self.states[j]
    }
}

fn normalize_masses<T>(
    mut items: Vec<T>,
    get: impl Fn(&T) -> f64,
    set: impl Fn(&mut T, f64),
) -> Result<Vec<T>, ModelError> {
    for (i, it) in items.iter().enumerate() {
        if get(it) <= 0.0 {
            return Err(ModelError::NonPositiveMass(i));
        }
    }
    let total: f64 = items.iter().map(&get).sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(ModelError::MassNotOne(total));
    }
    if total != 1.0 {
        for it in items.iter_mut() {
            let m = get(it) / total;
            set(it, m);
        }
    }
    Ok(items)
}

/// A validated problem instance: type grid plus state space.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    types: TypeGrid,
    states: StateSpace,
}

/// Raw, unvalidated instance data as it appears in JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub types: Vec<TypePoint>,
    pub states: Vec<State>,
}

impl Instance {
    pub fn new(types: TypeGrid, states: StateSpace) -> Self {
        Instance { types, states }
    }

    /// Validates raw data, renormalizing masses only when they are off by at
    /// most [`MASS_TOL`].
    pub fn validate(raw: RawInstance) -> Result<Self, ModelError> {
        Ok(Instance {
            types: TypeGrid::new(raw.types)?,
            states: StateSpace::new(raw.states)?,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Instance::validate(raw).map_err(|e| e.to_string())
    }

    pub fn types(&self) -> &TypeGrid {
        &self.types
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// `v(q,t) = v1(q)*t + v0(q)`.
    pub fn value(&self, q: usize, t: usize) -> f64 {
        let s = self.states.state(q);
        s.v1 * self.types.t(t) + s.v0
    }

    /// Prior expected active-action value `v(t) = sum_q g(q) v(q,t)`.
    pub fn prior_value(&self, t: usize) -> f64 {
        (0..self.num_states())
            .map(|q| self.states.state(q).g * self.value(q, t))
            .sum()
    }
}

/// A menu: experiment matrix `pi[state][type]` and payment vector `pay[type]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mechanism {
    pub pi: Vec<Vec<f64>>,
    pub pay: Vec<f64>,
}

impl Mechanism {
    pub fn zero(num_states: usize, num_types: usize) -> Self {
        Mechanism {
            pi: vec![vec![0.0; num_types]; num_states],
            pay: vec![0.0; num_types],
        }
    }

    /// Full revelation with zero payments: recommend active exactly when
    /// `v(q,t) >= 0`.
    pub fn full_revelation(inst: &Instance) -> Self {
        let mut mech = Mechanism::zero(inst.num_states(), inst.num_types());
        for q in 0..inst.num_states() {
            for t in 0..inst.num_types() {
                if inst.value(q, t) >= 0.0 {
                    mech.pi[q][t] = 1.0;
                }
            }
        }
        mech
    }

    /// Checks the shape against an instance and the box constraints on `pi`
    /// and `pay` (payments may dip to `-eps` for solver outputs).
    pub fn check_shape(&self, inst: &Instance, eps: f64) -> Result<(), String> {
        if self.pi.len() != inst.num_states() {
            return Err(format!(
                "pi has {} state rows, instance has {}",
                self.pi.len(),
                inst.num_states()
            ));
        }
        for (q, row) in self.pi.iter().enumerate() {
            if row.len() != inst.num_types() {
                return Err(format!("pi row {} has wrong length", q));
            }
            for (t, &p) in row.iter().enumerate() {
                if !(-eps..=1.0 + eps).contains(&p) {
                    return Err(format!("pi[{q}][{t}] = {p} outside [0,1]"));
                }
            }
        }
        if self.pay.len() != inst.num_types() {
            return Err("payment vector has wrong length".into());
        }
        for (t, &p) in self.pay.iter().enumerate() {
            if p < -eps {
                return Err(format!("pay[{t}] = {p} is negative"));
            }
        }
        Ok(())
    }
}

/// Uniform product family: midpoint grids for `t` on `[t_lo, t_hi]` and `q`
/// on `[q_lo, q_hi]`, with `v1(q) = q` and a constant `v0`.
pub fn uniform_product(
    t_lo: f64,
    t_hi: f64,
    q_lo: f64,
    q_hi: f64,
    v0: f64,
    n: usize,
    m: usize,
) -> Result<Instance, ModelError> {
    if !(t_lo < t_hi) || !(q_lo < q_hi) || n == 0 || m == 0 {
        return Err(ModelError::BadParams(
            "need t_lo < t_hi, q_lo < q_hi, n >= 1, m >= 1".into(),
        ));
    }
    let types: Vec<TypePoint> = (0..n)
        .map(|i| TypePoint {
            t: t_lo + (i as f64 + 0.5) * (t_hi - t_lo) / n as f64,
            f: 1.0 / n as f64,
        })
        .collect();
    let states: Vec<State> = (0..m)
        .map(|j| {
            let q = q_lo + (j as f64 + 0.5) * (q_hi - q_lo) / m as f64;
            State {
                label: format!("q{}", j + 1),
                g: 1.0 / m as f64,
                v1: q,
                v0,
            }
        })
        .collect();
    Ok(Instance::new(TypeGrid::new(types)?, StateSpace::new(states)?))
}

/// Equal-revenue family: `v(q,t) = t - q` with `q ~ U[0,C]`, buyer types
/// distributed with CDF `F(t) = 1 - 2C/t^2` on `[sqrt(2C), C/2)` plus a
/// residual atom of mass `8/C` at `t = C/2`. Every posted price for the
/// induced full-information value earns revenue 1.
pub fn equal_revenue_example(c: f64, n: usize) -> Result<Instance, ModelError> {
    if c <= 8.0 {
        return Err(ModelError::BadParams("equal_revenue requires C > 8".into()));
    }
    if n < 2 {
        return Err(ModelError::BadParams("equal_revenue requires n >= 2".into()));
    }
    let lo = (2.0 * c).sqrt();
    let hi = c / 2.0;
    let cdf = |t: f64| 1.0 - 2.0 * c / (t * t);
    // n - 1 left-edge points on the continuous part, then the atom. Left
    // edges make each candidate posted price earn exactly the continuum
    // revenue of 1.
    let cells = n - 1;
    let step = (hi - lo) / cells as f64;
    let mut types = Vec::with_capacity(n);
    for k in 0..cells {
        let left = lo + k as f64 * step;
        let right = lo + (k + 1) as f64 * step;
        types.push(TypePoint {
            t: left,
            f: cdf(right) - cdf(left),
        });
    }
    types.push(TypePoint {
        t: hi,
        f: 8.0 / c,
    });
    let states: Vec<State> = (0..n)
        .map(|j| {
            let q = (j as f64 + 0.5) * c / n as f64;
            State {
                label: format!("q{}", j + 1),
                g: 1.0 / n as f64,
                v1: 1.0,
                v0: -q,
            }
        })
        .collect();
    Ok(Instance::new(TypeGrid::new(types)?, StateSpace::new(states)?))
}

/// Named family dispatch used by the CLI.
pub fn generate_family(name: &str, params: &FamilyParams) -> Result<Instance, ModelError> {
    match name {
        "uniform_product" => uniform_product(
            params.t_lo,
            params.t_hi,
            params.q_lo,
            params.q_hi,
            params.v0,
            params.n,
            params.m,
        ),
        "equal_revenue" => equal_revenue_example(params.c, params.n),
        other => Err(ModelError::UnknownFamily(other.to_string())),
    }
}

/// Parameter bag for [`generate_family`].
#[derive(Debug, Clone)]
pub struct FamilyParams {
    pub t_lo: f64,
    pub t_hi: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub v0: f64,
    pub c: f64,
    pub n: usize,
    pub m: usize,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            t_lo: 0.0,
            t_hi: 1.0,
            q_lo: 0.0,
            q_hi: 1.0,
            v0: 0.0,
            c: 100.0,
            n: 100,
            m: 100,
        }
    }
}

/// The three-type, three-state worked example (`v(q,t) = q*t - 6`, uniform
/// masses). Used pervasively in tests.
pub fn three_type_example() -> Instance {
    let types = TypeGrid::new(
        [3.0, 4.0, 5.0]
            .iter()
            .map(|&t| TypePoint { t, f: 1.0 / 3.0 })
            .collect(),
    )
    .unwrap();
    let states = StateSpace::new(
        (1..=3)
            .map(|q| State {
                label: format!("q{q}"),
                g: 1.0 / 3.0,
                v1: q as f64,
                v0: -6.0,
            })
            .collect(),
    )
    .unwrap();
    Instance::new(types, states)
}
