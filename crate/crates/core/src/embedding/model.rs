use rand::Rng;

use crate::error::{check_dim, Error, Result};

/// Dense tables are capped at this many `S·A·H` entries.
pub const MAX_TABLE_ENTRIES: usize = 1_000_000;

const ROW_TOL: f64 = 1e-12;

/// Finite-horizon tabular transition model with a fixed initial state.
///
/// `transitions` is laid out as `[h][s][a][s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    states: usize,
    actions: usize,
    horizon: usize,
    transitions: Vec<f64>,
    initial_state: usize,
}

impl FiniteModel {
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        transitions: Vec<f64>,
        initial_state: usize,
    ) -> Result<Self> {
        if states == 0 || actions == 0 || horizon == 0 {
            return Err(Error::Config(format!(
                "model sizes must be positive, got S={states} A={actions} H={horizon}"
            )));
        }
        if states * actions * horizon > MAX_TABLE_ENTRIES {
            return Err(Error::Config(format!(
                "model too large: S·A·H = {} exceeds {MAX_TABLE_ENTRIES}",
                states * actions * horizon
            )));
        }
        check_dim(
            "transition tensor",
            horizon * states * actions * states,
            transitions.len(),
        )?;
        if initial_state >= states {
            return Err(Error::Config(format!(
                "initial state {initial_state} out of range for S={states}"
            )));
        }
        for (r, row) in transitions.chunks(states).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                let h = r / (states * actions);
                let s = (r / actions) % states;
                let a = r % actions;
                return Err(Error::Config(format!(
                    "transition row (h={h}, s={s}, a={a}) is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(Self {
            states,
            actions,
            horizon,
            transitions,
            initial_state,
        })
    }

    /// Deterministic dynamics given by `next(h, s, a)`.
    pub fn deterministic(
        states: usize,
        actions: usize,
        horizon: usize,
        initial_state: usize,
        next: impl Fn(usize, usize, usize) -> usize,
    ) -> Result<Self> {
        let mut t = vec![0.0; horizon * states * actions * states];
        for h in 0..horizon {
            for s in 0..states {
                for a in 0..actions {
                    let n = next(h, s, a);
                    if n >= states {
                        return Err(Error::Config(format!("next state {n} out of range")));
                    }
                    t[((h * states + s) * actions + a) * states + n] = 1.0;
                }
            }
        }
        Self::new(states, actions, horizon, t, initial_state)
    }

    /// Random dynamics: each row is an independent normalized vector of
    /// exponential draws (a flat Dirichlet sample).
    pub fn random<R: Rng + ?Sized>(
        states: usize,
        actions: usize,
        horizon: usize,
        initial_state: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut t = Vec::with_capacity(horizon * states * actions * states);
        for _ in 0..horizon * states * actions {
            let row: Vec<f64> = (0..states).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            t.extend(normalize_row(row));
        }
        Self::new(states, actions, horizon, t, initial_state)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    /// `P_h(· | s, a)`
    pub fn row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.states + s) * self.actions + a) * self.states;
        &self.transitions[start..start + self.states]
    }

    pub fn prob(&self, h: usize, s: usize, a: usize, next: usize) -> f64 {
        self.row(h, s, a)[next]
    }

    /// Inverse-CDF draw of the next state from a uniform `u ∈ [0, 1)`.
    pub fn sample_next(&self, h: usize, s: usize, a: usize, u: f64) -> usize {
        inverse_cdf(self.row(h, s, a), u)
    }

    /// Builds a model whose stage `h` comes from `sources[h]`.
    pub fn splice(sources: &[&FiniteModel]) -> Result<Self> {
        let first = sources
            .first()
            .ok_or_else(|| Error::Argument("splice needs at least one model".into()))?;
        check_dim("spliced horizon", first.horizon, sources.len())?;
        let block = first.states * first.actions * first.states;
        let mut t = Vec::with_capacity(block * first.horizon);
        for (h, m) in sources.iter().enumerate() {
            check_dim("spliced states", first.states, m.states)?;
            check_dim("spliced actions", first.actions, m.actions)?;
            t.extend_from_slice(&m.transitions[h * block..(h + 1) * block]);
        }
        Self::new(first.states, first.actions, first.horizon, t, first.initial_state)
    }

    /// Parses the text format:
    ///
    /// ```text
    /// S A H
    /// <H blocks of S·A rows with S entries each; row index s·A + a>
    /// <initial state index>
    /// ```
    ///
    /// Tokens are whitespace separated; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace)
            .collect();
        if tokens.len() < 3 {
            return Err(Error::Config("model text is missing the `S A H` header".into()));
        }
        let header = |i: usize, what: &str| -> Result<usize> {
            tokens[i]
                .parse()
                .map_err(|_| Error::Config(format!("expected integer {what}, found `{}`", tokens[i])))
        };
        let (states, actions, horizon) = (header(0, "S")?, header(1, "A")?, header(2, "H")?);
        let n = horizon * states * actions * states;
        let body = &tokens[3..];
        if body.len() != n + 1 {
            return Err(Error::Config(format!(
                "model text has {} values after the header, expected {}",
                body.len(),
                n + 1
            )));
        }
        let t = body[..n]
            .iter()
            .enumerate()
            .map(|(i, tok)| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Config(format!("transition entry {i}: cannot parse `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let init: usize = body[n]
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse initial state `{}`", body[n])))?;
        Self::new(states, actions, horizon, t, init)
    }

    /// Inverse of [`FiniteModel::parse`]; floats are written in shortest
    /// round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.states, self.actions, self.horizon);
        for h in 0..self.horizon {
            for s in 0..self.states {
                for a in 0..self.actions {
                    let row: Vec<String> = self.row(h, s, a).iter().map(|p| format!("{p:?}")).collect();
                    out.push_str(&row.join(" "));
                    out.push('\n');
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("{}\n", self.initial_state));
        out
    }
}

/// Normalizes nonnegative weights to a distribution.
pub(crate) fn normalize_row(mut row: Vec<f64>) -> Vec<f64> {
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    row
}

pub(crate) fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
