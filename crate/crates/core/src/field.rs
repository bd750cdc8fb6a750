//! External fields V for the weight e^{-N V(x)} dx.
//!
//! A field is a triple (V, V', V'') plus metadata. Built-in ids:
//! `gue` (x^2), `quartic(g)` (x^4 - g x^2) and `c2lip(a,c0)`
//! (x^2/2 + c0 max(0, x-a)^3, two Lipschitz derivatives only).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Analytic,
    C2Lipschitz,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Quadratic,
    Quartic { gamma: f64 },
    C2Lip { a: f64, c0: f64 },
    Custom { v: RealFn, v1: RealFn, v2: RealFn },
}

#[derive(Clone)]
pub struct ExternalField {
    id: String,
    kind: Kind,
    convex: bool,
    smoothness: Smoothness,
    growth_hint: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for ExternalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalField")
            .field("id", &self.id)
            .field("convex", &self.convex)
            .field("smoothness", &self.smoothness)
            .field("growth_hint", &self.growth_hint)
            .finish()
    }
}

fn parse_args(id: &str, name: &str) -> Option<Result<Vec<f64>>> {
    let rest = id.strip_prefix(name)?;
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    let vals: std::result::Result<Vec<f64>, _> = inner.split(',').map(|s| s.trim().parse::<f64>()).collect();
    Some(vals.map_err(|_| Error::Validation(format!("cannot parse parameters in {id:?}"))))
}

impl ExternalField {
    /// Look up a catalog field.
    pub fn builtin(id: &str) -> Result<Self> {
        let id = id.trim();
        if id == "gue" {
            return Ok(Self {
                id: id.into(),
                kind: Kind::Quadratic,
                convex: true,
                smoothness: Smoothness::Analytic,
                growth_hint: 8.0,
                breakpoints: vec![],
            });
        }
        if let Some(args) = parse_args(id, "quartic") {
            let args = args?;
            if args.len() != 1 || !args[0].is_finite() {
                return Err(Error::Validation("quartic takes one finite parameter".into()));
            }
            let gamma = args[0];
            // one-interval support with h > 0 at c = 1 requires gamma < 2
            if gamma >= 2.0 {
                return Err(Error::Validation(format!(
                    "quartic({gamma}): h changes sign on the support (need gamma < 2)"
                )));
            }
            return Ok(Self {
                id: id.into(),
                kind: Kind::Quartic { gamma },
                convex: gamma <= 0.0,
                smoothness: Smoothness::Analytic,
                growth_hint: 4.0,
                breakpoints: vec![],
            });
        }
        if let Some(args) = parse_args(id, "c2lip") {
            let args = args?;
            if args.len() != 2 || !args.iter().all(|v| v.is_finite()) {
                return Err(Error::Validation("c2lip takes two finite parameters".into()));
            }
            let (a, c0) = (args[0], args[1]);
            if c0 < 0.0 {
                return Err(Error::Validation(format!("c2lip({a},{c0}) is not convex")));
            }
            return Ok(Self {
                id: id.into(),
                kind: Kind::C2Lip { a, c0 },
                convex: true,
                smoothness: if c0 == 0.0 { Smoothness::Analytic } else { Smoothness::C2Lipschitz },
                growth_hint: 8.0,
                breakpoints: if c0 == 0.0 { vec![] } else { vec![a] },
            });
        }
        Err(Error::Catalog(id.into()))
    }

    /// A user-supplied field. `breakpoints` lists points where V'' is not smooth.
    #[allow(clippy::too_many_arguments)]
    pub fn custom<V, V1, V2>(
        id: &str,
        v: V,
        v1: V1,
        v2: V2,
        convex: bool,
        smoothness: Smoothness,
        growth_hint: f64,
        breakpoints: Vec<f64>,
    ) -> Self
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        V1: Fn(f64) -> f64 + Send + Sync + 'static,
        V2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            kind: Kind::Custom { v: Arc::new(v), v1: Arc::new(v1), v2: Arc::new(v2) },
            convex,
            smoothness,
            growth_hint,
            breakpoints,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic => x * x,
            Kind::Quartic { gamma } => {
                let x2 = x * x;
                x2 * x2 - gamma * x2
            }
            Kind::C2Lip { a, c0 } => {
                let d = (x - a).max(0.0);
                0.5 * x * x + c0 * d * d * d
            }
            Kind::Custom { v, .. } => v(x),
        }
    }

    #[inline]
    pub fn v1(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic => 2.0 * x,
            Kind::Quartic { gamma } => 4.0 * x * x * x - 2.0 * gamma * x,
            Kind::C2Lip { a, c0 } => {
                let d = (x - a).max(0.0);
                x + 3.0 * c0 * d * d
            }
            Kind::Custom { v1, .. } => v1(x),
        }
    }

    #[inline]
    pub fn v2(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Quadratic => 2.0,
            Kind::Quartic { gamma } => 12.0 * x * x - 2.0 * gamma,
            Kind::C2Lip { a, c0 } => 1.0 + 6.0 * c0 * (x - a).max(0.0),
            Kind::Custom { v2, .. } => v2(x),
        }
    }

    /// True when V'' > 0 on the whole line.
    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn growth_hint(&self) -> f64 {
        self.growth_hint
    }

    /// Points where V'' fails to be smooth (panel cuts for quadrature).
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Whether V(-x) = V(x).
    pub fn is_even(&self) -> bool {
        matches!(self.kind, Kind::Quadratic | Kind::Quartic { .. })
            || matches!(self.kind, Kind::C2Lip { c0, .. } if c0 == 0.0)
    }
}
