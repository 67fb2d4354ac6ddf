//! Closed-form real functions given either as expression strings or as
//! native closures.

use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

type NativeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Expr { expr: meval::Expr, var: String },
    Native(NativeFn),
}

/// A real function of one variable with a printable source.
#[derive(Clone)]
pub struct RealFn {
    source: String,
    repr: Repr,
}

impl RealFn {
    /// Parse `src` as an expression in the variable `var`.
    ///
    /// Standard precedence applies (`-x^2` is `-(x^2)`); `abs`, `signum`,
    /// `sqrt`, `exp`, `ln`, `max`, `min`, `pi` and `e` are available.
    pub fn parse(src: &str, var: &str) -> Result<Self> {
        let expr: meval::Expr = src
            .parse()
            .map_err(|e: meval::Error| Error::Expr(format!("{src:?}: {e}")))?;
        let _ = expr
            .clone()
            .bind(var)
            .map_err(|e| Error::Expr(format!("{src:?}: {e}")))?;
        Ok(RealFn {
            source: src.to_string(),
            repr: Repr::Expr {
                expr,
                var: var.to_string(),
            },
        })
    }

    /// Wrap a closure. `name` identifies the function for structural
    /// comparisons, so distinct closures must get distinct names.
    pub fn native(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RealFn {
            source: name.to_string(),
            repr: Repr::Native(Arc::new(f)),
        }
    }

    pub fn constant(c: f64) -> Self {
        RealFn::native(&format!("{c:e}"), move |_| c)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Prepare the function for repeated evaluation.
    pub fn bind(&self) -> Box<dyn Fn(f64) -> f64 + '_> {
        match &self.repr {
            Repr::Native(f) => Box::new(move |x| f(x)),
            Repr::Expr { expr, var } => {
                // parse() has already checked that binding succeeds
                let f = expr.clone().bind(var).expect("validated at parse time");
                Box::new(f)
            }
        }
    }

    /// One-off evaluation; bind once instead inside loops.
    pub fn eval(&self, x: f64) -> f64 {
        (self.bind())(x)
    }
}

impl PartialEq for RealFn {
    fn eq(&self, other: &Self) -> bool {
        match (&self.repr, &other.repr) {
            (Repr::Native(a), Repr::Native(b)) => Arc::ptr_eq(a, b) || self.source == other.source,
            (Repr::Expr { var: va, .. }, Repr::Expr { var: vb, .. }) => {
                va == vb && self.source.replace(' ', "") == other.source.replace(' ', "")
            }
            _ => false,
        }
    }
}

impl fmt::Debug for RealFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealFn({})", self.source)
    }
}
