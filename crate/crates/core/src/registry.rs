//! Functions by name.
//!
//! A function spec is a `*`-separated product of factors, each `name` or
//! `name:arg` with a complex argument, e.g. `exp:2*F` or `kernel:0.5-1i`.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::fock::kernel;
use crate::function::{constant, exponential, monomial, polynomial, product, EntireFnHandle, FnEntire};
use crate::lattice::biorthogonal_g;
use crate::sector::{eval_f, eval_g, ContourSpec, CounterexampleFunctions, CounterexampleParams};
use crate::sigma::{sigma0_handle, sigma_handle};

/// Shared inputs for building functions; the counterexample family is built
/// once on first use.
#[derive(Debug)]
pub struct FunctionContext {
    pub params: CounterexampleParams,
    pub contour: ContourSpec,
    counterexample: OnceLock<Result<Arc<CounterexampleFunctions>>>,
}

impl FunctionContext {
    pub fn new(params: CounterexampleParams, contour: ContourSpec) -> Self {
        FunctionContext {
            params,
            contour,
            counterexample: OnceLock::new(),
        }
    }

    pub fn counterexample(&self) -> Result<Arc<CounterexampleFunctions>> {
        self.counterexample
            .get_or_init(|| CounterexampleFunctions::new(self.params, &self.contour).map(Arc::new))
            .clone()
    }
}

impl Default for FunctionContext {
    fn default() -> Self {
        FunctionContext::new(CounterexampleParams::default(), ContourSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Argument {
    None,
    Required,
    /// Missing arguments default to this value.
    Optional(f64),
}

pub trait FunctionFactory: Send + Sync {
    fn name(&self) -> &str;
    fn summary(&self) -> &str;
    fn argument(&self) -> Argument {
        Argument::None
    }
    fn build(&self, arg: Option<Complex64>, ctx: &FunctionContext) -> Result<EntireFnHandle>;
}

type BuildFn = fn(Option<Complex64>, &FunctionContext) -> Result<EntireFnHandle>;

struct Builtin {
    name: &'static str,
    summary: &'static str,
    argument: Argument,
    build: BuildFn,
}

impl FunctionFactory for Builtin {
    fn name(&self) -> &str {
        self.name
    }
    fn summary(&self) -> &str {
        self.summary
    }
    fn argument(&self) -> Argument {
        self.argument
    }
    fn build(&self, arg: Option<Complex64>, ctx: &FunctionContext) -> Result<EntireFnHandle> {
        (self.build)(arg, ctx)
    }
}

fn real_index(a: Complex64) -> Result<usize> {
    if a.im != 0.0 || a.re < 0.0 || a.re.fract() != 0.0 || a.re > 1e6 {
        return Err(FockError::InvalidParams(format!("expected a non-negative integer, got {a}")));
    }
    Ok(a.re as usize)
}

fn builtins() -> Vec<Builtin> {
    vec![
        Builtin {
            name: "sigma",
            summary: "Weierstrass sigma function of Z + iZ",
            argument: Argument::None,
            build: |_, _| Ok(sigma_handle()),
        },
        Builtin {
            name: "sigma0",
            summary: "sigma(z) / z",
            argument: Argument::None,
            build: |_, _| Ok(sigma0_handle()),
        },
        Builtin {
            name: "f",
            summary: "sector integrand exp(z^2 pi/2 - z^beta) (principal branch)",
            argument: Argument::None,
            build: |_, ctx| {
                let p = ctx.params;
                Ok(Arc::new(FnEntire::new(format!("f[{}]", p.beta), move |z| eval_f(z, &p)).symmetric()))
            },
        },
        Builtin {
            name: "g",
            summary: "sector integrand exp(z^sigma) (principal branch)",
            argument: Argument::None,
            build: |_, ctx| {
                let p = ctx.params;
                Ok(Arc::new(FnEntire::new(format!("g[{}]", p.sigma_exp), move |z| eval_g(z, &p)).symmetric()))
            },
        },
        Builtin {
            name: "f1",
            summary: "entire continuation of f",
            argument: Argument::None,
            build: |_, ctx| Ok(ctx.counterexample()?.f1_handle()),
        },
        Builtin {
            name: "F",
            summary: "sum of the two rotated copies of f1",
            argument: Argument::None,
            build: |_, ctx| Ok(ctx.counterexample()?.big_f_handle()),
        },
        Builtin {
            name: "G",
            summary: "entire continuation of g",
            argument: Argument::None,
            build: |_, ctx| Ok(ctx.counterexample()?.big_g_handle()),
        },
        Builtin {
            name: "FG",
            summary: "product F G",
            argument: Argument::None,
            build: |_, ctx| Ok(ctx.counterexample()?.product_handle()),
        },
        Builtin {
            name: "kernel",
            summary: "reproducing kernel k_lambda(z) = pi exp(pi conj(lambda) z)",
            argument: Argument::Optional(0.0),
            build: |a, _| Ok(kernel(a.unwrap_or_default())),
        },
        Builtin {
            name: "exp",
            summary: "e_lambda(z) = exp(lambda z)",
            argument: Argument::Optional(1.0),
            build: |a, _| Ok(exponential(a.unwrap_or(Complex64::new(1.0, 0.0)))),
        },
        Builtin {
            name: "const",
            summary: "constant function",
            argument: Argument::Optional(1.0),
            build: |a, _| {
                let c = a.unwrap_or(Complex64::new(1.0, 0.0));
                Ok(if c.im == 0.0 { constant(c.re) } else { polynomial(vec![c]) })
            },
        },
        Builtin {
            name: "z",
            summary: "monomial z^n",
            argument: Argument::Optional(1.0),
            build: |a, _| Ok(monomial(real_index(a.unwrap_or_default())?)),
        },
        Builtin {
            name: "shift",
            summary: "linear factor z - mu",
            argument: Argument::Required,
            build: |a, _| Ok(polynomial(vec![-a.unwrap_or_default(), Complex64::new(1.0, 0.0)])),
        },
        Builtin {
            name: "gw",
            summary: "biorthogonal function g_w at a punctured-lattice point w",
            argument: Argument::Required,
            build: |a, _| biorthogonal_g(a.unwrap_or_default()),
        },
    ]
}

/// Parses `1`, `-0.5`, `2+0.5i`, `-i`, ...
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    Complex64::from_str(&t).map_err(|_| FockError::InvalidParams(format!("cannot parse complex number {s:?}")))
}

pub struct FunctionRegistry {
    entries: BTreeMap<String, Box<dyn FunctionFactory>>,
}

impl FunctionRegistry {
    pub fn empty() -> Self {
        FunctionRegistry { entries: BTreeMap::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for b in builtins() {
            r.register(Box::new(b));
        }
        r
    }

    /// Adds a factory, returning the one it replaces.
    pub fn register(&mut self, factory: Box<dyn FunctionFactory>) -> Option<Box<dyn FunctionFactory>> {
        self.entries.insert(factory.name().to_string(), factory)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn FunctionFactory> {
        self.entries.get(name).map(|b| &**b)
    }

    fn factor(&self, spec: &str, ctx: &FunctionContext) -> Result<EntireFnHandle> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(parse_complex(a)?)),
            None => (spec.trim(), None),
        };
        let f = self.get(name).ok_or_else(|| FockError::UnknownFunction(name.to_string()))?;
        match (f.argument(), arg) {
            (Argument::None, Some(_)) => Err(FockError::InvalidParams(format!("{name} takes no argument"))),
            (Argument::Required, None) => Err(FockError::InvalidParams(format!("{name} needs an argument, e.g. {name}:1"))),
            (Argument::Optional(d), None) => f.build(Some(Complex64::new(d, 0.0)), ctx),
            _ => f.build(arg, ctx),
        }
    }

    pub fn resolve(&self, spec: &str, ctx: &FunctionContext) -> Result<EntireFnHandle> {
        let factors = spec.split('*').map(|s| self.factor(s, ctx)).collect::<Result<Vec<_>>>()?;
        Ok(match factors.len() {
            0 => unreachable!("split yields at least one piece"),
            1 => factors.into_iter().next().unwrap(),
            _ => product(factors),
        })
    }
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
