//! Exact Fourier expansions of the Hauptmoduln `j_p` and `j_p*` for
//! `p = 1, 2, 3, 5`, traces of their singular moduli over classes of binary
//! quadratic forms, and the coefficient formulas and asymptotics that tie the
//! two together.
//!
//! The crate is organised bottom-up:
//!
//! - [`series`]: truncated Laurent series in `q` with exact rational
//!   coefficients, plus eta quotients, theta, Eisenstein series and the
//!   `U_t` / `V_t` / sector operators.
//! - [`forms`]: positive definite binary quadratic forms, reduction and class
//!   enumeration modulo `SL2(Z)`, `Γ0(p)` and `Γ0*(p)`.
//! - [`numeric`]: complex ball arithmetic on top of `astro-float`, used for
//!   certified evaluation at CM points.
//! - [`hauptmodul`]: the six Hauptmoduln (and `j - 744`), Faber polynomials
//!   and CM evaluation.
//! - [`traces`]: the modular trace functions `t_m^(p)(d)` and `t_m^(p*)(d)`.
//! - [`identities`]: coefficient formulas from traces, the star relation and
//!   the weight-2 sector identities.
//! - [`asymptotics`]: principal-form approximations and the growth of `c_n^(p)`.
//! - [`cli`]: the `hmtrace` command line front end.

pub mod asymptotics;
pub mod cli;
pub mod forms;
pub mod hauptmodul;
pub mod identities;
pub mod numeric;
pub mod series;
pub mod traces;

pub use forms::{FormClass, Group, QuadForm};
pub use hauptmodul::{FaberPoly, Level, PrecisionBudget};
pub use series::{EtaProduct, EtaQuotientSpec, QSeries, SeriesError};
pub use traces::{Provenance, TraceEngine, TraceTable, TraceValue};
