//! Exact arithmetic in Q(β) for β = β_{n,q}, certified enclosures of β and
//! the Pisot certificate for its conjugates.

mod context;
mod number;
pub(crate) mod poly;
mod roots;

pub use context::{make_context, BetaContext, ContextRecord, Enclosure, MAX_ENCLOSURE_BITS};
pub use number::AlgNum;
pub use poly::parse_rational;
pub use roots::{aberth, all_roots, PisotReport, RootDisk};
