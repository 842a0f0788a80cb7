//! Miniature lambda-Pi kernel: terms, environments, type inference,
//! traversal, surface syntax and printing.

pub mod env;
pub mod error;
pub mod expr;
pub mod parse;
pub mod print;
pub mod traverse;
pub mod typing;

pub use env::{DeclKind, Declaration, Environment};
pub use error::KernelError;
pub use expr::{Binder, BinderInfo, Expr, FVarId, Level, PathStep, HOLE};
pub use parse::{parse_explicit, parse_expr, parse_expr_in, parse_expr_with, parse_with_locals, ParseOptions};
pub use print::{print_closed, print_expr, print_in, PrintMode};
pub use traverse::{get_at, occurs, replace_at, subterms, substitute_hole, ContextEntry, SubtermContext, Target};
pub use typing::{defeq, infer_closed, infer_type, whnf, TypeChecker};
