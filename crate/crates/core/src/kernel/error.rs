use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown constant `{name}` at byte {offset}")]
    UnknownConstant { name: String, offset: usize },
    #[error("unbound variable #{0}")]
    UnboundVariable(u32),
    #[error("type error at {path}: expected `{expected}`, got `{actual}`")]
    TypeError { expected: String, actual: String, path: String },
    #[error("function expected at {path}, found term of type `{ty}`")]
    NotAFunction { ty: String, path: String },
    #[error("expected a type, `{name}` is not one")]
    NotAType { name: String },
    #[error("cannot infer implicit argument `{binder}` at byte {offset}")]
    UnsolvedMeta { binder: String, offset: usize },
    #[error("unexpected metavariable in term")]
    UnexpectedMeta,
    #[error("declaration `{0}` already exists")]
    DuplicateDeclaration(String),
    #[error("value of `{name}` has type {actual}, declared {expected}")]
    DeclTypeMismatch { name: String, expected: String, actual: String },
    #[error("malformed declaration block: {0}")]
    BadBlock(String),
    #[error("fixture line {line}: {source}")]
    Fixture { line: usize, source: Box<KernelError> },
    #[error("no `PREDICT` hole in term")]
    NoHole,
    #[error("`PREDICT` occurs {0} times, expected exactly once")]
    MultipleHoles(usize),
}
