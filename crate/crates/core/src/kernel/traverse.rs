use std::sync::Arc;

use super::error::KernelError;
use super::expr::{Binder, BinderInfo, Expr, PathStep, HOLE};

/// A bound variable in scope at some subterm.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextEntry {
    pub name: Arc<str>,
    /// Type of the binder, in the context of the entries before it.
    pub ty: Expr,
    pub info: BinderInfo,
}

/// Binders enclosing a subterm (outermost first) and the path to it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubtermContext {
    pub bs: Vec<ContextEntry>,
    pub path: Vec<PathStep>,
}

impl SubtermContext {
    pub fn depth(&self) -> usize {
        self.bs.len()
    }

    fn entering(&self, binder: &Binder) -> Self {
        let mut next = self.clone();
        next.bs.push(ContextEntry { name: binder.name.clone(), ty: (*binder.ty).clone(), info: binder.info });
        next.path.push(PathStep::Body);
        next
    }

    fn step(&self, s: PathStep) -> Self {
        let mut next = self.clone();
        next.path.push(s);
        next
    }

    /// Whether the last step into this subterm was into a binder's type.
    pub fn in_binder_type(&self) -> bool {
        self.path.contains(&PathStep::BinderType)
    }
}

/// Every subterm of `e` in depth-first pre-order with its context.
/// Binder types are visited with the context of the binder itself, bodies
/// with the context extended by the binder.
pub fn subterms(e: &Expr) -> Vec<(Expr, SubtermContext)> {
    let mut out = Vec::new();
    walk(e, SubtermContext::default(), &mut out);
    out
}

fn walk(e: &Expr, ctx: SubtermContext, out: &mut Vec<(Expr, SubtermContext)>) {
    out.push((e.clone(), ctx.clone()));
    match e {
        Expr::App(f, a) => {
            walk(f, ctx.step(PathStep::Fn), out);
            walk(a, ctx.step(PathStep::Arg), out);
        }
        Expr::Lam(b, body) | Expr::Pi(b, body) => {
            walk(&b.ty, ctx.step(PathStep::BinderType), out);
            walk(body, ctx.entering(b), out);
        }
        _ => {}
    }
}

/// What [`occurs`] looks for.
#[derive(Clone, Debug)]
pub enum Target<'a> {
    Const(&'a str),
    /// De Bruijn index relative to the root of the searched term.
    BVar(u32),
}

/// Does the target occur in the fully explicit form of `e`?
pub fn occurs(target: &Target<'_>, e: &Expr) -> bool {
    fn go(target: &Target<'_>, e: &Expr, depth: u32) -> bool {
        match (e, target) {
            (Expr::Const(n), Target::Const(t)) => &**n == *t,
            (Expr::BVar(i), Target::BVar(t)) => *i == t + depth,
            (Expr::App(f, a), _) => go(target, f, depth) || go(target, a, depth),
            (Expr::Lam(b, body), _) | (Expr::Pi(b, body), _) => go(target, &b.ty, depth) || go(target, body, depth + 1),
            _ => false,
        }
    }
    go(target, e, 0)
}

/// Resolve a display name against a context (innermost binding wins) and
/// test whether that variable occurs in `e`.
pub fn occurs_named(name: &str, ctx: &SubtermContext, e: &Expr) -> bool {
    match ctx.bs.iter().rposition(|b| &*b.name == name) {
        Some(pos) => occurs(&Target::BVar((ctx.bs.len() - 1 - pos) as u32), e),
        None => occurs(&Target::Const(name), e),
    }
}

/// Subterm at `path`.
pub fn get_at<'e>(e: &'e Expr, path: &[PathStep]) -> Option<&'e Expr> {
    let Some((step, rest)) = path.split_first() else { return Some(e) };
    let child = match (e, step) {
        (Expr::App(f, _), PathStep::Fn) => f,
        (Expr::App(_, a), PathStep::Arg) => a,
        (Expr::Lam(b, _), PathStep::BinderType) | (Expr::Pi(b, _), PathStep::BinderType) => &b.ty,
        (Expr::Lam(_, body), PathStep::Body) | (Expr::Pi(_, body), PathStep::Body) => body,
        _ => return None,
    };
    get_at(child, rest)
}

/// Replace the subterm at `path` with `replacement` (no shifting: the
/// replacement is interpreted in the context at `path`).
pub fn replace_at(e: &Expr, path: &[PathStep], replacement: &Expr) -> Option<Expr> {
    let Some((step, rest)) = path.split_first() else { return Some(replacement.clone()) };
    Some(match (e, step) {
        (Expr::App(f, a), PathStep::Fn) => Expr::App(Arc::new(replace_at(f, rest, replacement)?), a.clone()),
        (Expr::App(f, a), PathStep::Arg) => Expr::App(f.clone(), Arc::new(replace_at(a, rest, replacement)?)),
        (Expr::Lam(b, body), PathStep::BinderType) => Expr::Lam(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(replace_at(&b.ty, rest, replacement)?) },
            body.clone(),
        ),
        (Expr::Pi(b, body), PathStep::BinderType) => Expr::Pi(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(replace_at(&b.ty, rest, replacement)?) },
            body.clone(),
        ),
        (Expr::Lam(b, body), PathStep::Body) => Expr::Lam(b.clone(), Arc::new(replace_at(body, rest, replacement)?)),
        (Expr::Pi(b, body), PathStep::Body) => Expr::Pi(b.clone(), Arc::new(replace_at(body, rest, replacement)?)),
        _ => return None,
    })
}

fn hole_path(e: &Expr, path: &mut Vec<PathStep>) -> bool {
    match e {
        Expr::Const(n) => &**n == HOLE,
        Expr::App(f, a) => {
            path.push(PathStep::Fn);
            if hole_path(f, path) {
                return true;
            }
            path.pop();
            path.push(PathStep::Arg);
            if hole_path(a, path) {
                return true;
            }
            path.pop();
            false
        }
        Expr::Lam(b, body) | Expr::Pi(b, body) => {
            path.push(PathStep::BinderType);
            if hole_path(&b.ty, path) {
                return true;
            }
            path.pop();
            path.push(PathStep::Body);
            if hole_path(body, path) {
                return true;
            }
            path.pop();
            false
        }
        _ => false,
    }
}

/// Fill the single `PREDICT` hole of `masked` with `filler`. The filler's
/// bound variables are read in the hole's context.
pub fn substitute_hole(masked: &Expr, filler: &Expr) -> Result<Expr, KernelError> {
    match masked.count_const(HOLE) {
        0 => Err(KernelError::NoHole),
        1 => {
            let mut path = Vec::new();
            hole_path(masked, &mut path);
            Ok(replace_at(masked, &path, filler).expect("path found by search"))
        }
        n => Err(KernelError::MultipleHoles(n)),
    }
}
