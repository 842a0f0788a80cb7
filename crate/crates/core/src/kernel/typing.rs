use super::env::Environment;
use super::error::KernelError;
use super::expr::{
    abstract_fvar, abstract_fvars, alpha_eq, beta_normalize, format_path, instantiate, instantiate_many, whnf_beta,
    Binder, Expr, FVarId, Level, PathStep,
};
use super::print::print_closed;
use super::traverse::SubtermContext;

use std::sync::Arc;

/// Definitional equality: syntactic equality after beta normalisation,
/// ignoring binder names.
pub fn defeq(a: &Expr, b: &Expr) -> bool {
    alpha_eq(a, b) || alpha_eq(&beta_normalize(a), &beta_normalize(b))
}

/// Weak-head normal form with beta and delta (unfolding `def`s at the head).
pub fn whnf(env: &Environment, e: &Expr) -> Expr {
    let mut cur = whnf_beta(e);
    loop {
        let (head, args) = cur.spine();
        let Expr::Const(name) = head else { return cur };
        let Some(value) = env.unfold(name) else { return cur };
        let next = Expr::apps(value.clone(), args.into_iter().cloned());
        cur = whnf_beta(&next);
    }
}

/// Locally nameless type checker over a fixed environment prefix.
pub struct TypeChecker<'a> {
    env: &'a Environment,
    cutoff: usize,
}

impl<'a> TypeChecker<'a> {
    /// Only declarations with `order_index < cutoff` are visible.
    pub fn new(env: &'a Environment, cutoff: usize) -> Self {
        Self { env, cutoff }
    }

    pub fn full(env: &'a Environment) -> Self {
        Self::new(env, usize::MAX)
    }

    /// Type of a term without loose bound variables (local constants allowed).
    pub fn infer(&self, e: &Expr) -> Result<Expr, KernelError> {
        let mut path = Vec::new();
        self.infer_at(e, &mut path)
    }

    fn infer_at(&self, e: &Expr, path: &mut Vec<PathStep>) -> Result<Expr, KernelError> {
        match e {
            Expr::BVar(i) => Err(KernelError::UnboundVariable(*i)),
            Expr::FVar { ty, .. } => Ok((**ty).clone()),
            Expr::Const(name) => self
                .env
                .get_before(name, self.cutoff)
                .map(|d| d.ty.clone())
                .ok_or_else(|| KernelError::UnknownConstant { name: name.to_string(), offset: 0 }),
            Expr::Sort(_) => Ok(Expr::Sort(Level::Type)),
            Expr::Meta(_) => Err(KernelError::UnexpectedMeta),
            Expr::App(f, a) => {
                path.push(PathStep::Fn);
                let fty = self.infer_at(f, path)?;
                path.pop();
                let fty = whnf(self.env, &fty);
                let Expr::Pi(binder, body) = fty else {
                    return Err(KernelError::NotAFunction {
                        ty: print_closed(self.env, &fty),
                        path: format_path(path),
                    });
                };
                path.push(PathStep::Arg);
                let aty = self.infer_at(a, path)?;
                if !defeq(&aty, &binder.ty) {
                    let err = KernelError::TypeError {
                        expected: print_closed(self.env, &binder.ty),
                        actual: print_closed(self.env, &aty),
                        path: format_path(path),
                    };
                    return Err(err);
                }
                path.pop();
                Ok(instantiate(&body, a))
            }
            Expr::Lam(binder, body) => {
                path.push(PathStep::BinderType);
                self.ensure_sort(&binder.ty, path)?;
                path.pop();
                let x = local(binder);
                let id = fvar_id(&x);
                path.push(PathStep::Body);
                let bty = self.infer_at(&instantiate(body, &x), path)?;
                path.pop();
                Ok(Expr::Pi(binder.clone(), Arc::new(abstract_fvar(&bty, id))))
            }
            Expr::Pi(binder, body) => {
                path.push(PathStep::BinderType);
                self.ensure_sort(&binder.ty, path)?;
                path.pop();
                let x = local(binder);
                path.push(PathStep::Body);
                let level = self.ensure_sort(&instantiate(body, &x), path)?;
                path.pop();
                Ok(Expr::Sort(level))
            }
        }
    }

    fn ensure_sort(&self, ty: &Expr, path: &mut Vec<PathStep>) -> Result<Level, KernelError> {
        let s = whnf(self.env, &self.infer_at(ty, path)?);
        match s {
            Expr::Sort(l) => Ok(l),
            other => Err(KernelError::TypeError {
                expected: "a sort".to_string(),
                actual: print_closed(self.env, &other),
                path: format_path(path),
            }),
        }
    }

    /// Sort of a type, if it is one.
    pub fn sort_of(&self, ty: &Expr) -> Option<Level> {
        match whnf(self.env, &self.infer(ty).ok()?) {
            Expr::Sort(l) => Some(l),
            _ => None,
        }
    }

    /// Is `ty` a proposition (a type whose sort is `Prop`)?
    pub fn is_prop(&self, ty: &Expr) -> bool {
        self.sort_of(ty) == Some(Level::Prop)
    }
}

pub(crate) fn local(binder: &Binder) -> Expr {
    Expr::FVar { id: FVarId::fresh(), name: binder.name.clone(), ty: binder.ty.clone() }
}

pub(crate) fn fvar_id(e: &Expr) -> FVarId {
    match e {
        Expr::FVar { id, .. } => *id,
        _ => unreachable!("not a local constant"),
    }
}

/// Type of a closed term (local constants allowed).
pub fn infer_closed(env: &Environment, e: &Expr) -> Result<Expr, KernelError> {
    TypeChecker::full(env).infer(e)
}

/// Open the bound variables of `ctx` as fresh local constants, outermost first.
pub fn open_context(ctx: &SubtermContext) -> Vec<Expr> {
    let mut locals: Vec<Expr> = Vec::with_capacity(ctx.bs.len());
    for entry in &ctx.bs {
        let ty = instantiate_many(&entry.ty, &locals);
        locals.push(Expr::FVar { id: FVarId::fresh(), name: entry.name.clone(), ty: Arc::new(ty) });
    }
    locals
}

/// Type of `e` whose loose bound variables refer to the binders of `ctx`.
/// The result is expressed in the same context.
pub fn infer_type(e: &Expr, ctx: &SubtermContext, env: &Environment) -> Result<Expr, KernelError> {
    let locals = open_context(ctx);
    let ids: Vec<FVarId> = locals.iter().map(fvar_id).collect();
    let opened = instantiate_many(e, &locals);
    let ty = infer_closed(env, &opened)?;
    Ok(abstract_fvars(&ty, &ids))
}
