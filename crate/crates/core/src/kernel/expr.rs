use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Name of the distinguished constant that marks a masked subterm.
pub const HOLE: &str = "PREDICT";

/// How a binder's argument is supplied at application sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinderInfo {
    Explicit,
    Implicit,
    Instance,
}

impl BinderInfo {
    pub fn brackets(self) -> (&'static str, &'static str) {
        match self {
            BinderInfo::Explicit => ("(", ")"),
            BinderInfo::Implicit => ("{", "}"),
            BinderInfo::Instance => ("[", "]"),
        }
    }

    pub fn is_explicit(self) -> bool {
        self == BinderInfo::Explicit
    }
}

/// The two sorts of the collapsed universe hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Prop,
    Type,
}

/// Identity of a local constant. Display names may repeat, ids never do.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FVarId(pub u64);

static NEXT_FVAR: AtomicU64 = AtomicU64::new(1);

impl FVarId {
    pub fn fresh() -> Self {
        FVarId(NEXT_FVAR.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: Arc<str>,
    pub info: BinderInfo,
    pub ty: Arc<Expr>,
}

/// Expressions of the lambda-Pi fragment. Bound variables use de Bruijn
/// indices (0 = innermost binder).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    BVar(u32),
    FVar { id: FVarId, name: Arc<str>, ty: Arc<Expr> },
    Const(Arc<str>),
    Sort(Level),
    App(Arc<Expr>, Arc<Expr>),
    Lam(Binder, Arc<Expr>),
    Pi(Binder, Arc<Expr>),
    /// Elaboration metavariable; never present in a finished term.
    Meta(u32),
}

impl Expr {
    pub fn bvar(i: u32) -> Expr {
        Expr::BVar(i)
    }

    pub fn constant(name: &str) -> Expr {
        Expr::Const(Arc::from(name))
    }

    pub fn prop() -> Expr {
        Expr::Sort(Level::Prop)
    }

    pub fn ty() -> Expr {
        Expr::Sort(Level::Type)
    }

    pub fn fvar(name: &str, ty: Expr) -> Expr {
        Expr::FVar { id: FVarId::fresh(), name: Arc::from(name), ty: Arc::new(ty) }
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn lam(name: &str, info: BinderInfo, ty: Expr, body: Expr) -> Expr {
        Expr::Lam(Binder { name: Arc::from(name), info, ty: Arc::new(ty) }, Arc::new(body))
    }

    pub fn pi(name: &str, info: BinderInfo, ty: Expr, body: Expr) -> Expr {
        Expr::Pi(Binder { name: Arc::from(name), info, ty: Arc::new(ty) }, Arc::new(body))
    }

    /// Non-dependent explicit Pi, i.e. `a → b` (b must not mention the binder).
    pub fn arrow(a: Expr, b: Expr) -> Expr {
        Expr::pi(ARROW_BINDER, BinderInfo::Explicit, a, lift(&b, 1, 0))
    }

    pub fn is_const(&self, name: &str) -> bool {
        matches!(self, Expr::Const(n) if &**n == name)
    }

    pub fn is_sort(&self) -> bool {
        matches!(self, Expr::Sort(_))
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Expr::App(f, a) = cur {
            args.push(&**a);
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// `Some(args)` when `self` is the constant `name` applied to exactly `n` arguments.
    pub fn const_app(&self, name: &str, n: usize) -> Option<Vec<&Expr>> {
        let (head, args) = self.spine();
        (head.is_const(name) && args.len() == n).then_some(args)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::App(f, a) => 1 + f.size() + a.size(),
            Expr::Lam(b, body) | Expr::Pi(b, body) => 1 + b.ty.size() + body.size(),
            Expr::FVar { .. } | Expr::BVar(_) | Expr::Const(_) | Expr::Sort(_) | Expr::Meta(_) => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::App(f, a) => 1 + f.depth().max(a.depth()),
            Expr::Lam(b, body) | Expr::Pi(b, body) => 1 + b.ty.depth().max(body.depth()),
            _ => 0,
        }
    }

    pub fn has_meta(&self) -> bool {
        match self {
            Expr::Meta(_) => true,
            Expr::App(f, a) => f.has_meta() || a.has_meta(),
            Expr::Lam(b, body) | Expr::Pi(b, body) => b.ty.has_meta() || body.has_meta(),
            _ => false,
        }
    }

    pub fn count_const(&self, name: &str) -> usize {
        match self {
            Expr::Const(n) => usize::from(&**n == name),
            Expr::App(f, a) => f.count_const(name) + a.count_const(name),
            Expr::Lam(b, body) | Expr::Pi(b, body) => b.ty.count_const(name) + body.count_const(name),
            _ => 0,
        }
    }

    /// Constant names in pre-order (head before arguments, binder type before body).
    pub fn constants_preorder(&self, out: &mut Vec<Arc<str>>) {
        match self {
            Expr::Const(n) => out.push(n.clone()),
            Expr::App(f, a) => {
                f.constants_preorder(out);
                a.constants_preorder(out);
            }
            Expr::Lam(b, body) | Expr::Pi(b, body) => {
                b.ty.constants_preorder(out);
                body.constants_preorder(out);
            }
            _ => {}
        }
    }

    pub fn fvars(&self, out: &mut HashSet<FVarId>) {
        match self {
            Expr::FVar { id, .. } => {
                out.insert(*id);
            }
            Expr::App(f, a) => {
                f.fvars(out);
                a.fvars(out);
            }
            Expr::Lam(b, body) | Expr::Pi(b, body) => {
                b.ty.fvars(out);
                body.fvars(out);
            }
            _ => {}
        }
    }
}

/// Display name given to binders introduced by `→`.
pub const ARROW_BINDER: &str = "ᾰ";

/// Does `e` contain a loose bound variable with index `i` (relative to `e`'s root)?
pub fn has_loose_bvar(e: &Expr, i: u32) -> bool {
    match e {
        Expr::BVar(j) => *j == i,
        Expr::App(f, a) => has_loose_bvar(f, i) || has_loose_bvar(a, i),
        Expr::Lam(b, body) | Expr::Pi(b, body) => has_loose_bvar(&b.ty, i) || has_loose_bvar(body, i + 1),
        _ => false,
    }
}

/// Smallest `k` such that every loose bound variable of `e` is `< k`.
pub fn loose_bvar_range(e: &Expr) -> u32 {
    match e {
        Expr::BVar(j) => j + 1,
        Expr::App(f, a) => loose_bvar_range(f).max(loose_bvar_range(a)),
        Expr::Lam(b, body) | Expr::Pi(b, body) => {
            loose_bvar_range(&b.ty).max(loose_bvar_range(body).saturating_sub(1))
        }
        _ => 0,
    }
}

/// Shift loose bound variables `>= cutoff` up by `amount`.
pub fn lift(e: &Expr, amount: u32, cutoff: u32) -> Expr {
    if amount == 0 || loose_bvar_range(e) <= cutoff {
        return e.clone();
    }
    map_bvars(e, cutoff, &|i, depth| {
        if i >= depth {
            Expr::BVar(i + amount)
        } else {
            Expr::BVar(i)
        }
    })
}

/// Shift loose bound variables `>= cutoff` down by `amount`. Fails if a
/// variable in `[cutoff, cutoff + amount)` occurs.
pub fn lower(e: &Expr, amount: u32, cutoff: u32) -> Option<Expr> {
    fn go(e: &Expr, amount: u32, depth: u32) -> Option<Expr> {
        Some(match e {
            Expr::BVar(i) if *i >= depth + amount => Expr::BVar(i - amount),
            Expr::BVar(i) if *i >= depth => return None,
            Expr::App(f, a) => Expr::App(Arc::new(go(f, amount, depth)?), Arc::new(go(a, amount, depth)?)),
            Expr::Lam(b, body) => Expr::Lam(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, amount, depth)?) },
                Arc::new(go(body, amount, depth + 1)?),
            ),
            Expr::Pi(b, body) => Expr::Pi(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, amount, depth)?) },
                Arc::new(go(body, amount, depth + 1)?),
            ),
            _ => e.clone(),
        })
    }
    if amount == 0 || loose_bvar_range(e) <= cutoff {
        return Some(e.clone());
    }
    go(e, amount, cutoff)
}

fn map_bvars(e: &Expr, depth: u32, f: &dyn Fn(u32, u32) -> Expr) -> Expr {
    match e {
        Expr::BVar(i) => f(*i, depth),
        Expr::App(g, a) => Expr::App(Arc::new(map_bvars(g, depth, f)), Arc::new(map_bvars(a, depth, f))),
        Expr::Lam(b, body) => Expr::Lam(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(map_bvars(&b.ty, depth, f)) },
            Arc::new(map_bvars(body, depth + 1, f)),
        ),
        Expr::Pi(b, body) => Expr::Pi(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(map_bvars(&b.ty, depth, f)) },
            Arc::new(map_bvars(body, depth + 1, f)),
        ),
        _ => e.clone(),
    }
}

/// Substitute `value` for bound variable 0 of `body` (the body of a binder).
pub fn instantiate(body: &Expr, value: &Expr) -> Expr {
    if loose_bvar_range(body) == 0 {
        return body.clone();
    }
    map_bvars(body, 0, &|i, depth| {
        if i == depth {
            lift(value, depth, 0)
        } else if i > depth {
            Expr::BVar(i - 1)
        } else {
            Expr::BVar(i)
        }
    })
}

/// Replace the local constant `id` by bound variable 0, producing a binder body.
pub fn abstract_fvar(e: &Expr, id: FVarId) -> Expr {
    fn go(e: &Expr, id: FVarId, depth: u32) -> Expr {
        match e {
            Expr::FVar { id: other, .. } if *other == id => Expr::BVar(depth),
            Expr::BVar(i) if *i >= depth => Expr::BVar(i + 1),
            Expr::App(f, a) => Expr::App(Arc::new(go(f, id, depth)), Arc::new(go(a, id, depth))),
            Expr::Lam(b, body) => Expr::Lam(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, id, depth)) },
                Arc::new(go(body, id, depth + 1)),
            ),
            Expr::Pi(b, body) => Expr::Pi(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, id, depth)) },
                Arc::new(go(body, id, depth + 1)),
            ),
            _ => e.clone(),
        }
    }
    go(e, id, 0)
}

/// Replace every occurrence of the local constants in `ids` (outermost first)
/// by bound variables, as if the term were closed under binders for them.
pub fn abstract_fvars(e: &Expr, ids: &[FVarId]) -> Expr {
    fn go(e: &Expr, ids: &[FVarId], depth: u32) -> Expr {
        match e {
            Expr::FVar { id, .. } => match ids.iter().rposition(|x| x == id) {
                Some(pos) => Expr::BVar(depth + (ids.len() - 1 - pos) as u32),
                None => e.clone(),
            },
            Expr::BVar(i) if *i >= depth => Expr::BVar(i + ids.len() as u32),
            Expr::App(f, a) => Expr::App(Arc::new(go(f, ids, depth)), Arc::new(go(a, ids, depth))),
            Expr::Lam(b, body) => Expr::Lam(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, ids, depth)) },
                Arc::new(go(body, ids, depth + 1)),
            ),
            Expr::Pi(b, body) => Expr::Pi(
                Binder { name: b.name.clone(), info: b.info, ty: Arc::new(go(&b.ty, ids, depth)) },
                Arc::new(go(body, ids, depth + 1)),
            ),
            _ => e.clone(),
        }
    }
    if ids.is_empty() {
        return e.clone();
    }
    go(e, ids, 0)
}

/// Instantiate loose bound variables with `values` (outermost first), the
/// inverse of [`abstract_fvars`].
pub fn instantiate_many(e: &Expr, values: &[Expr]) -> Expr {
    let n = values.len() as u32;
    if n == 0 || loose_bvar_range(e) == 0 {
        return e.clone();
    }
    map_bvars(e, 0, &|i, depth| {
        if i < depth {
            Expr::BVar(i)
        } else if i - depth < n {
            lift(&values[(n - 1 - (i - depth)) as usize], depth, 0)
        } else {
            Expr::BVar(i - n)
        }
    })
}

/// Replace metavariables through `lookup`.
pub fn replace_metas(e: &Expr, lookup: &dyn Fn(u32) -> Option<Expr>) -> Expr {
    if !e.has_meta() {
        return e.clone();
    }
    match e {
        Expr::Meta(m) => match lookup(*m) {
            Some(v) => replace_metas(&v, lookup),
            None => e.clone(),
        },
        Expr::App(f, a) => Expr::App(Arc::new(replace_metas(f, lookup)), Arc::new(replace_metas(a, lookup))),
        Expr::Lam(b, body) => Expr::Lam(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(replace_metas(&b.ty, lookup)) },
            Arc::new(replace_metas(body, lookup)),
        ),
        Expr::Pi(b, body) => Expr::Pi(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(replace_metas(&b.ty, lookup)) },
            Arc::new(replace_metas(body, lookup)),
        ),
        _ => e.clone(),
    }
}

/// Structural equality ignoring binder names and binder info.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    match (a, b) {
        (Expr::App(f1, a1), Expr::App(f2, a2)) => alpha_eq(f1, f2) && alpha_eq(a1, a2),
        (Expr::Lam(b1, x1), Expr::Lam(b2, x2)) | (Expr::Pi(b1, x1), Expr::Pi(b2, x2)) => {
            alpha_eq(&b1.ty, &b2.ty) && alpha_eq(x1, x2)
        }
        (Expr::FVar { id: i1, .. }, Expr::FVar { id: i2, .. }) => i1 == i2,
        _ => a == b,
    }
}

/// Full beta normalisation.
pub fn beta_normalize(e: &Expr) -> Expr {
    match e {
        Expr::App(f, a) => {
            let f = beta_normalize(f);
            let a = beta_normalize(a);
            if let Expr::Lam(_, body) = &f {
                beta_normalize(&instantiate(body, &a))
            } else {
                Expr::App(Arc::new(f), Arc::new(a))
            }
        }
        Expr::Lam(b, body) => Expr::Lam(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(beta_normalize(&b.ty)) },
            Arc::new(beta_normalize(body)),
        ),
        Expr::Pi(b, body) => Expr::Pi(
            Binder { name: b.name.clone(), info: b.info, ty: Arc::new(beta_normalize(&b.ty)) },
            Arc::new(beta_normalize(body)),
        ),
        _ => e.clone(),
    }
}

/// Weak-head beta reduction.
pub fn whnf_beta(e: &Expr) -> Expr {
    let (head, args) = e.spine();
    if let Expr::Lam(_, body) = head {
        if let Some((first, rest)) = args.split_first() {
            let reduced = instantiate(body, first);
            return whnf_beta(&Expr::apps(reduced, rest.iter().map(|a| (*a).clone())));
        }
    }
    e.clone()
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Prop => f.write_str("Prop"),
            Level::Type => f.write_str("Type"),
        }
    }
}


/// One step from a node to one of its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStep {
    Fn,
    Arg,
    BinderType,
    Body,
}

pub fn format_path(path: &[PathStep]) -> String {
    if path.is_empty() {
        return "root".to_string();
    }
    let parts: Vec<&str> = path
        .iter()
        .map(|s| match s {
            PathStep::Fn => "fn",
            PathStep::Arg => "arg",
            PathStep::BinderType => "type",
            PathStep::Body => "body",
        })
        .collect();
    parts.join(".")
}
