use std::collections::HashSet;
use std::sync::Arc;

use super::env::Environment;
use super::expr::{has_loose_bvar, instantiate, BinderInfo, Expr, FVarId, Level, HOLE};
use super::traverse::SubtermContext;
use super::typing::{open_context, TypeChecker};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PrintMode {
    /// Implicit and instance arguments hidden.
    #[default]
    Pretty,
    /// Every argument shown; heads with implicit binders get `@`.
    Verbose,
}

const PREC_BINDER: u32 = 0;
const PREC_IFF: u32 = 20;
const PREC_ARROW: u32 = 25;
const PREC_OR: u32 = 30;
const PREC_AND: u32 = 35;
const PREC_NOT: u32 = 40;
const PREC_EQ: u32 = 50;
const PREC_APP: u32 = 1000;
const PREC_ATOM: u32 = 1024;

/// Print a term with no loose bound variables.
pub fn print_expr(e: &Expr, env: &Environment, mode: PrintMode, max_depth: Option<usize>) -> String {
    Printer { env, mode, max_depth }.pp(e, 0, PREC_BINDER)
}

/// Print a term whose loose bound variables refer to `ctx`.
pub fn print_in(e: &Expr, env: &Environment, ctx: &SubtermContext, mode: PrintMode, max_depth: Option<usize>) -> String {
    let locals = open_context(ctx);
    let opened = super::expr::instantiate_many(e, &locals);
    print_expr(&opened, env, mode, max_depth)
}

/// Pretty print without depth limit.
pub fn print_closed(env: &Environment, e: &Expr) -> String {
    print_expr(e, env, PrintMode::Pretty, None)
}

struct Printer<'a> {
    env: &'a Environment,
    mode: PrintMode,
    max_depth: Option<usize>,
}

fn paren(s: String, own: u32, required: u32) -> String {
    if own < required {
        format!("({s})")
    } else {
        s
    }
}

/// Names a printed body already uses: free locals and constants.
fn used_names(e: &Expr, out: &mut HashSet<Arc<str>>) {
    match e {
        Expr::FVar { name, .. } | Expr::Const(name) => {
            out.insert(name.clone());
        }
        Expr::App(f, a) => {
            used_names(f, out);
            used_names(a, out);
        }
        Expr::Lam(b, body) | Expr::Pi(b, body) => {
            used_names(&b.ty, out);
            used_names(body, out);
        }
        _ => {}
    }
}

fn fresh_name(base: &Arc<str>, body: &Expr) -> Arc<str> {
    if &**base == "_" {
        return base.clone();
    }
    let mut used = HashSet::new();
    used_names(body, &mut used);
    if !used.contains(base) {
        return base.clone();
    }
    (1..)
        .map(|i| Arc::<str>::from(format!("{base}_{i}")))
        .find(|n| !used.contains(n))
        .expect("unbounded search")
}

struct Opened {
    name: Arc<str>,
    info: BinderInfo,
    ty: String,
}

impl Printer<'_> {
    fn too_deep(&self, depth: usize) -> bool {
        self.max_depth.is_some_and(|d| depth > d)
    }

    fn pp(&self, e: &Expr, depth: usize, prec: u32) -> String {
        if self.too_deep(depth) {
            return "…".to_string();
        }
        match e {
            Expr::BVar(i) => format!("#{i}"),
            Expr::FVar { name, .. } | Expr::Const(name) => name.to_string(),
            Expr::Sort(Level::Prop) => "Prop".to_string(),
            Expr::Sort(Level::Type) => "Type".to_string(),
            Expr::Meta(m) => format!("?m_{m}"),
            Expr::App(..) => self.app(e, depth, prec),
            Expr::Lam(..) => paren(self.binders(e, depth, "λ"), PREC_BINDER, prec),
            Expr::Pi(b, body) => {
                if b.info.is_explicit() && !has_loose_bvar(body, 0) {
                    let lhs = self.pp(&b.ty, depth + 1, PREC_ARROW + 1);
                    let rhs = self.pp(&instantiate(body, &Expr::Sort(Level::Prop)), depth + 1, PREC_ARROW);
                    paren(format!("{lhs} → {rhs}"), PREC_ARROW, prec)
                } else {
                    let q = if self.is_type_valued(e) { "Π" } else { "∀" };
                    paren(self.binders(e, depth, q), PREC_BINDER, prec)
                }
            }
        }
    }

    fn is_type_valued(&self, pi: &Expr) -> bool {
        TypeChecker::full(self.env).sort_of(pi) == Some(Level::Type)
    }

    /// Binder infos of the leading Pi telescope of a head's type.
    fn telescope(&self, head: &Expr) -> Vec<BinderInfo> {
        let ty = match head {
            Expr::Const(name) => match self.env.get(name) {
                Some(d) => &d.ty,
                None => return Vec::new(),
            },
            Expr::FVar { ty, .. } => &**ty,
            _ => return Vec::new(),
        };
        let mut infos = Vec::new();
        let mut t = ty;
        while let Expr::Pi(b, body) = t {
            infos.push(b.info);
            t = body;
        }
        infos
    }

    fn app(&self, e: &Expr, depth: usize, prec: u32) -> String {
        let (head, args) = e.spine();
        let n = args.len();
        let arg_depth = |i: usize| depth + n - i;
        if let Expr::Const(name) = head {
            let infix = match (&**name, n) {
                ("and", 2) => Some((" ∧ ", PREC_AND, PREC_AND + 1, PREC_AND)),
                ("or", 2) => Some((" ∨ ", PREC_OR, PREC_OR + 1, PREC_OR)),
                ("iff", 2) => Some((" ↔ ", PREC_IFF, PREC_IFF + 1, PREC_IFF + 1)),
                _ => None,
            };
            if let Some((op, own, lp, rp)) = infix {
                let lhs = self.pp(args[0], arg_depth(0), lp);
                let rhs = self.pp(args[1], arg_depth(1), rp);
                return paren(format!("{lhs}{op}{rhs}"), own, prec);
            }
            if &**name == "not" && n == 1 {
                return paren(format!("¬{}", self.pp(args[0], arg_depth(0), PREC_NOT)), PREC_NOT, prec);
            }
            if &**name == "eq" && n == 3 && self.mode == PrintMode::Pretty && args[0].count_const(HOLE) == 0 {
                let lhs = self.pp(args[1], arg_depth(1), PREC_EQ + 1);
                let rhs = self.pp(args[2], arg_depth(2), PREC_EQ + 1);
                return paren(format!("{lhs} = {rhs}"), PREC_EQ, prec);
            }
        }
        let infos = self.telescope(head);
        let info_at = |i: usize| infos.get(i).copied().unwrap_or(BinderInfo::Explicit);
        let has_implicit = infos.iter().any(|i| !i.is_explicit());
        let (show_all, at) = match self.mode {
            PrintMode::Verbose => (true, has_implicit),
            PrintMode::Pretty => {
                let hole_hidden = (0..n).any(|i| !info_at(i).is_explicit() && args[i].count_const(HOLE) > 0);
                (hole_hidden, hole_hidden)
            }
        };
        let mut out = self.pp(head, depth + n, PREC_ATOM);
        if at && matches!(head, Expr::Const(_) | Expr::FVar { .. }) && !self.too_deep(depth + n) {
            out.insert(0, '@');
        }
        let mut shown = 0;
        for (i, a) in args.iter().enumerate() {
            if show_all || info_at(i).is_explicit() {
                out.push(' ');
                out.push_str(&self.pp(a, arg_depth(i), PREC_ATOM));
                shown += 1;
            }
        }
        if shown == 0 {
            return out;
        }
        paren(out, PREC_APP, prec)
    }

    /// Print a chain of binders of the same kind starting at `e`.
    fn binders(&self, e: &Expr, depth: usize, symbol: &str) -> String {
        let is_lam = matches!(e, Expr::Lam(..));
        let mut opened: Vec<Opened> = Vec::new();
        let mut cur = e.clone();
        let mut d = depth;
        loop {
            let (b, body) = match &cur {
                Expr::Lam(b, body) if is_lam => (b, body),
                Expr::Pi(b, body) if !is_lam && !(b.info.is_explicit() && !has_loose_bvar(body, 0)) => (b, body),
                _ => break,
            };
            if !opened.is_empty() && self.too_deep(d) {
                break;
            }
            let name = fresh_name(&b.name, body);
            let ty = self.pp(&b.ty, d + 1, PREC_BINDER);
            let x = Expr::FVar { id: FVarId::fresh(), name: name.clone(), ty: b.ty.clone() };
            let next = instantiate(body, &x);
            opened.push(Opened { name, info: b.info, ty });
            cur = next;
            d += 1;
        }
        let mut header = String::new();
        let mut i = 0;
        while i < opened.len() {
            let mut j = i + 1;
            while j < opened.len()
                && opened[j].info == opened[i].info
                && opened[j].ty == opened[i].ty
                && opened[i].info != BinderInfo::Instance
            {
                j += 1;
            }
            let names: Vec<&str> = opened[i..j].iter().map(|o| &*o.name).collect();
            let (l, r) = opened[i].info.brackets();
            if !header.is_empty() {
                header.push(' ');
            }
            header.push_str(&format!("{l}{} : {}{r}", names.join(" "), opened[i].ty));
            i = j;
        }
        let body = self.pp(&cur, d, PREC_BINDER);
        format!("{symbol} {header}, {body}")
    }
}
