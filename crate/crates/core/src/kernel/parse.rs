//! Surface syntax.
//!
//! ```text
//! expr    := iff
//! iff     := arrow ('↔' arrow)*
//! arrow   := or ('→' arrow)?
//! or      := and ('∨' or)?
//! and     := not ('∧' and)?
//! not     := '¬' not | eq
//! eq      := app ('=' app)?
//! app     := '@'? atom atom*
//! atom    := ident | 'Prop' | 'Type' | '_' | '…' | '(' expr ')' | binder
//! binder  := ('λ' | 'fun' | '∀' | 'Π') group+ ',' expr
//! group   := '(' ident+ ':' expr ')' | '{' ident+ ':' expr '}'
//!          | '[' (ident ':')? expr ']' | ident+ ':' expr
//! ```
//!
//! [`parse_expr`] elaborates: implicit and instance arguments are inserted as
//! metavariables and solved by first-order unification, instance arguments
//! fall back to a one-level search over the environment. [`parse_explicit`]
//! reads fully explicit (verbose) text without elaboration and accepts the
//! `PREDICT` hole and the `…` elision marker.

use std::collections::HashSet;
use std::sync::Arc;

use super::env::Environment;
use super::error::KernelError;
use super::expr::{
    abstract_fvar, abstract_fvars, alpha_eq, instantiate, replace_metas, Binder, BinderInfo, Expr, FVarId, Level,
    HOLE,
};
use super::print::print_closed;
use super::traverse::SubtermContext;
use super::typing::{fvar_id, open_context, whnf};

/// Constant produced for the `…` marker by [`parse_explicit`].
pub const ELIDED: &str = "…";

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Lambda,
    Pi,
    Forall,
    Arrow,
    Not,
    And,
    Or,
    Iff,
    Eq,
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Underscore,
    Ellipsis,
    Eof,
}

fn is_ident_start(c: char) -> bool {
    (c.is_alphabetic() || c == '_') && c != 'λ' && c != 'Π'
}

fn is_ident_char(c: char) -> bool {
    (c.is_alphanumeric() || c == '_' || c == '\'' || c == '!' || c == '?' || is_subscript(c)) && c != 'λ' && c != 'Π'
}

fn is_subscript(c: char) -> bool {
    ('\u{2080}'..='\u{209C}').contains(&c)
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, KernelError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            'λ' => Some(Tok::Lambda),
            'Π' => Some(Tok::Pi),
            '∀' => Some(Tok::Forall),
            '→' => Some(Tok::Arrow),
            '¬' => Some(Tok::Not),
            '∧' => Some(Tok::And),
            '∨' => Some(Tok::Or),
            '↔' => Some(Tok::Iff),
            '=' => Some(Tok::Eq),
            '@' => Some(Tok::At),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '…' => Some(Tok::Ellipsis),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, off));
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1).map(|p| p.1) == Some('>') {
            out.push((Tok::Arrow, off));
            i += 2;
            continue;
        }
        if is_ident_start(c) {
            let mut j = i + 1;
            loop {
                match chars.get(j) {
                    Some(&(_, d)) if is_ident_char(d) => j += 1,
                    Some(&(_, '.')) if chars.get(j + 1).is_some_and(|&(_, d)| is_ident_start(d)) => j += 1,
                    _ => break,
                }
            }
            let end = chars.get(j).map_or(src.len(), |p| p.0);
            let word = &src[off..end];
            let tok = match word {
                "_" => Tok::Underscore,
                "fun" => Tok::Lambda,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((tok, off));
            i = j;
            continue;
        }
        return Err(KernelError::Parse { offset: off, message: format!("unexpected character `{c}`") });
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BinderKind {
    Lam,
    Pi,
}

/// Parsed but not yet resolved syntax.
#[derive(Clone, Debug)]
pub(crate) enum Syn {
    Ident { name: String, explicit: bool, off: usize },
    /// Head produced by notation; resolves in the environment only.
    Notation { name: &'static str, off: usize },
    Sort(Level),
    Hole(usize),
    Elided(usize),
    App { head: Box<Syn>, args: Vec<Syn>, off: usize },
    Binder { kind: BinderKind, name: String, info: BinderInfo, ty: Box<Syn>, body: Box<Syn>, off: usize },
    Arrow(Box<Syn>, Box<Syn>),
}

impl Syn {
    fn offset(&self) -> usize {
        match self {
            Syn::Ident { off, .. }
            | Syn::Notation { off, .. }
            | Syn::Hole(off)
            | Syn::Elided(off)
            | Syn::App { off, .. }
            | Syn::Binder { off, .. } => *off,
            Syn::Sort(_) => 0,
            Syn::Arrow(a, _) => a.offset(),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn off(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, KernelError> {
        Err(KernelError::Parse { offset: self.off(), message: message.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), KernelError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn notation(name: &'static str, off: usize, args: Vec<Syn>) -> Syn {
        Syn::App { head: Box::new(Syn::Notation { name, off }), args, off }
    }

    fn expr(&mut self) -> Result<Syn, KernelError> {
        let mut lhs = self.arrow()?;
        while *self.peek() == Tok::Iff {
            let off = self.off();
            self.bump();
            let rhs = self.arrow()?;
            lhs = Self::notation("iff", off, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn arrow(&mut self) -> Result<Syn, KernelError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.arrow()?;
            return Ok(Syn::Arrow(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Syn, KernelError> {
        let lhs = self.and()?;
        if *self.peek() == Tok::Or {
            let off = self.off();
            self.bump();
            let rhs = self.or()?;
            return Ok(Self::notation("or", off, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Syn, KernelError> {
        let lhs = self.not()?;
        if *self.peek() == Tok::And {
            let off = self.off();
            self.bump();
            let rhs = self.and()?;
            return Ok(Self::notation("and", off, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Syn, KernelError> {
        if *self.peek() == Tok::Not {
            let off = self.off();
            self.bump();
            let arg = self.not()?;
            return Ok(Self::notation("not", off, vec![arg]));
        }
        self.eq()
    }

    fn eq(&mut self) -> Result<Syn, KernelError> {
        let lhs = self.app()?;
        if *self.peek() == Tok::Eq {
            let off = self.off();
            self.bump();
            let rhs = self.app()?;
            return Ok(Self::notation("eq", off, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::LParen | Tok::Underscore | Tok::Ellipsis)
    }

    fn app(&mut self) -> Result<Syn, KernelError> {
        let off = self.off();
        let head = if *self.peek() == Tok::At {
            self.bump();
            let name_off = self.off();
            match self.bump() {
                Tok::Ident(name) => Syn::Ident { name, explicit: true, off: name_off },
                _ => return Err(KernelError::Parse { offset: name_off, message: "expected identifier after `@`".into() }),
            }
        } else {
            self.atom()?
        };
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom()?);
        }
        if args.is_empty() && !matches!(head, Syn::Ident { explicit: true, .. }) {
            return Ok(head);
        }
        Ok(Syn::App { head: Box::new(head), args, off })
    }

    fn atom(&mut self) -> Result<Syn, KernelError> {
        let off = self.off();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(match name.as_str() {
                    "Prop" => Syn::Sort(Level::Prop),
                    "Type" => Syn::Sort(Level::Type),
                    _ => Syn::Ident { name, explicit: false, off },
                })
            }
            Tok::Underscore => {
                self.bump();
                Ok(Syn::Hole(off))
            }
            Tok::Ellipsis => {
                self.bump();
                Ok(Syn::Elided(off))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Lambda | Tok::Pi | Tok::Forall => self.binder(),
            Tok::Eof => self.err("unexpected end of input"),
            t => self.err(format!("unexpected token {t:?}")),
        }
    }

    fn names(&mut self) -> Result<Vec<(String, usize)>, KernelError> {
        let mut names = Vec::new();
        loop {
            let off = self.off();
            match self.peek().clone() {
                Tok::Ident(n) => names.push((n, off)),
                Tok::Underscore => names.push(("_".to_string(), off)),
                _ => break,
            }
            self.bump();
        }
        if names.is_empty() {
            return self.err("expected binder name");
        }
        Ok(names)
    }

    fn binder(&mut self) -> Result<Syn, KernelError> {
        let kind = match self.bump() {
            Tok::Lambda => BinderKind::Lam,
            _ => BinderKind::Pi,
        };
        let mut groups: Vec<(String, BinderInfo, Syn, usize)> = Vec::new();
        loop {
            match self.peek() {
                Tok::Comma => break,
                Tok::LParen | Tok::LBrace => {
                    let (info, close) = if self.bump() == Tok::LParen {
                        (BinderInfo::Explicit, Tok::RParen)
                    } else {
                        (BinderInfo::Implicit, Tok::RBrace)
                    };
                    let names = self.names()?;
                    self.expect(Tok::Colon, "`:`")?;
                    let ty = self.expr()?;
                    self.expect(close, "closing bracket")?;
                    groups.extend(names.into_iter().map(|(n, off)| (n, info, ty.clone(), off)));
                }
                Tok::LBracket => {
                    self.bump();
                    let off = self.off();
                    let named = matches!(self.peek(), Tok::Ident(_))
                        && self.toks.get(self.pos + 1).is_some_and(|t| t.0 == Tok::Colon);
                    let name = if named {
                        let Tok::Ident(n) = self.bump() else { unreachable!() };
                        self.bump();
                        n
                    } else {
                        "_inst".to_string()
                    };
                    let ty = self.expr()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    groups.push((name, BinderInfo::Instance, ty, off));
                }
                Tok::Ident(_) | Tok::Underscore if groups.is_empty() => {
                    let names = self.names()?;
                    self.expect(Tok::Colon, "`:` (binder types are required)")?;
                    let ty = self.expr()?;
                    groups.extend(names.into_iter().map(|(n, off)| (n, BinderInfo::Explicit, ty.clone(), off)));
                    break;
                }
                _ => return self.err("expected binder group or `,`"),
            }
        }
        if groups.is_empty() {
            return self.err("binder without variables");
        }
        self.expect(Tok::Comma, "`,`")?;
        let mut body = self.expr()?;
        for (name, info, ty, off) in groups.into_iter().rev() {
            body = Syn::Binder { kind, name, info, ty: Box::new(ty), body: Box::new(body), off };
        }
        Ok(body)
    }
}

pub(crate) fn parse_syntax(src: &str) -> Result<Syn, KernelError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// Options for [`parse_expr_with`].
#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Type the term is elaborated against.
    pub expected: Option<Expr>,
    /// Only declarations with `order_index < cutoff` resolve.
    pub cutoff: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { expected: None, cutoff: usize::MAX }
    }
}

impl ParseOptions {
    pub fn typed(expected: Expr) -> Self {
        Self { expected: Some(expected), ..Self::default() }
    }

    pub fn cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }
}

/// Parse and elaborate a closed term.
pub fn parse_expr(src: &str, env: &Environment) -> Result<Expr, KernelError> {
    parse_expr_with(src, env, &ParseOptions::default())
}

pub fn parse_expr_with(src: &str, env: &Environment, opts: &ParseOptions) -> Result<Expr, KernelError> {
    parse_with_locals(src, env, &[], opts)
}

/// Parse and elaborate a term whose free names may refer to the bound
/// variables of `ctx`; the result uses de Bruijn indices for them.
pub fn parse_expr_in(src: &str, env: &Environment, ctx: &SubtermContext) -> Result<Expr, KernelError> {
    let locals = open_context(ctx);
    let ids: Vec<FVarId> = locals.iter().map(fvar_id).collect();
    let e = parse_with_locals(src, env, &locals, &ParseOptions::default())?;
    Ok(abstract_fvars(&e, &ids))
}

/// Parse and elaborate a term in a scope of local constants (`FVar`s,
/// outermost first). The result mentions the locals directly.
pub fn parse_with_locals(
    src: &str,
    env: &Environment,
    locals: &[Expr],
    opts: &ParseOptions,
) -> Result<Expr, KernelError> {
    let syn = parse_syntax(src)?;
    let mut el = Elaborator::new(env, opts.cutoff, locals);
    let (e, _) = el.elab(&syn, opts.expected.as_ref())?;
    el.finish(&e)
}

/// Parse fully explicit text without elaboration. Names resolve to the
/// bound variables of `ctx`, then to environment constants. `PREDICT` and
/// `…` are accepted as constants.
pub fn parse_explicit(src: &str, env: &Environment, ctx: &SubtermContext) -> Result<Expr, KernelError> {
    let syn = parse_syntax(src)?;
    let mut names: Vec<String> = ctx.bs.iter().map(|b| b.name.to_string()).collect();
    raw(&syn, env, &mut names)
}

fn raw(syn: &Syn, env: &Environment, names: &mut Vec<String>) -> Result<Expr, KernelError> {
    Ok(match syn {
        Syn::Ident { name, off, .. } => match names.iter().rposition(|n| n == name) {
            Some(pos) => Expr::BVar((names.len() - 1 - pos) as u32),
            None if name == HOLE || env.get(name).is_some() => Expr::constant(name),
            None => return Err(KernelError::UnknownConstant { name: name.clone(), offset: *off }),
        },
        Syn::Notation { name: "eq", off } => {
            return Err(KernelError::Parse { offset: *off, message: "`=` needs elaboration; use `@eq`".into() })
        }
        Syn::Notation { name, .. } => Expr::constant(name),
        Syn::Sort(l) => Expr::Sort(*l),
        Syn::Hole(off) => return Err(KernelError::Parse { offset: *off, message: "`_` needs elaboration".into() }),
        Syn::Elided(_) => Expr::constant(ELIDED),
        Syn::App { head, args, .. } => {
            let mut e = raw(head, env, names)?;
            for a in args {
                e = Expr::app(e, raw(a, env, names)?);
            }
            e
        }
        Syn::Binder { kind, name, info, ty, body, .. } => {
            let ty = raw(ty, env, names)?;
            names.push(name.clone());
            let body = raw(body, env, names);
            names.pop();
            let binder = Binder { name: Arc::from(name.as_str()), info: *info, ty: Arc::new(ty) };
            match kind {
                BinderKind::Lam => Expr::Lam(binder, Arc::new(body?)),
                BinderKind::Pi => Expr::Pi(binder, Arc::new(body?)),
            }
        }
        Syn::Arrow(a, b) => Expr::arrow(raw(a, env, names)?, raw(b, env, names)?),
    })
}

#[derive(Clone, Debug)]
struct MetaInfo {
    ty: Expr,
    value: Option<Expr>,
    /// Number of scope locals the solution may mention.
    scope_len: usize,
    binder: String,
    off: usize,
    instance: bool,
}

/// Elaboration state: a scope of local constants plus metavariables.
pub(crate) struct Elaborator<'a> {
    env: &'a Environment,
    cutoff: usize,
    scope: Vec<Expr>,
    metas: Vec<MetaInfo>,
}

impl<'a> Elaborator<'a> {
    pub(crate) fn new(env: &'a Environment, cutoff: usize, locals: &[Expr]) -> Self {
        Self { env, cutoff, scope: locals.to_vec(), metas: Vec::new() }
    }

    pub(crate) fn new_meta(&mut self, ty: Expr, binder: &str, off: usize, instance: bool) -> Expr {
        let id = self.metas.len() as u32;
        self.metas.push(MetaInfo {
            ty,
            value: None,
            scope_len: self.scope.len(),
            binder: binder.to_string(),
            off,
            instance,
        });
        Expr::Meta(id)
    }

    pub(crate) fn inst(&self, e: &Expr) -> Expr {
        replace_metas(e, &|m| self.metas.get(m as usize).and_then(|i| i.value.clone()))
    }

    fn type_error(&self, expected: &Expr, actual: &Expr, off: usize) -> KernelError {
        KernelError::TypeError {
            expected: print_closed(self.env, &self.inst(expected)),
            actual: print_closed(self.env, &self.inst(actual)),
            path: format!("byte {off}"),
        }
    }

    fn resolve(&self, name: &str, off: usize) -> Result<(Expr, Expr), KernelError> {
        if let Some(local) = self.scope.iter().rev().find(|l| matches!(l, Expr::FVar { name: n, .. } if &**n == name)) {
            let Expr::FVar { ty, .. } = local else { unreachable!() };
            return Ok((local.clone(), (**ty).clone()));
        }
        self.resolve_const(name, off)
    }

    fn resolve_const(&self, name: &str, off: usize) -> Result<(Expr, Expr), KernelError> {
        match self.env.get_before(name, self.cutoff) {
            Some(d) => Ok((Expr::Const(d.name.clone()), d.ty.clone())),
            None => Err(KernelError::UnknownConstant { name: name.to_string(), offset: off }),
        }
    }

    /// Elaborate `syn`, returning the term and its type.
    pub(crate) fn elab(&mut self, syn: &Syn, expected: Option<&Expr>) -> Result<(Expr, Expr), KernelError> {
        match syn {
            Syn::Ident { .. } | Syn::Notation { .. } | Syn::App { .. } => self.elab_app(syn, expected),
            Syn::Sort(l) => {
                let r = (Expr::Sort(*l), Expr::ty());
                self.check_expected(r, expected, 0)
            }
            Syn::Hole(off) => {
                let ty = match expected {
                    Some(t) => t.clone(),
                    None => self.new_meta(Expr::ty(), "_", *off, false),
                };
                let m = self.new_meta(ty.clone(), "_", *off, false);
                Ok((m, ty))
            }
            Syn::Elided(off) => Err(KernelError::Parse { offset: *off, message: "`…` cannot be elaborated".into() }),
            Syn::Arrow(a, b) => {
                let (a, _) = self.elab_type(a)?;
                let (b, level) = self.elab_type(b)?;
                let e = Expr::arrow(a, self.inst(&b));
                self.check_expected((e, Expr::Sort(level)), expected, syn.offset())
            }
            Syn::Binder { kind, name, info, ty, body, off } => {
                let (ty, _) = self.elab_type(ty)?;
                let exp = expected.map(|t| whnf(self.env, &self.inst(t)));
                let exp_pi = match (&exp, kind) {
                    (Some(Expr::Pi(b, body)), BinderKind::Lam) => Some((b.clone(), body.clone())),
                    _ => None,
                };
                if let Some((eb, _)) = &exp_pi {
                    if !self.unify(&ty, &eb.ty) {
                        return Err(self.type_error(&eb.ty, &ty, *off));
                    }
                }
                let binder = Binder { name: Arc::from(name.as_str()), info: *info, ty: Arc::new(self.inst(&ty)) };
                let x = Expr::FVar { id: FVarId::fresh(), name: binder.name.clone(), ty: binder.ty.clone() };
                let id = fvar_id(&x);
                let body_expected = exp_pi.as_ref().map(|(_, b)| instantiate(b, &x));
                self.scope.push(x);
                let res = match kind {
                    BinderKind::Lam => self.elab(body, body_expected.as_ref()).map(|(b, t)| (b, Some(t), None)),
                    BinderKind::Pi => self.elab_type(body).map(|(b, l)| (b, None, Some(l))),
                };
                self.close_scope();
                let (b, bty, level) = res?;
                let b = abstract_fvar(&self.inst(&b), id);
                match kind {
                    BinderKind::Lam => {
                        let bty = abstract_fvar(&self.inst(&bty.expect("lambda body type")), id);
                        let e = Expr::Lam(binder.clone(), Arc::new(b));
                        let t = Expr::Pi(binder, Arc::new(bty));
                        self.check_expected((e, t), expected, *off)
                    }
                    BinderKind::Pi => {
                        let e = Expr::Pi(binder, Arc::new(b));
                        self.check_expected((e, Expr::Sort(level.expect("pi level"))), expected, *off)
                    }
                }
            }
        }
    }

    /// Leave a binder: pending metas may no longer capture its local.
    fn close_scope(&mut self) {
        self.try_instances();
        self.scope.pop();
        let len = self.scope.len();
        for m in &mut self.metas {
            if m.value.is_none() && m.scope_len > len {
                m.scope_len = len;
            }
        }
    }

    fn elab_type(&mut self, syn: &Syn) -> Result<(Expr, Level), KernelError> {
        let (e, t) = self.elab(syn, None)?;
        match whnf(self.env, &self.inst(&t)) {
            Expr::Sort(l) => Ok((e, l)),
            other => Err(KernelError::TypeError {
                expected: "a sort".into(),
                actual: print_closed(self.env, &other),
                path: format!("byte {}", syn.offset()),
            }),
        }
    }

    fn check_expected(
        &mut self,
        (e, t): (Expr, Expr),
        expected: Option<&Expr>,
        off: usize,
    ) -> Result<(Expr, Expr), KernelError> {
        if let Some(exp) = expected {
            if !self.unify(&t, exp) {
                return Err(self.type_error(exp, &t, off));
            }
        }
        Ok((e, t))
    }

    fn elab_app(&mut self, syn: &Syn, expected: Option<&Expr>) -> Result<(Expr, Expr), KernelError> {
        let (head_syn, args, off) = match syn {
            Syn::App { head, args, off } => (&**head, args.as_slice(), *off),
            other => (other, &[][..], other.offset()),
        };
        let (mut f, mut fty, explicit) = match head_syn {
            Syn::Ident { name, explicit, off } => {
                let (e, t) = self.resolve(name, *off)?;
                (e, t, *explicit)
            }
            Syn::Notation { name, off } => {
                let (e, t) = self.resolve_const(name, *off)?;
                (e, t, false)
            }
            other => {
                let (e, t) = self.elab(other, None)?;
                (e, t, false)
            }
        };
        for arg in args {
            loop {
                let w = whnf(self.env, &self.inst(&fty));
                match w {
                    Expr::Pi(b, body) if !b.info.is_explicit() && !explicit => {
                        let m = self.new_meta((*b.ty).clone(), &b.name, off, b.info == BinderInfo::Instance);
                        f = Expr::app(f, m.clone());
                        fty = instantiate(&body, &m);
                    }
                    Expr::Pi(b, body) => {
                        let (a, _) = self.elab(arg, Some(&b.ty))?;
                        f = Expr::app(f, a.clone());
                        fty = instantiate(&body, &a);
                        break;
                    }
                    other => {
                        return Err(KernelError::NotAFunction {
                            ty: print_closed(self.env, &other),
                            path: format!("byte {}", arg.offset()),
                        })
                    }
                }
            }
        }
        if let (Some(exp), false) = (expected, explicit) {
            let exp_w = whnf(self.env, &self.inst(exp));
            let wants_binder = matches!(&exp_w, Expr::Pi(b, _) if !b.info.is_explicit());
            if !wants_binder {
                loop {
                    match whnf(self.env, &self.inst(&fty)) {
                        Expr::Pi(b, body) if !b.info.is_explicit() => {
                            let m = self.new_meta((*b.ty).clone(), &b.name, off, b.info == BinderInfo::Instance);
                            f = Expr::app(f, m.clone());
                            fty = instantiate(&body, &m);
                        }
                        _ => break,
                    }
                }
            }
        }
        let r = self.check_expected((f, fty), expected, off)?;
        self.try_instances();
        Ok(r)
    }

    fn assign(&mut self, m: u32, v: &Expr) -> bool {
        if let Expr::Meta(n) = v {
            if *n == m {
                return true;
            }
        }
        if contains_meta(v, m) {
            return false;
        }
        let mut fvs = HashSet::new();
        v.fvars(&mut fvs);
        let info = &self.metas[m as usize];
        let allowed: HashSet<FVarId> = self.scope[..info.scope_len.min(self.scope.len())].iter().map(fvar_id).collect();
        if !fvs.is_subset(&allowed) {
            return false;
        }
        self.metas[m as usize].value = Some(v.clone());
        true
    }

    /// First-order unification with delta/beta fallback. Leaves no partial
    /// assignments behind on failure.
    pub(crate) fn unify(&mut self, a: &Expr, b: &Expr) -> bool {
        let snapshot = self.metas.clone();
        let ok = self.unify_inner(a, b, 0);
        if !ok {
            self.metas = snapshot;
        }
        ok
    }

    fn unify_inner(&mut self, a: &Expr, b: &Expr, fuel: u32) -> bool {
        if fuel > 64 {
            return false;
        }
        let a = self.inst(a);
        let b = self.inst(b);
        if alpha_eq(&a, &b) {
            return true;
        }
        match (&a, &b) {
            (Expr::Meta(m), _) => return self.assign(*m, &b),
            (_, Expr::Meta(m)) => return self.assign(*m, &a),
            (Expr::App(..), Expr::App(..)) => {
                let (ha, aa) = a.spine();
                let (hb, ab) = b.spine();
                if aa.len() == ab.len() {
                    let snapshot = self.metas.clone();
                    let heads = self.unify_inner(ha, hb, fuel + 1);
                    if heads && aa.iter().zip(&ab).all(|(x, y)| self.unify_inner(x, y, fuel + 1)) {
                        return true;
                    }
                    self.metas = snapshot;
                }
            }
            (Expr::Pi(ba, xa), Expr::Pi(bb, xb)) | (Expr::Lam(ba, xa), Expr::Lam(bb, xb)) => {
                if !self.unify_inner(&ba.ty, &bb.ty, fuel + 1) {
                    return false;
                }
                let x = Expr::FVar { id: FVarId::fresh(), name: ba.name.clone(), ty: ba.ty.clone() };
                return self.unify_inner(&instantiate(xa, &x), &instantiate(xb, &x), fuel + 1);
            }
            _ => {}
        }
        let wa = whnf(self.env, &a);
        let wb = whnf(self.env, &b);
        if wa != a || wb != b {
            return self.unify_inner(&wa, &wb, fuel + 1);
        }
        false
    }

    /// Solve instance metas whose type is fully known.
    pub(crate) fn try_instances(&mut self) {
        let mut progress = true;
        while progress {
            progress = false;
            for m in 0..self.metas.len() {
                let info = &self.metas[m];
                if !info.instance || info.value.is_some() {
                    continue;
                }
                let goal = self.inst(&info.ty);
                if goal.has_meta() {
                    continue;
                }
                if let Some(v) = self.find_instance(&goal, info.scope_len) {
                    self.metas[m].value = Some(v);
                    progress = true;
                }
            }
        }
    }

    fn find_instance(&mut self, goal: &Expr, scope_len: usize) -> Option<Expr> {
        for local in self.scope[..scope_len.min(self.scope.len())].iter().rev() {
            let Expr::FVar { ty, .. } = local else { continue };
            if alpha_eq(ty, goal) {
                return Some(local.clone());
            }
        }
        let (goal_head, _) = goal.spine();
        let Expr::Const(class) = goal_head else { return None };
        let candidates: Vec<(Arc<str>, Expr)> = self
            .env
            .decls()
            .iter()
            .filter(|d| d.order_index < self.cutoff)
            .filter(|d| {
                let mut t = &d.ty;
                while let Expr::Pi(_, body) = t {
                    t = body;
                }
                t.spine().0.is_const(class)
            })
            .map(|d| (d.name.clone(), d.ty.clone()))
            .collect();
        for (name, ty) in candidates {
            let snapshot = self.metas.clone();
            let mut v = Expr::Const(name);
            let mut t = ty;
            let mut fresh = Vec::new();
            while let Expr::Pi(b, body) = &t {
                let m = self.new_meta((*b.ty).clone(), &b.name, 0, false);
                fresh.push(m.clone());
                v = Expr::app(v, m.clone());
                t = instantiate(body, &m);
            }
            if self.unify(&t, goal) && fresh.iter().all(|m| !self.inst(m).has_meta()) {
                return Some(self.inst(&v));
            }
            self.metas = snapshot;
        }
        None
    }

    pub(crate) fn meta_type(&self, m: u32) -> Expr {
        self.metas[m as usize].ty.clone()
    }

    pub(crate) fn unsolved_metas(&self) -> Vec<u32> {
        (0..self.metas.len() as u32).filter(|&m| self.inst(&Expr::Meta(m)).has_meta()).collect()
    }

    /// Instantiate all metas; any left unsolved is an error.
    pub(crate) fn finish(&mut self, e: &Expr) -> Result<Expr, KernelError> {
        self.try_instances();
        let out = self.inst(e);
        if out.has_meta() {
            let m = first_meta(&out).expect("has_meta");
            let info = &self.metas[m as usize];
            return Err(KernelError::UnsolvedMeta { binder: info.binder.clone(), offset: info.off });
        }
        Ok(out)
    }
}

fn contains_meta(e: &Expr, m: u32) -> bool {
    match e {
        Expr::Meta(n) => *n == m,
        Expr::App(f, a) => contains_meta(f, m) || contains_meta(a, m),
        Expr::Lam(b, body) | Expr::Pi(b, body) => contains_meta(&b.ty, m) || contains_meta(body, m),
        _ => false,
    }
}

fn first_meta(e: &Expr) -> Option<u32> {
    match e {
        Expr::Meta(n) => Some(*n),
        Expr::App(f, a) => first_meta(f).or_else(|| first_meta(a)),
        Expr::Lam(b, body) | Expr::Pi(b, body) => first_meta(&b.ty).or_else(|| first_meta(body)),
        _ => None,
    }
}
