use std::collections::HashMap;
use std::sync::Arc;

use super::error::KernelError;
use super::expr::{Expr, Level};
use super::parse::{parse_expr_with, ParseOptions};
use super::print::print_closed;
use super::typing::{defeq, infer_closed, TypeChecker};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeclKind {
    /// Opaque constant (axiom, inductive type or eliminator stand-in).
    Constant,
    /// Definition whose value may be unfolded when a function type needs it.
    Def,
    Theorem,
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub name: Arc<str>,
    pub kind: DeclKind,
    pub ty: Expr,
    pub value: Option<Expr>,
    pub order_index: usize,
    pub module_path: String,
    /// Whether `ty` is itself a proposition, i.e. the declaration is a lemma.
    pub is_lemma: bool,
}

/// Ordered collection of declarations. Every constant a declaration mentions
/// resolves to a strictly earlier declaration.
#[derive(Clone, Debug, Default)]
pub struct Environment {
    decls: Vec<Declaration>,
    by_name: HashMap<Arc<str>, usize>,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn decls(&self) -> &[Declaration] {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Declaration> {
        self.by_name.get(name).map(|&i| &self.decls[i])
    }

    /// Lookup restricted to declarations with `order_index < cutoff`.
    pub fn get_before(&self, name: &str, cutoff: usize) -> Option<&Declaration> {
        self.get(name).filter(|d| d.order_index < cutoff)
    }

    pub fn theorems(&self) -> impl Iterator<Item = &Declaration> {
        self.decls.iter().filter(|d| d.kind == DeclKind::Theorem)
    }

    /// Type-check and append a declaration. The order index is assigned here.
    pub fn add(
        &mut self,
        name: &str,
        kind: DeclKind,
        ty: Expr,
        value: Option<Expr>,
        module_path: &str,
    ) -> Result<&Declaration, KernelError> {
        if self.by_name.contains_key(name) {
            return Err(KernelError::DuplicateDeclaration(name.to_string()));
        }
        let order_index = self.decls.len();
        let tc = TypeChecker::new(self, order_index);
        let sort = tc.infer(&ty)?;
        let sort = super::typing::whnf(self, &sort);
        if !sort.is_sort() {
            return Err(KernelError::NotAType { name: name.to_string() });
        }
        if let Some(v) = &value {
            let vt = tc.infer(v)?;
            if !defeq(&vt, &ty) {
                return Err(KernelError::DeclTypeMismatch {
                    name: name.to_string(),
                    expected: print_closed(self, &ty),
                    actual: print_closed(self, &vt),
                });
            }
        }
        let is_lemma = sort == Expr::Sort(Level::Prop);
        let decl = Declaration {
            name: Arc::from(name),
            kind,
            ty,
            value,
            order_index,
            module_path: module_path.to_string(),
            is_lemma,
        };
        self.by_name.insert(decl.name.clone(), order_index);
        self.decls.push(decl);
        Ok(&self.decls[order_index])
    }

    /// Parse and check a declaration given as surface strings.
    pub fn add_source(
        &mut self,
        name: &str,
        kind: DeclKind,
        ty_src: &str,
        value_src: Option<&str>,
        module_path: &str,
    ) -> Result<&Declaration, KernelError> {
        let ty = parse_expr_with(ty_src, self, &ParseOptions::default().cutoff(self.len()))?;
        let value = match value_src {
            Some(src) => Some(parse_expr_with(src, self, &ParseOptions::typed(ty.clone()).cutoff(self.len()))?),
            None => None,
        };
        self.add(name, kind, ty, value, module_path)
    }

    /// Load declarations from the fixture text format.
    ///
    /// Blocks are separated by blank lines. A block is one of
    /// `constant <name> : <type>`, `def <name> : <type> := <value>`,
    /// `theorem <name> : <type> := <value>` (or `lemma`). A line
    /// `module <path>` sets the module path of the following blocks and
    /// `--` starts a comment line.
    pub fn load_str(src: &str) -> Result<Self, KernelError> {
        let mut env = Environment::new();
        env.extend_str(src)?;
        Ok(env)
    }

    pub fn extend_str(&mut self, src: &str) -> Result<(), KernelError> {
        let mut module = String::from("root");
        let mut block: Vec<(usize, &str)> = Vec::new();
        let flush = |env: &mut Environment, block: &mut Vec<(usize, &str)>, module: &str| {
            if block.is_empty() {
                return Ok(());
            }
            let line = block[0].0;
            let text: Vec<&str> = block.iter().map(|(_, l)| *l).collect();
            let text = text.join("\n");
            block.clear();
            env.add_block(&text, module).map_err(|e| KernelError::Fixture { line, source: Box::new(e) })
        };
        for (i, raw) in src.lines().enumerate() {
            let line = raw.trim_end();
            let trimmed = line.trim_start();
            if trimmed.starts_with("--") {
                continue;
            }
            if trimmed.is_empty() {
                flush(self, &mut block, &module)?;
                continue;
            }
            if let Some(path) = trimmed.strip_prefix("module ") {
                flush(self, &mut block, &module)?;
                module = path.trim().to_string();
                continue;
            }
            let starts_decl = ["constant ", "def ", "theorem ", "lemma "].iter().any(|k| trimmed.starts_with(k));
            if starts_decl {
                flush(self, &mut block, &module)?;
            }
            block.push((i + 1, line));
        }
        flush(self, &mut block, &module)
    }

    fn add_block(&mut self, text: &str, module: &str) -> Result<(), KernelError> {
        let text = text.trim();
        let (kind, rest) = if let Some(r) = text.strip_prefix("constant ") {
            (DeclKind::Constant, r)
        } else if let Some(r) = text.strip_prefix("def ") {
            (DeclKind::Def, r)
        } else if let Some(r) = text.strip_prefix("theorem ").or_else(|| text.strip_prefix("lemma ")) {
            (DeclKind::Theorem, r)
        } else {
            return Err(KernelError::BadBlock(text.lines().next().unwrap_or_default().to_string()));
        };
        let (name, rest) = rest
            .split_once(" : ")
            .ok_or_else(|| KernelError::BadBlock(text.lines().next().unwrap_or_default().to_string()))?;
        let name = name.trim();
        let (ty_src, value_src) = match rest.split_once(":=") {
            Some((t, v)) => (t.trim(), Some(v.trim())),
            None => (rest.trim(), None),
        };
        if kind != DeclKind::Constant && value_src.is_none() {
            return Err(KernelError::BadBlock(format!("{name}: missing `:=` value")));
        }
        if kind == DeclKind::Constant && value_src.is_some() {
            return Err(KernelError::BadBlock(format!("{name}: constants take no value")));
        }
        self.add_source(name, kind, ty_src, value_src, module)?;
        Ok(())
    }

    /// Type of a declaration as stored.
    pub fn type_of(&self, name: &str) -> Option<&Expr> {
        self.get(name).map(|d| &d.ty)
    }

    /// Unfold a definition's value, if `name` is a `def`.
    pub fn unfold(&self, name: &str) -> Option<&Expr> {
        self.get(name).filter(|d| d.kind == DeclKind::Def).and_then(|d| d.value.as_ref())
    }

    /// Check that `value` has type `ty` in the empty context.
    pub fn check(&self, value: &Expr, ty: &Expr) -> Result<bool, KernelError> {
        Ok(defeq(&infer_closed(self, value)?, ty))
    }
}
