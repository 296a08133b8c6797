//! Karva-encoded expression trees: symbols, breadth-first decoding, protected
//! evaluation and infix rendering.

use crate::error::{Error, Result};

/// Division fallback threshold: |denominator| below this returns 1.
pub const DIV_EPSILON: f64 = 1e-12;
/// ln operates on |x| clamped below at this value.
pub const LN_EPSILON: f64 = 1e-12;
/// exp arguments are clamped to ±this.
pub const EXP_ARG_LIMIT: f64 = 60.0;
/// Every node output is clamped to ±this, which keeps products of two node
/// outputs representable and evaluation total.
pub const VALUE_LIMIT: f64 = 1e150;

/// Operators available to the function set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FuncOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Ln,
    Exp,
    Sin,
    Cos,
    Square,
}

impl FuncOp {
    pub const ALL: [FuncOp; 10] = [
        FuncOp::Add,
        FuncOp::Sub,
        FuncOp::Mul,
        FuncOp::Div,
        FuncOp::Sqrt,
        FuncOp::Ln,
        FuncOp::Exp,
        FuncOp::Sin,
        FuncOp::Cos,
        FuncOp::Square,
    ];

    pub fn arity(self) -> usize {
        match self {
            FuncOp::Add | FuncOp::Sub | FuncOp::Mul | FuncOp::Div => 2,
            _ => 1,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            FuncOp::Add => "+",
            FuncOp::Sub => "-",
            FuncOp::Mul => "*",
            FuncOp::Div => "/",
            FuncOp::Sqrt => "sqrt",
            FuncOp::Ln => "ln",
            FuncOp::Exp => "exp",
            FuncOp::Sin => "sin",
            FuncOp::Cos => "cos",
            FuncOp::Square => "sq",
        }
    }

    /// Protected application: total over all finite inputs. Unary operators
    /// take their argument in `a`.
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let raw = match self {
            FuncOp::Add => a + b,
            FuncOp::Sub => a - b,
            FuncOp::Mul => a * b,
            FuncOp::Div => {
                if b.abs() < DIV_EPSILON {
                    1.0
                } else {
                    a / b
                }
            }
            FuncOp::Sqrt => a.abs().sqrt(),
            FuncOp::Ln => a.abs().max(LN_EPSILON).ln(),
            FuncOp::Exp => a.clamp(-EXP_ARG_LIMIT, EXP_ARG_LIMIT).exp(),
            FuncOp::Sin => a.sin(),
            FuncOp::Cos => a.cos(),
            FuncOp::Square => a * a,
        };
        if raw.is_nan() {
            0.0
        } else {
            raw.clamp(-VALUE_LIMIT, VALUE_LIMIT)
        }
    }
}

/// One position of a gene: an operator, an input variable, or a reference
/// into the gene's constant table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Func(FuncOp),
    Var(usize),
    Const(usize),
}

impl Symbol {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Symbol::Func(_))
    }

    pub fn arity(self) -> usize {
        match self {
            Symbol::Func(op) => op.arity(),
            _ => 0,
        }
    }

    pub fn token(self, var_names: &[String]) -> String {
        match self {
            Symbol::Func(op) => op.token().to_string(),
            Symbol::Var(i) => var_names.get(i).cloned().unwrap_or_else(|| format!("x{i}")),
            Symbol::Const(i) => format!("c{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub symbol: Symbol,
    pub children: Vec<usize>,
}

/// Expression tree stored as an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTree {
    nodes: Vec<TreeNode>,
}

/// Breadth-first Karva decoding of one gene.
///
/// The head length is recovered from the gene length
/// (`len = head·max_arity + 1` for the head/tail layout); unused trailing
/// symbols are ignored. A function symbol in the tail is an encoding error.
pub fn decode(gene: &[Symbol], max_arity: usize) -> Result<ExpressionTree> {
    if max_arity < 1 {
        return Err(Error::InvalidGene("max arity must be at least 1".into()));
    }
    if gene.is_empty() || !(gene.len() - 1).is_multiple_of(max_arity) {
        return Err(Error::InvalidGene(format!(
            "gene length {} does not fit a head/tail layout with arity {max_arity}",
            gene.len()
        )));
    }
    let head = (gene.len() - 1) / max_arity;
    if let Some(pos) = gene[head..].iter().position(|s| !s.is_terminal()) {
        return Err(Error::InvalidGene(format!(
            "function symbol in tail position {}",
            head + pos
        )));
    }

    let mut nodes = vec![TreeNode {
        symbol: gene[0],
        children: Vec::new(),
    }];
    let mut cursor = 1;
    let mut open = 0;
    while open < nodes.len() {
        for _ in 0..nodes[open].symbol.arity() {
            if cursor >= gene.len() {
                return Err(Error::InvalidGene("gene exhausted during decoding".into()));
            }
            let child = nodes.len();
            nodes.push(TreeNode {
                symbol: gene[cursor],
                children: Vec::new(),
            });
            nodes[open].children.push(child);
            cursor += 1;
        }
        open += 1;
    }
    Ok(ExpressionTree { nodes })
}

impl ExpressionTree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Protected evaluation; total given finite inputs.
    pub fn evaluate(&self, vars: &[f64], consts: &[f64]) -> f64 {
        self.eval_node(0, vars, consts)
    }

    fn eval_node(&self, idx: usize, vars: &[f64], consts: &[f64]) -> f64 {
        let node = &self.nodes[idx];
        match node.symbol {
            Symbol::Var(i) => vars.get(i).copied().unwrap_or(0.0),
            Symbol::Const(i) => consts.get(i).copied().unwrap_or(0.0),
            Symbol::Func(op) => {
                let a = self.eval_node(node.children[0], vars, consts);
                let b = if op.arity() == 2 {
                    self.eval_node(node.children[1], vars, consts)
                } else {
                    0.0
                };
                op.apply(a, b)
            }
        }
    }

    /// Human-readable infix rendering with constants inlined.
    pub fn infix(&self, var_names: &[String], consts: &[f64]) -> String {
        self.infix_node(0, var_names, consts)
    }

    fn infix_node(&self, idx: usize, var_names: &[String], consts: &[f64]) -> String {
        let node = &self.nodes[idx];
        match node.symbol {
            Symbol::Var(i) => var_names.get(i).cloned().unwrap_or_else(|| format!("x{i}")),
            Symbol::Const(i) => format!("{}", consts.get(i).copied().unwrap_or(0.0)),
            Symbol::Func(op) => {
                if op.arity() == 2 {
                    format!(
                        "({} {} {})",
                        self.infix_node(node.children[0], var_names, consts),
                        op.token(),
                        self.infix_node(node.children[1], var_names, consts)
                    )
                } else {
                    format!(
                        "{}({})",
                        op.token(),
                        self.infix_node(node.children[0], var_names, consts)
                    )
                }
            }
        }
    }
}
