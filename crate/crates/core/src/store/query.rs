//! A conjunctive query subset: `PREFIX* SELECT ?v+ WHERE { patterns FILTER* }`.
//!
//! Evaluation is a nested-loop join over the graph indexes. Patterns are
//! ordered greedily: most bound positions first, then smallest match count.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::graph::Graph;
use super::ntriples::Cursor;
use super::term::{Iri, Literal, Term};
use super::SyntaxError;
use crate::vocab::RDF_TYPE;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{col}: undeclared prefix {prefix:?}")]
    UndeclaredPrefix { prefix: String, line: usize, col: usize },
    #[error("variable ?{0} is selected or filtered but never bound by a pattern")]
    UnboundSelectVar(String),
}

/// A subject, predicate or object position in a pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Filter {
    pub left: PatternTerm,
    pub op: CompareOp,
    pub right: PatternTerm,
}

impl Filter {
    fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.left, &self.right].into_iter().filter_map(|t| match t {
            PatternTerm::Var(v) => Some(v.as_str()),
            PatternTerm::Const(_) => None,
        })
    }
}

/// Evaluates a comparison between two bound terms.
///
/// `=` and `!=` are strict term (in)equality. `<` and `>` hold only between
/// literals: numerically when both lexical forms parse as numbers, otherwise
/// by lexical string order.
pub fn compare_terms(left: &Term, op: CompareOp, right: &Term) -> bool {
    match op {
        CompareOp::Eq => left == right,
        CompareOp::Ne => left != right,
        CompareOp::Lt | CompareOp::Gt => {
            let (Term::Literal(a), Term::Literal(b)) = (left, right) else {
                return false;
            };
            let ord = match (parse_number(a), parse_number(b)) {
                (Some(x), Some(y)) => x.partial_cmp(&y),
                _ => Some(a.lexical().cmp(b.lexical())),
            };
            let want = if op == CompareOp::Lt {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            ord == Some(want)
        }
    }
}

fn parse_number(lit: &Literal) -> Option<f64> {
    lit.lexical().trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub prefixes: BTreeMap<String, Iri>,
    pub select: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
}

/// Result rows; every row binds every column, in column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

impl BindingTable {
    /// Tab-separated values: a header of variable names, then one line per
    /// row. IRIs are written bare and literals as their lexical form.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|t| escape_tsv(t.lexical())).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The values bound to `column`, in row order.
    pub fn column(&self, column: &str) -> Option<Vec<&Term>> {
        let idx = self.columns.iter().position(|c| c == column)?;
        Some(self.rows.iter().map(|r| &r[idx]).collect())
    }
}

fn escape_tsv(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Row order: column by column on the lexical form, ties broken by the full
/// N-Triples rendering.
pub fn compare_rows(a: &[Term], b: &[Term]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x
            .lexical()
            .cmp(y.lexical())
            .then_with(|| x.to_string().cmp(&y.to_string()));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut p = QueryParser {
        cur: Cursor::new(text, 1),
        prefixes: BTreeMap::new(),
    };
    p.query()
}

struct QueryParser<'a> {
    cur: Cursor<'a>,
    prefixes: BTreeMap<String, Iri>,
}

impl QueryParser<'_> {
    fn query(&mut self) -> Result<Query, QueryError> {
        self.skip();
        while self.peek_keyword("PREFIX") {
            self.keyword("PREFIX")?;
            self.skip();
            let prefix = self.prefix_name()?;
            self.skip();
            let iri = self.cur.iri()?;
            self.prefixes.insert(prefix, iri);
            self.skip();
        }

        self.keyword("SELECT")?;
        self.skip();
        let mut select = Vec::new();
        while matches!(self.cur.peek(), Some('?' | '$')) {
            select.push(self.variable()?);
            self.skip();
        }
        if select.is_empty() {
            return Err(self.cur.error("expected at least one variable after SELECT").into());
        }

        self.keyword("WHERE")?;
        self.skip();
        self.expect('{')?;

        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        loop {
            self.skip();
            match self.cur.peek() {
                None => return Err(self.cur.error("unterminated group, expected '}'").into()),
                Some('}') => {
                    self.cur.bump();
                    break;
                }
                _ if self.peek_keyword("FILTER") => {
                    filters.push(self.filter()?);
                }
                _ => {
                    let subject = self.term()?;
                    self.skip();
                    let predicate = self.term()?;
                    self.skip();
                    let object = self.term()?;
                    patterns.push(TriplePattern {
                        subject,
                        predicate,
                        object,
                    });
                    self.skip();
                    match self.cur.peek() {
                        Some('.') => {
                            self.cur.bump();
                        }
                        Some('}') => {}
                        _ => return Err(self.cur.error("expected '.' after triple pattern").into()),
                    }
                }
            }
        }
        self.skip();
        if !self.cur.at_end() {
            return Err(self.cur.error("unexpected content after query").into());
        }
        if patterns.is_empty() {
            return Err(self.cur.error("WHERE group has no triple pattern").into());
        }

        let bound: BTreeSet<&str> = patterns
            .iter()
            .flat_map(|p| p.positions())
            .filter_map(|t| match t {
                PatternTerm::Var(v) => Some(v.as_str()),
                PatternTerm::Const(_) => None,
            })
            .collect();
        for v in select
            .iter()
            .map(String::as_str)
            .chain(filters.iter().flat_map(Filter::vars))
        {
            if !bound.contains(v) {
                return Err(QueryError::UnboundSelectVar(v.to_string()));
            }
        }

        Ok(Query {
            prefixes: std::mem::take(&mut self.prefixes),
            select,
            patterns,
            filters,
        })
    }

    fn filter(&mut self) -> Result<Filter, QueryError> {
        self.keyword("FILTER")?;
        self.skip();
        self.expect('(')?;
        self.skip();
        let left = self.term()?;
        self.skip();
        let op = match (self.cur.peek(), self.cur.peek_at(1)) {
            (Some('!'), Some('=')) => {
                self.cur.bump();
                self.cur.bump();
                CompareOp::Ne
            }
            (Some('='), _) => {
                self.cur.bump();
                CompareOp::Eq
            }
            (Some('<'), _) => {
                self.cur.bump();
                CompareOp::Lt
            }
            (Some('>'), _) => {
                self.cur.bump();
                CompareOp::Gt
            }
            _ => return Err(self.cur.error("expected one of = != < >").into()),
        };
        self.skip();
        let right = self.term()?;
        self.skip();
        self.expect(')')?;
        Ok(Filter { left, op, right })
    }

    fn term(&mut self) -> Result<PatternTerm, QueryError> {
        let c = self
            .cur
            .peek()
            .ok_or_else(|| self.cur.error("unexpected end of query"))?;
        match c {
            '?' | '$' => Ok(PatternTerm::Var(self.variable()?)),
            '<' => Ok(PatternTerm::Const(Term::Iri(self.cur.iri()?))),
            '"' => {
                let lexical = self.cur.quoted()?;
                match self.cur.peek() {
                    Some('@') | None => {}
                    Some('^') if self.cur.peek_at(1) == Some('^') => {
                        self.cur.bump();
                        self.cur.bump();
                        let dt = if self.cur.peek() == Some('<') {
                            self.cur.iri()?
                        } else {
                            self.prefixed_name()?
                        };
                        return Ok(PatternTerm::Const(Term::Literal(Literal::typed(lexical, dt))));
                    }
                    _ => return Ok(PatternTerm::Const(Term::Literal(Literal::simple(lexical)))),
                }
                if self.cur.peek() == Some('@') {
                    self.cur.bump();
                    let mut tag = String::new();
                    while let Some(c) = self.cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '-') {
                        tag.push(c);
                        self.cur.bump();
                    }
                    if !super::ntriples::is_lang_tag(&tag) {
                        return Err(self.cur.error(format!("invalid language tag {tag:?}")).into());
                    }
                    return Ok(PatternTerm::Const(Term::Literal(Literal::lang(lexical, tag))));
                }
                Ok(PatternTerm::Const(Term::Literal(Literal::simple(lexical))))
            }
            c if c.is_ascii_digit()
                || ((c == '-' || c == '+') && self.cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) =>
            {
                Ok(PatternTerm::Const(Term::Literal(Literal::simple(self.number()))))
            }
            'a' if !self.cur.peek_at(1).is_some_and(is_name_char) && self.cur.peek_at(1) != Some(':') => {
                self.cur.bump();
                Ok(PatternTerm::Const(Term::Iri(Iri::new_unchecked(RDF_TYPE))))
            }
            c if c.is_ascii_alphabetic() || c == ':' => Ok(PatternTerm::Const(Term::Iri(self.prefixed_name()?))),
            other => Err(self.cur.error(format!("unexpected character {other:?}")).into()),
        }
    }

    fn number(&mut self) -> String {
        let mut s = String::new();
        if let Some(sign @ ('-' | '+')) = self.cur.peek() {
            s.push(sign);
            self.cur.bump();
        }
        while let Some(c) = self.cur.peek() {
            let decimal_point = c == '.' && self.cur.peek_at(1).is_some_and(|d| d.is_ascii_digit());
            if c.is_ascii_digit() || decimal_point {
                s.push(c);
                self.cur.bump();
            } else {
                break;
            }
        }
        s
    }

    fn variable(&mut self) -> Result<String, QueryError> {
        self.cur.bump();
        let mut name = String::new();
        while let Some(c) = self.cur.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
            name.push(c);
            self.cur.bump();
        }
        if name.is_empty() {
            return Err(self.cur.error("empty variable name").into());
        }
        Ok(name)
    }

    /// `prefix:` in a PREFIX declaration.
    fn prefix_name(&mut self) -> Result<String, QueryError> {
        let mut name = String::new();
        while let Some(c) = self.cur.peek().filter(|c| is_name_char(*c)) {
            name.push(c);
            self.cur.bump();
        }
        self.expect(':')?;
        Ok(name)
    }

    /// `prefix:local`, expanded against the declared prefixes.
    fn prefixed_name(&mut self) -> Result<Iri, QueryError> {
        let start = self.cur.position();
        let mut prefix = String::new();
        while let Some(c) = self.cur.peek().filter(|c| is_name_char(*c)) {
            prefix.push(c);
            self.cur.bump();
        }
        if self.cur.peek() != Some(':') {
            return Err(self.cur.error_at(start, format!("unexpected token {prefix:?}")).into());
        }
        self.cur.bump();
        let mut local = String::new();
        while let Some(c) = self.cur.peek() {
            let dot_inside = c == '.' && self.cur.peek_at(1).is_some_and(is_name_char);
            if is_name_char(c) || c == '%' || dot_inside {
                local.push(c);
                self.cur.bump();
            } else {
                break;
            }
        }
        let Some(ns) = self.prefixes.get(&prefix) else {
            return Err(QueryError::UndeclaredPrefix {
                prefix,
                line: start.0,
                col: start.1,
            });
        };
        Ok(Iri::new_unchecked(format!("{}{local}", ns.as_str())))
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        kw.chars()
            .enumerate()
            .all(|(i, k)| self.cur.peek_at(i).is_some_and(|c| c.eq_ignore_ascii_case(&k)))
            && !self.cur.peek_at(kw.len()).is_some_and(is_name_char)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if !self.peek_keyword(kw) {
            return Err(self.cur.error(format!("expected {kw}")).into());
        }
        for _ in 0..kw.len() {
            self.cur.bump();
        }
        Ok(())
    }

    fn expect(&mut self, c: char) -> Result<(), QueryError> {
        if self.cur.peek() == Some(c) {
            self.cur.bump();
            Ok(())
        } else {
            Err(self.cur.error(format!("expected {c:?}")).into())
        }
    }

    /// Skips whitespace and `#` comments.
    fn skip(&mut self) {
        loop {
            self.cur.skip_ws();
            if self.cur.peek() == Some('#') {
                while !matches!(self.cur.peek(), None | Some('\n')) {
                    self.cur.bump();
                }
            } else {
                return;
            }
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Slot {
    Const(u32),
    Var(usize),
}

struct CompiledFilter<'q> {
    left: FilterOperand<'q>,
    op: CompareOp,
    right: FilterOperand<'q>,
}

enum FilterOperand<'q> {
    Var(usize),
    Const(&'q Term),
}

/// Evaluates `query` against `graph`. Rows are deduplicated and sorted.
pub fn execute(graph: &Graph, query: &Query) -> BindingTable {
    let mut vars: Vec<&str> = Vec::new();
    fn var_index<'q>(name: &'q str, vars: &mut Vec<&'q str>) -> usize {
        vars.iter().position(|v| *v == name).unwrap_or_else(|| {
            vars.push(name);
            vars.len() - 1
        })
    }
    fn operand<'q>(t: &'q PatternTerm, vars: &[&str]) -> Option<FilterOperand<'q>> {
        match t {
            PatternTerm::Var(v) => vars.iter().position(|x| x == v).map(FilterOperand::Var),
            PatternTerm::Const(c) => Some(FilterOperand::Const(c)),
        }
    }

    let empty = || BindingTable {
        columns: query.select.clone(),
        rows: Vec::new(),
    };

    // Compile patterns; a constant absent from the graph empties the result.
    let mut compiled: Vec<[Slot; 3]> = Vec::with_capacity(query.patterns.len());
    for pattern in &query.patterns {
        let mut slots = [Slot::Const(0); 3];
        for (i, position) in pattern.positions().into_iter().enumerate() {
            slots[i] = match position {
                PatternTerm::Var(name) => Slot::Var(var_index(name, &mut vars)),
                PatternTerm::Const(term) => match graph.term_id(term) {
                    Some(id) => Slot::Const(id),
                    None => return empty(),
                },
            };
        }
        compiled.push(slots);
    }
    // Variables that only occur in filters cannot exist (parse rejects them),
    // but queries may be built by hand.
    let mut filters = Vec::with_capacity(query.filters.len());
    for f in &query.filters {
        let (Some(left), Some(right)) = (operand(&f.left, &vars), operand(&f.right, &vars)) else {
            return empty();
        };
        filters.push(CompiledFilter { left, op: f.op, right });
    }
    let Some(select_idx) = query
        .select
        .iter()
        .map(|s| vars.iter().position(|v| v == s))
        .collect::<Option<Vec<_>>>()
    else {
        return empty();
    };

    let order = plan(graph, &compiled, vars.len());

    // Attach each filter to the first step after which all its vars are bound.
    let mut bound_after = vec![0usize; vars.len()];
    {
        let mut seen = vec![false; vars.len()];
        for (step, &pi) in order.iter().enumerate() {
            for slot in compiled[pi] {
                if let Slot::Var(v) = slot {
                    if !seen[v] {
                        seen[v] = true;
                        bound_after[v] = step;
                    }
                }
            }
        }
    }
    let mut filters_at: Vec<Vec<&CompiledFilter>> = vec![Vec::new(); order.len()];
    for f in &filters {
        let step = [&f.left, &f.right]
            .iter()
            .filter_map(|o| match o {
                FilterOperand::Var(v) => Some(bound_after[*v]),
                FilterOperand::Const(_) => None,
            })
            .max()
            .unwrap_or(0);
        filters_at[step].push(f);
    }

    let mut results: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut binding: Vec<Option<u32>> = vec![None; vars.len()];
    let ctx = JoinContext {
        graph,
        patterns: &compiled,
        order: &order,
        filters_at: &filters_at,
        select: &select_idx,
    };
    ctx.join(0, &mut binding, &mut results);

    let mut rows: Vec<Vec<Term>> = results
        .into_iter()
        .map(|ids| ids.into_iter().map(|id| graph.term(id).clone()).collect())
        .collect();
    rows.sort_by(|a, b| compare_rows(a, b));
    BindingTable {
        columns: query.select.clone(),
        rows,
    }
}

/// Greedy join order: prefer patterns with more bound positions, then fewer
/// matches on their constants alone.
fn plan(graph: &Graph, patterns: &[[Slot; 3]], n_vars: usize) -> Vec<usize> {
    let estimates: Vec<usize> = patterns
        .iter()
        .map(|slots| {
            let c = |s: Slot| match s {
                Slot::Const(id) => Some(id),
                Slot::Var(_) => None,
            };
            graph.match_ids(c(slots[0]), c(slots[1]), c(slots[2])).count()
        })
        .collect();
    let mut bound = vec![false; n_vars];
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &pi)| {
                let bound_positions = patterns[pi]
                    .iter()
                    .filter(|s| match s {
                        Slot::Const(_) => true,
                        Slot::Var(v) => bound[*v],
                    })
                    .count();
                (std::cmp::Reverse(bound_positions), estimates[pi], pi)
            })
            .expect("non-empty");
        remaining.remove(pos);
        for s in patterns[best] {
            if let Slot::Var(v) = s {
                bound[v] = true;
            }
        }
        order.push(best);
    }
    order
}

struct JoinContext<'a, 'q> {
    graph: &'a Graph,
    patterns: &'a [[Slot; 3]],
    order: &'a [usize],
    filters_at: &'a [Vec<&'a CompiledFilter<'q>>],
    select: &'a [usize],
}

impl JoinContext<'_, '_> {
    fn join(&self, step: usize, binding: &mut Vec<Option<u32>>, out: &mut BTreeSet<Vec<u32>>) {
        if step == self.order.len() {
            let row = self
                .select
                .iter()
                .map(|&v| binding[v].expect("selected variables are bound"))
                .collect();
            out.insert(row);
            return;
        }
        let slots = self.patterns[self.order[step]];
        let lookup = |s: Slot, binding: &Vec<Option<u32>>| match s {
            Slot::Const(id) => Some(id),
            Slot::Var(v) => binding[v],
        };
        let (s, p, o) = (
            lookup(slots[0], binding),
            lookup(slots[1], binding),
            lookup(slots[2], binding),
        );
        let matches: Vec<[u32; 3]> = self.graph.match_ids(s, p, o).collect();
        for key in matches {
            let mut newly_bound: Vec<usize> = Vec::new();
            let mut consistent = true;
            for (slot, id) in slots.iter().zip(key) {
                if let Slot::Var(v) = *slot {
                    match binding[v] {
                        Some(existing) if existing != id => {
                            consistent = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            binding[v] = Some(id);
                            newly_bound.push(v);
                        }
                    }
                }
            }
            if consistent && self.filters_hold(step, binding) {
                self.join(step + 1, binding, out);
            }
            for v in newly_bound {
                binding[v] = None;
            }
        }
    }

    fn filters_hold(&self, step: usize, binding: &[Option<u32>]) -> bool {
        self.filters_at[step].iter().all(|f| {
            let resolve = |o: &FilterOperand| -> Term {
                match o {
                    FilterOperand::Var(v) => self.graph.term(binding[*v].expect("bound")).clone(),
                    FilterOperand::Const(t) => (*t).clone(),
                }
            };
            compare_terms(&resolve(&f.left), f.op, &resolve(&f.right))
        })
    }
}

/// Renders a query back to text; used by tests and for logging.
pub fn format_query(query: &Query) -> String {
    let mut out = String::new();
    for (p, iri) in &query.prefixes {
        writeln!(out, "PREFIX {p}: {iri}").unwrap();
    }
    let vars: Vec<String> = query.select.iter().map(|v| format!("?{v}")).collect();
    writeln!(out, "SELECT {} WHERE {{", vars.join(" ")).unwrap();
    let fmt_term = |t: &PatternTerm| match t {
        PatternTerm::Var(v) => format!("?{v}"),
        PatternTerm::Const(c) => c.to_string(),
    };
    for p in &query.patterns {
        writeln!(
            out,
            "  {} {} {} .",
            fmt_term(&p.subject),
            fmt_term(&p.predicate),
            fmt_term(&p.object)
        )
        .unwrap();
    }
    for f in &query.filters {
        let op = match f.op {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        };
        writeln!(out, "  FILTER({} {op} {})", fmt_term(&f.left), fmt_term(&f.right)).unwrap();
    }
    out.push('}');
    out.push('\n');
    out
}
