//! A selector mini-language and grounding against DOM snapshots.
//!
//! ```text
//! #id
//! [data-test=VALUE]
//! role=ROLE[name=NAME]      (the [name=...] part is optional)
//! text=TEXT                 exact, case-sensitive
//! text*=TEXT                substring, case-insensitive
//! ```
//!
//! Values may be single- or double-quoted.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorExpr {
    ById { id: String },
    ByTestAttr { value: String },
    ByRole { role: String, name: Option<String> },
    ByText { text: String, exact: bool },
}

impl fmt::Display for SelectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ById { id } => write!(f, "#{id}"),
            Self::ByTestAttr { value } => write!(f, "[data-test={}]", quote(value)),
            Self::ByRole { role, name: None } => write!(f, "role={role}"),
            Self::ByRole { role, name: Some(n) } => write!(f, "role={role}[name={}]", quote(n)),
            Self::ByText { text, exact: true } => write!(f, "text={}", quote(text)),
            Self::ByText { text, exact: false } => write!(f, "text*={}", quote(text)),
        }
    }
}

fn quote(v: &str) -> String {
    if v.is_empty() || v.contains([']', '"', '\'']) || v.starts_with(char::is_whitespace) || v.ends_with(char::is_whitespace) {
        alloc::format!("{v:?}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("selector parse error at {position}: {message}")]
pub struct SelectorParseError {
    pub position: usize,
    pub message: String,
}

fn err<T>(position: usize, message: &str) -> Result<T, SelectorParseError> {
    Err(SelectorParseError { position, message: message.to_string() })
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, prefix: &str) -> bool {
        if self.rest().starts_with(prefix) {
            self.pos += prefix.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, prefix: &str) -> Result<(), SelectorParseError> {
        if self.eat(prefix) {
            Ok(())
        } else {
            err(self.pos, &alloc::format!("expected `{prefix}`"))
        }
    }

    /// A quoted string, or the raw characters up to (not including) any of `stops`.
    fn value(&mut self, stops: &[char]) -> Result<String, SelectorParseError> {
        let start = self.pos;
        let rest = self.rest();
        let Some(q) = rest.chars().next().filter(|c| *c == '"' || *c == '\'') else {
            let end = rest.find(stops).unwrap_or(rest.len());
            self.pos += end;
            let v = rest[..end].trim();
            return if v.is_empty() { err(start, "empty value") } else { Ok(v.to_string()) };
        };
        let mut out = String::new();
        let mut chars = rest[1..].char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some((_, e)) => out.push(e),
                    None => break,
                },
                c if c == q => {
                    self.pos += i + 2;
                    return if out.is_empty() { err(start, "empty value") } else { Ok(out) };
                }
                c => out.push(c),
            }
        }
        err(start, "unterminated quote")
    }
}

pub fn parse_selector(text: &str) -> Result<SelectorExpr, SelectorParseError> {
    let trimmed = text.trim();
    let offset = text.len() - text.trim_start().len();
    let mut c = Cursor { src: trimmed, pos: 0 };
    let expr = if c.eat("#") {
        let id_len = c
            .rest()
            .find(|ch: char| !(ch.is_alphanumeric() || matches!(ch, '-' | '_' | ':' | '.')))
            .unwrap_or(c.rest().len());
        if id_len == 0 {
            return err(offset + c.pos, "expected an id after `#`");
        }
        let id = c.rest()[..id_len].to_string();
        c.pos += id_len;
        SelectorExpr::ById { id }
    } else if c.eat("[") {
        c.expect("data-test").map_err(|e| shift(e, offset))?;
        c.expect("=").map_err(|e| shift(e, offset))?;
        let value = c.value(&[']']).map_err(|e| shift(e, offset))?;
        c.expect("]").map_err(|e| shift(e, offset))?;
        SelectorExpr::ByTestAttr { value }
    } else if c.eat("role=") {
        let role_len = c.rest().find(|ch: char| !ch.is_ascii_alphanumeric()).unwrap_or(c.rest().len());
        if role_len == 0 {
            return err(offset + c.pos, "expected a role name");
        }
        let role = c.rest()[..role_len].to_ascii_lowercase();
        c.pos += role_len;
        let name = if c.eat("[") {
            c.expect("name").map_err(|e| shift(e, offset))?;
            c.expect("=").map_err(|e| shift(e, offset))?;
            let n = c.value(&[']']).map_err(|e| shift(e, offset))?;
            c.expect("]").map_err(|e| shift(e, offset))?;
            Some(n)
        } else {
            None
        };
        SelectorExpr::ByRole { role, name }
    } else if c.eat("text*=") {
        SelectorExpr::ByText { text: c.value(&[]).map_err(|e| shift(e, offset))?, exact: false }
    } else if c.eat("text=") {
        SelectorExpr::ByText { text: c.value(&[]).map_err(|e| shift(e, offset))?, exact: true }
    } else {
        return err(offset, "expected `#`, `[data-test=`, `role=`, `text=` or `text*=`");
    };
    if !c.rest().is_empty() {
        return err(offset + c.pos, "unexpected trailing input");
    }
    Ok(expr)
}

fn shift(mut e: SelectorParseError, by: usize) -> SelectorParseError {
    e.position += by;
    e
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Element {
    pub tag: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default)]
    pub text: String,
    #[serde(default = "visible_default")]
    pub visible: bool,
    #[serde(default)]
    pub children: Vec<Element>,
}

fn visible_default() -> bool {
    true
}

impl Element {
    /// Explicit `role` attribute, else the implicit role of the tag.
    pub fn role(&self) -> Option<&str> {
        if let Some(r) = self.attributes.get("role") {
            return Some(r.as_str());
        }
        let input_type = self.attributes.get("type").map(String::as_str);
        Some(match self.tag.to_ascii_lowercase().as_str() {
            "button" => "button",
            "a" => "link",
            "input" => match input_type {
                Some("checkbox") => "checkbox",
                Some("radio") => "radio",
                Some("button" | "submit" | "reset") => "button",
                _ => "textbox",
            },
            "textarea" => "textbox",
            "select" => "combobox",
            "h1" | "h2" | "h3" | "h4" | "h5" | "h6" => "heading",
            "table" => "table",
            "tr" => "row",
            "td" => "cell",
            "th" => "columnheader",
            "ul" | "ol" => "list",
            "li" => "listitem",
            "nav" => "navigation",
            "img" => "img",
            "dialog" => "dialog",
            "main" => "main",
            "form" => "form",
            _ => return None,
        })
    }

    /// `aria-label` if present, else the trimmed text.
    pub fn accessible_name(&self) -> &str {
        self.attributes
            .get("aria-label")
            .map(String::as_str)
            .unwrap_or_else(|| self.text.trim())
    }

    fn matches(&self, expr: &SelectorExpr) -> bool {
        match expr {
            SelectorExpr::ById { id } => self.attributes.get("id") == Some(id),
            SelectorExpr::ByTestAttr { value } => self.attributes.get("data-test") == Some(value),
            SelectorExpr::ByRole { role, name } => {
                self.role().is_some_and(|r| r.eq_ignore_ascii_case(role))
                    && name.as_deref().map_or(true, |n| self.accessible_name() == n)
            }
            SelectorExpr::ByText { text, exact: true } => self.text.trim() == text,
            SelectorExpr::ByText { text, exact: false } => {
                self.text.to_lowercase().contains(&text.to_lowercase())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomSnapshot {
    pub root: Element,
}

impl DomSnapshot {
    pub fn resolve(&self, path: &[usize]) -> Option<&Element> {
        path.iter().try_fold(&self.root, |el, &i| el.children.get(i))
    }

    pub fn element_count(&self) -> usize {
        fn count(e: &Element) -> usize {
            1 + e.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "count", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerificationStatus {
    VerifiedUnique,
    VerifiedMultiple(usize),
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VerificationResult {
    #[serde(flatten)]
    pub status: VerificationStatus,
    /// Child-index paths from the root, in document order.
    pub matched_paths: Vec<Vec<usize>>,
}

impl VerificationResult {
    fn from_paths(matched_paths: Vec<Vec<usize>>) -> Self {
        let status = match matched_paths.len() {
            0 => VerificationStatus::NotFound,
            1 => VerificationStatus::VerifiedUnique,
            n => VerificationStatus::VerifiedMultiple(n),
        };
        Self { status, matched_paths }
    }

    /// A selector matching nothing may reference UI that does not exist.
    pub fn hallucination_risk(&self) -> bool {
        self.status == VerificationStatus::NotFound
    }
}

/// Exhaustive pre-order search; visibility is not considered.
pub fn verify_selector(expr: &SelectorExpr, dom: &DomSnapshot) -> VerificationResult {
    let mut matched_paths = Vec::new();
    let mut path = Vec::new();
    walk(&dom.root, expr, &mut path, &mut matched_paths);
    VerificationResult::from_paths(matched_paths)
}

fn walk(el: &Element, expr: &SelectorExpr, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if el.matches(expr) {
        out.push(path.clone());
    }
    for (i, child) in el.children.iter().enumerate() {
        path.push(i);
        walk(child, expr, path, out);
        path.pop();
    }
}

/// Verifies many selectors in one traversal; equal to mapping
/// [`verify_selector`] over `exprs`.
pub fn batch_verify(exprs: &[SelectorExpr], dom: &DomSnapshot) -> Vec<VerificationResult> {
    fn walk_all(el: &Element, exprs: &[SelectorExpr], path: &mut Vec<usize>, out: &mut [Vec<Vec<usize>>]) {
        for (expr, hits) in exprs.iter().zip(out.iter_mut()) {
            if el.matches(expr) {
                hits.push(path.clone());
            }
        }
        for (i, child) in el.children.iter().enumerate() {
            path.push(i);
            walk_all(child, exprs, path, out);
            path.pop();
        }
    }
    let mut hits = vec![Vec::new(); exprs.len()];
    walk_all(&dom.root, exprs, &mut Vec::new(), &mut hits);
    hits.into_iter()
        .map(VerificationResult::from_paths)
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn el(tag: &str, attrs: &[(&str, &str)], text: &str, children: Vec<Element>) -> Element {
        Element {
            tag: tag.into(),
            attributes: attrs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            text: text.into(),
            visible: true,
            children,
        }
    }

    fn page() -> DomSnapshot {
        DomSnapshot {
            root: el(
                "body",
                &[],
                "",
                vec![
                    el("button", &[("data-test", "refresh-button")], "Refresh", vec![]),
                    el("button", &[("aria-label", "Run now")], "▶", vec![]),
                    el(
                        "form",
                        &[("id", "settings")],
                        "",
                        vec![
                            el("button", &[], "Save changes", vec![]),
                            el("button", &[], " Save changes ", vec![]),
                        ],
                    ),
                ],
            ),
        }
    }

    #[test]
    fn grammar() {
        assert_eq!(
            parse_selector("[data-test=submit-btn]").unwrap(),
            SelectorExpr::ByTestAttr { value: "submit-btn".into() }
        );
        assert_eq!(
            parse_selector("role=button[name=Refresh]").unwrap(),
            SelectorExpr::ByRole { role: "button".into(), name: Some("Refresh".into()) }
        );
        assert_eq!(
            parse_selector("role=button[name=\"Execute Now\"]").unwrap(),
            SelectorExpr::ByRole { role: "button".into(), name: Some("Execute Now".into()) }
        );
        assert_eq!(parse_selector("  #settings ").unwrap(), SelectorExpr::ById { id: "settings".into() });
        assert_eq!(
            parse_selector("text*='save'").unwrap(),
            SelectorExpr::ByText { text: "save".into(), exact: false }
        );
        assert_eq!(parse_selector("role=row").unwrap(), SelectorExpr::ByRole { role: "row".into(), name: None });
    }

    #[test]
    fn malformed_selectors() {
        assert_eq!(parse_selector("##").unwrap_err().position, 1);
        assert!(parse_selector("").is_err());
        assert!(parse_selector("[data-test=]").is_err());
        assert!(parse_selector("[data-test=x").is_err());
        assert!(parse_selector("[id=x]").is_err());
        assert!(parse_selector("role=[name=x]").is_err());
        assert!(parse_selector("text='open").is_err());
        assert!(parse_selector("#a b").is_err());
        assert!(parse_selector("css=div").is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["#a", "[data-test=x]", "role=button[name=\"Execute Now\"]", "text=Save", "text*=\"a]b\"", "role=row"] {
            let e = parse_selector(s).unwrap();
            assert_eq!(parse_selector(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn verification() {
        let dom = page();
        let unique = verify_selector(&parse_selector("[data-test=refresh-button]").unwrap(), &dom);
        assert_eq!(unique.status, VerificationStatus::VerifiedUnique);
        assert_eq!(unique.matched_paths, vec![vec![0]]);

        let missing = verify_selector(&parse_selector("role=button[name=\"Execute Now\"]").unwrap(), &dom);
        assert_eq!(missing.status, VerificationStatus::NotFound);
        assert!(missing.hallucination_risk());

        let aria = verify_selector(&parse_selector("role=button[name=\"Run now\"]").unwrap(), &dom);
        assert_eq!(aria.matched_paths, vec![vec![1]]);

        let save = verify_selector(&SelectorExpr::ByText { text: "Save".into(), exact: false }, &dom);
        assert_eq!(save.status, VerificationStatus::VerifiedMultiple(2));
        assert_eq!(save.matched_paths, vec![vec![2, 0], vec![2, 1]]);

        let exact = verify_selector(&parse_selector("text=Save changes").unwrap(), &dom);
        assert_eq!(exact.status, VerificationStatus::VerifiedMultiple(2));
        assert_eq!(verify_selector(&parse_selector("text=save changes").unwrap(), &dom).status, VerificationStatus::NotFound);

        assert_eq!(verify_selector(&parse_selector("role=form").unwrap(), &dom).matched_paths, vec![vec![2]]);
    }

    #[test]
    fn batch_examples() {
        let dom = page();
        assert!(batch_verify(&[], &dom).is_empty());
        let exprs: Vec<_> = ["#settings", "[data-test=nope]", "text=Refresh"]
            .iter()
            .map(|s| parse_selector(s).unwrap())
            .collect();
        let results = batch_verify(&exprs, &dom);
        let missing: Vec<_> = results.iter().enumerate().filter(|(_, r)| r.hallucination_risk()).map(|(i, _)| i).collect();
        assert_eq!(missing, vec![1]);
    }

    pub(crate) mod props {
        use super::*;
        use proptest::prelude::*;

        const WORDS: [&str; 4] = ["Save", "Save changes", "Refresh", "Run"];

        pub(crate) fn element() -> impl Strategy<Value = Element> {
            let leaf = (
                prop::sample::select(vec!["button", "div", "a", "input", "tr", "span"]),
                prop::option::of(prop::sample::select(vec!["a", "b", "c"])),
                prop::option::of(prop::sample::select(vec!["x", "y"])),
                prop::option::of(prop::sample::select(WORDS.to_vec())),
                prop::sample::select(WORDS.to_vec()),
                any::<bool>(),
            )
                .prop_map(|(tag, test, id, aria, text, visible)| {
                    let mut attributes = BTreeMap::new();
                    if let Some(t) = test {
                        attributes.insert("data-test".into(), t.into());
                    }
                    if let Some(i) = id {
                        attributes.insert("id".into(), i.into());
                    }
                    if let Some(a) = aria {
                        attributes.insert("aria-label".into(), a.into());
                    }
                    Element { tag: tag.into(), attributes, text: text.into(), visible, children: vec![] }
                });
            leaf.prop_recursive(4, 40, 4, |inner| {
                (inner.clone(), prop::collection::vec(inner, 0..4)).prop_map(|(mut parent, children)| {
                    parent.children = children;
                    parent
                })
            })
        }

        pub(crate) fn selector() -> impl Strategy<Value = SelectorExpr> {
            prop_oneof![
                prop::sample::select(vec!["x", "y", "z"]).prop_map(|id| SelectorExpr::ById { id: id.into() }),
                prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(|v| SelectorExpr::ByTestAttr { value: v.into() }),
                (prop::sample::select(vec!["button", "link", "row", "textbox"]), prop::option::of(prop::sample::select(WORDS.to_vec())))
                    .prop_map(|(r, n)| SelectorExpr::ByRole { role: r.into(), name: n.map(Into::into) }),
                (prop::sample::select(vec!["Save", "save", "Run", "changes"]), any::<bool>())
                    .prop_map(|(t, exact)| SelectorExpr::ByText { text: t.into(), exact }),
            ]
        }

        /// Counts matches by flattening the tree first.
        fn brute_force(expr: &SelectorExpr, dom: &DomSnapshot) -> usize {
            let mut stack = vec![&dom.root];
            let mut n = 0;
            while let Some(e) = stack.pop() {
                n += usize::from(e.matches(expr));
                stack.extend(e.children.iter());
            }
            n
        }

        proptest! {
            #[test]
            fn batch_equals_map(root in element(), exprs in prop::collection::vec(selector(), 0..6)) {
                let dom = DomSnapshot { root };
                let before = dom.clone();
                let batch = batch_verify(&exprs, &dom);
                let mapped: Vec<_> = exprs.iter().map(|e| verify_selector(e, &dom)).collect();
                prop_assert_eq!(&batch, &mapped);
                prop_assert_eq!(&dom, &before);
                for (e, r) in exprs.iter().zip(&batch) {
                    prop_assert_eq!(r.matched_paths.len(), brute_force(e, &dom));
                    prop_assert_eq!(r.status == VerificationStatus::VerifiedUnique, r.matched_paths.len() == 1);
                    for p in &r.matched_paths {
                        prop_assert!(dom.resolve(p).unwrap().matches(e));
                    }
                }
            }

            #[test]
            fn display_parses_back(e in selector()) {
                prop_assert_eq!(parse_selector(&e.to_string()).unwrap(), e);
            }
        }
    }
}
