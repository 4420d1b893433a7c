//! HTML-style tag codec for model output.
//!
//! Model replies carry artifacts in a small tag language: case-sensitive,
//! well-nested tags with no attributes. Parsing is schema-driven so stray
//! prose around (or between) the expected tags is ignored and a `<` inside a
//! body never derails the scan. This is not an HTML parser and does not try
//! to be one.

use crate::error::Error;
use crate::Result;

/// One parsed tag. Leaves hold `text` (trimmed); parents hold `children`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagNode {
    pub name: String,
    pub text: String,
    pub children: Vec<TagNode>,
}

impl TagNode {
    pub fn leaf(name: impl Into<String>, text: impl Into<String>) -> Self {
        TagNode {
            name: name.into(),
            text: text.into(),
            children: Vec::new(),
        }
    }

    pub fn parent(name: impl Into<String>, children: Vec<TagNode>) -> Self {
        TagNode {
            name: name.into(),
            text: String::new(),
            children,
        }
    }

    /// First child with the given name, if any.
    pub fn child(&self, name: &str) -> Option<&TagNode> {
        self.children.iter().find(|c| c.name == name)
    }

    /// Text of the first child with the given name, or "".
    pub fn child_text(&self, name: &str) -> &str {
        self.child(name).map(|c| c.text.as_str()).unwrap_or("")
    }
}

/// A parsed document: the schema's tags, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagDocument {
    pub roots: Vec<TagNode>,
}

impl TagDocument {
    pub fn new(roots: Vec<TagNode>) -> Self {
        TagDocument { roots }
    }

    pub fn root(&self, name: &str) -> Option<&TagNode> {
        self.roots.iter().find(|r| r.name == name)
    }
}

/// What tag names a rule accepts.
#[derive(Debug, Clone, Copy)]
pub enum NamePattern {
    /// Exact name, e.g. `advice`.
    Literal(&'static str),
    /// Prefix plus a positive integer, e.g. `character_1`, `character_2`.
    IndexedPrefix(&'static str),
    /// `plot_<n>` or `plot_<n><letter>`, e.g. `plot_1`, `plot_1a`.
    PlotTag,
}

impl NamePattern {
    fn matches(&self, name: &str) -> bool {
        match self {
            NamePattern::Literal(s) => name == *s,
            NamePattern::IndexedPrefix(p) => name
                .strip_prefix(p)
                .map(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
                .unwrap_or(false),
            NamePattern::PlotTag => {
                let Some(rest) = name.strip_prefix("plot_") else {
                    return false;
                };
                let digits: usize = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
                if digits == 0 {
                    return false;
                }
                let tail = &rest[digits..];
                tail.is_empty() || (tail.len() == 1 && tail.bytes().all(|b| b.is_ascii_lowercase()))
            }
        }
    }

    fn describe(&self) -> String {
        match self {
            NamePattern::Literal(s) => (*s).to_string(),
            NamePattern::IndexedPrefix(p) => format!("{p}N"),
            NamePattern::PlotTag => "plot_N[a]".to_string(),
        }
    }
}

/// How many occurrences a rule allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    One,
    AtLeastOne,
    Optional,
    Any,
}

impl Arity {
    fn min(self) -> usize {
        match self {
            Arity::One | Arity::AtLeastOne => 1,
            Arity::Optional | Arity::Any => 0,
        }
    }

    fn max(self) -> Option<usize> {
        match self {
            Arity::One | Arity::Optional => Some(1),
            Arity::AtLeastOne | Arity::Any => None,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Arity::One => "exactly 1",
            Arity::AtLeastOne => "at least 1",
            Arity::Optional => "at most 1",
            Arity::Any => "any number",
        }
    }
}

/// One expected tag (possibly a family of names) and its children grammar.
#[derive(Debug, Clone)]
pub struct TagRule {
    pub pattern: NamePattern,
    pub arity: Arity,
    pub children: Vec<TagRule>,
}

impl TagRule {
    pub fn leaf(pattern: NamePattern, arity: Arity) -> Self {
        TagRule {
            pattern,
            arity,
            children: Vec::new(),
        }
    }

    pub fn parent(pattern: NamePattern, arity: Arity, children: Vec<TagRule>) -> Self {
        TagRule {
            pattern,
            arity,
            children,
        }
    }
}

/// The grammar for one artifact kind.
#[derive(Debug, Clone)]
pub struct TagSchema {
    pub name: &'static str,
    pub roots: Vec<TagRule>,
}

/// Parse `raw` against `schema`. Prose outside the expected tags is ignored;
/// tag names are case-sensitive; errors carry byte offsets into `raw`.
pub fn parse_tag_document(raw: &str, schema: &TagSchema) -> Result<TagDocument> {
    let roots = scan_level(raw, 0, &schema.roots)?;
    Ok(TagDocument::new(roots))
}

fn scan_level(src: &str, base: usize, rules: &[TagRule]) -> Result<Vec<TagNode>> {
    let mut nodes = Vec::new();
    let mut hits: Vec<(usize, usize)> = Vec::new(); // (rule index, offset)
    let mut pos = 0;
    while let Some(rel) = src[pos..].find('<') {
        let at = pos + rel;
        let Some((name, open_len)) = read_open_tag(&src[at..]) else {
            pos = at + 1;
            continue;
        };
        let Some(rule_idx) = rules.iter().position(|r| r.pattern.matches(name)) else {
            pos = at + 1;
            continue;
        };
        let close = format!("</{name}>");
        let body_start = at + open_len;
        let Some(close_rel) = src[body_start..].find(&close) else {
            return Err(Error::UnbalancedTag {
                name: name.to_string(),
                offset: base + at,
            });
        };
        let body = &src[body_start..body_start + close_rel];
        let rule = &rules[rule_idx];
        let node = if rule.children.is_empty() {
            TagNode::leaf(name, body.trim())
        } else {
            TagNode::parent(name, scan_level(body, base + body_start, &rule.children)?)
        };
        hits.push((rule_idx, base + at));
        nodes.push(node);
        pos = body_start + close_rel + close.len();
    }
    for (idx, rule) in rules.iter().enumerate() {
        let found = hits.iter().filter(|(i, _)| *i == idx).count();
        if found < rule.arity.min() {
            return Err(Error::MissingTag {
                name: rule.pattern.describe(),
                offset: base,
            });
        }
        if let Some(max) = rule.arity.max() {
            if found > max {
                let offset = hits
                    .iter()
                    .filter(|(i, _)| *i == idx)
                    .nth(max)
                    .map(|(_, o)| *o)
                    .unwrap_or(base);
                return Err(Error::ArityViolation {
                    name: rule.pattern.describe(),
                    offset,
                    expected: rule.arity.describe().to_string(),
                    found,
                });
            }
        }
    }
    Ok(nodes)
}

/// At a `<`, try to read `<name>` where name is `[A-Za-z0-9_]+`.
/// Returns (name, byte length of the open tag).
fn read_open_tag(src: &str) -> Option<(&str, usize)> {
    let rest = src.strip_prefix('<')?;
    let end = rest
        .bytes()
        .position(|b| !(b.is_ascii_alphanumeric() || b == b'_'))?;
    if end == 0 || rest.as_bytes()[end] != b'>' {
        return None;
    }
    Some((&rest[..end], end + 2))
}

/// Canonical rendering: "\n" line endings, one tag per line, no indentation.
/// Empty leaves render inline as `<name></name>`; single-line leaves inline;
/// multi-line leaves put the body between the tags on its own lines.
pub fn render(doc: &TagDocument) -> String {
    let mut out = String::new();
    for root in &doc.roots {
        render_node(root, &mut out);
    }
    out
}

fn render_node(node: &TagNode, out: &mut String) {
    if !node.children.is_empty() {
        out.push_str(&format!("<{}>\n", node.name));
        for child in &node.children {
            render_node(child, out);
        }
        out.push_str(&format!("</{}>\n", node.name));
    } else if node.text.contains('\n') {
        out.push_str(&format!("<{}>\n{}\n</{}>\n", node.name, node.text, node.name));
    } else {
        out.push_str(&format!("<{}>{}</{}>\n", node.name, node.text, node.name));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn advice_schema() -> TagSchema {
        TagSchema {
            name: "advice",
            roots: vec![TagRule::leaf(NamePattern::Literal("advice"), Arity::One)],
        }
    }

    fn characters_schema() -> TagSchema {
        TagSchema {
            name: "characters",
            roots: vec![TagRule::parent(
                NamePattern::Literal("characters"),
                Arity::One,
                vec![TagRule::parent(
                    NamePattern::IndexedPrefix("character_"),
                    Arity::AtLeastOne,
                    vec![
                        TagRule::leaf(NamePattern::Literal("full_name"), Arity::One),
                        TagRule::leaf(NamePattern::Literal("character_introduction"), Arity::One),
                    ],
                )],
            )],
        }
    }

    #[test]
    fn parses_leaf_with_surrounding_prose() {
        let doc = parse_tag_document(
            "Sure, here is my advice.\n<advice>None</advice>\nHope that helps!",
            &advice_schema(),
        )
        .unwrap();
        assert_eq!(doc.roots, vec![TagNode::leaf("advice", "None")]);
    }

    #[test]
    fn trims_leaf_bodies() {
        let doc = parse_tag_document("<advice>  none \n</advice>", &advice_schema()).unwrap();
        assert_eq!(doc.roots[0].text, "none");
    }

    #[test]
    fn missing_tag_reports_offset() {
        let err = parse_tag_document("no tags here", &advice_schema()).unwrap_err();
        match err {
            Error::MissingTag { name, offset } => {
                assert_eq!(name, "advice");
                assert_eq!(offset, 0);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn unbalanced_tag_reports_open_offset() {
        let err = parse_tag_document("xx<advice>None", &advice_schema()).unwrap_err();
        match err {
            Error::UnbalancedTag { name, offset } => {
                assert_eq!(name, "advice");
                assert_eq!(offset, 2);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn arity_violation_on_second_occurrence() {
        let raw = "<advice>a</advice><advice>b</advice>";
        let err = parse_tag_document(raw, &advice_schema()).unwrap_err();
        match err {
            Error::ArityViolation { name, offset, found, .. } => {
                assert_eq!(name, "advice");
                assert_eq!(offset, 18);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn tag_names_are_case_sensitive() {
        let err = parse_tag_document("<Advice>None</Advice>", &advice_schema()).unwrap_err();
        assert!(matches!(err, Error::MissingTag { .. }));
    }

    #[test]
    fn parses_nested_indexed_children() {
        let raw = "<characters>\n<character_1>\n<full_name>A B</full_name>\n\
                   <character_introduction>Intro.</character_introduction>\n</character_1>\n\
                   <character_2>\n<full_name>C D</full_name>\n\
                   <character_introduction>More.</character_introduction>\n</character_2>\n</characters>";
        let doc = parse_tag_document(raw, &characters_schema()).unwrap();
        let root = &doc.roots[0];
        assert_eq!(root.children.len(), 2);
        assert_eq!(root.children[0].name, "character_1");
        assert_eq!(root.children[0].child_text("full_name"), "A B");
        assert_eq!(root.children[1].child_text("character_introduction"), "More.");
    }

    #[test]
    fn stray_angle_brackets_in_prose_are_ignored() {
        let raw = "3 < 5, and <notatag -- anyway:\n<advice>use fewer twists</advice>";
        let doc = parse_tag_document(raw, &advice_schema()).unwrap();
        assert_eq!(doc.roots[0].text, "use fewer twists");
    }

    #[test]
    fn plot_tag_pattern() {
        let p = NamePattern::PlotTag;
        assert!(p.matches("plot_1"));
        assert!(p.matches("plot_12"));
        assert!(p.matches("plot_1a"));
        assert!(p.matches("plot_3z"));
        assert!(!p.matches("plot_"));
        assert!(!p.matches("plot_a"));
        assert!(!p.matches("plot_1A"));
        assert!(!p.matches("plot_1ab"));
        assert!(!p.matches("subplot_1"));
    }

    #[test]
    fn render_is_canonical() {
        let doc = TagDocument::new(vec![TagNode::parent(
            "detailed_performance",
            vec![
                TagNode::leaf("character", "Emma Taylor"),
                TagNode::leaf("action", "line one\nline two"),
                TagNode::leaf("parenthetical", ""),
                TagNode::leaf("dialogue", "Hello."),
            ],
        )]);
        let expected = "<detailed_performance>\n\
                        <character>Emma Taylor</character>\n\
                        <action>\nline one\nline two\n</action>\n\
                        <parenthetical></parenthetical>\n\
                        <dialogue>Hello.</dialogue>\n\
                        </detailed_performance>\n";
        assert_eq!(render(&doc), expected);
    }

    #[test]
    fn render_parse_is_a_fixpoint() {
        let raw = "noise <characters><character_1><full_name>A B</full_name>\
                   <character_introduction>x</character_introduction></character_1></characters> tail";
        let schema = characters_schema();
        let once = render(&parse_tag_document(raw, &schema).unwrap());
        let twice = render(&parse_tag_document(&once, &schema).unwrap());
        assert_eq!(once, twice);
    }
}
