//! Markup stripping for fetched web documents.

const ENTITIES: [(&str, &str); 10] = [
    ("&amp;", "&"),
    ("&lt;", "<"),
    ("&gt;", ">"),
    ("&quot;", "\""),
    ("&apos;", "'"),
    ("&#39;", "'"),
    ("&nbsp;", " "),
    ("&ndash;", "\u{2013}"),
    ("&mdash;", "\u{2014}"),
    ("&hellip;", "\u{2026}"),
];

/// Elements whose content is dropped together with the tags.
const RAW_TEXT_ELEMENTS: [&str; 2] = ["script", "style"];

/// Removes tags, script/style bodies and comments, decodes the common
/// entities and collapses whitespace.
///
/// The single-pass cleaner is iterated to a fixpoint, so text that decodes
/// into markup (`&lt;b&gt;`) is stripped too and the function is idempotent.
/// Every pass that changes its input makes it strictly shorter, which bounds
/// the loop.
pub fn clean_html(raw: &str) -> String {
    let mut current = clean_once(raw);
    loop {
        let next = clean_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn clean_once(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while let Some(c) = s[i..].chars().next() {
        match c {
            '<' => match tag_end(s, i) {
                Some(end) => {
                    out.push(' ');
                    i = end;
                }
                None => {
                    out.push('<');
                    i += 1;
                }
            },
            '&' => match ENTITIES.iter().find(|(name, _)| s[i..].starts_with(name)) {
                Some((name, value)) => {
                    out.push_str(value);
                    i += name.len();
                }
                None => {
                    out.push('&');
                    i += 1;
                }
            },
            c => {
                out.push(c);
                i += c.len_utf8();
            }
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// If a tag (or comment, or raw-text element) starts at byte `start`, returns
/// the byte offset just past it. A `<` not followed by a tag-like character,
/// or with no closing `>`, is literal text.
fn tag_end(s: &str, start: usize) -> Option<usize> {
    let rest = &s[start + 1..];
    if let Some(comment) = rest.strip_prefix("!--") {
        let close = comment.find("-->").map_or(s.len(), |p| start + 4 + p + 3);
        return Some(close);
    }
    let first = rest.chars().next()?;
    if !(first.is_ascii_alphabetic() || matches!(first, '/' | '!' | '?')) {
        return None;
    }
    let end = start + 1 + rest.find('>')? + 1;

    let inner = &s[start + 1..end - 1];
    let name: String = inner
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    if RAW_TEXT_ELEMENTS.contains(&name.as_str()) && !inner.ends_with('/') {
        let closing = format!("</{name}");
        let lower_tail = s[end..].to_ascii_lowercase();
        return Some(match lower_tail.find(&closing) {
            Some(p) => {
                let after = end + p;
                s[after..].find('>').map_or(s.len(), |q| after + q + 1)
            }
            None => s.len(),
        });
    }
    Some(end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_tags() {
        assert_eq!(clean_html("<b>apple</b> pie"), "apple pie");
    }

    #[test]
    fn decodes_entities() {
        assert_eq!(clean_html("a &amp; b"), "a & b");
        assert_eq!(clean_html("it&#39;s &quot;x&quot;&nbsp;y"), "it's \"x\" y");
        assert_eq!(clean_html("&copy; 2012 &unknown;"), "&copy; 2012 &unknown;");
    }

    #[test]
    fn drops_script_and_collapses_whitespace() {
        assert_eq!(clean_html("<script>x=1</script>hello  <p>world</p>"), "hello world");
        assert_eq!(clean_html("<STYLE type=x>p{}</Style>\n\t a"), "a");
        assert_eq!(clean_html("a<script>never closed"), "a");
    }

    #[test]
    fn malformed_markup_is_best_effort() {
        assert_eq!(clean_html("a < b and c > d"), "a < b and c > d");
        assert_eq!(clean_html("x <unterminated"), "x <unterminated");
        assert_eq!(clean_html("a<!-- hidden -->b"), "a b");
        assert_eq!(clean_html("a<!-- open"), "a");
    }

    #[test]
    fn escaped_markup_does_not_survive() {
        assert_eq!(clean_html("&lt;b&gt;bold&lt;/b&gt;"), "bold");
    }

    proptest! {
        #[test]
        fn idempotent(s in "[a-zA-Z <>/&;!\\-#39 ]{0,60}|(<script>|</script>|&amp;|&lt;|&gt;|<b>|x| ){0,20}") {
            let once = clean_html(&s);
            prop_assert_eq!(clean_html(&once), once);
        }
    }
}
