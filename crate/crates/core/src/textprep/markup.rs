//! HTML clean-up for forum bodies: code blocks are dropped, other tags
//! are removed keeping their text, entities are decoded.

const DROP_BLOCKS: [&str; 2] = ["code", "pre"];

/// Tag name at `s` (just after `<` or `</`), lowercased.
fn tag_name(s: &str) -> String {
    s.chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Byte offset just past the `>` closing the tag that starts at `at`,
/// or the end of input for an unterminated tag.
fn tag_end(s: &str, at: usize) -> usize {
    s[at..].find('>').map_or(s.len(), |p| at + p + 1)
}

fn looks_like_tag(rest: &str) -> bool {
    let mut chars = rest.chars();
    chars.next(); // '<'
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?')
}

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
            u32::from_str_radix(hex, 16).ok()?
        } else {
            num.parse().ok()?
        };
        return char::from_u32(code);
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        "ndash" => '–',
        "mdash" => '—',
        "hellip" => '…',
        "copy" => '©',
        "reg" => '®',
        "laquo" => '«',
        "raquo" => '»',
        "lsquo" => '‘',
        "rsquo" => '’',
        "ldquo" => '“',
        "rdquo" => '”',
        _ => return None,
    })
}

fn single_pass(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        let rest = &input[i..];
        let c = rest.chars().next().expect("in bounds");
        if c == '<' && looks_like_tag(rest) {
            let closing = rest[1..].starts_with('/');
            let name = tag_name(&rest[if closing { 2 } else { 1 }..]);
            let end = tag_end(input, i);
            if !closing && DROP_BLOCKS.contains(&name.as_str()) {
                // skip to the matching close tag, or to the end
                let close = format!("</{name}");
                let lower = input[end..].to_ascii_lowercase();
                i = match lower.find(&close) {
                    Some(p) => tag_end(input, end + p),
                    None => input.len(),
                };
            } else {
                i = end;
            }
            out.push(' ');
            continue;
        }
        if c == '&' {
            if let Some(semi) = rest[1..].find(';').filter(|&p| p <= 10) {
                if let Some(ch) = decode_entity(&rest[1..1 + semi]) {
                    out.push(ch);
                    i += semi + 2;
                    continue;
                }
            }
        }
        out.push(c);
        i += c.len_utf8();
    }
    // decoded angle brackets must not form new tags
    let out: String = out.chars().map(|c| if c == '<' || c == '>' { ' ' } else { c }).collect();
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes code/pre blocks with their content and all other tags, decodes
/// entities and collapses whitespace. Iterated to a fixed point, so the
/// result is stable under a second application.
pub fn strip_markup(body_raw: &str) -> String {
    let mut cur = single_pass(body_raw);
    loop {
        let next = single_pass(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}
