use super::parse::{normalized_body, parse_sva};
use super::property::SvaProperty;
use super::SvaError;

/// Append `props` to a property file. Names or bodies already present are
/// skipped, so merging the same list twice changes nothing. Inside a wrapper
/// module the blocks go right before `endmodule`.
pub fn merge_into_file(sva_text: &str, props: &[SvaProperty]) -> Result<String, SvaError> {
    let parsed = parse_sva(sva_text)?;
    let res = &parsed.resources;
    let mut names: Vec<&str> = res.property_names().collect();
    let mut bodies: Vec<String> = res.existing_properties.iter().map(|p| p.body.clone()).collect();
    let mut blocks: Vec<String> = Vec::new();
    for p in props {
        let body = normalized_body(p, &res.macros)?;
        if names.contains(&p.name.as_str()) || bodies.contains(&body) {
            continue;
        }
        names.push(&p.name);
        bodies.push(body);
        blocks.push(p.render_with_trace());
    }
    if blocks.is_empty() {
        return Ok(sva_text.to_string());
    }
    let (head, tail) = match parsed.wrapper_end {
        Some(off) => sva_text.split_at(off),
        None => (sva_text, ""),
    };
    let mut out = String::with_capacity(sva_text.len() + blocks.iter().map(String::len).sum::<usize>() + 8);
    out.push_str(head);
    if !head.is_empty() {
        if !head.ends_with('\n') {
            out.push('\n');
        }
        if !head.trim_end_matches([' ', '\t']).ends_with("\n\n") {
            out.push('\n');
        }
    }
    out.push_str(&blocks.join("\n"));
    if !tail.is_empty() {
        out.push('\n');
    }
    out.push_str(tail);
    Ok(out)
}
