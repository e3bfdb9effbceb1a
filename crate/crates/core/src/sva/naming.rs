use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::parse::{normalized_body, SvaResources};
use super::property::SvaProperty;

const STOP_WORDS: &[&str] = &["a", "an", "the", "its", "is", "by", "on", "this", "when", "while", "every"];

/// Up to four lowercase words of `behavior`, joined by underscores.
pub fn behavior_slug(behavior: &str) -> String {
    let words: Vec<String> = behavior
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
        .filter(|w| !STOP_WORDS.contains(&w.as_str()))
        .take(4)
        .collect();
    if words.is_empty() {
        "prop".to_string()
    } else {
        words.join("_")
    }
}

/// Drop properties whose canonical body is already present and give the rest
/// collision-free names. Properties that arrive with a free name keep it.
pub fn name_and_dedup(props: Vec<SvaProperty>, res: &SvaResources, seed: u64) -> Vec<SvaProperty> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: Vec<String> = res.property_names().map(str::to_string).collect();
    let mut bodies: Vec<(String, crate::sva::PropKind)> = Vec::new();
    let mut out = Vec::new();
    for mut p in props {
        let body = normalized_body(&p, &res.macros).unwrap_or_else(|_| p.body());
        if res.has_body(&body) || bodies.iter().any(|(b, k)| *b == body && *k == p.kind) {
            continue;
        }
        if p.name.is_empty() || taken.contains(&p.name) {
            let slug = behavior_slug(&p.behavior);
            p.name = loop {
                let candidate = format!("p_{slug}_{:06x}", rng.random::<u32>() & 0xff_ffff);
                if !taken.contains(&candidate) {
                    break candidate;
                }
            };
        }
        taken.push(p.name.clone());
        bodies.push((body, p.kind));
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slug_words() {
        assert_eq!(behavior_slug("c takes d1 when its guard holds"), "c_takes_d1_guard");
        assert_eq!(behavior_slug(""), "prop");
    }
}
