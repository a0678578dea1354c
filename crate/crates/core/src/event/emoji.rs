//! Emoji detection for comment bodies.
//!
//! A post counts as containing an emoji if it has at least one code point in
//! [`EMOJI_RANGES`] or a GitHub-style `:shortcode:` (letters required, so
//! clock times like `12:30:45` do not match).

use std::sync::OnceLock;

use regex::Regex;

/// Inclusive code-point ranges treated as emoji.
pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x1F1E6, 0x1F1FF), // regional indicators (flags)
    (0x1F300, 0x1F5FF), // misc symbols and pictographs
    (0x1F600, 0x1F64F), // emoticons
    (0x1F680, 0x1F6FF), // transport and map
    (0x1F900, 0x1F9FF), // supplemental symbols and pictographs
    (0x1FA70, 0x1FAFF), // symbols and pictographs extended-A
    (0x2600, 0x26FF),   // misc symbols
    (0x2700, 0x27BF),   // dingbats
    (0x2B50, 0x2B50),   // star
    (0x2B55, 0x2B55),   // heavy circle
];

fn shortcode() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r":[a-z0-9_+\-]*[a-z][a-z0-9_+\-]*:").expect("valid regex"))
}

pub fn is_emoji_char(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

pub fn contains_emoji(text: &str) -> bool {
    text.chars().any(is_emoji_char) || shortcode().is_match(text)
}
