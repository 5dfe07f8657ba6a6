/// Splits `text` into lowercased runs of alphabetic characters.
///
/// Digits, punctuation and whitespace all act as separators. No stopword
/// removal or stemming is applied, so the same rule works for any script.
pub fn tokenize(text: &str) -> Vec<String> {
    // Lowercase the whole text first so context-sensitive mappings (final
    // sigma) see real word boundaries.
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
