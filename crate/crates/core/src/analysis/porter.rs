//! The Porter stemming algorithm (the original 1980 definition).
//!
//! Words are reduced to their root form through five suffix-stripping steps
//! driven by the measure m of the stem, where a word is analyzed as
//! [C](VC)^m[V]. The per-step rules and their published example tables are
//! reproduced exactly; each step is exposed separately so the tests can
//! check the steps against those tables.
//!
//! The stemmer operates on lowercase ASCII letters. Inputs are
//! lowercase-folded first; inputs containing anything but ASCII letters
//! (digits, hyphens, non-ASCII) are returned folded but otherwise
//! unchanged, since the algorithm is defined on plain words only.

/// Stems one word. Words shorter than three letters are left alone.
pub fn porter_stem(word: &str) -> String {
    let lower = word.to_ascii_lowercase();
    if lower.len() < 3 || !lower.bytes().all(|b| b.is_ascii_lowercase()) {
        return lower;
    }
    step5b(&step5a(&step4(&step3(&step2(&step1c(&step1b(&step1a(&lower))))))))
}

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// The measure m of w[..len]: number of VC blocks in [C](VC)^m[V].
fn measure(w: &[u8], len: usize) -> usize {
    let mut m = 0;
    let mut i = 0;
    while i < len && is_consonant(w, i) {
        i += 1;
    }
    loop {
        if i >= len {
            return m;
        }
        while i < len && !is_consonant(w, i) {
            i += 1;
        }
        if i >= len {
            return m;
        }
        m += 1;
        while i < len && is_consonant(w, i) {
            i += 1;
        }
    }
}

/// *v* — the stem w[..len] contains a vowel.
fn has_vowel(w: &[u8], len: usize) -> bool {
    (0..len).any(|i| !is_consonant(w, i))
}

/// *d — the stem ends with a double consonant.
fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// *o — the stem ends consonant-vowel-consonant where the final consonant
/// is not w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Applies `suffix -> replacement` when the remaining stem satisfies
/// `cond`. Returns None when the suffix does not match at all.
fn replace(
    word: &str,
    suffix: &str,
    replacement: &str,
    cond: impl Fn(&[u8], usize) -> bool,
) -> Option<String> {
    let stem_len = word.len().checked_sub(suffix.len())?;
    if !word.ends_with(suffix) {
        return None;
    }
    let bytes = word.as_bytes();
    if cond(bytes, stem_len) {
        Some(format!("{}{}", &word[..stem_len], replacement))
    } else {
        Some(word.to_string())
    }
}

/// Step 1a: plural endings. SSES->SS, IES->I, SS->SS, S->"".
pub fn step1a(word: &str) -> String {
    for (suffix, repl) in [("sses", "ss"), ("ies", "i"), ("ss", "ss"), ("s", "")] {
        if let Some(out) = replace(word, suffix, repl, |_, _| true) {
            return out;
        }
    }
    word.to_string()
}

/// Step 1b: -eed/-ed/-ing, with the cleanup sub-step after ed/ing removal.
pub fn step1b(word: &str) -> String {
    if let Some(out) = replace(word, "eed", "ee", |w, l| measure(w, l) > 0) {
        return out;
    }
    let stripped = [("ed", ""), ("ing", "")].iter().find_map(|(suffix, _)| {
        let stem_len = word.len().checked_sub(suffix.len())?;
        if word.ends_with(suffix) && has_vowel(word.as_bytes(), stem_len) {
            Some(word[..stem_len].to_string())
        } else {
            None
        }
    });
    match stripped {
        Some(stem) => step1b_cleanup(&stem),
        None => word.to_string(),
    }
}

/// The sub-step run only when step 1b removed -ed or -ing.
pub fn step1b_cleanup(stem: &str) -> String {
    for (suffix, repl) in [("at", "ate"), ("bl", "ble"), ("iz", "ize")] {
        if let Some(base) = stem.strip_suffix(suffix) {
            return format!("{base}{repl}");
        }
    }
    let bytes = stem.as_bytes();
    if ends_double_consonant(bytes) && !matches!(bytes[bytes.len() - 1], b'l' | b's' | b'z') {
        return stem[..stem.len() - 1].to_string();
    }
    if measure(bytes, bytes.len()) == 1 && ends_cvc(bytes) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Step 1c: (*v*) Y -> I.
pub fn step1c(word: &str) -> String {
    replace(word, "y", "i", has_vowel).unwrap_or_else(|| word.to_string())
}

const STEP2_RULES: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("entli", "ent"),
    ("eli", "e"),
    ("ousli", "ous"),
    ("ization", "ize"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("biliti", "ble"),
];

const STEP3_RULES: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

const STEP4_SUFFIXES: &[&str] = &[
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion", "ou",
    "ism", "ate", "iti", "ous", "ive", "ize",
];

fn apply_table(word: &str, rules: &[(&str, &str)], min_measure: usize) -> String {
    // Longest matching suffix wins; a matched suffix whose condition fails
    // ends the step without change.
    let best = rules
        .iter()
        .filter(|(suffix, _)| word.ends_with(suffix))
        .max_by_key(|(suffix, _)| suffix.len());
    match best {
        Some((suffix, repl)) => {
            let stem_len = word.len() - suffix.len();
            if measure(word.as_bytes(), stem_len) > min_measure {
                format!("{}{}", &word[..stem_len], repl)
            } else {
                word.to_string()
            }
        }
        None => word.to_string(),
    }
}

/// Step 2: double-suffix conflation, condition (m > 0).
pub fn step2(word: &str) -> String {
    apply_table(word, STEP2_RULES, 0)
}

/// Step 3: -icate/-ative/-alize/..., condition (m > 0).
pub fn step3(word: &str) -> String {
    apply_table(word, STEP3_RULES, 0)
}

/// Step 4: strips residual suffixes when m > 1; -ion additionally requires
/// the stem to end in s or t.
pub fn step4(word: &str) -> String {
    let best = STEP4_SUFFIXES
        .iter()
        .filter(|suffix| word.ends_with(*suffix))
        .max_by_key(|suffix| suffix.len());
    let Some(suffix) = best else {
        return word.to_string();
    };
    let stem_len = word.len() - suffix.len();
    let bytes = word.as_bytes();
    let ok = measure(bytes, stem_len) > 1
        && (*suffix != "ion" || matches!(bytes[stem_len.wrapping_sub(1)], b's' | b't'));
    if ok && stem_len > 0 {
        word[..stem_len].to_string()
    } else {
        word.to_string()
    }
}

/// Step 5a: (m>1) E -> ""; (m=1 and not *o) E -> "".
pub fn step5a(word: &str) -> String {
    if !word.ends_with('e') {
        return word.to_string();
    }
    let stem = &word.as_bytes()[..word.len() - 1];
    let m = measure(stem, stem.len());
    if m > 1 || (m == 1 && !ends_cvc(stem)) {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}

/// Step 5b: (m>1 and *d and *L) -> single letter.
pub fn step5b(word: &str) -> String {
    let bytes = word.as_bytes();
    if measure(bytes, bytes.len()) > 1
        && ends_double_consonant(bytes)
        && bytes[bytes.len() - 1] == b'l'
    {
        word[..word.len() - 1].to_string()
    } else {
        word.to_string()
    }
}
