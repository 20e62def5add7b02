//! Porter (1980) suffix-stripping stemmer, steps 1a through 5b.
//!
//! Within each step the first rule whose suffix matches decides the outcome:
//! if its condition fails the word is left as is for that step. Words of one
//! or two letters, and tokens containing anything but `a-z`, are returned
//! unchanged.

type Condition = fn(&[u8]) -> bool;

struct Rule {
    suffix: &'static [u8],
    replacement: &'static [u8],
    condition: Condition,
}

const fn rule(suffix: &'static str, replacement: &'static str, condition: Condition) -> Rule {
    Rule { suffix: suffix.as_bytes(), replacement: replacement.as_bytes(), condition }
}

fn always(_: &[u8]) -> bool {
    true
}

fn m_gt0(stem: &[u8]) -> bool {
    measure(stem) > 0
}

fn m_gt1(stem: &[u8]) -> bool {
    measure(stem) > 1
}

fn has_vowel(stem: &[u8]) -> bool {
    consonant_flags(stem).iter().any(|c| !c)
}

fn ion_condition(stem: &[u8]) -> bool {
    measure(stem) > 1 && matches!(stem.last(), Some(b's' | b't'))
}

/// `true` at consonant positions. `y` is a consonant at the start of a word
/// or after a vowel.
fn consonant_flags(word: &[u8]) -> Vec<bool> {
    let mut flags: Vec<bool> = Vec::with_capacity(word.len());
    for (i, &ch) in word.iter().enumerate() {
        let c = match ch {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !flags[i - 1],
            _ => true,
        };
        flags.push(c);
    }
    flags
}

/// The `m` in `[C](VC)^m[V]`.
fn measure(stem: &[u8]) -> usize {
    let flags = consonant_flags(stem);
    flags.windows(2).filter(|w| !w[0] && w[1]).count()
}

fn ends_double_consonant(word: &[u8]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && consonant_flags(word)[n - 1]
}

/// `*o`: ends consonant-vowel-consonant, the last not `w`, `x` or `y`.
fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    if n < 3 {
        return false;
    }
    let f = consonant_flags(word);
    f[n - 3] && !f[n - 2] && f[n - 1] && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

fn apply_rules(word: &mut Vec<u8>, rules: &[Rule]) {
    for r in rules {
        if word.ends_with(r.suffix) {
            let stem_len = word.len() - r.suffix.len();
            if (r.condition)(&word[..stem_len]) {
                word.truncate(stem_len);
                word.extend_from_slice(r.replacement);
            }
            return;
        }
    }
}

const STEP1A: &[Rule] =
    &[rule("sses", "ss", always), rule("ies", "i", always), rule("ss", "ss", always), rule("s", "", always)];

fn step1b(word: &mut Vec<u8>) {
    if word.ends_with(b"eed") {
        let stem_len = word.len() - 3;
        if measure(&word[..stem_len]) > 0 {
            word.truncate(stem_len + 2);
        }
        return;
    }
    let stripped = [&b"ed"[..], b"ing"].iter().find_map(|suffix| {
        if word.ends_with(suffix) && has_vowel(&word[..word.len() - suffix.len()]) {
            Some(word.len() - suffix.len())
        } else {
            None
        }
    });
    let Some(stem_len) = stripped else { return };
    word.truncate(stem_len);

    if word.ends_with(b"at") || word.ends_with(b"bl") || word.ends_with(b"iz") {
        word.push(b'e');
    } else if ends_double_consonant(word) {
        if !matches!(word.last(), Some(b'l' | b's' | b'z')) {
            word.pop();
        }
    } else if measure(word) == 1 && ends_cvc(word) {
        word.push(b'e');
    }
}

const STEP1C: &[Rule] = &[rule("y", "i", has_vowel)];

const STEP2: &[Rule] = &[
    rule("ational", "ate", m_gt0),
    rule("tional", "tion", m_gt0),
    rule("enci", "ence", m_gt0),
    rule("anci", "ance", m_gt0),
    rule("izer", "ize", m_gt0),
    rule("abli", "able", m_gt0),
    rule("alli", "al", m_gt0),
    rule("entli", "ent", m_gt0),
    rule("eli", "e", m_gt0),
    rule("ousli", "ous", m_gt0),
    rule("ization", "ize", m_gt0),
    rule("ation", "ate", m_gt0),
    rule("ator", "ate", m_gt0),
    rule("alism", "al", m_gt0),
    rule("iveness", "ive", m_gt0),
    rule("fulness", "ful", m_gt0),
    rule("ousness", "ous", m_gt0),
    rule("aliti", "al", m_gt0),
    rule("iviti", "ive", m_gt0),
    rule("biliti", "ble", m_gt0),
];

const STEP3: &[Rule] = &[
    rule("icate", "ic", m_gt0),
    rule("ative", "", m_gt0),
    rule("alize", "al", m_gt0),
    rule("iciti", "ic", m_gt0),
    rule("ical", "ic", m_gt0),
    rule("ful", "", m_gt0),
    rule("ness", "", m_gt0),
];

const STEP4: &[Rule] = &[
    rule("al", "", m_gt1),
    rule("ance", "", m_gt1),
    rule("ence", "", m_gt1),
    rule("er", "", m_gt1),
    rule("ic", "", m_gt1),
    rule("able", "", m_gt1),
    rule("ible", "", m_gt1),
    rule("ant", "", m_gt1),
    rule("ement", "", m_gt1),
    rule("ment", "", m_gt1),
    rule("ent", "", m_gt1),
    rule("ion", "", ion_condition),
    rule("ou", "", m_gt1),
    rule("ism", "", m_gt1),
    rule("ate", "", m_gt1),
    rule("iti", "", m_gt1),
    rule("ous", "", m_gt1),
    rule("ive", "", m_gt1),
    rule("ize", "", m_gt1),
];

fn step5a(word: &mut Vec<u8>) {
    if word.last() == Some(&b'e') {
        let stem = &word[..word.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            word.pop();
        }
    }
}

fn step5b(word: &mut Vec<u8>) {
    if word.ends_with(b"ll") && measure(&word[..word.len() - 1]) > 1 {
        word.pop();
    }
}

/// Stems one lowercase token.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut w = token.as_bytes().to_vec();
    apply_rules(&mut w, STEP1A);
    step1b(&mut w);
    apply_rules(&mut w, STEP1C);
    apply_rules(&mut w, STEP2);
    apply_rules(&mut w, STEP3);
    apply_rules(&mut w, STEP4);
    step5a(&mut w);
    step5b(&mut w);
    String::from_utf8(w).expect("ASCII in, ASCII out")
}
