//! Alphabets and finite words.
//!
//! Positions of a word `u = u_0 u_1 ... u_{n-1}` are indexed `0..n-1` and
//! double as the universe of the logical structure associated with `u`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("alphabet must be nonempty")]
    EmptyAlphabet,
    #[error("alphabet letters must be lowercase ASCII, got {0:?}")]
    BadLetter(char),
    #[error("duplicate letter {0:?} in alphabet")]
    DuplicateLetter(char),
    #[error("letter {0:?} is not in the alphabet")]
    LetterNotInAlphabet(char),
}

/// An ordered set of single-character letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    letters: Vec<char>,
}

impl Alphabet {
    /// Builds an alphabet from the given letters, sorted and checked for
    /// duplicates. Letters must be lowercase ASCII.
    pub fn new(letters: impl IntoIterator<Item = char>) -> Result<Self, WordError> {
        let mut letters: Vec<char> = letters.into_iter().collect();
        letters.sort_unstable();
        if letters.is_empty() {
            return Err(WordError::EmptyAlphabet);
        }
        for pair in letters.windows(2) {
            if pair[0] == pair[1] {
                return Err(WordError::DuplicateLetter(pair[0]));
            }
        }
        for &l in &letters {
            if !l.is_ascii_lowercase() {
                return Err(WordError::BadLetter(l));
            }
        }
        Ok(Alphabet { letters })
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn contains(&self, letter: char) -> bool {
        self.letters.binary_search(&letter).is_ok()
    }

    /// Parses a word, checking every symbol against the alphabet.
    pub fn word(&self, text: &str) -> Result<Word, WordError> {
        let mut symbols = Vec::with_capacity(text.len());
        for c in text.chars() {
            if !self.contains(c) {
                return Err(WordError::LetterNotInAlphabet(c));
            }
            symbols.push(c);
        }
        Ok(Word { symbols })
    }

    /// Number of words of the given length (`|A|^len`), or `None` on overflow.
    pub fn count_words(&self, len: usize) -> Option<u64> {
        let base = self.letters.len() as u64;
        let mut n: u64 = 1;
        for _ in 0..len {
            n = n.checked_mul(base)?;
        }
        Some(n)
    }

    /// Decodes the `index`-th word of the given length in lexicographic
    /// order (letters ordered as in the alphabet).
    pub fn word_at(&self, len: usize, index: u64) -> Word {
        let base = self.letters.len() as u64;
        let mut symbols = vec![self.letters[0]; len];
        let mut rest = index;
        for pos in (0..len).rev() {
            symbols[pos] = self.letters[(rest % base) as usize];
            rest /= base;
        }
        debug_assert_eq!(rest, 0, "word index out of range");
        Word { symbols }
    }
}

/// A finite word; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    symbols: Vec<char>,
}

impl Word {
    /// Builds a word without validating symbols against an alphabet.
    pub fn from_symbols(symbols: Vec<char>) -> Self {
        Word { symbols }
    }

    pub fn empty() -> Self {
        Word { symbols: Vec::new() }
    }

    pub fn len(&self) -> u64 {
        self.symbols.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Letter at a position. Panics on out-of-range access: the evaluator is
    /// required never to read positions outside the universe.
    pub fn letter(&self, pos: u64) -> char {
        self.symbols[usize::try_from(pos).expect("position exceeds address space")]
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    /// `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word { symbols }
    }

    /// `self · letter^count · other`.
    pub fn concat_padded(&self, letter: char, count: u64, other: &Word) -> Word {
        let count = usize::try_from(count).expect("padding exceeds address space");
        let mut symbols = Vec::with_capacity(self.symbols.len() + count + other.symbols.len());
        symbols.extend_from_slice(&self.symbols);
        symbols.extend(std::iter::repeat(letter).take(count));
        symbols.extend_from_slice(&other.symbols);
        Word { symbols }
    }

    /// Copy of the word with `letter` inserted at `pos` (0..=len).
    pub fn insert(&self, pos: usize, letter: char) -> Word {
        let mut symbols = self.symbols.clone();
        symbols.insert(pos, letter);
        Word { symbols }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.is_empty() {
            // Make the empty word visible in reports.
            write!(f, "ε")
        } else {
            for c in &self.symbols {
                write!(f, "{c}")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabet_rejects_bad_input() {
        assert_eq!(Alphabet::new([]), Err(WordError::EmptyAlphabet));
        assert_eq!(Alphabet::new(['a', 'a']), Err(WordError::DuplicateLetter('a')));
        assert_eq!(Alphabet::new(['A']), Err(WordError::BadLetter('A')));
    }

    #[test]
    fn word_validation() {
        let ab = Alphabet::new(['b', 'a']).unwrap();
        assert_eq!(ab.letters(), &['a', 'b']);
        assert!(ab.word("abba").is_ok());
        assert_eq!(ab.word("abc"), Err(WordError::LetterNotInAlphabet('c')));
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let ab = Alphabet::new(['a', 'b']).unwrap();
        assert_eq!(ab.count_words(3), Some(8));
        let words: Vec<String> = (0..8).map(|i| ab.word_at(3, i).to_string()).collect();
        assert_eq!(words[0], "aaa");
        assert_eq!(words[1], "aab");
        assert_eq!(words[7], "bbb");
        let mut sorted = words.clone();
        sorted.sort();
        assert_eq!(words, sorted);
    }

    #[test]
    fn padding_concat() {
        let ab = Alphabet::new(['a', 'b', 'c']).unwrap();
        let u = ab.word("aa").unwrap();
        let v = ab.word("bb").unwrap();
        assert_eq!(u.concat_padded('c', 3, &v).to_string(), "aacccbb");
        assert_eq!(u.concat(&v).to_string(), "aabb");
    }
}
