//! Phrase normalization against a committed fixture whose stems come from
//! an independent Snowball implementation.

use hintbandit::Normalizer;

#[test]
fn fifty_phrase_fixture() {
    let norm = Normalizer::default();
    let text = include_str!("fixtures/normalization.tsv");
    let mut n = 0;
    let mut failures = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (phrase, expected) = line.split_once('\t').expect("two columns");
        let want: Vec<&str> = expected.split_whitespace().collect();
        let got = norm.normalize_phrase(phrase);
        if got != want {
            failures.push(format!("{phrase:?}: expected {want:?}, got {got:?}"));
        }
        n += 1;
    }
    assert_eq!(n, 50);
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn custom_tables_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let sw = dir.path().join("stop.txt");
    let lm = dir.path().join("lemmas.tsv");
    std::fs::write(&sw, "# custom\nthe\nblack\n").unwrap();
    std::fs::write(&lm, "penguins\tpenguin\n").unwrap();
    let norm = Normalizer::from_files(Some(&sw), Some(&lm)).unwrap();
    assert_eq!(norm.normalize_phrase("The black Penguins"), ["penguin"]);
    assert!(Normalizer::from_files(Some(&dir.path().join("nope")), None).is_err());
}
