use microevent::textprep::porter_stem;

/// Word/stem pairs produced by an independent implementation of the
/// original Porter algorithm.
#[test]
fn porter_reference_vocabulary() {
    let table = include_str!("data/porter_reference.tsv");
    let mut mismatches = Vec::new();
    let mut n = 0;
    for line in table.lines().filter(|l| !l.is_empty()) {
        let (word, stem) = line.split_once('\t').expect("two columns");
        n += 1;
        let got = porter_stem(word);
        if got != stem {
            mismatches.push(format!("{word}: {got} != {stem}"));
        }
    }
    assert!(n > 7000);
    assert!(mismatches.is_empty(), "{} mismatches: {:?}", mismatches.len(), &mismatches[..mismatches.len().min(20)]);
}

#[test]
fn classic_examples() {
    for (w, s) in [
        ("caresses", "caress"),
        ("ponies", "poni"),
        ("relational", "relat"),
        ("conditional", "condit"),
        ("generalization", "gener"),
        ("hopping", "hop"),
        ("filing", "file"),
        ("agreed", "agre"),
    ] {
        assert_eq!(porter_stem(w), s, "{w}");
    }
}
