#!/usr/bin/env python3
"""Regenerates the synthetic test fixtures under crates/core/tests/fixtures.

Output is deterministic; rerunning it must leave the tree unchanged.
"""

import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "fixtures"

# Nominal paradigms: ending per (case, number).
DECL1 = {
    ("Nom", "Sing"): "a", ("Gen", "Sing"): "ae", ("Acc", "Sing"): "am", ("Abl", "Sing"): "a",
    ("Nom", "Plur"): "ae", ("Gen", "Plur"): "arum", ("Acc", "Plur"): "as", ("Abl", "Plur"): "is",
}
DECL2 = {
    ("Nom", "Sing"): "us", ("Gen", "Sing"): "i", ("Acc", "Sing"): "um", ("Abl", "Sing"): "o",
    ("Nom", "Plur"): "i", ("Gen", "Plur"): "orum", ("Acc", "Plur"): "os", ("Abl", "Plur"): "is",
}
DECL3 = {
    ("Nom", "Sing"): "", ("Gen", "Sing"): "is", ("Acc", "Sing"): "em", ("Abl", "Sing"): "e",
    ("Nom", "Plur"): "es", ("Gen", "Plur"): "um", ("Acc", "Plur"): "es", ("Abl", "Plur"): "ibus",
}
NOUNS1 = ["ros", "terr", "ui", "ecclesi", "glori", "prouinci", "grati", "caus", "pecuni", "uit", "sententi", "iustici"]
NOUNS2 = ["domin", "popul", "ann", "fili", "seru", "mund", "amic", "episcop", "nunci"]
NOUNS3 = ["ciuitat", "ueritat", "potestat", "libertat", "uoluntat"]
ADJS = ["bon", "magn", "sanct", "nou", "alt", "plen"]
PROPN = ["Cracoui", "Poloni", "Gnezn"]

# Verb paradigms: (person, number, tense) -> ending.
CONJ1 = {
    (3, "Sing", "Pres"): "at", (3, "Plur", "Pres"): "ant", (1, "Sing", "Pres"): "o",
    (3, "Sing", "Past"): "auit", (3, "Sing", "Imp"): "abat",
}
CONJ3 = {
    (3, "Sing", "Pres"): "it", (3, "Plur", "Pres"): "unt", (1, "Sing", "Pres"): "o",
    (3, "Sing", "Past"): "it", (3, "Sing", "Imp"): "ebat", (1, "Sing", "Fut"): "am",
}
VERBS1 = ["am", "laud", "uoc", "port", "narr", "confirm", "don", "ordin"]
VERBS3 = ["duc", "mitt", "scrib", "reg", "dic", "adduc"]

FUNCTION = [
    ("in", "in", "ADP"), ("ad", "ad", "ADP"), ("cum", "cum", "ADP"), ("per", "per", "ADP"),
    ("de", "de", "ADP"), ("et", "et", "CCONJ"), ("sed", "sed", "CCONJ"), ("non", "non", "PART"),
    ("etiam", "etiam", "ADV"), ("tunc", "tunc", "ADV"), ("qui", "qui", "PRON"),
]


def feats(**kv):
    if not kv:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(kv.items(), key=lambda p: p[0].lower()))


def noun(rng, case=None, number=None):
    kind = rng.choice([1, 1, 2, 2, 3])
    case = case or rng.choice(["Nom", "Gen", "Acc", "Abl"])
    number = number or rng.choice(["Sing", "Sing", "Plur"])
    if kind == 1:
        stem = rng.choice(NOUNS1)
        form, lemma, gender = stem + DECL1[(case, number)], stem + "a", "Fem"
    elif kind == 2:
        stem = rng.choice(NOUNS2)
        form, lemma, gender = stem + DECL2[(case, number)], stem + "us", "Masc"
    else:
        stem = rng.choice(NOUNS3)
        nom = stem[:-1] + "s"
        end = DECL3[(case, number)]
        form, lemma, gender = (nom if end == "" else stem + end), nom, "Fem"
    return (form, lemma, "NOUN", feats(Case=case, Gender=gender, Number=number)), gender, case, number


def adj(rng, gender, case, number):
    stem = rng.choice(ADJS)
    table = DECL1 if gender == "Fem" else DECL2
    return (stem + table[(case, number)], stem + "us", "ADJ",
            feats(Case=case, Degree="Pos", Gender=gender, Number=number))


def verb(rng, number="Sing"):
    if rng.random() < 0.5:
        stem, table, lemma_end = rng.choice(VERBS1), CONJ1, "o"
    else:
        stem, table, lemma_end = rng.choice(VERBS3), CONJ3, "o"
    keys = [k for k in table if k[1] == number and k[0] == 3] or list(table)
    if rng.random() < 0.15:
        keys = [k for k in table if k[0] == 1]
    person, num, tense = rng.choice(keys)
    return (stem + table[(person, num, tense)], stem + lemma_end, "VERB",
            feats(Mood="Ind", Number=num, Person=str(person), Tense=tense, VerbForm="Fin", Voice="Act"))


def medievalize(form, rng, genre):
    """Scribal variants: ti->ci, initial u->v, ae->e."""
    if genre in ("Annals", "Biography", "Proceedings", "Normative", "Science"):
        if "ti" in form[1:] and rng.random() < 0.5:
            form = form[0] + form[1:].replace("ti", "ci")
        if form.startswith("u") and rng.random() < 0.6:
            form = "v" + form[1:]
        if form.endswith("ae") and rng.random() < 0.5:
            form = form[:-2] + "e"
    return form


def sentence(rng, genre=None, sym=False):
    toks = []
    if rng.random() < 0.3:
        toks.append(rng.choice(FUNCTION[5:]) + ("_",))
    subj, g, c, n = noun(rng, case="Nom")
    toks.append(subj)
    if rng.random() < 0.6:
        toks.append(adj(rng, g, c, n))
    if rng.random() < 0.5:
        toks.append(rng.choice(FUNCTION[:5]) + ("_",))
        obl, g2, c2, n2 = noun(rng, case="Abl")
        toks.append(obl)
    if sym:
        for s in rng.sample(["CD", "A", "AB", "1amXI", "E"], 2):
            toks.append((s, "_", "SYM", "_"))
    obj, g3, c3, n3 = noun(rng, case="Acc")
    toks.append(obj)
    if rng.random() < 0.3:
        stem = rng.choice(PROPN)
        toks.append((stem + "ae", stem + "a", "PROPN", feats(Case="Gen", Gender="Fem", Number="Sing")))
    toks.append(verb(rng, n))
    toks.append((".", ".", "PUNCT", "_"))
    if genre:
        toks = [(medievalize(f, rng, genre), l, u, ft) if u not in ("PUNCT", "SYM") else (f, l, u, ft)
                for (f, l, u, ft) in toks]
    return toks


def conllu_lines(toks, heads=False, misc_last=False, deps=False):
    lines = []
    verb_ids = [i + 1 for i, t in enumerate(toks) if t[2] == "VERB"]
    root = verb_ids[-1] if verb_ids else 1
    for i, (f, l, u, ft) in enumerate(toks, 1):
        head, rel = ("_", "_")
        if heads:
            head, rel = ("0", "root") if i == root else (str(root), "punct" if u == "PUNCT" else "dep")
        d = f"{head}:{rel}" if deps and heads else "_"
        misc = "SpaceAfter=No" if misc_last and i == len(toks) - 1 else "_"
        lines.append("\t".join([str(i), f, l, u, "_", ft, head, rel, d, misc]))
    return lines


def write_doc(path, sentences):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for comments, lines in sentences:
            for c in comments:
                fh.write(c + "\n")
            for ln in lines:
                fh.write(ln + "\n")
            fh.write("\n")


def canonical(rng):
    out = ROOT / "canonical"
    for n in range(24):
        variant = n % 6
        sents = []
        for k in range(1 + n % 4):
            toks = sentence(rng, sym=(variant == 2 or n % 5 == 0))
            comments = []
            if variant in (0, 3, 5):
                comments.append(f"# sent_id = c{n:02d}-{k + 1}")
            if variant in (0, 5):
                comments.append("# text = " + " ".join(t[0] for t in toks))
            if variant == 4 and k == 0:
                comments.append("# newdoc id = canonical-" + str(n))
                comments.append("# genre: ignored free-form comment")
            if variant == 5:
                comments.append("# translit = āē æ œ")
            lines = conllu_lines(toks, heads=variant in (1, 3), misc_last=variant in (3, 4), deps=variant == 3)
            if variant == 1:
                # strip some feats to exercise empty columns
                lines = ["\t".join(c if j != 5 else "_" for j, c in enumerate(ln.split("\t"))) if i % 2 else ln
                         for i, ln in enumerate(lines)]
            sents.append((comments, lines))
        write_doc(out / f"c{n:02d}.conllu", sents)
    # an empty document
    (out / "empty.conllu").write_text("")


SEP_NOUN = {"orum": "Case=Gen|Number=Plur", "ibus": "Case=Abl|Number=Plur", "arum": "Case=Gen|Gender=Fem|Number=Plur"}
SEP_VERB = {"abat": "Number=Sing|Person=3|Tense=Imp", "unt": "Number=Plur|Person=3|Tense=Pres", "auit": "Number=Sing|Person=3|Tense=Past"}
SEP_ADJ = {"osus": "Case=Nom|Degree=Pos|Number=Sing"}
SEP_ADV = {"iter": "_"}
SEP_STEMS = ["fort", "clar", "magn", "grau", "lent", "dur", "pulchr", "sever", "cel", "pi",
             "ampl", "long", "breu", "dulc", "fid", "lat", "nobil", "rar", "uar", "uer"]


def separable(rng):
    sents = []
    classes = [("NOUN", SEP_NOUN), ("VERB", SEP_VERB), ("ADJ", SEP_ADJ), ("ADV", SEP_ADV)]
    adps = ["in", "ad", "per", "cum"]
    for n in range(500):
        toks = []
        for _ in range(rng.randint(3, 9)):
            if rng.random() < 0.15:
                a = rng.choice(adps)
                toks.append((a, a, "ADP", "_"))
                continue
            upos, table = rng.choice(classes)
            end = rng.choice(sorted(table))
            stem = rng.choice(SEP_STEMS)
            lemma = stem + {"NOUN": "um", "VERB": "are", "ADJ": "osus", "ADV": "iter"}[upos]
            toks.append((stem + end, lemma, upos, table[end]))
        toks.append((".", ".", "PUNCT", "_"))
        sents.append(([f"# sent_id = sep-{n + 1}"], conllu_lines(toks)))
    write_doc(ROOT / "toy_separable.conllu", sents)


GENRES = ["Annals", "Biography", "Normative", "Proceedings", "Science"]
UDS = ["PROIEL", "ITTB"]


def mini(rng):
    out = ROOT / "mini"
    reg = ["# Synthetic mini-registry: five small genres and two small UD-style sets.",
           'name = "mini"', ""]
    for g in GENRES:
        sents = []
        for k in range(rng.randint(14, 20)):
            toks = sentence(rng, genre=g, sym=(g == "Science" and rng.random() < 0.4))
            sents.append(([f"# sent_id = {g.lower()}-{k + 1}"], conllu_lines(toks)))
        write_doc(out / "genres" / f"{g.lower()}.conllu", sents)
        reg += ["[[dataset]]", f'name = "{g}"', 'kind = "efontes_genre"', f'paths = ["genres/{g.lower()}.conllu"]', ""]
    for u in UDS:
        for part in ("a", "b"):
            sents = []
            for k in range(rng.randint(15, 22)):
                toks = sentence(rng)
                sents.append(([f"# sent_id = {u.lower()}-{part}{k + 1}"], conllu_lines(toks, heads=True)))
            write_doc(out / "ud" / u.lower() / f"{part}.conllu", sents)
        reg += ["[[dataset]]", f'name = "{u}"', 'kind = "ud_treebank"', f'paths = ["ud/{u.lower()}/*.conllu"]', ""]
    (out / "registry.toml").write_text("\n".join(reg))


def main():
    canonical(random.Random(11))
    separable(random.Random(22))
    mini(random.Random(33))


if __name__ == "__main__":
    main()
