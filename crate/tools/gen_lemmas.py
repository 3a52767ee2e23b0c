#!/usr/bin/env python3
"""Regenerate crates/core/assets/lexicon/lemmas.tsv.

Inflected forms are expanded from a curated list of base words using regular
English morphology, plus a short table of irregular forms. Any generated form
that is itself a base word is dropped so the mapping stays idempotent.
"""
import pathlib

NOUNS = """
abstract activity actuator algorithm alloy analysis antibody application approach
article assembly atom bacterium battery behavior bond boundary brain cancer
capacity carbon catalyst category cell chain change channel charge circuit class
climate cluster coating code community complex component compound concentration
condition conductivity constraint control crystal cycle defect density design
device diagram dimension disease dislocation distribution domain drug dynamic
effect efficiency electrode electron element emission energy enzyme equation
experiment fabrication fiber field film flow fluid force fracture framework
frequency fuel function gene genome gradient graph group growth heat hydrogel
image interaction interface ion journal kinetic laser layer ligand limit liquid
machine magnet mass material matrix measurement mechanism membrane metal method
microbe model module molecule motion muscle nanoparticle network neuron node
organism oxide particle pathway pattern performance phase photon pore polymer
population potential pressure principle probe problem process product property
protein reaction reactor region resistance resolution resource result robot
sample scale sensor sequence shape signal simulation site skin solution solvent
source species spectrum stability stage strain strategy stress structure
substrate surface symmetry system target technique technology temperature
theme theory therapy tissue tool topic transition transport treatment tumor
type unit variable vehicle virus wave wavelength
"""

VERBS = """
absorb accelerate achieve activate adapt address analyze apply assemble assess
bind build calculate capture catalyze change characterize classify cluster
combine compare compute conduct confine connect control convert couple create
deform deliver demonstrate derive design detect determine develop differentiate
direct dissolve drive emerge enable encode engineer enhance estimate evaluate
evolve examine exhibit expand explore express extract fabricate fold form
generate govern grow guide identify image improve increase induce influence
inhibit integrate interact investigate learn limit link manipulate map measure
mediate model modify monitor observe obtain operate optimize perform predict
process produce program propose provide reduce regulate release remain remove
report represent reproduce require reveal sense separate show simulate solve
store study suggest support synthesize test transfer transform transport treat
tune use validate vary yield
"""

IRREGULAR = {
    "analyses": "analysis",
    "hypotheses": "hypothesis",
    "syntheses": "synthesis",
    "theses": "thesis",
    "bases": "basis",
    "indices": "index",
    "matrices": "matrix",
    "vertices": "vertex",
    "phenomena": "phenomenon",
    "criteria": "criterion",
    "bacteria": "bacterium",
    "spectra": "spectrum",
    "media": "medium",
    "children": "child",
    "mice": "mouse",
    "teeth": "tooth",
    "feet": "foot",
    "men": "man",
    "women": "woman",
    "leaves": "leaf",
    "lives": "life",
    "grew": "grow",
    "grown": "grow",
    "drove": "drive",
    "driven": "drive",
    "shown": "show",
    "built": "build",
    "bound": "bind",
    "found": "find",
    "finds": "find",
    "finding": "find",
    "made": "make",
    "makes": "make",
    "making": "make",
    "took": "take",
    "taken": "take",
    "takes": "take",
    "taking": "take",
    "gave": "give",
    "given": "give",
    "gives": "give",
    "giving": "give",
    "began": "begin",
    "begun": "begin",
    "led": "lead",
    "leads": "lead",
    "leading": "lead",
    "learnt": "learn",
    "mapped": "map",
    "mapping": "map",
    "maps": "map",
}


def plural(word):
    if word.endswith("y") and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    return word + "s"


def past(word):
    if word.endswith("e"):
        return word + "d"
    if word.endswith("y") and word[-2] not in "aeiou":
        return word[:-1] + "ied"
    return word + "ed"


def gerund(word):
    if word.endswith("e") and not word.endswith("ee"):
        return word[:-1] + "ing"
    return word + "ing"


def main():
    nouns = NOUNS.split()
    verbs = VERBS.split()
    base = set(nouns) | set(verbs) | set(IRREGULAR.values())
    table = {}

    def add(form, lemma):
        if form == lemma or form in base:
            return
        if form in table and table[form] != lemma:
            raise SystemExit(f"conflicting lemmas for {form}: {table[form]} vs {lemma}")
        table[form] = lemma

    for n in nouns:
        if n not in IRREGULAR.values():
            add(plural(n), n)
    for v in verbs:
        add(plural(v), v)
        add(past(v), v)
        add(gerund(v), v)
    for form, lemma in IRREGULAR.items():
        table[form] = lemma

    for form, lemma in table.items():
        assert table.get(lemma, lemma) == lemma, (form, lemma)

    out = pathlib.Path(__file__).resolve().parents[1] / "crates/core/assets/lexicon/lemmas.tsv"
    lines = ["# inflected_form<TAB>lemma; regenerate with tools/gen_lemmas.py"]
    lines += [f"{form}\t{lemma}" for form, lemma in sorted(table.items())]
    out.write_text("\n".join(lines) + "\n")
    print(f"{len(table)} forms -> {out}")


if __name__ == "__main__":
    main()
