"""Self-contained corpus generators for repeatable desk-scale runs.

Two families:

* a copy task over an invented vocabulary with a Zipf-like frequency
  profile and length inversely tied to rank, so both entropy reweighting
  and length-weighted symbol allocation have real structure to work with;
* a small French-to-English pair grammar whose templates keep source and
  target the same length token for token.  Ambiguity is deliberate: most
  content words admit two English renderings chosen at random, some
  French words are English homographs mapped to themselves, and French
  noun-adjective order flips on the English side.  The ambiguous choices
  put a ceiling well below 1 on reachable translation accuracy while the
  copy direction stays clean.

Generators emit plain text pairs; feed them to ``save_corpus`` /
``load_corpus`` or consume the returned corpus directly.
"""

from __future__ import annotations

import itertools

import numpy as np

from semcom.corpus import ParallelCorpus

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _invent_words(n: int, rng: np.random.Generator) -> list[str]:
    """Distinct pronounceable words, short ones at the front of the list."""
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    rng.shuffle(syllables)
    words: list[str] = []
    for count in (1, 2, 3):
        for combo in itertools.product(syllables, repeat=count):
            words.append("".join(combo))
            if len(words) == n:
                return words
    raise ValueError(f"cannot invent {n} distinct words")


def make_copy_corpus(
    n_pairs: int = 2000,
    vocab_size: int = 240,
    seed: int = 0,
    min_len: int = 3,
    max_len: int = 12,
    zipf_s: float = 1.05,
) -> ParallelCorpus:
    """Sentences of invented words, target identical to source."""
    if vocab_size < 10:
        raise ValueError("need at least 10 words")
    rng = np.random.default_rng(seed)
    words = _invent_words(vocab_size, rng)
    ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
    probs = ranks**-zipf_s
    probs /= probs.sum()
    pairs = []
    for _ in range(n_pairs):
        length = int(rng.integers(min_len, max_len))
        body = [words[i] for i in rng.choice(vocab_size, size=length, p=probs)]
        stop = "." if rng.random() < 0.9 else "!"
        sent = body + [stop]
        pairs.append((sent, list(sent)))
    return ParallelCorpus(pairs=pairs, name=f"copy{vocab_size}")


# French lexicon with English renderings.  A tuple means the reference
# translation picks uniformly at random, which no model can fully learn.
_LEXICON: dict[str, tuple[str, ...]] = {
    # determiners (deterministic anchors)
    "le": ("the",),
    "la": ("the",),
    "un": ("a",),
    "une": ("a",),
    "mon": ("my",),
    "ta": ("your",),
    # masculine-slot nouns
    "chat": ("cat",),
    "chien": ("dog",),
    "livre": ("book", "volume"),
    "train": ("train",),
    "village": ("village",),
    "garcon": ("boy", "lad"),
    "ami": ("friend", "pal"),
    "pain": ("bread", "loaf"),
    # feminine-slot nouns
    "voiture": ("car", "automobile"),
    "maison": ("house", "home"),
    "table": ("table",),
    "orange": ("orange",),
    "pomme": ("apple",),
    "fille": ("girl", "daughter"),
    "route": ("road", "route"),
    "riviere": ("river", "stream"),
    # adjectives
    "noir": ("black",),
    "rouge": ("red", "crimson"),
    "petit": ("small", "little"),
    "grand": ("big", "large"),
    "rapide": ("fast", "quick"),
    "beau": ("beautiful", "handsome"),
    "vieux": ("old", "aged"),
    "calme": ("calm", "quiet"),
    # verbs
    "mange": ("eats",),
    "voit": ("sees", "spots"),
    "aime": ("likes", "loves"),
    "trouve": ("finds", "locates"),
    "regarde": ("watches", "observes"),
    "prend": ("takes", "grabs"),
    "porte": ("carries", "bears"),
    "vend": ("sells",),
    # adverbs
    "souvent": ("often", "frequently"),
    "ici": ("here",),
    "demain": ("tomorrow",),
    "vite": ("fast", "quickly"),
    # numbers
    "deux": ("two",),
    "six": ("six",),
    "huit": ("eight",),
}

_DETERMINERS = ["le", "la", "un", "une", "mon", "ta"]
_NOUNS = [
    "chat", "chien", "livre", "train", "village", "garcon", "ami", "pain",
    "voiture", "maison", "table", "orange", "pomme", "fille", "route", "riviere",
]
_ADJECTIVES = ["noir", "rouge", "petit", "grand", "rapide", "beau", "vieux", "calme"]
_VERBS = ["mange", "voit", "aime", "trouve", "regarde", "prend", "porte", "vend"]
_ADVERBS = ["souvent", "ici", "demain", "vite"]
_NUMBERS = ["deux", "six", "huit"]
_STOPS = [".", "!", "?"]


def french_vocab_size() -> int:
    """Distinct source-side tokens the generator can emit."""
    return len(_LEXICON) + len(_STOPS)


def _render(token: str, rng: np.random.Generator) -> str:
    options = _LEXICON.get(token, (token,))
    if len(options) == 1:
        return options[0]
    return options[int(rng.integers(len(options)))]


def make_french_english_corpus(
    n_pairs: int = 2400,
    seed: int = 0,
) -> ParallelCorpus:
    """Length-aligned French/English pairs from a template grammar.

    Templates swap French noun-adjective order to English adjective-noun
    order, so positions permute but counts match.  The same corpus serves
    the copy direction by pairing the French side with itself.
    """
    rng = np.random.default_rng(seed)

    def noun_phrase() -> tuple[list[str], list[str]]:
        det = _DETERMINERS[int(rng.integers(len(_DETERMINERS)))]
        noun = _NOUNS[int(rng.integers(len(_NOUNS)))]
        if rng.random() < 0.55:
            adj = _ADJECTIVES[int(rng.integers(len(_ADJECTIVES)))]
            fr = [det, noun, adj]
            en = [_render(det, rng), _render(adj, rng), _render(noun, rng)]
        else:
            fr = [det, noun]
            en = [_render(det, rng), _render(noun, rng)]
        return fr, en

    pairs = []
    for _ in range(n_pairs):
        subject_fr, subject_en = noun_phrase()
        verb = _VERBS[int(rng.integers(len(_VERBS)))]
        fr = subject_fr + [verb]
        en = subject_en + [_render(verb, rng)]
        roll = rng.random()
        if roll < 0.4:
            object_fr, object_en = noun_phrase()
            fr += object_fr
            en += object_en
        elif roll < 0.65:
            num = _NUMBERS[int(rng.integers(len(_NUMBERS)))]
            noun = _NOUNS[int(rng.integers(len(_NOUNS)))]
            fr += [num, noun]
            en += [_render(num, rng), _render(noun, rng)]
        elif roll < 0.85:
            adv = _ADVERBS[int(rng.integers(len(_ADVERBS)))]
            fr += [adv]
            en += [_render(adv, rng)]
        stop = _STOPS[int(rng.integers(len(_STOPS)))] if rng.random() < 0.2 else "."
        fr += [stop]
        en += [stop]
        pairs.append((fr, en))
    return ParallelCorpus(pairs=pairs, name="fr_en")


def copy_direction(corpus: ParallelCorpus) -> ParallelCorpus:
    """Pair each source sentence with itself; the monolingual control."""
    return ParallelCorpus(
        pairs=[(list(src), list(src)) for src, _ in corpus.pairs],
        name=f"{corpus.name}_copy" if corpus.name else "copy",
    )
