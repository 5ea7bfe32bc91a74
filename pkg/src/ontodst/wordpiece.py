"""Minimal WordPiece-style subword tokenizer with vocabulary patching.

Greedy longest-prefix segmentation: the first piece is unprefixed,
continuation pieces carry "##".  Patching adds whole words to the
vocabulary so slot names like "pricerange" stop splitting into pieces
that no longer read as the original word.

A small fixture vocabulary ships with the package (data/fixture_vocab.txt);
it is built so the unpatched segmentations of "pricerange" and "dontcare"
come out as price/##rang/##e and don/##tc/##are.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

UNK_TOKEN = "[UNK]"
MAX_WORD_CHARS = 100  # longer words are mapped to the unknown token


@dataclass(frozen=True)
class SubwordVocab:
    """Ordered token list plus membership set; immutable once built."""

    tokens: tuple[str, ...]
    unk: str = UNK_TOKEN

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            dupes = sorted({t for t in self.tokens if self.tokens.count(t) > 1})
            raise ValueError(f"duplicate vocab entries: {dupes}")
        if any(not t for t in self.tokens):
            raise ValueError("empty vocab entry")
        if self.unk not in self.tokens:
            raise ValueError(f"unknown token {self.unk!r} missing from vocab")
        object.__setattr__(self, "_members", frozenset(self.tokens))

    def __contains__(self, token: str) -> bool:
        return token in self._members

    def __len__(self) -> int:
        return len(self.tokens)

    def token_id(self, token: str) -> int:
        return self.tokens.index(token)


def load_vocab(text: str, unk: str = UNK_TOKEN) -> SubwordVocab:
    """Parse the one-token-per-line format (line number = token id)."""
    tokens = tuple(line.strip() for line in text.splitlines() if line.strip())
    return SubwordVocab(tokens=tokens, unk=unk)


def load_fixture_vocab() -> SubwordVocab:
    """The vocabulary fixture shipped with the package."""
    text = resources.files("ontodst.data").joinpath("fixture_vocab.txt").read_text("utf-8")
    return load_vocab(text)


def wordpiece_tokenize(vocab: SubwordVocab, word: str) -> list[str]:
    """Segment one whitespace-free lowercase word into subword pieces.

    Greedy longest prefix at each position; pieces after the first carry
    "##".  Returns [unk] when no segmentation exists.  Stripping the "##"
    markers and concatenating reproduces the word otherwise.
    """
    if not word:
        raise ValueError("cannot tokenize an empty word")
    if word in vocab:
        return [word]
    if len(word) > MAX_WORD_CHARS:
        return [vocab.unk]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        piece = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = "##" + candidate
            if candidate in vocab:
                piece = candidate
                break
            end -= 1
        if piece is None:
            return [vocab.unk]
        pieces.append(piece)
        start = end
    return pieces


def patch_vocab(vocab: SubwordVocab, words: list[str]) -> SubwordVocab:
    """Return a vocab that contains each word as a whole token.

    The input vocab is unmodified; already-present words are skipped, so
    patching is idempotent.
    """
    if not words:
        raise ValueError("patch_vocab needs at least one word")
    for word in words:
        if not word or len(word.split()) != 1:
            raise ValueError(f"patch word must be a single token, got {word!r}")
    added = [w for w in dict.fromkeys(words) if w not in vocab]
    if not added:
        return vocab
    return SubwordVocab(tokens=vocab.tokens + tuple(added), unk=vocab.unk)


def check_intuitive(vocab: SubwordVocab, word: str) -> bool:
    """True iff the word survives tokenization as a single whole token."""
    if not word:
        raise ValueError("empty word")
    return wordpiece_tokenize(vocab, word) == [word]
