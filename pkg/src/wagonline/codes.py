"""Grammar, parsing and check-digit validation of rolling-stock identification codes.

Wagon codes are 3 letters + a 6-digit serial + 1 check digit, optionally
followed by a region letter (``HFE-094063-1``, ``FHD-643258-1L``).
Locomotives use bare 3 or 4 digit codes (``672``, ``8330``).

The check-digit algorithm of the underlying national standard is not public;
the default scheme here is a weighted mod-11 (weights 7..2 left to right)
that reproduces the check digits of known real codes. Schemes are pluggable
via :class:`CheckDigitScheme`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum


class Kind(str, Enum):
    WAGON = "wagon"
    LOCOMOTIVE = "locomotive"


class InvalidPattern(ValueError):
    """Raised when a text matches neither the wagon nor the locomotive grammar."""


class ValidationReason(str, Enum):
    CHECK_DIGIT_MISMATCH = "check_digit_mismatch"


_WAGON_RE = re.compile(r"^([A-Z]{3})(\d{6})(\d)([A-Z]?)$")
_LOCO_RE = re.compile(r"^\d{3,4}$")

# Cross-class glyph confusions the correction step is allowed to undo.
LETTER_TO_DIGIT = {
    "O": "0",
    "I": "1",
    "Z": "2",
    "S": "5",
    "B": "8",
    "G": "6",
    "Q": "0",
    "T": "7",
}
DIGIT_TO_LETTER = {
    "0": "O",
    "1": "I",
    "2": "Z",
    "5": "S",
    "8": "B",
    "6": "G",
    "7": "T",
}

DIGITS = "0123456789"
LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass(frozen=True)
class RollingStockId:
    """A parsed wagon or locomotive identification code."""

    kind: Kind
    letters: str = ""
    serial: str = ""
    check: int = -1
    region: str | None = None
    loco_digits: str = ""

    def text(self) -> str:
        """Canonical text form: ``LLL-DDDDDD-C[R]`` or bare locomotive digits."""
        if self.kind is Kind.LOCOMOTIVE:
            return self.loco_digits
        return f"{self.letters}-{self.serial}-{self.check}{self.region or ''}"

    def glyphs(self) -> str:
        """Glyph sequence without separators, as painted on the stock."""
        if self.kind is Kind.LOCOMOTIVE:
            return self.loco_digits
        return f"{self.letters}{self.serial}{self.check}{self.region or ''}"


# compute_check_digit result meaning "no digit can be assigned to this serial".
UNASSIGNABLE = 10


@dataclass(frozen=True)
class CheckDigitScheme:
    """Weighted mod-11 check-digit scheme over the 6-digit serial.

    The computed value is ``(11 - (sum(w_i * d_i) mod 11)) mod 11``. The value
    10 has no decimal glyph; by default such serials are treated as
    unassignable (never issued), which keeps the residue-to-digit map a
    bijection so every single-digit substitution is detectable. Registries
    that instead reuse an existing digit for value 10 can set ``map_ten_to``
    (at the cost of one undetectable substitution class).
    """

    name: str
    weights: tuple[int, int, int, int, int, int]
    map_ten_to: int | None = None

    def __post_init__(self) -> None:
        if len(self.weights) != 6:
            raise ValueError("scheme needs exactly 6 weights")
        if len(set(self.weights)) != 6:
            raise ValueError("weights must be pairwise distinct")
        if any(w < 2 or w > 10 for w in self.weights):
            raise ValueError("weights must be in 2..=10")
        if self.map_ten_to is not None and not 0 <= self.map_ten_to <= 9:
            raise ValueError("map_ten_to must be a decimal digit")


DEFAULT_SCHEME = CheckDigitScheme("weighted-mod11-7to2", (7, 6, 5, 4, 3, 2))


def compute_check_digit(serial: str, scheme: CheckDigitScheme = DEFAULT_SCHEME) -> int:
    """Check digit for a 6-digit serial under ``scheme``.

    Returns :data:`UNASSIGNABLE` (10) when the computed value has no glyph
    and the scheme does not remap it.
    """
    if len(serial) != 6 or not serial.isdigit():
        raise ValueError(f"serial must be exactly 6 digits, got {serial!r}")
    total = sum(w * int(d) for w, d in zip(scheme.weights, serial))
    value = (11 - (total % 11)) % 11
    if value == UNASSIGNABLE and scheme.map_ten_to is not None:
        return scheme.map_ten_to
    return value


def parse(text: str) -> RollingStockId:
    """Parse a code in canonical or bare form.

    Hyphens, spaces and case are normalized before matching; the kind is
    inferred from the shape. Raises :class:`InvalidPattern` if the text
    matches neither grammar.
    """
    if not text:
        raise InvalidPattern("empty code")
    cleaned = re.sub(r"[-\s]", "", text).upper()
    m = _WAGON_RE.match(cleaned)
    if m:
        letters, serial, check, region = m.groups()
        return RollingStockId(
            kind=Kind.WAGON,
            letters=letters,
            serial=serial,
            check=int(check),
            region=region or None,
        )
    if _LOCO_RE.match(cleaned):
        return RollingStockId(kind=Kind.LOCOMOTIVE, loco_digits=cleaned)
    raise InvalidPattern(f"{text!r} matches neither wagon nor locomotive grammar")


@dataclass(frozen=True)
class ValidationResult:
    valid: bool
    reason: ValidationReason | None = None


def validate(rid: RollingStockId, scheme: CheckDigitScheme = DEFAULT_SCHEME) -> ValidationResult:
    """Locomotives are always valid; wagons must carry the expected check digit.

    The region letter is historical and does not participate in the check.
    """
    if rid.kind is Kind.LOCOMOTIVE:
        return ValidationResult(True)
    if rid.check == compute_check_digit(rid.serial, scheme):
        return ValidationResult(True)
    return ValidationResult(False, ValidationReason.CHECK_DIGIT_MISMATCH)


def classify_length(n: int) -> set[Kind]:
    """Grammars a glyph sequence of length ``n`` could still belong to."""
    if n in (10, 11):
        return {Kind.WAGON}
    if n in (3, 4):
        return {Kind.LOCOMOTIVE}
    return set()


@dataclass(frozen=True)
class CharReading:
    """One recognized character: winning glyph, its confidence, ranked runners-up."""

    glyph: str
    confidence: float
    alternatives: tuple[str, ...] = ()
    admissible: bool = True


@dataclass(frozen=True)
class RawReading:
    """An ordered glyph sequence read off one track, before any grammar decision."""

    chars: tuple[CharReading, ...]
    source_track: int = -1
    degraded: bool = False

    def text(self) -> str:
        return "".join(c.glyph for c in self.chars)

    def confidences(self) -> tuple[float, ...]:
        return tuple(c.confidence for c in self.chars)


def _slot_classes(n: int) -> list[str]:
    # Locomotive-length readings are all-digit; everything else follows the
    # wagon layout (letters 1-3, digits 4-10, optional region letter at 11).
    if n in (3, 4):
        return ["digit"] * n
    classes = []
    for i in range(n):
        if i < 3:
            classes.append("letter")
        elif i < 10:
            classes.append("digit")
        elif i == 10:
            classes.append("letter")
        else:
            classes.append("any")
    return classes


def _coerce(char: CharReading, cls: str) -> CharReading:
    glyph = char.glyph
    if cls == "any":
        return char
    if cls == "digit":
        if glyph in DIGITS:
            return char
        sub = LETTER_TO_DIGIT.get(glyph)
        if sub is None:
            sub = next((a for a in char.alternatives if a in DIGITS), None)
        if sub is not None:
            return replace(char, glyph=sub)
        return replace(char, admissible=False)
    # letter slot
    if glyph in LETTERS:
        return char
    sub = DIGIT_TO_LETTER.get(glyph)
    if sub is None:
        sub = next((a for a in char.alternatives if a in LETTERS), None)
    if sub is not None:
        return replace(char, glyph=sub)
    return replace(char, admissible=False)


def pattern_correct(reading: RawReading) -> RawReading:
    """Coerce each glyph to its positional character class.

    Wrong-class glyphs are replaced via the fixed confusion table, or by
    the highest-ranked alternative of the correct class; slots with no
    admissible substitution keep their glyph and are flagged inadmissible.
    Idempotent by construction.
    """
    classes = _slot_classes(len(reading.chars))
    corrected = tuple(_coerce(c, cls) for c, cls in zip(reading.chars, classes))
    return replace(reading, chars=corrected)
