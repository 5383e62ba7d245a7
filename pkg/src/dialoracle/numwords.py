"""Written <-> spoken conversion for the numerals used in generated queries.

Covers non-negative values with at most two decimals. Currency values read
as "three dollars fifty"; plain decimals read as "four point five".
"""

from __future__ import annotations

from .errors import SpokenNumberError

_UNITS = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight",
    "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
    "sixteen", "seventeen", "eighteen", "nineteen",
]
_TENS = ["", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
         "eighty", "ninety"]

_UNIT_VALUES = {w: i for i, w in enumerate(_UNITS)}
_TEN_VALUES = {w: i * 10 for i, w in enumerate(_TENS) if w}


def _int_words(n: int) -> str:
    # 0..999 is all the generation grids ever need
    if not 0 <= n <= 999:
        raise SpokenNumberError(f"integer {n} outside supported range 0..999")
    parts = []
    if n >= 100:
        parts.append(f"{_UNITS[n // 100]} hundred")
        n %= 100
        if n == 0:
            return parts[0]
    if n < 20:
        parts.append(_UNITS[n])
    else:
        tens, ones = divmod(n, 10)
        parts.append(_TENS[tens] if ones == 0 else f"{_TENS[tens]} {_UNITS[ones]}")
    return " ".join(parts)


def number_to_spoken(value: float, unit: str | None = None) -> str:
    """Render a non-negative value (<= 2 decimals) as English words.

    unit="currency" uses the "<dollars> dollars <cents>" reading; otherwise
    decimals are read digit by digit after "point".
    """
    if value < 0:
        raise SpokenNumberError(f"negative value {value} not supported")
    cents = round(value * 100)
    if abs(value * 100 - cents) > 1e-6:
        raise SpokenNumberError(f"{value} has more than two decimals")
    whole, frac = divmod(cents, 100)
    if unit == "currency":
        label = "dollar" if whole == 1 else "dollars"
        if frac == 0:
            return f"{_int_words(whole)} {label}"
        return f"{_int_words(whole)} {label} {_int_words(frac)}"
    if frac == 0:
        return _int_words(whole)
    digits = f"{frac:02d}" if frac % 10 else str(frac // 10)
    spoken_digits = " ".join(_UNITS[int(d)] for d in digits)
    return f"{_int_words(whole)} point {spoken_digits}"


def _parse_int_words(tokens: list[str]) -> int:
    if not tokens:
        raise SpokenNumberError("empty number phrase")
    total = 0
    i = 0
    if i + 1 < len(tokens) and tokens[i + 1] == "hundred":
        if tokens[i] not in _UNIT_VALUES or _UNIT_VALUES[tokens[i]] > 9:
            raise SpokenNumberError(f"bad hundreds digit {tokens[i]!r}")
        total = _UNIT_VALUES[tokens[i]] * 100
        i += 2
        if i == len(tokens):
            return total
    if i < len(tokens) and tokens[i] in _TEN_VALUES:
        total += _TEN_VALUES[tokens[i]]
        i += 1
        if i < len(tokens):
            if tokens[i] not in _UNIT_VALUES or _UNIT_VALUES[tokens[i]] >= 10:
                raise SpokenNumberError(f"unexpected token {tokens[i]!r}")
            total += _UNIT_VALUES[tokens[i]]
            i += 1
    elif i < len(tokens):
        if tokens[i] not in _UNIT_VALUES:
            raise SpokenNumberError(f"unexpected token {tokens[i]!r}")
        total += _UNIT_VALUES[tokens[i]]
        i += 1
    if i != len(tokens):
        raise SpokenNumberError(f"trailing tokens {' '.join(tokens[i:])!r}")
    return total


def spoken_to_number(words: str) -> float:
    """Inverse of number_to_spoken; raises SpokenNumberError off-grammar."""
    tokens = words.lower().replace("-", " ").split()
    if not tokens:
        raise SpokenNumberError("empty phrase")
    if "dollar" in tokens or "dollars" in tokens:
        sep = tokens.index("dollar") if "dollar" in tokens else tokens.index("dollars")
        dollars = _parse_int_words(tokens[:sep])
        rest = tokens[sep + 1:]
        cents = _parse_int_words(rest) if rest else 0
        if not 0 <= cents <= 99:
            raise SpokenNumberError(f"cents {cents} outside 0..99")
        # integer-grid arithmetic so round trips are bit-exact
        return (dollars * 100 + cents) / 100
    if "point" in tokens:
        sep = tokens.index("point")
        whole = _parse_int_words(tokens[:sep])
        digit_tokens = tokens[sep + 1:]
        if not 1 <= len(digit_tokens) <= 2:
            raise SpokenNumberError("expected one or two digits after 'point'")
        digits = ""
        for tok in digit_tokens:
            if tok not in _UNIT_VALUES or _UNIT_VALUES[tok] > 9:
                raise SpokenNumberError(f"bad digit {tok!r}")
            digits += str(_UNIT_VALUES[tok])
        scale = 10 ** len(digits)
        return (whole * scale + int(digits)) / scale
    return float(_parse_int_words(tokens))


# every token the spoken grammar can emit; used by the query parser to
# recognize spoken numerals inside surface text
SPOKEN_TOKENS = frozenset(
    _UNITS + [t for t in _TENS if t] + ["hundred", "point", "dollar", "dollars"]
)
