"""
Reading and writing variant files.

One variant per line, events separated by a single space, newline terminated.
Lines starting with '#' are comments; a '# freq=<n>' comment applies to the
variant on the following line.
A sample file may start with a '# rejected=<n>' comment.
"""

import logging
import re
from collections import Counter
from pathlib import Path

from ..Variants import UniqueVariantLog, Variant
from ..errors import VariantError, VariantFileError

logger = logging.getLogger(__name__)

FREQ_PATTERN = re.compile(r"^#\s*freq=(\d+)\s*$")
REJECTED_PATTERN = re.compile(r"^#\s*rejected=(\d+)\s*$")


def _parse_lines(path):
    """Yields (line number, variant, frequency annotation or None)"""

    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as ex:
        raise VariantFileError(f"not UTF-8: {ex}", path=path) from None

    lines = text.split("\n")
    # a trailing newline leaves one empty element behind
    if lines and lines[-1] == "":
        lines.pop()

    pending_freq = None
    for number, line in enumerate(lines, start=1):
        if line.startswith("#"):
            match = FREQ_PATTERN.match(line)
            if match:
                pending_freq = int(match.group(1))
            continue
        if line == "":
            raise VariantFileError("empty line", path=path, line=number)
        events = line.split(" ")
        try:
            variant = Variant(events)
        except VariantError as ex:
            raise VariantFileError(f"malformed variant: {ex}", path=path, line=number) from None
        yield number, variant, pending_freq
        pending_freq = None


def read_variants(path):
    """Reads a variant file into a UniqueVariantLog"""

    seen = set()
    for number, variant, _ in _parse_lines(path):
        if variant in seen:
            logger.warning("%s:%d: duplicate variant %r ignored", path, number, variant)
        seen.add(variant)
    return UniqueVariantLog(frozenset(seen))


def read_variant_frequencies(path):
    """
    Reads a frequency-annotated variant file into a Counter.
    Variants without an annotation count once.
    """

    frequency = Counter()
    for _, variant, freq in _parse_lines(path):
        frequency[variant] += 1 if freq is None else freq
    return frequency


def format_variant(v, path=None):
    # a leading "#" would read back as a comment
    if v and v[0].startswith("#"):
        raise VariantFileError(f"variant {v!r} starts with '#' and cannot be written", path=path)
    return " ".join(v)


def write_variants(variants, path, header=None):
    """Writes variants in canonical (lexicographic) order"""

    if hasattr(variants, "variants"):
        variants = variants.variants
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.extend(format_variant(v, path) for v in sorted(set(variants)))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def write_variant_frequencies(frequency, path, header=None):
    """Writes a frequency map; each variant is preceded by its '# freq=' line"""

    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for variant in sorted(frequency):
        lines.append(f"# freq={frequency[variant]}")
        lines.append(format_variant(variant, path))
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def write_sample_file(frequency, rejected, path):
    """A frequency file headed by the number of draws that did not decode"""
    return write_variant_frequencies(frequency, path, header=f"rejected={rejected}")


def read_sample_file(path):
    """
    Returns (frequency Counter, rejected draws) of a sample file.
    Files without a '# rejected=' header count no rejections.
    """

    rejected = 0
    with open(path, encoding="utf-8", errors="replace") as f:
        for line in f:
            if not line.startswith("#"):
                break
            match = REJECTED_PATTERN.match(line.rstrip("\n"))
            if match:
                rejected = int(match.group(1))
    return read_variant_frequencies(path), rejected
