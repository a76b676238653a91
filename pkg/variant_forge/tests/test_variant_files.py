import logging

import pytest

from ..Variants import Variant
from ..errors import VariantFileError
from ..utils.variant_files import (read_sample_file, read_variant_frequencies, read_variants, write_sample_file,
                                   write_variant_frequencies, write_variants)
from .conftest import GRAMMAR_VARIANTS, V


class TestReadVariants:
    def test_basic(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("a b\nb a\n", encoding="utf-8")
        assert read_variants(path).variants == {V("ab"), V("ba")}

    def test_missing_trailing_newline(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("a b\nb a", encoding="utf-8")
        assert len(read_variants(path)) == 2

    def test_comments_skipped(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("# header\na\n", encoding="utf-8")
        assert read_variants(path).variants == {V("a")}

    def test_duplicate_line_warns(self, tmp_path, caplog):
        path = tmp_path / "v.txt"
        path.write_text("a b\na b\n", encoding="utf-8")
        with caplog.at_level(logging.WARNING):
            log = read_variants(path)
        assert len(log) == 1
        assert "duplicate" in caplog.text

    def test_empty_line(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("a b\n\nb a\n", encoding="utf-8")
        with pytest.raises(VariantFileError) as info:
            read_variants(path)
        assert info.value.line == 2

    def test_double_space(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_text("a  b\n", encoding="utf-8")
        with pytest.raises(VariantFileError, match="malformed"):
            read_variants(path)

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "v.txt"
        path.write_bytes(b"\xff\xfe a\n")
        with pytest.raises(VariantFileError, match="UTF-8"):
            read_variants(path)


class TestWriteVariants:
    def test_canonical_order(self, tmp_path):
        path = write_variants({V("ba"), V("ab"), V("a")}, tmp_path / "v.txt")
        assert path.read_text(encoding="utf-8") == "a\na b\nb a\n"

    def test_byte_identical_rewrite(self, tmp_path):
        first = write_variants(GRAMMAR_VARIANTS, tmp_path / "first.txt")
        second = write_variants(read_variants(first), tmp_path / "second.txt")
        assert first.read_bytes() == second.read_bytes()

    def test_header(self, tmp_path):
        path = write_variants({V("a")}, tmp_path / "v.txt", header="system toy")
        assert path.read_text(encoding="utf-8") == "# system toy\na\n"

    def test_leading_hash_is_refused(self, tmp_path):
        path = tmp_path / "v.txt"
        with pytest.raises(VariantFileError, match="starts with '#'"):
            write_variants({Variant(["#a", "b"]), V("ba")}, path)
        assert not path.exists()

    def test_hash_inside_a_variant_round_trips(self, tmp_path):
        variants = {Variant(["a", "#b"]), V("ba")}
        assert read_variants(write_variants(variants, tmp_path / "v.txt")).variants == variants

    def test_leading_hash_refused_in_frequency_files(self, tmp_path):
        with pytest.raises(VariantFileError):
            write_variant_frequencies({Variant(["#a"]): 2}, tmp_path / "s.txt")


class TestFrequencies:
    def test_round_trip(self, tmp_path):
        frequency = {V("ab"): 7, V("c"): 1}
        path = write_variant_frequencies(frequency, tmp_path / "s.txt")
        assert path.read_text(encoding="utf-8") == "# freq=7\na b\n# freq=1\nc\n"
        assert read_variant_frequencies(path) == frequency

    def test_unannotated_lines_count_once(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("# freq=3\na\nb\n", encoding="utf-8")
        assert read_variant_frequencies(path) == {V("a"): 3, V("b"): 1}

    def test_frequency_file_reads_as_variant_set(self, tmp_path):
        path = write_variant_frequencies({V("ab"): 2}, tmp_path / "s.txt")
        assert read_variants(path).variants == {V("ab")}

    def test_sample_file_keeps_rejections(self, tmp_path):
        path = write_sample_file({V("ab"): 2}, 3, tmp_path / "s.txt")
        assert path.read_text(encoding="utf-8") == "# rejected=3\n# freq=2\na b\n"
        assert read_sample_file(path) == ({V("ab"): 2}, 3)

    def test_plain_frequency_file_has_no_rejections(self, tmp_path):
        path = write_variant_frequencies({V("ab"): 2}, tmp_path / "s.txt")
        assert read_sample_file(path)[1] == 0
