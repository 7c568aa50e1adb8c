import io
import json

import numpy as np
import pytest

from tardosfp.analytic import kb, t_values
from tardosfp.attacks import Class3Strategy, majority, mu_min_strategy
from tardosfp.codec import generate_code, make_rng, sample_biases
from tardosfp.formats import (
    DescriptorError,
    load_strategy,
    parse_descriptor,
    read_code,
    read_csv,
    strategy_descriptor,
    strategy_from_descriptor,
    version_string,
    write_code,
    write_csv,
    write_expansion,
    write_kb_table,
    write_t_table,
)
from tardosfp.fourier import expansion
from tardosfp.model import CodeParams

P = CodeParams(3, 4, 0.35)


def test_csv_round_trip_exact():
    buf = io.StringIO()
    rows = [(0, 0.1 + 0.2, None), (1, 1 / 3, 2.5e-300)]
    write_csv(buf, {"q": 3, "note": "x"}, ["b", "v", "w"], rows)
    buf.seek(0)
    header, cols, back = read_csv(buf)
    assert header["q"] == 3 and header["columns"] == ["b", "v", "w"]
    assert header["version"] == version_string()
    assert cols == ["b", "v", "w"]
    assert back == [[0.0, 0.1 + 0.2, None], [1.0, 1 / 3, 2.5e-300]]


def test_version_string_shape():
    assert version_string().split("+")[0].count(".") == 2


def test_table_writers(tmp_path):
    K = kb(majority(), P)
    write_kb_table(tmp_path / "kb.csv", K, P, majority())
    header, cols, rows = read_csv(tmp_path / "kb.csv")
    assert header["strategy"] == "majority" and cols == ["b", "value"]
    assert [r[1] for r in rows] == list(K.values)
    write_t_table(tmp_path / "t.csv", t_values(P), P)
    assert len(read_csv(tmp_path / "t.csv")[2]) == 5
    co = expansion(100, K, P)
    write_expansion(tmp_path / "e.csv", co, P)
    header, cols, rows = read_csv(tmp_path / "e.csv")
    assert header["m"] == 100 and cols == ["nu_t", "omega_t", "alpha_t"] and len(rows) == len(co)


@pytest.mark.parametrize("q", [3, 300])
def test_code_file_round_trip(tmp_path, q):
    params = CodeParams(q, 2, 0.4, m=7, n=5)
    rng = make_rng(0)
    biases = sample_biases(params, rng)
    X = generate_code(params, biases, rng)
    write_code(tmp_path / "x.tfp", X, biases, params, seed=0)
    header, X2, b2 = read_code(tmp_path / "x.tfp")
    assert np.array_equal(X, X2) and np.array_equal(biases, b2)
    assert header["symbol_dtype"] == ("|u1" if q <= 256 else "<u2")
    assert header["format_version"] == 1


def test_code_file_layout_is_column_major(tmp_path):
    params = CodeParams(3, 2, 0.4, m=2, n=3)
    X = np.array([[0, 1], [2, 0], [1, 2]])
    biases = np.full((2, 3), 1 / 3)
    write_code(tmp_path / "x.tfp", X, biases, params)
    data = (tmp_path / "x.tfp").read_bytes()
    hlen = int.from_bytes(data[10:14], "little")
    assert data[:8] == b"TFPCODE\0"
    assert list(data[14 + hlen:14 + hlen + 6]) == [0, 2, 1, 1, 0, 2]


def test_code_file_rejects_damage(tmp_path):
    params = CodeParams(3, 2, 0.4, m=2, n=3)
    write_code(tmp_path / "x.tfp", np.zeros((3, 2), int), np.full((2, 3), 1 / 3), params)
    raw = (tmp_path / "x.tfp").read_bytes()
    (tmp_path / "short.tfp").write_bytes(raw[:-1])
    with pytest.raises(ValueError, match="size"):
        read_code(tmp_path / "short.tfp")
    (tmp_path / "v2.tfp").write_bytes(raw[:8] + (2).to_bytes(2, "little") + raw[10:])
    with pytest.raises(ValueError, match="version"):
        read_code(tmp_path / "v2.tfp")
    (tmp_path / "bad.tfp").write_bytes(b"NOTACODE" + raw[8:])
    with pytest.raises(ValueError):
        read_code(tmp_path / "bad.tfp")


def test_builtin_descriptor():
    s = strategy_from_descriptor(parse_descriptor('{"kind": "builtin", "name": "mu_min", "tie_break": "majority"}'),
                                 CodeParams(2, 4, 0.5))
    assert s.name == "mu_min"


def test_class3_descriptor_round_trip():
    params = CodeParams(3, 6, 0.3)
    orig = mu_min_strategy(params)
    desc = strategy_descriptor(Class3Strategy.from_ranking(orig.order, name="copy", c=6))
    back = strategy_from_descriptor(parse_descriptor(json.dumps(desc)), params)
    assert all(back.W(b, z) == orig.W(b, z) for b in range(1, 7) for z in range(1, 7) if b != z)
    assert np.allclose(kb(back, params).values, kb(orig, params).values)


def test_descriptor_error_has_line_info():
    text = '{\n  "kind": "class3",\n  "table": [\n    [1, 2, 0],\n    [2, 1, 5]\n  ]\n}'
    with pytest.raises(DescriptorError) as e:
        parse_descriptor(text)
    msg = str(e.value)
    assert msg.startswith("line 5 column 12:")
    assert ".table[1][2]" in msg


def test_descriptor_syntax_error_has_line_info():
    with pytest.raises(DescriptorError, match=r"^line 2 column \d+"):
        parse_descriptor('{"kind": "builtin",\n "name": majority}')


@pytest.mark.parametrize("text, fragment", [
    ('{"kind": "builtin", "name": "random"}', ".name"),
    ('{"kind": "class3"}', "table"),
    ('{"kind": "class3", "table": [[0, 1, 1]]}', ".table[0][0]"),
    ('[1, 2]', "<root>"),
])
def test_descriptor_schema_errors(text, fragment):
    with pytest.raises(DescriptorError, match="line 1") as e:
        parse_descriptor(text)
    assert fragment in str(e.value)


def test_incomplete_or_cyclic_table_rejected():
    params = CodeParams(3, 3, 0.3)
    cyc = {"kind": "class3", "table": [[1, 2, 1], [2, 1, 0], [2, 3, 1], [3, 2, 0], [1, 3, 0], [3, 1, 1]]}
    with pytest.raises(Exception, match="transitive"):
        strategy_from_descriptor(cyc, params)
    with pytest.raises(Exception, match="no entry"):
        strategy_from_descriptor({"kind": "class3", "table": [[1, 2, 1], [2, 1, 0]]}, params)


def test_load_strategy_sources(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"kind": "builtin", "name": "minority"}')
    assert load_strategy(str(path), P).name == "minority"
    assert load_strategy("majority", P).name == "majority"
    assert load_strategy('{"kind": "builtin", "name": "interleaving"}', P).name == "interleaving"
    with pytest.raises(FileNotFoundError):
        load_strategy(str(tmp_path / "missing.json"), P)
