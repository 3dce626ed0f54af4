import pytest
from decimal import Decimal

from provex.bench import gen_minitpch
from provex.data import (
    format_catalog,
    format_relation_csv,
    load_dataset,
    parse_catalog,
    parse_relation_csv,
    write_dataset,
)
from provex.ir import CatalogError

CATALOG_TEXT = """\
% mini order schema
Customers; c_key text, c_name text, c_address text; key: c_key
Orders; o_key text, c_key text, o_date date, o_totalprice decimal; key: o_key
Lineitem; o_key text, linenum text, qty int; key: o_key, linenum
T4; D int, E int; fd: D -> E
"""


def test_parse_catalog_keys_kinds_and_fds():
    cat = parse_catalog(CATALOG_TEXT)
    assert cat.get("Lineitem").key == frozenset({"o_key", "linenum"})
    assert cat.get("Orders").attr_kinds == ("text", "text", "date", "decimal")
    assert cat.declared_fds["T4"] == [(frozenset({"D"}), "E")]


def test_catalog_round_trip():
    cat = parse_catalog(CATALOG_TEXT)
    again = parse_catalog(format_catalog(cat))
    assert again.entries == cat.entries
    assert again.declared_fds == cat.declared_fds


@pytest.mark.parametrize(
    "line",
    [
        "Orders",  # no attributes
        "Orders; o_key wat",  # unknown kind
        "Orders; o_key text; nonsense: x",
    ],
)
def test_catalog_errors(line):
    with pytest.raises(CatalogError):
        parse_catalog(line)


def test_relation_csv_round_trip():
    cat = parse_catalog(CATALOG_TEXT)
    entry = cat.get("Orders")
    inst = parse_relation_csv(
        entry,
        "o_key,c_key,o_date,o_totalprice\no1,c1,1995-01-02,100.50\no2,c1,1995-03-04,80.25\n",
    )
    assert (("o1", "c1", "1995-01-02", Decimal("100.50"))) in inst.rows
    again = parse_relation_csv(entry, format_relation_csv(inst))
    assert again.rows == inst.rows


def test_csv_header_must_match():
    cat = parse_catalog(CATALOG_TEXT)
    with pytest.raises(CatalogError, match="header"):
        parse_relation_csv(cat.get("Lineitem"), "a,b,c\n1,2,3\n")


def test_dataset_directory_round_trip(tmp_path):
    catalog, db = gen_minitpch(4, 12, 40, seed=3)
    write_dataset(tmp_path / "ds", catalog, db)
    loaded_catalog, loaded_db = load_dataset(tmp_path / "ds")
    assert set(loaded_db) == set(db)
    for name in db:
        assert loaded_db[name].rows == db[name].rows
        assert loaded_catalog.get(name).key == catalog.get(name).key


def test_missing_catalog_file(tmp_path):
    with pytest.raises(CatalogError, match="catalog.txt"):
        load_dataset(tmp_path)
