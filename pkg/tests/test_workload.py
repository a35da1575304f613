import pytest

from xwfrag.errors import UnknownAttributeError, UnknownDimensionError, WorkloadSyntaxError
from xwfrag.predicates import SelectionPredicate
from xwfrag.workload import (
    WorkloadWarning,
    attribute_predicates,
    extract_selection_predicates,
    parse_workload,
    render_workload,
)


class TestParseSampleWorkload:
    def test_selections_resolve_to_declaring_dimension(self, retail_meta, sample_workload_text):
        with pytest.warns(WorkloadWarning):
            workload = parse_workload(sample_workload_text, retail_meta)
        q1, q10 = workload.queries
        assert q1.query_id == "q1" and q1.frequency == 10
        assert [(s.dim_id, s.attribute, s.op, s.rhs) for s in q1.selections] == [
            ("Customer", "c_nation_key", "=", "13"),
            ("Part", "p_type", "=", "PROMO BURNISHED COPPER"),
        ]
        assert q1.join_dims == ("Customer", "Part")

    def test_join_dimension_comes_from_binding(self, retail_meta, sample_workload_text):
        # the second query binds its variable to Date but the join literal
        # says Part; the binding wins, with a warning
        with pytest.warns(WorkloadWarning, match="bound to 'Date'"):
            workload = parse_workload(sample_workload_text, retail_meta)
        q10 = workload.queries[1]
        assert q10.join_dims == ("Customer", "Date")
        assert q10.frequency == 5
        assert ("Date", "d_date_name", "=", "Saturday") in [
            (s.dim_id, s.attribute, s.op, s.rhs) for s in q10.selections
        ]


def _single_query(cond):
    return (
        "for $x in //FactDoc/Fact,\n"
        "    $y in //dimensions[@dim-id='Customer']/Level/instance\n"
        f"where {cond}\n"
        "and $x/dimension[@dim-id='Customer']/@value-id = $y/@id\n"
        "return $x\n"
    )


class TestGrammar:
    def test_default_frequency_and_id(self, retail_meta):
        wl = parse_workload(_single_query("$y/attribute[@id='c_nation_key']/@value = '1'"), retail_meta)
        assert wl.queries[0].query_id == "q1"
        assert wl.queries[0].frequency == 1

    def test_pragma_with_spaces(self, retail_meta):
        text = "(: freq = 7 :)\n" + _single_query("$y/attribute[@id='c_nation_key']/@value = '1'")
        assert parse_workload(text, retail_meta).queries[0].frequency == 7

    def test_missing_where_is_syntax_error(self, retail_meta):
        text = "for $x in //FactDoc/Fact return $x"
        with pytest.raises(WorkloadSyntaxError, match="'where'") as excinfo:
            parse_workload(text, retail_meta)
        assert excinfo.value.line is not None and excinfo.value.column is not None

    def test_no_join_is_syntax_error(self, retail_meta):
        text = (
            "for $x in //FactDoc/Fact,\n"
            "    $y in //dimensions[@dim-id='Customer']/Level/instance\n"
            "where $y/attribute[@id='c_nation_key']/@value = '1'\n"
            "return $x\n"
        )
        with pytest.raises(WorkloadSyntaxError, match="no join"):
            parse_workload(text, retail_meta)

    def test_unknown_attribute(self, retail_meta):
        with pytest.raises(UnknownAttributeError, match="c_ghost"):
            parse_workload(
                _single_query("$y/attribute[@id='c_ghost']/@value = '1'"), retail_meta
            )

    def test_unknown_dimension(self, retail_meta):
        text = _single_query("$y/attribute[@id='c_nation_key']/@value = '1'").replace(
            "dim-id='Customer']/Level", "dim-id='Ghost']/Level"
        )
        with pytest.raises(UnknownDimensionError, match="Ghost"):
            parse_workload(text, retail_meta)

    def test_selection_on_unjoined_dimension(self, retail_meta):
        with pytest.raises(WorkloadSyntaxError, match="never joins"):
            parse_workload(
                _single_query("$y/attribute[@id='d_date_name']/@value = 'Monday'"),
                retail_meta,
            )

    def test_duplicate_query_ids(self, retail_meta):
        block = "(: id=q1 :)\n" + _single_query(
            "$y/attribute[@id='c_nation_key']/@value = '1'"
        )
        with pytest.raises(WorkloadSyntaxError, match="duplicate"):
            parse_workload(block + "\n" + block, retail_meta)

    def test_zero_frequency_rejected(self, retail_meta):
        text = "(: id=q1 freq=0 :)\n" + _single_query(
            "$y/attribute[@id='c_nation_key']/@value = '1'"
        )
        with pytest.raises(WorkloadSyntaxError, match="positive"):
            parse_workload(text, retail_meta)

    def test_path_valued_rhs_rejected(self, retail_meta):
        with pytest.raises(WorkloadSyntaxError, match="quoted literal"):
            parse_workload(
                _single_query("$y/attribute[@id='c_nation_key']/@value = $y/@id"),
                retail_meta,
            )

    def test_error_locations_point_at_offence(self, retail_meta):
        text = "for $x in //FactDoc/Fact,\n    $y in //nonsense\nwhere x\nreturn $x"
        with pytest.raises(WorkloadSyntaxError) as excinfo:
            parse_workload(text, retail_meta)
        assert excinfo.value.line == 2


class TestRoundTrip:
    def test_render_then_parse_is_identity(self, retail_meta, sample_workload):
        assert parse_workload(render_workload(sample_workload), retail_meta) == sample_workload

    def test_rendered_selections_appear_verbatim(self, sample_workload):
        text = render_workload(sample_workload)
        for query in sample_workload.queries:
            for sel in query.selections:
                assert f"[@id='{sel.attribute}']/@value {sel.op} '{sel.rhs}'" in text


class TestExtraction:
    def test_sample_predicates(self, sample_workload):
        extracted = extract_selection_predicates(sample_workload)
        assert extracted == (
            SelectionPredicate("Customer", "c_nation_key", "=", "13"),
            SelectionPredicate("Part", "p_type", "=", "PROMO BURNISHED COPPER"),
            SelectionPredicate("Customer", "c_nation_key", ">", "15"),
            SelectionPredicate("Date", "d_date_name", "=", "Saturday"),
        )

    def test_joins_only_workload_yields_empty_set(self, retail_meta):
        text = (
            "for $x in //FactDoc/Fact,\n"
            "    $y in //dimensions[@dim-id='Customer']/Level/instance\n"
            "where $x/dimension[@dim-id='Customer']/@value-id = $y/@id\n"
            "return $x\n"
        )
        wl = parse_workload(text, retail_meta)
        assert extract_selection_predicates(wl) == ()

    def test_shared_predicate_deduplicated(self, retail_meta):
        block = _single_query("$y/attribute[@id='c_nation_key']/@value = '13'")
        wl = parse_workload(block + "\n" + block.replace("$x", "$x"), retail_meta)
        assert len(wl.queries) == 2
        assert len(extract_selection_predicates(wl)) == 1


class TestAttribution:
    def test_partition_property(self, retail_meta, sample_workload):
        extracted = extract_selection_predicates(sample_workload)
        grouped = attribute_predicates(extracted, retail_meta)
        assert set(grouped) == {"Customer", "Part", "Date"}
        regrouped = [p for preds in grouped.values() for p in preds]
        assert sorted(regrouped, key=lambda p: p.sort_key()) == sorted(
            extracted, key=lambda p: p.sort_key()
        )
        for dim_id, preds in grouped.items():
            assert all(p.dim_id == dim_id for p in preds)

    def test_empty_set_gives_empty_mapping(self, retail_meta):
        assert attribute_predicates((), retail_meta) == {}

    def test_unknown_attribute_rejected(self, retail_meta):
        with pytest.raises(UnknownAttributeError):
            attribute_predicates(
                (SelectionPredicate("Customer", "ghost", "=", "1"),), retail_meta
            )
