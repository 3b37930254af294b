import datetime as dt
import io
import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from agentscan.catalog import (
    AgentDescriptor,
    Catalog,
    CatalogParseError,
    CatalogValidationError,
    Category,
    Confidence,
    HeuristicRule,
    PatternKind,
    catalog_to_dict,
    dump_catalog,
    load_catalog,
    rules_active_at,
    validate_catalog,
)
from table1 import CELLS, TOOLS


def _rule(rule_id="r1", category=Category.COMMIT_COAUTHOR, kind=PatternKind.LITERAL, pattern="cline", **kw):
    return HeuristicRule(rule_id, category, kind, pattern, **kw)


def _catalog(*agents, generic=True):
    extra = (AgentDescriptor("generic", "Generic", generic=True),) if generic else ()
    return Catalog(1, dt.date(2025, 10, 20), extra + tuple(agents))


def test_builtin_has_one_descriptor_per_tool(catalog):
    assert len(catalog.agents) == 35
    assert [a.id for a in catalog.agents] == [t[0] for t in TOOLS]
    assert [a.display_name for a in catalog.agents] == [t[1] for t in TOOLS]
    assert sum(a.generic for a in catalog.agents) == 1
    assert catalog.generic_agent.id == "generic"


def test_builtin_validates_clean(catalog):
    assert validate_catalog(catalog) == []


def test_non_generic_agents_have_rules(catalog):
    assert all(a.rules for a in catalog.agents if not a.generic)


def test_claude_code_rules(catalog):
    rules = {(r.category, r.pattern) for r in catalog.agent("claude-code").rules}
    assert {
        (Category.FILE_PATH, "CLAUDE.md"),
        (Category.FILE_PATH, ".claude/"),
        (Category.FILE_PATH, ".claudeignore"),
        (Category.FILE_PATH, ".github/workflows/claude"),
        (Category.COMMIT_COAUTHOR, "noreply@anthropic.com"),
        (Category.COMMIT_COAUTHOR, "claude@anthropic.com"),
        (Category.COMMIT_COAUTHOR, "assistant@anthropic.com"),
        (Category.COMMIT_AUTHOR, "Claude"),
        (Category.BRANCH_PREFIX, "claude/"),
    } <= rules


def test_generic_and_aider_rules(catalog):
    generic = {(r.category, r.pattern) for r in catalog.agent("generic").rules}
    assert generic == {(Category.FILE_PATH, "AGENTS.md"), (Category.PR_LABEL, "ai-generated")}
    aider = {(r.category, r.pattern) for r in catalog.agent("aider").rules}
    assert aider == {(Category.FILE_PATH, ".aider.conf.yml"), (Category.COMMIT_COAUTHOR, "aider"),
                     (Category.COMMIT_COAUTHOR, "aider@aider.chat")}


def test_conventions_md_is_a_note_not_a_rule(catalog):
    patterns = {r.pattern for _, r in catalog.iter_rules()}
    assert "CONVENTIONS.md" not in patterns
    assert "CONVENTIONS.md" in catalog.agent("aider").notes


def test_every_cell_maps_to_exactly_one_rule(catalog):
    for agent_id, cat, _, pattern, _, _ in CELLS:
        hits = [r for r in catalog.agent(agent_id).rules if r.category.value == cat and r.pattern == pattern]
        assert len(hits) == 1, (agent_id, cat, pattern)


def test_confidence_tiers(catalog):
    by_pattern = {r.pattern: r for _, r in catalog.iter_rules() if r.category is Category.FILE_PATH}
    assert by_pattern["memory-bank/"].confidence is Confidence.LOW
    assert by_pattern["memory_bank/"].confidence is Confidence.LOW
    assert by_pattern[".cursorrules"].confidence is Confidence.MEDIUM
    chatgpt = catalog.agent("chatgpt").rules[0]
    assert chatgpt.confidence is Confidence.MEDIUM and chatgpt.notes
    users = [r for _, r in catalog.iter_rules() if r.category is Category.USER_NAME]
    assert users and all(r.confidence is Confidence.MEDIUM for r in users)


def test_builtin_windows_are_open(catalog):
    assert all(r.valid_from is None and r.valid_to is None for _, r in catalog.iter_rules())


# -- loading ------------------------------------------------------------------

def test_load_empty_agents():
    c = load_catalog(b'{"schema_version": 1, "generated_on": "2025-10-20", "agents": []}')
    assert c.agents == ()


def test_load_reports_line_and_column():
    with pytest.raises(CatalogParseError) as exc:
        load_catalog(io.BytesIO(b'{\n  "schema_version": 1,\n  "agents": [\n}'))
    assert exc.value.line == 4


def test_duplicate_literal_across_agents_rejected():
    doc = catalog_to_dict(_catalog(
        AgentDescriptor("cline", "Cline", rules=(_rule("cline/a"),)),
        AgentDescriptor("other", "Other", rules=(_rule("other/a"),)),
    ))
    with pytest.raises(CatalogValidationError) as exc:
        load_catalog(json.dumps(doc).encode())
    assert "other/a" in str(exc.value)


def test_shared_pattern_allowed_with_generic():
    c = Catalog(1, dt.date(2025, 1, 1), (
        AgentDescriptor("generic", "G", generic=True, rules=(_rule("g/a"),)),
        AgentDescriptor("cline", "Cline", rules=(_rule("cline/a"),)),
    ))
    assert validate_catalog(c) == []


def test_unknown_fields_ignored():
    doc = catalog_to_dict(_catalog(AgentDescriptor("x", "X", rules=(_rule("x/1"),))))
    doc["future"] = {"a": 1}
    doc["agents"][1]["rules"][0]["weight"] = 3
    assert load_catalog(json.dumps(doc)) == _catalog(AgentDescriptor("x", "X", rules=(_rule("x/1"),)))


def test_bad_enum_is_parse_error():
    doc = catalog_to_dict(_catalog(AgentDescriptor("x", "X", rules=(_rule("x/1"),))))
    doc["agents"][1]["rules"][0]["category"] = "commit_message"
    with pytest.raises(CatalogParseError):
        load_catalog(json.dumps(doc))


# -- validation ---------------------------------------------------------------

def test_window_order_violation():
    r = _rule("x/1", valid_from=dt.date(2025, 6, 1), valid_to=dt.date(2025, 1, 1))
    diags = validate_catalog(_catalog(AgentDescriptor("x", "X", rules=(r,))))
    assert len(diags) == 1 and diags[0].subject == "x/1" and diags[0].severity == "error"


def test_kind_category_compatibility():
    r = _rule("x/1", Category.FILE_PATH, PatternKind.SUBSTRING, "CLAUDE")
    diags = validate_catalog(_catalog(AgentDescriptor("x", "X", rules=(r,))))
    assert len(diags) == 1 and "not allowed" in diags[0].message


@pytest.mark.parametrize("cat,kind", [
    (Category.BRANCH_PREFIX, PatternKind.SUBSTRING),
    (Category.PR_LABEL, PatternKind.PATH_NAME),
    (Category.COMMIT_AUTHOR, PatternKind.PATH_DIR_PREFIX),
])
def test_more_incompatible_kinds(cat, kind):
    diags = validate_catalog(_catalog(AgentDescriptor("x", "X", rules=(_rule("x/1", cat, kind, "p"),))))
    assert [d.subject for d in diags] == ["x/1"]


def test_bad_agent_ids_and_generic_count():
    c = Catalog(1, dt.date(2025, 1, 1), (AgentDescriptor("Bad_Id", "B", rules=(_rule("b/1"),)),))
    subjects = {d.subject for d in validate_catalog(c)}
    assert subjects == {"Bad_Id", "<catalog>"}


def test_duplicate_rule_ids():
    c = _catalog(AgentDescriptor("x", "X", rules=(_rule("dup", pattern="a"), _rule("dup", pattern="b"))))
    assert [d.message for d in validate_catalog(c)] == ["duplicate rule_id"]


def test_empty_pattern():
    c = _catalog(AgentDescriptor("x", "X", rules=(_rule("x/1", pattern=""),)))
    assert [d.message for d in validate_catalog(c)] == ["empty pattern"]


# -- validity windows ---------------------------------------------------------

def _windowed(valid_from=None, valid_to=None):
    r = _rule("codex/branch", Category.BRANCH_PREFIX, PatternKind.LITERAL, "codex/",
              valid_from=valid_from, valid_to=valid_to)
    return _catalog(AgentDescriptor("codex", "Codex", rules=(r,)))


def test_active_after_start():
    c = _windowed(valid_from=dt.date(2025, 4, 16))
    assert [r.rule_id for _, r in rules_active_at(c, dt.date(2025, 10, 20))] == ["codex/branch"]
    assert rules_active_at(c, dt.date(2025, 4, 15)) == []


def test_open_window_always_active():
    c = _windowed()
    for d in (dt.date(1990, 1, 1), dt.date(2025, 10, 20), dt.date(2100, 1, 1)):
        assert len(rules_active_at(c, d)) == 1


def test_closed_window_excluded():
    c = _windowed(valid_to=dt.date(2025, 3, 1))
    assert rules_active_at(c, dt.date(2025, 10, 20)) == []
    assert len(rules_active_at(c, dt.date(2025, 3, 1))) == 1


def test_unknown_date_uses_open_windows_only():
    assert rules_active_at(_windowed(valid_to=dt.date(2025, 3, 1)), None) == []
    assert len(rules_active_at(_windowed(), None)) == 1


def test_pairs_rule_with_owner(catalog):
    for agent, rule in rules_active_at(catalog, dt.date(2025, 10, 20)):
        assert rule in agent.rules


dates = st.dates(min_value=dt.date(2020, 1, 1), max_value=dt.date(2030, 12, 31))


@given(dates, st.none() | dates, st.none() | dates, st.integers(0, 400), st.integers(0, 400))
def test_widening_window_never_removes(day, vf, vt, extend_back, extend_fwd):
    if vf and vt and vf > vt:
        vf, vt = vt, vf
    before = bool(rules_active_at(_windowed(vf, vt), day))
    wider_from = vf - dt.timedelta(days=extend_back) if vf else None
    wider_to = vt + dt.timedelta(days=extend_fwd) if vt else None
    after = bool(rules_active_at(_windowed(wider_from, wider_to), day))
    assert after or not before


# -- round trip ---------------------------------------------------------------

def test_builtin_round_trip(catalog):
    assert load_catalog(dump_catalog(catalog)) == catalog


ident = st.from_regex(r"[a-z0-9][a-z0-9-]{0,8}", fullmatch=True)
text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=12)


@st.composite
def catalogs(draw):
    ids = draw(st.lists(ident, unique=True, max_size=4))
    agents = [AgentDescriptor("generic", "Generic", "https://x", True)]
    n = 0
    for aid in ids:
        if aid == "generic":
            continue
        rules = []
        for _ in range(draw(st.integers(0, 3))):
            cat = draw(st.sampled_from(list(Category)))
            kind = draw(st.sampled_from(sorted({
                Category.FILE_PATH: [PatternKind.PATH_NAME, PatternKind.PATH_DIR_PREFIX],
                Category.BRANCH_PREFIX: [PatternKind.LITERAL],
                Category.PR_LABEL: [PatternKind.LITERAL],
            }.get(cat, [PatternKind.LITERAL, PatternKind.SUBSTRING]))))
            vf = draw(st.none() | st.dates())
            vt = draw(st.none() | st.dates(min_value=vf or dt.date.min))
            n += 1
            rules.append(HeuristicRule(f"{aid}/{n}", cat, kind, f"{aid}-{n}", vf, vt,
                                       draw(st.sampled_from(list(Confidence))), draw(text)))
        agents.append(AgentDescriptor(aid, draw(text), draw(text), False, tuple(rules), draw(text)))
    return Catalog(1, draw(st.dates()), tuple(agents))


@given(catalogs())
def test_round_trip_identity(c):
    assert validate_catalog(c) == []
    assert load_catalog(dump_catalog(c)) == c


def test_serialization_key_order(catalog):
    doc = json.loads(dump_catalog(catalog))
    assert list(doc) == ["schema_version", "generated_on", "agents"]
    rule = doc["agents"][5]["rules"][0]
    assert list(rule) == ["rule_id", "category", "pattern_kind", "pattern", "valid_from", "valid_to",
                          "confidence", "notes"]
    assert list(doc["agents"][5])[:4] == ["id", "display_name", "homepage", "generic"]


def test_catalog_values_are_immutable(catalog):
    with pytest.raises(Exception):
        catalog.agents[0].id = "x"
    assert replace(catalog) == catalog
