import dataclasses

import pytest

from catbound import dsl
from catbound.apps import (BoundaryComponent, GluingSetup, Piece,
                           PreconditionError, build_setup, certify_branched,
                           certify_double, certify_gluing, gluing_sum_bound,
                           gluing_to_gog)
from catbound.extnat import ZERO, ExtNat
from catbound.model import Ref


def load(text):
    u, diags = dsl.load_text(text, dsl.load_prelude())
    assert not diags, diags
    return u


def certify_fixture(fixture_texts, stem, name):
    u = load(fixture_texts[stem])
    s = u.setups[name]
    if type(s).__name__ == "DoubleSetup":
        return certify_double(u, s)
    return certify_branched(u, s)


# -- the three shipped setups ---------------------------------------------


def test_double_via_graph_route(fixture_texts):
    cert = certify_fixture(fixture_texts, "double_max", "DblMax")
    assert cert.conclusion == "volume_vanishes"
    assert cert.value == ExtNat(3)
    assert cert.trace.rule == "gog-max"
    assert not cert.failed_items()
    items = [x.item for x in cert.ledger]
    assert "connectedness of the glued space" in items
    assert any("(i) pairing 0 [copyA.s ~ copyB.s]" in i for i in items)
    assert any("(ii) pairing 0: gd of the interface group at most 2" == i
               for i in items)
    assert any("(iii) piece copyA" in i for i in items)
    assert any(i.startswith("boundary scope: copyB.s pi1") for i in items)


def test_double_via_additive_route(fixture_texts):
    cert = certify_fixture(fixture_texts, "double_sum", "DblSum")
    assert cert.conclusion == "volume_vanishes"
    assert cert.value == ExtNat(3)
    assert cert.trace.rule == "gluing-sum"
    # the winning route's ledger only carries the additive hypothesis
    assert [x.item for x in cert.ledger] == ["additive bound at most 3"]
    assert cert.ledger[0].status == "verified"


def test_branched_pentagon(fixture_texts):
    cert = certify_fixture(fixture_texts, "branched_five", "BrFive")
    assert cert.conclusion == "volume_vanishes"
    assert cert.value == ExtNat(3)
    assert cert.trace.rule == "polygon-max"
    statuses = {x.item.split(" ")[0]: x.status for x in cert.ledger}
    assert statuses == {"(i)": "asserted", "(ii)": "asserted",
                        "(iii)": "verified", "(iv)": "verified",
                        "(v)": "verified"}


def test_twist_never_changes_the_certificate(fixture_texts):
    u = load(fixture_texts["double_max"])
    s = u.setups["DblMax"]
    plain = certify_double(u, s)
    twisted = certify_double(u, dataclasses.replace(s, twisted=True))
    assert plain.to_json() == twisted.to_json()


# -- each hypothesis is load-bearing --------------------------------------


def mutated(fixture_texts, stem, name, old, new):
    text = fixture_texts[stem]
    assert old in text
    u = load(text.replace(old, new))
    return u, u.setups[name]


@pytest.mark.parametrize("old,new,marker", [
    ("pi1_injective = assert;", "", "(i) pairing 0"),
    ("boundary s : F2 {", "boundary s : F2 x Z x Z {",
     "(ii) pairing 0: gd of the interface group"),
    ("cat[Am] <= 3", "cat[Am] <= 4", "(iii) piece copyA"),
])
def test_double_max_mutations(fixture_texts, old, new, marker):
    u, s = mutated(fixture_texts, "double_max", "DblMax", old, new)
    cert = certify_double(u, s)
    assert cert.conclusion == "inconclusive"
    assert cert.value is None
    failed = [x.item for x in cert.failed_items()]
    assert any(marker in i for i in failed), failed
    # both routes are reported once neither concludes
    assert any(i.startswith("max route:") for i in failed)
    assert any(i.startswith("sum route:") for i in failed)


def test_double_sum_mutation(fixture_texts):
    u, s = mutated(fixture_texts, "double_sum", "DblSum",
                   "cat[Am] <= 1", "cat[Am] <= 3")
    cert = certify_double(u, s)
    assert cert.conclusion == "inconclusive"
    failed = [x.item for x in cert.failed_items()]
    assert any("additive bound at most 3" in i for i in failed), failed


@pytest.mark.parametrize("old,new,marker", [
    ("assume pi1_injective;", "", "(i)"),
    ("assume intersection;", "", "(ii)"),
    ("core = One;", "core = MW;", "(iii)"),
    ("gd <= 2", "gd <= 3", "(iv)"),
    ("cat[Am] <= 3", "cat[Am] <= 4", "(v)"),
])
def test_branched_mutations(fixture_texts, old, new, marker):
    u, s = mutated(fixture_texts, "branched_five", "BrFive", old, new)
    cert = certify_branched(u, s)
    assert cert.conclusion == "inconclusive"
    assert cert.value is None
    failed = cert.failed_items()
    assert len(failed) == 1, [x.item for x in failed]
    assert failed[0].item.startswith(marker)


def test_branched_needs_four_copies(fixture_texts):
    u = load(fixture_texts["branched_five"])
    s = dataclasses.replace(u.setups["BrFive"], d=3)
    with pytest.raises(PreconditionError) as exc:
        certify_branched(u, s)
    assert str(exc.value) == ("branched setup 'BrFive' has d = 3; "
                              "the polygon bound requires d >= 4")


# -- gluings and the two vanishing scopes ---------------------------------


GLUING = """
group PA { cat[Am] <= 2 by "piece estimate"; }

gluing GL {
  n = 4;
  piece A {
    group = PA;
    boundary a : Z { pi1_injective = assert; }
  }
  piece B {
    group = PA;
    boundary b : Z { pi1_injective = assert; }
    %s
  }
  pair A.a - B.b;
  connected = assert;
}
"""


def test_gluing_with_clean_scopes():
    u = load(GLUING % "")
    cert = certify_gluing(u, u.setups["GL"])
    assert cert.conclusion == "volume_vanishes"
    assert cert.value == ExtNat(2)


def test_unpaired_boundary_blocks_vanishing_but_not_the_bound():
    extra = "boundary c : Z x Z x Z { pi1_injective = assert; }"
    u = load(GLUING % extra)
    cert = certify_gluing(u, u.setups["GL"])
    assert cert.conclusion == "cat_bound"
    assert cert.value == ExtNat(2)
    failed = cert.failed_items()
    assert failed and all(x.item.startswith("boundary scope:") for x in failed)
    assert any("gd of B.c at most 2" in x.item for x in failed)


def test_unconnected_gluing_is_inconclusive():
    text = (GLUING % "").replace("connected = assert;", "")
    u = load(text)
    cert = certify_gluing(u, u.setups["GL"])
    assert cert.conclusion == "inconclusive"
    assert cert.failed_items()[0].item == "connectedness of the glued space"


def test_space_level_declaration_feeds_the_additive_route():
    u = load("""
double DS {
  n = 4;
  group = F2 x F2;
  cat_am <= 1;
  boundary t : Z { pi1_injective = assert; }
}
""")
    cert = certify_double(u, u.setups["DS"])
    assert cert.conclusion == "volume_vanishes"
    assert cert.value == ExtNat(2)
    assert cert.trace.rule == "gluing-sum"
    assert any(node.rule == "space-declared" for node in cert.trace.walk())


def test_sum_bound_with_no_pairings():
    u = load('group PA { cat[Am] <= 2 by "piece estimate"; }')
    s = GluingSetup("lonely", 4,
                    (Piece("A", Ref("PA")),), (), True)
    r = gluing_sum_bound(u, s)
    assert r.value == ExtNat(2)
    assert r.trace.rule == "gluing-sum"
    interfaces = r.trace.premises[1]
    assert interfaces.value == ZERO and interfaces.premises == ()


# -- construction errors --------------------------------------------------


def test_build_setup_diagnostics():
    bad = """
double D0 { n = 0; group = Z; boundary s : Z; }
double D1 { n = 4; group = Z; }
double D2 { n = 4; group = Z; boundary s : Z; boundary s : Z; }
branched B0 { n = 2; d = 5; piece = Z; wall = Z; core = One; }
branched B1 { n = 4; d = 5; piece = Z; wall = Z; core = One; embed core = nohom; }
"""
    _, diags = dsl.load_text(bad, dsl.load_prelude())
    messages = " | ".join(d.message for d in diags)
    assert "dimension n must be at least 1" in messages
    assert "at least one boundary component" in messages
    assert "duplicate boundary id 's'" in messages
    assert "branched setups need n >= 3" in messages
    assert "unknown homomorphism 'nohom'" in messages


def test_build_setup_rejects_foreign_declarations():
    u = load("")
    with pytest.raises(TypeError):
        build_setup(u, object())


def test_gluing_to_gog_errors():
    piece = Piece("A", Ref("Z"), None,
                  (BoundaryComponent("a", Ref("Z"), True),))
    dangling = GluingSetup("x", 4, (piece,), ((("A", "a"), ("B", "b")),), True)
    with pytest.raises(ValueError):
        gluing_to_gog(dangling)
    no_boundary = GluingSetup("y", 4, (piece,), ((("A", "z"), ("A", "a")),), True)
    with pytest.raises(ValueError):
        gluing_to_gog(no_boundary)


# -- serialization --------------------------------------------------------


def test_certificate_json_shape(fixture_texts):
    cert = certify_fixture(fixture_texts, "double_max", "DblMax")
    js = cert.to_json()
    assert list(js.keys()) == ["conclusion", "value", "ledger", "trace"]
    assert js["value"] == 3
    for item in js["ledger"]:
        assert list(item.keys()) == ["item", "status", "detail"]
    text = cert.to_text()
    assert text.startswith("conclusion: volume_vanishes\ncategory bound: 3")
    assert "hypotheses:" in text
    assert "  [verified] (ii) pairing 0" in text
