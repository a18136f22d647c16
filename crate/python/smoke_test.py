"""Smoke test for the fpsym_py extension module."""

import json

import fpsym_py as fp


def main():
    g1 = fp.Expr("(-a2+2*(a2*x+a1)^2)*exp(-3*a2*t)")
    g4 = g1.transform("F1")
    assert g4.residual().is_zero(), g4
    assert fp.Expr("exp(-a2*t)").transform("F1") == g1
    assert not fp.Expr("x^2").residual().is_zero()
    assert fp.Expr("x").diff("x") == fp.Expr("1")

    verify = json.loads(fp.verify())
    assert verify["schema"] == "fpsym.report/v1"
    assert all(i["outcome"] in ("pass", "info") for i in verify["items"]), verify["items"]

    table = json.loads(fp.table())
    assert sum(i["outcome"] == "pass" for i in table["items"]) == 21

    y1 = json.loads(fp.check_claim("y1-final-solution"))
    assert y1["items"][0]["outcome"] == "fail"
    assert json.loads(fp.check_claim("y1-corrected"))["items"][0]["outcome"] == "pass"

    chain = json.loads(fp.generate("exp(-a2*t)", ["F1", "F1"]))
    assert [i["id"] for i in chain["items"]] == ["seed.F1", "seed.F1.F1"]

    fd = json.loads(fp.residual_report(g1, 1.0, 1.0))
    assert fd["verdict"] == "verified", fd["verdict"]
    assert "g4" in fp.claims()

    try:
        fp.Expr("u +")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")
    print("fpsym_py smoke test: ok")


if __name__ == "__main__":
    main()
