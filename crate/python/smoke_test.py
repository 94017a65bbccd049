"""Smoke test for the mrkernel Python extension.

Build and install it first:
    pip install --no-build-isolation ./crates/python
"""

import math

import mrkernel

SOURCE = """
fn scale(a: matrix, k: real): matrix {
  c = zeros(rows(a), cols(a));
  for i = 0 to rows(a) {
    for j = 0 to cols(a) {
      c[i][j] = a[i][j] * k;
    }
  }
  return c;
}
"""


def main():
    (g,) = mrkernel.compile_source(SOURCE)
    assert g.name == "scale" and "start" in g.labels
    again = mrkernel.Cfg.from_dot(g.to_dot())
    assert again.labels == g.labels and again.edges == g.edges

    assert mrkernel.run_function(SOURCE, "scale", [[[1.0, 2.0]], 3.0]) == [[3.0, 6.0]]

    k = mrkernel.walk_kernel(g, g, lam=0.5)
    assert k > 0 and math.isclose(k, mrkernel.walk_kernel(again, g, lam=0.5))

    graphs = mrkernel.bundled_graphs()
    names, labels = mrkernel.bundled_labels()
    assert [x.name for x in graphs] == names and len(names) == 55

    gram = mrkernel.GramMatrix(graphs, lam=0.5)
    assert len(gram) == 55 and gram.eigen_range()[0] > -1e-6
    rows = gram.to_list()
    model = mrkernel.SvmModel.train(rows, labels["Additive"], c=10.0)
    scores = model.decision_values(rows)
    pos = [s for s, y in zip(scores, labels["Additive"]) if y == 1]
    neg = [s for s, y in zip(scores, labels["Additive"]) if y == -1]
    assert mrkernel.auc(pos, neg) > 0.5
    assert mrkernel.SvmModel.from_text(model.to_text()).predict(rows) == model.predict(rows)

    mt = {(f, c): p for f, c, p in mrkernel.mt_labels(SOURCE, seed=1, trials=20)}
    assert mt[("scale", "Multiplicative")] is True

    report = mrkernel.evaluate_bundled(repetitions=1)
    assert {c["category"] for c in report["categories"]} == set(labels)

    try:
        mrkernel.compile_source("fn broken(")
    except ValueError as e:
        assert "1:" in str(e)
    else:
        raise AssertionError("syntax error not reported")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
