"""Train SCNN and MLP on a synthetic tweet corpus and compare their early curves.

Writes everything under ./demo_runs.  The same commands work on the real
corpus by pointing --train-csv at the Sentiment140 training file.
"""

# %%
from pathlib import Path

from scnn import cli
from scnn.synthetic import write_corpus
from scnn.training import read_curve_csv

root = Path("demo_runs")
root.mkdir(exist_ok=True)
train_csv = write_corpus(root / "train.csv", 20_000, seed=0)
test_csv = write_corpus(root / "test.csv", 498, seed=1, neutral_fraction=0.28)

# %%
cli.main(["prepare", "--train-csv", str(train_csv), "--test-csv", str(test_csv), "--out-dir", str(root / "data")])
for model in ("scnn", "mlp"):
    cli.main(["train", "--model", model, "--data-dir", str(root / "data"), "--out-dir", str(root / "runs"),
              "--epochs", "1", "--seed", "1"])
    cli.main(["eval", "--checkpoint", str(root / "runs" / f"{model}.scn"), "--test-csv", str(test_csv),
              "--data-dir", str(root / "data")])

# %%
# Running accuracy over the last 100 samples, drawn as a text plot.
curves = {m: read_curve_csv(root / "runs" / f"{m}_curve.csv") for m in ("scnn", "mlp")}
print(f"\n{'samples':>8}  scnn                      mlp")
for a, b in list(zip(curves["scnn"], curves["mlp"]))[::12]:
    bar = lambda acc: ("#" * int(acc * 20)).ljust(20)
    print(f"{a.samples_seen:>8}  {bar(a.accuracy)} {a.accuracy:.2f}   {bar(b.accuracy)} {b.accuracy:.2f}")
