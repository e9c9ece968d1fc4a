# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Comparing recommenders
#
# Five algorithms on a synthetic 1000 x 100 dataset: top-N lists scored
# with ROC and precision/recall, then rating predictions scored with RMSE.
# The last part converts the data to 0-1 and repeats the top-N run with
# only three known items per test user.

# %%
import numpy as np

from reclab import binarize
from reclab import evaluate as ev
from reclab.synthetic import SyntheticSpec, generate

N_VALUES = [1, 3, 5, 10, 15, 20]
ALGORITHMS = {
    "random items": ("RANDOM", {}),
    "popular items": ("POPULAR", {}),
    "user-based CF": ("UBCF", {"nn": 50}),
    "item-based CF": ("IBCF", {"k": 50}),
    "SVD approximation": ("SVD", {"k": 50}),
}

# %%
data = generate(SyntheticSpec(n_users=1000, n_items=100, density=0.3, seed=1))
print(data)
print("ratings per user: min", data.row_counts().min(), "median", np.median(data.row_counts()))

# %% [markdown]
# ## Top-N lists
#
# 90% of the users train the models. For each test user all but five
# ratings are given to the recommender and the five withheld ones are the
# ground truth; ratings of 5 or more count as good.

# %%
scheme = ev.make_scheme(data, "split", train=0.9, given=-5, good_rating=5, seed=2016)
scheme

# %%
results = ev.evaluate(scheme, ALGORITHMS, n_values=N_VALUES)


def show(results):
    for label, r in results.items():
        print(f"{label:18s} AUC {ev.roc_auc(r):.3f}")
        for row in r.avg():
            print(f"    n={row.n:<3d} TPR {row.TPR:.3f}  FPR {row.FPR:.3f}  "
                  f"precision {row.precision:.3f}  recall {row.recall:.3f}")


show(results)

# %% [markdown]
# A text ROC plot: one column per algorithm, one line per list length.

# %%
print("n    " + "  ".join(f"{k[:12]:>12s}" for k in results))
for j, n in enumerate(N_VALUES):
    cells = [f"{r.avg()[j].FPR:.2f}/{r.avg()[j].TPR:.2f}" for r in results.values()]
    print(f"{n:<4d} " + "  ".join(f"{c:>12s}" for c in cells))

# %% [markdown]
# ## Rating prediction

# %%
rating_results = ev.evaluate(scheme, ALGORITHMS, type="ratings")
for label, r in rating_results.items():
    rmse, mse, mae = r.avg()
    print(f"{label:18s} RMSE {rmse:.3f}  MSE {mse:.3f}  MAE {mae:.3f}")

# %% [markdown]
# ## 0-1 data
#
# Keep ratings of 5 or more as positives, drop users with fewer than four
# of them, and give each test user three known items. SVD only works on
# real ratings and is skipped.

# %%
b = binarize(data, 5)
b = b.subset_users(np.flatnonzero(b.row_counts() >= 4))
bscheme = ev.make_scheme(b, "split", train=0.9, given=3, seed=2016)
bresults = ev.evaluate(bscheme, ALGORITHMS, n_values=N_VALUES)
print("skipped:", bresults.skipped)
show(bresults)

# %%
def margin(res):
    return ev.roc_auc(res["user-based CF"]) - ev.roc_auc(res["popular items"])


print(f"UBCF - POPULAR AUC, ratings: {margin(results):+.3f}")
print(f"UBCF - POPULAR AUC, 0-1:     {margin(bresults):+.3f}")

# %% [markdown]
# The same experiment from the shell:
#
# ```
# reclab generate --out data/synthetic.csv --seed 1
# reclab evaluate -c configs/compare_topn.json --svg
# ```
