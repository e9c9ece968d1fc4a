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
# # reclab walkthrough
#
# A small tour: build a rating matrix, normalize it, binarize it, then
# train a few recommenders and ask them for top-N lists and predicted
# ratings.

# %%
import numpy as np

import reclab
from reclab import RatingMatrix, binarize, fit, normalize, predict
from reclab.rulemine import TransactionDB, mine_rules
from reclab.similarity import similarity_matrix

np.set_printoptions(precision=3, suppress=True, linewidth=120)

# %% [markdown]
# ## A toy rating matrix
#
# Five users, ten items, NaN for "not rated". u4 rated i8 with an explicit 0,
# which is a real rating and not a missing value.

# %%
nan = np.nan
D = np.array([
    [nan, 2, 3, 5, nan, 5, nan, 4, nan, nan],
    [2, nan, nan, nan, nan, nan, nan, nan, 2, 3],
    [2, nan, nan, nan, nan, 1, nan, nan, nan, nan],
    [2, 2, 1, nan, nan, 5, nan, 0, 2, nan],
    [5, nan, nan, nan, nan, nan, nan, 5, nan, 4],
])
m = RatingMatrix.from_dense(D)
m

# %%
m.row_counts(), m.nnz

# %% [markdown]
# ## Normalization
#
# Row centering subtracts each user's mean; z-scores also divide by the
# sample standard deviation. `denormalize` inverts either one.

# %%
centered, info = normalize(m, "center")
centered.to_dense()

# %%
z, zinfo = normalize(m, "z-score")
np.allclose(reclab.denormalize(z, zinfo).to_dense(), D, equal_nan=True)

# %% [markdown]
# ## Binarization
#
# Ratings of 4 or more become 1; everything else is treated as missing.

# %%
b = binarize(m, 4)
b.to_dense().astype(int)

# %% [markdown]
# ## Similarities
#
# Pearson and cosine only look at co-rated items. Pairs with too little
# overlap come back as NaN.

# %%
similarity_matrix(m, "users", "pearson")

# %%
similarity_matrix(b, "items", "jaccard")[:4, :4]

# %% [markdown]
# ## Recommenders on synthetic data
#
# The built-in generator gives a popularity-skewed dataset with a latent
# taste structure, so collaborative filtering has something to find.

# %%
from reclab.synthetic import SyntheticSpec, generate

data = generate(SyntheticSpec(n_users=500, n_items=100, density=0.3, seed=1))
train = data.subset_users(np.arange(490))
active = data.subset_users(np.arange(490, 500))
data

# %%
ubcf = fit("UBCF", train, {"nn": 50})
ubcf

# %%
top = predict(ubcf, active, n=5)
top.as_labels()

# %%
pred = predict(ubcf, active, type="ratings")
pred.to_dense()[:3, :8]

# %% [markdown]
# Every registered algorithm is available by name. Parameters not given
# fall back to the registry defaults.

# %%
for e in reclab.registry_entries("real"):
    print(f"{e.name:12s} {e.default_params}")

# %% [markdown]
# ## Association rules on 0-1 data

# %%
bin_train = binarize(train, 5)
db = TransactionDB.from_sets([bin_train.row_items(u).tolist() for u in range(bin_train.n_users)],
                             bin_train.n_items)
rules = mine_rules(db, min_support=0.05, min_confidence=0.5, max_len=2)
for r in sorted(rules, key=lambda r: -r.confidence)[:5]:
    print(r.lhs, "->", r.rhs, f"support {r.support:.3f} confidence {r.confidence:.3f}")

# %%
ar = fit("AR", bin_train, {"support": 0.05, "confidence": 0.5, "maxlen": 2})
predict(ar, binarize(active, 5), n=3).as_labels()
