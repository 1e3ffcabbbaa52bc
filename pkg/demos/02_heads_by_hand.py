"""
The three few-shot heads on two-dimensional vectors
===================================================

Small enough to check by hand: matching networks attend over
cosine similarities, prototypical networks compare squared distances to class
centroids, and the one-way variant pins the negative centroid to the origin.
"""

import numpy as np

from fewshot_crisis.heads import head_forward, matching_head, oneway_head, proto_head

q = np.array([1.0, 0.0])
supports = np.array([[1.0, 0.0], [0.0, 1.0]])

# cos = (1, 0) so p_pos = e / (e + 1)
print("matching   ", matching_head(q, supports, [True, False]).p_pos, np.e / (np.e + 1))

# distances 1 and 9: p_pos = e^-1 / (e^-1 + e^-9)
print("prototypical", proto_head(np.zeros(2), np.array([1.0, 0.0]), np.array([3.0, 0.0])).p_pos)

# the one-way head only needs the positive prototype
print("one-way     ", oneway_head(q, q).p_pos)

###############################################################################
# Matching is unchanged when every vector is scaled, prototypical scores are
# unchanged when everything is translated, and the one-way head is not:
# moving the query and the prototype away from the origin makes the query
# look ever more positive.

print(matching_head(3 * q, 3 * supports, [True, False]).p_pos)
for shift in (0.0, 1.0, 10.0):
    t = np.array([shift, 0.0])
    print(f"shift {shift:4}: one-way p_pos = {oneway_head(q + t, q + t).p_pos:.4f}")

###############################################################################
# With a single support per class cosine and Euclidean neighbours can
# disagree, which is why matching and prototypical networks differ at k=1.

q = np.array([1.0, 0.1])
pos, neg = np.array([[10.0, 0.0]]), np.array([[0.0, 1.0]])
print("matching says positive:", head_forward("matching", pos, neg, q)[0].prediction)
print("prototypical says positive:", head_forward("prototypical", pos, neg, q)[0].prediction)
