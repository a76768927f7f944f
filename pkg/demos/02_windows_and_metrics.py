"""The two small ideas the models rest on: window statistics and
label-set metrics.  Runs in a second.
"""
from dialogscreen.multilabel import Category, evaluate
from dialogscreen.windowing import quartile_index, window_stats

# A user's sadness score over their last six sessions.
sadness = [0.10, 0.40, 0.35, 0.80, 0.20, 0.55]
avg, q1, q2, q3 = window_stats(sadness)
print(f"avg {avg:.3f}  Q1 {q1}  Q2 {q2}  Q3 {q3}")
# quartiles are picked from the sorted window, not interpolated
print("positions used:", [quartile_index(k, len(sadness)) for k in (1, 2, 3)], "of", sorted(sadness))

# Only the last 30 sessions count.
print(window_stats([1.0] * 50 + [0.0] * 30))

# Each category is a set of conditions: none_none is the empty set,
# anxiety_depression holds both. Predicting "anxiety" for a user who has
# both conditions is half right under the sample metrics.
actual = [Category.ANXIETY_DEPRESSION, Category.NONE_NONE, Category.ANXIETY_NONE, Category.NONE_DEPRESSION]
predicted = [Category.ANXIETY_NONE, Category.NONE_NONE, Category.ANXIETY_NONE, Category.NONE_NONE]
report = evaluate(actual, predicted)
print(f"exact match {report.exact_match:.3f}, accuracy {report.accuracy:.3f}, hamming {report.hamming_loss:.3f}")
print("label-based precision", report.precision)
print(report.to_text())
