# dogss library example
import numpy as np

import dogss
from dogss.simulate import ScenarioSpec, gen_instance, signal_prediction_error

dogss.debug = True
dogss.sigma_slab = 2.0

instance = gen_instance(ScenarioSpec.preset("medium", seed=7))
groups = instance.grouping.assignments.tolist()

# Grouped and ungrouped fits of the same problem
result = dogss.fit(instance.X, instance.y, groups=groups)
ungrouped = dogss.fit_ungrouped(instance.X, instance.y)
print("true support:", instance.support)
print("dogss top 10:", np.argsort(-result.feature_prob)[:10].tolist())
print("ssep  top 10:", np.argsort(-ungrouped.feature_prob)[:10].tolist())

# Cross-validated cutoff and the held-out error of the thresholded model
cv = dogss.cv_cutoff(instance.X, instance.y, groups=groups, folds=10)
beta = result.coefficients(cv.cutoff)
intercept = float(instance.y.mean() - instance.X.mean(axis=0) @ beta)
print("cutoff:", cv.cutoff)
print("prediction error:", signal_prediction_error(beta, instance.X_test, instance.y_test, intercept))
