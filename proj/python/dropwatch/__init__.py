# Copyright 2026 The Dropwatch Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python interface to the dropwatch dropout early-warning pipeline."""

import json as _json

from . import _core
from ._core import (
    DataError,
    Model,
    balanced_class_weights,
    build_design_matrix,
    explained_output,
    gbdt_loss_trace,
    guided_random_split,
    read_design_matrix,
    roc_auc,
    smote,
    tree_shap,
)

__all__ = [
    "DataError",
    "Model",
    "balanced_class_weights",
    "build_design_matrix",
    "default_generator_config",
    "demo_config",
    "evaluate",
    "explained_output",
    "gbdt_loss_trace",
    "generate_cohort",
    "guided_random_split",
    "read_design_matrix",
    "roc_auc",
    "run_experiment",
    "smote",
    "threshold_sweep",
    "train",
    "tree_shap",
]


def default_generator_config():
    return _json.loads(_core.default_generator_config())


def demo_config():
    return _json.loads(_core.demo_config())


def generate_cohort(path, config=None):
    """Writes a synthetic cohort CSV to `path` and returns its record count."""
    return _core.generate_cohort_csv(_json.dumps(config or {}), str(path))


def train(kind, x, y, weights=None, configs=None):
    return _core.train(kind, x, list(y), list(weights or []),
                       _json.dumps(configs) if configs else "")


def evaluate(labels, probs, threshold=0.5):
    return _json.loads(_core.evaluate(list(labels), list(probs), threshold))


def threshold_sweep(probs, labels, grid=None):
    if grid is None:
        grid = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80]
    return _json.loads(_core.threshold_sweep(list(probs), list(labels), list(grid)))


def run_experiment(config, output_dir, base_dir=""):
    return _core.run_experiment(_json.dumps(config), str(output_dir), str(base_dir))
