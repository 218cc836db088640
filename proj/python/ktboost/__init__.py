# Copyright 2026 The ktboost Authors.
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
"""Boosting with kernel ridge and tree base learners."""

from ._ktboost import (
    BoostConfig,
    DataError,
    Dataset,
    Ensemble,
    Error,
    FitReport,
    FormatError,
    NumericalError,
    bench,
    fit,
    kernel_matrix,
    load_csv,
    select_rho,
    split,
)

__all__ = [
    "BoostConfig",
    "DataError",
    "Dataset",
    "Ensemble",
    "Error",
    "FitReport",
    "FormatError",
    "NumericalError",
    "bench",
    "fit",
    "kernel_matrix",
    "load_csv",
    "select_rho",
    "split",
]
