// Copyright 2026 The demud Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header for the core library (no image codecs).

#include "demud/error.hpp"
#include "demud/evaluation.hpp"
#include "demud/feature_matrix.hpp"
#include "demud/io.hpp"
#include "demud/lowrank.hpp"
#include "demud/random.hpp"
#include "demud/run_io.hpp"
#include "demud/selection.hpp"
#include "demud/subsample.hpp"
#include "demud/synthetic.hpp"
