// Copyright 2026 The fishgrad Authors.
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

#include "fishgrad/error.hpp"
#include "fishgrad/random.hpp"
#include "fishgrad/tensor.hpp"
#include "fishgrad/param_vector.hpp"
#include "fishgrad/tape.hpp"
#include "fishgrad/model.hpp"
#include "fishgrad/gradcheck.hpp"
#include "fishgrad/dataset.hpp"
#include "fishgrad/metrics.hpp"
#include "fishgrad/fisher.hpp"
#include "fishgrad/trainer.hpp"
#include "fishgrad/ird.hpp"
#include "fishgrad/grid.hpp"
#include "fishgrad/report.hpp"
#include "fishgrad/io.hpp"
