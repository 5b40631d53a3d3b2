// Copyright 2026 The gemdyn Authors
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

#ifndef GEMDYN_GEMDYN_HPP_
#define GEMDYN_GEMDYN_HPP_

#include "gemdyn/autodiff.hpp"
#include "gemdyn/checkpoint.hpp"
#include "gemdyn/config.hpp"
#include "gemdyn/csv.hpp"
#include "gemdyn/data.hpp"
#include "gemdyn/envs.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/eval.hpp"
#include "gemdyn/layout.hpp"
#include "gemdyn/lie.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/parallel.hpp"
#include "gemdyn/plan.hpp"
#include "gemdyn/rng.hpp"
#include "gemdyn/selftest.hpp"
#include "gemdyn/train.hpp"

#endif  // GEMDYN_GEMDYN_HPP_
