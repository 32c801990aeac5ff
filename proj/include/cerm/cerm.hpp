// Copyright 2026 The cerm Authors.
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

#ifndef CERM_CERM_HPP
#define CERM_CERM_HPP

#include "cerm/core.hpp"
#include "cerm/ensemble.hpp"
#include "cerm/harness.hpp"
#include "cerm/hypotheses.hpp"
#include "cerm/losses.hpp"
#include "cerm/projections.hpp"
#include "cerm/riskbounds.hpp"
#include "cerm/synthdist.hpp"

#endif  // CERM_CERM_HPP
