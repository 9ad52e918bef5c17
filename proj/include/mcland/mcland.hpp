// Copyright 2026 The mcland Authors. All Rights Reserved.
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

#ifndef MCLAND_MCLAND_HPP_
#define MCLAND_MCLAND_HPP_

#include "mcland/certify.hpp"
#include "mcland/concentration.hpp"
#include "mcland/instance.hpp"
#include "mcland/linalg.hpp"
#include "mcland/objective.hpp"
#include "mcland/rng.hpp"
#include "mcland/solvers.hpp"
#include "mcland/spectrum.hpp"

#endif  // MCLAND_MCLAND_HPP_
