// Copyright 2026 the covsim authors
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

// Convenience umbrella: pulls in every covsim module.

#pragma once

#include "covsim/collab.hpp"
#include "covsim/geo.hpp"
#include "covsim/harness.hpp"
#include "covsim/lidar.hpp"
#include "covsim/log.hpp"
#include "covsim/perception.hpp"
#include "covsim/rng.hpp"
#include "covsim/scenario.hpp"
#include "covsim/tracking.hpp"
#include "covsim/v2x.hpp"
#include "covsim/world.hpp"
