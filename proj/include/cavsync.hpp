// Copyright 2026 The cavsync Authors
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

// Umbrella header.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"
#include "cavsync/model.hpp"
#include "cavsync/sylvester.hpp"
#include "cavsync/steady.hpp"
#include "cavsync/rate.hpp"
#include "cavsync/evolve.hpp"
#include "cavsync/observables.hpp"
#include "cavsync/semiclassical.hpp"
#include "cavsync/config.hpp"
#include "cavsync/sweep.hpp"
#include "cavsync/report.hpp"
