// Copyright 2026 The stresslab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything except the gateway (which needs Boost); include
// stresslab/gateway/serve.hpp for that.

#pragma once

#include "stresslab/analysis.hpp"
#include "stresslab/clock_offset.hpp"
#include "stresslab/ecg.hpp"
#include "stresslab/error.hpp"
#include "stresslab/experiment.hpp"
#include "stresslab/game/bomb.hpp"
#include "stresslab/game/manual.hpp"
#include "stresslab/game/modules.hpp"
#include "stresslab/game/oracle.hpp"
#include "stresslab/game/serialize.hpp"
#include "stresslab/keywords.hpp"
#include "stresslab/markers.hpp"
#include "stresslab/plots.hpp"
#include "stresslab/recording_io.hpp"
#include "stresslab/rng.hpp"
#include "stresslab/session.hpp"
#include "stresslab/stats.hpp"
#include "stresslab/stream_sync.hpp"
