// Copyright 2026 The confscout Authors.
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

#include "confscout/bipartite.hpp"
#include "confscout/cluster.hpp"
#include "confscout/config_space.hpp"
#include "confscout/error.hpp"
#include "confscout/eval.hpp"
#include "confscout/gnn.hpp"
#include "confscout/gnn_io.hpp"
#include "confscout/gnn_train.hpp"
#include "confscout/harness.hpp"
#include "confscout/milp.hpp"
#include "confscout/mps.hpp"
#include "confscout/perf_db.hpp"
#include "confscout/pipeline.hpp"
#include "confscout/selector.hpp"
#include "confscout/synthetic.hpp"
