#pragma once

#include "gridsched/agent/adam.hpp"
#include "gridsched/agent/checkpoint.hpp"
#include "gridsched/agent/dqn.hpp"
#include "gridsched/agent/network.hpp"
#include "gridsched/agent/replay.hpp"
#include "gridsched/core/allocation.hpp"
#include "gridsched/core/csv.hpp"
#include "gridsched/core/dynamics.hpp"
#include "gridsched/core/types.hpp"
#include "gridsched/degradation/aging.hpp"
#include "gridsched/degradation/chemistry.hpp"
#include "gridsched/degradation/rainflow.hpp"
#include "gridsched/env/environment.hpp"
#include "gridsched/env/reward.hpp"
#include "gridsched/env/scenario.hpp"
#include "gridsched/env/state.hpp"
#include "gridsched/forecast/edrvfl.hpp"
#include "gridsched/forecast/forecaster.hpp"
#include "gridsched/forecast/fusion.hpp"
#include "gridsched/forecast/metrics.hpp"
#include "gridsched/harness/config.hpp"
#include "gridsched/harness/dp_oracle.hpp"
#include "gridsched/harness/experiment.hpp"
#include "gridsched/harness/export.hpp"
#include "gridsched/harness/parallel.hpp"
#include "gridsched/harness/rollout.hpp"
#include "gridsched/harness/scenario_gen.hpp"
#include "gridsched/error.hpp"
