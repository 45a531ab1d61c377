#pragma once

#include "fdrcast/channel/gilbert_elliott.hpp"
#include "fdrcast/data/outcomes.hpp"
#include "fdrcast/data/windows.hpp"
#include "fdrcast/errors.hpp"
#include "fdrcast/eval/bench.hpp"
#include "fdrcast/eval/report.hpp"
#include "fdrcast/eval/stats.hpp"
#include "fdrcast/hypertune/search.hpp"
#include "fdrcast/models/models.hpp"
#include "fdrcast/models/presets.hpp"
#include "fdrcast/nn/checkpoint.hpp"
#include "fdrcast/nn/init.hpp"
#include "fdrcast/nn/layers.hpp"
#include "fdrcast/nn/loss.hpp"
#include "fdrcast/nn/sequential.hpp"
#include "fdrcast/training/train.hpp"
