#pragma once

#include "rebalance/analysis.hpp"
#include "rebalance/coco.hpp"
#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/frequency.hpp"
#include "rebalance/parallel.hpp"
#include "rebalance/repeat_factor.hpp"
#include "rebalance/report_json.hpp"
#include "rebalance/rng.hpp"
#include "rebalance/sampling.hpp"
#include "rebalance/text.hpp"
#include "rebalance/yolo.hpp"
