#pragma once

#include "icic/errors.hpp"
#include "icic/special_math.hpp"
#include "icic/system_model.hpp"
#include "icic/rate_analysis.hpp"
#include "icic/optimization.hpp"
#include "icic/montecarlo.hpp"
#include "icic/harness/config.hpp"
#include "icic/harness/csv.hpp"
#include "icic/harness/experiments.hpp"
