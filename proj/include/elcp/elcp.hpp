#pragma once

/// Umbrella header for the library (the CLI layer lives under elcp/cli/).

#include "elcp/calibration.hpp"
#include "elcp/el_solver.hpp"
#include "elcp/errors.hpp"
#include "elcp/estimating.hpp"
#include "elcp/parallel.hpp"
#include "elcp/random.hpp"
#include "elcp/scan.hpp"
#include "elcp/segmentation.hpp"
#include "elcp/simulate.hpp"
#include "elcp/study_config.hpp"
#include "elcp/time_series.hpp"
