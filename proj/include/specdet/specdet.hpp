#pragma once

#include "specdet/calibration.hpp"
#include "specdet/config.hpp"
#include "specdet/detection.hpp"
#include "specdet/edge_list.hpp"
#include "specdet/generators.hpp"
#include "specdet/graph.hpp"
#include "specdet/harness.hpp"
#include "specdet/lanczos.hpp"
#include "specdet/metrics.hpp"
#include "specdet/operators.hpp"
#include "specdet/oracle.hpp"
#include "specdet/parallel.hpp"
#include "specdet/rng.hpp"
#include "specdet/spca.hpp"
#include "specdet/verify.hpp"
