#pragma once

// Umbrella header: conformal prediction over graph-valued outputs with
// optimal-transport nonconformity scores.

#include "graphconf/conformal.hpp"
#include "graphconf/errors.hpp"
#include "graphconf/exact_ot.hpp"
#include "graphconf/fgw.hpp"
#include "graphconf/graph.hpp"
#include "graphconf/io.hpp"
#include "graphconf/metrics.hpp"
#include "graphconf/pipeline.hpp"
#include "graphconf/rng.hpp"
#include "graphconf/scqr.hpp"
#include "graphconf/synth.hpp"
