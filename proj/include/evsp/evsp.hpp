#pragma once

#include "coherence.hpp"
#include "diagnostics.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "reml.hpp"
#include "rng.hpp"
#include "simulation.hpp"
#include "spectral.hpp"
#include "temporal.hpp"
#include "trend.hpp"
