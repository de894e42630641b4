#pragma once

#include "rcc/errors.hpp"
#include "rcc/rng.hpp"
#include "rcc/core_model.hpp"
#include "rcc/allocation.hpp"
#include "rcc/losses.hpp"
#include "rcc/batch_solver.hpp"
#include "rcc/online.hpp"
#include "rcc/analysis.hpp"
