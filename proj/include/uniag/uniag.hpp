#pragma once

#include "uniag/algorithms.hpp"
#include "uniag/experiment.hpp"
#include "uniag/oracle.hpp"
#include "uniag/problems.hpp"
#include "uniag/prox.hpp"
#include "uniag/rng.hpp"
#include "uniag/schedules.hpp"
#include "uniag/trace_io.hpp"
#include "uniag/verify.hpp"
#include "uniag/version.hpp"
