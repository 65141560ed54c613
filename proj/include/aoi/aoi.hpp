// Umbrella header.
#pragma once

#include <aoi/analytic.hpp>
#include <aoi/checks.hpp>
#include <aoi/errors.hpp>
#include <aoi/experiment.hpp>
#include <aoi/jet.hpp>
#include <aoi/semi_markov.hpp>
#include <aoi/service.hpp>
#include <aoi/simulator.hpp>
#include <aoi/statistics.hpp>
