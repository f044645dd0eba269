/**
 * @file embml.hpp
 * @brief Umbrella header for the embml library.
 */
#pragma once

#include "embml/config.hpp"
#include "embml/csv.hpp"
#include "embml/cube.hpp"
#include "embml/detectors.hpp"
#include "embml/em.hpp"
#include "embml/errors.hpp"
#include "embml/harness.hpp"
#include "embml/linalg.hpp"
#include "embml/rng.hpp"
#include "embml/scenario.hpp"
