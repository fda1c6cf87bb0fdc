#pragma once

#include "interpnn/core.hpp"
#include "interpnn/csv.hpp"
#include "interpnn/estimator.hpp"
#include "interpnn/experiments.hpp"
#include "interpnn/neighbors.hpp"
#include "interpnn/random.hpp"
#include "interpnn/simgen.hpp"
#include "interpnn/svg.hpp"
#include "interpnn/theory.hpp"
#include "interpnn/weighting.hpp"
