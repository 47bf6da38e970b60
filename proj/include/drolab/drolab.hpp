#pragma once

#include "drolab/core.hpp"
#include "drolab/cost_model.hpp"
#include "drolab/dataset.hpp"
#include "drolab/dro.hpp"
#include "drolab/optimize.hpp"
#include "drolab/scenarios.hpp"
#include "drolab/verify.hpp"
