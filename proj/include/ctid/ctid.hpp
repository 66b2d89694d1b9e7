#pragma once

// Additive continuous-time system identification: transfer-function algebra,
// exact ZOH filtering, instrumental-variable estimators, block-coordinate
// descent, and the Monte Carlo benchmark harness.

#include "ctid/additive_model.hpp"
#include "ctid/bcd.hpp"
#include "ctid/csv.hpp"
#include "ctid/discretize.hpp"
#include "ctid/errors.hpp"
#include "ctid/estimators.hpp"
#include "ctid/harness.hpp"
#include "ctid/model_io.hpp"
#include "ctid/polynomial.hpp"
#include "ctid/transfer_function.hpp"
