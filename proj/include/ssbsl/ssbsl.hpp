#pragma once

#include "ssbsl/bayes_core.hpp"
#include "ssbsl/classifier.hpp"
#include "ssbsl/csv_io.hpp"
#include "ssbsl/dataset.hpp"
#include "ssbsl/drift_sim.hpp"
#include "ssbsl/error.hpp"
#include "ssbsl/features.hpp"
#include "ssbsl/harness.hpp"
#include "ssbsl/state_json.hpp"
