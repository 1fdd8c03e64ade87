#pragma once

// Umbrella header: DR-expectations, closed forms, asymptotics, the
// nonparametric machinery and the Monte Carlo studies.

#include "drexp/asymptotics.hpp"
#include "drexp/closed_forms.hpp"
#include "drexp/engine.hpp"
#include "drexp/error.hpp"
#include "drexp/experiments.hpp"
#include "drexp/family.hpp"
#include "drexp/model.hpp"
#include "drexp/nonparametric.hpp"
#include "drexp/outcome.hpp"
#include "drexp/penalty.hpp"
#include "drexp/random.hpp"
#include "drexp/sample.hpp"
