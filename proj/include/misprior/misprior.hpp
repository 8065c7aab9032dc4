#pragma once

#include "misprior/core.hpp"
#include "misprior/model.hpp"
#include "misprior/priors.hpp"
#include "misprior/bounds.hpp"
#include "misprior/posteriors.hpp"
#include "misprior/belief.hpp"
#include "misprior/policies.hpp"
#include "misprior/envs.hpp"
#include "misprior/estimators.hpp"
#include "misprior/presets.hpp"
#include "misprior/metalearn.hpp"
#include "misprior/io.hpp"
