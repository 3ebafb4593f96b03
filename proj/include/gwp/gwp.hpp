#pragma once

#include "gwp/baselines.hpp"
#include "gwp/errors.hpp"
#include "gwp/gwd.hpp"
#include "gwp/marked.hpp"
#include "gwp/process.hpp"
#include "gwp/rng.hpp"
#include "gwp/special_functions.hpp"
