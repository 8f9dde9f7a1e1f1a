#pragma once

#include "fsac/errors.hpp"
#include "fsac/estimation.hpp"
#include "fsac/fpls.hpp"
#include "fsac/functional_data.hpp"
#include "fsac/grid.hpp"
#include "fsac/io.hpp"
#include "fsac/moran.hpp"
#include "fsac/normal.hpp"
#include "fsac/random.hpp"
#include "fsac/simulation.hpp"
#include "fsac/spatial_weights.hpp"
