#pragma once

#include "tarch/exceptions.hpp"
#include "tarch/rng.hpp"
#include "tarch/stats.hpp"
#include "tarch/parallel.hpp"
#include "tarch/quadrature.hpp"
#include "tarch/error_dist.hpp"
#include "tarch/sphere_grid.hpp"
#include "tarch/model.hpp"
#include "tarch/collapsed.hpp"
#include "tarch/moments.hpp"
#include "tarch/matrixprod.hpp"
#include "tarch/fullchain.hpp"
