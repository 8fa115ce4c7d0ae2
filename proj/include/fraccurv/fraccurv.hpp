#pragma once

#include "angle.hpp"
#include "arcset.hpp"
#include "config.hpp"
#include "curvature.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "geometry.hpp"
#include "ifs.hpp"
#include "oracle_grid.hpp"
#include "parallel.hpp"
#include "polygon.hpp"
#include "random.hpp"
#include "region.hpp"
#include "report.hpp"
#include "sampler.hpp"
#include "vec2.hpp"
