#pragma once

#include "curvature.hpp"
#include "density.hpp"
#include "errors.hpp"
#include "fields.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "variational.hpp"
