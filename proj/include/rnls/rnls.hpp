#pragma once

#include "rnls/dynamics.hpp"
#include "rnls/error.hpp"
#include "rnls/field.hpp"
#include "rnls/gradient_flow.hpp"
#include "rnls/grid.hpp"
#include "rnls/inequalities.hpp"
#include "rnls/model.hpp"
#include "rnls/params.hpp"
#include "rnls/radial.hpp"
#include "rnls/snapshot.hpp"
#include "rnls/spectral.hpp"
#include "rnls/threshold.hpp"
#include "rnls/vortex.hpp"
