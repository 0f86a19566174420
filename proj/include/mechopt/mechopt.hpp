#pragma once

#include "mechopt/errors.hpp"
#include "mechopt/numerics.hpp"
#include "mechopt/boundary_curve.hpp"
#include "mechopt/distributions.hpp"
#include "mechopt/measures.hpp"
#include "mechopt/grid.hpp"
#include "mechopt/dominance.hpp"
#include "mechopt/mechanism.hpp"
#include "mechopt/bundling.hpp"
#include "mechopt/exponential.hpp"
#include "mechopt/canonical.hpp"
#include "mechopt/lp.hpp"
#include "mechopt/oracle.hpp"
#include "mechopt/pipeline.hpp"
