#pragma once

#include "patchdyn/bifurcation.hpp"
#include "patchdyn/csv.hpp"
#include "patchdyn/dopri5.hpp"
#include "patchdyn/equilibria.hpp"
#include "patchdyn/errors.hpp"
#include "patchdyn/linalg.hpp"
#include "patchdyn/model.hpp"
#include "patchdyn/ode_sim.hpp"
#include "patchdyn/parallel.hpp"
#include "patchdyn/pde.hpp"
#include "patchdyn/quadratic.hpp"
#include "patchdyn/roots.hpp"
#include "patchdyn/scenario.hpp"
