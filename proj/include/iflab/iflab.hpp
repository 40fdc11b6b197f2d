#pragma once

// Umbrella header.

#include "iflab/archetype.hpp"
#include "iflab/config.hpp"
#include "iflab/convergence.hpp"
#include "iflab/gaussian.hpp"
#include "iflab/grid.hpp"
#include "iflab/heightmap.hpp"
#include "iflab/io.hpp"
#include "iflab/parallel.hpp"
#include "iflab/perturbed.hpp"
#include "iflab/potential.hpp"
#include "iflab/rng.hpp"
#include "iflab/scenarios.hpp"
#include "iflab/sde.hpp"
#include "iflab/stats.hpp"
