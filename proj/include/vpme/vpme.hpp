#pragma once

// Umbrella header for the full toolkit.

#include "vpme/config.hpp"
#include "vpme/csv.hpp"
#include "vpme/diagnostics.hpp"
#include "vpme/errors.hpp"
#include "vpme/experiments.hpp"
#include "vpme/fft.hpp"
#include "vpme/field_solver.hpp"
#include "vpme/grid.hpp"
#include "vpme/lap.hpp"
#include "vpme/parallel.hpp"
#include "vpme/particles.hpp"
#include "vpme/pic.hpp"
#include "vpme/simulation.hpp"
#include "vpme/snapshot.hpp"
#include "vpme/spectral.hpp"
#include "vpme/transport.hpp"
